#include "qpk/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "qpk/rng.hpp"

namespace qpk::protocol {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kPi = std::numbers::pi;
// Floor on sin(delta) in the stderr propagation; keeps the estimate finite
// at the flat ends of arccos while still signalling low confidence.
constexpr double kMinSlope = 1e-3;

// Seed stream tags.
constexpr std::uint64_t kStreamKey = 0xB0B;
constexpr std::uint64_t kStreamPhase = 0xA11CE;
constexpr std::uint64_t kStreamShots = 0x5A0;

void check_distinct_non_opposite(double a, double b, const char* what) {
  const double gap = wrap_phase(a - b);
  const double dist_same = std::min(gap, 2.0 * kPi - gap);
  const double dist_opposite = std::abs(gap - kPi);
  if (dist_same < 1e-9 || dist_opposite < 1e-9) {
    throw std::invalid_argument(std::string(what) +
                                " must be distinct and non-opposite (mod 2 pi)");
  }
}

// Chooses the +/- branch of the decoded delta that lands inside the declared
// window; NaN when neither or both do.
double resolve_in_window(double delta, double phi_a, double theta_b, double lo, double hi) {
  double chosen = kNaN;
  for (double signed_delta : {delta, -delta}) {
    const double wrapped = wrap_phase(signed_delta - phi_a - theta_b);
    for (double shift : {0.0, -2.0 * kPi}) {
      const double theta = wrapped + shift;
      if (theta > lo && theta < hi) {
        if (!std::isnan(chosen) && std::abs(theta - chosen) > 1e-12) {
          return kNaN;
        }
        chosen = theta;
      }
    }
  }
  return chosen;
}

struct RecordEstimate {
  DeltaEstimate delta;
  double theta_hat = kNaN;  // analog branch-resolved estimate
  double theta_se = 0.0;
  int bit = -1;
  double delta_se = 0.0;
  bool usable = false;  // contributes to the symbol estimate
};

RecordEstimate estimate_record(const SymbolRecord& rec, const Transcript& t,
                               const PrivateKey& key) {
  RecordEstimate est;
  est.delta = estimate_delta(rec.u, rec.v, t.params.r);
  est.delta_se = est.delta.stderr_;
  const auto& d = t.declared;
  if (d.mode == MessagePlain::Mode::Digital) {
    const double d0 = fold_angle(rec.phi_a + d.theta0 + key.theta_b);
    const double d1 = fold_angle(rec.phi_a + d.theta1 + key.theta_b);
    est.bit = std::abs(est.delta.delta - d1) < std::abs(est.delta.delta - d0) ? 1 : 0;
    est.theta_hat = est.bit ? d.theta1 : d.theta0;
    est.theta_se = est.delta_se;
    est.usable = true;
    return est;
  }
  // Analog: enforce the invertibility band on the decoded delta, then
  // resolve the sign ambiguity against the declared window.
  if (est.delta.boundary || est.delta.delta < kDeltaWindowLo ||
      est.delta.delta > kPi - kDeltaWindowLo) {
    return est;
  }
  const double theta =
      resolve_in_window(est.delta.delta, rec.phi_a, key.theta_b, d.window_lo, d.window_hi);
  if (std::isnan(theta)) {
    return est;
  }
  est.theta_hat = theta;
  est.theta_se = est.delta_se;
  est.usable = true;
  return est;
}

}  // namespace

void PublicParams::validate() const {
  if (!std::isfinite(r) || std::abs(r) > kMaxSqueezing) {
    throw std::invalid_argument("squeezing parameter out of guard range");
  }
  if (shots_per_symbol < 100) {
    throw std::invalid_argument("shots_per_symbol must be at least 100");
  }
  if (redundancy < 1) {
    throw std::invalid_argument("redundancy must be at least 1");
  }
  if (alice_phases.empty()) {
    throw std::invalid_argument("need at least one Alice phase");
  }
  for (size_t i = 0; i < alice_phases.size(); ++i) {
    for (size_t j = i + 1; j < alice_phases.size(); ++j) {
      check_distinct_non_opposite(alice_phases[i], alice_phases[j], "Alice phases");
    }
  }
}

PublicParams PublicParams::defaults(double r) {
  PublicParams p;
  p.r = r;
  p.alice_phases = {0.0, kPi / 3.0};
  p.shots_per_symbol = kDefaultShotsPerSymbol;
  p.redundancy = kDefaultRedundancy;
  p.validate();
  return p;
}

int MessagePlain::length() const {
  return mode == Mode::Analog ? static_cast<int>(analog.size())
                              : static_cast<int>(bits.size());
}

void MessagePlain::validate() const {
  if (length() == 0) {
    throw std::invalid_argument("empty message");
  }
  if (mode == Mode::Analog) {
    if (!(window_lo < window_hi)) {
      throw std::invalid_argument("message window must be a nonempty interval");
    }
    for (double v : analog) {
      if (!(v > window_lo && v < window_hi)) {
        throw std::invalid_argument("analog value outside the declared window");
      }
    }
  } else {
    for (int b : bits) {
      if (b != 0 && b != 1) {
        throw std::invalid_argument("bits must be 0 or 1");
      }
    }
    check_distinct_non_opposite(theta0, theta1, "digital phase values");
  }
}

MessagePlain MessagePlain::make_analog(std::vector<double> values, double lo, double hi) {
  MessagePlain m;
  m.mode = Mode::Analog;
  m.analog = std::move(values);
  m.window_lo = lo;
  m.window_hi = hi;
  m.validate();
  return m;
}

MessagePlain MessagePlain::make_digital(std::vector<int> bits_in, double theta0_in,
                                        double theta1_in) {
  MessagePlain m;
  m.mode = Mode::Digital;
  m.bits = std::move(bits_in);
  m.theta0 = theta0_in;
  m.theta1 = theta1_in;
  m.validate();
  return m;
}

MessageDeclaration MessageDeclaration::from(const MessagePlain& plain) {
  MessageDeclaration d;
  d.mode = plain.mode;
  d.length = plain.length();
  d.window_lo = plain.window_lo;
  d.window_hi = plain.window_hi;
  d.theta0 = plain.theta0;
  d.theta1 = plain.theta1;
  return d;
}

DeltaEstimate estimate_delta(std::span<const double> u, std::span<const double> v, double r) {
  if (!(r > 0.0)) {
    throw std::domain_error("delta estimation needs r > 0");
  }
  if (u.size() != v.size() || u.size() < 100) {
    throw std::invalid_argument("need at least 100 paired samples");
  }
  std::vector<double> diff(u.size());
  for (size_t i = 0; i < u.size(); ++i) {
    diff[i] = u[i] - v[i];
  }
  DeltaEstimate est;
  est.v_hat = stats::sample_variance(diff);
  const double c = std::cosh(2.0 * r);
  const double s = std::sinh(2.0 * r);
  const double raw_cos = (c - 0.5 * est.v_hat) / s;
  est.boundary = raw_cos <= -1.0 || raw_cos >= 1.0;
  est.delta = std::acos(std::clamp(raw_cos, -1.0, 1.0));
  const double sd_v = est.v_hat * std::sqrt(2.0 / (static_cast<double>(u.size()) - 1.0));
  est.stderr_ = sd_v / (2.0 * s * std::max(std::sin(est.delta), kMinSlope));
  return est;
}

std::pair<PublicParams, PrivateKey> keygen(double r, std::uint64_t theta_seed) {
  PublicParams params = PublicParams::defaults(r);
  NormalSampler sampler(mix_seed(theta_seed, kStreamKey));
  PrivateKey key;
  key.theta_b = 2.0 * kPi * sampler.uniform();
  return {params, key};
}

std::vector<double> encode_message(const MessagePlain& plain, const PublicParams& params) {
  plain.validate();
  params.validate();
  std::vector<double> phases;
  phases.reserve(static_cast<size_t>(plain.length()) * params.redundancy);
  for (int s = 0; s < plain.length(); ++s) {
    const double theta =
        plain.mode == MessagePlain::Mode::Analog
            ? plain.analog[s]
            : (plain.bits[s] ? plain.theta1 : plain.theta0);
    for (int rep = 0; rep < params.redundancy; ++rep) {
      phases.push_back(theta);
    }
  }
  return phases;
}

Transcript run_session(const PublicParams& params, const PrivateKey& key,
                       const MessagePlain& plain, const attacks::AttackModel& attack,
                       std::uint64_t seed, attacks::EveRecord* eve_out) {
  const std::vector<double> phases = encode_message(plain, params);

  Transcript t;
  t.params = params;
  t.declared = MessageDeclaration::from(plain);
  t.seed = seed;
  t.attack_label = attack.label();

  if (eve_out) {
    *eve_out = attacks::EveRecord{};
  }

  const GaussianState source = two_mode_squeezed_vacuum(params.r);
  const attacks::AppliedAttack routed = attacks::apply_attack(source, attack, params.r, seed);
  if (eve_out) {
    eve_out->eve_state_params = routed.eve_state_params;
  }

  const int n_records = static_cast<int>(phases.size());
  t.records.reserve(n_records);
  for (int i = 0; i < n_records; ++i) {
    SymbolRecord rec;
    rec.symbol = i / params.redundancy;
    rec.repetition = i % params.redundancy;

    NormalSampler chooser(mix_seed(seed, kStreamPhase + i));
    const size_t pick = std::min(
        params.alice_phases.size() - 1,
        static_cast<size_t>(chooser.uniform() * static_cast<double>(params.alice_phases.size())));
    rec.phi_a = params.alice_phases[pick];

    // Encryption happens at Alice, after Eve's intervention in transit.
    const GaussianState encrypted = phase_shift(routed.state, routed.alice_mode, phases[i]);

    std::vector<QuadratureSpec> specs = {QuadratureSpec(routed.alice_mode, rec.phi_a),
                                         QuadratureSpec(routed.bob_mode, key.theta_b)};
    if (routed.eve_probe) {
      specs.push_back(*routed.eve_probe);
    }
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
    measured_distribution(encrypted, specs, &mean, &cov);
    const Eigen::MatrixXd draws =
        sample_multivariate(mean, cov, params.shots_per_symbol, mix_seed(seed, kStreamShots + i));

    rec.u.resize(params.shots_per_symbol);
    rec.v.resize(params.shots_per_symbol);
    std::vector<double> eve_samples;
    if (routed.eve_probe) {
      eve_samples.resize(params.shots_per_symbol);
    }
    for (int k = 0; k < params.shots_per_symbol; ++k) {
      rec.u[k] = draws(k, 0);
      rec.v[k] = draws(k, 1);
      if (routed.eve_probe) {
        eve_samples[k] = draws(k, 2);
      }
    }
    if (eve_out) {
      eve_out->samples_per_record.push_back(std::move(eve_samples));
      eve_out->known_phi_a.push_back(rec.phi_a);
      eve_out->known_u.push_back(rec.u);
    }
    t.records.push_back(std::move(rec));
  }
  return t;
}

DecryptResult decrypt(const Transcript& t, const PrivateKey& key, const PublicParams& params) {
  params.validate();
  const auto& d = t.declared;
  DecryptResult out;
  out.symbols.resize(d.length);

  std::vector<std::vector<RecordEstimate>> per_symbol(d.length);
  for (const auto& rec : t.records) {
    if (rec.symbol < 0 || rec.symbol >= d.length) {
      throw std::invalid_argument("transcript symbol index out of range");
    }
    per_symbol[rec.symbol].push_back(estimate_record(rec, t, key));
  }

  for (int s = 0; s < d.length; ++s) {
    SymbolDecode& sym = out.symbols[s];
    sym.theta_hat = kNaN;
    double weight_sum = 0.0;
    double weighted = 0.0;
    int ones = 0;
    for (const auto& est : per_symbol[s]) {
      sym.boundary = sym.boundary || est.delta.boundary;
      if (!est.usable) {
        ++sym.rejected;
        continue;
      }
      ++sym.used;
      if (d.mode == MessagePlain::Mode::Digital) {
        ones += est.bit;
      } else {
        const double w = 1.0 / (est.theta_se * est.theta_se);
        weighted += w * est.theta_hat;
        weight_sum += w;
      }
    }
    if (d.mode == MessagePlain::Mode::Digital) {
      if (sym.used > 0) {
        sym.bit = 2 * ones >= sym.used ? 1 : 0;
        sym.theta_hat = sym.bit ? d.theta1 : d.theta0;
        // Repetition votes must agree.
        sym.consistent = ones == 0 || ones == sym.used;
      } else {
        sym.consistent = false;
      }
    } else if (weight_sum > 0.0) {
      sym.theta_hat = weighted / weight_sum;
      sym.stderr_ = std::sqrt(1.0 / weight_sum);
      // Repetitions must agree within 4x their combined stderr.
      for (size_t i = 0; i < per_symbol[s].size(); ++i) {
        for (size_t j = i + 1; j < per_symbol[s].size(); ++j) {
          const auto& a = per_symbol[s][i];
          const auto& b = per_symbol[s][j];
          if (!a.usable || !b.usable) continue;
          const double gap = std::abs(a.theta_hat - b.theta_hat);
          if (gap > 4.0 * std::hypot(a.theta_se, b.theta_se)) {
            sym.consistent = false;
          }
        }
      }
    } else {
      sym.consistent = false;
    }
    // A repetition that failed to resolve is itself an integrity signal: with
    // the right key and a clean channel, window rejections do not happen.
    if (!sym.consistent || sym.used == 0 || sym.rejected > 0) {
      out.integrity_ok = false;
    }
  }

  out.estimate.mode = d.mode;
  out.estimate.window_lo = d.window_lo;
  out.estimate.window_hi = d.window_hi;
  out.estimate.theta0 = d.theta0;
  out.estimate.theta1 = d.theta1;
  for (const auto& sym : out.symbols) {
    if (d.mode == MessagePlain::Mode::Digital) {
      out.estimate.bits.push_back(sym.bit);
    } else {
      out.estimate.analog.push_back(sym.theta_hat);
    }
  }
  return out;
}

DetectionReport detect_eavesdropping(const Transcript& t, const PublicParams& params,
                                     const PrivateKey& key, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("alpha must be in (0, 1)");
  }
  DetectionReport report;
  report.alpha = alpha;
  const double c2r = std::cosh(2.0 * params.r);
  const double s2r = std::sinh(2.0 * params.r);
  const int n_tests = 4;
  const double level = alpha / n_tests;

  // Per-record estimates reused by tests 3 and 4.
  std::vector<std::vector<RecordEstimate>> per_symbol(t.declared.length);
  std::vector<std::vector<const SymbolRecord*>> recs_per_symbol(t.declared.length);
  for (const auto& rec : t.records) {
    per_symbol[rec.symbol].push_back(estimate_record(rec, t, key));
    recs_per_symbol[rec.symbol].push_back(&rec);
  }

  // Test 1: mean(u - v) = 0, Stouffer-combined z across records.
  {
    std::vector<double> zs;
    for (const auto& rec : t.records) {
      std::vector<double> diff(rec.u.size());
      for (size_t k = 0; k < rec.u.size(); ++k) {
        diff[k] = rec.u[k] - rec.v[k];
      }
      const double v = stats::sample_variance(diff);
      zs.push_back(stats::sample_mean(diff) /
                   std::sqrt(v / static_cast<double>(diff.size())));
    }
    stats::TestResult res;
    res.statistic = zs.empty() ? 0.0 : std::accumulate(zs.begin(), zs.end(), 0.0) /
                                           std::sqrt(static_cast<double>(zs.size()));
    res.p_value = stats::stouffer_p(zs);
    res.n = static_cast<int>(t.records.size());
    res.null_description = "mean(u - v) = 0";
    res.alpha = level;
    res.reject = res.p_value < level;
    report.tests.push_back(std::move(res));
  }

  // Test 2: Var(u) = cosh(2r) on the pooled public samples. The marginal of
  // the public beam carries no message dependence, so pooling is exact.
  {
    std::vector<double> pool;
    for (const auto& rec : t.records) {
      pool.insert(pool.end(), rec.u.begin(), rec.u.end());
    }
    stats::TestResult res = stats::variance_test(pool, c2r, level);
    res.null_description = "Var(u) = cosh(2r)";
    report.tests.push_back(std::move(res));
  }

  // Test 3: first repetition's Var(u - v) against the model at the message
  // decoded from the remaining repetitions (independent of the tested
  // record, so the z-score is calibrated).
  {
    std::vector<double> zs;
    for (int s = 0; s < t.declared.length; ++s) {
      const auto& ests = per_symbol[s];
      if (ests.size() < 2) {
        continue;
      }
      // Jackknife consensus from records 1..k-1.
      double weighted = 0.0;
      double weight_sum = 0.0;
      int ones = 0;
      int used = 0;
      for (size_t i = 1; i < ests.size(); ++i) {
        if (!ests[i].usable) continue;
        ++used;
        ones += ests[i].bit == 1 ? 1 : 0;
        if (t.declared.mode == MessagePlain::Mode::Analog) {
          const double w = 1.0 / (ests[i].theta_se * ests[i].theta_se);
          weighted += w * ests[i].theta_hat;
          weight_sum += w;
        }
      }
      if (used == 0 || !ests[0].usable) {
        continue;
      }
      double theta_model = 0.0;
      double theta_model_se = 0.0;
      if (t.declared.mode == MessagePlain::Mode::Analog) {
        theta_model = weighted / weight_sum;
        theta_model_se = std::sqrt(1.0 / weight_sum);
      } else {
        theta_model = 2 * ones >= used ? t.declared.theta1 : t.declared.theta0;
      }
      const double delta_model =
          fold_angle(recs_per_symbol[s][0]->phi_a + theta_model + key.theta_b);
      const double v_model = z_minus_variance(params.r, delta_model);
      const double n0 = static_cast<double>(recs_per_symbol[s][0]->u.size());
      const double v_hat = ests[0].delta.v_hat;
      const double var_of_vhat = 2.0 * v_hat * v_hat / (n0 - 1.0);
      const double slope = 2.0 * s2r * std::sin(delta_model);
      const double se =
          std::sqrt(var_of_vhat + slope * slope * theta_model_se * theta_model_se);
      zs.push_back((v_hat - v_model) / se);
    }
    stats::TestResult res;
    res.statistic = zs.empty() ? 0.0 : std::accumulate(zs.begin(), zs.end(), 0.0) /
                                           std::sqrt(static_cast<double>(zs.size()));
    res.p_value = stats::stouffer_p(zs);
    res.n = static_cast<int>(zs.size());
    res.null_description = "Var(u - v) matches the model at the decoded message";
    res.alpha = level;
    res.reject = res.p_value < level;
    report.tests.push_back(std::move(res));
  }

  // Test 4: cross-repetition consistency. Analog symbols compare the
  // branch-resolved estimates; digital symbols compare raw delta estimates
  // within records sharing the same announced phase.
  {
    double chi2 = 0.0;
    int dof = 0;
    for (int s = 0; s < t.declared.length; ++s) {
      const auto& ests = per_symbol[s];
      std::vector<std::pair<double, double>> pts;  // (value, se)
      if (t.declared.mode == MessagePlain::Mode::Analog) {
        for (const auto& est : ests) {
          if (est.usable) {
            pts.emplace_back(est.theta_hat, est.theta_se);
          }
        }
        chi2 += [&pts, &dof]() {
          if (pts.size() < 2) return 0.0;
          double w_sum = 0.0, mean = 0.0;
          for (auto& [x, se] : pts) {
            const double w = 1.0 / (se * se);
            mean += w * x;
            w_sum += w;
          }
          mean /= w_sum;
          double acc = 0.0;
          for (auto& [x, se] : pts) {
            acc += (x - mean) * (x - mean) / (se * se);
          }
          dof += static_cast<int>(pts.size()) - 1;
          return acc;
        }();
      } else {
        // Group by announced phase.
        std::vector<double> phases_seen;
        for (size_t i = 0; i < ests.size(); ++i) {
          const double phi = recs_per_symbol[s][i]->phi_a;
          if (std::find(phases_seen.begin(), phases_seen.end(), phi) != phases_seen.end()) {
            continue;
          }
          phases_seen.push_back(phi);
          double w_sum = 0.0, mean = 0.0;
          std::vector<std::pair<double, double>> group;
          for (size_t j = 0; j < ests.size(); ++j) {
            if (recs_per_symbol[s][j]->phi_a != phi || ests[j].delta.boundary) continue;
            group.emplace_back(ests[j].delta.delta, ests[j].delta_se);
          }
          if (group.size() < 2) continue;
          for (auto& [x, se] : group) {
            const double w = 1.0 / (se * se);
            mean += w * x;
            w_sum += w;
          }
          mean /= w_sum;
          for (auto& [x, se] : group) {
            chi2 += (x - mean) * (x - mean) / (se * se);
          }
          dof += static_cast<int>(group.size()) - 1;
        }
      }
    }
    stats::TestResult res;
    res.statistic = chi2;
    res.p_value = dof > 0 ? stats::gamma_q(0.5 * dof, 0.5 * chi2) : 1.0;
    res.n = dof;
    res.null_description = "repetitions are mutually consistent";
    res.alpha = level;
    res.reject = res.p_value < level;
    report.tests.push_back(std::move(res));
  }

  report.alarm = false;
  for (const auto& test : report.tests) {
    report.alarm = report.alarm || test.p_value < level;
  }
  return report;
}

attacks::Announcements public_view(const Transcript& t) {
  attacks::Announcements ann;
  ann.r = t.params.r;
  ann.digital = t.declared.mode == MessagePlain::Mode::Digital;
  ann.window_lo = t.declared.window_lo;
  ann.window_hi = t.declared.window_hi;
  ann.theta0 = t.declared.theta0;
  ann.theta1 = t.declared.theta1;
  ann.message_length = t.declared.length;
  ann.redundancy = t.params.redundancy;
  for (const auto& rec : t.records) {
    ann.symbol_of_record.push_back(rec.symbol);
    ann.phi_a.push_back(rec.phi_a);
    ann.u.push_back(rec.u);
  }
  return ann;
}

}  // namespace qpk::protocol
