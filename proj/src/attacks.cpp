#include "qpk/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "qpk/stats.hpp"

namespace qpk::attacks {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::map<std::string, double> parse_kv(const std::string& text) {
  std::map<std::string, double> kv;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("attack parameter must be key=value: " + item);
    }
    const std::string key = item.substr(0, eq);
    size_t used = 0;
    const std::string value_text = item.substr(eq + 1);
    const double value = std::stod(value_text, &used);
    if (used != value_text.size()) {
      throw std::invalid_argument("bad numeric value in attack spec: " + item);
    }
    kv[key] = value;
  }
  return kv;
}

double take(std::map<std::string, double>& kv, const std::string& key, double fallback) {
  const auto it = kv.find(key);
  if (it == kv.end()) {
    return fallback;
  }
  const double v = it->second;
  kv.erase(it);
  return v;
}

void expect_empty(const std::map<std::string, double>& kv, const std::string& name) {
  if (!kv.empty()) {
    throw std::invalid_argument("unknown parameter '" + kv.begin()->first + "' for attack " +
                                name);
  }
}

// Best analog decode from a paired sample (mirrors Bob's variance inversion;
// kept local so the attacks module stays below the protocol layer).
double invert_delta(double v_hat, double r) {
  const double c = std::cosh(2.0 * r);
  const double s = std::sinh(2.0 * r);
  return std::acos(std::clamp((c - 0.5 * v_hat) / s, -1.0, 1.0));
}

double paired_diff_variance(const std::vector<double>& u, const std::vector<double>& e) {
  const size_t n = std::min(u.size(), e.size());
  std::vector<double> diff(n);
  for (size_t i = 0; i < n; ++i) {
    diff[i] = u[i] - e[i];
  }
  return stats::sample_variance(diff);
}

// Resolves +/- delta against the declared window; NaN when ambiguous.
double resolve_in_window(double delta, double phi_a, double key, double lo, double hi) {
  const auto in_window = [lo, hi](double theta) { return theta > lo && theta < hi; };
  double chosen = kNaN;
  for (double signed_delta : {delta, -delta}) {
    double cand = wrap_phase(signed_delta - phi_a - key);
    // The window may sit anywhere on the circle; compare against both the
    // wrapped value and its 2 pi shift.
    for (double shift : {0.0, -2.0 * std::numbers::pi}) {
      const double theta = cand + shift;
      if (in_window(theta)) {
        if (!std::isnan(chosen) && std::abs(theta - chosen) > 1e-12) {
          return kNaN;  // both branches land inside: ambiguous
        }
        chosen = theta;
      }
    }
  }
  return chosen;
}

double decode_one(double v_hat, double r, double phi_a, double key, const Announcements& ann,
                  int* bit_out) {
  const double delta = invert_delta(v_hat, r);
  if (ann.digital) {
    const double d0 = fold_angle(phi_a + ann.theta0 + key);
    const double d1 = fold_angle(phi_a + ann.theta1 + key);
    *bit_out = std::abs(delta - d1) < std::abs(delta - d0) ? 1 : 0;
    return *bit_out ? ann.theta1 : ann.theta0;
  }
  *bit_out = -1;
  return resolve_in_window(delta, phi_a, key, ann.window_lo, ann.window_hi);
}

// Continuous-key limit of the exhaustive scan for an analog record: as the
// key guess sweeps the circle, each +/- branch of the window-resolved
// estimate covers the window uniformly, minus the stretch where the two
// branches collide (ambiguous, rejected). The mean over accepted candidates
// is computable in closed form; without collisions it is exactly the window
// center, i.e. the scan carries no information at all.
double scan_mean_analog(double v_hat, double r, const Announcements& ann) {
  const double lo = ann.window_lo;
  const double hi = ann.window_hi;
  const double two_pi = 2.0 * std::numbers::pi;
  const double d = wrap_phase(2.0 * invert_delta(v_hat, r));
  double total_len = 0.0;
  double total_first = 0.0;
  for (double shift : {d, -d}) {
    // Accepted set of this branch: W minus {theta : wrap(theta - shift) in W}.
    double len = hi - lo;
    double first = 0.5 * (hi * hi - lo * lo);
    for (int k = -2; k <= 2; ++k) {
      const double a = std::max(lo, lo + shift + two_pi * k);
      const double b = std::min(hi, hi + shift + two_pi * k);
      if (b > a) {
        len -= b - a;
        first -= 0.5 * (b * b - a * a);
      }
    }
    if (len > 1e-12) {
      total_len += len;
      total_first += first;
    }
  }
  if (total_len <= 1e-12) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return total_first / total_len;
}

}  // namespace

std::string AttackModel::label() const {
  struct Visitor {
    std::string operator()(const None&) const { return "None"; }
    std::string operator()(const CommutingPhase&) const { return "CommutingPhase"; }
    std::string operator()(const ConjugateDisplacement&) const { return "ConjugateDisplacement"; }
    std::string operator()(const NumberPhase&) const { return "NumberPhase"; }
    std::string operator()(const BeamsplitterTap&) const { return "BeamsplitterTap"; }
    std::string operator()(const InterceptResend&) const { return "InterceptResend"; }
    std::string operator()(const BlockAndReplace&) const { return "BlockAndReplace"; }
  };
  return std::visit(Visitor{}, variant);
}

AttackModel AttackModel::parse(const std::string& text) {
  const auto colon = text.find(':');
  const std::string name = text.substr(0, colon);
  auto kv = colon == std::string::npos ? std::map<std::string, double>{}
                                       : parse_kv(text.substr(colon + 1));
  AttackModel model;
  if (name == "None") {
    model.variant = None{};
  } else if (name == "CommutingPhase") {
    CommutingPhase a;
    a.s = take(kv, "s", 0.5);
    a.theta_star = wrap_phase(take(kv, "theta", 0.0));
    model.variant = a;
  } else if (name == "ConjugateDisplacement") {
    ConjugateDisplacement a;
    a.s = take(kv, "s", 1.0);
    a.theta_star = wrap_phase(take(kv, "theta", 0.0));
    model.variant = a;
  } else if (name == "NumberPhase") {
    NumberPhase a;
    a.eps = take(kv, "eps", 0.3);
    model.variant = a;
  } else if (name == "BeamsplitterTap") {
    BeamsplitterTap a;
    a.eta = take(kv, "eta", 0.9);
    a.eve_phase = wrap_phase(take(kv, "theta_E", 0.0));
    if (!(a.eta >= 0.0 && a.eta <= 1.0)) {
      throw std::invalid_argument("tap transmissivity must be in [0, 1]");
    }
    model.variant = a;
  } else if (name == "InterceptResend") {
    InterceptResend a;
    a.eve_phase = wrap_phase(take(kv, "theta_E", 0.0));
    a.gain = take(kv, "gain", -1.0);
    a.resend = take(kv, "vacuum", 0.0) != 0.0 ? InterceptResend::Resend::Vacuum
                                              : InterceptResend::Resend::CoherentFeedforward;
    model.variant = a;
  } else if (name == "BlockAndReplace") {
    BlockAndReplace a;
    a.r_eve = take(kv, "r_E", 1.0);
    a.eve_key_phase = wrap_phase(take(kv, "theta_BE", 0.0));
    model.variant = a;
  } else {
    throw std::invalid_argument("unknown attack: " + name);
  }
  model.beam = static_cast<int>(take(kv, "beam", 0.0));
  expect_empty(kv, name);
  return model;
}

AppliedAttack apply_attack(const GaussianState& state, const AttackModel& attack,
                           double r_public, std::uint64_t /*seed*/) {
  if (state.num_modes() < 2) {
    throw std::invalid_argument("attack needs the (beam1, beam2) state");
  }
  if (attack.beam != 0) {
    throw std::invalid_argument("attacks may only address the q-public beam");
  }

  AppliedAttack out{state, 0, 1, std::nullopt, {}};

  if (std::holds_alternative<None>(attack.variant)) {
    return out;
  }
  if (const auto* a = std::get_if<CommutingPhase>(&attack.variant)) {
    // exp(i s Z_theta*) leaves Z_theta* fixed and shifts Q_theta* by -2s.
    const double dx = 2.0 * a->s * std::sin(a->theta_star);
    const double dp = -2.0 * a->s * std::cos(a->theta_star);
    out.state = displace(state, 0, dx, dp);
    return out;
  }
  if (const auto* a = std::get_if<ConjugateDisplacement>(&attack.variant)) {
    // exp(i s Q_theta*) shifts Z_theta* by +2s.
    const double dx = 2.0 * a->s * std::cos(a->theta_star);
    const double dp = 2.0 * a->s * std::sin(a->theta_star);
    out.state = displace(state, 0, dx, dp);
    return out;
  }
  if (const auto* a = std::get_if<NumberPhase>(&attack.variant)) {
    // State map rho -> e^{i eps n} rho e^{-i eps n}: homodyning the beam at
    // phi afterwards sees phase phi - eps, i.e. a phase_shift by -eps.
    out.state = phase_shift(state, 0, -a->eps);
    return out;
  }
  if (const auto* a = std::get_if<BeamsplitterTap>(&attack.variant)) {
    GaussianState extended = attach_vacuum(state, 1);
    const int eve_mode = state.num_modes();
    out.state = beamsplitter(extended, 0, eve_mode, a->eta);
    out.eve_probe = QuadratureSpec(eve_mode, a->eve_phase);
    out.eve_state_params = {{"eta", a->eta}, {"eve_phase", a->eve_phase}};
    return out;
  }
  if (const auto* a = std::get_if<InterceptResend>(&attack.variant)) {
    const double gain = a->resend == InterceptResend::Resend::Vacuum
                            ? 0.0
                            : (a->gain >= 0.0 ? a->gain : std::tanh(2.0 * r_public));
    GaussianState extended = attach_vacuum(state, 1);
    const int fresh = state.num_modes();
    // Write Eve's measured quadrature onto the fresh beam; her eventual
    // homodyne of the kept original commutes with the back-action, so the
    // joint law of (Alice, Bob, Eve) equals measure-and-feedforward exactly.
    GaussianState coupled = qnd_sum(extended, 0, fresh, a->eve_phase, gain);
    out.state = std::move(coupled);
    out.alice_mode = fresh;  // Alice receives the fresh beam
    out.eve_probe = QuadratureSpec(0, a->eve_phase);
    out.eve_state_params = {{"gain", gain}, {"eve_phase", a->eve_phase}};
    return out;
  }
  if (const auto* a = std::get_if<BlockAndReplace>(&attack.variant)) {
    // Alice gets one half of Eve's own EPR pair (mode 0); Bob's kept mode is
    // the marginal of the blocked pair, a thermal state (mode 1); Eve keeps
    // the other half of her pair (mode 2).
    const GaussianState eve_pair = two_mode_squeezed_vacuum(a->r_eve);
    Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(6, 6);
    cov.block<2, 2>(0, 0) = eve_pair.cov().block<2, 2>(0, 0);
    cov.block<2, 2>(0, 4) = eve_pair.cov().block<2, 2>(0, 2);
    cov.block<2, 2>(4, 0) = eve_pair.cov().block<2, 2>(2, 0);
    cov.block<2, 2>(4, 4) = eve_pair.cov().block<2, 2>(2, 2);
    cov.block<2, 2>(2, 2) = state.cov().block<2, 2>(2, 2);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(6);
    mean.segment<2>(2) = state.mean().segment<2>(2);
    out.state = GaussianState(std::move(mean), std::move(cov));
    out.eve_probe = QuadratureSpec(2, a->eve_key_phase);
    out.eve_state_params = {{"r_eve", a->r_eve}, {"eve_key_phase", a->eve_key_phase}};
    return out;
  }
  throw std::logic_error("unhandled attack variant");
}

EveEstimate eve_decode(const EveRecord& record, const Announcements& announcements,
                       EveStrategy strategy) {
  EveEstimate est;
  est.analog.assign(announcements.message_length, kNaN);
  est.bits.assign(announcements.message_length, -1);
  if (record.samples_per_record.empty()) {
    return est;  // nothing observed, null estimate
  }
  const size_t n_records = announcements.u.size();
  if (record.samples_per_record.size() != n_records ||
      announcements.symbol_of_record.size() != n_records) {
    throw std::invalid_argument("record does not match the announcements");
  }

  // Eve's key guess: her own key for BlockAndReplace, zero otherwise.
  const auto key_it = record.eve_state_params.find("eve_key_phase");
  const double own_key = key_it == record.eve_state_params.end() ? 0.0 : key_it->second;
  const auto r_it = record.eve_state_params.find("r_eve");
  const double r_eff = r_it == record.eve_state_params.end() ? announcements.r : r_it->second;

  // Per-symbol accumulators.
  std::vector<std::vector<double>> analog_votes(announcements.message_length);
  std::vector<int> ones(announcements.message_length, 0);
  std::vector<int> votes(announcements.message_length, 0);

  const int scan_points = 512;
  for (size_t i = 0; i < n_records; ++i) {
    const auto& u = announcements.u[i];
    const auto& e = record.samples_per_record[i];
    if (u.size() < 2 || e.size() < 2) {
      continue;
    }
    const double v_hat = paired_diff_variance(u, e);
    const int symbol = announcements.symbol_of_record[i];
    if (strategy == EveStrategy::Correlation) {
      int bit = -1;
      const double theta =
          decode_one(v_hat, r_eff, announcements.phi_a[i], own_key, announcements, &bit);
      if (announcements.digital) {
        ++votes[symbol];
        ones[symbol] += bit;
      } else if (!std::isnan(theta)) {
        analog_votes[symbol].push_back(theta);
      }
    } else {
      // Exhaustive key scan. Digital: majority vote over a fine key grid.
      // Analog: closed-form mean over the continuous scan.
      if (announcements.digital) {
        int bit_votes = 0;
        for (int k = 0; k < scan_points; ++k) {
          const double key = 2.0 * std::numbers::pi * k / scan_points;
          int bit = -1;
          decode_one(v_hat, r_eff, announcements.phi_a[i], key, announcements, &bit);
          bit_votes += bit;
        }
        ++votes[symbol];
        ones[symbol] += 2 * bit_votes >= scan_points ? 1 : 0;
      } else {
        const double theta = scan_mean_analog(v_hat, r_eff, announcements);
        if (!std::isnan(theta)) {
          analog_votes[symbol].push_back(theta);
        }
      }
    }
  }

  for (int s = 0; s < announcements.message_length; ++s) {
    if (announcements.digital) {
      if (votes[s] > 0) {
        est.bits[s] = 2 * ones[s] >= votes[s] ? 1 : 0;
      }
    } else if (!analog_votes[s].empty()) {
      double sum = 0.0;
      for (double v : analog_votes[s]) sum += v;
      est.analog[s] = sum / static_cast<double>(analog_votes[s].size());
    }
  }
  return est;
}

}  // namespace qpk::attacks
