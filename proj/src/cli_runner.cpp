#include "qpk/cli_runner.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>

#include "qpk/attacks.hpp"
#include "qpk/fock.hpp"
#include "qpk/gaussian.hpp"
#include "qpk/protocol.hpp"
#include "qpk/rng.hpp"
#include "qpk/stats.hpp"
#include "qpk/transcript_io.hpp"

namespace qpk::cli {

namespace {

using nlohmann::json;

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void add_row(const std::vector<std::string>& cells) {
    if (cells.size() != header_.size()) {
      throw std::logic_error("csv row width mismatch");
    }
    rows_.push_back(cells);
  }

  std::string str() const {
    std::ostringstream os;
    for (size_t i = 0; i < header_.size(); ++i) {
      os << (i ? "," : "") << header_[i];
    }
    os << "\n";
    for (const auto& row : rows_) {
      for (size_t i = 0; i < row.size(); ++i) {
        os << (i ? "," : "") << row[i];
      }
      os << "\n";
    }
    return os.str();
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

void require_keys(const json& obj, const std::set<std::string>& required,
                  const std::set<std::string>& optional, const std::string& context) {
  if (!obj.is_object()) {
    throw std::invalid_argument(context + " must be an object");
  }
  for (const auto& key : required) {
    if (!obj.contains(key)) {
      throw std::invalid_argument(context + " is missing required key '" + key + "'");
    }
  }
  for (const auto& [key, value] : obj.items()) {
    if (!required.contains(key) && !optional.contains(key)) {
      throw std::invalid_argument(context + " has unknown key '" + key + "'");
    }
  }
}

void validate_message_config(const json& msg) {
  require_keys(msg, {"mode"}, {"values", "window", "bits", "theta0", "theta1"}, "message");
  const std::string mode = msg.at("mode").get<std::string>();
  if (mode == "analog") {
    require_keys(msg, {"mode", "values", "window"}, {}, "analog message");
    if (!msg.at("values").is_array() || !msg.at("window").is_array() ||
        msg.at("window").size() != 2) {
      throw std::invalid_argument("analog message needs values[] and window[2]");
    }
  } else if (mode == "digital") {
    require_keys(msg, {"mode", "bits", "theta0", "theta1"}, {}, "digital message");
    if (!msg.at("bits").is_array()) {
      throw std::invalid_argument("digital message needs bits[]");
    }
  } else {
    throw std::invalid_argument("message mode must be 'analog' or 'digital'");
  }
}

void validate_session_config(const json& config, const std::string& context) {
  require_keys(config,
               {"r", "message", "attack", "seed"},
               {"alice_phases", "shots_per_symbol", "redundancy", "alpha", "theta_B"},
               context);
  validate_message_config(config.at("message"));
  if (config.contains("alice_phases") && !config.at("alice_phases").is_array()) {
    throw std::invalid_argument("alice_phases must be an array");
  }
}

protocol::MessagePlain message_from_config(const json& msg) {
  if (msg.at("mode").get<std::string>() == "analog") {
    return protocol::MessagePlain::make_analog(msg.at("values").get<std::vector<double>>(),
                                               msg.at("window")[0].get<double>(),
                                               msg.at("window")[1].get<double>());
  }
  return protocol::MessagePlain::make_digital(msg.at("bits").get<std::vector<int>>(),
                                              msg.at("theta0").get<double>(),
                                              msg.at("theta1").get<double>());
}

struct SessionSetup {
  protocol::PublicParams params;
  protocol::PrivateKey key;
  protocol::MessagePlain message;
  attacks::AttackModel attack;
  std::uint64_t seed = 0;
  double alpha = protocol::kDefaultAlpha;
};

SessionSetup session_from_config(const json& config) {
  SessionSetup s;
  const double r = config.at("r").get<double>();
  s.seed = config.at("seed").get<std::uint64_t>();
  auto [params, key] = protocol::keygen(r, s.seed);
  s.params = params;
  s.key = key;
  if (config.contains("theta_B")) {
    s.key.theta_b = wrap_phase(config.at("theta_B").get<double>());
  }
  if (config.contains("alice_phases")) {
    s.params.alice_phases = config.at("alice_phases").get<std::vector<double>>();
  }
  if (config.contains("shots_per_symbol")) {
    s.params.shots_per_symbol = config.at("shots_per_symbol").get<int>();
  }
  if (config.contains("redundancy")) {
    s.params.redundancy = config.at("redundancy").get<int>();
  }
  if (config.contains("alpha")) {
    s.alpha = config.at("alpha").get<double>();
  }
  s.params.validate();
  s.message = message_from_config(config.at("message"));
  s.attack = attacks::AttackModel::parse(config.at("attack").get<std::string>());
  return s;
}

json report_shell(const std::string& subcommand, const json& config) {
  json report;
  report["tool"] = kToolName;
  report["tool_version"] = kToolVersion;
  report["report_version"] = kReportVersion;
  report["subcommand"] = subcommand;
  report["config"] = config;
  report["results"] = json::object();
  return report;
}

json detection_to_json(const protocol::DetectionReport& det) {
  json tests = json::array();
  for (const auto& t : det.tests) {
    tests.push_back({{"null", t.null_description},
                     {"statistic", t.statistic},
                     {"p_value", t.p_value},
                     {"n", t.n},
                     {"reject", t.reject}});
  }
  return {{"alarm", det.alarm}, {"alpha", det.alpha}, {"tests", std::move(tests)}};
}

// Runs one seeded session end to end; used by calibrate and attack-sweep.
struct SessionOutcome {
  bool alarm = false;
  double min_p = 1.0;
  std::vector<double> p_values;
};

SessionOutcome run_one(const SessionSetup& base, std::uint64_t seed) {
  SessionOutcome out;
  const protocol::Transcript t =
      protocol::run_session(base.params, base.key, base.message, base.attack, seed);
  const protocol::DetectionReport det =
      protocol::detect_eavesdropping(t, base.params, base.key, base.alpha);
  out.alarm = det.alarm;
  for (const auto& test : det.tests) {
    out.p_values.push_back(test.p_value);
    out.min_p = std::min(out.min_p, test.p_value);
  }
  return out;
}

}  // namespace

json default_config(const std::string& subcommand) {
  if (subcommand == "simulate") {
    return json{
        {"r", 1.0},
        {"alice_phases", {0.0, std::numbers::pi / 3.0}},
        {"shots_per_symbol", 10000},
        {"redundancy", 2},
        {"alpha", 0.01},
        {"theta_B", 0.0},
        {"message",
         {{"mode", "analog"}, {"values", {1.0, 0.8}}, {"window", {0.5, 1.3}}}},
        {"attack", "None"},
        {"seed", 42},
    };
  }
  if (subcommand == "attack-sweep") {
    json session = default_config("simulate");
    session.erase("attack");
    return json{
        {"session", std::move(session)},
        {"attack", "BeamsplitterTap"},
        {"param", "eta"},
        {"values", {1.0, 0.9, 0.8}},
        {"sessions", 40},
    };
  }
  if (subcommand == "verify-theorem") {
    return json{
        {"r", 1.0},          {"cutoff", 128},   {"theta_A", 0.8}, {"theta_B_points", 12},
        {"grid_step", 0.1},  {"s", 0.5},        {"t", 0.2},       {"q_s", 1.0},
        {"eps", 0.3},        {"bs_eta", 0.9},   {"ancilla_dim", 8},
        {"commuting_tol", 1e-6},
    };
  }
  if (subcommand == "oracle-check") {
    return json{
        {"r_list", {0.3, 0.7, 1.0}},
        {"cutoff", 64},
        {"grid_step", 0.05},
        {"phases", {0.0, 0.7, 2.1}},
    };
  }
  if (subcommand == "calibrate") {
    json session = default_config("simulate");
    return json{{"session", std::move(session)}, {"sessions", 200}, {"seed", 7}};
  }
  throw std::invalid_argument("unknown subcommand: " + subcommand);
}

void validate_config(const std::string& subcommand, const json& config) {
  if (subcommand == "simulate") {
    validate_session_config(config, "simulate config");
  } else if (subcommand == "attack-sweep") {
    require_keys(config, {"session", "attack", "param", "values", "sessions"}, {},
                 "attack-sweep config");
    json session = config.at("session");
    session["attack"] = "None";
    validate_session_config(session, "attack-sweep session");
    if (!config.at("values").is_array() || config.at("values").empty()) {
      throw std::invalid_argument("attack-sweep needs a nonempty values[] grid");
    }
  } else if (subcommand == "verify-theorem") {
    require_keys(config, {"r", "cutoff", "theta_A"},
                 {"theta_B_points", "grid_step", "s", "t", "q_s", "eps", "bs_eta",
                  "ancilla_dim", "commuting_tol"},
                 "verify-theorem config");
  } else if (subcommand == "oracle-check") {
    require_keys(config, {"r_list", "cutoff"}, {"grid_step", "phases"},
                 "oracle-check config");
  } else if (subcommand == "calibrate") {
    require_keys(config, {"session", "sessions", "seed"}, {}, "calibrate config");
    validate_session_config(config.at("session"), "calibrate session");
  } else {
    throw std::invalid_argument("unknown subcommand: " + subcommand);
  }
}

json run_simulate(const json& config, std::string* csv, json* transcript_out) {
  validate_config("simulate", config);
  const SessionSetup s = session_from_config(config);
  if (s.params.r == 0.0 && s.message.mode == protocol::MessagePlain::Mode::Analog) {
    throw std::invalid_argument("analog messages are unrecoverable at r = 0");
  }

  const protocol::Transcript t =
      protocol::run_session(s.params, s.key, s.message, s.attack, s.seed);
  const protocol::DecryptResult dec = protocol::decrypt(t, s.key, s.params);
  const protocol::DetectionReport det =
      protocol::detect_eavesdropping(t, s.params, s.key, s.alpha);

  json report = report_shell("simulate", config);
  report["seed"] = s.seed;
  json symbols = json::array();
  for (size_t i = 0; i < dec.symbols.size(); ++i) {
    const auto& sym = dec.symbols[i];
    symbols.push_back({{"symbol", static_cast<int>(i)},
                       {"theta_hat", sym.theta_hat},
                       {"stderr", sym.stderr_},
                       {"bit", sym.bit},
                       {"used", sym.used},
                       {"rejected", sym.rejected},
                       {"boundary", sym.boundary},
                       {"consistent", sym.consistent}});
  }
  report["results"] = {
      {"decoded_analog", dec.estimate.analog},
      {"decoded_bits", dec.estimate.bits},
      {"integrity_ok", dec.integrity_ok},
      {"symbols", std::move(symbols)},
      {"detection", detection_to_json(det)},
  };
  if (transcript_out) {
    *transcript_out = protocol::transcript_to_json(t, false, false);
  }

  CsvTable table({"symbol", "repetition", "phi_A", "shots", "mean_u", "var_u", "var_diff",
                  "delta_hat", "boundary"});
  for (const auto& rec : t.records) {
    const protocol::DeltaEstimate de = protocol::estimate_delta(rec.u, rec.v, s.params.r);
    std::vector<double> diff(rec.u.size());
    for (size_t k = 0; k < rec.u.size(); ++k) diff[k] = rec.u[k] - rec.v[k];
    table.add_row({std::to_string(rec.symbol), std::to_string(rec.repetition),
                   fmt_double(rec.phi_a), std::to_string(rec.u.size()),
                   fmt_double(stats::sample_mean(rec.u)),
                   fmt_double(stats::sample_variance(rec.u)),
                   fmt_double(stats::sample_variance(diff)), fmt_double(de.delta),
                   de.boundary ? "1" : "0"});
  }
  *csv = table.str();
  return report;
}

json run_attack_sweep(const json& config, std::string* csv) {
  validate_config("attack-sweep", config);
  const std::string attack_name = config.at("attack").get<std::string>();
  const std::string param = config.at("param").get<std::string>();
  const int sessions = config.at("sessions").get<int>();
  if (sessions < 1) {
    throw std::invalid_argument("sessions must be positive");
  }

  json report = report_shell("attack-sweep", config);
  json points = json::array();
  CsvTable table({"attack", "param", "value", "sessions", "alarm_rate", "mean_min_p"});
  for (const auto& value : config.at("values")) {
    std::ostringstream spec;
    spec << attack_name << ":" << param << "=" << fmt_double(value.get<double>());
    json session_cfg = config.at("session");
    session_cfg["attack"] = spec.str();
    const SessionSetup base = session_from_config(session_cfg);
    int alarms = 0;
    double min_p_sum = 0.0;
    for (int k = 0; k < sessions; ++k) {
      const SessionOutcome out = run_one(base, mix_seed(base.seed, 1000 + k));
      alarms += out.alarm ? 1 : 0;
      min_p_sum += out.min_p;
    }
    const double rate = static_cast<double>(alarms) / sessions;
    points.push_back({{"value", value.get<double>()},
                      {"alarm_rate", rate},
                      {"mean_min_p", min_p_sum / sessions}});
    table.add_row({attack_name, param, fmt_double(value.get<double>()),
                   std::to_string(sessions), fmt_double(rate),
                   fmt_double(min_p_sum / sessions)});
  }
  report["seed"] = config.at("session").at("seed").get<std::uint64_t>();
  report["results"] = {{"points", std::move(points)}};
  *csv = table.str();
  return report;
}

json run_verify_theorem(const json& config, std::string* csv) {
  validate_config("verify-theorem", config);
  const double r = config.at("r").get<double>();
  const int cutoff = config.at("cutoff").get<int>();
  const double theta_a = config.value("theta_A", 0.8);
  const int points = config.value("theta_B_points", 12);
  const double step = config.value("grid_step", 0.1);
  const double s = config.value("s", 0.5);
  const double t = config.value("t", 0.2);
  const double q_s = config.value("q_s", 1.0);
  const double eps = config.value("eps", 0.3);
  const double bs_eta = config.value("bs_eta", 0.9);
  const int ancilla_dim = config.value("ancilla_dim", 8);
  const double commuting_tol = config.value("commuting_tol", 1e-6);

  const fock::GridParams grid = fock::GridParams::standard(r, step);
  const std::vector<double> thetas = fock::theta_b_grid(points);

  struct Case {
    std::string name;
    fock::AttackUnitary attack;
    double eval_theta_a;
    bool commuting_expected;
  };
  std::vector<Case> battery;
  battery.push_back({"identity", fock::AttackUnitary::identity(cutoff), theta_a, true});
  battery.push_back({"phase_of_quadrature",
                     fock::AttackUnitary::phase_of_quadrature(s, theta_a, cutoff), theta_a,
                     true});
  battery.push_back({"quadratic_phase",
                     fock::AttackUnitary::quadratic_phase(0.4, t, theta_a, cutoff), theta_a,
                     true});
  battery.push_back({"conjugate_displacement",
                     fock::AttackUnitary::conjugate_displacement(q_s, theta_a, cutoff),
                     theta_a, false});
  battery.push_back({"number_phase", fock::AttackUnitary::number_phase(eps, cutoff), theta_a,
                     false});
  battery.push_back({"beamsplitter_to_ancilla",
                     fock::AttackUnitary::beamsplitter_to_ancilla(bs_eta, cutoff, ancilla_dim),
                     theta_a, false});
  // Corollary scenario: an attack commuting with Alice's first quadrature,
  // evaluated when she measures a second, non-opposite one.
  battery.push_back({"phase_of_quadrature@second_quadrature",
                     fock::AttackUnitary::phase_of_quadrature(s, theta_a, cutoff),
                     theta_a + std::numbers::pi / 3.0, false});

  json rows = json::array();
  CsvTable table({"attack", "commuting_expected", "max_l1", "argmax_theta_B", "verdict"});
  bool all_ok = true;
  for (const auto& c : battery) {
    const fock::TheoremReport rep =
        fock::theorem_check(c.attack, c.eval_theta_a, thetas, r, cutoff, grid);
    const bool flagged = rep.max_l1 > fock::kDetectionFloor;
    const bool ok = c.commuting_expected ? rep.max_l1 <= commuting_tol : flagged;
    all_ok = all_ok && ok;
    rows.push_back({{"attack", c.name},
                    {"commuting_expected", c.commuting_expected},
                    {"max_l1", rep.max_l1},
                    {"argmax_theta_B", rep.argmax_theta_B},
                    {"ok", ok}});
    table.add_row({c.name, c.commuting_expected ? "1" : "0", fmt_double(rep.max_l1),
                   fmt_double(rep.argmax_theta_B), ok ? "pass" : "fail"});
  }
  json report = report_shell("verify-theorem", config);
  report["seed"] = 0;
  report["results"] = {{"battery", std::move(rows)},
                       {"all_ok", all_ok},
                       {"detection_floor", fock::kDetectionFloor},
                       {"commuting_tol", commuting_tol}};
  *csv = table.str();
  return report;
}

json run_oracle_check(const json& config, std::string* csv) {
  validate_config("oracle-check", config);
  const std::vector<double> r_list = config.at("r_list").get<std::vector<double>>();
  const int cutoff = config.at("cutoff").get<int>();
  const double step = config.value("grid_step", 0.05);
  const std::vector<double> phases =
      config.value("phases", std::vector<double>{0.0, 0.7, 2.1});

  json rows = json::array();
  CsvTable table({"r", "theta_A", "theta_B", "max_rel_err"});
  double worst = 0.0;
  for (double r : r_list) {
    const fock::FockAmplitudes amps = fock::tmsv_coefficients(r, cutoff);
    const fock::GridParams grid = fock::GridParams::standard(r, step);
    const GaussianState state = two_mode_squeezed_vacuum(r);
    for (double ta : phases) {
      for (double tb : phases) {
        const fock::JointPdf pdf = fock::joint_quadrature_pdf(amps, ta, tb, grid);
        const fock::PdfMoments m = pdf.moments();
        const BivariateGaussian exact = measured_pair_distribution(
            state, QuadratureSpec(0, ta), QuadratureSpec(1, tb));
        const auto rel = [](double got, double want) {
          return std::abs(got - want) / std::max(std::abs(want), 1.0);
        };
        double err = rel(m.mean1, exact.mean2[0]);
        err = std::max(err, rel(m.mean2, exact.mean2[1]));
        err = std::max(err, rel(m.var1, exact.cov2(0, 0)));
        err = std::max(err, rel(m.var2, exact.cov2(1, 1)));
        err = std::max(err, rel(m.cov, exact.cov2(0, 1)));
        err = std::max(err, rel(m.var_diff(), z_minus_variance(r, ta + tb)));
        worst = std::max(worst, err);
        rows.push_back(
            {{"r", r}, {"theta_A", ta}, {"theta_B", tb}, {"max_rel_err", err}});
        table.add_row({fmt_double(r), fmt_double(ta), fmt_double(tb), fmt_double(err)});
      }
    }
  }
  json report = report_shell("oracle-check", config);
  report["seed"] = 0;
  report["results"] = {{"points", std::move(rows)}, {"max_rel_err", worst}};
  *csv = table.str();
  return report;
}

json run_calibrate(const json& config, std::string* csv) {
  validate_config("calibrate", config);
  const int sessions = config.at("sessions").get<int>();
  const std::uint64_t seed = config.at("seed").get<std::uint64_t>();
  const SessionSetup base = session_from_config(config.at("session"));

  json rows = json::array();
  CsvTable table({"session", "seed", "alarm", "min_p"});
  int alarms = 0;
  for (int k = 0; k < sessions; ++k) {
    const std::uint64_t session_seed = mix_seed(seed, 2000 + k);
    const SessionOutcome out = run_one(base, session_seed);
    alarms += out.alarm ? 1 : 0;
    rows.push_back({{"session", k},
                    {"seed", session_seed},
                    {"alarm", out.alarm},
                    {"p_values", out.p_values}});
    table.add_row({std::to_string(k), std::to_string(session_seed), out.alarm ? "1" : "0",
                   fmt_double(out.min_p)});
  }
  const double rate = static_cast<double>(alarms) / sessions;
  const double binom_p = stats::binom_two_sided_p(alarms, sessions, base.alpha);
  json report = report_shell("calibrate", config);
  report["seed"] = seed;
  report["results"] = {{"sessions", sessions},
                       {"alarms", alarms},
                       {"alarm_rate", rate},
                       {"alpha", base.alpha},
                       {"binomial_two_sided_p", binom_p},
                       {"per_session", std::move(rows)}};
  *csv = table.str();
  return report;
}

void validate_report(const json& report) {
  require_keys(report,
               {"tool", "tool_version", "report_version", "subcommand", "config", "results",
                "seed"},
               {}, "report");
  if (report.at("tool").get<std::string>() != kToolName) {
    throw std::invalid_argument("report tool mismatch");
  }
  if (report.at("report_version").get<int>() != kReportVersion) {
    throw std::invalid_argument("unsupported report version");
  }
  const std::string sub = report.at("subcommand").get<std::string>();
  const json& results = report.at("results");
  if (sub == "simulate") {
    require_keys(results,
                 {"decoded_analog", "decoded_bits", "integrity_ok", "symbols", "detection"},
                 {}, "simulate results");
  } else if (sub == "attack-sweep") {
    require_keys(results, {"points"}, {}, "attack-sweep results");
  } else if (sub == "verify-theorem") {
    require_keys(results, {"battery", "all_ok", "detection_floor", "commuting_tol"}, {},
                 "verify-theorem results");
  } else if (sub == "oracle-check") {
    require_keys(results, {"points", "max_rel_err"}, {}, "oracle-check results");
  } else if (sub == "calibrate") {
    require_keys(results,
                 {"sessions", "alarms", "alarm_rate", "alpha", "binomial_two_sided_p",
                  "per_session"},
                 {}, "calibrate results");
  } else {
    throw std::invalid_argument("unknown subcommand in report");
  }
}

void write_outputs(const json& report, const std::string& csv, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  const auto report_path = std::filesystem::path(out_dir) / "report.json";
  const auto table_path = std::filesystem::path(out_dir) / "table.csv";
  std::ofstream rf(report_path);
  if (!rf) {
    throw std::runtime_error("cannot write " + report_path.string());
  }
  rf << report.dump(2) << "\n";
  std::ofstream tf(table_path);
  if (!tf) {
    throw std::runtime_error("cannot write " + table_path.string());
  }
  tf << csv;
}

int run_subcommand(const std::string& subcommand, const std::string& config_path,
                   const std::string& out_dir, const Overrides& overrides) {
  json config;
  if (config_path.empty()) {
    config = default_config(subcommand);
  } else {
    std::ifstream in(config_path);
    if (!in) {
      throw std::runtime_error("cannot read config file: " + config_path);
    }
    config = json::parse(in);
  }
  // Flags override file values.
  json* session = config.contains("session") ? &config["session"] : &config;
  if (overrides.seed) {
    (*session)["seed"] = *overrides.seed;
    if (config.contains("seed")) {
      config["seed"] = *overrides.seed;
    }
  }
  if (overrides.shots) {
    (*session)["shots_per_symbol"] = *overrides.shots;
  }
  if (overrides.attack) {
    if (subcommand == "attack-sweep") {
      throw std::invalid_argument("--attack does not apply to attack-sweep");
    }
    (*session)["attack"] = *overrides.attack;
  }
  if (overrides.alpha) {
    (*session)["alpha"] = *overrides.alpha;
  }

  validate_config(subcommand, config);

  std::string csv;
  json report;
  json transcript;
  if (subcommand == "simulate") {
    report = run_simulate(config, &csv, &transcript);
  } else if (subcommand == "attack-sweep") {
    report = run_attack_sweep(config, &csv);
  } else if (subcommand == "verify-theorem") {
    report = run_verify_theorem(config, &csv);
  } else if (subcommand == "oracle-check") {
    report = run_oracle_check(config, &csv);
  } else if (subcommand == "calibrate") {
    report = run_calibrate(config, &csv);
  } else {
    throw std::invalid_argument("unknown subcommand: " + subcommand);
  }
  validate_report(report);
  write_outputs(report, csv, out_dir);
  if (subcommand == "simulate") {
    const auto path = std::filesystem::path(out_dir) / "transcript.json";
    std::ofstream tf(path);
    if (!tf) {
      throw std::runtime_error("cannot write " + path.string());
    }
    tf << transcript.dump(2) << "\n";
  }

  if (subcommand == "simulate" &&
      report.at("results").at("detection").at("alarm").get<bool>()) {
    return kExitAlarm;
  }
  return kExitOk;
}

}  // namespace qpk::cli
