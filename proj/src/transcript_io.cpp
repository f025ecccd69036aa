#include "qpk/transcript_io.hpp"

#include <stdexcept>

namespace qpk::protocol {

namespace {

constexpr int kTranscriptVersion = 1;

}  // namespace

nlohmann::json transcript_to_json(const Transcript& t, bool include_private,
                                  bool include_truth) {
  nlohmann::json j;
  j["params"] = {
      {"r", t.params.r},
      {"alice_phases", t.params.alice_phases},
      {"shots_per_symbol", t.params.shots_per_symbol},
      {"redundancy", t.params.redundancy},
  };
  j["declared"] = {
      {"mode", t.declared.mode == MessagePlain::Mode::Digital ? "digital" : "analog"},
      {"length", t.declared.length},
      {"window_lo", t.declared.window_lo},
      {"window_hi", t.declared.window_hi},
      {"theta0", t.declared.theta0},
      {"theta1", t.declared.theta1},
  };
  j["symbols"] = nlohmann::json::array();
  for (const auto& rec : t.records) {
    j["symbols"].push_back({
        {"symbol", rec.symbol},
        {"repetition", rec.repetition},
        {"phi_A", rec.phi_a},
        {"u", rec.u},
    });
  }
  j["meta"] = {{"seed", t.seed}, {"version", kTranscriptVersion}};
  if (include_private) {
    nlohmann::json v = nlohmann::json::array();
    for (const auto& rec : t.records) {
      v.push_back(rec.v);
    }
    j["private"] = {{"v", std::move(v)}};
  }
  if (include_truth) {
    j["truth"] = {{"attack_label", t.attack_label}};
  }
  return j;
}

Transcript transcript_from_json(const nlohmann::json& j) {
  Transcript t;
  const auto& params = j.at("params");
  t.params.r = params.at("r").get<double>();
  t.params.alice_phases = params.at("alice_phases").get<std::vector<double>>();
  t.params.shots_per_symbol = params.at("shots_per_symbol").get<int>();
  t.params.redundancy = params.at("redundancy").get<int>();

  const auto& declared = j.at("declared");
  t.declared.mode = declared.at("mode").get<std::string>() == "digital"
                        ? MessagePlain::Mode::Digital
                        : MessagePlain::Mode::Analog;
  t.declared.length = declared.at("length").get<int>();
  t.declared.window_lo = declared.at("window_lo").get<double>();
  t.declared.window_hi = declared.at("window_hi").get<double>();
  t.declared.theta0 = declared.at("theta0").get<double>();
  t.declared.theta1 = declared.at("theta1").get<double>();

  for (const auto& s : j.at("symbols")) {
    SymbolRecord rec;
    rec.symbol = s.at("symbol").get<int>();
    rec.repetition = s.at("repetition").get<int>();
    rec.phi_a = s.at("phi_A").get<double>();
    rec.u = s.at("u").get<std::vector<double>>();
    t.records.push_back(std::move(rec));
  }
  t.seed = j.at("meta").at("seed").get<std::uint64_t>();
  if (j.contains("private")) {
    const auto& v = j.at("private").at("v");
    if (v.size() != t.records.size()) {
      throw std::invalid_argument("private section does not match the public records");
    }
    for (size_t i = 0; i < t.records.size(); ++i) {
      t.records[i].v = v[i].get<std::vector<double>>();
    }
  }
  if (j.contains("truth")) {
    t.attack_label = j.at("truth").at("attack_label").get<std::string>();
  }
  return t;
}

}  // namespace qpk::protocol
