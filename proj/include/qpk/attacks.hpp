#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "qpk/gaussian.hpp"

namespace qpk::attacks {

// Eve intervention models on the q-public leg. All are realizable at the
// covariance level; the non-Gaussian unitary families live in the Fock
// oracle. Phases are canonicalized to [0, 2 pi).
struct None {};

// exp(i s Z_theta*): displaces the conjugate quadrature; invisible when
// theta* equals the quadrature Alice actually measures.
struct CommutingPhase {
  double s = 0.0;
  double theta_star = 0.0;
};

// exp(i s Q_theta*): displaces Z_theta* by 2s; shows up as a mean shift.
struct ConjugateDisplacement {
  double s = 0.0;
  double theta_star = 0.0;
};

// exp(i eps n): indistinguishable from extra phase modulation of the beam.
struct NumberPhase {
  double eps = 0.0;
};

// Eve splits off a share of the beam and homodynes it at eve_phase.
struct BeamsplitterTap {
  double eta = 1.0;
  double eve_phase = 0.0;
};

// Eve homodynes the beam at eve_phase and forwards a fresh beam.
struct InterceptResend {
  enum class Resend { Vacuum, CoherentFeedforward };
  double eve_phase = 0.0;
  Resend resend = Resend::CoherentFeedforward;
  // Feedforward gain; negative means "use tanh(2r)", Eve's best linear
  // estimate given the public squeezing parameter.
  double gain = -1.0;
};

// Eve blocks the public beam entirely and substitutes one half of her own
// EPR pair, keeping the other half as her private key.
struct BlockAndReplace {
  double r_eve = 1.0;
  double eve_key_phase = 0.0;
};

using AttackVariant = std::variant<None, CommutingPhase, ConjugateDisplacement, NumberPhase,
                                   BeamsplitterTap, InterceptResend, BlockAndReplace>;

struct AttackModel {
  AttackVariant variant = None{};
  // The beam Eve touches. Only the q-public beam (mode 0) is allowed; the
  // q-private beam is assumed physically out of her reach.
  int beam = 0;

  std::string label() const;
  bool is_none() const { return std::holds_alternative<None>(variant); }

  // Parses "Name" or "Name:key=value,key=value" as used by the CLI, e.g.
  // "BeamsplitterTap:eta=0.8,theta_E=0.3".
  static AttackModel parse(const std::string& text);
};

// Everything Eve walks away with: her per-shot homodyne outcomes (grouped
// like the transcript records), the parameters of her kept Gaussian modes,
// and - after the announcement - the public record. Never anything derived
// from Bob's key.
struct EveRecord {
  std::vector<std::vector<double>> samples_per_record;
  std::map<std::string, double> eve_state_params;
  std::vector<double> known_phi_a;
  std::vector<std::vector<double>> known_u;
};

// Result of routing a (beam1, beam2) state through an attack. alice_mode /
// bob_mode name the modes the legitimate parties end up measuring; eve_probe
// is set when Eve retains a mode she will homodyne.
struct AppliedAttack {
  GaussianState state;
  int alice_mode = 0;
  int bob_mode = 1;
  std::optional<QuadratureSpec> eve_probe;
  std::map<std::string, double> eve_state_params;
};

// Applies the attack to the q-public leg of a two-mode state. The returned
// state may carry extra modes that Eve keeps. Throws if the attack addresses
// the private beam. `r_public` is the announced squeezing parameter (used by
// feedforward defaults); `seed` is reserved for randomized strategies and
// keeps the operation deterministic per record.
AppliedAttack apply_attack(const GaussianState& state, const AttackModel& attack,
                           double r_public, std::uint64_t seed);

enum class EveStrategy { ExhaustiveKeyScan, Correlation };

struct EveEstimate {
  // Analog estimate per symbol; NaN where the strategy produced nothing.
  std::vector<double> analog;
  // Digital estimate per symbol; -1 where undecided.
  std::vector<int> bits;
};

// Everything that crosses the public classical channel, as visible to Eve:
// the protocol parameters, the declared message shape, and Alice's per-record
// phase choices and announced samples. Contains no key material.
struct Announcements {
  double r = 0.0;
  bool digital = false;
  double window_lo = 0.0;
  double window_hi = 0.0;
  double theta0 = 0.0;
  double theta1 = 0.0;
  int message_length = 0;
  int redundancy = 1;
  std::vector<int> symbol_of_record;
  std::vector<double> phi_a;
  std::vector<std::vector<double>> u;
};

// Eve's decoder. "Correlation" treats her retained-mode samples the way Bob
// treats his private beam, with a zero guess for the key she does not hold
// (exact for BlockAndReplace, where the key is her own). "ExhaustiveKeyScan"
// decodes under every candidate key on a grid; with nothing to select among
// candidates the reported estimate is the circular mean over the scan.
EveEstimate eve_decode(const EveRecord& record, const Announcements& announcements,
                       EveStrategy strategy);

}  // namespace qpk::attacks
