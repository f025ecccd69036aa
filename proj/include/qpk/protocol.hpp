#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qpk/attacks.hpp"
#include "qpk/gaussian.hpp"
#include "qpk/stats.hpp"

namespace qpk::protocol {

// The variance inversion only resolves delta = phi_A + theta + theta_B up to
// sign, and arccos is flat near 0 and pi. Messages must map into this band.
inline constexpr double kDeltaWindowLo = 0.2;
inline constexpr double kDefaultAlpha = 0.01;
inline constexpr int kDefaultShotsPerSymbol = 10000;
inline constexpr int kDefaultRedundancy = 2;

// Everything announced in public. Any two Alice phases must be distinct and
// non-opposite; that is what lets honest decoding disambiguate and what the
// corollary defense relies on.
struct PublicParams {
  double r = 1.0;
  std::vector<double> alice_phases = {0.0};
  int shots_per_symbol = kDefaultShotsPerSymbol;
  int redundancy = kDefaultRedundancy;

  void validate() const;
  static PublicParams defaults(double r);
};

// Bob's key: his local-oscillator phase. Never serialized into the public
// sections of a transcript.
struct PrivateKey {
  double theta_b = 0.0;
};

struct MessagePlain {
  enum class Mode { Analog, Digital };
  Mode mode = Mode::Analog;
  // Analog: values and the declared window they live in.
  std::vector<double> analog;
  double window_lo = 0.0;
  double window_hi = 0.0;
  // Digital: bit list and the two phase values (distinct, non-opposite).
  std::vector<int> bits;
  double theta0 = 0.0;
  double theta1 = 0.0;

  int length() const;
  void validate() const;
  static MessagePlain make_analog(std::vector<double> values, double lo, double hi);
  static MessagePlain make_digital(std::vector<int> bits, double theta0, double theta1);
};

// Public declaration of the message shape (window / digital map), without
// the plaintext. Needed by the decoder and visible to Eve.
struct MessageDeclaration {
  MessagePlain::Mode mode = MessagePlain::Mode::Analog;
  int length = 0;
  double window_lo = 0.0;
  double window_hi = 0.0;
  double theta0 = 0.0;
  double theta1 = 0.0;

  static MessageDeclaration from(const MessagePlain& plain);
};

// One transmitted symbol instance: Alice's announced phase choice and
// samples (public) and Bob's samples (private).
struct SymbolRecord {
  int symbol = 0;
  int repetition = 0;
  double phi_a = 0.0;
  std::vector<double> u;
  std::vector<double> v;
};

struct Transcript {
  PublicParams params;
  MessageDeclaration declared;
  std::vector<SymbolRecord> records;
  std::uint64_t seed = 0;
  // Ground truth of what intervention was actually applied; test-only, never
  // part of the public section.
  std::string attack_label;
};

struct DeltaEstimate {
  double delta = 0.0;    // in [0, pi]
  double stderr_ = 0.0;  // propagated from Var(V-hat) ~= 2 V^2 / (N-1)
  double v_hat = 0.0;
  bool boundary = false;  // inversion clamped at cos = +/-1
};

// Inverts the quadrature-difference variance into the phase sum.
DeltaEstimate estimate_delta(std::span<const double> u, std::span<const double> v, double r);

struct SymbolDecode {
  double theta_hat = 0.0;  // NaN when no repetition decoded
  double stderr_ = 0.0;
  int bit = -1;
  int used = 0;      // repetitions contributing
  int rejected = 0;  // repetitions with no / ambiguous window resolution
  bool boundary = false;
  bool consistent = true;  // repetitions agree within 4x combined stderr
};

struct DecryptResult {
  MessagePlain estimate;
  std::vector<SymbolDecode> symbols;
  bool integrity_ok = true;
};

struct DetectionReport {
  std::vector<stats::TestResult> tests;
  double alpha = kDefaultAlpha;
  bool alarm = false;
};

// Draws Bob's key uniformly from [0, 2 pi) and returns default public
// parameters for the given squeezing.
std::pair<PublicParams, PrivateKey> keygen(double r, std::uint64_t theta_seed);

// Maps the message to the flat list of encryption phases, one entry per
// (symbol, repetition); repetitions of a symbol are adjacent.
std::vector<double> encode_message(const MessagePlain& plain, const PublicParams& params);

// Runs a full session: per record, build the EPR pair, route beam 1 through
// the attack, apply the encryption phase, and draw the paired homodyne
// records (plus Eve's, when she retains a mode). Deterministic given seed.
Transcript run_session(const PublicParams& params, const PrivateKey& key,
                       const MessagePlain& plain, const attacks::AttackModel& attack,
                       std::uint64_t seed, attacks::EveRecord* eve_out = nullptr);

// Bob's decoder: per-record variance inversion, +/- resolution against the
// declared window, redundancy averaging, digital thresholding at the
// midpoint of the two expected delta values.
DecryptResult decrypt(const Transcript& transcript, const PrivateKey& key,
                      const PublicParams& params);

// Four Bonferroni-corrected tests: mean(u - v) = 0, Var(u) = cosh(2r),
// Var(u - v) against the model at the decoded message, and cross-repetition
// consistency.
DetectionReport detect_eavesdropping(const Transcript& transcript, const PublicParams& params,
                                     const PrivateKey& key, double alpha);

// The public view of a transcript, as Eve sees it.
attacks::Announcements public_view(const Transcript& transcript);

}  // namespace qpk::protocol
