#pragma once

#include <cstdint>
#include <random>

namespace qpk {

// Derives an independent substream seed from a root seed. Used everywhere a
// component needs its own deterministic stream (per-symbol sampling, key
// generation, parallel shot partitions): results must not depend on how work
// is split across threads, only on (root seed, stream index).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

// Deterministic standard-normal source backed by mt19937_64 (whose output
// sequence is fixed by the standard) and Box-Muller. std::normal_distribution
// is implementation-defined, so it is not used.
class NormalSampler {
 public:
  explicit NormalSampler(std::uint64_t seed) : gen_(seed) {}

  // Uniform in [0, 1) with 53 random bits.
  double uniform();

  // One N(0,1) draw.
  double next();

 private:
  std::mt19937_64 gen_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace qpk
