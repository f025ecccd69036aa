#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

namespace qpk {

// Quadrature convention used throughout: Z_phi = a e^{-i phi} + a^dag e^{i phi},
// X = Z_0, P = Z_{pi/2}, so Z_phi = X cos(phi) + P sin(phi) and the vacuum has
// Var(Z_phi) = 1. With this normalization the quadrature-difference variance of
// a two-mode squeezed pair is 2[cosh(2r) - cos(theta_A + theta_B) sinh(2r)]
// (equal to 2 at r = 0). Anyone comparing against conventions with vacuum
// variance 1/2 must rescale.
inline constexpr double kVacuumVariance = 1.0;

// Guard on the squeezing parameter; keeps cosh/sinh far from overflow.
inline constexpr double kMaxSqueezing = 10.0;

// Reduce an angle to [0, 2*pi).
double wrap_phase(double phi);

// Fold an angle onto [0, pi], i.e. arccos(cos(x)). This is the image of the
// quadrature-sum angle that variance statistics can resolve.
double fold_angle(double x);

// One homodyne measurement choice: which mode, and the local-oscillator phase.
struct QuadratureSpec {
  int mode;
  double phase;  // canonical, [0, 2*pi)

  QuadratureSpec(int mode_in, double phase_in);
};

// Marginal law of a pair of measured quadratures.
struct BivariateGaussian {
  Eigen::Vector2d mean2;
  Eigen::Matrix2d cov2;

  BivariateGaussian(const Eigen::Vector2d& mean, const Eigen::Matrix2d& cov);
};

// Mean vector and covariance matrix of M bosonic modes in the quadrature
// ordering (X1, P1, X2, P2, ...). Constructors validate symmetry and the
// uncertainty principle (all symplectic eigenvalues >= 1 up to tolerance).
class GaussianState {
 public:
  GaussianState(Eigen::VectorXd mean, Eigen::MatrixXd cov);

  int num_modes() const { return static_cast<int>(mean_.size()) / 2; }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& cov() const { return cov_; }

  // Symplectic eigenvalues of the covariance matrix, ascending. All equal 1
  // for pure states in this convention.
  std::vector<double> symplectic_eigenvalues() const;

  // Mean and variance of Z_phase on one mode.
  std::pair<double, double> quadrature_moments(const QuadratureSpec& q) const;

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
};

GaussianState vacuum_state(int num_modes);

// EPR pair: two-mode squeezed vacuum with squeezing parameter r.
// Diagonal covariance blocks cosh(2r) I, off-diagonal sinh(2r) diag(1,-1).
GaussianState two_mode_squeezed_vacuum(double r);

// Multiplies the mode's annihilation operator by e^{-i theta}: measuring
// phase phi on the output equals measuring phase phi + theta on the input.
// This is the encryption modulator of the protocol.
GaussianState phase_shift(const GaussianState& state, int mode, double theta);

// Two-mode mixing with transmissivity eta:
//   a' = sqrt(eta) a + sqrt(1-eta) b,  b' = -sqrt(1-eta) a + sqrt(eta) b.
// eta = 1 is the identity; eta = 0 swaps the modes up to the sign of one arm.
GaussianState beamsplitter(const GaussianState& state, int mode_a, int mode_b, double eta);

// Shifts the mode's mean by (dx, dp); covariance unchanged. Realizes the
// Gaussian-level attack unitaries generated by single quadratures.
GaussianState displace(const GaussianState& state, int mode, double dx, double dp);

// Continuous-variable SUM gate in the frame rotated by `phase`:
// target's Z_phase gains `gain` times the source's Z_phase, with the
// compensating back-action on the source's conjugate quadrature. The source's
// Z_phase itself is untouched, which is what makes measure-and-feedforward
// attacks expressible as a pure symplectic map.
GaussianState qnd_sum(const GaussianState& state, int source, int target, double phase,
                      double gain);

// Appends `extra` vacuum modes after the existing ones.
GaussianState attach_vacuum(const GaussianState& state, int extra);

// Exact joint law of two measured quadratures on distinct modes.
BivariateGaussian measured_pair_distribution(const GaussianState& state,
                                             const QuadratureSpec& alice,
                                             const QuadratureSpec& bob);

// General k-quadrature marginal (distinct modes); rows of the result follow
// the order of `specs`. Needed when Eve's retained mode is measured alongside
// the legitimate pair.
void measured_distribution(const GaussianState& state, const std::vector<QuadratureSpec>& specs,
                           Eigen::VectorXd* mean_out, Eigen::MatrixXd* cov_out);

// n i.i.d. draws from the bivariate normal; deterministic given seed.
// Semidefinite cov2 (exactly singular squeezed limits) is handled by an
// eigenvalue square root with clamping of tiny negative eigenvalues.
std::vector<std::pair<double, double>> sample_homodyne_pairs(const BivariateGaussian& dist,
                                                             int n, std::uint64_t seed);

// k-variate counterpart; returns an n x k matrix of draws.
Eigen::MatrixXd sample_multivariate(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                                    int n, std::uint64_t seed);

// Closed form for the quadrature-difference variance of the EPR pair:
// 2[cosh(2r) - cos(delta) sinh(2r)] with delta = theta_A + theta_B.
double z_minus_variance(double r, double delta);

}  // namespace qpk
