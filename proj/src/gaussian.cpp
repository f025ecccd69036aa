#include "qpk/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "qpk/rng.hpp"

namespace qpk {

namespace {

constexpr double kSymmetryTol = 1e-12;
constexpr double kUncertaintyTol = 1e-9;

void check_mode(const GaussianState& state, int mode) {
  if (mode < 0 || mode >= state.num_modes()) {
    throw std::invalid_argument("mode index out of range");
  }
}

Eigen::Vector2d direction(double phase) {
  return {std::cos(phase), std::sin(phase)};
}

// Applies a 2x2 symplectic block acting on (X_m, P_m) of one mode.
GaussianState apply_single_mode(const GaussianState& state, int mode, const Eigen::Matrix2d& s) {
  const int dim = 2 * state.num_modes();
  Eigen::MatrixXd big = Eigen::MatrixXd::Identity(dim, dim);
  big.block<2, 2>(2 * mode, 2 * mode) = s;
  Eigen::MatrixXd cov = big * state.cov() * big.transpose();
  return GaussianState(big * state.mean(), std::move(cov));
}

GaussianState apply_two_mode(const GaussianState& state, int mode_a, int mode_b,
                             const Eigen::Matrix4d& s) {
  const int dim = 2 * state.num_modes();
  Eigen::MatrixXd big = Eigen::MatrixXd::Identity(dim, dim);
  const int ia = 2 * mode_a;
  const int ib = 2 * mode_b;
  big.block<2, 2>(ia, ia) = s.block<2, 2>(0, 0);
  big.block<2, 2>(ia, ib) = s.block<2, 2>(0, 2);
  big.block<2, 2>(ib, ia) = s.block<2, 2>(2, 0);
  big.block<2, 2>(ib, ib) = s.block<2, 2>(2, 2);
  Eigen::MatrixXd cov = big * state.cov() * big.transpose();
  return GaussianState(big * state.mean(), std::move(cov));
}

// Square root of a (possibly semidefinite) covariance via eigendecomposition.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& cov) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  Eigen::VectorXd lam = es.eigenvalues();
  const double scale = std::max(1.0, lam.cwiseAbs().maxCoeff());
  for (int i = 0; i < lam.size(); ++i) {
    if (lam[i] < -1e-9 * scale) {
      throw std::invalid_argument("covariance is not positive semidefinite");
    }
    lam[i] = std::sqrt(std::max(lam[i], 0.0));
  }
  return es.eigenvectors() * lam.asDiagonal();
}

}  // namespace

double wrap_phase(double phi) {
  if (!std::isfinite(phi)) {
    throw std::invalid_argument("phase must be finite");
  }
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double w = std::fmod(phi, two_pi);
  if (w < 0.0) w += two_pi;
  if (w >= two_pi) w = 0.0;
  return w;
}

double fold_angle(double x) {
  return std::acos(std::clamp(std::cos(x), -1.0, 1.0));
}

QuadratureSpec::QuadratureSpec(int mode_in, double phase_in)
    : mode(mode_in), phase(wrap_phase(phase_in)) {
  if (mode < 0) {
    throw std::invalid_argument("mode index must be nonnegative");
  }
}

BivariateGaussian::BivariateGaussian(const Eigen::Vector2d& mean, const Eigen::Matrix2d& cov)
    : mean2(mean), cov2(cov) {
  cov2 = 0.5 * (cov2 + cov2.transpose().eval());
  if (cov2(0, 0) < 0.0 || cov2(1, 1) < 0.0 || cov2.determinant() < -1e-12) {
    throw std::invalid_argument("invalid bivariate covariance");
  }
}

GaussianState::GaussianState(Eigen::VectorXd mean, Eigen::MatrixXd cov)
    : mean_(std::move(mean)), cov_(std::move(cov)) {
  if (mean_.size() < 2 || mean_.size() % 2 != 0) {
    throw std::invalid_argument("mean must have even length >= 2");
  }
  if (cov_.rows() != mean_.size() || cov_.cols() != mean_.size()) {
    throw std::invalid_argument("covariance dimension mismatch");
  }
  const double asym = (cov_ - cov_.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymmetryTol * std::max(1.0, cov_.cwiseAbs().maxCoeff())) {
    throw std::invalid_argument("covariance must be symmetric");
  }
  // Symmetrize after every construction to suppress round-off drift.
  cov_ = (0.5 * (cov_ + cov_.transpose().eval())).eval();
  for (double nu : symplectic_eigenvalues()) {
    if (nu < 1.0 - kUncertaintyTol) {
      throw std::invalid_argument("covariance violates the uncertainty principle");
    }
  }
}

std::vector<double> GaussianState::symplectic_eigenvalues() const {
  const int m = num_modes();
  Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(2 * m, 2 * m);
  for (int k = 0; k < m; ++k) {
    omega(2 * k, 2 * k + 1) = 1.0;
    omega(2 * k + 1, 2 * k) = -1.0;
  }
  Eigen::EigenSolver<Eigen::MatrixXd> es(omega * cov_);
  std::vector<double> mags;
  mags.reserve(2 * m);
  for (int i = 0; i < 2 * m; ++i) {
    mags.push_back(std::abs(es.eigenvalues()[i]));
  }
  std::sort(mags.begin(), mags.end());
  // Eigenvalues of (Omega cov) come in +/- i nu pairs; keep one per pair.
  std::vector<double> nus;
  nus.reserve(m);
  for (int k = 0; k < m; ++k) {
    nus.push_back(0.5 * (mags[2 * k] + mags[2 * k + 1]));
  }
  return nus;
}

std::pair<double, double> GaussianState::quadrature_moments(const QuadratureSpec& q) const {
  if (q.mode >= num_modes()) {
    throw std::invalid_argument("mode index out of range");
  }
  const Eigen::Vector2d d = direction(q.phase);
  const int i = 2 * q.mode;
  const double mu = d[0] * mean_[i] + d[1] * mean_[i + 1];
  const double var = d.transpose() * cov_.block<2, 2>(i, i) * d;
  return {mu, var};
}

GaussianState vacuum_state(int num_modes) {
  if (num_modes < 1) {
    throw std::invalid_argument("need at least one mode");
  }
  return GaussianState(Eigen::VectorXd::Zero(2 * num_modes),
                       Eigen::MatrixXd::Identity(2 * num_modes, 2 * num_modes));
}

GaussianState two_mode_squeezed_vacuum(double r) {
  if (!std::isfinite(r) || std::abs(r) > kMaxSqueezing) {
    throw std::invalid_argument("squeezing parameter out of guard range");
  }
  const double c = std::cosh(2.0 * r);
  const double s = std::sinh(2.0 * r);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(4, 4) * c;
  cov(0, 2) = cov(2, 0) = s;
  cov(1, 3) = cov(3, 1) = -s;
  return GaussianState(Eigen::VectorXd::Zero(4), std::move(cov));
}

GaussianState phase_shift(const GaussianState& state, int mode, double theta) {
  check_mode(state, mode);
  // Derived from Z_phi = X cos(phi) + P sin(phi) and a -> e^{-i theta} a:
  // the output (X', P') are the input quadratures at phases theta, theta+pi/2.
  Eigen::Matrix2d s;
  s << std::cos(theta), std::sin(theta), -std::sin(theta), std::cos(theta);
  return apply_single_mode(state, mode, s);
}

GaussianState beamsplitter(const GaussianState& state, int mode_a, int mode_b, double eta) {
  check_mode(state, mode_a);
  check_mode(state, mode_b);
  if (mode_a == mode_b) {
    throw std::invalid_argument("beamsplitter needs two distinct modes");
  }
  if (!(eta >= 0.0 && eta <= 1.0)) {
    throw std::invalid_argument("transmissivity must be in [0, 1]");
  }
  const double t = std::sqrt(eta);
  const double rho = std::sqrt(1.0 - eta);
  Eigen::Matrix4d s = Eigen::Matrix4d::Zero();
  s.block<2, 2>(0, 0) = t * Eigen::Matrix2d::Identity();
  s.block<2, 2>(0, 2) = rho * Eigen::Matrix2d::Identity();
  s.block<2, 2>(2, 0) = -rho * Eigen::Matrix2d::Identity();
  s.block<2, 2>(2, 2) = t * Eigen::Matrix2d::Identity();
  return apply_two_mode(state, mode_a, mode_b, s);
}

GaussianState displace(const GaussianState& state, int mode, double dx, double dp) {
  check_mode(state, mode);
  Eigen::VectorXd mean = state.mean();
  mean[2 * mode] += dx;
  mean[2 * mode + 1] += dp;
  return GaussianState(std::move(mean), state.cov());
}

GaussianState qnd_sum(const GaussianState& state, int source, int target, double phase,
                      double gain) {
  check_mode(state, source);
  check_mode(state, target);
  if (source == target) {
    throw std::invalid_argument("qnd_sum needs two distinct modes");
  }
  const double c = std::cos(phase);
  const double s = std::sin(phase);
  // Rotation into the frame where the coupled quadrature is the first axis.
  Eigen::Matrix2d rot;
  rot << c, s, -s, c;
  Eigen::Matrix2d g = Eigen::Matrix2d::Zero();
  g(0, 0) = gain;  // target z += gain * source z
  Eigen::Matrix2d h = Eigen::Matrix2d::Zero();
  h(1, 1) = -gain;  // source q -= gain * target q
  Eigen::Matrix4d sp = Eigen::Matrix4d::Identity();
  sp.block<2, 2>(0, 2) = rot.transpose() * h * rot;
  sp.block<2, 2>(2, 0) = rot.transpose() * g * rot;
  return apply_two_mode(state, source, target, sp);
}

GaussianState attach_vacuum(const GaussianState& state, int extra) {
  if (extra < 0) {
    throw std::invalid_argument("extra modes must be nonnegative");
  }
  const int old_dim = 2 * state.num_modes();
  const int dim = old_dim + 2 * extra;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
  mean.head(old_dim) = state.mean();
  Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(dim, dim);
  cov.topLeftCorner(old_dim, old_dim) = state.cov();
  return GaussianState(std::move(mean), std::move(cov));
}

BivariateGaussian measured_pair_distribution(const GaussianState& state,
                                             const QuadratureSpec& alice,
                                             const QuadratureSpec& bob) {
  if (alice.mode == bob.mode) {
    throw std::invalid_argument("pair distribution needs two distinct modes");
  }
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  measured_distribution(state, {alice, bob}, &mean, &cov);
  return BivariateGaussian(mean, cov);
}

void measured_distribution(const GaussianState& state, const std::vector<QuadratureSpec>& specs,
                           Eigen::VectorXd* mean_out, Eigen::MatrixXd* cov_out) {
  const int k = static_cast<int>(specs.size());
  const int dim = 2 * state.num_modes();
  Eigen::MatrixXd proj = Eigen::MatrixXd::Zero(k, dim);
  for (int i = 0; i < k; ++i) {
    if (specs[i].mode >= state.num_modes()) {
      throw std::invalid_argument("mode index out of range");
    }
    const Eigen::Vector2d d = direction(specs[i].phase);
    proj(i, 2 * specs[i].mode) = d[0];
    proj(i, 2 * specs[i].mode + 1) = d[1];
  }
  *mean_out = proj * state.mean();
  *cov_out = proj * state.cov() * proj.transpose();
}

std::vector<std::pair<double, double>> sample_homodyne_pairs(const BivariateGaussian& dist,
                                                             int n, std::uint64_t seed) {
  Eigen::MatrixXd draws = sample_multivariate(dist.mean2, dist.cov2, n, seed);
  std::vector<std::pair<double, double>> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    out.emplace_back(draws(i, 0), draws(i, 1));
  }
  return out;
}

Eigen::MatrixXd sample_multivariate(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                                    int n, std::uint64_t seed) {
  if (n <= 0) {
    throw std::invalid_argument("sample count must be positive");
  }
  const int k = static_cast<int>(mean.size());
  Eigen::MatrixXd root;
  // Cholesky when strictly positive definite; eigenvalue square root as the
  // pivot fallback for the exactly singular squeezed limits.
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() == Eigen::Success) {
    root = llt.matrixL();
  } else {
    root = psd_sqrt(cov);
  }
  NormalSampler sampler(seed);
  Eigen::MatrixXd out(n, k);
  Eigen::VectorXd z(k);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < k; ++j) {
      z[j] = sampler.next();
    }
    out.row(i) = (mean + root * z).transpose();
  }
  return out;
}

double z_minus_variance(double r, double delta) {
  if (!std::isfinite(r) || !std::isfinite(delta)) {
    throw std::invalid_argument("arguments must be finite");
  }
  return 2.0 * (std::cosh(2.0 * r) - std::cos(delta) * std::sinh(2.0 * r));
}

}  // namespace qpk
