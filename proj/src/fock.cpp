#include "qpk/fock.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

#include "qpk/gaussian.hpp"

namespace qpk::fock {

namespace {

using Complex = std::complex<double>;
constexpr Complex kI{0.0, 1.0};

void check_same_grid(const JointPdf& a, const JointPdf& b) {
  if (a.grid.size() != b.grid.size() || a.step != b.step) {
    throw std::invalid_argument("joint pdfs live on different grids");
  }
}

// Diagonal phase vector (e^{-i n phi})_{n=0..count-1}.
Eigen::VectorXcd phase_ramp(double phi, int count) {
  Eigen::VectorXcd v(count);
  for (int n = 0; n < count; ++n) {
    v[n] = std::exp(-kI * (phi * n));
  }
  return v;
}

JointPdf normalized_pdf(const GridParams& grid, Eigen::MatrixXd values) {
  JointPdf pdf;
  pdf.grid = grid.points();
  pdf.step = grid.step;
  const double h2 = grid.step * grid.step;
  const double raw = h2 * values.sum();
  if (std::abs(raw - 1.0) > kNormalizationTol) {
    throw std::runtime_error(
        "joint pdf failed normalization check: grid or cutoff inadequate");
  }
  pdf.values = values / raw;
  return pdf;
}

}  // namespace

int auto_cutoff(double r, double eps, int cap) {
  if (!(eps > 0.0) || cap < 1) {
    throw std::invalid_argument("invalid truncation parameters");
  }
  const double t2 = std::tanh(r) * std::tanh(r);
  if (t2 == 0.0) {
    return 1;
  }
  const double bound = eps * (1.0 - t2);
  int n = 1;
  double tail = t2;  // tanh^{2n}
  while (tail > bound && n < cap) {
    tail *= t2;
    ++n;
  }
  return n;
}

Eigen::VectorXcd FockAmplitudes::coeffs() const {
  Eigen::VectorXcd c(cutoff);
  for (int n = 0; n < cutoff; ++n) {
    c[n] = magnitudes[n] * std::exp(kI * phases[n]);
  }
  return c;
}

FockAmplitudes tmsv_coefficients(double r, int cutoff) {
  if (cutoff < 1) {
    throw std::invalid_argument("cutoff must be at least 1");
  }
  if (!std::isfinite(r) || std::abs(r) > kMaxSqueezing) {
    throw std::invalid_argument("squeezing parameter out of guard range");
  }
  FockAmplitudes amps;
  amps.cutoff = cutoff;
  amps.magnitudes.resize(cutoff);
  amps.phases = Eigen::VectorXd::Zero(cutoff);
  const double t = std::tanh(r);
  double c = 1.0 / std::cosh(r);
  for (int n = 0; n < cutoff; ++n) {
    amps.magnitudes[n] = std::abs(c);
    amps.phases[n] = c < 0.0 ? std::numbers::pi : 0.0;
    c *= t;
  }
  return amps;
}

FockAmplitudes encrypt_coefficients(const FockAmplitudes& amps, double theta) {
  FockAmplitudes out = amps;
  for (int n = 0; n < out.cutoff; ++n) {
    out.phases[n] += theta * n;
  }
  return out;
}

Eigen::VectorXd reduced_density_diag(const FockAmplitudes& amps) {
  return amps.magnitudes.cwiseAbs2();
}

double quadrature_wavefunction(int n, double z) {
  if (n < 0) {
    throw std::invalid_argument("order must be nonnegative");
  }
  if (n > kMaxWavefunctionOrder) {
    throw std::domain_error("wavefunction order beyond guarded recursion range");
  }
  const double psi0 = std::pow(2.0 * std::numbers::pi, -0.25) * std::exp(-z * z / 4.0);
  if (n == 0) {
    return psi0;
  }
  // z psi_n = sqrt(n+1) psi_{n+1} + sqrt(n) psi_{n-1}; normalized, so every
  // term stays O(1) and the recursion cannot overflow.
  double prev = psi0;
  double cur = z * psi0;  // psi_1 = z psi_0 / sqrt(1)
  for (int k = 1; k < n; ++k) {
    const double next = (z * cur - std::sqrt(static_cast<double>(k)) * prev) /
                        std::sqrt(static_cast<double>(k + 1));
    prev = cur;
    cur = next;
  }
  return cur;
}

Eigen::MatrixXd quadrature_wavefunctions(int n_max, const Eigen::VectorXd& z) {
  if (n_max < 0) {
    throw std::invalid_argument("order must be nonnegative");
  }
  if (n_max > kMaxWavefunctionOrder) {
    throw std::domain_error("wavefunction order beyond guarded recursion range");
  }
  const int g = static_cast<int>(z.size());
  Eigen::MatrixXd psi(n_max + 1, g);
  for (int i = 0; i < g; ++i) {
    psi(0, i) = std::pow(2.0 * std::numbers::pi, -0.25) * std::exp(-z[i] * z[i] / 4.0);
  }
  if (n_max >= 1) {
    psi.row(1) = z.transpose().cwiseProduct(psi.row(0));
  }
  for (int n = 1; n < n_max; ++n) {
    psi.row(n + 1) = (z.transpose().cwiseProduct(psi.row(n)) -
                      std::sqrt(static_cast<double>(n)) * psi.row(n - 1)) /
                     std::sqrt(static_cast<double>(n + 1));
  }
  return psi;
}

GridParams GridParams::standard(double r, double step) {
  GridParams g;
  g.z_max = 7.0 * std::sqrt(std::cosh(2.0 * r));
  g.step = step;
  return g;
}

Eigen::VectorXd GridParams::points() const {
  if (!(step > 0.0) || !(z_max > 0.0)) {
    throw std::invalid_argument("invalid grid parameters");
  }
  const int half = static_cast<int>(std::floor(z_max / step));
  const int count = 2 * half + 1;
  Eigen::VectorXd z(count);
  for (int i = 0; i < count; ++i) {
    z[i] = step * (i - half);
  }
  return z;
}

PdfMoments JointPdf::moments() const {
  PdfMoments m;
  const double h2 = step * step;
  double mass = 0.0;
  for (int i = 0; i < grid.size(); ++i) {
    for (int j = 0; j < grid.size(); ++j) {
      const double w = values(i, j) * h2;
      mass += w;
      m.mean1 += w * grid[i];
      m.mean2 += w * grid[j];
    }
  }
  m.mean1 /= mass;
  m.mean2 /= mass;
  for (int i = 0; i < grid.size(); ++i) {
    const double d1 = grid[i] - m.mean1;
    for (int j = 0; j < grid.size(); ++j) {
      const double w = values(i, j) * h2;
      const double d2 = grid[j] - m.mean2;
      m.var1 += w * d1 * d1;
      m.var2 += w * d2 * d2;
      m.cov += w * d1 * d2;
    }
  }
  m.var1 /= mass;
  m.var2 /= mass;
  m.cov /= mass;
  return m;
}

Eigen::VectorXd JointPdf::marginal2() const {
  return step * values.colwise().sum().transpose();
}

double JointPdf::l1_distance(const JointPdf& other) const {
  check_same_grid(*this, other);
  return step * step * (values - other.values).cwiseAbs().sum();
}

JointPdf joint_quadrature_pdf(const FockAmplitudes& amps, double theta_A, double theta_B,
                              const GridParams& grid) {
  if (amps.deficit() > 10.0 * kDefaultTruncationTol) {
    throw std::invalid_argument("truncation deficit too large for pdf evaluation");
  }
  const Eigen::VectorXd z = grid.points();
  const Eigen::MatrixXd psi = quadrature_wavefunctions(amps.cutoff - 1, z);
  const Eigen::VectorXcd weights =
      amps.coeffs().cwiseProduct(phase_ramp(theta_A + theta_B, amps.cutoff));
  // amplitude(i, j) = sum_n w_n psi_n(z_i) psi_n(z_j)
  const Eigen::MatrixXcd amp =
      psi.transpose() * weights.asDiagonal() * psi.cast<Complex>();
  return normalized_pdf(grid, amp.cwiseAbs2());
}

Eigen::MatrixXcd quadrature_matrix(double phi, int cutoff) {
  if (cutoff < 2) {
    throw std::invalid_argument("cutoff must be at least 2");
  }
  Eigen::MatrixXcd z = Eigen::MatrixXcd::Zero(cutoff, cutoff);
  const Complex lower = std::exp(-kI * phi);  // <n-1| a |n>
  for (int n = 1; n < cutoff; ++n) {
    const double root = std::sqrt(static_cast<double>(n));
    z(n - 1, n) = lower * root;
    z(n, n - 1) = std::conj(lower) * root;
  }
  return z;
}

Eigen::MatrixXcd expi_hermitian(const Eigen::MatrixXcd& h) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("eigendecomposition failed");
  }
  Eigen::VectorXcd phases(es.eigenvalues().size());
  for (int i = 0; i < phases.size(); ++i) {
    phases[i] = std::exp(kI * es.eigenvalues()[i]);
  }
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

double translation_identity_residual(double s, double phi, int cutoff) {
  if (cutoff < 32) {
    throw std::invalid_argument("cutoff must be at least 32");
  }
  const Eigen::MatrixXcd z = quadrature_matrix(phi, cutoff);
  const Eigen::MatrixXcd q = quadrature_matrix(phi + std::numbers::pi / 2.0, cutoff);
  const Eigen::MatrixXcd e = expi_hermitian(s * z);
  const Eigen::MatrixXcd residual =
      e * q * e.adjoint() - q +
      2.0 * s * Eigen::MatrixXcd::Identity(cutoff, cutoff);
  const int low = cutoff / 4;
  return residual.topLeftCorner(low, low).jacobiSvd().singularValues()(0);
}

AttackUnitary::AttackUnitary(int mode_dim_in, int ancilla_dim_in, Eigen::MatrixXcd matrix_in,
                             std::string description_in)
    : mode_dim(mode_dim_in),
      ancilla_dim(ancilla_dim_in),
      matrix(std::move(matrix_in)),
      description(std::move(description_in)) {
  if (mode_dim < 1 || ancilla_dim < 1) {
    throw std::invalid_argument("attack dimensions must be positive");
  }
  const int dim = mode_dim * ancilla_dim;
  if (matrix.rows() != dim || matrix.cols() != dim) {
    throw std::invalid_argument("attack matrix dimension mismatch");
  }
  const double dev =
      (matrix.adjoint() * matrix - Eigen::MatrixXcd::Identity(dim, dim)).cwiseAbs().maxCoeff();
  if (dev > 1e-9) {
    throw std::invalid_argument("attack matrix is not unitary on the retained block");
  }
}

AttackUnitary AttackUnitary::identity(int mode_dim) {
  return AttackUnitary(mode_dim, 1, Eigen::MatrixXcd::Identity(mode_dim, mode_dim), "identity");
}

AttackUnitary AttackUnitary::from_generator(const Eigen::MatrixXcd& h, int mode_dim,
                                            int ancilla_dim, std::string description) {
  const double herm_dev = (h - h.adjoint()).cwiseAbs().maxCoeff();
  if (herm_dev > 1e-12 * std::max(1.0, h.cwiseAbs().maxCoeff())) {
    throw std::invalid_argument("attack generator must be Hermitian");
  }
  return AttackUnitary(mode_dim, ancilla_dim, expi_hermitian(h), std::move(description));
}

AttackUnitary AttackUnitary::phase_of_quadrature(double s, double theta, int cutoff) {
  return from_generator(s * quadrature_matrix(theta, cutoff), cutoff, 1,
                        "exp(i s Z_theta*)");
}

AttackUnitary AttackUnitary::quadratic_phase(double s, double t, double theta, int cutoff) {
  const Eigen::MatrixXcd z = quadrature_matrix(theta, cutoff);
  return from_generator(s * z + t * (z * z), cutoff, 1, "exp(i (s Z + t Z^2))");
}

AttackUnitary AttackUnitary::conjugate_displacement(double s, double theta, int cutoff) {
  return from_generator(s * quadrature_matrix(theta + std::numbers::pi / 2.0, cutoff), cutoff,
                        1, "exp(i s Q_theta*)");
}

AttackUnitary AttackUnitary::number_phase(double eps, int cutoff) {
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(cutoff, cutoff);
  for (int n = 0; n < cutoff; ++n) {
    h(n, n) = eps * n;
  }
  return from_generator(h, cutoff, 1, "exp(i eps n)");
}

AttackUnitary AttackUnitary::beamsplitter_to_ancilla(double eta, int cutoff, int ancilla_dim) {
  if (!(eta >= 0.0 && eta <= 1.0)) {
    throw std::invalid_argument("transmissivity must be in [0, 1]");
  }
  const double angle = std::acos(std::sqrt(eta));
  const int dim = cutoff * ancilla_dim;
  const auto idx = [ancilla_dim](int n, int nu) { return n * ancilla_dim + nu; };
  // H = i angle (a b^dag - a^dag b) on mode x ancilla.
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(dim, dim);
  for (int n = 1; n < cutoff; ++n) {
    for (int nu = 0; nu + 1 < ancilla_dim; ++nu) {
      // <n-1, nu+1| a b^dag |n, nu>
      const double amp = std::sqrt(static_cast<double>(n)) *
                         std::sqrt(static_cast<double>(nu + 1));
      h(idx(n - 1, nu + 1), idx(n, nu)) += Complex(0.0, angle) * amp;
      h(idx(n, nu), idx(n - 1, nu + 1)) += Complex(0.0, -angle) * amp;
    }
  }
  return from_generator(h, cutoff, ancilla_dim, "beamsplitter-to-ancilla");
}

JointPdf attacked_joint_pdf(const FockAmplitudes& amps, const AttackUnitary& attack,
                            double theta_A, double theta_B, const GridParams& grid) {
  if (attack.mode_dim != amps.cutoff) {
    throw std::invalid_argument("attack and amplitudes use different cutoffs");
  }
  const int n_modes = amps.cutoff;
  const int d = attack.ancilla_dim;
  const Eigen::VectorXd z = grid.points();
  const int g = static_cast<int>(z.size());
  const Eigen::MatrixXd psi = quadrature_wavefunctions(n_modes - 1, z);
  const Eigen::MatrixXcd psi_c = psi.cast<Complex>();

  // Measurement-basis phases on the attacked beam.
  const Eigen::VectorXcd ramp_a = phase_ramp(theta_A, n_modes);
  const Eigen::MatrixXcd phi1 = ramp_a.asDiagonal() * psi_c;  // N x G
  const Eigen::VectorXcd weights =
      amps.coeffs().cwiseProduct(phase_ramp(theta_B, n_modes));  // c_n e^{-i n theta_B}

  Eigen::MatrixXd values = Eigen::MatrixXd::Zero(g, g);
  Eigen::MatrixXcd m_nu(n_modes, n_modes);
  for (int nu = 0; nu < d; ++nu) {
    // M_nu[m, n] = <m, nu| U |n, 0>
    for (int n = 0; n < n_modes; ++n) {
      for (int m = 0; m < n_modes; ++m) {
        m_nu(m, n) = attack.matrix(m * d + nu, n * d);
      }
    }
    const Eigen::MatrixXcd core = m_nu * weights.asDiagonal() * psi_c;  // N x G
    const Eigen::MatrixXcd amp_nu = phi1.transpose() * core;            // G x G
    values += amp_nu.cwiseAbs2();
  }
  return normalized_pdf(grid, std::move(values));
}

TheoremReport theorem_check(const AttackUnitary& attack, double theta_A,
                            const std::vector<double>& theta_B_grid, double r, int cutoff,
                            const GridParams& grid) {
  const FockAmplitudes amps = tmsv_coefficients(r, cutoff);
  TheoremReport report;
  report.per_theta.reserve(theta_B_grid.size());
  for (double theta_B : theta_B_grid) {
    const JointPdf clean = joint_quadrature_pdf(amps, theta_A, theta_B, grid);
    const JointPdf attacked = attacked_joint_pdf(amps, attack, theta_A, theta_B, grid);
    const double l1 = clean.l1_distance(attacked);
    report.per_theta.emplace_back(theta_B, l1);
    if (l1 >= report.max_l1) {
      report.max_l1 = l1;
      report.argmax_theta_B = theta_B;
    }
  }
  return report;
}

std::vector<double> theta_b_grid(int count) {
  if (count < 1) {
    throw std::invalid_argument("grid needs at least one point");
  }
  std::vector<double> grid(count);
  for (int k = 0; k < count; ++k) {
    grid[k] = 2.0 * std::numbers::pi * k / count;
  }
  return grid;
}

}  // namespace qpk::fock
