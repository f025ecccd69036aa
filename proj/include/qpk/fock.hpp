#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace qpk::fock {

// Default tolerance on the truncated norm deficit 1 - sum |c_n|^2.
inline constexpr double kDefaultTruncationTol = 1e-8;
// Cap on the auto-selected cutoff.
inline constexpr int kMaxCutoff = 256;
// Hard guard on the Hermite recursion order.
inline constexpr int kMaxWavefunctionOrder = 200;
// L1 distance above which an attack counts as flagged. An order of magnitude
// above the worst truncation artifact observed at default settings.
inline constexpr double kDetectionFloor = 0.01;
// Tolerance on the raw grid normalization of a joint pdf before rescaling.
inline constexpr double kNormalizationTol = 1e-6;

// Coefficients c_n of a state living on the diagonal |n>|n> subspace,
// truncated to occupations 0..cutoff-1. Stored in polar form: phase
// modulation then cannot perturb the moduli even at the last bit, which is
// the whole point of the encryption map.
struct FockAmplitudes {
  int cutoff = 0;
  Eigen::VectorXd magnitudes;  // |c_n|
  Eigen::VectorXd phases;      // arg c_n

  Eigen::VectorXcd coeffs() const;
  double norm2() const { return magnitudes.squaredNorm(); }
  double deficit() const { return 1.0 - norm2(); }
};

// Smallest cutoff N with tanh(r)^{2N} / (1 - tanh(r)^2) <= eps, capped.
int auto_cutoff(double r, double eps = kDefaultTruncationTol, int cap = kMaxCutoff);

// c_n = tanh(r)^n / cosh(r).
FockAmplitudes tmsv_coefficients(double r, int cutoff);

// Phase modulation of beam 1 with the linear phase function: c_n -> e^{i theta n} c_n.
// Leaves every |c_n| (hence the reduced density matrix of either beam) intact.
// Note the sign: homodyning the modulated beam at phase phi sees the statistics
// of the unmodulated beam at phi - theta. The protocol engine's phase_shift
// uses the opposite sign so that its effective phase is phi + theta.
FockAmplitudes encrypt_coefficients(const FockAmplitudes& amps, double theta);

// Diagonal of the reduced density matrix of either beam: (|c_n|^2)_n.
Eigen::VectorXd reduced_density_diag(const FockAmplitudes& amps);

// Harmonic-oscillator eigenfunction <z|n> scaled so the n = 0 density has
// variance 1: psi_0(z) = (2 pi)^{-1/4} e^{-z^2/4}. Orthonormal on the line;
// <z^2>_n = 2n + 1 in these units.
double quadrature_wavefunction(int n, double z);

// psi_0..psi_n_max evaluated on a grid; row n is psi_n. Uses the normalized
// three-term recursion, which stays bounded for all orders in range.
Eigen::MatrixXd quadrature_wavefunctions(int n_max, const Eigen::VectorXd& z);

struct GridParams {
  double z_max = 10.0;
  double step = 0.05;

  // Covers +/- 7 sigma of the widest quadrature at squeezing r; wide enough
  // that tail truncation stays below the 1e-6 moment-agreement budget.
  static GridParams standard(double r, double step = 0.05);

  Eigen::VectorXd points() const;
};

struct PdfMoments {
  double mean1 = 0.0, mean2 = 0.0;
  double var1 = 0.0, var2 = 0.0;
  double cov = 0.0;

  double var_diff() const { return var1 + var2 - 2.0 * cov; }
};

// Exact joint probability density P(z1, z2) on a uniform square grid.
struct JointPdf {
  Eigen::VectorXd grid;    // shared axis sample points
  double step = 0.0;
  Eigen::MatrixXd values;  // values(i, j) = P(grid[i], grid[j])

  PdfMoments moments() const;
  Eigen::VectorXd marginal2() const;  // integral over z1, one value per grid point
  double l1_distance(const JointPdf& other) const;
};

// P(z1, z2) for quadrature phases theta_A (beam 1) and theta_B (beam 2):
// amplitude sum_n c_n e^{-i n theta_A} psi_n(z1) e^{-i n theta_B} psi_n(z2).
JointPdf joint_quadrature_pdf(const FockAmplitudes& amps, double theta_A, double theta_B,
                              const GridParams& grid);

// Truncated matrix of Z_phi = a e^{-i phi} + a^dag e^{i phi} in the Fock basis.
Eigen::MatrixXcd quadrature_matrix(double phi, int cutoff);

// exp(i H) for Hermitian H, via the spectral decomposition; unitary to
// machine precision by construction.
Eigen::MatrixXcd expi_hermitian(const Eigen::MatrixXcd& h);

// Operator-norm residual of e^{i Z s} Q e^{-i Z s} - (Q - 2s) restricted to
// the low Fock block n < cutoff/4, with Z = Z_phi, Q = Z_{phi + pi/2}.
double translation_identity_residual(double s, double phi, int cutoff);

// Unitary acting on (beam-1 Fock space x ancilla), basis |n>|nu> at index
// n * ancilla_dim + nu; the ancilla starts in |0>. Never touches beam 2.
struct AttackUnitary {
  int mode_dim = 0;
  int ancilla_dim = 1;
  Eigen::MatrixXcd matrix;
  std::string description;

  AttackUnitary(int mode_dim_in, int ancilla_dim_in, Eigen::MatrixXcd matrix_in,
                std::string description_in);

  static AttackUnitary identity(int mode_dim);
  // exp(i H) for a Hermitian generator on the joint space.
  static AttackUnitary from_generator(const Eigen::MatrixXcd& h, int mode_dim, int ancilla_dim,
                                      std::string description);
  // exp(i s Z_theta): commutes with the theta quadrature.
  static AttackUnitary phase_of_quadrature(double s, double theta, int cutoff);
  // exp(i (s Z_theta + t Z_theta^2)): a nonlinear function of the same quadrature.
  static AttackUnitary quadratic_phase(double s, double t, double theta, int cutoff);
  // exp(i s Q_theta): displaces the theta quadrature by 2s.
  static AttackUnitary conjugate_displacement(double s, double theta, int cutoff);
  // exp(i eps n): indistinguishable from extra phase modulation.
  static AttackUnitary number_phase(double eps, int cutoff);
  // Beamsplitter of transmissivity eta between beam 1 and a truncated
  // ancilla oscillator.
  static AttackUnitary beamsplitter_to_ancilla(double eta, int cutoff, int ancilla_dim);
};

// P_E(z1, z2) after the attack: ancilla-traced Born rule for quadrature
// measurements at theta_A (on the attacked beam) and theta_B (beam 2).
JointPdf attacked_joint_pdf(const FockAmplitudes& amps, const AttackUnitary& attack,
                            double theta_A, double theta_B, const GridParams& grid);

struct TheoremReport {
  double max_l1 = 0.0;
  double argmax_theta_B = 0.0;
  std::vector<std::pair<double, double>> per_theta;  // (theta_B, L1)
};

// Sweeps theta_B and reports L1(P_E, P) for each value. A unitary that is a
// function of Z_{theta_A} must stay below tolerance for every theta_B; any
// other intervention must exceed the detection floor somewhere.
TheoremReport theorem_check(const AttackUnitary& attack, double theta_A,
                            const std::vector<double>& theta_B_grid, double r, int cutoff,
                            const GridParams& grid);

// Evenly spaced theta_B sweep over [0, 2 pi).
std::vector<double> theta_b_grid(int count);

}  // namespace qpk::fock
