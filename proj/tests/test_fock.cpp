#include <doctest.h>

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "qpk/fock.hpp"
#include "qpk/gaussian.hpp"

using namespace qpk;
using namespace qpk::fock;

namespace {

constexpr double kPi = std::numbers::pi;

// Independent quadrature oracle: plain Riemann sum on a wide fine grid.
double integrate(const std::function<double(double)>& f, double lo = -30.0,
                 double hi = 30.0, double h = 0.01) {
  double acc = 0.0;
  for (double z = lo; z <= hi; z += h) {
    acc += f(z);
  }
  return acc * h;
}

}  // namespace

TEST_CASE("auto cutoff selection") {
  CHECK(auto_cutoff(0.0) == 1);
  // Smallest N with tanh(1)^{2N} <= eps (1 - tanh(1)^2): 36 by direct scan.
  const double t2 = std::tanh(1.0) * std::tanh(1.0);
  int expected = 1;
  while (std::pow(t2, expected) > 1e-8 * (1.0 - t2)) ++expected;
  CHECK(auto_cutoff(1.0) == expected);
  CHECK(auto_cutoff(3.0) == kMaxCutoff);  // capped
  CHECK_THROWS_AS(auto_cutoff(1.0, -1.0), std::invalid_argument);
}

TEST_CASE("tmsv coefficients") {
  const FockAmplitudes zero = tmsv_coefficients(0.0, 8);
  CHECK(zero.magnitudes[0] == 1.0);
  for (int n = 1; n < 8; ++n) {
    CHECK(zero.magnitudes[n] == 0.0);
  }

  const FockAmplitudes amps = tmsv_coefficients(1.0, 64);
  CHECK(amps.magnitudes[0] == doctest::Approx(1.0 / std::cosh(1.0)).epsilon(1e-15));
  // Geometric normalization: deficit = tanh(1)^{2N}.
  const double t2 = std::tanh(1.0) * std::tanh(1.0);
  CHECK(amps.deficit() == doctest::Approx(std::pow(t2, 64)).epsilon(1e-9));
  // Normalization approaches 1 as the cutoff grows.
  CHECK(tmsv_coefficients(1.0, 16).norm2() < tmsv_coefficients(1.0, 64).norm2());
  CHECK(tmsv_coefficients(1.0, 64).norm2() == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(tmsv_coefficients(1.0, 0), std::invalid_argument);
  CHECK_THROWS_AS(tmsv_coefficients(11.0, 8), std::invalid_argument);
}

TEST_CASE("encryption changes the state but not the reduced density") {
  const FockAmplitudes amps = tmsv_coefficients(1.0, 64);

  const FockAmplitudes same = encrypt_coefficients(amps, 0.0);
  CHECK(same.coeffs() == amps.coeffs());

  const FockAmplitudes enc = encrypt_coefficients(amps, 0.7);
  // Criterion: the total state changes for theta not a multiple of 2 pi ...
  bool changed = false;
  const Eigen::VectorXcd a = amps.coeffs();
  const Eigen::VectorXcd b = enc.coeffs();
  for (int n = 0; n < 64; ++n) {
    changed = changed || a[n] != b[n];
  }
  CHECK(changed);
  // ... while the reduced density matrix is exactly invariant, bit for bit.
  const Eigen::VectorXd rho = reduced_density_diag(amps);
  const Eigen::VectorXd rho_enc = reduced_density_diag(enc);
  for (int n = 0; n < 64; ++n) {
    CHECK(rho[n] == rho_enc[n]);
    CHECK(enc.magnitudes[n] == amps.magnitudes[n]);
  }

  // theta = pi alternates the sign of the real part.
  const FockAmplitudes pi_enc = encrypt_coefficients(amps, kPi);
  for (int n = 0; n < 16; ++n) {
    const double expected = (n % 2 == 0 ? 1.0 : -1.0) * amps.magnitudes[n];
    CHECK(pi_enc.coeffs()[n].real() == doctest::Approx(expected).epsilon(1e-12));
    CHECK(std::abs(pi_enc.coeffs()[n].imag()) < 1e-12);
  }
}

TEST_CASE("reduced density diagonal") {
  const Eigen::VectorXd vac = reduced_density_diag(tmsv_coefficients(0.0, 8));
  CHECK(vac[0] == 1.0);
  CHECK(vac.tail(7).isZero(0.0));

  const Eigen::VectorXd rho = reduced_density_diag(tmsv_coefficients(1.0, 64));
  // Scalar evaluation of tanh^2(1) / cosh^2(1).
  const double expected =
      std::tanh(1.0) * std::tanh(1.0) / (std::cosh(1.0) * std::cosh(1.0));
  CHECK(rho[1] == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("quadrature wavefunction scaling and orthonormality") {
  CHECK(quadrature_wavefunction(0, 0.0) ==
        doctest::Approx(std::pow(2.0 * kPi, -0.25)).epsilon(1e-15));

  // Scaling: unit norm and unit variance for the ground state.
  CHECK(integrate([](double z) {
          const double p = quadrature_wavefunction(0, z);
          return p * p;
        }) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(integrate([](double z) {
          const double p = quadrature_wavefunction(0, z);
          return z * z * p * p;
        }) == doctest::Approx(1.0).epsilon(1e-10));

  // Orthonormality by quadrature for m, n <= 30.
  for (int m = 0; m <= 30; m += 6) {
    for (int n = m; n <= 30; n += 6) {
      const double overlap = integrate([m, n](double z) {
        return quadrature_wavefunction(m, z) * quadrature_wavefunction(n, z);
      });
      CHECK(overlap == doctest::Approx(m == n ? 1.0 : 0.0).epsilon(1e-8));
    }
  }

  // <z^2>_n = 2n + 1 in these units.
  for (int n : {1, 5, 17, 30}) {
    const double second = integrate([n](double z) {
      const double p = quadrature_wavefunction(n, z);
      return z * z * p * p;
    });
    CHECK(second == doctest::Approx(2.0 * n + 1.0).epsilon(1e-8));
  }

  // Vectorized evaluation agrees with the scalar recursion.
  Eigen::VectorXd z(3);
  z << -2.3, 0.1, 4.7;
  const Eigen::MatrixXd psi = quadrature_wavefunctions(40, z);
  for (int n : {0, 7, 40}) {
    for (int i = 0; i < 3; ++i) {
      CHECK(psi(n, i) == doctest::Approx(quadrature_wavefunction(n, z[i])).epsilon(1e-13));
    }
  }

  CHECK_THROWS_AS(quadrature_wavefunction(201, 0.0), std::domain_error);
  CHECK_THROWS_AS(quadrature_wavefunction(-1, 0.0), std::invalid_argument);
}

TEST_CASE("joint pdf of the unsqueezed state is the product of unit Gaussians") {
  const FockAmplitudes amps = tmsv_coefficients(0.0, 4);
  const GridParams grid = GridParams::standard(0.0, 0.05);
  const JointPdf pdf = joint_quadrature_pdf(amps, 0.4, 1.9, grid);
  const PdfMoments m = pdf.moments();
  CHECK(m.mean1 == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(m.var1 == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(m.var2 == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(std::abs(m.cov) < 1e-12);
  // Pointwise product structure.
  const int mid = static_cast<int>(pdf.grid.size()) / 2;
  const double p00 = quadrature_wavefunction(0, pdf.grid[mid]);
  const double p05 = quadrature_wavefunction(0, pdf.grid[mid + 10]);
  CHECK(pdf.values(mid, mid + 10) ==
        doctest::Approx(p00 * p00 * p05 * p05).epsilon(1e-9));
}

TEST_CASE("joint pdf reproduces the closed-form moments") {
  const FockAmplitudes amps = tmsv_coefficients(1.0, 64);
  const GridParams grid = GridParams::standard(1.0, 0.05);

  // Delta = 0.
  const JointPdf aligned = joint_quadrature_pdf(amps, 0.4, -0.4, grid);
  CHECK(aligned.moments().var_diff() ==
        doctest::Approx(0.2706705664732254).epsilon(1e-6));

  // Delta = pi/2: covariance vanishes.
  const JointPdf quarter = joint_quadrature_pdf(amps, 0.4, kPi / 2.0 - 0.4, grid);
  CHECK(std::abs(quarter.moments().cov) < 1e-6);

  // Normalization invariant.
  const double mass = aligned.step * aligned.step * aligned.values.sum();
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(aligned.values.minCoeff() >= 0.0);
}

TEST_CASE("joint pdf error paths") {
  // Cutoff far too small: deficit above tolerance.
  CHECK_THROWS_AS(
      joint_quadrature_pdf(tmsv_coefficients(1.0, 8), 0.0, 0.0,
                           GridParams::standard(1.0, 0.05)),
      std::invalid_argument);
  // Grid that misses most of the mass: normalization check fails.
  GridParams tiny;
  tiny.z_max = 1.0;
  tiny.step = 0.05;
  CHECK_THROWS_AS(joint_quadrature_pdf(tmsv_coefficients(1.0, 64), 0.0, 0.0, tiny),
                  std::runtime_error);
}

TEST_CASE("oracle moments agree with the Gaussian engine across r") {
  for (double r : {0.3, 0.7}) {
    const FockAmplitudes amps = tmsv_coefficients(r, 64);
    const GridParams grid = GridParams::standard(r, 0.05);
    const GaussianState state = two_mode_squeezed_vacuum(r);
    for (double ta : {0.0, 2.1}) {
      for (double tb : {0.7, 2.1}) {
        const PdfMoments m = joint_quadrature_pdf(amps, ta, tb, grid).moments();
        const BivariateGaussian exact = measured_pair_distribution(
            state, QuadratureSpec(0, ta), QuadratureSpec(1, tb));
        CHECK(m.var1 == doctest::Approx(exact.cov2(0, 0)).epsilon(1e-6));
        CHECK(m.var2 == doctest::Approx(exact.cov2(1, 1)).epsilon(1e-6));
        CHECK(std::abs(m.cov - exact.cov2(0, 1)) <
              1e-6 * std::max(1.0, std::abs(exact.cov2(0, 1))));
      }
    }
  }
}

TEST_CASE("quadrature matrix") {
  const Eigen::MatrixXcd z0 = quadrature_matrix(0.0, 16);
  CHECK((z0 - z0.adjoint()).cwiseAbs().maxCoeff() == 0.0);
  for (int n = 1; n < 16; ++n) {
    CHECK(z0(n - 1, n).real() == doctest::Approx(std::sqrt(double(n))).epsilon(1e-15));
    CHECK(z0(n - 1, n).imag() == 0.0);
  }
  CHECK(std::abs(z0(0, 2)) == 0.0);

  // Commutator [Z, Q] = 2i on the low block; truncation spoils only the top.
  const int cutoff = 64;
  const Eigen::MatrixXcd z = quadrature_matrix(0.9, cutoff);
  const Eigen::MatrixXcd q = quadrature_matrix(0.9 + kPi / 2.0, cutoff);
  const Eigen::MatrixXcd comm = z * q - q * z;
  const int low = cutoff / 4;
  const Eigen::MatrixXcd expected =
      std::complex<double>(0.0, 2.0) * Eigen::MatrixXcd::Identity(low, low);
  CHECK((comm.topLeftCorner(low, low) - expected).cwiseAbs().maxCoeff() < 1e-12);

  CHECK_THROWS_AS(quadrature_matrix(0.0, 1), std::invalid_argument);
}

TEST_CASE("translation identity residual") {
  CHECK(translation_identity_residual(0.0, 0.3, 64) < 1e-12);
  CHECK(translation_identity_residual(0.5, 0.3, 128) <= 1e-8);
  // Truncation-error sweep: the residual grows with s at fixed cutoff.
  double prev = 0.0;
  for (double s : {0.25, 0.5, 1.0, 2.0}) {
    const double res = translation_identity_residual(s, 0.3, 48);
    CHECK(res > prev);
    prev = res;
  }
  CHECK_THROWS_AS(translation_identity_residual(0.5, 0.0, 16), std::invalid_argument);
}

TEST_CASE("attack unitary construction and validation") {
  const int cutoff = 32;
  const AttackUnitary u = AttackUnitary::phase_of_quadrature(0.7, 0.4, cutoff);
  CHECK((u.matrix.adjoint() * u.matrix -
         Eigen::MatrixXcd::Identity(cutoff, cutoff))
            .cwiseAbs()
            .maxCoeff() < 1e-12);

  const AttackUnitary bs = AttackUnitary::beamsplitter_to_ancilla(0.9, 16, 4);
  CHECK(bs.ancilla_dim == 4);
  CHECK((bs.matrix.adjoint() * bs.matrix -
         Eigen::MatrixXcd::Identity(64, 64))
            .cwiseAbs()
            .maxCoeff() < 1e-12);

  // A non-unitary matrix must be rejected.
  CHECK_THROWS_AS(
      AttackUnitary(4, 1, Eigen::MatrixXcd::Identity(4, 4) * 2.0, "broken"),
      std::invalid_argument);
  // Non-Hermitian generators too.
  Eigen::MatrixXcd g = Eigen::MatrixXcd::Zero(4, 4);
  g(0, 1) = 1.0;
  CHECK_THROWS_AS(AttackUnitary::from_generator(g, 4, 1, "bad"), std::invalid_argument);
}

TEST_CASE("attacked pdf: identity attack reproduces the clean pdf") {
  const int cutoff = 48;
  const FockAmplitudes amps = tmsv_coefficients(0.8, cutoff);
  const GridParams grid = GridParams::standard(0.8, 0.1);
  const JointPdf clean = joint_quadrature_pdf(amps, 0.6, 1.3, grid);
  const JointPdf attacked =
      attacked_joint_pdf(amps, AttackUnitary::identity(cutoff), 0.6, 1.3, grid);
  CHECK(clean.l1_distance(attacked) < 1e-12);

  CHECK_THROWS_AS(
      attacked_joint_pdf(amps, AttackUnitary::identity(16), 0.6, 1.3, grid),
      std::invalid_argument);
}

TEST_CASE("attacked pdf rejects a grid that cannot hold the displaced mass") {
  const int cutoff = 48;
  const FockAmplitudes amps = tmsv_coefficients(0.8, cutoff);
  GridParams tiny;
  tiny.z_max = 2.0;
  tiny.step = 0.05;
  CHECK_THROWS_AS(
      attacked_joint_pdf(amps, AttackUnitary::conjugate_displacement(1.0, 0.4, cutoff),
                         0.4, 1.0, tiny),
      std::runtime_error);
}

TEST_CASE("theorem forward direction: functions of the measured quadrature are invisible") {
  const int cutoff = 64;
  const double theta_a = 0.8;
  const GridParams grid = GridParams::standard(1.0, 0.1);
  const auto thetas = theta_b_grid(8);

  const TheoremReport id =
      theorem_check(AttackUnitary::identity(cutoff), theta_a, thetas, 1.0, cutoff, grid);
  CHECK(id.max_l1 < 1e-12);

  const TheoremReport lin = theorem_check(
      AttackUnitary::phase_of_quadrature(0.5, theta_a, cutoff), theta_a, thetas, 1.0,
      cutoff, grid);
  CHECK(lin.max_l1 <= 1e-6);

  // Polynomial phases of the same quadrature stay invisible (at a cutoff
  // large enough that the truncation boundary is unpopulated).
  const TheoremReport quad = theorem_check(
      AttackUnitary::quadratic_phase(0.4, 0.2, theta_a, 128), theta_a, thetas, 1.0, 128,
      grid);
  CHECK(quad.max_l1 <= 1e-6);
}

TEST_CASE("non-commuting attacks are flagged") {
  const int cutoff = 64;
  const double theta_a = 0.8;
  const double r = 1.0;
  const GridParams grid = GridParams::standard(r, 0.1);
  const FockAmplitudes amps = tmsv_coefficients(r, cutoff);

  // Conjugate displacement: mean shift 2s in a variance-cosh(2r) Gaussian.
  const JointPdf clean = joint_quadrature_pdf(amps, theta_a, -theta_a, grid);
  const JointPdf shifted = attacked_joint_pdf(
      amps, AttackUnitary::conjugate_displacement(1.0, theta_a, cutoff), theta_a,
      -theta_a, grid);
  CHECK(clean.l1_distance(shifted) >= 0.1);

  // Number-phase shift mimics extra encryption and rotates correlations.
  const TheoremReport np = theorem_check(AttackUnitary::number_phase(0.3, cutoff),
                                         theta_a, theta_b_grid(12), r, cutoff, grid);
  CHECK(np.max_l1 > 0.05);

  // Corollary: commuting with the first quadrature is not enough once Alice
  // measures a second, non-opposite one.
  const TheoremReport second = theorem_check(
      AttackUnitary::phase_of_quadrature(0.5, theta_a, cutoff),
      theta_a + kPi / 3.0, theta_b_grid(12), r, cutoff, grid);
  CHECK(second.max_l1 > kDetectionFloor);
}

TEST_CASE("tap attack variance matches the covariance algebra") {
  const int cutoff = 64;
  const FockAmplitudes amps = tmsv_coefficients(1.0, cutoff);
  const GridParams grid = GridParams::standard(1.0, 0.05);
  const JointPdf pdf = attacked_joint_pdf(
      amps, AttackUnitary::beamsplitter_to_ancilla(0.8, cutoff, 8), 0.3, 1.1, grid);
  const double want = 0.8 * std::cosh(2.0) + 0.2;
  CHECK(pdf.moments().var1 == doctest::Approx(want).epsilon(1e-5));
  // Beam 2 untouched.
  CHECK(pdf.moments().var2 == doctest::Approx(std::cosh(2.0)).epsilon(1e-6));
}

TEST_CASE("Eve never touches beam 2: the z2 marginal is attack-blind") {
  const int cutoff = 64;
  const FockAmplitudes amps = tmsv_coefficients(1.0, cutoff);
  const GridParams grid = GridParams::standard(1.0, 0.05);
  const JointPdf clean = joint_quadrature_pdf(amps, 0.8, 1.7, grid);
  const std::vector<AttackUnitary> attacks = {
      AttackUnitary::phase_of_quadrature(0.5, 0.8, cutoff),
      AttackUnitary::conjugate_displacement(1.0, 0.8, cutoff),
      AttackUnitary::number_phase(0.3, cutoff),
      AttackUnitary::beamsplitter_to_ancilla(0.8, cutoff, 8),
  };
  for (const auto& attack : attacks) {
    const JointPdf pe = attacked_joint_pdf(amps, attack, 0.8, 1.7, grid);
    CHECK((clean.marginal2() - pe.marginal2()).cwiseAbs().maxCoeff() < 1e-8);
    // Both marginals normalize.
    CHECK(pe.marginal2().sum() * pe.step == doctest::Approx(1.0).epsilon(1e-6));
  }
}
