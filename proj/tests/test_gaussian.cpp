#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "qpk/gaussian.hpp"
#include "qpk/rng.hpp"
#include "qpk/stats.hpp"

using namespace qpk;

namespace {

constexpr double kPi = std::numbers::pi;
const std::vector<double> kPhaseGrid = {0.0, 0.3, 1.1, 2.0, kPi};

std::vector<double> firsts(const std::vector<std::pair<double, double>>& pairs) {
  std::vector<double> out;
  for (auto& [u, v] : pairs) out.push_back(u);
  return out;
}

std::vector<double> seconds(const std::vector<std::pair<double, double>>& pairs) {
  std::vector<double> out;
  for (auto& [u, v] : pairs) out.push_back(v);
  return out;
}

}  // namespace

TEST_CASE("phase wrapping and quadrature specs") {
  CHECK(wrap_phase(0.0) == 0.0);
  CHECK(wrap_phase(2.0 * kPi) == 0.0);
  CHECK(wrap_phase(-0.7) == doctest::Approx(2.0 * kPi - 0.7).epsilon(1e-15));
  CHECK(wrap_phase(7.0 * kPi) == doctest::Approx(kPi).epsilon(1e-12));
  CHECK_THROWS_AS(wrap_phase(std::nan("")), std::invalid_argument);

  const QuadratureSpec q(1, -0.7);
  CHECK(q.mode == 1);
  CHECK(q.phase == doctest::Approx(2.0 * kPi - 0.7).epsilon(1e-15));
  CHECK_THROWS_AS(QuadratureSpec(-1, 0.0), std::invalid_argument);
}

TEST_CASE("vacuum state") {
  const GaussianState v1 = vacuum_state(1);
  CHECK(v1.mean().isZero(0.0));
  CHECK((v1.cov() - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);

  const GaussianState v2 = vacuum_state(2);
  CHECK((v2.cov() - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() == 0.0);

  for (double nu : v2.symplectic_eigenvalues()) {
    CHECK(nu == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK_THROWS_AS(vacuum_state(0), std::invalid_argument);
}

TEST_CASE("two-mode squeezed vacuum covariance") {
  CHECK((two_mode_squeezed_vacuum(0.0).cov() - Eigen::MatrixXd::Identity(4, 4))
            .cwiseAbs()
            .maxCoeff() == 0.0);

  const GaussianState s = two_mode_squeezed_vacuum(1.0);
  // cosh(2) by scalar evaluation.
  for (int i = 0; i < 4; ++i) {
    CHECK(s.cov()(i, i) == doctest::Approx(3.7621956910836314).epsilon(1e-14));
  }
  CHECK(s.cov()(0, 2) == doctest::Approx(3.626860407847019).epsilon(1e-14));
  CHECK(s.cov()(1, 3) == doctest::Approx(-3.626860407847019).epsilon(1e-14));

  // Var(X1 - X2) = 2 e^{-2r} from the cosh - sinh identity, over a sweep.
  for (double r : {0.2, 0.8, 1.5, 3.0}) {
    const GaussianState t = two_mode_squeezed_vacuum(r);
    Eigen::Vector4d d(1.0, 0.0, -1.0, 0.0);
    const double var = d.transpose() * t.cov() * d;
    CHECK(var == doctest::Approx(2.0 * std::exp(-2.0 * r)).epsilon(1e-12));
    for (double nu : t.symplectic_eigenvalues()) {
      CHECK(nu == doctest::Approx(1.0).epsilon(1e-9));
    }
  }

  CHECK_THROWS_AS(two_mode_squeezed_vacuum(10.5), std::invalid_argument);
  CHECK_THROWS_AS(two_mode_squeezed_vacuum(std::nan("")), std::invalid_argument);
}

TEST_CASE("phase shift basics") {
  const GaussianState s = two_mode_squeezed_vacuum(1.0);
  const GaussianState same = phase_shift(s, 0, 0.0);
  CHECK((same.cov() - s.cov()).cwiseAbs().maxCoeff() == 0.0);

  const GaussianState turned = phase_shift(s, 0, 2.0 * kPi);
  CHECK((turned.cov() - s.cov()).cwiseAbs().maxCoeff() < 1e-12);

  CHECK_THROWS_AS(phase_shift(s, 2, 0.1), std::invalid_argument);
}

TEST_CASE("encryption commutation: shift then measure equals measure at shifted phase") {
  const GaussianState s = two_mode_squeezed_vacuum(1.0);
  for (double theta : kPhaseGrid) {
    const GaussianState shifted = phase_shift(s, 0, theta);
    for (double phi_a : kPhaseGrid) {
      for (double theta_b : kPhaseGrid) {
        const BivariateGaussian got = measured_pair_distribution(
            shifted, QuadratureSpec(0, phi_a), QuadratureSpec(1, theta_b));
        const BivariateGaussian want = measured_pair_distribution(
            s, QuadratureSpec(0, phi_a + theta), QuadratureSpec(1, theta_b));
        CHECK((got.cov2 - want.cov2).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((got.mean2 - want.mean2).cwiseAbs().maxCoeff() < 1e-12);
      }
    }
  }
}

TEST_CASE("beamsplitter") {
  const GaussianState s = attach_vacuum(two_mode_squeezed_vacuum(0.7), 1);

  const GaussianState id = beamsplitter(s, 0, 2, 1.0);
  CHECK((id.cov() - s.cov()).cwiseAbs().maxCoeff() < 1e-12);

  // Full reflection swaps the modes, with the documented sign flip on the
  // arm that receives mode a.
  const GaussianState refl = beamsplitter(displace(s, 0, 0.5, -0.25), 0, 2, 0.0);
  CHECK(refl.mean()[4] == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(refl.mean()[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(refl.cov()(4, 4) == doctest::Approx(std::cosh(1.4)).epsilon(1e-12));

  // Loss model: mixing beam 1 with vacuum at eta.
  for (double eta : {0.3, 0.6, 0.9}) {
    const GaussianState tapped = beamsplitter(s, 0, 2, eta);
    for (double phi : kPhaseGrid) {
      const auto [mu, var] = tapped.quadrature_moments(QuadratureSpec(0, phi));
      CHECK(mu == doctest::Approx(0.0).epsilon(1e-12));
      CHECK(var == doctest::Approx(eta * std::cosh(1.4) + (1.0 - eta)).epsilon(1e-12));
    }
    for (double nu : tapped.symplectic_eigenvalues()) {
      CHECK(nu >= 1.0 - 1e-9);
    }
  }

  CHECK_THROWS_AS(beamsplitter(s, 0, 2, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(beamsplitter(s, 0, 0, 0.5), std::invalid_argument);
}

TEST_CASE("displacement moves means only") {
  const GaussianState s = two_mode_squeezed_vacuum(0.5);
  const GaussianState same = displace(s, 0, 0.0, 0.0);
  CHECK((same.mean() - s.mean()).cwiseAbs().maxCoeff() == 0.0);

  // Displacing P by -2s leaves the aligned quadrature's marginal untouched.
  const double step = 0.8;
  const GaussianState shifted_p = displace(s, 0, 0.0, -2.0 * step);
  const auto [mu0, var0] = shifted_p.quadrature_moments(QuadratureSpec(0, 0.0));
  CHECK(mu0 == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(var0 == doctest::Approx(s.cov()(0, 0)).epsilon(1e-14));

  // Displacing X by 2s shifts the Z_0 marginal mean by exactly 2s.
  const GaussianState shifted_x = displace(s, 0, 2.0 * step, 0.0);
  CHECK(shifted_x.quadrature_moments(QuadratureSpec(0, 0.0)).first ==
        doctest::Approx(2.0 * step).epsilon(1e-14));
  CHECK((shifted_x.cov() - s.cov()).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(displace(s, 5, 0.1, 0.1), std::invalid_argument);
}

TEST_CASE("measured pair distribution") {
  const GaussianState vac = vacuum_state(2);
  const BivariateGaussian v = measured_pair_distribution(vac, QuadratureSpec(0, 0.4),
                                                         QuadratureSpec(1, 2.2));
  CHECK(v.mean2.isZero(0.0));
  CHECK((v.cov2 - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() < 1e-15);

  const GaussianState s = two_mode_squeezed_vacuum(1.0);
  // Delta = 0: Var(u - v) = 2 e^{-2}.
  const BivariateGaussian aligned = measured_pair_distribution(
      s, QuadratureSpec(0, 0.7), QuadratureSpec(1, -0.7));
  const double var_minus =
      aligned.cov2(0, 0) + aligned.cov2(1, 1) - 2.0 * aligned.cov2(0, 1);
  CHECK(var_minus == doctest::Approx(0.2706705664732254).epsilon(1e-12));

  // Delta = pi: 2 e^2.
  const BivariateGaussian anti = measured_pair_distribution(
      s, QuadratureSpec(0, 0.7), QuadratureSpec(1, kPi - 0.7));
  const double var_anti = anti.cov2(0, 0) + anti.cov2(1, 1) - 2.0 * anti.cov2(0, 1);
  CHECK(var_anti == doctest::Approx(14.778112197861300).epsilon(1e-12));

  CHECK_THROWS_AS(
      measured_pair_distribution(s, QuadratureSpec(0, 0.0), QuadratureSpec(0, 1.0)),
      std::invalid_argument);
}

TEST_CASE("closed form matches projected covariance on the full grid") {
  for (double r : {0.3, 1.0}) {
    const GaussianState s = two_mode_squeezed_vacuum(r);
    for (double phi_a : kPhaseGrid) {
      for (double theta_b : kPhaseGrid) {
        const BivariateGaussian law = measured_pair_distribution(
            s, QuadratureSpec(0, phi_a), QuadratureSpec(1, theta_b));
        const double var_minus = law.cov2(0, 0) + law.cov2(1, 1) - 2.0 * law.cov2(0, 1);
        CHECK(var_minus ==
              doctest::Approx(z_minus_variance(r, phi_a + theta_b)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("z_minus_variance") {
  CHECK(z_minus_variance(0.0, 0.42) == 2.0);
  CHECK(z_minus_variance(0.0, 3.0) == 2.0);
  CHECK(z_minus_variance(1.0, 0.0) == doctest::Approx(0.2706705664732254).epsilon(1e-14));
  // Asymptote identity: exact for every r, Delta.
  for (double r : {0.5, 3.0}) {
    for (double delta : {0.1, 1.0, 2.5}) {
      const double alt = 2.0 * std::exp(-2.0 * r) +
                         4.0 * std::sinh(2.0 * r) * std::sin(delta / 2.0) *
                             std::sin(delta / 2.0);
      CHECK(z_minus_variance(r, delta) == doctest::Approx(alt).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(z_minus_variance(std::nan(""), 0.0), std::invalid_argument);
}

TEST_CASE("sampling determinism and degenerate covariance") {
  const BivariateGaussian degenerate(Eigen::Vector2d(1.5, -2.0), Eigen::Matrix2d::Zero());
  for (auto& [u, v] : sample_homodyne_pairs(degenerate, 100, 7)) {
    CHECK(u == 1.5);
    CHECK(v == -2.0);
  }

  const GaussianState s = two_mode_squeezed_vacuum(1.0);
  const BivariateGaussian law =
      measured_pair_distribution(s, QuadratureSpec(0, 0.2), QuadratureSpec(1, 0.6));
  const auto a = sample_homodyne_pairs(law, 1000, 12345);
  const auto b = sample_homodyne_pairs(law, 1000, 12345);
  CHECK(a == b);
  const auto c = sample_homodyne_pairs(law, 1000, 54321);
  CHECK(a != c);

  CHECK_THROWS_AS(sample_homodyne_pairs(law, 0, 1), std::invalid_argument);
  Eigen::Matrix2d bad;
  bad << 1.0, 2.0, 2.0, 1.0;  // det < 0
  CHECK_THROWS_AS(BivariateGaussian(Eigen::Vector2d::Zero(), bad), std::invalid_argument);
}

TEST_CASE("sampling consistency against the exact law") {
  const GaussianState s = two_mode_squeezed_vacuum(1.0);
  const BivariateGaussian law =
      measured_pair_distribution(s, QuadratureSpec(0, 0.9), QuadratureSpec(1, -0.1));
  const int n = 100000;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto pairs = sample_homodyne_pairs(law, n, seed);
    const auto us = firsts(pairs);
    const auto vs = seconds(pairs);
    const double sigma_u = std::sqrt(law.cov2(0, 0));
    CHECK(std::abs(stats::sample_mean(us) - law.mean2[0]) <
          5.0 * sigma_u / std::sqrt(n));
    CHECK(std::abs(stats::sample_variance(us) - law.cov2(0, 0)) <
          5.0 * law.cov2(0, 0) * std::sqrt(2.0 / n));
    CHECK(std::abs(stats::sample_variance(vs) - law.cov2(1, 1)) <
          5.0 * law.cov2(1, 1) * std::sqrt(2.0 / n));
    CHECK(std::abs(stats::sample_covariance(us, vs) - law.cov2(0, 1)) <
          5.0 * std::sqrt((law.cov2(0, 0) * law.cov2(1, 1) +
                           law.cov2(0, 1) * law.cov2(0, 1)) /
                          n));
  }
}

TEST_CASE("exactly singular pair law is sampleable") {
  // The squeezed difference direction becomes numerically singular already
  // for moderate r when Delta = 0; the pivot fallback must handle it.
  Eigen::Matrix2d cov;
  const double c = std::cosh(6.0);
  const double s = std::sinh(6.0);
  cov << c, s, s, c;
  const BivariateGaussian law(Eigen::Vector2d::Zero(), cov);
  const auto pairs = sample_homodyne_pairs(law, 5000, 9);
  std::vector<double> diff;
  for (auto& [u, v] : pairs) diff.push_back(u - v);
  CHECK(stats::sample_variance(diff) < 0.02);
}

TEST_CASE("symplectic eigenvalues invariant under the passive and active ops") {
  const GaussianState s = attach_vacuum(two_mode_squeezed_vacuum(1.2), 1);
  const auto base = s.symplectic_eigenvalues();
  const auto check_same = [&base](const GaussianState& t) {
    const auto got = t.symplectic_eigenvalues();
    REQUIRE(got.size() == base.size());
    for (size_t i = 0; i < base.size(); ++i) {
      CHECK(got[i] == doctest::Approx(base[i]).epsilon(1e-9));
    }
  };
  check_same(phase_shift(s, 0, 1.234));
  check_same(beamsplitter(s, 0, 2, 0.42));
  check_same(displace(s, 1, 0.3, -0.8));
  check_same(qnd_sum(s, 0, 2, 0.7, 0.9));
}

TEST_CASE("operations on beam 1 leave every Bob marginal untouched") {
  const GaussianState s = attach_vacuum(two_mode_squeezed_vacuum(1.0), 1);
  const std::vector<GaussianState> variants = {
      phase_shift(s, 0, 0.9),
      displace(s, 0, 1.1, -0.4),
      beamsplitter(s, 0, 2, 0.8),
      qnd_sum(s, 0, 2, 0.3, 1.7),
  };
  for (double phi = 0.0; phi < 2.0 * kPi; phi += kPi / 7.0) {
    const auto want = s.quadrature_moments(QuadratureSpec(1, phi));
    for (const auto& t : variants) {
      const auto got = t.quadrature_moments(QuadratureSpec(1, phi));
      CHECK(got.first == doctest::Approx(want.first).epsilon(1e-12));
      CHECK(got.second == doctest::Approx(want.second).epsilon(1e-12));
    }
  }
}

TEST_CASE("random op sequences keep states physical and Bob-blind") {
  // Hand-rolled property test: arbitrary chains of beam-1-side operations
  // must preserve the symplectic spectrum and every Bob marginal.
  NormalSampler gen(2024);
  for (int trial = 0; trial < 25; ++trial) {
    const double r = 1.5 * gen.uniform();
    GaussianState state = attach_vacuum(two_mode_squeezed_vacuum(r), 1);
    const auto spectrum = state.symplectic_eigenvalues();
    const GaussianState original = state;
    for (int step = 0; step < 6; ++step) {
      const double pick = gen.uniform();
      const double a = 2.0 * kPi * gen.uniform();
      const double b = 2.0 * gen.uniform() - 1.0;
      if (pick < 0.25) {
        state = phase_shift(state, 0, a);
      } else if (pick < 0.5) {
        state = displace(state, 0, b, -b);
      } else if (pick < 0.75) {
        state = beamsplitter(state, 0, 2, 0.5 + 0.5 * gen.uniform());
      } else {
        state = qnd_sum(state, 0, 2, a, b);
      }
    }
    const auto nus = state.symplectic_eigenvalues();
    for (size_t i = 0; i < nus.size(); ++i) {
      CHECK(nus[i] == doctest::Approx(spectrum[i]).epsilon(1e-9));
    }
    for (double phi : {0.0, 1.0, 2.5, 4.4}) {
      const auto want = original.quadrature_moments(QuadratureSpec(1, phi));
      const auto got = state.quadrature_moments(QuadratureSpec(1, phi));
      CHECK(got.first == doctest::Approx(want.first).epsilon(1e-9));
      CHECK(got.second == doctest::Approx(want.second).epsilon(1e-9));
    }
  }
}

TEST_CASE("qnd_sum writes the rotated quadrature onto the target") {
  const GaussianState s = attach_vacuum(two_mode_squeezed_vacuum(0.8), 1);
  const double phase = 0.6;
  const double gain = 1.3;
  const GaussianState t = qnd_sum(s, 0, 2, phase, gain);
  // Source's coupled quadrature is untouched.
  const auto src = t.quadrature_moments(QuadratureSpec(0, phase));
  CHECK(src.second ==
        doctest::Approx(s.quadrature_moments(QuadratureSpec(0, phase)).second)
            .epsilon(1e-12));
  // Target picks up gain^2 times the source variance on top of vacuum.
  const auto tgt = t.quadrature_moments(QuadratureSpec(2, phase));
  CHECK(tgt.second ==
        doctest::Approx(1.0 + gain * gain * std::cosh(1.6)).epsilon(1e-12));
}
