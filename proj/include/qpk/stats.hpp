#pragma once

#include <span>
#include <string>
#include <vector>

namespace qpk::stats {

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  int n = 0;
  std::string null_description;
  double alpha = 0.05;
  bool reject = false;
};

double sample_mean(std::span<const double> xs);
// Unbiased (n-1 denominator).
double sample_variance(std::span<const double> xs);
double sample_covariance(std::span<const double> xs, std::span<const double> ys);

struct VarianceCi {
  double variance = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

// Chi-square confidence interval for the variance under normality.
VarianceCi sample_variance_ci(std::span<const double> xs, double confidence);

// Two-sided chi-square test of Var = sigma2_0.
TestResult variance_test(std::span<const double> xs, double sigma2_0, double alpha);

// Two-sided z-test of mean = mu0 (sample standard deviation plugged in).
TestResult mean_test(std::span<const double> xs, double mu0, double alpha);

// Two-sample Kolmogorov-Smirnov with the asymptotic tail probability.
TestResult ks_two_sample(std::span<const double> a, std::span<const double> b, double alpha);

// Distribution helpers.
double normal_cdf(double x);
// Regularized lower/upper incomplete gamma.
double gamma_p(double a, double x);
double gamma_q(double a, double x);
double chi2_cdf(double x, double dof);
// Inverse of chi2_cdf in p.
double chi2_quantile(double p, double dof);
// Asymptotic KS tail Q(lambda) = 2 sum_{j>=1} (-1)^{j-1} e^{-2 j^2 lambda^2}.
double ks_tail(double lambda);

// Exact two-sided binomial test of k successes in n trials at rate p0,
// defined as min(1, 2 min(P[X <= k], P[X >= k])).
double binom_two_sided_p(int k, int n, double p0);

// Combines independent two-sided z-scores (Stouffer) into one two-sided p.
double stouffer_p(std::span<const double> z_scores);

// Two-sided p for the difference of two proportions.
double two_proportion_p(int k1, int n1, int k2, int n2);

}  // namespace qpk::stats
