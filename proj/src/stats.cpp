#include "qpk/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace qpk::stats {

namespace {

// Acklam's rational approximation to the standard normal quantile,
// refined with one Halley step. Plenty for starting points and z-scores.
double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument("quantile argument must be in (0, 1)");
  }
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = normal_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

// Regularized lower incomplete gamma by series expansion (x < a + 1).
double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int i = 0; i < 1000; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * 1e-15) {
      break;
    }
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Regularized upper incomplete gamma by continued fraction (x >= a + 1).
double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 1000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-15) {
      break;
    }
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

double two_sided_from_cdf(double cdf) {
  return std::min(1.0, 2.0 * std::min(cdf, 1.0 - cdf));
}

double log_binom_pmf(int k, int n, double p) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) +
         k * std::log(p) + (n - k) * std::log1p(-p);
}

}  // namespace

double sample_mean(std::span<const double> xs) {
  if (xs.empty()) {
    throw std::invalid_argument("empty sample");
  }
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double sample_variance(std::span<const double> xs) {
  if (xs.size() < 2) {
    throw std::invalid_argument("variance needs at least two samples");
  }
  const double mu = sample_mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - mu) * (x - mu);
  return s / static_cast<double>(xs.size() - 1);
}

double sample_covariance(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) {
    throw std::invalid_argument("covariance needs two equal samples of size >= 2");
  }
  const double mx = sample_mean(xs);
  const double my = sample_mean(ys);
  double s = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    s += (xs[i] - mx) * (ys[i] - my);
  }
  return s / static_cast<double>(xs.size() - 1);
}

VarianceCi sample_variance_ci(std::span<const double> xs, double confidence) {
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw std::invalid_argument("confidence must be in (0, 1)");
  }
  const double v = sample_variance(xs);
  const double dof = static_cast<double>(xs.size() - 1);
  const double tail = 0.5 * (1.0 - confidence);
  VarianceCi ci;
  ci.variance = v;
  if (v == 0.0) {
    return ci;
  }
  ci.lo = dof * v / chi2_quantile(1.0 - tail, dof);
  ci.hi = dof * v / chi2_quantile(tail, dof);
  return ci;
}

TestResult variance_test(std::span<const double> xs, double sigma2_0, double alpha) {
  if (xs.size() < 30) {
    throw std::invalid_argument("variance test needs at least 30 samples");
  }
  if (!(sigma2_0 > 0.0)) {
    throw std::invalid_argument("null variance must be positive");
  }
  const double v = sample_variance(xs);
  if (v == 0.0) {
    throw std::invalid_argument("degenerate sample");
  }
  const double dof = static_cast<double>(xs.size() - 1);
  TestResult res;
  res.statistic = dof * v / sigma2_0;
  res.p_value = two_sided_from_cdf(chi2_cdf(res.statistic, dof));
  res.n = static_cast<int>(xs.size());
  res.null_description = "Var = " + std::to_string(sigma2_0);
  res.alpha = alpha;
  res.reject = res.p_value < alpha;
  return res;
}

TestResult mean_test(std::span<const double> xs, double mu0, double alpha) {
  if (xs.size() < 30) {
    throw std::invalid_argument("mean test needs at least 30 samples");
  }
  const double v = sample_variance(xs);
  if (v == 0.0) {
    throw std::invalid_argument("degenerate sample");
  }
  TestResult res;
  res.n = static_cast<int>(xs.size());
  res.statistic = (sample_mean(xs) - mu0) / std::sqrt(v / res.n);
  res.p_value = two_sided_from_cdf(normal_cdf(res.statistic));
  res.null_description = "mean = " + std::to_string(mu0);
  res.alpha = alpha;
  res.reject = res.p_value < alpha;
  return res;
}

TestResult ks_two_sample(std::span<const double> a, std::span<const double> b, double alpha) {
  if (a.size() < 50 || b.size() < 50) {
    throw std::invalid_argument("KS test needs at least 50 samples per side");
  }
  std::vector<double> xs(a.begin(), a.end());
  std::vector<double> ys(b.begin(), b.end());
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  const double na = static_cast<double>(xs.size());
  const double nb = static_cast<double>(ys.size());
  double d = 0.0;
  size_t i = 0, j = 0;
  while (i < xs.size() && j < ys.size()) {
    const double x = xs[i];
    const double y = ys[j];
    if (x <= y) ++i;
    if (y <= x) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  const double ne = std::sqrt(na * nb / (na + nb));
  TestResult res;
  res.statistic = d;
  res.p_value = ks_tail((ne + 0.12 + 0.11 / ne) * d);
  res.n = static_cast<int>(a.size() + b.size());
  res.null_description = "same distribution";
  res.alpha = alpha;
  res.reject = res.p_value < alpha;
  return res;
}

double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double gamma_p(double a, double x) {
  if (!(a > 0.0) || x < 0.0) {
    throw std::invalid_argument("invalid incomplete gamma arguments");
  }
  if (x == 0.0) return 0.0;
  return x < a + 1.0 ? gamma_p_series(a, x) : 1.0 - gamma_q_cf(a, x);
}

double gamma_q(double a, double x) {
  if (!(a > 0.0) || x < 0.0) {
    throw std::invalid_argument("invalid incomplete gamma arguments");
  }
  if (x == 0.0) return 1.0;
  return x < a + 1.0 ? 1.0 - gamma_p_series(a, x) : gamma_q_cf(a, x);
}

double chi2_cdf(double x, double dof) {
  if (x <= 0.0) return 0.0;
  return gamma_p(0.5 * dof, 0.5 * x);
}

double chi2_quantile(double p, double dof) {
  if (!(p > 0.0 && p < 1.0) || !(dof > 0.0)) {
    throw std::invalid_argument("invalid chi-square quantile arguments");
  }
  // Wilson-Hilferty starting point, then bisection + Newton polish.
  const double z = normal_quantile(p);
  double x = dof * std::pow(1.0 - 2.0 / (9.0 * dof) + z * std::sqrt(2.0 / (9.0 * dof)), 3.0);
  if (!(x > 0.0)) x = 0.5 * dof;
  double lo = 0.0;
  double hi = std::max(4.0 * x, dof + 40.0 * std::sqrt(dof));
  while (chi2_cdf(hi, dof) < p) {
    hi *= 2.0;
  }
  x = std::clamp(x, lo + 1e-12, hi);
  for (int it = 0; it < 200; ++it) {
    const double f = chi2_cdf(x, dof) - p;
    if (f > 0.0) {
      hi = x;
    } else {
      lo = x;
    }
    // Chi-square density at x.
    const double logpdf = (0.5 * dof - 1.0) * std::log(x) - 0.5 * x -
                          std::lgamma(0.5 * dof) - 0.5 * dof * std::numbers::ln2;
    const double pdf = std::exp(logpdf);
    double next = pdf > 0.0 ? x - f / pdf : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) {
      next = 0.5 * (lo + hi);
    }
    if (std::abs(next - x) < 1e-12 * std::max(1.0, x)) {
      return next;
    }
    x = next;
  }
  return x;
}

double ks_tail(double lambda) {
  if (lambda <= 0.0) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    sum += sign * term;
    if (term < 1e-12 * std::max(sum, 1e-300)) {
      break;
    }
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

double binom_two_sided_p(int k, int n, double p0) {
  if (k < 0 || k > n || !(p0 > 0.0 && p0 < 1.0)) {
    throw std::invalid_argument("invalid binomial test arguments");
  }
  double lower = 0.0;
  for (int i = 0; i <= k; ++i) {
    lower += std::exp(log_binom_pmf(i, n, p0));
  }
  double upper = 0.0;
  for (int i = k; i <= n; ++i) {
    upper += std::exp(log_binom_pmf(i, n, p0));
  }
  return std::min(1.0, 2.0 * std::min(lower, upper));
}

double stouffer_p(std::span<const double> z_scores) {
  if (z_scores.empty()) {
    return 1.0;
  }
  double s = 0.0;
  for (double z : z_scores) s += z;
  const double combined = s / std::sqrt(static_cast<double>(z_scores.size()));
  return two_sided_from_cdf(normal_cdf(combined));
}

double two_proportion_p(int k1, int n1, int k2, int n2) {
  if (n1 < 1 || n2 < 1) {
    throw std::invalid_argument("need at least one trial per arm");
  }
  const double p1 = static_cast<double>(k1) / n1;
  const double p2 = static_cast<double>(k2) / n2;
  const double pooled = static_cast<double>(k1 + k2) / (n1 + n2);
  if (pooled == 0.0 || pooled == 1.0) {
    return 1.0;
  }
  const double se = std::sqrt(pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2));
  return two_sided_from_cdf(normal_cdf((p1 - p2) / se));
}

}  // namespace qpk::stats
