#include "mfdlab/bernoulli.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace mfdlab {

namespace {

// Slack when comparing a computed CDF against a requested percentile.
constexpr double kCdfSlack = 1e-12;

void check_prob(double p, const char* field) {
  if (!(p >= 0.0 && p <= 1.0)) throw ParameterError(field, "must lie in [0,1]");
}

void check_percentiles(std::span<const double> ps) {
  for (double q : ps)
    if (!(q > 0.0 && q < 1.0)) throw ParameterError("percentiles", "must lie in (0,1)");
}

// Smallest n in [0, max_n] with cdf(n) >= q.
long invert(const std::function<double(long)>& cdf, long max_n, double q) {
  for (long n = 0; n < max_n; ++n)
    if (cdf(n) >= q - kCdfSlack) return n;
  return max_n;
}

}  // namespace

double binom_cdf(int n, double p, long x) {
  if (n < 0) throw ParameterError("n", "must be nonnegative");
  check_prob(p, "p");
  if (x < 0) return 0.0;
  if (x >= n) return 1.0;
  if (p == 0.0) return 1.0;
  if (p == 1.0) return 0.0;
  const double lp = std::log(p);
  const double lq = std::log1p(-p);
  const double lnf = std::lgamma(n + 1.0);
  // Kahan-compensated sum of nonnegative terms keeps the result monotone in x.
  double sum = 0.0;
  double comp = 0.0;
  for (long i = 0; i <= x; ++i) {
    const double term = std::exp(lnf - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0) +
                                 static_cast<double>(i) * lp + static_cast<double>(n - i) * lq);
    const double y = term - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  return std::min(1.0, sum);
}

double fn_j(PolicyKind policy, int j, int ell, double k, long n) {
  if (ell < 1) throw ParameterError("ell", "must be positive");
  check_prob(k, "k");
  const double f = binom_cdf(2 * ell, k, n);
  switch (policy) {
    case PolicyKind::Random:
      if (j < 0) throw ParameterError("j", "must be nonnegative");
      return f;
    case PolicyKind::Lqf:
      if (j < 1) throw ParameterError("j", "must be at least 1 for LQF");
      return std::pow(f, 2.0 * j);
    case PolicyKind::Sqf:
      if (j < 1) throw ParameterError("j", "must be at least 1 for SQF");
      return 1.0 - std::pow(1.0 - f, 2.0 * j);
    case PolicyKind::Neural:
      break;
  }
  throw ParameterError("policy", "no closed form for neural policies");
}

std::vector<double> flow_quantiles(PolicyKind policy, int j, int ell, double k,
                                   std::span<const double> percentiles) {
  check_percentiles(percentiles);
  const long max_n = 2L * ell;
  const auto cdf = [&](long n) { return fn_j(policy, j, ell, k, n); };
  (void)cdf(0);  // parameter validation even when no percentiles are asked
  std::vector<double> out;
  out.reserve(percentiles.size());
  for (double q : percentiles)
    out.push_back(static_cast<double>(invert(cdf, max_n, q)) / (8.0 * ell));
  return out;
}

std::vector<long> min_two_binomials_quantiles(int n, double k,
                                              std::span<const double> percentiles) {
  if (n < 1) throw ParameterError("n", "must be at least 1");
  check_prob(k, "k");
  check_percentiles(percentiles);
  const auto cdf = [&](long m) {
    const double f = binom_cdf(2 * n, k, m);
    return 1.0 - (1.0 - f) * (1.0 - f);
  };
  std::vector<long> out;
  out.reserve(percentiles.size());
  for (double q : percentiles) out.push_back(invert(cdf, 2L * n, q));
  return out;
}

}  // namespace mfdlab
