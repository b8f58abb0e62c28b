#pragma once

#include <span>
#include <vector>

#include "mfdlab/policy.hpp"

namespace mfdlab {

/// P(X <= x) for X ~ Bin(n, p). Exactly 0 below the support and exactly 1
/// from n upward.
double binom_cdf(int n, double p, long x);

/// CDF after j cycles of the number of vehicles waiting on one axis, with
/// block length ell and density k. The base law is Bin(2 ell, k); LQF takes
/// the maximum and SQF the minimum of 2j independent copies, RND keeps it.
/// LQF and SQF require j >= 1.
double fn_j(PolicyKind policy, int j, int ell, double k, long n);

/// Quantiles of the per-lane intersection flow Q = N / (8 ell) (free-flow
/// speed 1), obtained by inverting fn_j on the integer support of N.
std::vector<double> flow_quantiles(PolicyKind policy, int j, int ell, double k,
                                   std::span<const double> percentiles);

/// Quantiles of min(X1, X2), Xi i.i.d. Bin(2n, k), as vehicle counts.
std::vector<long> min_two_binomials_quantiles(int n, double k,
                                              std::span<const double> percentiles);

}  // namespace mfdlab
