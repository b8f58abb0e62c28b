#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mfdlab/bernoulli.hpp"
#include "mfdlab/network.hpp"
#include "mfdlab/policy.hpp"

namespace mfdlab {

/// Mean and 5th/95th percentile of the replicate flows at one density.
struct Band {
  double k = 0.0;
  double mean = 0.0;
  double p5 = 0.0;
  double p95 = 0.0;
};

struct MfdEstimate {
  std::string policy;  // "lqf", "sqf", "rnd" or "neural"
  double lambda = 0.0;
  double delta = 0.0;
  double turn_prob = 0.0;
  std::vector<double> densities;
  std::vector<std::vector<double>> flows;            // [density][rep]
  std::vector<std::vector<double>> realized_density; // [density][rep]
  std::vector<Band> bands;
};

struct MfdOptions {
  std::vector<double> densities = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  int reps = 50;
  int warmup_cycles = 4;
  int measure_cycles = 4;
  std::uint64_t seed = 1;
  int jobs = 0;  // 0 = all hardware threads
};

/// Empirical quantile with linear interpolation between order statistics.
double percentile(std::vector<double> values, double q);

std::vector<Band> summarize(const std::vector<double>& densities,
                            const std::vector<std::vector<double>>& flows);

/// Steady-state MFD of `policy` deployed at every intersection. Each
/// (density, rep) task builds its own network and Bernoulli initial state
/// from seeds derived from opts.seed, discards warmup_cycles * 2g steps and
/// averages the flow over the next measure_cycles * 2g steps.
MfdEstimate estimate_mfd(const NetworkConfig& cfg, const Policy& policy, const MfdOptions& opts);

/// Extreme cut speeds; the free-flow and congested speeds coincide.
struct CutEstimate {
  double u0 = 0.0;
  double w0 = 0.0;
  double free_flow_cut(double k) const noexcept { return u0 * k; }
  double congested_cut(double k) const noexcept { return w0 * (1.0 - k); }
};

CutEstimate extreme_cuts(double lambda, double delta);

/// True iff the [p5, p95] bands intersect at every density in [lo, hi].
/// The two estimates must share their density grid on that range.
bool overlap_test(const MfdEstimate& a, const MfdEstimate& b, double lo = 0.0, double hi = 1.0);

enum class Skew { Left, Symmetric, Right };
const char* to_string(Skew s) noexcept;

inline constexpr double kSkewTolerance = 0.05;

/// Density of peak mean flow, refined by a parabola through the best grid
/// point and its neighbours.
double peak_density(const MfdEstimate& mfd);

/// Left if the peak lies below 0.5 - tau, right if above 0.5 + tau.
/// Needs at least five densities reaching 0.1 and 0.9.
Skew skewness(const MfdEstimate& mfd, double tau = kSkewTolerance);

struct DetachingOptions {
  int reps = 3;
  int jobs = 0;
};

struct DetachingReport {
  bool permanent_colors = false;     // no phase changed in the last quarter
  double green_street_fraction = 0;  // streets green at every node throughout
  double mean_flow = 0;              // over the last quarter
  double lqf_mean_flow = 0;          // LQF from the same initial states
  bool detaching = false;            // mean_flow > lqf_mean_flow
};

DetachingReport detect_detaching(const NetworkConfig& cfg, const Policy& policy, double k,
                                 int horizon, std::uint64_t seed,
                                 const DetachingOptions& opts = {});

}  // namespace mfdlab
