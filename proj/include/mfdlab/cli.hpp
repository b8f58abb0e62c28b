#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mfdlab/network.hpp"

namespace mfdlab {

inline constexpr int kConfigSchemaVersion = 1;

struct TrainerConfig {
  double alpha = 0.2;
  double beta = 0.05;
  std::int64_t iterations = 20000;
  double training_density = 0.2;
  double init_scale = 0.01;  // sd of the N(0, s^2) initial weights
  double tolerance = 0.01;   // supervised stopping rule
  int hidden = 16;
};

/// Everything a subcommand needs, after defaults, MFDLAB_SEED, the JSON
/// file and the command-line flags have been applied in that order.
struct ExperimentConfig {
  NetworkConfig network;
  std::vector<std::string> policies = {"lqf"};
  std::vector<double> densities = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  int reps = 50;
  int warmup_cycles = 4;
  int measure_cycles = 4;
  TrainerConfig trainer;
  std::uint64_t seed = 1;
  std::string out_dir = ".";
  int jobs = 0;
  std::string weights;

  // Subcommand knobs.
  double k = 0.5;             // simulate, detect
  int steps = 1000;           // simulate
  int horizon = 4000;         // detect
  int trials = 100;           // random-search
  std::vector<int> cycles = {1, 2, 4};  // bernoulli

  /// Throws ParameterError naming the first offending field.
  void validate() const;
};

/// Parses a JSON configuration document onto `base`. Unknown keys and
/// ill-typed values raise ParameterError with the dotted key as field.
ExperimentConfig parse_config(const std::string& json_text, ExperimentConfig base = {});

/// JSON rendering of the resolved configuration, on a single line.
std::string config_to_json(const ExperimentConfig& cfg);

/// Entry point of the `mfdlab` tool. argv[0] is the program name. Returns
/// the process exit status; 0 on success, 2 on invalid input, 1 otherwise.
int run_subcommand(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mfdlab
