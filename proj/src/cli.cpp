#include "mfdlab/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>

#include "mfdlab/analytics.hpp"
#include "mfdlab/bernoulli.hpp"
#include "mfdlab/errors.hpp"
#include "mfdlab/learning.hpp"
#include "mfdlab/runner.hpp"
#include "mfdlab/simulation.hpp"

namespace mfdlab {

namespace {

using nlohmann::json;

constexpr std::uint64_t kCliNetworkTag = 1;
constexpr std::uint64_t kCliStateTag = 2;

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

// --- JSON config -----------------------------------------------------------

template <class T>
T take(const json& j, const std::string& field) {
  if constexpr (std::is_same_v<T, std::string>) {
    if (!j.is_string()) throw ParameterError(field, "expected a string");
    return j.get<std::string>();
  } else if constexpr (std::is_integral_v<T>) {
    if (!j.is_number_integer()) throw ParameterError(field, "expected an integer");
    if constexpr (std::is_unsigned_v<T>) {
      if (j.is_number_unsigned()) return j.get<T>();
      if (j.get<std::int64_t>() < 0) throw ParameterError(field, "must be nonnegative");
    }
    return j.get<T>();
  } else {
    if (!j.is_number()) throw ParameterError(field, "expected a number");
    return j.get<T>();
  }
}

template <class T>
std::vector<T> take_list(const json& j, const std::string& field) {
  if (!j.is_array()) throw ParameterError(field, "expected an array");
  std::vector<T> out;
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(take<T>(j[i], field + "[" + std::to_string(i) + "]"));
  return out;
}

using Setter = std::function<void(const json&, const std::string&)>;

void apply_object(const json& obj, const std::string& prefix,
                  const std::map<std::string, Setter>& setters) {
  if (!obj.is_object())
    throw ParameterError(prefix.empty() ? "config" : prefix, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    const std::string field = prefix.empty() ? key : prefix + "." + key;
    const auto it = setters.find(key);
    if (it == setters.end()) throw ParameterError(field, "unknown key");
    it->second(value, field);
  }
}

template <class T>
Setter into(T& dst) {
  return [&dst](const json& j, const std::string& f) { dst = take<T>(j, f); };
}

template <class T>
Setter into_list(std::vector<T>& dst) {
  return [&dst](const json& j, const std::string& f) { dst = take_list<T>(j, f); };
}

// --- output files ----------------------------------------------------------

class CsvFile {
 public:
  CsvFile(const ExperimentConfig& cfg, const std::string& command, const std::string& name) {
    std::filesystem::create_directories(cfg.out_dir);
    path_ = (std::filesystem::path(cfg.out_dir) / name).string();
    os_.open(path_, std::ios::binary | std::ios::trunc);
    if (!os_) throw std::runtime_error("cannot open " + path_ + " for writing");
    os_ << "# mfdlab " << command << '\n';
    os_ << "# seed " << cfg.seed << '\n';
    os_ << "# config " << config_to_json(cfg) << '\n';
  }
  std::ostream& stream() { return os_; }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ofstream os_;
};

MfdOptions mfd_options(const ExperimentConfig& c) {
  MfdOptions o;
  o.densities = c.densities;
  o.reps = c.reps;
  o.warmup_cycles = c.warmup_cycles;
  o.measure_cycles = c.measure_cycles;
  o.seed = c.seed;
  o.jobs = c.jobs;
  return o;
}

Policy load_policy(const std::string& name, const ExperimentConfig& c) {
  const PolicyKind kind = parse_policy_kind(name);
  if (kind != PolicyKind::Neural) return Policy::baseline(kind);
  if (c.weights.empty()) throw ParameterError("weights", "the neural policy needs a weights file");
  std::ifstream is(c.weights);
  if (!is) throw ParameterError("weights", "cannot open '" + c.weights + "'");
  auto [theta, hidden] = read_weights(is);
  return Policy::neural(std::move(theta), hidden);
}

void save_weights(const ExperimentConfig& c, const std::string& name, const Eigen::VectorXd& theta,
                  int hidden, std::ostream& out) {
  std::filesystem::create_directories(c.out_dir);
  const auto path = (std::filesystem::path(c.out_dir) / name).string();
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  os << "# seed " << c.seed << '\n';
  write_weights(os, theta, hidden);
  out << "weights: " << path << '\n';
}

Eigen::VectorXd starting_weights(const ExperimentConfig& c, int& hidden) {
  if (!c.weights.empty()) {
    std::ifstream is(c.weights);
    if (!is) throw ParameterError("weights", "cannot open '" + c.weights + "'");
    auto [theta, h] = read_weights(is);
    hidden = h;
    return theta;
  }
  hidden = c.trainer.hidden;
  return initial_weights(c.seed, c.trainer.init_scale, hidden);
}

MfdEstimate lqf_reference(const ExperimentConfig& c) {
  return estimate_mfd(c.network, Policy::lqf(), mfd_options(c));
}

// --- subcommands -----------------------------------------------------------

int cmd_simulate(const ExperimentConfig& c, std::ostream& out) {
  const Policy policy = load_policy(c.policies.front(), c);
  NetworkConfig nc = c.network;
  nc.seed = derive_seed(c.seed, 0, kCliNetworkTag);
  const Network net = build_network(nc);
  NetworkState s = init_bernoulli(net, c.k, derive_seed(c.seed, 0, kCliStateTag));
  const std::size_t vehicles = s.vehicle_count();
  const RunResult r = run(std::move(s), net, policy, c.steps);

  CsvFile f(c, "simulate", "simulate.csv");
  auto& os = f.stream();
  os << "step,vehicles,moved,flow\n";
  const double cells = static_cast<double>(net.total_cells());
  for (std::size_t t = 0; t < r.series.size(); ++t)
    os << t + 1 << ',' << vehicles << ',' << r.series[t].moved << ','
       << num(static_cast<double>(r.series[t].moved) / cells) << '\n';
  out << "simulate: " << r.series.size() << " steps, " << vehicles << " vehicles on "
      << net.total_cells() << " cells -> " << f.path() << '\n';
  return 0;
}

int cmd_mfd(const ExperimentConfig& c, std::ostream& out) {
  std::vector<Policy> policies;
  for (const auto& name : c.policies) policies.push_back(load_policy(name, c));
  for (const auto& policy : policies) {
    const MfdEstimate est = estimate_mfd(c.network, policy, mfd_options(c));
    const std::string tag(to_string(policy.kind()));
    const std::string prefix = est.policy + "," + num(est.lambda) + "," + num(est.delta) + "," +
                               num(est.turn_prob) + ",";
    CsvFile raw(c, "mfd", "mfd_" + tag + "_raw.csv");
    raw.stream() << "policy,lambda,delta,p,k,rep,flow\n";
    for (std::size_t i = 0; i < est.densities.size(); ++i)
      for (std::size_t r = 0; r < est.flows[i].size(); ++r)
        raw.stream() << prefix << num(est.densities[i]) << ',' << r << ','
                     << num(est.flows[i][r]) << '\n';
    CsvFile agg(c, "mfd", "mfd_" + tag + ".csv");
    agg.stream() << "policy,lambda,delta,p,k,mean,p5,p95\n";
    for (const auto& b : est.bands)
      agg.stream() << prefix << num(b.k) << ',' << num(b.mean) << ',' << num(b.p5) << ','
                   << num(b.p95) << '\n';
    out << "mfd " << tag << ": " << est.bands.size() << " densities x " << c.reps << " reps -> "
        << agg.path() << '\n';
  }
  return 0;
}

int cmd_cuts(const ExperimentConfig& c, std::ostream& out) {
  const CutEstimate cut = extreme_cuts(c.network.lambda, c.network.delta);
  CsvFile f(c, "cuts", "cuts.csv");
  f.stream() << "lambda,delta,u0,w0\n"
             << num(c.network.lambda) << ',' << num(c.network.delta) << ',' << num(cut.u0) << ','
             << num(cut.w0) << '\n';
  out << "cuts: u0 = w0 = " << num(cut.u0) << " -> " << f.path() << '\n';
  return 0;
}

int cmd_bernoulli(const ExperimentConfig& c, std::ostream& out) {
  std::vector<PolicyKind> kinds;
  for (const auto& name : c.policies) {
    const PolicyKind kind = parse_policy_kind(name);
    if (kind == PolicyKind::Neural)
      throw ParameterError("policy", "the binomial model covers lqf, sqf and rnd only");
    kinds.push_back(kind);
  }
  CsvFile f(c, "bernoulli", "bernoulli.csv");
  f.stream() << "policy,j,ell,k,q05,q95\n";
  const double qs[] = {0.05, 0.95};
  std::size_t rows = 0;
  for (const PolicyKind kind : kinds)
    for (const int j : c.cycles)
      for (const double k : c.densities) {
        const auto q = flow_quantiles(kind, j, c.network.mean_block_length, k, qs);
        f.stream() << to_string(kind) << ',' << j << ',' << c.network.mean_block_length << ','
                   << num(k) << ',' << num(q[0]) << ',' << num(q[1]) << '\n';
        ++rows;
      }
  out << "bernoulli: " << rows << " rows -> " << f.path() << '\n';
  return 0;
}

int cmd_train_rl(const ExperimentConfig& c, std::ostream& out) {
  int hidden = 0;
  Eigen::VectorXd theta0 = starting_weights(c, hidden);
  const MfdEstimate lqf = lqf_reference(c);
  const int g = min_green(PolicyKind::Neural, c.network.mean_block_length, c.network.lambda);
  const RewardSpec reward = RewardSpec::from_mfd(lqf, g);
  ReinforceOptions ro;
  ro.alpha = c.trainer.alpha;
  ro.beta = c.trainer.beta;
  ro.iterations = c.trainer.iterations;
  ro.seed = c.seed;
  const TrainerState st =
      reinforce_td(c.network, c.trainer.training_density, std::move(theta0), reward, ro, hidden);

  CsvFile f(c, "train-rl", "trace.csv");
  f.stream() << "iteration,eta,grad_norm,pi_s1,pi_s2\n";
  for (const auto& t : st.traces)
    f.stream() << t.iteration << ',' << num(t.eta) << ',' << num(t.grad_norm) << ','
               << num(t.pi_s1) << ',' << num(t.pi_s2) << '\n';
  const auto& last = st.traces.back();
  out << "train-rl: " << st.iteration << " iterations, eta " << num(last.eta) << ", pi(s1) "
      << num(last.pi_s1) << ", pi(s2) " << num(last.pi_s2) << " -> " << f.path() << '\n';
  save_weights(c, "weights_rl.txt", st.theta, hidden, out);
  return 0;
}

int cmd_train_supervised(const ExperimentConfig& c, std::ostream& out) {
  int hidden = 0;
  Eigen::VectorXd theta0 = starting_weights(c, hidden);
  const auto [s1, s2] = extreme_states(c.network.mean_block_length);
  const Eigen::VectorXd theta = train_supervised(s1, s2, std::move(theta0), c.trainer.tolerance, {}, hidden);
  out << "train-supervised: pi(s1) " << num(policy_forward(theta, s1, hidden)) << ", pi(s2) "
      << num(policy_forward(theta, s2, hidden)) << '\n';
  save_weights(c, "weights_supervised.txt", theta, hidden, out);
  return 0;
}

int cmd_random_search(const ExperimentConfig& c, std::ostream& out) {
  const MfdEstimate lqf = lqf_reference(c);
  const auto trials = random_search(c.trials, c.seed, c.network, mfd_options(c), lqf, c.trainer.hidden);
  CsvFile f(c, "random-search", "random_search.csv");
  f.stream() << "trial,competitive,min_ratio\n";
  int hits = 0;
  for (std::size_t t = 0; t < trials.size(); ++t) {
    double worst = INFINITY;
    for (std::size_t i = 0; i < lqf.bands.size(); ++i)
      if (lqf.bands[i].mean > 0) worst = std::min(worst, trials[t].mfd.bands[i].mean / lqf.bands[i].mean);
    hits += trials[t].competitive;
    f.stream() << t << ',' << int{trials[t].competitive} << ',' << num(worst) << '\n';
  }
  out << "random-search: " << hits << "/" << trials.size() << " competitive -> " << f.path() << '\n';
  return 0;
}

int cmd_detect(const ExperimentConfig& c, std::ostream& out) {
  std::vector<Policy> policies;
  for (const auto& name : c.policies) policies.push_back(load_policy(name, c));
  CsvFile f(c, "detect", "detect.csv");
  f.stream() << "policy,lambda,p,k,permanent,green_fraction,mean_flow,lqf_mean_flow,detaching\n";
  DetachingOptions opts;
  opts.jobs = c.jobs;
  for (const auto& policy : policies)
    for (const double k : c.densities) {
      if (k <= 0.0 || k >= 1.0) continue;
      const DetachingReport r = detect_detaching(c.network, policy, k, c.horizon, c.seed, opts);
      f.stream() << to_string(policy.kind()) << ',' << num(c.network.lambda) << ','
                 << num(c.network.turn_prob) << ',' << num(k) << ',' << int{r.permanent_colors}
                 << ',' << num(r.green_street_fraction) << ',' << num(r.mean_flow) << ','
                 << num(r.lqf_mean_flow) << ',' << int{r.detaching} << '\n';
      if (r.detaching)
        out << "detect " << to_string(policy.kind()) << ": detaching at k = " << num(k) << '\n';
    }
  out << "detect -> " << f.path() << '\n';
  return 0;
}

// Aggregate rows keyed by density, read back from an `mfd` output file.
std::vector<Band> read_aggregate(const std::string& path, const std::string& field) {
  std::ifstream is(path);
  if (!is) throw ParameterError(field, "cannot open '" + path + "'");
  std::vector<Band> bands;
  std::string line;
  bool header = true;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      if (line != "policy,lambda,delta,p,k,mean,p5,p95")
        throw ParameterError(field, "'" + path + "' is not an aggregate MFD file");
      header = false;
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (cells.size() != 8) throw ParameterError(field, "malformed row in '" + path + "'");
    try {
      bands.push_back({std::stod(cells[4]), std::stod(cells[5]), std::stod(cells[6]),
                       std::stod(cells[7])});
    } catch (const std::exception&) {
      throw ParameterError(field, "malformed number in '" + path + "'");
    }
  }
  if (bands.empty()) throw ParameterError(field, "'" + path + "' has no rows");
  return bands;
}

int cmd_compare(const ExperimentConfig& c, const std::string& a, const std::string& b,
                std::ostream& out) {
  MfdEstimate ea;
  MfdEstimate eb;
  ea.bands = read_aggregate(a, "compare.first");
  eb.bands = read_aggregate(b, "compare.second");
  if (ea.bands.size() != eb.bands.size())
    throw ParameterError("compare.second", "density grids differ");
  CsvFile f(c, "compare", "compare.csv");
  f.stream() << "k,mean_a,p5_a,p95_a,mean_b,p5_b,p95_b,ratio,overlap\n";
  bool all_overlap = true;
  for (std::size_t i = 0; i < ea.bands.size(); ++i) {
    const Band& x = ea.bands[i];
    const Band& y = eb.bands[i];
    if (std::abs(x.k - y.k) > 1e-9) throw ParameterError("compare.second", "density grids differ");
    const bool overlap = std::max(x.p5, y.p5) <= std::min(x.p95, y.p95);
    all_overlap = all_overlap && overlap;
    f.stream() << num(x.k) << ',' << num(x.mean) << ',' << num(x.p5) << ',' << num(x.p95) << ','
               << num(y.mean) << ',' << num(y.p5) << ',' << num(y.p95) << ','
               << num(y.mean > 0 ? x.mean / y.mean : INFINITY) << ',' << int{overlap} << '\n';
  }
  out << "compare: first is " << (is_competitive(ea, eb) ? "" : "not ")
      << "competitive with second (>= " << kCompetitiveRatio * 100 << "% at every density); bands "
      << (all_overlap ? "overlap everywhere" : "separate somewhere") << " -> " << f.path() << '\n';
  return 0;
}

// --- flag plumbing ---------------------------------------------------------

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out, weights;
  std::vector<std::string> policies;
  std::optional<double> lambda, delta, p, k, alpha, beta, training_density, init_scale, tolerance;
  std::optional<int> ell, rows, cols, reps, jobs, steps, horizon, trials, warmup, measure, hidden;
  std::optional<std::int64_t> iterations;
  std::vector<double> densities;
  std::vector<int> cycles;
  std::vector<std::string> files;
};

void add_common(CLI::App* sc, Flags& f) {
  sc->add_option("--config", f.config, "JSON configuration file");
  sc->add_option("--seed", f.seed, "master seed (default: $MFDLAB_SEED or 1)");
  sc->add_option("--out", f.out, "output directory");
  sc->add_option("--policy", f.policies, "policies: lqf, sqf, rnd, neural")->delimiter(',');
  sc->add_option("--lambda", f.lambda, "E(block length)/E(green time)");
  sc->add_option("--delta", f.delta, "block length COV");
  sc->add_option("--p", f.p, "turning probability");
  sc->add_option("--ell", f.ell, "mean block length in cells");
  sc->add_option("--rows", f.rows);
  sc->add_option("--cols", f.cols);
  sc->add_option("--densities", f.densities, "comma-separated density grid")->delimiter(',');
  sc->add_option("--reps", f.reps, "replicates per density");
  sc->add_option("--weights", f.weights, "policy weights file");
  sc->add_option("--jobs", f.jobs, "worker threads, 0 = all");
  sc->add_option("--warmup-cycles", f.warmup);
  sc->add_option("--measure-cycles", f.measure);
}

ExperimentConfig resolve(const Flags& f) {
  ExperimentConfig c;
  if (const char* env = std::getenv("MFDLAB_SEED"); env && *env) {
    try {
      std::size_t used = 0;
      c.seed = std::stoull(env, &used);
      if (used != std::string(env).size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw ParameterError("MFDLAB_SEED", "not an unsigned integer");
    }
  }
  if (!f.config.empty()) {
    std::ifstream is(f.config);
    if (!is) throw ParameterError("config", "cannot open '" + f.config + "'");
    std::stringstream ss;
    ss << is.rdbuf();
    c = parse_config(ss.str(), c);
  }
  auto set = [](auto& dst, const auto& src) {
    if (src) dst = *src;
  };
  set(c.seed, f.seed);
  set(c.out_dir, f.out);
  set(c.weights, f.weights);
  if (!f.policies.empty()) c.policies = f.policies;
  set(c.network.lambda, f.lambda);
  set(c.network.delta, f.delta);
  set(c.network.turn_prob, f.p);
  set(c.network.mean_block_length, f.ell);
  set(c.network.rows, f.rows);
  set(c.network.cols, f.cols);
  if (!f.densities.empty()) c.densities = f.densities;
  set(c.reps, f.reps);
  set(c.jobs, f.jobs);
  set(c.warmup_cycles, f.warmup);
  set(c.measure_cycles, f.measure);
  set(c.k, f.k);
  set(c.steps, f.steps);
  set(c.horizon, f.horizon);
  set(c.trials, f.trials);
  if (!f.cycles.empty()) c.cycles = f.cycles;
  set(c.trainer.alpha, f.alpha);
  set(c.trainer.beta, f.beta);
  set(c.trainer.iterations, f.iterations);
  set(c.trainer.training_density, f.training_density);
  set(c.trainer.init_scale, f.init_scale);
  set(c.trainer.tolerance, f.tolerance);
  set(c.trainer.hidden, f.hidden);
  c.network.seed = c.seed;
  c.validate();
  return c;
}

}  // namespace

void ExperimentConfig::validate() const {
  network.validate();
  if (policies.empty()) throw ParameterError("policy", "at least one policy is required");
  for (const auto& name : policies) parse_policy_kind(name);
  if (densities.empty()) throw ParameterError("densities", "grid is empty");
  for (std::size_t i = 0; i < densities.size(); ++i) {
    if (!(densities[i] >= 0.0 && densities[i] <= 1.0))
      throw ParameterError("densities", "must lie in [0,1]");
    if (i > 0 && !(densities[i] > densities[i - 1]))
      throw ParameterError("densities", "must be strictly increasing");
  }
  if (reps < 2) throw ParameterError("reps", "must be at least 2");
  if (warmup_cycles < 0) throw ParameterError("warmup_cycles", "must be nonnegative");
  if (measure_cycles < 1) throw ParameterError("measure_cycles", "must be at least 1");
  if (jobs < 0) throw ParameterError("jobs", "must be nonnegative");
  if (!(trainer.alpha > 0.0)) throw ParameterError("trainer.alpha", "must be positive");
  if (!(trainer.beta > 0.0)) throw ParameterError("trainer.beta", "must be positive");
  if (trainer.iterations < 1) throw ParameterError("trainer.iterations", "must be at least 1");
  if (!(trainer.training_density >= 0.0 && trainer.training_density <= 1.0))
    throw ParameterError("trainer.training_density", "must lie in [0,1]");
  if (!(trainer.init_scale >= 0.0) || !std::isfinite(trainer.init_scale))
    throw ParameterError("trainer.init_scale", "must be a nonnegative number");
  if (!(trainer.tolerance > 0.0 && trainer.tolerance < 0.5))
    throw ParameterError("trainer.tolerance", "must lie in (0,0.5)");
  if (trainer.hidden < 1) throw ParameterError("trainer.hidden", "must be positive");
  if (!(k >= 0.0 && k <= 1.0)) throw ParameterError("k", "must lie in [0,1]");
  if (steps < 1) throw ParameterError("steps", "must be at least 1");
  if (horizon < 4) throw ParameterError("horizon", "must be at least 4");
  if (trials < 1) throw ParameterError("trials", "must be at least 1");
  if (cycles.empty()) throw ParameterError("cycles", "at least one cycle count is required");
  for (const int j : cycles)
    if (j < 1) throw ParameterError("cycles", "must be at least 1");
  if (out_dir.empty()) throw ParameterError("out", "must not be empty");
}

ExperimentConfig parse_config(const std::string& json_text, ExperimentConfig base) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParameterError("config", std::string("not valid JSON: ") + e.what());
  }
  ExperimentConfig c = std::move(base);
  int version = kConfigSchemaVersion;
  auto& n = c.network;
  auto& t = c.trainer;
  const std::map<std::string, Setter> network_keys = {
      {"rows", into(n.rows)},   {"cols", into(n.cols)},   {"ell", into(n.mean_block_length)},
      {"lambda", into(n.lambda)}, {"delta", into(n.delta)}, {"p", into(n.turn_prob)}};
  const std::map<std::string, Setter> trainer_keys = {
      {"alpha", into(t.alpha)},
      {"beta", into(t.beta)},
      {"iterations", into(t.iterations)},
      {"training_density", into(t.training_density)},
      {"init_scale", into(t.init_scale)},
      {"tolerance", into(t.tolerance)},
      {"hidden", into(t.hidden)}};
  const std::map<std::string, Setter> top = {
      {"schema_version", into(version)},
      {"network", [&](const json& j, const std::string& f) { apply_object(j, f, network_keys); }},
      {"trainer", [&](const json& j, const std::string& f) { apply_object(j, f, trainer_keys); }},
      {"policy",
       [&](const json& j, const std::string& f) {
         c.policies = j.is_array() ? take_list<std::string>(j, f)
                                   : std::vector<std::string>{take<std::string>(j, f)};
       }},
      {"densities", into_list(c.densities)},
      {"reps", into(c.reps)},
      {"warmup_cycles", into(c.warmup_cycles)},
      {"measure_cycles", into(c.measure_cycles)},
      {"seed", into(c.seed)},
      {"out", into(c.out_dir)},
      {"jobs", into(c.jobs)},
      {"weights", into(c.weights)},
      {"k", into(c.k)},
      {"steps", into(c.steps)},
      {"horizon", into(c.horizon)},
      {"trials", into(c.trials)},
      {"cycles", into_list(c.cycles)}};
  apply_object(doc, "", top);
  if (version != kConfigSchemaVersion)
    throw ParameterError("schema_version", "unsupported version " + std::to_string(version));
  return c;
}

std::string config_to_json(const ExperimentConfig& c) {
  json j;
  j["schema_version"] = kConfigSchemaVersion;
  j["network"] = {{"rows", c.network.rows},     {"cols", c.network.cols},
                  {"ell", c.network.mean_block_length}, {"lambda", c.network.lambda},
                  {"delta", c.network.delta},   {"p", c.network.turn_prob}};
  j["policy"] = c.policies;
  j["densities"] = c.densities;
  j["reps"] = c.reps;
  j["warmup_cycles"] = c.warmup_cycles;
  j["measure_cycles"] = c.measure_cycles;
  j["trainer"] = {{"alpha", c.trainer.alpha},
                  {"beta", c.trainer.beta},
                  {"iterations", c.trainer.iterations},
                  {"training_density", c.trainer.training_density},
                  {"init_scale", c.trainer.init_scale},
                  {"tolerance", c.trainer.tolerance},
                  {"hidden", c.trainer.hidden}};
  j["seed"] = c.seed;
  j["out"] = c.out_dir;
  j["jobs"] = c.jobs;
  j["weights"] = c.weights;
  j["k"] = c.k;
  j["steps"] = c.steps;
  j["horizon"] = c.horizon;
  j["trials"] = c.trials;
  j["cycles"] = c.cycles;
  return j.dump();
}

int run_subcommand(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Traffic signal control on torus networks: simulation, MFDs and learning"};
  app.require_subcommand(1);
  Flags f;

  auto* simulate = app.add_subcommand("simulate", "run one network and write its flow series");
  auto* mfd = app.add_subcommand("mfd", "estimate MFDs with percentile bands");
  auto* cuts = app.add_subcommand("cuts", "extreme cut speeds u0, w0");
  auto* bernoulli = app.add_subcommand("bernoulli", "binomial flow quantile model");
  auto* train_rl = app.add_subcommand("train-rl", "REINFORCE-TD at constant density");
  auto* train_sup = app.add_subcommand("train-supervised", "fit the two extreme states");
  auto* search = app.add_subcommand("random-search", "score random policy weights");
  auto* detect = app.add_subcommand("detect", "look for detaching at each density");
  auto* compare = app.add_subcommand("compare", "compare two aggregate MFD files");
  for (auto* sc : {simulate, mfd, cuts, bernoulli, train_rl, train_sup, search, detect, compare})
    add_common(sc, f);

  simulate->add_option("--k", f.k, "initial density");
  simulate->add_option("--steps", f.steps);
  detect->add_option("--horizon", f.horizon, "steps per run");
  search->add_option("--trials", f.trials);
  bernoulli->add_option("--cycles", f.cycles, "cycle counts j")->delimiter(',');
  for (auto* sc : {train_rl, train_sup, search}) {
    sc->add_option("--init-scale", f.init_scale, "sd of the initial weights");
    sc->add_option("--hidden", f.hidden, "hidden width");
  }
  train_rl->add_option("--iterations", f.iterations);
  train_rl->add_option("--training-density", f.training_density);
  train_rl->add_option("--alpha", f.alpha);
  train_rl->add_option("--beta", f.beta);
  train_sup->add_option("--tolerance", f.tolerance);
  compare->add_option("files", f.files, "first and second aggregate CSV")->required()->expected(2);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    const ExperimentConfig c = resolve(f);
    if (simulate->parsed()) return cmd_simulate(c, out);
    if (mfd->parsed()) return cmd_mfd(c, out);
    if (cuts->parsed()) return cmd_cuts(c, out);
    if (bernoulli->parsed()) return cmd_bernoulli(c, out);
    if (train_rl->parsed()) return cmd_train_rl(c, out);
    if (train_sup->parsed()) return cmd_train_supervised(c, out);
    if (search->parsed()) return cmd_random_search(c, out);
    if (detect->parsed()) return cmd_detect(c, out);
    if (compare->parsed()) return cmd_compare(c, f.files[0], f.files[1], out);
  } catch (const ParameterError& e) {
    err << "error: invalid parameter " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace mfdlab
