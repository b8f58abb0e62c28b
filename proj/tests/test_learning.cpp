#include <doctest.h>

#include <cmath>
#include <random>

#include "mfdlab/learning.hpp"

using namespace mfdlab;

namespace {

RewardSpec flat_baseline(double level, int g) {
  RewardSpec r;
  r.densities = {0.1, 0.5, 0.9};
  r.flows = {level, level, level};
  r.g = g;
  return r;
}

}  // namespace

TEST_CASE("advantage reward examples") {
  const RewardSpec r02 = flat_baseline(0.2, 20);
  CHECK(advantage_reward(0, 0.5, r02) == doctest::Approx(-0.2).epsilon(1e-15));
  CHECK(advantage_reward(16, 0.5, r02) == doctest::Approx(0.0).epsilon(1e-15));  // 20*4*0.2
  const RewardSpec r03 = flat_baseline(0.3, 20);
  CHECK(advantage_reward(40, 0.5, r03) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK_THROWS_AS(advantage_reward(1, 0.5, flat_baseline(0.1, 0)), ParameterError);
}

TEST_CASE("baseline interpolation") {
  RewardSpec r;
  r.densities = {0.2, 0.4};
  r.flows = {0.1, 0.3};
  r.g = 1;
  CHECK(r.baseline(0.0) == 0.0);
  CHECK(r.baseline(0.1) == doctest::Approx(0.05));
  CHECK(r.baseline(0.3) == doctest::Approx(0.2));
  CHECK(r.baseline(0.4) == doctest::Approx(0.3));
  CHECK(r.baseline(0.7) == doctest::Approx(0.15));
  CHECK(r.baseline(1.0) == 0.0);
  CHECK_THROWS_AS(r.baseline(1.2), ParameterError);

  MfdEstimate e;
  e.bands = {{0.3, 0.2, 0.1, 0.3}, {0.6, 0.25, 0.2, 0.3}};
  const RewardSpec f = RewardSpec::from_mfd(e, 20);
  CHECK(f.g == 20);
  CHECK(f.baseline(0.3) == 0.2);
  CHECK(f.baseline(0.6) == 0.25);
}

TEST_CASE("injected transition reproduces the three update lines") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n;
  for (int t = 0; t < 20; ++t) {
    TrainerState st;
    st.theta = sample_weights(t, 1.0);
    st.eta = n(rng);
    st.alpha = 0.2;
    st.beta = 0.05;
    const double R = n(rng);
    Eigen::VectorXd grad(st.theta.size());
    for (auto& g : grad) g = n(rng);

    const double eta0 = st.eta;
    const Eigen::VectorXd theta0 = st.theta;
    const double G = reinforce_td_update(st, R, grad);
    const double G_ref = R - eta0;
    CHECK(G == G_ref);
    CHECK(st.eta == eta0 + 0.05 * G_ref);
    const Eigen::VectorXd theta_ref = theta0 + 0.2 * G_ref * grad;
    CHECK((st.theta - theta_ref).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK(st.iteration == 1);
  }

  SUBCASE("first iteration from eta = 0") {
    TrainerState st;
    st.theta = Eigen::VectorXd::Zero(416);
    const Eigen::VectorXd grad = Eigen::VectorXd::Ones(416);
    const double G = reinforce_td_update(st, 0.7, grad);
    CHECK(G == 0.7);
    CHECK(st.eta == 0.05 * 0.7);
    CHECK(st.theta[0] == 0.2 * 0.7);
  }
}

TEST_CASE("constant reward drives eta to c and G to zero") {
  for (double c : {-0.3, 0.05, 1.5}) {
    TrainerState st;
    st.theta = Eigen::VectorXd::Zero(416);
    const Eigen::VectorXd grad = Eigen::VectorXd::Constant(416, 0.1);
    double G = 0;
    for (int i = 1; i <= 800; ++i) {
      G = reinforce_td_update(st, c, grad);
      // eta_i = c (1 - (1-beta)^i) exactly up to rounding.
      REQUIRE(std::abs(st.eta - c * (1 - std::pow(1 - st.beta, i))) <= 1e-12);
    }
    CHECK(std::abs(st.eta - c) <= 1e-12);
    CHECK(std::abs(G) <= 1e-12);
  }
}

TEST_CASE("eta stays within the observed reward range") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  TrainerState st;
  st.theta = Eigen::VectorXd::Zero(416);
  st.eta = 0.5;
  const double eta0 = std::abs(st.eta);
  const Eigen::VectorXd grad = Eigen::VectorXd::Zero(416);
  double max_r = 0;
  for (int i = 0; i < 5000; ++i) {
    const double R = u(rng);
    max_r = std::max(max_r, std::abs(R));
    reinforce_td_update(st, R, grad);
    REQUIRE(std::abs(st.eta) <= max_r + eta0);
  }
}

TEST_CASE("short REINFORCE-TD run") {
  NetworkConfig cfg;
  cfg.rows = 4;
  cfg.cols = 4;
  const RewardSpec reward = flat_baseline(0.15, min_green(PolicyKind::Neural, 10, 1.0));
  ReinforceOptions o;
  o.iterations = 60;
  o.seed = 3;
  const TrainerState a = reinforce_td(cfg, 0.3, initial_weights(3), reward, o);
  const TrainerState b = reinforce_td(cfg, 0.3, initial_weights(3), reward, o);
  CHECK(a.traces.size() == 60);
  CHECK(a.iteration == 60);
  CHECK(a.theta == b.theta);
  CHECK(a.eta == b.eta);
  for (const auto& t : a.traces) {
    CHECK(std::isfinite(t.grad_norm));
    CHECK(t.pi_s1 > 0.0);
    CHECK(t.pi_s1 < 1.0);
  }
  CHECK(a.traces.front().iteration == 1);

  o.iterations = 0;
  CHECK_THROWS_AS(reinforce_td(cfg, 0.3, initial_weights(3), reward, o), ParameterError);
  o.iterations = 5;
  o.monitored_node = 16;
  CHECK_THROWS_AS(reinforce_td(cfg, 0.3, initial_weights(3), reward, o), ParameterError);
  o.monitored_node = 0;
  CHECK_THROWS_AS(reinforce_td(cfg, 0.3, Eigen::VectorXd::Zero(3), reward, o), StructuralError);
}

TEST_CASE("supervised two-example training") {
  const auto [s1, s2] = extreme_states(10);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(416);
  CHECK(supervised_loss(zero, s1, s2) == doctest::Approx(2 * std::log(2.0)).epsilon(1e-15));

  const Eigen::VectorXd th = train_supervised(s1, s2, initial_weights(1), 0.01);
  CHECK(policy_forward(th, s1) >= 0.99);
  CHECK(policy_forward(th, s2) <= 0.01);
  CHECK(supervised_loss(th, s1, s2) < supervised_loss(initial_weights(1), s1, s2));

  SUBCASE("retraining returns at once") {
    SupervisedOptions once;
    once.max_iterations = 0;
    CHECK(train_supervised(s1, s2, th, 0.01, once) == th);
  }
  SUBCASE("swapping the labels mirrors the problem") {
    const Eigen::VectorXd sw = train_supervised(s2, s1, initial_weights(1), 0.01);
    CHECK(policy_forward(sw, s2) >= 0.99);
    CHECK(policy_forward(sw, s1) <= 0.01);
  }
  SUBCASE("the cap raises with the achieved outputs") {
    SupervisedOptions capped;
    capped.max_iterations = 0;
    try {
      train_supervised(s1, s2, zero, 0.01, capped);
      FAIL("expected a convergence error");
    } catch (const ConvergenceError& e) {
      CHECK(e.pi_s1 == 0.5);
      CHECK(e.pi_s2 == 0.5);
    }
  }
  CHECK_THROWS_AS(train_supervised(s1, s1, zero, 0.01), ParameterError);
  CHECK_THROWS_AS(train_supervised(s1, s2, zero, 0.6), ParameterError);
}

TEST_CASE("competitiveness") {
  MfdEstimate lqf;
  lqf.bands = {{0.2, 0.10, 0, 0}, {0.5, 0.20, 0, 0}};
  MfdEstimate cand = lqf;
  CHECK(is_competitive(cand, lqf));
  cand.bands[1].mean = 0.181;
  CHECK(is_competitive(cand, lqf));
  cand.bands[1].mean = 0.179;
  CHECK_FALSE(is_competitive(cand, lqf));
  cand.bands[1].k = 0.6;
  CHECK_THROWS_AS(is_competitive(cand, lqf), StructuralError);
}

TEST_CASE("random search bookkeeping") {
  NetworkConfig cfg;
  cfg.rows = 4;
  cfg.cols = 4;
  MfdOptions o;
  o.densities = {0.2, 0.5, 0.8};
  o.reps = 2;
  o.warmup_cycles = 1;
  o.measure_cycles = 1;
  o.jobs = 1;
  const MfdEstimate lqf = estimate_mfd(cfg, Policy::lqf(), o);
  const auto a = random_search(4, 9, cfg, o, lqf);
  o.jobs = 2;
  const auto b = random_search(4, 9, cfg, o, lqf);
  REQUIRE(a.size() == 4);
  for (std::size_t t = 0; t < a.size(); ++t) {
    CHECK(a[t].theta == b[t].theta);
    CHECK(a[t].mfd.flows == b[t].mfd.flows);
    CHECK(a[t].competitive == is_competitive(a[t].mfd, lqf));
  }
  CHECK(a[0].theta != a[1].theta);
  CHECK_THROWS_AS(random_search(0, 9, cfg, o, lqf), ParameterError);
}
