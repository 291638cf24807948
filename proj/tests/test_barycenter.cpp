#include <doctest.h>

#include "gwt/barycenter.hpp"
#include "oracles.hpp"

using namespace gwt;

TEST_CASE("single input at the fixed point stays put") {
  // uniform weights so the identity coupling with the barycenter is feasible
  Rng rng(601);
  auto x = oracle::space_from_points(oracle::random_points(rng, 5, 2),
                                     Eigen::VectorXd::Constant(5, 0.2), "x");
  BarycenterConfig config;
  config.points = 5;
  config.init_metric = x.metric;  // identity-coupled starting point
  config.inner.inits.push_back({GwInit::Kind::identity, 0, nullptr, ""});
  std::vector<double> trace;
  auto bary = solve_barycenter({x}, config, &trace);
  CHECK((bary.metric - x.metric).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(trace.back() <= 1e-12);
  CHECK(bary.metric_kind == MetricKind::explicit_);
  CHECK_FALSE(bary.points.has_value());
}

TEST_CASE("two identical inputs behave like one") {
  auto x = oracle::random_euclidean_space(602, 4, 2, "x");
  BarycenterConfig config;
  config.points = 4;
  config.seed = 17;
  config.inner.restarts = 2;
  auto one = solve_barycenter({x}, config);
  auto two = solve_barycenter({x, x}, config);
  CHECK((one.metric - two.metric).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("objective is non-increasing across sweeps (property)") {
  for (std::uint64_t seed : {611u, 612u, 613u}) {
    std::vector<MmSpace> inputs;
    for (int k = 0; k < 3; ++k)
      inputs.push_back(oracle::random_euclidean_space(seed * 10 + static_cast<std::uint64_t>(k),
                                                      4 + k, 2, "in" + std::to_string(k)));
    BarycenterConfig config;
    config.points = 4;
    config.seed = seed;
    config.outer_iters = 8;
    config.inner.restarts = 2;
    std::vector<double> trace;
    solve_barycenter(inputs, config, &trace);
    REQUIRE(trace.size() >= 2);
    for (std::size_t t = 1; t < trace.size(); ++t) CHECK(trace[t] <= trace[t - 1] + 1e-7);
  }
}

TEST_CASE("barycenter metric is a valid zero-diagonal symmetric matrix") {
  auto a = oracle::random_euclidean_space(621, 5, 2, "a");
  auto b = oracle::random_euclidean_space(622, 6, 2, "b");
  BarycenterConfig config;
  config.points = 4;
  config.seed = 3;
  config.inner.restarts = 2;
  auto bary = solve_barycenter({a, b}, config);
  CHECK(bary.metric.diagonal().cwiseAbs().maxCoeff() == 0.0);
  CHECK((bary.metric - bary.metric.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(bary.weights.sum() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("deterministic given seed and input order") {
  auto a = oracle::random_euclidean_space(631, 4, 2, "a");
  auto b = oracle::random_euclidean_space(632, 5, 2, "b");
  BarycenterConfig config;
  config.points = 3;
  config.seed = 99;
  config.inner.restarts = 2;
  auto r1 = solve_barycenter({a, b}, config);
  auto r2 = solve_barycenter({a, b}, config);
  CHECK((r1.metric - r2.metric).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("barycenter objective") {
  auto x = oracle::random_euclidean_space(641, 4, 2, "x");
  auto y = oracle::random_euclidean_space(642, 5, 2, "y");

  SUBCASE("the only input space has objective zero") {
    GwConfig inner;
    inner.inits.push_back({GwInit::Kind::identity, 0, nullptr, ""});
    CHECK(barycenter_objective(x, {x}, {}, inner) <= 1e-12);
  }

  SUBCASE("permutation symmetry with equal lambdas") {
    GwConfig inner;
    inner.restarts = 2;
    double ab = barycenter_objective(x, {x, y}, {}, inner);
    double ba = barycenter_objective(x, {y, x}, {}, inner);
    CHECK(ab == doctest::Approx(ba).epsilon(1e-12));
  }

  SUBCASE("matches individually computed GW costs") {
    GwConfig inner;
    inner.restarts = 2;
    double total = barycenter_objective(x, {x, y}, {0.25, 0.75}, inner);
    double direct =
        0.25 * solve_gw(x, x, inner).cost + 0.75 * solve_gw(x, y, inner).cost;
    CHECK(total == doctest::Approx(direct).epsilon(1e-12));
  }

  SUBCASE("bad lambdas are rejected") {
    CHECK_THROWS_AS(barycenter_objective(x, {x, y}, {0.5, 0.6}), ValidationError);
    CHECK_THROWS_AS(barycenter_objective(x, {x, y}, {1.0}), ValidationError);
  }
}
