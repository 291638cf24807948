#include <doctest.h>

#include "gwt/gw.hpp"
#include "gwt/ot.hpp"
#include "oracles.hpp"

using namespace gwt;

namespace {

Eigen::MatrixXd squared_cost_1d(const std::vector<double>& xs, const std::vector<double>& ys) {
  Eigen::MatrixXd c(static_cast<Eigen::Index>(xs.size()), static_cast<Eigen::Index>(ys.size()));
  for (Eigen::Index i = 0; i < c.rows(); ++i)
    for (Eigen::Index j = 0; j < c.cols(); ++j) {
      double d = xs[static_cast<std::size_t>(i)] - ys[static_cast<std::size_t>(j)];
      c(i, j) = d * d;
    }
  return c;
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

}  // namespace

TEST_CASE("singleton transport") {
  Eigen::MatrixXd c(1, 1);
  c << 4.0;
  auto result = solve_ot(c, vec({1.0}), vec({1.0}));
  CHECK(result.plan.matrix(0, 0) == doctest::Approx(1.0));
  CHECK(result.cost == doctest::Approx(4.0));
  CHECK(result.distance == doctest::Approx(2.0));
}

TEST_CASE("quarter/three-quarter masses on {0,1}") {
  // the identity map is feasible here but not optimal as a plan
  auto c = squared_cost_1d({0.0, 1.0}, {0.0, 1.0});
  auto result = solve_ot(c, vec({0.25, 0.75}), vec({0.75, 0.25}));
  CHECK(result.cost == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(result.cost == doctest::Approx(oracle::brute_min_transport(c, vec({0.25, 0.75}),
                                                                   vec({0.75, 0.25}))));
}

TEST_CASE("monotone coupling on shifted supports") {
  auto c = squared_cost_1d({0, 1, 2}, {1, 2, 3});
  Eigen::VectorXd u = Eigen::VectorXd::Constant(3, 1.0 / 3);
  auto result = solve_ot(c, u, u);
  CHECK(result.cost == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(result.cost == doctest::Approx(oracle::brute_min_transport(c, u, u)));
  // monotone diagonal: pi(i, i) = 1/3
  for (Eigen::Index i = 0; i < 3; ++i)
    CHECK(result.plan.matrix(i, i) == doctest::Approx(1.0 / 3).epsilon(1e-12));
}

TEST_CASE("exactness against vertex enumeration, n,m <= 4") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    auto n = static_cast<Eigen::Index>(2 + rng.next_below(3));
    auto m = static_cast<Eigen::Index>(2 + rng.next_below(3));
    auto mu = oracle::random_weights(rng, n);
    auto nu = oracle::random_weights(rng, m);
    Eigen::MatrixXd c(n, m);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < m; ++j) c(i, j) = rng.next_double();
    auto result = solve_ot(c, mu, nu);
    double best = oracle::brute_min_transport(c, mu, nu);
    CHECK(result.cost == doctest::Approx(best).epsilon(1e-10));
    validate_plan(result.plan);
    CHECK((result.plan.matrix.array() != 0.0).count() <= n + m - 1);
  }
}

TEST_CASE("1d squared-cost transport is the monotone coupling (property)") {
  // for convex costs on sorted 1d supports the north-west (quantile)
  // coupling is optimal; this checks the simplex at sizes far beyond
  // what vertex enumeration can reach
  for (std::uint64_t seed : {61u, 62u, 63u}) {
    Rng rng(seed);
    const Eigen::Index n = 40, m = 35;
    std::vector<double> xs(n), ys(m);
    for (auto& x : xs) x = rng.next_double() * 10.0;
    for (auto& y : ys) y = rng.next_double() * 10.0;
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    Eigen::VectorXd mu = oracle::random_weights(rng, n);
    Eigen::VectorXd nu = oracle::random_weights(rng, m);
    Eigen::MatrixXd c = squared_cost_1d(xs, ys);

    // independent optimum: walk the quantile coupling directly
    double expected = 0.0;
    {
      Eigen::Index i = 0, j = 0;
      double a = mu[0], b = nu[0];
      while (true) {
        double f = std::min(a, b);
        expected += f * c(i, j);
        a -= f;
        b -= f;
        if (i == n - 1 && j == m - 1) break;
        if (j == m - 1 || (a <= 0.0 && i < n - 1)) {
          ++i;
          a = mu[i];
        } else {
          ++j;
          b = nu[j];
        }
      }
    }
    auto result = solve_ot(c, mu, nu);
    CHECK(result.cost == doctest::Approx(expected).epsilon(1e-10));
  }
}

TEST_CASE("negative costs are fine (oracle reuse)") {
  Rng rng(7);
  Eigen::MatrixXd c(3, 3);
  for (Eigen::Index i = 0; i < 3; ++i)
    for (Eigen::Index j = 0; j < 3; ++j) c(i, j) = rng.next_double() - 0.7;
  Eigen::VectorXd u = Eigen::VectorXd::Constant(3, 1.0 / 3);
  auto result = solve_ot(c, u, u);
  CHECK(result.cost == doctest::Approx(oracle::brute_min_transport(c, u, u)).epsilon(1e-12));
}

TEST_CASE("weight mismatch is infeasible") {
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(2, 2);
  CHECK_THROWS_AS(solve_ot(c, vec({0.5, 0.5}), vec({0.6, 0.5})), InfeasibleError);
  // 1e-10 imbalance is rescaled away
  CHECK_NOTHROW(solve_ot(c, vec({0.5, 0.5}), vec({0.5 + 1e-10, 0.5})));
}

TEST_CASE("warm-started resolves match fresh solves") {
  Rng rng(42);
  Eigen::VectorXd mu = oracle::random_weights(rng, 5);
  Eigen::VectorXd nu = oracle::random_weights(rng, 6);
  TransportSimplex warm(mu, nu);
  for (int round = 0; round < 4; ++round) {
    Eigen::MatrixXd c(5, 6);
    for (Eigen::Index i = 0; i < 5; ++i)
      for (Eigen::Index j = 0; j < 6; ++j) c(i, j) = rng.next_double();
    double warm_value = warm.solve(c);
    double fresh_value = solve_ot(c, mu, nu).cost;
    CHECK(warm_value == doctest::Approx(fresh_value).epsilon(1e-12));
  }
}

TEST_CASE("euclidean barycentric projection") {
  Eigen::MatrixXd targets(2, 1);
  targets << 0.0, 1.0;

  SUBCASE("deterministic plan reproduces the map") {
    Eigen::MatrixXd m(2, 2);
    m << 0.0, 0.5, 0.5, 0.0;  // i=0 -> point 1, i=1 -> point 0
    TransportPlan plan{m, vec({0.5, 0.5}), vec({0.5, 0.5})};
    auto map = euclidean_barycentric_projection(plan, targets);
    CHECK(map.points(0, 0) == 1.0);
    CHECK(map.points(1, 0) == 0.0);
  }

  SUBCASE("product plan maps every atom to the mean") {
    auto plan = product_plan(vec({0.3, 0.7}), vec({0.25, 0.75}));
    auto map = euclidean_barycentric_projection(plan, targets);
    CHECK(map.points(0, 0) == doctest::Approx(0.75));
    CHECK(map.points(1, 0) == doctest::Approx(0.75));
  }

  SUBCASE("uniform 2x2 plan maps both atoms to 0.5") {
    Eigen::MatrixXd m = Eigen::MatrixXd::Constant(2, 2, 0.25);
    TransportPlan plan{m, vec({0.5, 0.5}), vec({0.5, 0.5})};
    auto map = euclidean_barycentric_projection(plan, targets);
    CHECK(map.points(0, 0) == doctest::Approx(0.5));
    CHECK(map.points(1, 0) == doctest::Approx(0.5));
  }

  SUBCASE("zero rows are rejected") {
    Eigen::MatrixXd m(2, 2);
    m << 0.5, 0.5, 0.0, 0.0;
    TransportPlan plan{m, vec({1.0, 0.0}), vec({0.5, 0.5})};
    CHECK_THROWS_AS(euclidean_barycentric_projection(plan, targets), ZeroRowError);
  }
}

TEST_CASE("glot") {
  Eigen::VectorXd sigma = vec({0.5, 0.5});
  BarycentricMap a, b;
  a.kind = b.kind = BarycentricMap::Kind::euclidean;
  a.points.resize(2, 2);
  a.points << 0.0, 0.0, 1.0, 0.0;
  b.points = Eigen::MatrixXd::Zero(2, 2);

  CHECK(glot(sigma, a, a) == 0.0);
  CHECK(glot(sigma, a, b) == doctest::Approx(std::sqrt(0.5)));
  CHECK(glot(sigma, a, b) == glot(sigma, b, a));

  BarycentricMap c = b;
  c.points = Eigen::MatrixXd::Zero(3, 2);
  CHECK_THROWS_AS(glot(sigma, a, c), DimensionMismatch);
}

TEST_CASE("w_sigma_lp") {
  Rng rng(5);
  Eigen::VectorXd sigma = oracle::random_weights(rng, 3);

  SUBCASE("identical plans and targets give zero") {
    Eigen::MatrixXd pts(2, 1);
    pts << 0.0, 1.0;
    auto plan = random_vertex_plan(sigma, vec({0.5, 0.5}), 99);
    auto [three, value] = w_sigma_lp(plan, plan, pts, pts);
    CHECK(value == doctest::Approx(0.0).epsilon(1e-12));
    validate_three_plan(three);
  }

  SUBCASE("deterministic plans reduce to glot") {
    // (id, T_A) and (id, T_B) pushforwards: rows have single support
    Eigen::VectorXd s3 = vec({0.2, 0.3, 0.5});
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(3, 2), b = Eigen::MatrixXd::Zero(3, 2);
    a(0, 1) = 0.2; a(1, 0) = 0.3; a(2, 0) = 0.5;
    b(0, 0) = 0.2; b(1, 1) = 0.3; b(2, 1) = 0.5;
    Eigen::MatrixXd px(2, 1), py(2, 1);
    px << -1.0, 2.0;
    py << 0.5, 3.0;
    TransportPlan plan_a{a, s3, a.colwise().sum()};
    TransportPlan plan_b{b, s3, b.colwise().sum()};
    auto [three, value] = w_sigma_lp(plan_a, plan_b, px, py);
    double expected = glot(s3, euclidean_barycentric_projection(plan_a, px),
                           euclidean_barycentric_projection(plan_b, py));
    CHECK(value == doctest::Approx(expected).epsilon(1e-12));
  }

  SUBCASE("random instances match the dense LP oracle") {
    for (std::uint64_t seed : {21u, 22u, 23u}) {
      Rng r2(seed);
      Eigen::VectorXd s4 = oracle::random_weights(r2, 4);
      Eigen::VectorXd muw = oracle::random_weights(r2, 3);
      Eigen::VectorXd nuw = oracle::random_weights(r2, 3);
      auto plan_a = random_vertex_plan(s4, muw, seed * 17);
      auto plan_b = random_vertex_plan(s4, nuw, seed * 31);
      Eigen::MatrixXd px = oracle::random_points(r2, 3, 2);
      Eigen::MatrixXd py = oracle::random_points(r2, 3, 2);
      auto [three, value] = w_sigma_lp(plan_a, plan_b, px, py);
      validate_three_plan(three);

      // dense equality-form LP over all 4*3*3 variables
      const Eigen::Index n = 4, m = 3, k = 3;
      Eigen::MatrixXd a_eq = Eigen::MatrixXd::Zero(n * m + n * k, n * m * k);
      Eigen::VectorXd b_eq(n * m + n * k);
      Eigen::VectorXd c(n * m * k);
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < m; ++j)
          for (Eigen::Index l = 0; l < k; ++l) {
            Eigen::Index x = (i * m + j) * k + l;
            c[x] = (px.row(j) - py.row(l)).squaredNorm();
            a_eq(i * m + j, x) = 1.0;
            a_eq(n * m + i * k + l, x) = 1.0;
          }
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < m; ++j) b_eq[i * m + j] = plan_a.matrix(i, j);
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index l = 0; l < k; ++l) b_eq[n * m + i * k + l] = plan_b.matrix(i, l);
      double lp = oracle::dense_lp_min(a_eq, b_eq, c);
      CHECK(value * value == doctest::Approx(lp).epsilon(1e-8));
    }
  }

  SUBCASE("mismatched reference marginals are rejected") {
    auto plan_a = product_plan(vec({0.5, 0.5}), vec({1.0}));
    auto plan_b = product_plan(vec({0.4, 0.6}), vec({1.0}));
    Eigen::MatrixXd one(1, 1);
    one << 0.0;
    CHECK_THROWS_AS(w_sigma_lp(plan_a, plan_b, one, one), MarginalError);
  }
}

TEST_CASE("proposition 1: barycentric projection is an optimal map (property)") {
  for (std::uint64_t seed = 100; seed < 120; ++seed) {
    Rng rng(seed);
    auto n = static_cast<Eigen::Index>(2 + rng.next_below(5));
    auto m = static_cast<Eigen::Index>(2 + rng.next_below(5));
    Eigen::VectorXd sigma = oracle::random_weights(rng, n);
    Eigen::VectorXd muw = oracle::random_weights(rng, m);
    Eigen::MatrixXd s_pts = oracle::random_points(rng, n, 2);
    Eigen::MatrixXd x_pts = oracle::random_points(rng, m, 2);

    Eigen::MatrixXd cost(n, m);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < m; ++j)
        cost(i, j) = (s_pts.row(i) - x_pts.row(j)).squaredNorm();
    auto ot = solve_ot(cost, sigma, muw);
    auto map = euclidean_barycentric_projection(ot.plan, x_pts);

    double direct = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      direct += sigma[i] * (s_pts.row(i) - map.points.row(i)).squaredNorm();

    Eigen::MatrixXd push_cost(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        push_cost(i, j) = (s_pts.row(i) - map.points.row(j)).squaredNorm();
    double pushforward = solve_ot(push_cost, sigma, sigma).cost;
    CHECK(pushforward == doctest::Approx(direct).epsilon(1e-7));
  }
}

TEST_CASE("jensen contraction and wasserstein lower bound (property)") {
  for (std::uint64_t seed = 200; seed < 210; ++seed) {
    Rng rng(seed);
    Eigen::VectorXd sigma = oracle::random_weights(rng, 4);
    Eigen::VectorXd muw = oracle::random_weights(rng, 3);
    Eigen::VectorXd nuw = oracle::random_weights(rng, 3);
    Eigen::MatrixXd px = oracle::random_points(rng, 3, 2);
    Eigen::MatrixXd py = oracle::random_points(rng, 3, 2);
    auto plan_a = random_vertex_plan(sigma, muw, seed + 1000);
    auto plan_b = random_vertex_plan(sigma, nuw, seed + 2000);

    auto [three, w_sigma] = w_sigma_lp(plan_a, plan_b, px, py);
    double lot = glot(sigma, euclidean_barycentric_projection(plan_a, px),
                      euclidean_barycentric_projection(plan_b, py));
    CHECK(lot * lot <= w_sigma * w_sigma + 1e-9);

    Eigen::MatrixXd cost(3, 3);
    for (Eigen::Index j = 0; j < 3; ++j)
      for (Eigen::Index l = 0; l < 3; ++l) cost(j, l) = (px.row(j) - py.row(l)).squaredNorm();
    double w = solve_ot(cost, muw, nuw).distance;
    CHECK(w <= w_sigma + 1e-7);
  }
}
