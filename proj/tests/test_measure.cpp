#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "gwt/measure.hpp"
#include "oracles.hpp"

using namespace gwt;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  auto dir = fs::temp_directory_path() / "gwt-measure-tests";
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

MmSpace remark_space(const std::vector<double>& pts, const std::string& id) {
  const auto n = static_cast<Eigen::Index>(pts.size());
  MmSpace s;
  s.id = id;
  s.metric_kind = MetricKind::explicit_;
  s.weights = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  s.metric.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      s.metric(i, j) = std::abs(pts[static_cast<std::size_t>(i)] - pts[static_cast<std::size_t>(j)]);
  return make_mm_space(std::move(s));
}

}  // namespace

TEST_CASE("singleton space loads") {
  auto path = temp_dir() / "singleton.json";
  write_file(path, R"({"id":"one","label":null,"n":1,"weights":[1.0],
                      "metric_kind":"explicit","metric":[[0.0]],"points":null})");
  auto space = load_mm_space(path);
  CHECK(space.n() == 1);
  CHECK(space.weights[0] == 1.0);
  CHECK(space.metric(0, 0) == 0.0);
}

TEST_CASE("weights must sum to one") {
  auto path = temp_dir() / "bad-weights.json";
  write_file(path, R"({"id":"bad","label":null,"n":2,"weights":[0.45,0.45],
                      "metric_kind":"explicit","metric":[[0.0,1.0],[1.0,0.0]],"points":null})");
  CHECK_THROWS_AS(load_mm_space(path), ValidationError);
}

TEST_CASE("malformed json is a parse error") {
  auto path = temp_dir() / "broken.json";
  write_file(path, "{not json");
  CHECK_THROWS_AS(load_mm_space(path), ParseError);
}

TEST_CASE("remark reference space has |0-6| = 6") {
  auto space = remark_space({0, 1, 2, 3, 6}, "S");
  auto path = temp_dir() / "remark-s.json";
  save_mm_space(space, path);
  auto loaded = load_mm_space(path);
  CHECK(loaded.metric(0, 4) == 6.0);
  CHECK(loaded.weights[2] == doctest::Approx(0.2).epsilon(1e-15));
}

TEST_CASE("save/load round trip is lossless and canonical") {
  auto space = remark_space({0, 1, 2, 5, 7}, "X");
  space.label = "remark";
  auto p1 = temp_dir() / "rt1.json";
  auto p2 = temp_dir() / "rt2.json";
  save_mm_space(space, p1);
  auto loaded = load_mm_space(p1);
  CHECK(loaded.id == space.id);
  CHECK(loaded.label == space.label);
  CHECK((loaded.metric - space.metric).cwiseAbs().maxCoeff() == 0.0);
  CHECK((loaded.weights - space.weights).cwiseAbs().maxCoeff() == 0.0);
  save_mm_space(loaded, p2);
  CHECK(slurp(p1) == slurp(p2));
}

TEST_CASE("round trip keeps random spaces byte-identical") {
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    auto space = oracle::random_euclidean_space(seed, 5, 2, "rand");
    auto p1 = temp_dir() / "rr1.json";
    auto p2 = temp_dir() / "rr2.json";
    save_mm_space(space, p1);
    save_mm_space(load_mm_space(p1), p2);
    CHECK(slurp(p1) == slurp(p2));
  }
}

TEST_CASE("save to unwritable path fails") {
  auto space = remark_space({0, 1}, "tiny");
  CHECK_THROWS_AS(save_mm_space(space, "/nonexistent-dir/out.json"), IoError);
}

TEST_CASE("metric symmetry and diagonal are enforced") {
  MmSpace s;
  s.id = "asym";
  s.weights = Eigen::VectorXd::Constant(2, 0.5);
  s.metric.resize(2, 2);
  s.metric << 0.0, 1.0, 2.0, 0.0;
  CHECK_THROWS_WITH_AS(make_mm_space(s), doctest::Contains("symmetric"), ValidationError);

  s.metric << 0.5, 1.0, 1.0, 0.0;
  CHECK_THROWS_WITH_AS(make_mm_space(s), doctest::Contains("diagonal"), ValidationError);

  // sub-tolerance noise is repaired, not rejected
  s.metric << 0.0, 1.0 + 5e-13, 1.0, 0.0;
  auto fixed = make_mm_space(s);
  CHECK(fixed.metric(0, 1) == fixed.metric(1, 0));
  CHECK(fixed.metric(0, 0) == 0.0);
}

TEST_CASE("euclidean spaces must match their points") {
  MmSpace s;
  s.id = "euclid";
  s.metric_kind = MetricKind::euclidean;
  s.weights = Eigen::VectorXd::Constant(2, 0.5);
  s.metric.resize(2, 2);
  s.metric << 0.0, 2.0, 2.0, 0.0;
  Eigen::MatrixXd pts(2, 1);
  pts << 0.0, 1.0;
  s.points = pts;
  CHECK_THROWS_AS(make_mm_space(s), ValidationError);
  s.metric << 0.0, 1.0, 1.0, 0.0;
  CHECK_NOTHROW(make_mm_space(s));
}

TEST_CASE("zero-mass atoms reject unless dropped") {
  auto path = temp_dir() / "zero-mass.json";
  write_file(path, R"({"id":"z","label":null,"n":3,"weights":[0.5,0.0,0.5],
                      "metric_kind":"explicit",
                      "metric":[[0.0,1.0,2.0],[1.0,0.0,1.0],[2.0,1.0,0.0]],"points":null})");
  CHECK_THROWS_AS(load_mm_space(path), ValidationError);
  auto dropped = load_mm_space(path, /*drop_zero=*/true);
  CHECK(dropped.n() == 2);
  CHECK(dropped.metric(0, 1) == 2.0);
}

TEST_CASE("plan validation") {
  Eigen::VectorXd mu = Eigen::VectorXd::Constant(3, 1.0 / 3);
  Eigen::VectorXd nu(2);
  nu << 0.25, 0.75;
  CHECK_NOTHROW(validate_plan(product_plan(mu, nu)));

  TransportPlan bad{Eigen::MatrixXd::Identity(2, 2) / 2.0, Eigen::VectorXd::Constant(2, 0.5), nu};
  CHECK_THROWS_AS(validate_plan(bad), MarginalError);

  // Example-1 layout: rows sum to the reference weights
  Eigen::MatrixXd m(2, 2);
  m << 0.25, 0.25, 0.25, 0.25;
  TransportPlan ok{m, Eigen::VectorXd::Constant(2, 0.5), Eigen::VectorXd::Constant(2, 0.5)};
  CHECK_NOTHROW(validate_plan(ok));

  ok.matrix(0, 0) = -0.25;
  CHECK_THROWS_AS(validate_plan(ok), MarginalError);
}

TEST_CASE("product coupling always validates (property)") {
  for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    Rng rng(seed);
    auto mu = oracle::random_weights(rng, 2 + static_cast<Eigen::Index>(rng.next_below(4)));
    auto nu = oracle::random_weights(rng, 2 + static_cast<Eigen::Index>(rng.next_below(4)));
    CHECK_NOTHROW(validate_plan(product_plan(mu, nu)));
  }
}

TEST_CASE("three-plan validation") {
  Eigen::VectorXd sigma = Eigen::VectorXd::Constant(2, 0.5);
  auto a = product_plan(sigma, Eigen::VectorXd::Constant(2, 0.5));
  auto b = product_plan(sigma, Eigen::VectorXd::Constant(3, 1.0 / 3));
  ThreePlan plan;
  plan.n = 2;
  plan.m = 2;
  plan.k = 3;
  plan.tensor.assign(12, 0.0);
  plan.marginal12 = a.matrix;
  plan.marginal13 = b.matrix;
  for (Eigen::Index i = 0; i < 2; ++i)
    for (Eigen::Index j = 0; j < 2; ++j)
      for (Eigen::Index l = 0; l < 3; ++l)
        plan.at(i, j, l) = a.matrix(i, j) * b.matrix(i, l) / sigma[i];
  CHECK_NOTHROW(validate_three_plan(plan));
  plan.at(0, 0, 0) += 0.1;
  CHECK_THROWS_AS(validate_three_plan(plan), MarginalError);
}

TEST_CASE("distance matrix csv round trip") {
  DistanceMatrix dist;
  dist.ids = {"a", "b", "c"};
  dist.values.resize(3, 3);
  dist.values << 0.0, 1.5, 2.25, 1.5, 0.0, 0.125, 2.25, 0.125, 0.0;
  auto path = temp_dir() / "dist.csv";
  save_distance_matrix_csv(dist, path);
  auto loaded = load_distance_matrix_csv(path);
  CHECK(loaded.ids == dist.ids);
  CHECK((loaded.values - dist.values).cwiseAbs().maxCoeff() == 0.0);

  auto labels_path = temp_dir() / "labels.csv";
  save_labels_csv(dist.ids, {"x", "y", "x"}, labels_path);
  auto labels = load_labels_csv(dist.ids, labels_path);
  CHECK(labels == std::vector<std::string>{"x", "y", "x"});
  CHECK_THROWS_AS(load_labels_csv({"a", "missing"}, labels_path), IdMismatch);
}

TEST_CASE("asymmetric distance csv rejects") {
  auto path = temp_dir() / "asym.csv";
  write_file(path, "id,a,b\na,0,1\nb,2,0\n");
  CHECK_THROWS_AS(load_distance_matrix_csv(path), ValidationError);
}

TEST_CASE("triangle diagnostic flags gauge metrics") {
  auto metric_space = remark_space({0, 1, 2}, "line");
  CHECK(max_triangle_violation(metric_space) <= 0.0);

  MmSpace gauge;
  gauge.id = "gauge";
  gauge.weights = Eigen::VectorXd::Constant(3, 1.0 / 3);
  gauge.weights[2] = 1.0 - gauge.weights.head(2).sum();
  gauge.metric.resize(3, 3);
  gauge.metric << 0.0, 1.0, 5.0, 1.0, 0.0, 1.0, 5.0, 1.0, 0.0;
  auto built = make_mm_space(gauge);
  CHECK(max_triangle_violation(built) == doctest::Approx(3.0));
}

TEST_CASE("plan csv export lists nonzero triplets") {
  Eigen::MatrixXd m(2, 2);
  m << 0.5, 0.0, 0.0, 0.5;
  TransportPlan plan{m, Eigen::VectorXd::Constant(2, 0.5), Eigen::VectorXd::Constant(2, 0.5)};
  auto path = temp_dir() / "plan.csv";
  save_plan_csv(plan, path);
  CHECK(slurp(path) == "i,j,mass\n0,0,0.5\n1,1,0.5\n");
}
