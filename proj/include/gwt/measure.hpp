#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gwt/errors.hpp"

namespace gwt {

// Records where a metric came from. Only euclidean spaces (ambient points
// present, metric = pairwise Euclidean distances) admit the mean-valued
// barycentric projection; geodesic/explicit spaces use the argmin form.
enum class MetricKind { euclidean, geodesic, explicit_ };

std::string to_string(MetricKind kind);
MetricKind metric_kind_from_string(const std::string& s);

// Discrete metric-measure space: strictly positive weights summing to one
// and a symmetric zero-diagonal distance matrix, plus optional ambient
// coordinates (one row per atom).
struct MmSpace {
  std::string id;
  std::optional<std::string> label;
  Eigen::VectorXd weights;
  MetricKind metric_kind = MetricKind::explicit_;
  Eigen::MatrixXd metric;
  std::optional<Eigen::MatrixXd> points;

  Eigen::Index n() const { return weights.size(); }
};

// Checks every MmSpace invariant, then symmetrizes the metric and zeroes
// its diagonal so downstream code can rely on both exactly.
// Throws ValidationError naming the violated invariant.
MmSpace make_mm_space(MmSpace raw);

// Largest d(i,k) - d(i,j) - d(j,k) over all triples; positive values mean
// the triangle inequality is violated. O(n^3), diagnostic only.
double max_triangle_violation(const MmSpace& space);

struct TransportPlan {
  Eigen::MatrixXd matrix;        // n x m, nonnegative
  Eigen::VectorXd row_marginal;  // length n
  Eigen::VectorXd col_marginal;  // length m
};

// Throws MarginalError (with the max violation magnitude) unless the plan
// is entrywise nonnegative and its row/column sums match the stated
// marginals within tol.
void validate_plan(const TransportPlan& plan, double tol = 1e-9);

// Independent coupling mu nu^T; feasible for any two weight vectors.
TransportPlan product_plan(const Eigen::VectorXd& mu, const Eigen::VectorXd& nu);

// Coupling on S x X x Y with both pair-marginals (s,x) and (s,y) prescribed.
struct ThreePlan {
  Eigen::Index n = 0, m = 0, k = 0;
  std::vector<double> tensor;    // dense, index (i,j,l) -> i*m*k + j*k + l
  Eigen::MatrixXd marginal12;    // n x m
  Eigen::MatrixXd marginal13;    // n x k

  double& at(Eigen::Index i, Eigen::Index j, Eigen::Index l) {
    return tensor[static_cast<std::size_t>((i * m + j) * k + l)];
  }
  double at(Eigen::Index i, Eigen::Index j, Eigen::Index l) const {
    return tensor[static_cast<std::size_t>((i * m + j) * k + l)];
  }

  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
  slice(Eigen::Index i) const {
    return {tensor.data() + i * m * k, m, k};
  }

  // P23: sum over the reference axis, an (m x k) coupling of the targets.
  Eigen::MatrixXd collapse_reference() const;
};

void validate_three_plan(const ThreePlan& plan, double tol = 1e-9);

// Symmetric zero-diagonal matrix of pairwise distances between named items.
struct DistanceMatrix {
  std::vector<std::string> ids;
  Eigen::MatrixXd values;
  std::optional<std::vector<std::string>> labels;
};

DistanceMatrix make_distance_matrix(DistanceMatrix raw, double tol = 1e-9);

// --- on-disk formats ------------------------------------------------------

MmSpace load_mm_space(const std::filesystem::path& path, bool drop_zero = false);
void save_mm_space(const MmSpace& space, const std::filesystem::path& path);

void save_distance_matrix_csv(const DistanceMatrix& dist, const std::filesystem::path& path);
DistanceMatrix load_distance_matrix_csv(const std::filesystem::path& path);

void save_labels_csv(const std::vector<std::string>& ids, const std::vector<std::string>& labels,
                     const std::filesystem::path& path);
// Returns the labels for `ids` in order; every id must appear in the file.
std::vector<std::string> load_labels_csv(const std::vector<std::string>& ids,
                                         const std::filesystem::path& path);

// Plans exported as `i,j,mass` triplets, nonzero entries only, row-major order.
void save_plan_csv(const TransportPlan& plan, const std::filesystem::path& path);

// Shortest round-trip decimal representation; all CSV output goes through
// this so identical values always print identically.
std::string format_double(double value);

}  // namespace gwt
