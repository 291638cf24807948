#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gwt/measure.hpp"

namespace gwt {

// Torgerson MDS: eigendecomposition of the double-centered squared
// distance matrix. Columns are ordered by descending eigenvalue (negative
// eigenvalues clamp to zero coordinates) and signed so the first
// non-negligible entry of each column is positive.
Eigen::MatrixXd classical_mds(const DistanceMatrix& dist, Eigen::Index dim);

// Monte-Carlo nearest-representative confusion matrix: per repetition one
// random representative per class, every other item classified to the
// class of its nearest representative. Row-stochastic, rows in sorted
// class order. Per-repetition RNG streams derive from (seed, repetition).
struct ConfusionResult {
  std::vector<std::string> classes;
  Eigen::MatrixXd matrix;
};
ConfusionResult confusion_matrix(const DistanceMatrix& dist,
                                 const std::vector<std::string>& labels, int repetitions,
                                 std::uint64_t seed);

// MRE (mean of |B-A|/A over upper-triangle pairs with A > 1e-12; A is the
// reference) and the Pearson correlation of the upper-triangle vectors.
struct CompareResult {
  double mre = 0.0;
  double pcc = 0.0;
  Eigen::Index pairs_used = 0;  // pairs entering the MRE mean
};
CompareResult compare_distance_matrices(const DistanceMatrix& a, const DistanceMatrix& b);

// exp(-alpha * d) entrywise; an SVM-ready similarity kernel.
Eigen::MatrixXd gw_kernel(const DistanceMatrix& dist, double alpha);

// Coordinates CSV: header id,x1,...,xdim then one row per item.
void save_coordinates_csv(const std::vector<std::string>& ids, const Eigen::MatrixXd& coords,
                          const std::filesystem::path& path);
// Confusion CSV: header class,<classes...> then one row per true class.
void save_confusion_csv(const ConfusionResult& confusion, const std::filesystem::path& path);

}  // namespace gwt
