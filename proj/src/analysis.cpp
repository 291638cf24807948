#include "gwt/analysis.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "gwt/rng.hpp"

namespace gwt {

Eigen::MatrixXd classical_mds(const DistanceMatrix& dist, Eigen::Index dim) {
  if (dim < 1) throw ValidationError("embedding dimension must be positive");
  const auto n = static_cast<Eigen::Index>(dist.ids.size());
  Eigen::MatrixXd sq = dist.values.cwiseProduct(dist.values);
  Eigen::MatrixXd j =
      Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
  Eigen::MatrixXd b = -0.5 * j * sq * j;
  b = (b + b.transpose()) / 2.0;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(b);
  if (eig.info() != Eigen::Success) throw Error("MDS eigendecomposition failed");

  Eigen::MatrixXd coords = Eigen::MatrixXd::Zero(n, dim);
  for (Eigen::Index c = 0; c < std::min(dim, n); ++c) {
    Eigen::Index src = n - 1 - c;  // eigenvalues ascend; take from the top
    double lambda = eig.eigenvalues()[src];
    if (lambda <= 0.0) continue;
    Eigen::VectorXd col = std::sqrt(lambda) * eig.eigenvectors().col(src);
    for (Eigen::Index r = 0; r < n; ++r)
      if (std::abs(col[r]) > 1e-12) {
        if (col[r] < 0.0) col = -col;
        break;
      }
    coords.col(c) = col;
  }
  return coords;
}

ConfusionResult confusion_matrix(const DistanceMatrix& dist,
                                 const std::vector<std::string>& labels, int repetitions,
                                 std::uint64_t seed) {
  const auto n = static_cast<Eigen::Index>(dist.ids.size());
  if (static_cast<Eigen::Index>(labels.size()) != n)
    throw ValidationError("labels must cover every item");
  if (repetitions < 1) throw ValidationError("repetitions must be positive");

  std::map<std::string, std::vector<Eigen::Index>> members;
  for (Eigen::Index i = 0; i < n; ++i) members[labels[static_cast<std::size_t>(i)]].push_back(i);
  for (const auto& [name, idx] : members)
    if (idx.size() < 2)
      throw ClassTooSmall("class '" + name + "' has fewer than 2 members");

  ConfusionResult result;
  std::vector<const std::vector<Eigen::Index>*> classes;
  for (const auto& [name, idx] : members) {  // std::map iterates sorted
    result.classes.push_back(name);
    classes.push_back(&idx);
  }
  const auto c_count = static_cast<Eigen::Index>(classes.size());
  std::vector<Eigen::Index> class_of(static_cast<std::size_t>(n));
  for (Eigen::Index c = 0; c < c_count; ++c)
    for (Eigen::Index item : *classes[static_cast<std::size_t>(c)])
      class_of[static_cast<std::size_t>(item)] = c;

  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(c_count, c_count);
  std::vector<Eigen::Index> reps(static_cast<std::size_t>(c_count));
  std::vector<char> is_rep(static_cast<std::size_t>(n));
  for (int r = 0; r < repetitions; ++r) {
    Rng rng(substream(seed, "confusion", static_cast<std::uint64_t>(r)));
    std::fill(is_rep.begin(), is_rep.end(), 0);
    for (Eigen::Index c = 0; c < c_count; ++c) {
      const auto& idx = *classes[static_cast<std::size_t>(c)];
      reps[static_cast<std::size_t>(c)] =
          idx[rng.next_below(static_cast<std::uint64_t>(idx.size()))];
      is_rep[static_cast<std::size_t>(reps[static_cast<std::size_t>(c)])] = 1;
    }
    for (Eigen::Index item = 0; item < n; ++item) {
      if (is_rep[static_cast<std::size_t>(item)]) continue;
      Eigen::Index best = 0;
      for (Eigen::Index c = 1; c < c_count; ++c) {
        double d = dist.values(item, reps[static_cast<std::size_t>(c)]);
        double db = dist.values(item, reps[static_cast<std::size_t>(best)]);
        if (d < db || (d == db && reps[static_cast<std::size_t>(c)] <
                                      reps[static_cast<std::size_t>(best)]))
          best = c;
      }
      counts(class_of[static_cast<std::size_t>(item)], best) += 1.0;
    }
  }

  result.matrix = counts.array().colwise() / counts.rowwise().sum().array();
  return result;
}

CompareResult compare_distance_matrices(const DistanceMatrix& a, const DistanceMatrix& b) {
  if (a.ids != b.ids) throw IdMismatch("distance matrices cover different ids");
  const auto n = static_cast<Eigen::Index>(a.ids.size());
  if (n < 3) throw ValidationError("need at least 3 items to compare");

  std::vector<double> va, vb;
  va.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  vb.reserve(va.capacity());
  double mre_sum = 0.0;
  Eigen::Index mre_pairs = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double x = a.values(i, j), y = b.values(i, j);
      va.push_back(x);
      vb.push_back(y);
      if (x > 1e-12) {
        mre_sum += std::abs(y - x) / x;
        ++mre_pairs;
      }
    }

  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  double ma = mean(va), mb = mean(vb);
  double sa = 0.0, sb = 0.0, sab = 0.0;
  for (std::size_t i = 0; i < va.size(); ++i) {
    double da = va[i] - ma, db = vb[i] - mb;
    sa += da * da;
    sb += db * db;
    sab += da * db;
  }
  if (sa == 0.0 || sb == 0.0)
    throw DegenerateVariance("distance values are constant; PCC is undefined");

  CompareResult result;
  result.mre = mre_pairs > 0 ? mre_sum / static_cast<double>(mre_pairs) : 0.0;
  result.pcc = sab / std::sqrt(sa * sb);
  result.pairs_used = mre_pairs;
  return result;
}

Eigen::MatrixXd gw_kernel(const DistanceMatrix& dist, double alpha) {
  if (alpha <= 0.0) throw ValidationError("kernel bandwidth alpha must be positive");
  return (-alpha * dist.values).array().exp();
}

void save_coordinates_csv(const std::vector<std::string>& ids, const Eigen::MatrixXd& coords,
                          const std::filesystem::path& path) {
  if (static_cast<Eigen::Index>(ids.size()) != coords.rows())
    throw ValidationError("ids and coordinates must align");
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "id";
  for (Eigen::Index c = 0; c < coords.cols(); ++c) out << ",x" << (c + 1);
  out << '\n';
  for (Eigen::Index i = 0; i < coords.rows(); ++i) {
    out << ids[static_cast<std::size_t>(i)];
    for (Eigen::Index c = 0; c < coords.cols(); ++c) out << ',' << format_double(coords(i, c));
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

void save_confusion_csv(const ConfusionResult& confusion, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "class";
  for (const auto& c : confusion.classes) out << ',' << c;
  out << '\n';
  for (Eigen::Index i = 0; i < confusion.matrix.rows(); ++i) {
    out << confusion.classes[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < confusion.matrix.cols(); ++j)
      out << ',' << format_double(confusion.matrix(i, j));
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace gwt
