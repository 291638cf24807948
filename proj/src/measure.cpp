#include "gwt/measure.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace gwt {

using nlohmann::json;

std::string to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::euclidean: return "euclidean";
    case MetricKind::geodesic: return "geodesic";
    case MetricKind::explicit_: return "explicit";
  }
  return "explicit";
}

MetricKind metric_kind_from_string(const std::string& s) {
  if (s == "euclidean") return MetricKind::euclidean;
  if (s == "geodesic") return MetricKind::geodesic;
  if (s == "explicit") return MetricKind::explicit_;
  throw ParseError("unknown metric_kind '" + s + "'");
}

std::string format_double(double value) {
  char buf[40];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  (void)ec;
  return std::string(buf, ptr);
}

MmSpace make_mm_space(MmSpace raw) {
  const Eigen::Index n = raw.weights.size();
  if (n < 1) throw ValidationError("support size must be positive");
  if (raw.metric.rows() != n || raw.metric.cols() != n)
    throw ValidationError("metric must be n x n");

  double wsum = raw.weights.sum();
  if (std::abs(wsum - 1.0) > 1e-12)
    throw ValidationError("weights must sum to 1 (sum = " + format_double(wsum) + ")");
  if ((raw.weights.array() <= 0.0).any())
    throw ValidationError("weights must be strictly positive");

  double asym = (raw.metric - raw.metric.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12)
    throw ValidationError("metric must be symmetric (max asymmetry " + format_double(asym) + ")");
  double diag = raw.metric.diagonal().cwiseAbs().maxCoeff();
  if (diag > 1e-12)
    throw ValidationError("metric diagonal must be zero (max " + format_double(diag) + ")");
  if ((raw.metric.array() < 0.0).any())
    throw ValidationError("metric entries must be nonnegative");

  if (raw.points) {
    if (raw.points->rows() != n) throw ValidationError("points must have one row per atom");
    if (raw.metric_kind == MetricKind::euclidean) {
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
          double d = (raw.points->row(i) - raw.points->row(j)).norm();
          if (std::abs(d - raw.metric(i, j)) > 1e-9)
            throw ValidationError("euclidean metric does not match points at (" +
                                  std::to_string(i) + "," + std::to_string(j) + ")");
        }
    }
  } else if (raw.metric_kind == MetricKind::euclidean) {
    throw ValidationError("euclidean metric_kind requires points");
  }

  raw.metric = ((raw.metric + raw.metric.transpose()) / 2.0).eval();
  raw.metric.diagonal().setZero();
  return raw;
}

double max_triangle_violation(const MmSpace& space) {
  const Eigen::Index n = space.n();
  double worst = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index k = 0; k < n; ++k)
        worst = std::max(worst, space.metric(i, k) - space.metric(i, j) - space.metric(j, k));
  return worst;
}

void validate_plan(const TransportPlan& plan, double tol) {
  if (plan.matrix.rows() != plan.row_marginal.size() ||
      plan.matrix.cols() != plan.col_marginal.size())
    throw MarginalError("plan shape does not match marginals");
  double neg = std::max(0.0, -plan.matrix.minCoeff());
  double row_err = (plan.matrix.rowwise().sum() - plan.row_marginal).cwiseAbs().maxCoeff();
  double col_err =
      (plan.matrix.colwise().sum().transpose() - plan.col_marginal).cwiseAbs().maxCoeff();
  double worst = std::max({neg, row_err, col_err});
  if (worst > tol)
    throw MarginalError("plan violates marginal constraints (max violation " +
                        format_double(worst) + ")");
}

TransportPlan product_plan(const Eigen::VectorXd& mu, const Eigen::VectorXd& nu) {
  return {mu * nu.transpose(), mu, nu};
}

Eigen::MatrixXd ThreePlan::collapse_reference() const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m, k);
  for (Eigen::Index i = 0; i < n; ++i) out += slice(i);
  return out;
}

void validate_three_plan(const ThreePlan& plan, double tol) {
  if (plan.marginal12.rows() != plan.n || plan.marginal12.cols() != plan.m ||
      plan.marginal13.rows() != plan.n || plan.marginal13.cols() != plan.k)
    throw MarginalError("three-plan marginal shapes do not match tensor");
  double worst = 0.0;
  for (Eigen::Index i = 0; i < plan.n; ++i) {
    auto s = plan.slice(i);
    worst = std::max(worst, (s.rowwise().sum().transpose() - plan.marginal12.row(i))
                                .cwiseAbs()
                                .maxCoeff());
    worst = std::max(worst,
                     (s.colwise().sum() - plan.marginal13.row(i)).cwiseAbs().maxCoeff());
  }
  for (double v : plan.tensor) worst = std::max(worst, -v);
  if (worst > tol)
    throw MarginalError("three-plan violates pair-marginal constraints (max violation " +
                        format_double(worst) + ")");
}

DistanceMatrix make_distance_matrix(DistanceMatrix raw, double tol) {
  const auto N = static_cast<Eigen::Index>(raw.ids.size());
  if (raw.values.rows() != N || raw.values.cols() != N)
    throw ValidationError("distance matrix must be N x N");
  if (raw.labels && static_cast<Eigen::Index>(raw.labels->size()) != N)
    throw ValidationError("labels must have one entry per id");
  if (N > 0) {
    double asym = (raw.values - raw.values.transpose()).cwiseAbs().maxCoeff();
    if (asym > tol) throw ValidationError("distance matrix must be symmetric");
    if (raw.values.diagonal().cwiseAbs().maxCoeff() > tol)
      throw ValidationError("distance matrix diagonal must be zero");
    if (raw.values.minCoeff() < 0.0)
      throw ValidationError("distance matrix entries must be nonnegative");
  }
  raw.values = ((raw.values + raw.values.transpose()) / 2.0).eval();
  raw.values.diagonal().setZero();
  return raw;
}

// --- JSON ------------------------------------------------------------------

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.empty()) throw ParseError(std::string(what) + " must be a nonempty array");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (!j[i].is_array() || static_cast<Eigen::Index>(j[i].size()) != cols)
      throw ParseError(std::string(what) + " rows must have equal length");
    for (Eigen::Index k = 0; k < cols; ++k) {
      if (!j[i][k].is_number()) throw ParseError(std::string(what) + " entries must be numbers");
      m(i, k) = j[i][k].get<double>();
    }
  }
  return m;
}

}  // namespace

MmSpace load_mm_space(const std::filesystem::path& path, bool drop_zero) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }

  MmSpace space;
  try {
    space.id = j.at("id").get<std::string>();
    if (j.contains("label") && !j["label"].is_null())
      space.label = j["label"].get<std::string>();
    space.metric_kind = metric_kind_from_string(j.at("metric_kind").get<std::string>());
    auto w = j.at("weights").get<std::vector<double>>();
    space.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
    space.metric = matrix_from_json(j.at("metric"), "metric");
    if (j.contains("points") && !j["points"].is_null())
      space.points = matrix_from_json(j["points"], "points");
    auto n = j.at("n").get<Eigen::Index>();
    if (n != space.weights.size())
      throw ValidationError("declared n does not match weights length");
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }

  if (drop_zero) {
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < space.weights.size(); ++i)
      if (space.weights[i] != 0.0) keep.push_back(i);
    if (keep.size() != static_cast<std::size_t>(space.weights.size())) {
      const auto k = static_cast<Eigen::Index>(keep.size());
      Eigen::VectorXd w(k);
      Eigen::MatrixXd m(k, k);
      for (Eigen::Index a = 0; a < k; ++a) {
        w[a] = space.weights[keep[a]];
        for (Eigen::Index b = 0; b < k; ++b) m(a, b) = space.metric(keep[a], keep[b]);
      }
      space.weights = std::move(w);
      space.metric = std::move(m);
      if (space.points) {
        Eigen::MatrixXd p(k, space.points->cols());
        for (Eigen::Index a = 0; a < k; ++a) p.row(a) = space.points->row(keep[a]);
        space.points = std::move(p);
      }
    }
  }

  return make_mm_space(std::move(space));
}

void save_mm_space(const MmSpace& space, const std::filesystem::path& path) {
  json j;
  j["id"] = space.id;
  j["label"] = space.label ? json(*space.label) : json(nullptr);
  j["n"] = space.n();
  j["weights"] = std::vector<double>(space.weights.data(), space.weights.data() + space.n());
  j["metric_kind"] = to_string(space.metric_kind);
  j["metric"] = matrix_to_json(space.metric);
  j["points"] = space.points ? matrix_to_json(*space.points) : json(nullptr);

  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

// --- CSV -------------------------------------------------------------------

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

void check_csv_safe(const std::string& s) {
  if (s.find(',') != std::string::npos || s.find('\n') != std::string::npos)
    throw ValidationError("id/label may not contain commas or newlines: '" + s + "'");
}

double parse_double(const std::string& s, const std::filesystem::path& path) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(path.string() + ": invalid number '" + s + "'");
  }
}

}  // namespace

void save_distance_matrix_csv(const DistanceMatrix& dist, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "id";
  for (const auto& id : dist.ids) {
    check_csv_safe(id);
    out << ',' << id;
  }
  out << '\n';
  for (Eigen::Index i = 0; i < dist.values.rows(); ++i) {
    out << dist.ids[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < dist.values.cols(); ++j)
      out << ',' << format_double(dist.values(i, j));
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

DistanceMatrix load_distance_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string() + ": empty file");
  auto header = split_csv_line(line);
  if (header.empty() || header[0] != "id")
    throw ParseError(path.string() + ": header must start with 'id'");

  DistanceMatrix dist;
  dist.ids.assign(header.begin() + 1, header.end());
  const auto N = static_cast<Eigen::Index>(dist.ids.size());
  dist.values.resize(N, N);
  for (Eigen::Index i = 0; i < N; ++i) {
    if (!std::getline(in, line))
      throw ParseError(path.string() + ": expected " + std::to_string(N) + " data rows");
    auto fields = split_csv_line(line);
    if (static_cast<Eigen::Index>(fields.size()) != N + 1)
      throw ParseError(path.string() + ": row " + std::to_string(i) + " has wrong field count");
    if (fields[0] != dist.ids[static_cast<std::size_t>(i)])
      throw ParseError(path.string() + ": row id order must match header");
    for (Eigen::Index j = 0; j < N; ++j)
      dist.values(i, j) = parse_double(fields[static_cast<std::size_t>(j + 1)], path);
  }
  return make_distance_matrix(std::move(dist));
}

void save_labels_csv(const std::vector<std::string>& ids, const std::vector<std::string>& labels,
                     const std::filesystem::path& path) {
  if (ids.size() != labels.size()) throw ValidationError("ids and labels must align");
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "id,label\n";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    check_csv_safe(ids[i]);
    check_csv_safe(labels[i]);
    out << ids[i] << ',' << labels[i] << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<std::string> load_labels_csv(const std::vector<std::string>& ids,
                                         const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || split_csv_line(line) != std::vector<std::string>{"id", "label"})
    throw ParseError(path.string() + ": header must be 'id,label'");
  std::vector<std::pair<std::string, std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != 2) throw ParseError(path.string() + ": rows must be 'id,label'");
    rows.emplace_back(fields[0], fields[1]);
  }
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    auto it = std::find_if(rows.begin(), rows.end(), [&](const auto& r) { return r.first == id; });
    if (it == rows.end()) throw IdMismatch("no label for id '" + id + "'");
    out.push_back(it->second);
  }
  return out;
}

void save_plan_csv(const TransportPlan& plan, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "i,j,mass\n";
  for (Eigen::Index i = 0; i < plan.matrix.rows(); ++i)
    for (Eigen::Index j = 0; j < plan.matrix.cols(); ++j)
      if (plan.matrix(i, j) != 0.0)
        out << i << ',' << j << ',' << format_double(plan.matrix(i, j)) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace gwt
