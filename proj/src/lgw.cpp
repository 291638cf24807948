#include "gwt/lgw.hpp"

#include <cmath>
#include <fstream>
#include <memory>

#include <json.hpp>

namespace gwt {

BarycentricMap generalized_barycentric_projection(const TransportPlan& plan,
                                                  const Eigen::MatrixXd& target_metric) {
  const Eigen::Index n = plan.matrix.rows();
  const Eigen::Index m = plan.matrix.cols();
  if (target_metric.rows() != m || target_metric.cols() != m)
    throw DimensionMismatch("target metric must match plan columns");
  for (Eigen::Index i = 0; i < n; ++i)
    if (plan.row_marginal[i] <= 0.0)
      throw ZeroRowError("reference atom " + std::to_string(i) + " carries no mass");

  // cost(i, x0) = sum_j pi_ij d^2[x0, j]
  Eigen::MatrixXd cost = plan.matrix * target_metric.cwiseProduct(target_metric);
  BarycentricMap map;
  map.kind = BarycentricMap::Kind::metric;
  map.indices.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index x0 = 1; x0 < m; ++x0)
      if (cost(i, x0) < cost(i, best)) best = x0;
    map.indices[static_cast<std::size_t>(i)] = best;
  }
  return map;
}

LgwEmbedding embed(const MmSpace& ref, const MmSpace& target, const GwConfig& config) {
  GwResult gw = solve_gw(ref, target, config);
  LgwEmbedding emb;
  emb.ref_id = ref.id;
  emb.target_id = target.id;
  emb.map = generalized_barycentric_projection(gw.plan, target.metric);
  emb.plan_cost = gw.cost;
  const Eigen::Index n = ref.n();
  emb.embedded_metric.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      emb.embedded_metric(i, j) = target.metric(emb.map.indices[static_cast<std::size_t>(i)],
                                                emb.map.indices[static_cast<std::size_t>(j)]);
  return emb;
}

double glgw(const Eigen::VectorXd& ref_weights, const LgwEmbedding& emb_a,
            const LgwEmbedding& emb_b) {
  if (emb_a.ref_id != emb_b.ref_id)
    throw RefMismatch("embeddings use different references ('" + emb_a.ref_id + "' vs '" +
                      emb_b.ref_id + "')");
  const Eigen::Index n = ref_weights.size();
  if (emb_a.embedded_metric.rows() != n || emb_b.embedded_metric.rows() != n)
    throw RefMismatch("embedding size does not match the reference weights");
  Eigen::MatrixXd diff = emb_a.embedded_metric - emb_b.embedded_metric;
  double sq = ref_weights.dot(diff.cwiseProduct(diff) * ref_weights);
  return std::sqrt(std::max(sq, 0.0));
}

ThreePlan independent_glue(const TransportPlan& plan_a, const TransportPlan& plan_b) {
  const Eigen::Index n = plan_a.matrix.rows();
  const Eigen::Index m = plan_a.matrix.cols();
  const Eigen::Index k = plan_b.matrix.cols();
  ThreePlan glue;
  glue.n = n;
  glue.m = m;
  glue.k = k;
  glue.tensor.assign(static_cast<std::size_t>(n * m * k), 0.0);
  glue.marginal12 = plan_a.matrix;
  glue.marginal13 = plan_b.matrix;
  for (Eigen::Index i = 0; i < n; ++i) {
    double sigma = plan_a.row_marginal[i];
    if (sigma <= 0.0) continue;
    for (Eigen::Index j = 0; j < m; ++j) {
      double aj = plan_a.matrix(i, j);
      if (aj == 0.0) continue;
      for (Eigen::Index l = 0; l < k; ++l) glue.at(i, j, l) = aj * plan_b.matrix(i, l) / sigma;
    }
  }
  return glue;
}

std::pair<ThreePlan, double> gw_s_three_plan(const MmSpace& ref, const TransportPlan& plan_a,
                                             const TransportPlan& plan_b,
                                             const Eigen::MatrixXd& metric_x,
                                             const Eigen::MatrixXd& metric_y,
                                             const GwConfig& config, const ThreePlan* init) {
  const Eigen::Index n = ref.n();
  const Eigen::Index m = plan_a.matrix.cols();
  const Eigen::Index k = plan_b.matrix.cols();
  if (plan_a.matrix.rows() != n || plan_b.matrix.rows() != n)
    throw MarginalError("plans must start at the reference space");
  double ref_gap = (plan_a.row_marginal - plan_b.row_marginal).cwiseAbs().maxCoeff();
  if (ref_gap > 1e-9)
    throw MarginalError("reference marginals differ by " + format_double(ref_gap));
  if (metric_x.rows() != m || metric_y.rows() != k)
    throw DimensionMismatch("metrics must match the plan targets");

  ThreePlan plan;
  if (init) {
    if (init->n != n || init->m != m || init->k != k)
      throw MarginalError("init three-plan has the wrong shape");
    plan = *init;
    plan.marginal12 = plan_a.matrix;
    plan.marginal13 = plan_b.matrix;
    validate_three_plan(plan);
  } else {
    plan = independent_glue(plan_a, plan_b);
  }

  // The objective only depends on the collapsed coupling p = P23 # pi,
  // whose marginals are fixed; run Frank-Wolfe tracking p alongside pi.
  Eigen::MatrixXd p = plan.collapse_reference();
  Eigen::VectorXd mu = plan_a.matrix.colwise().sum();
  Eigen::VectorXd nu = plan_b.matrix.colwise().sum();
  Eigen::VectorXd cx2 = 2.0 * (metric_x.cwiseProduct(metric_x) * mu);
  Eigen::VectorXd cy2 = 2.0 * (metric_y.cwiseProduct(metric_y) * nu);
  const double constant = 0.5 * (mu.dot(cx2) + nu.dot(cy2));

  Eigen::MatrixXd cross = metric_x * p * metric_y;
  double f = std::max(constant - 2.0 * cross.cwiseProduct(p).sum(), 0.0);

  // one warm oracle per reference atom (the conditional marginals are fixed)
  std::vector<std::unique_ptr<TransportSimplex>> oracles(static_cast<std::size_t>(n));
  std::vector<double> sigmas(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    double sigma = plan_a.row_marginal[i];
    sigmas[static_cast<std::size_t>(i)] = sigma;
    if (sigma <= 0.0) continue;
    oracles[static_cast<std::size_t>(i)] = std::make_unique<TransportSimplex>(
        plan_a.matrix.row(i).transpose() / sigma, plan_b.matrix.row(i).transpose() / sigma);
  }

  ThreePlan candidate = plan;  // scratch for the oracle output
  for (int it = 0; it < config.max_iter; ++it) {
    Eigen::MatrixXd grad = -4.0 * cross;
    grad.colwise() += cx2;
    grad.rowwise() += cy2.transpose();

    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(m, k);
    for (Eigen::Index i = 0; i < n; ++i) {
      auto& oracle = oracles[static_cast<std::size_t>(i)];
      if (!oracle) continue;
      oracle->solve(grad);
      double sigma = sigmas[static_cast<std::size_t>(i)];
      Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> slice(
          candidate.tensor.data() + i * m * k, m, k);
      slice = sigma * oracle->plan();
      q += slice;
    }

    Eigen::MatrixXd delta = q - p;
    double lin = grad.cwiseProduct(delta).sum();
    if (lin >= -1e-14 * std::max(1.0, f)) break;
    Eigen::MatrixXd cross_delta = metric_x * delta * metric_y;
    double quad = -2.0 * cross_delta.cwiseProduct(delta).sum();
    double step = 1.0;
    if (quad > 0.0) step = std::clamp(-lin / (2.0 * quad), 0.0, 1.0);

    for (std::size_t t = 0; t < plan.tensor.size(); ++t)
      plan.tensor[t] += step * (candidate.tensor[t] - plan.tensor[t]);
    p += step * delta;
    cross += step * cross_delta;
    double f_next = std::max(f + step * lin + step * step * quad, 0.0);
    bool settled = std::abs(f_next - f) / std::max(f_next, 1e-16) < config.rel_tol;
    f = f_next;
    if (settled) break;
  }

  double value = gw_objective(metric_x, metric_y, plan.collapse_reference());
  return {std::move(plan), std::sqrt(value)};
}

LgwBoundReport check_lgw_bounds(const MmSpace& ref, const MmSpace& space_x,
                                const MmSpace& space_y, const GwConfig& config, double tol) {
  GwResult sx = solve_gw(ref, space_x, config);
  GwResult sy = solve_gw(ref, space_y, config);

  ThreePlan glue = independent_glue(sx.plan, sy.plan);
  double glue_value =
      std::sqrt(gw_objective(space_x.metric, space_y.metric, glue.collapse_reference()));

  auto [three, value] =
      gw_s_three_plan(ref, sx.plan, sy.plan, space_x.metric, space_y.metric, config);

  GwConfig xy_config = config;
  xy_config.inits = init_specs(config);
  auto p23 = std::make_shared<TransportPlan>();
  p23->matrix = three.collapse_reference();
  p23->row_marginal = p23->matrix.rowwise().sum();
  p23->col_marginal = p23->matrix.colwise().sum();
  xy_config.inits.push_back({GwInit::Kind::plan, 0, p23, "p23-glue"});

  GwResult xy = solve_gw(space_x, space_y, xy_config);

  LgwBoundReport report;
  report.gw_xy = xy.distance;
  report.gw_sx = sx.distance;
  report.gw_sy = sy.distance;
  report.gw_s_value = value;
  report.glue_value = glue_value;
  report.lower_ok = xy.distance <= value + tol;
  report.upper_ok = value <= glue_value + tol && glue_value <= sx.distance + sy.distance + tol;
  report.lower_slack = value - xy.distance;
  report.upper_slack = sx.distance + sy.distance - glue_value;
  return report;
}

void save_embedding(const LgwEmbedding& emb, const std::filesystem::path& path) {
  nlohmann::json j;
  j["ref_id"] = emb.ref_id;
  j["target_id"] = emb.target_id;
  j["map"] = emb.map.indices;
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < emb.embedded_metric.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < emb.embedded_metric.cols(); ++c)
      row.push_back(emb.embedded_metric(i, c));
    rows.push_back(std::move(row));
  }
  j["embedded_metric"] = std::move(rows);
  j["plan_cost"] = emb.plan_cost;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

LgwEmbedding load_embedding(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  LgwEmbedding emb;
  try {
    emb.ref_id = j.at("ref_id").get<std::string>();
    emb.target_id = j.at("target_id").get<std::string>();
    emb.map.kind = BarycentricMap::Kind::metric;
    emb.map.indices = j.at("map").get<std::vector<Eigen::Index>>();
    auto rows = j.at("embedded_metric");
    const auto n = static_cast<Eigen::Index>(rows.size());
    emb.embedded_metric.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (static_cast<Eigen::Index>(rows[i].size()) != n)
        throw ParseError(path.string() + ": embedded_metric must be square");
      for (Eigen::Index c = 0; c < n; ++c) emb.embedded_metric(i, c) = rows[i][c].get<double>();
    }
    emb.plan_cost = j.at("plan_cost").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return emb;
}

}  // namespace gwt
