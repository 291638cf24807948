#include "gwt/gw.hpp"

#include <algorithm>
#include <cmath>

#include "gwt/rng.hpp"

namespace gwt {

std::string GwInit::tag() const {
  switch (kind) {
    case Kind::product: return "product";
    case Kind::wasserstein: return "wasserstein";
    case Kind::identity: return "identity";
    case Kind::random: return "random:" + std::to_string(seed);
    case Kind::plan: return "plan:" + label;
  }
  return "?";
}

namespace {

void check_coupling(const Eigen::MatrixXd& dx, const Eigen::MatrixXd& dy,
                    const Eigen::MatrixXd& plan) {
  if (plan.rows() != dx.rows() || plan.cols() != dy.rows())
    throw MarginalError("plan shape does not match the spaces");
}

double objective_impl(const Eigen::MatrixXd& dx, const Eigen::MatrixXd& dy,
                      const Eigen::MatrixXd& plan) {
  Eigen::VectorXd mu = plan.rowwise().sum();
  Eigen::VectorXd nu = plan.colwise().sum();
  double cx = mu.dot(dx.cwiseProduct(dx) * mu);
  double cy = nu.dot(dy.cwiseProduct(dy) * nu);
  double cross = (dx * plan * dy).cwiseProduct(plan).sum();
  return std::max(cx + cy - 2.0 * cross, 0.0);
}

}  // namespace

double gw_objective(const Eigen::MatrixXd& dx, const Eigen::MatrixXd& dy,
                    const Eigen::MatrixXd& plan) {
  check_coupling(dx, dy, plan);
  return objective_impl(dx, dy, plan);
}

double gw_objective(const MmSpace& space_x, const MmSpace& space_y, const TransportPlan& plan) {
  check_coupling(space_x.metric, space_y.metric, plan.matrix);
  validate_plan(plan);
  double row_gap = (plan.row_marginal - space_x.weights).cwiseAbs().maxCoeff();
  double col_gap = (plan.col_marginal - space_y.weights).cwiseAbs().maxCoeff();
  if (std::max(row_gap, col_gap) > 1e-9)
    throw MarginalError("plan does not couple the space weights (max gap " +
                        format_double(std::max(row_gap, col_gap)) + ")");
  return objective_impl(space_x.metric, space_y.metric, plan.matrix);
}

GwResult frank_wolfe_gw(const Eigen::MatrixXd& dx, const Eigen::MatrixXd& dy,
                        const TransportPlan& init, int max_iter, double rel_tol) {
  check_coupling(dx, dy, init.matrix);
  const Eigen::VectorXd& mu = init.row_marginal;
  const Eigen::VectorXd& nu = init.col_marginal;

  // constant parts of the gradient: marginal-contracted square terms
  Eigen::VectorXd cx = dx.cwiseProduct(dx) * mu;
  Eigen::VectorXd cy = dy.cwiseProduct(dy) * nu;
  const double constant = mu.dot(cx) + nu.dot(cy);

  Eigen::MatrixXd pi = init.matrix;
  Eigen::MatrixXd cross = dx * pi * dy;  // D_X pi D_Y, reused for value and gradient
  double f = std::max(constant - 2.0 * cross.cwiseProduct(pi).sum(), 0.0);

  GwResult result;
  result.objective_trace.push_back(f);
  TransportSimplex oracle(mu, nu);
  const Eigen::VectorXd cx2 = 2.0 * cx;
  const Eigen::RowVectorXd cy2 = 2.0 * cy.transpose();

  int it = 0;
  for (it = 0; it < max_iter; ++it) {
    Eigen::MatrixXd grad = -4.0 * cross;
    grad.colwise() += cx2;
    grad.rowwise() += cy2;
    oracle.solve(grad);
    Eigen::MatrixXd delta = oracle.plan() - pi;

    double lin = grad.cwiseProduct(delta).sum();
    if (lin >= -1e-14 * std::max(1.0, f)) {  // stationary: oracle cannot improve
      result.converged = true;
      break;
    }
    Eigen::MatrixXd cross_delta = dx * delta * dy;
    double quad = -2.0 * cross_delta.cwiseProduct(delta).sum();

    double step = 1.0;
    if (quad > 0.0) step = std::clamp(-lin / (2.0 * quad), 0.0, 1.0);

    pi += step * delta;
    cross += step * cross_delta;
    double f_next = std::max(f + step * lin + step * step * quad, 0.0);
    result.objective_trace.push_back(f_next);
    bool settled = std::abs(f_next - f) / std::max(f_next, 1e-16) < rel_tol;
    f = f_next;
    if (settled) {
      result.converged = true;
      ++it;
      break;
    }
  }

  result.plan = {std::move(pi), mu, nu};
  result.cost = objective_impl(dx, dy, result.plan.matrix);
  result.distance = std::sqrt(result.cost);
  result.iterations = it;
  return result;
}

TransportPlan wasserstein_init(const MmSpace& space_x, const MmSpace& space_y) {
  if (!space_x.points || !space_y.points)
    throw NoPointsError("both spaces need ambient points for the Wasserstein init");
  if (space_x.points->cols() != space_y.points->cols())
    throw NoPointsError("ambient dimensions differ");
  const Eigen::Index n = space_x.n(), m = space_y.n();
  Eigen::MatrixXd cost(n, m);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      cost(i, j) = (space_x.points->row(i) - space_y.points->row(j)).squaredNorm();
  return solve_ot(cost, space_x.weights, space_y.weights).plan;
}

TransportPlan random_vertex_plan(const Eigen::VectorXd& mu, const Eigen::VectorXd& nu,
                                 std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd cost(mu.size(), nu.size());
  for (Eigen::Index i = 0; i < cost.rows(); ++i)
    for (Eigen::Index j = 0; j < cost.cols(); ++j) cost(i, j) = rng.next_double();
  return solve_ot(cost, mu, nu).plan;
}

TransportPlan permutation_plan(const Eigen::VectorXd& mu, const std::vector<Eigen::Index>& perm) {
  const Eigen::Index n = mu.size();
  if (static_cast<Eigen::Index>(perm.size()) != n)
    throw DimensionMismatch("permutation length must match the weights");
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) m(i, perm[static_cast<std::size_t>(i)]) = mu[i];
  Eigen::VectorXd nu = m.colwise().sum();
  return {std::move(m), mu, std::move(nu)};
}

std::vector<GwInit> init_specs(const GwConfig& config) {
  if (!config.inits.empty()) return config.inits;
  std::vector<GwInit> specs;
  specs.push_back({GwInit::Kind::product, 0, nullptr, ""});
  specs.push_back({GwInit::Kind::wasserstein, 0, nullptr, ""});
  for (int r = 0; r < config.restarts; ++r)
    specs.push_back({GwInit::Kind::random,
                     substream(config.seed, "init", static_cast<std::uint64_t>(r)), nullptr, ""});
  return specs;
}

namespace {

// Materializes the starting plans for one (X, Y) pair; inapplicable
// specifiers (wasserstein without points, identity between incompatible
// weights) are skipped.
std::vector<std::pair<std::string, TransportPlan>> expand_inits(const MmSpace& x,
                                                                const MmSpace& y,
                                                                const GwConfig& config) {
  std::vector<GwInit> specs = init_specs(config);
  std::vector<std::pair<std::string, TransportPlan>> plans;
  for (const auto& spec : specs) {
    switch (spec.kind) {
      case GwInit::Kind::product:
        plans.emplace_back(spec.tag(), product_plan(x.weights, y.weights));
        break;
      case GwInit::Kind::wasserstein:
        if (x.points && y.points && x.points->cols() == y.points->cols())
          plans.emplace_back(spec.tag(), wasserstein_init(x, y));
        break;
      case GwInit::Kind::identity:
        if (x.n() == y.n() && (x.weights - y.weights).cwiseAbs().maxCoeff() <= 1e-9) {
          Eigen::MatrixXd m = x.weights.asDiagonal();
          plans.emplace_back(spec.tag(), TransportPlan{std::move(m), x.weights, y.weights});
        }
        break;
      case GwInit::Kind::random:
        plans.emplace_back(spec.tag(), random_vertex_plan(x.weights, y.weights, spec.seed));
        break;
      case GwInit::Kind::plan:
        if (!spec.plan) throw ValidationError("plan init without a plan");
        validate_plan(*spec.plan);
        plans.emplace_back(spec.tag(), *spec.plan);
        break;
    }
  }
  if (plans.empty()) plans.emplace_back("product", product_plan(x.weights, y.weights));
  return plans;
}

}  // namespace

GwResult solve_gw(const MmSpace& space_x, const MmSpace& space_y, const GwConfig& config) {
  if (config.max_iter < 1) throw ValidationError("maxIter must be at least 1");
  if (config.rel_tol <= 0.0) throw ValidationError("relTol must be positive");

  auto inits = expand_inits(space_x, space_y, config);
  GwResult best;
  bool have = false;
  for (auto& [tag, plan] : inits) {
    GwResult run = frank_wolfe_gw(space_x.metric, space_y.metric, plan, config.max_iter,
                                  config.rel_tol);
    run.init_used = tag;
    if (!have || run.cost < best.cost ||
        (run.cost == best.cost && run.init_used < best.init_used)) {
      best = std::move(run);
      have = true;
    }
  }
  return best;
}

}  // namespace gwt
