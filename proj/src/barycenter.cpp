#include "gwt/barycenter.hpp"

#include <cmath>

#include "gwt/rng.hpp"

namespace gwt {

namespace {

std::vector<double> resolve_lambdas(std::size_t count, const std::vector<double>& given) {
  if (given.empty()) return std::vector<double>(count, 1.0 / static_cast<double>(count));
  if (given.size() != count) throw ValidationError("lambdas must have one entry per space");
  double sum = 0.0;
  for (double l : given) {
    if (l < 0.0) throw ValidationError("lambdas must be nonnegative");
    sum += l;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("lambdas must sum to 1");
  std::vector<double> out = given;
  for (double& l : out) l /= sum;
  return out;
}

Eigen::MatrixXd random_symmetric_metric(Eigen::Index p, std::uint64_t seed) {
  Rng rng(substream(seed, "bary-init"));
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = i + 1; j < p; ++j) m(i, j) = m(j, i) = rng.next_double();
  return m;
}

}  // namespace

MmSpace solve_barycenter(const std::vector<MmSpace>& spaces, const BarycenterConfig& config,
                         std::vector<double>* objective_trace) {
  if (spaces.empty()) throw ValidationError("barycenter needs at least one space");
  if (config.points < 1) throw ValidationError("barycenter support size must be positive");
  const auto lambdas = resolve_lambdas(spaces.size(), config.lambdas);
  const Eigen::Index p = config.points;

  MmSpace bary;
  bary.id = "barycenter-s" + std::to_string(config.seed) + "-p" + std::to_string(p);
  bary.metric_kind = MetricKind::explicit_;
  bary.weights = Eigen::VectorXd::Constant(p, 1.0 / static_cast<double>(p));
  if (config.init_metric) {
    if (config.init_metric->rows() != p || config.init_metric->cols() != p)
      throw ValidationError("init metric must be points x points");
    bary.metric = *config.init_metric;
  } else {
    bary.metric = random_symmetric_metric(p, config.seed);
  }

  const Eigen::VectorXd w = bary.weights;
  const Eigen::MatrixXd inv_ww =
      (w * w.transpose()).cwiseInverse();  // uniform weights, all entries p^2

  std::vector<TransportPlan> plans(spaces.size());
  bool warm = false;
  for (int sweep = 0; sweep < config.outer_iters; ++sweep) {
    double objective = 0.0;
    for (std::size_t k = 0; k < spaces.size(); ++k) {
      GwConfig inner = config.inner;
      if (warm) {
        inner.inits.clear();
        inner.inits.push_back({GwInit::Kind::plan, 0,
                               std::make_shared<TransportPlan>(plans[k]), "warm"});
      }
      GwResult run = solve_gw(bary, spaces[k], inner);
      plans[k] = std::move(run.plan);
      objective += lambdas[k] * run.cost;
    }
    warm = true;
    if (objective_trace) objective_trace->push_back(objective);

    Eigen::MatrixXd next = Eigen::MatrixXd::Zero(p, p);
    for (std::size_t k = 0; k < spaces.size(); ++k)
      next += lambdas[k] * (plans[k].matrix * spaces[k].metric * plans[k].matrix.transpose());
    next = next.cwiseProduct(inv_ww);
    next = ((next + next.transpose()) / 2.0).eval();
    next.diagonal().setZero();

    double change = (next - bary.metric).cwiseAbs().maxCoeff();
    bary.metric = std::move(next);
    if (change < 1e-8) break;
  }

  return make_mm_space(std::move(bary));
}

double barycenter_objective(const MmSpace& bary, const std::vector<MmSpace>& spaces,
                            const std::vector<double>& lambdas, const GwConfig& config) {
  const auto weights = resolve_lambdas(spaces.size(), lambdas);
  double total = 0.0;
  for (std::size_t k = 0; k < spaces.size(); ++k)
    total += weights[k] * solve_gw(bary, spaces[k], config).cost;
  return total;
}

}  // namespace gwt
