#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "gwt/measure.hpp"
#include "gwt/ot.hpp"

namespace gwt {

// One starting plan for the Frank-Wolfe solver. `tag` orders results when
// several inits reach the same cost, so multi-start runs are reproducible.
struct GwInit {
  enum class Kind { product, wasserstein, identity, random, plan };
  Kind kind = Kind::product;
  std::uint64_t seed = 0;                     // random(seed)
  std::shared_ptr<const TransportPlan> plan;  // plan(...)
  std::string label;                          // plan(...) display name

  std::string tag() const;
};

struct GwConfig {
  int max_iter = 1000;
  double rel_tol = 1e-9;
  // Empty means the default set: product, wasserstein (when both spaces
  // carry points), and `restarts` seeded random vertex plans.
  std::vector<GwInit> inits;
  int restarts = 5;
  std::uint64_t seed = 0;
};

struct GwResult {
  TransportPlan plan;
  double cost = 0.0;      // quartic objective at the plan (GW^2 upper bound)
  double distance = 0.0;  // sqrt(cost)
  int iterations = 0;
  bool converged = false;
  std::string init_used;
  std::vector<double> objective_trace;  // objective after every FW iteration
};

// Quartic distortion sum_{ii'jj'} (d_X[i,i'] - d_Y[j,j'])^2 pi_ij pi_i'j',
// evaluated in O(n^2 m + n m^2) through the squared-loss decomposition.
double gw_objective(const MmSpace& space_x, const MmSpace& space_y, const TransportPlan& plan);

// Same quantity for raw matrices; `plan` must couple mu and nu.
double gw_objective(const Eigen::MatrixXd& dx, const Eigen::MatrixXd& dy,
                    const Eigen::MatrixXd& plan);

// Multi-start Frank-Wolfe (conditional gradient) over the coupling
// polytope: linearize, solve_ot the gradient, exact line search on the
// quadratic segment objective. Keeps the best init by (cost, tag). The
// returned cost is an upper bound on GW^2; the objective trace is
// non-increasing per iteration.
GwResult solve_gw(const MmSpace& space_x, const MmSpace& space_y, const GwConfig& config = {});

// Single Frank-Wolfe run from a given feasible plan.
GwResult frank_wolfe_gw(const Eigen::MatrixXd& dx, const Eigen::MatrixXd& dy,
                        const TransportPlan& init, int max_iter = 1000, double rel_tol = 1e-9);

// Optimal squared-Euclidean coupling of the ambient points, the starting
// value used for GW runs between point clouds.
TransportPlan wasserstein_init(const MmSpace& space_x, const MmSpace& space_y);

// Vertex plan from a seeded U[0,1) cost matrix (row-major fill order).
TransportPlan random_vertex_plan(const Eigen::VectorXd& mu, const Eigen::VectorXd& nu,
                                 std::uint64_t seed);

// pi[i, perm[i]] = mu[i]; requires equal sizes.
TransportPlan permutation_plan(const Eigen::VectorXd& mu,
                               const std::vector<Eigen::Index>& perm);

// The init specifiers solve_gw will run: config.inits verbatim when given,
// otherwise the default set (product, wasserstein, `restarts` seeded
// random plans).
std::vector<GwInit> init_specs(const GwConfig& config);

}  // namespace gwt
