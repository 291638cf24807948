#pragma once

#include <filesystem>
#include <string>
#include <utility>

#include "gwt/gw.hpp"
#include "gwt/measure.hpp"
#include "gwt/ot.hpp"

namespace gwt {

// One target space lifted to the tangent representation at a fixed
// reference: the argmin barycentric map of a GW plan and the target
// metric pulled back through it.
struct LgwEmbedding {
  std::string ref_id;
  std::string target_id;
  BarycentricMap map;               // metric kind
  Eigen::MatrixXd embedded_metric;  // (i,j) -> d_target[map(i), map(j)]
  double plan_cost = 0.0;           // GW^2 of the plan behind the map
};

// map(i) = argmin_{x0} sum_j pi_ij d^2[x0, j]; ties go to the lowest
// target index. Works for arbitrary (geodesic/explicit) target metrics.
BarycentricMap generalized_barycentric_projection(const TransportPlan& plan,
                                                  const Eigen::MatrixXd& target_metric);

// solve_gw(ref, target), project the chosen plan, tabulate the embedded
// metric. One call per target; all pairwise gLGW values then cost O(n^2).
LgwEmbedding embed(const MmSpace& ref, const MmSpace& target, const GwConfig& config = {});

// ( sum_ij sigma_i sigma_j (A_ij - B_ij)^2 )^{1/2} over a shared reference.
double glgw(const Eigen::VectorXd& ref_weights, const LgwEmbedding& emb_a,
            const LgwEmbedding& emb_b);

// Conditionally independent gluing of two plans along the reference axis:
// slice_i = a_i b_i^T / sigma_i. Feasible starting point of the GW_S solver
// and the exact object in the Minkowski upper bound.
ThreePlan independent_glue(const TransportPlan& plan_a, const TransportPlan& plan_b);

// Frank-Wolfe over the 3-plan polytope Gamma_S(plan_a, plan_b) for the
// quadratic objective sum (d_X[j,j'] - d_Y[k,k'])^2 pi_ijk pi_i'j'k'.
// The linear oracle decouples per reference atom into independent
// transportation LPs. Starts from `init` when given (must lie in the
// polytope), otherwise from the independent glue. Returns the best
// feasible 3-plan and the square root of its objective (an upper bound
// on GW_S).
std::pair<ThreePlan, double> gw_s_three_plan(const MmSpace& ref, const TransportPlan& plan_a,
                                             const TransportPlan& plan_b,
                                             const Eigen::MatrixXd& metric_x,
                                             const Eigen::MatrixXd& metric_y,
                                             const GwConfig& config = {},
                                             const ThreePlan* init = nullptr);

struct LgwBoundReport {
  double gw_xy = 0.0;        // best found GW(X,Y), P23 glue among inits
  double gw_sx = 0.0;        // GW(S,X)
  double gw_sy = 0.0;        // GW(S,Y)
  double gw_s_value = 0.0;   // gw_s_three_plan value
  double glue_value = 0.0;   // objective at the independent glue
  bool lower_ok = false;     // gw_xy <= gw_s_value + tol
  bool upper_ok = false;     // gw_s_value <= glue_value <= gw_sx + gw_sy + tol
  double lower_slack = 0.0;  // gw_s_value - gw_xy
  double upper_slack = 0.0;  // gw_sx + gw_sy - glue_value
};

// Numerical check of the sandwich GW(X,Y) <= LGW_S(X,Y) <= GW(S,X) + GW(S,Y)
// at the plans the solver actually selects.
LgwBoundReport check_lgw_bounds(const MmSpace& ref, const MmSpace& space_x,
                                const MmSpace& space_y, const GwConfig& config = {},
                                double tol = 1e-6);

// Embedding store: one JSON per target so pairwise gLGW can be recomputed
// without re-running any GW solve.
void save_embedding(const LgwEmbedding& emb, const std::filesystem::path& path);
LgwEmbedding load_embedding(const std::filesystem::path& path);

}  // namespace gwt
