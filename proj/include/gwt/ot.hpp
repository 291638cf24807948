#pragma once

#include <Eigen/Core>
#include <utility>
#include <vector>

#include "gwt/measure.hpp"

namespace gwt {

struct OtResult {
  TransportPlan plan;
  double cost;      // sum c_ij pi_ij at the optimum
  double distance;  // sqrt(cost) when cost >= 0, else 0
};

// Exact solver for the transportation LP
//     min sum_ij c_ij pi_ij  s.t.  pi 1 = mu, pi^T 1 = nu, pi >= 0.
// Primal network simplex on the bipartite tree basis. Entering arc by
// most-negative reduced cost with lowest (row, col) lexicographic
// tie-break; falls back to Bland's rule after a long degenerate stall so
// cycling cannot occur. The returned plan is a vertex: at most n+m-1
// nonzero entries. Weight sums may differ by at most 1e-9 (nu is then
// rescaled to match mu exactly); otherwise InfeasibleError.
//
// The cost matrix is arbitrary (may be negative); this doubles as the
// linear-minimization oracle inside the Gromov-Wasserstein solver.
OtResult solve_ot(const Eigen::MatrixXd& cost, const Eigen::VectorXd& mu,
                  const Eigen::VectorXd& nu);

// Reusable solver keeping the basis between calls with different costs on
// the same marginals. solve() warm-starts from the previous optimal tree.
class TransportSimplex {
 public:
  TransportSimplex(Eigen::VectorXd mu, Eigen::VectorXd nu);

  double solve(const Eigen::MatrixXd& cost);
  const Eigen::MatrixXd& plan() const { return flow_; }

 private:
  void build_northwest_basis();
  void rebuild_tree();
  int run_pivots(const Eigen::MatrixXd& cost);

  Eigen::Index n_, m_;
  Eigen::VectorXd mu_, nu_;
  Eigen::MatrixXd flow_;
  std::vector<std::pair<int, int>> basis_;  // tree arcs as (row, col)
  std::vector<std::vector<int>> adj_;       // node -> basis arc ids
  std::vector<int> parent_, parent_arc_, depth_, order_;
  std::vector<double> potential_;
  bool has_basis_ = false;
};

// Assignment of each reference atom to either an ambient point (the mean
// of its conditional distribution) or a target support index.
struct BarycentricMap {
  enum class Kind { euclidean, metric };
  Kind kind = Kind::euclidean;
  Eigen::MatrixXd points;             // euclidean: one row per reference atom
  std::vector<Eigen::Index> indices;  // metric: one target index per atom

  Eigen::Index size() const {
    return kind == Kind::euclidean ? points.rows()
                                   : static_cast<Eigen::Index>(indices.size());
  }
};

// targets[i] = (1/sigma_i) sum_j pi_ij x_j. Rows with zero mass have no
// conditional distribution: ZeroRowError.
BarycentricMap euclidean_barycentric_projection(const TransportPlan& plan,
                                                const Eigen::MatrixXd& target_points);

// ( sum_i sigma_i ||T_A(s_i) - T_B(s_i)||^2 )^{1/2} for two Euclidean maps
// over the same reference. The optimal-plan infimum is deliberately not
// taken; the maps come from fixed solver-selected plans.
double glot(const Eigen::VectorXd& ref_weights, const BarycentricMap& map_a,
            const BarycentricMap& map_b);

// Minimizes the linear cost sum_ijk ||x_j - y_k||^2 pi_ijk over all
// 3-plans with pair-marginals (plan_a, plan_b). The constraints decouple
// per reference atom, so this solves n independent transportation LPs on
// the conditional rows and rescales. Returns the optimal 3-plan and the
// square root of the objective.
std::pair<ThreePlan, double> w_sigma_lp(const TransportPlan& plan_a, const TransportPlan& plan_b,
                                        const Eigen::MatrixXd& points_x,
                                        const Eigen::MatrixXd& points_y);

}  // namespace gwt
