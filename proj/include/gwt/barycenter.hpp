#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "gwt/gw.hpp"
#include "gwt/measure.hpp"

namespace gwt {

struct BarycenterConfig {
  Eigen::Index points = 50;      // support size; weights are fixed uniform
  std::vector<double> lambdas;   // empty -> uniform over the inputs
  int outer_iters = 20;
  std::uint64_t seed = 0;
  GwConfig inner;                // solver knobs for the per-sweep GW solves
  // Starting metric; defaults to a seeded random symmetric U[0,1) matrix.
  std::optional<Eigen::MatrixXd> init_metric;
};

// Block coordinate descent for the fixed-support GW barycenter: each sweep
// solves GW(S, X_k) for every input (warm-started from the previous
// sweep's plans) and then replaces the metric with the closed-form
// weighted least-squares update
//     d_S[p,q] <- sum_k lambda_k (pi_k d_k pi_k^T)[p,q] / (w_p w_q),
// symmetrized with zero diagonal. Stops early once the metric moves by
// less than 1e-8. `objective_trace`, when given, receives
// sum_k lambda_k GW^2(S, X_k) after each sweep's solves.
MmSpace solve_barycenter(const std::vector<MmSpace>& spaces, const BarycenterConfig& config,
                         std::vector<double>* objective_trace = nullptr);

// sum_k lambda_k solve_gw(bary, X_k).cost
double barycenter_objective(const MmSpace& bary, const std::vector<MmSpace>& spaces,
                            const std::vector<double>& lambdas, const GwConfig& config = {});

}  // namespace gwt
