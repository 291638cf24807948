#include "gwt/ot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gwt {

namespace {

constexpr int kNoNode = -1;

// Degenerate pivots tolerated before switching to Bland's rule.
int stall_limit(Eigen::Index n, Eigen::Index m) { return 64 + 4 * static_cast<int>(n + m); }

}  // namespace

TransportSimplex::TransportSimplex(Eigen::VectorXd mu, Eigen::VectorXd nu)
    : n_(mu.size()), m_(nu.size()), mu_(std::move(mu)), nu_(std::move(nu)) {
  if (n_ < 1 || m_ < 1) throw InfeasibleError("marginals must be nonempty");
  if (mu_.minCoeff() < 0.0 || nu_.minCoeff() < 0.0)
    throw InfeasibleError("marginals must be nonnegative");
  double su = mu_.sum(), sv = nu_.sum();
  if (su <= 0.0 || sv <= 0.0) throw InfeasibleError("marginals must carry positive mass");
  if (std::abs(su - sv) > 1e-9)
    throw InfeasibleError("weight sums differ by " + format_double(std::abs(su - sv)));
  nu_ *= su / sv;  // make the balance exact

  flow_.setZero(n_, m_);
  const auto nodes = static_cast<std::size_t>(n_ + m_);
  adj_.resize(nodes);
  parent_.resize(nodes);
  parent_arc_.resize(nodes);
  depth_.resize(nodes);
  order_.reserve(nodes);
  potential_.resize(nodes);
}

void TransportSimplex::build_northwest_basis() {
  basis_.clear();
  basis_.reserve(static_cast<std::size_t>(n_ + m_ - 1));
  Eigen::VectorXd a = mu_, b = nu_;
  Eigen::Index i = 0, j = 0;
  while (true) {
    basis_.emplace_back(static_cast<int>(i), static_cast<int>(j));
    double f = std::min(a[i], b[j]);
    a[i] -= f;
    b[j] -= f;
    if (i == n_ - 1 && j == m_ - 1) break;
    if (j == m_ - 1 || (a[i] <= 0.0 && i < n_ - 1))
      ++i;
    else
      ++j;
  }
  has_basis_ = true;
}

// Recomputes adjacency, the rooted tree (parent/depth/BFS order) and the
// exact basic flows by leaf elimination. O(n+m); called once per pivot so
// flows never accumulate drift.
void TransportSimplex::rebuild_tree() {
  const int nodes = static_cast<int>(n_ + m_);
  for (auto& v : adj_) v.clear();
  for (int a = 0; a < static_cast<int>(basis_.size()); ++a) {
    adj_[static_cast<std::size_t>(basis_[a].first)].push_back(a);
    adj_[static_cast<std::size_t>(n_) + basis_[a].second].push_back(a);
  }
  order_.clear();
  std::fill(parent_.begin(), parent_.end(), kNoNode);
  parent_[0] = 0;  // root marker
  depth_[0] = 0;
  order_.push_back(0);
  for (std::size_t head = 0; head < order_.size(); ++head) {
    int v = order_[head];
    for (int a : adj_[static_cast<std::size_t>(v)]) {
      int u = basis_[static_cast<std::size_t>(a)].first;
      int w = static_cast<int>(n_) + basis_[static_cast<std::size_t>(a)].second;
      int other = (u == v) ? w : u;
      if (parent_[static_cast<std::size_t>(other)] == kNoNode) {
        parent_[static_cast<std::size_t>(other)] = v;
        parent_arc_[static_cast<std::size_t>(other)] = a;
        depth_[static_cast<std::size_t>(other)] = depth_[static_cast<std::size_t>(v)] + 1;
        order_.push_back(other);
      }
    }
  }
  if (static_cast<int>(order_.size()) != nodes)
    throw Error("network simplex basis is not a spanning tree");
  parent_[0] = kNoNode;

  // leaf elimination: flow on the arc to the parent = subtree residual
  flow_.setZero();
  static thread_local std::vector<double> resid;
  resid.assign(static_cast<std::size_t>(nodes), 0.0);
  for (Eigen::Index r = 0; r < n_; ++r) resid[static_cast<std::size_t>(r)] = mu_[r];
  for (Eigen::Index c = 0; c < m_; ++c) resid[static_cast<std::size_t>(n_ + c)] = nu_[c];
  for (std::size_t head = order_.size(); head-- > 1;) {
    int v = order_[head];
    auto [i, j] = basis_[static_cast<std::size_t>(parent_arc_[static_cast<std::size_t>(v)])];
    double f = std::max(resid[static_cast<std::size_t>(v)], 0.0);
    flow_(i, j) = f;
    resid[static_cast<std::size_t>(parent_[static_cast<std::size_t>(v)])] -=
        resid[static_cast<std::size_t>(v)];
  }
}

int TransportSimplex::run_pivots(const Eigen::MatrixXd& cost) {
  const double eps = 1e-13 * std::max(1.0, cost.cwiseAbs().maxCoeff());
  const int max_pivots = 2000 + 200 * static_cast<int>(n_ + m_) +
                         4 * static_cast<int>(n_ * m_);
  int stall = 0;
  bool bland = false;

  static thread_local std::vector<int> cells, path_up, path_down;

  for (int pivot = 0; pivot < max_pivots; ++pivot) {
    // potentials from the rooted tree: u_i + v_j = c_ij on basis arcs
    for (int v : order_) {
      if (parent_[static_cast<std::size_t>(v)] == kNoNode) {
        potential_[static_cast<std::size_t>(v)] = 0.0;
        continue;
      }
      auto [i, j] = basis_[static_cast<std::size_t>(parent_arc_[static_cast<std::size_t>(v)])];
      double c = cost(i, j);
      if (v < static_cast<int>(n_))
        potential_[static_cast<std::size_t>(v)] =
            c - potential_[static_cast<std::size_t>(n_) + j];
      else
        potential_[static_cast<std::size_t>(v)] = c - potential_[static_cast<std::size_t>(i)];
    }

    // entering arc: Dantzig with lexicographic ties, or Bland when stalled
    int ei = kNoNode, ej = kNoNode;
    double best = -eps;
    for (Eigen::Index j = 0; j < m_; ++j) {
      const double vj = potential_[static_cast<std::size_t>(n_ + j)];
      for (Eigen::Index i = 0; i < n_; ++i) {
        double rc = cost(i, j) - potential_[static_cast<std::size_t>(i)] - vj;
        bool take;
        if (bland)
          take = rc < -eps && (ei == kNoNode || std::pair(static_cast<int>(i), static_cast<int>(j)) <
                                                    std::pair(ei, ej));
        else
          take = rc < best ||
                 (rc == best && ei != kNoNode &&
                  std::pair(static_cast<int>(i), static_cast<int>(j)) < std::pair(ei, ej));
        if (take) {
          if (!bland) best = rc;
          ei = static_cast<int>(i);
          ej = static_cast<int>(j);
        }
      }
    }
    if (ei == kNoNode) return pivot;  // optimal

    // cycle: entering cell + the tree path from col node back to row node
    int a = static_cast<int>(n_) + ej, b = ei;
    path_up.clear();
    path_down.clear();
    while (depth_[static_cast<std::size_t>(a)] > depth_[static_cast<std::size_t>(b)]) {
      path_up.push_back(parent_arc_[static_cast<std::size_t>(a)]);
      a = parent_[static_cast<std::size_t>(a)];
    }
    while (depth_[static_cast<std::size_t>(b)] > depth_[static_cast<std::size_t>(a)]) {
      path_down.push_back(parent_arc_[static_cast<std::size_t>(b)]);
      b = parent_[static_cast<std::size_t>(b)];
    }
    while (a != b) {
      path_up.push_back(parent_arc_[static_cast<std::size_t>(a)]);
      a = parent_[static_cast<std::size_t>(a)];
      path_down.push_back(parent_arc_[static_cast<std::size_t>(b)]);
      b = parent_[static_cast<std::size_t>(b)];
    }
    cells.clear();
    cells.insert(cells.end(), path_up.begin(), path_up.end());
    cells.insert(cells.end(), path_down.rbegin(), path_down.rend());

    // signs alternate along the cycle; with the entering cell at position 0,
    // cells[0], cells[2], ... lose theta. Leaving arc = lexicographically
    // smallest cell attaining the minimum (Bland-consistent).
    double theta = std::numeric_limits<double>::infinity();
    int leave = kNoNode;
    for (std::size_t p = 0; p < cells.size(); p += 2) {
      auto [i, j] = basis_[static_cast<std::size_t>(cells[p])];
      double f = std::max(flow_(i, j), 0.0);
      bool take = f < theta;
      if (!take && f == theta && leave != kNoNode) {
        auto [li, lj] = basis_[static_cast<std::size_t>(cells[static_cast<std::size_t>(leave)])];
        take = std::pair(i, j) < std::pair(li, lj);
      }
      if (take) {
        theta = f;
        leave = static_cast<int>(p);
      }
    }
    if (leave == kNoNode) throw Error("network simplex found no leaving arc");

    stall = (theta <= 0.0) ? stall + 1 : 0;
    if (stall > stall_limit(n_, m_)) bland = true;
    if (stall == 0) bland = false;

    basis_[static_cast<std::size_t>(cells[static_cast<std::size_t>(leave)])] = {ei, ej};
    rebuild_tree();
  }
  throw Error("network simplex exceeded the pivot limit");
}

double TransportSimplex::solve(const Eigen::MatrixXd& cost) {
  if (cost.rows() != n_ || cost.cols() != m_) throw DimensionMismatch("cost matrix shape");
  if (!cost.allFinite()) throw InfeasibleError("cost matrix must be finite");
  if (!has_basis_) {
    build_northwest_basis();
    rebuild_tree();
  }
  run_pivots(cost);
  return (cost.array() * flow_.array()).sum();
}

OtResult solve_ot(const Eigen::MatrixXd& cost, const Eigen::VectorXd& mu,
                  const Eigen::VectorXd& nu) {
  TransportSimplex solver(mu, nu);
  double value = solver.solve(cost);
  OtResult result;
  result.plan = {solver.plan(), mu, nu * (mu.sum() / nu.sum())};
  result.cost = value;
  result.distance = value > 0.0 ? std::sqrt(value) : 0.0;
  return result;
}

BarycentricMap euclidean_barycentric_projection(const TransportPlan& plan,
                                                const Eigen::MatrixXd& target_points) {
  if (plan.matrix.cols() != target_points.rows())
    throw DimensionMismatch("plan columns must match target points");
  const Eigen::Index n = plan.matrix.rows();
  for (Eigen::Index i = 0; i < n; ++i)
    if (plan.row_marginal[i] <= 0.0)
      throw ZeroRowError("reference atom " + std::to_string(i) + " carries no mass");

  BarycentricMap map;
  map.kind = BarycentricMap::Kind::euclidean;
  map.points = (plan.matrix * target_points).array().colwise() /
               plan.row_marginal.array();
  return map;
}

double glot(const Eigen::VectorXd& ref_weights, const BarycentricMap& map_a,
            const BarycentricMap& map_b) {
  if (map_a.kind != BarycentricMap::Kind::euclidean ||
      map_b.kind != BarycentricMap::Kind::euclidean)
    throw DimensionMismatch("glot needs euclidean barycentric maps");
  if (map_a.points.rows() != ref_weights.size() || map_b.points.rows() != ref_weights.size() ||
      map_a.points.cols() != map_b.points.cols())
    throw DimensionMismatch("barycentric maps must share reference size and dimension");
  double sq = (ref_weights.array() *
               (map_a.points - map_b.points).rowwise().squaredNorm().array())
                  .sum();
  return std::sqrt(std::max(sq, 0.0));
}

std::pair<ThreePlan, double> w_sigma_lp(const TransportPlan& plan_a, const TransportPlan& plan_b,
                                        const Eigen::MatrixXd& points_x,
                                        const Eigen::MatrixXd& points_y) {
  const Eigen::Index n = plan_a.matrix.rows();
  const Eigen::Index m = plan_a.matrix.cols();
  const Eigen::Index k = plan_b.matrix.cols();
  if (plan_b.matrix.rows() != n) throw MarginalError("plans must share the reference axis");
  double ref_gap = (plan_a.row_marginal - plan_b.row_marginal).cwiseAbs().maxCoeff();
  if (ref_gap > 1e-9)
    throw MarginalError("reference marginals differ by " + format_double(ref_gap));
  if (points_x.rows() != m || points_y.rows() != k || points_x.cols() != points_y.cols())
    throw DimensionMismatch("target point clouds do not match the plans");

  Eigen::MatrixXd cost(m, k);
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index l = 0; l < k; ++l)
      cost(j, l) = (points_x.row(j) - points_y.row(l)).squaredNorm();

  ThreePlan plan;
  plan.n = n;
  plan.m = m;
  plan.k = k;
  plan.tensor.assign(static_cast<std::size_t>(n * m * k), 0.0);
  plan.marginal12 = plan_a.matrix;
  plan.marginal13 = plan_b.matrix;

  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double sigma = plan_a.row_marginal[i];
    if (sigma <= 0.0) continue;
    Eigen::VectorXd row_a = plan_a.matrix.row(i).transpose() / sigma;
    Eigen::VectorXd row_b = plan_b.matrix.row(i).transpose() / sigma;
    OtResult conditional = solve_ot(cost, row_a, row_b);
    total += sigma * conditional.cost;
    for (Eigen::Index j = 0; j < m; ++j)
      for (Eigen::Index l = 0; l < k; ++l)
        plan.at(i, j, l) = sigma * conditional.plan.matrix(j, l);
  }
  return {std::move(plan), std::sqrt(std::max(total, 0.0))};
}

}  // namespace gwt
