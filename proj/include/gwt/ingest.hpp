#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <utility>
#include <vector>

#include "gwt/measure.hpp"

namespace gwt {

struct WeightedGraph {
  struct Edge {
    Eigen::Index u, v;
    double length;
  };
  Eigen::Index vertex_count = 0;
  std::vector<Edge> edges;
};

// Grayscale image file (plain or raw PGM) -> Euclidean mm-space on the
// centers of the pixels brighter than threshold*maxval. If more than
// sample_points pixels qualify, farthest-point sampling reduces them
// (sample_points = 0 keeps all). Weights are uniform.
MmSpace image_to_space(const std::filesystem::path& path, double threshold,
                       Eigen::Index sample_points, std::uint64_t seed);

// Same construction from an in-memory intensity grid in [0,1]; the file
// loader and the synthetic test/benchmark shapes share this path.
MmSpace pixels_to_space(const Eigen::MatrixXd& intensities, double threshold,
                        Eigen::Index sample_points, std::uint64_t seed, std::string id);

// CSV point list (x,y[,z] per row) -> Euclidean mm-space, same sampling rule.
MmSpace points_csv_to_space(const std::filesystem::path& path, Eigen::Index sample_points,
                            std::uint64_t seed);
MmSpace points_to_space(const Eigen::MatrixXd& points, Eigen::Index sample_points,
                        std::uint64_t seed, std::string id);

// OFF triangle mesh -> graph with one edge per unique triangle side,
// weighted by Euclidean length, plus the vertex coordinates.
std::pair<WeightedGraph, Eigen::MatrixXd> mesh_to_graph(const std::filesystem::path& path);
std::pair<WeightedGraph, Eigen::MatrixXd> mesh_to_graph(
    const Eigen::MatrixXd& vertices, const std::vector<std::array<Eigen::Index, 3>>& faces);

struct GeodesicDistances {
  Eigen::MatrixXd dist;  // |sources| x vertex_count, +inf where unreachable
  bool disconnected = false;
};

GeodesicDistances dijkstra_distances(const WeightedGraph& graph,
                                     const std::vector<Eigen::Index>& sources);

// Greedy max-min subset selection. The seeded variant draws the first
// index uniformly; ties in the max-min step go to the lowest index.
std::vector<Eigen::Index> farthest_point_sample(
    const std::function<double(Eigen::Index, Eigen::Index)>& distance,
    Eigen::Index candidate_count, Eigen::Index k, std::uint64_t seed);
std::vector<Eigen::Index> farthest_point_sample_from(
    const std::function<double(Eigen::Index, Eigen::Index)>& distance,
    Eigen::Index candidate_count, Eigen::Index k, Eigen::Index first);

// Two-step mesh reduction: Euclidean FPS to coarse_points vertices,
// Dijkstra geodesics on the full triangulation graph from those vertices,
// geodesic FPS down to final_points, Voronoi cell counts as weights.
MmSpace mesh_to_space(const std::filesystem::path& path, Eigen::Index coarse_points,
                      Eigen::Index final_points, std::uint64_t seed);
MmSpace mesh_to_space(const WeightedGraph& graph, const Eigen::MatrixXd& vertices,
                      Eigen::Index coarse_points, Eigen::Index final_points, std::uint64_t seed,
                      std::string id);

}  // namespace gwt
