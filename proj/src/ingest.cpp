#include "gwt/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <queue>
#include <set>
#include <sstream>

#include "gwt/parallel.hpp"
#include "gwt/rng.hpp"

namespace gwt {

namespace {

Eigen::MatrixXd euclidean_metric(const Eigen::MatrixXd& points) {
  const Eigen::Index n = points.rows();
  Eigen::MatrixXd d(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    d(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j)
      d(i, j) = d(j, i) = (points.row(i) - points.row(j)).norm();
  }
  return d;
}

// PGM header fields with '#' comments allowed between tokens.
long next_pgm_value(std::istream& in, const std::filesystem::path& path) {
  while (true) {
    int c = in.peek();
    if (c == EOF) throw ParseError(path.string() + ": truncated PGM header");
    if (std::isspace(c)) {
      in.get();
      continue;
    }
    if (c == '#') {
      std::string line;
      std::getline(in, line);
      continue;
    }
    long v;
    if (!(in >> v)) throw ParseError(path.string() + ": invalid PGM header value");
    return v;
  }
}

}  // namespace

MmSpace pixels_to_space(const Eigen::MatrixXd& intensities, double threshold,
                        Eigen::Index sample_points, std::uint64_t seed, std::string id) {
  const Eigen::Index rows = intensities.rows(), cols = intensities.cols();
  std::vector<std::pair<double, double>> coords;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      if (intensities(r, c) > threshold)
        coords.emplace_back(static_cast<double>(c) + 0.5,
                            static_cast<double>(rows - 1 - r) + 0.5);

  Eigen::MatrixXd points(static_cast<Eigen::Index>(coords.size()), 2);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    points(i, 0) = coords[static_cast<std::size_t>(i)].first;
    points(i, 1) = coords[static_cast<std::size_t>(i)].second;
  }
  return points_to_space(points, sample_points, seed, std::move(id));
}

MmSpace image_to_space(const std::filesystem::path& path, double threshold,
                       Eigen::Index sample_points, std::uint64_t seed) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string magic(2, '\0');
  in.read(magic.data(), 2);
  if (magic != "P2" && magic != "P5") throw ParseError(path.string() + ": not a P2/P5 PGM file");
  long width = next_pgm_value(in, path);
  long height = next_pgm_value(in, path);
  long maxval = next_pgm_value(in, path);
  if (width < 1 || height < 1 || maxval < 1 || maxval > 65535)
    throw ParseError(path.string() + ": invalid PGM dimensions");

  Eigen::MatrixXd img(height, width);
  if (magic == "P2") {
    for (Eigen::Index r = 0; r < height; ++r)
      for (Eigen::Index c = 0; c < width; ++c) {
        long v;
        if (!(in >> v)) throw ParseError(path.string() + ": truncated P2 pixel data");
        img(r, c) = static_cast<double>(v) / static_cast<double>(maxval);
      }
  } else {
    in.get();  // single whitespace after maxval
    const int bytes = maxval < 256 ? 1 : 2;
    std::vector<unsigned char> buf(static_cast<std::size_t>(width * height * bytes));
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() != static_cast<std::streamsize>(buf.size()))
      throw ParseError(path.string() + ": truncated P5 pixel data");
    for (Eigen::Index r = 0; r < height; ++r)
      for (Eigen::Index c = 0; c < width; ++c) {
        std::size_t idx = static_cast<std::size_t>(r * width + c) * static_cast<std::size_t>(bytes);
        long v = bytes == 1 ? buf[idx] : (buf[idx] << 8) | buf[idx + 1];
        img(r, c) = static_cast<double>(v) / static_cast<double>(maxval);
      }
  }
  return pixels_to_space(img, threshold, sample_points, seed, path.stem().string());
}

MmSpace points_to_space(const Eigen::MatrixXd& points, Eigen::Index sample_points,
                        std::uint64_t seed, std::string id) {
  const Eigen::Index count = points.rows();
  if (count < 1) throw TooFewPixels("no points above the threshold");
  if (sample_points > 0 && count < sample_points)
    throw TooFewPixels("only " + std::to_string(count) + " candidates for " +
                       std::to_string(sample_points) + " sample points");

  Eigen::MatrixXd kept = points;
  if (sample_points > 0 && count > sample_points) {
    auto chosen = farthest_point_sample(
        [&](Eigen::Index a, Eigen::Index b) { return (points.row(a) - points.row(b)).norm(); },
        count, sample_points, substream(seed, "fps"));
    kept.resize(sample_points, points.cols());
    for (Eigen::Index i = 0; i < sample_points; ++i)
      kept.row(i) = points.row(chosen[static_cast<std::size_t>(i)]);
  }

  MmSpace space;
  space.id = std::move(id);
  space.metric_kind = MetricKind::euclidean;
  space.weights =
      Eigen::VectorXd::Constant(kept.rows(), 1.0 / static_cast<double>(kept.rows()));
  space.metric = euclidean_metric(kept);
  space.points = std::move(kept);
  return make_mm_space(std::move(space));
}

MmSpace points_csv_to_space(const std::filesystem::path& path, Eigen::Index sample_points,
                            std::uint64_t seed) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
      try {
        std::size_t pos = 0;
        row.push_back(std::stod(field, &pos));
        if (pos != field.size()) throw std::invalid_argument(field);
      } catch (const std::exception&) {
        throw ParseError(path.string() + ": invalid coordinate '" + field + "'");
      }
    }
    if (row.size() != 2 && row.size() != 3)
      throw ParseError(path.string() + ": rows must be x,y or x,y,z");
    if (!rows.empty() && row.size() != rows.front().size())
      throw ParseError(path.string() + ": inconsistent dimension");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(path.string() + ": no points");
  Eigen::MatrixXd points(static_cast<Eigen::Index>(rows.size()),
                         static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    for (Eigen::Index j = 0; j < points.cols(); ++j)
      points(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return points_to_space(points, sample_points, seed, path.stem().string());
}

std::pair<WeightedGraph, Eigen::MatrixXd> mesh_to_graph(
    const Eigen::MatrixXd& vertices, const std::vector<std::array<Eigen::Index, 3>>& faces) {
  const Eigen::Index v_count = vertices.rows();
  std::set<std::pair<Eigen::Index, Eigen::Index>> sides;
  for (const auto& f : faces) {
    for (int e = 0; e < 3; ++e) {
      Eigen::Index a = f[static_cast<std::size_t>(e)];
      Eigen::Index b = f[static_cast<std::size_t>((e + 1) % 3)];
      if (a < 0 || b < 0 || a >= v_count || b >= v_count)
        throw ParseError("face references vertex out of range");
      if (a == b) throw ParseError("degenerate face with repeated vertex");
      sides.emplace(std::min(a, b), std::max(a, b));
    }
  }
  WeightedGraph graph;
  graph.vertex_count = v_count;
  graph.edges.reserve(sides.size());
  for (auto [a, b] : sides) {
    double len = (vertices.row(a) - vertices.row(b)).norm();
    if (len <= 0.0) throw ParseError("coincident mesh vertices on an edge");
    graph.edges.push_back({a, b, len});
  }
  return {std::move(graph), vertices};
}

std::pair<WeightedGraph, Eigen::MatrixXd> mesh_to_graph(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());

  // tokenize, dropping '#' comments
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) tokens.push_back(tok);
  }
  std::size_t pos = 0;
  auto next = [&]() -> const std::string& {
    if (pos >= tokens.size()) throw ParseError(path.string() + ": truncated OFF file");
    return tokens[pos++];
  };
  auto next_long = [&](const char* what) {
    try {
      return std::stol(next());
    } catch (const std::exception&) {
      throw ParseError(path.string() + ": invalid " + what);
    }
  };
  auto next_double = [&](const char* what) {
    try {
      return std::stod(next());
    } catch (const std::exception&) {
      throw ParseError(path.string() + ": invalid " + what);
    }
  };

  if (next() != "OFF") throw ParseError(path.string() + ": missing OFF header");
  long v_count = next_long("vertex count");
  long f_count = next_long("face count");
  next_long("edge count");  // unused
  if (v_count < 1 || f_count < 0) throw ParseError(path.string() + ": invalid OFF counts");

  Eigen::MatrixXd vertices(v_count, 3);
  for (long v = 0; v < v_count; ++v)
    for (int c = 0; c < 3; ++c) vertices(v, c) = next_double("vertex coordinate");

  std::vector<std::array<Eigen::Index, 3>> faces;
  faces.reserve(static_cast<std::size_t>(f_count));
  for (long f = 0; f < f_count; ++f) {
    long k = next_long("face size");
    if (k != 3)
      throw NonTriangleFace(path.string() + ": face " + std::to_string(f) + " has " +
                            std::to_string(k) + " vertices");
    std::array<Eigen::Index, 3> face{};
    for (int c = 0; c < 3; ++c) face[static_cast<std::size_t>(c)] = next_long("face index");
    faces.push_back(face);
  }
  return mesh_to_graph(vertices, faces);
}

GeodesicDistances dijkstra_distances(const WeightedGraph& graph,
                                     const std::vector<Eigen::Index>& sources) {
  const Eigen::Index v_count = graph.vertex_count;
  std::vector<std::vector<std::pair<Eigen::Index, double>>> adj(
      static_cast<std::size_t>(v_count));
  for (const auto& e : graph.edges) {
    if (e.u == e.v) throw ValidationError("graph has a self-loop");
    if (e.length <= 0.0) throw ValidationError("graph edge lengths must be positive");
    if (e.u < 0 || e.v < 0 || e.u >= v_count || e.v >= v_count)
      throw ValidationError("graph edge endpoint out of range");
    adj[static_cast<std::size_t>(e.u)].emplace_back(e.v, e.length);
    adj[static_cast<std::size_t>(e.v)].emplace_back(e.u, e.length);
  }

  GeodesicDistances out;
  const double inf = std::numeric_limits<double>::infinity();
  out.dist.setConstant(static_cast<Eigen::Index>(sources.size()), v_count, inf);
  std::atomic<bool> disconnected{false};

  parallel_for(sources.size(), default_jobs(), [&](std::size_t s) {
    Eigen::Index src = sources[s];
    if (src < 0 || src >= v_count) throw ValidationError("dijkstra source out of range");
    auto row = out.dist.row(static_cast<Eigen::Index>(s));
    using Item = std::pair<double, Eigen::Index>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    row[src] = 0.0;
    heap.emplace(0.0, src);
    while (!heap.empty()) {
      auto [d, v] = heap.top();
      heap.pop();
      if (d > row[v]) continue;
      for (auto [w, len] : adj[static_cast<std::size_t>(v)]) {
        double cand = d + len;
        if (cand < row[w]) {
          row[w] = cand;
          heap.emplace(cand, w);
        }
      }
    }
    if (!row.allFinite()) disconnected.store(true);
  });
  out.disconnected = disconnected.load();
  return out;
}

std::vector<Eigen::Index> farthest_point_sample_from(
    const std::function<double(Eigen::Index, Eigen::Index)>& distance,
    Eigen::Index candidate_count, Eigen::Index k, Eigen::Index first) {
  if (k > candidate_count) throw ValidationError("cannot sample more points than candidates");
  if (k < 1) return {};
  if (first < 0 || first >= candidate_count)
    throw ValidationError("first sample index out of range");

  std::vector<Eigen::Index> chosen;
  chosen.reserve(static_cast<std::size_t>(k));
  std::vector<char> taken(static_cast<std::size_t>(candidate_count), 0);
  std::vector<double> min_dist(static_cast<std::size_t>(candidate_count));

  chosen.push_back(first);
  taken[static_cast<std::size_t>(first)] = 1;
  for (Eigen::Index i = 0; i < candidate_count; ++i)
    min_dist[static_cast<std::size_t>(i)] = distance(first, i);

  while (static_cast<Eigen::Index>(chosen.size()) < k) {
    Eigen::Index best = -1;
    for (Eigen::Index i = 0; i < candidate_count; ++i) {
      if (taken[static_cast<std::size_t>(i)]) continue;
      if (best < 0 || min_dist[static_cast<std::size_t>(i)] > min_dist[static_cast<std::size_t>(best)])
        best = i;
    }
    chosen.push_back(best);
    taken[static_cast<std::size_t>(best)] = 1;
    for (Eigen::Index i = 0; i < candidate_count; ++i) {
      if (taken[static_cast<std::size_t>(i)]) continue;
      double d = distance(best, i);
      if (d < min_dist[static_cast<std::size_t>(i)]) min_dist[static_cast<std::size_t>(i)] = d;
    }
  }
  return chosen;
}

std::vector<Eigen::Index> farthest_point_sample(
    const std::function<double(Eigen::Index, Eigen::Index)>& distance,
    Eigen::Index candidate_count, Eigen::Index k, std::uint64_t seed) {
  if (k > candidate_count) throw ValidationError("cannot sample more points than candidates");
  if (k < 1) return {};
  Rng rng(seed);
  auto first = static_cast<Eigen::Index>(rng.next_below(static_cast<std::uint64_t>(candidate_count)));
  return farthest_point_sample_from(distance, candidate_count, k, first);
}

MmSpace mesh_to_space(const WeightedGraph& graph, const Eigen::MatrixXd& vertices,
                      Eigen::Index coarse_points, Eigen::Index final_points, std::uint64_t seed,
                      std::string id) {
  if (coarse_points < 1 || final_points < 1)
    throw ValidationError("sample sizes must be positive");
  const Eigen::Index v_count = graph.vertex_count;

  // step 1: Euclidean farthest-point reduction of the raw vertex set
  std::vector<Eigen::Index> coarse;
  if (coarse_points >= v_count) {
    coarse.resize(static_cast<std::size_t>(v_count));
    for (Eigen::Index i = 0; i < v_count; ++i) coarse[static_cast<std::size_t>(i)] = i;
  } else {
    coarse = farthest_point_sample(
        [&](Eigen::Index a, Eigen::Index b) { return (vertices.row(a) - vertices.row(b)).norm(); },
        v_count, coarse_points, substream(seed, "fps-coarse"));
  }
  const auto c_count = static_cast<Eigen::Index>(coarse.size());

  // step 2: geodesics on the full triangulation graph from the coarse set
  GeodesicDistances geo = dijkstra_distances(graph, coarse);
  Eigen::MatrixXd dcc(c_count, c_count);
  for (Eigen::Index a = 0; a < c_count; ++a)
    for (Eigen::Index b = 0; b < c_count; ++b) dcc(a, b) = geo.dist(a, coarse[static_cast<std::size_t>(b)]);
  if (!dcc.allFinite()) throw DisconnectedMesh("mesh is not connected across sampled vertices");
  dcc = dcc.cwiseMin(dcc.transpose().eval());  // exact symmetry
  dcc.diagonal().setZero();

  std::vector<Eigen::Index> fine;
  if (final_points >= c_count) {
    fine.resize(static_cast<std::size_t>(c_count));
    for (Eigen::Index i = 0; i < c_count; ++i) fine[static_cast<std::size_t>(i)] = i;
  } else {
    fine = farthest_point_sample([&](Eigen::Index a, Eigen::Index b) { return dcc(a, b); },
                                 c_count, final_points, substream(seed, "fps-fine"));
  }
  const auto f_count = static_cast<Eigen::Index>(fine.size());

  // geodesic Voronoi cells of the coarse set around the final points
  Eigen::VectorXd weights = Eigen::VectorXd::Zero(f_count);
  for (Eigen::Index a = 0; a < c_count; ++a) {
    Eigen::Index best = 0;
    for (Eigen::Index g = 1; g < f_count; ++g)
      if (dcc(a, fine[static_cast<std::size_t>(g)]) < dcc(a, fine[static_cast<std::size_t>(best)]))
        best = g;
    weights[best] += 1.0;
  }
  weights /= static_cast<double>(c_count);

  MmSpace space;
  space.id = std::move(id);
  space.metric_kind = MetricKind::geodesic;
  space.weights = std::move(weights);
  space.metric.resize(f_count, f_count);
  for (Eigen::Index g = 0; g < f_count; ++g)
    for (Eigen::Index h = 0; h < f_count; ++h)
      space.metric(g, h) = dcc(fine[static_cast<std::size_t>(g)], fine[static_cast<std::size_t>(h)]);
  Eigen::MatrixXd pts(f_count, vertices.cols());
  for (Eigen::Index g = 0; g < f_count; ++g)
    pts.row(g) = vertices.row(coarse[static_cast<std::size_t>(fine[static_cast<std::size_t>(g)])]);
  space.points = std::move(pts);
  return make_mm_space(std::move(space));
}

MmSpace mesh_to_space(const std::filesystem::path& path, Eigen::Index coarse_points,
                      Eigen::Index final_points, std::uint64_t seed) {
  auto [graph, vertices] = mesh_to_graph(path);
  return mesh_to_space(graph, vertices, coarse_points, final_points, seed, path.stem().string());
}

}  // namespace gwt
