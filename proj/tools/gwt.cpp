#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "gwt/analysis.hpp"
#include "gwt/barycenter.hpp"
#include "gwt/gw.hpp"
#include "gwt/ingest.hpp"
#include "gwt/lgw.hpp"
#include "gwt/measure.hpp"
#include "gwt/ot.hpp"
#include "gwt/parallel.hpp"
#include "gwt/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct SolverFlags {
  std::string inits;  // comma-separated specifiers; empty -> default set
  int restarts = 5;
  std::uint64_t seed = 0;
  double tol = 1e-9;
  int max_iter = 1000;
};

void add_solver_flags(CLI::App* cmd, SolverFlags& flags) {
  cmd->add_option("--init", flags.inits,
                  "comma-separated inits: product,wasserstein,identity,random,plan=<csv>");
  cmd->add_option("--restarts", flags.restarts, "number of seeded random inits");
  cmd->add_option("--seed", flags.seed, "base seed for all randomized choices");
  cmd->add_option("--tol", flags.tol, "relative objective tolerance");
  cmd->add_option("--max-iter", flags.max_iter, "iteration cap per init");
}

gwt::TransportPlan load_plan_csv(const fs::path& path, const Eigen::VectorXd& mu,
                                 const Eigen::VectorXd& nu) {
  std::ifstream in(path);
  if (!in) throw gwt::IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "i,j,mass")
    throw gwt::ParseError(path.string() + ": header must be 'i,j,mass'");
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(mu.size(), nu.size());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string a, b, c;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c))
      throw gwt::ParseError(path.string() + ": rows must be 'i,j,mass'");
    long i = std::stol(a), j = std::stol(b);
    if (i < 0 || j < 0 || i >= mu.size() || j >= nu.size())
      throw gwt::ParseError(path.string() + ": plan index out of range");
    m(i, j) = std::stod(c);
  }
  gwt::TransportPlan plan{std::move(m), mu, nu};
  gwt::validate_plan(plan);
  return plan;
}

gwt::GwConfig make_config(const SolverFlags& flags, const Eigen::VectorXd* mu = nullptr,
                          const Eigen::VectorXd* nu = nullptr) {
  gwt::GwConfig config;
  config.max_iter = flags.max_iter;
  config.rel_tol = flags.tol;
  config.restarts = flags.restarts;
  config.seed = flags.seed;
  if (!flags.inits.empty()) {
    std::istringstream ss(flags.inits);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (tok == "product") {
        config.inits.push_back({gwt::GwInit::Kind::product, 0, nullptr, ""});
      } else if (tok == "wasserstein") {
        config.inits.push_back({gwt::GwInit::Kind::wasserstein, 0, nullptr, ""});
      } else if (tok == "identity") {
        config.inits.push_back({gwt::GwInit::Kind::identity, 0, nullptr, ""});
      } else if (tok == "random") {
        for (int r = 0; r < flags.restarts; ++r)
          config.inits.push_back({gwt::GwInit::Kind::random,
                                  gwt::substream(flags.seed, "init", static_cast<std::uint64_t>(r)),
                                  nullptr, ""});
      } else if (tok.rfind("plan=", 0) == 0) {
        if (!mu || !nu) throw gwt::ValidationError("plan init is not supported here");
        auto plan = std::make_shared<gwt::TransportPlan>(
            load_plan_csv(tok.substr(5), *mu, *nu));
        config.inits.push_back({gwt::GwInit::Kind::plan, 0, plan, fs::path(tok.substr(5)).stem().string()});
      } else {
        throw gwt::ValidationError("unknown init specifier '" + tok + "'");
      }
    }
  }
  return config;
}

std::vector<gwt::MmSpace> load_space_dir(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json" &&
        entry.path().filename().string().front() != '_')
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<gwt::MmSpace> spaces;
  spaces.reserve(files.size());
  for (const auto& f : files) spaces.push_back(gwt::load_mm_space(f));
  std::sort(spaces.begin(), spaces.end(),
            [](const auto& a, const auto& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < spaces.size(); ++i)
    if (spaces[i].id == spaces[i - 1].id)
      throw gwt::ValidationError("duplicate space id '" + spaces[i].id + "'");
  if (spaces.empty()) throw gwt::ValidationError("no .json spaces in " + dir.string());
  return spaces;
}

json result_json(const gwt::GwResult& result) {
  return json{{"distance", result.distance},
              {"cost", result.cost},
              {"iterations", result.iterations},
              {"converged", result.converged},
              {"init_used", result.init_used}};
}

void write_labels_if(const std::vector<gwt::MmSpace>& spaces, const std::string& path) {
  if (path.empty()) return;
  std::vector<std::string> ids, labels;
  for (const auto& s : spaces) {
    if (!s.label) throw gwt::ValidationError("space '" + s.id + "' has no label");
    ids.push_back(s.id);
    labels.push_back(*s.label);
  }
  gwt::save_labels_csv(ids, labels, path);
}

int run(int argc, char** argv) {
  CLI::App app{"Gromov-Wasserstein distances and their linear surrogates"};
  app.require_subcommand(1);
  unsigned jobs = gwt::default_jobs();

  // --- ingest ---------------------------------------------------------
  auto* ingest = app.add_subcommand("ingest", "build mm-spaces from raw data");
  ingest->require_subcommand(1);

  struct {
    std::string in, out, label, id;
    double threshold = 0.5;
    Eigen::Index points = 0;
    std::uint64_t seed = 0;
  } img;
  auto* ingest_image = ingest->add_subcommand("image", "PGM image -> mm-space");
  ingest_image->add_option("input", img.in)->required();
  ingest_image->add_option("--threshold", img.threshold, "white iff intensity > threshold");
  ingest_image->add_option("--points", img.points, "FPS target size (0 keeps all pixels)");
  ingest_image->add_option("--seed", img.seed);
  ingest_image->add_option("--label", img.label);
  ingest_image->add_option("--id", img.id);
  ingest_image->add_option("--out", img.out)->required();
  ingest_image->callback([&] {
    auto space = gwt::image_to_space(img.in, img.threshold, img.points, img.seed);
    if (!img.label.empty()) space.label = img.label;
    if (!img.id.empty()) space.id = img.id;
    gwt::save_mm_space(space, img.out);
  });

  struct {
    std::string in, out, label, id;
    Eigen::Index coarse = 4000, points = 50;
    std::uint64_t seed = 0;
  } mesh;
  auto* ingest_mesh = ingest->add_subcommand("mesh", "OFF mesh -> geodesic mm-space");
  ingest_mesh->add_option("input", mesh.in)->required();
  ingest_mesh->add_option("--coarse", mesh.coarse, "Euclidean FPS size (step 1)");
  ingest_mesh->add_option("--points", mesh.points, "geodesic FPS size (step 2)");
  ingest_mesh->add_option("--seed", mesh.seed);
  ingest_mesh->add_option("--label", mesh.label);
  ingest_mesh->add_option("--id", mesh.id);
  ingest_mesh->add_option("--out", mesh.out)->required();
  ingest_mesh->callback([&] {
    auto space = gwt::mesh_to_space(mesh.in, mesh.coarse, mesh.points, mesh.seed);
    if (!mesh.label.empty()) space.label = mesh.label;
    if (!mesh.id.empty()) space.id = mesh.id;
    gwt::save_mm_space(space, mesh.out);
  });

  struct {
    std::string in, out, label, id;
    Eigen::Index points = 0;
    std::uint64_t seed = 0;
  } pts;
  auto* ingest_points = ingest->add_subcommand("points", "CSV point cloud -> mm-space");
  ingest_points->add_option("input", pts.in)->required();
  ingest_points->add_option("--points", pts.points, "FPS target size (0 keeps all)");
  ingest_points->add_option("--seed", pts.seed);
  ingest_points->add_option("--label", pts.label);
  ingest_points->add_option("--id", pts.id);
  ingest_points->add_option("--out", pts.out)->required();
  ingest_points->callback([&] {
    auto space = gwt::points_csv_to_space(pts.in, pts.points, pts.seed);
    if (!pts.label.empty()) space.label = pts.label;
    if (!pts.id.empty()) space.id = pts.id;
    gwt::save_mm_space(space, pts.out);
  });

  // --- gw ---------------------------------------------------------------
  auto* gw_cmd = app.add_subcommand("gw", "Gromov-Wasserstein distance");
  struct {
    std::string a, b, plan_out;
    SolverFlags flags;
  } gw1;
  gw_cmd->add_option("a", gw1.a, "first mm-space JSON");
  gw_cmd->add_option("b", gw1.b, "second mm-space JSON");
  gw_cmd->add_option("--plan-out", gw1.plan_out, "write the optimal plan as i,j,mass CSV");
  add_solver_flags(gw_cmd, gw1.flags);

  struct {
    std::string dir, out, labels_out;
    SolverFlags flags;
  } gwp;
  auto* gw_pairwise = gw_cmd->add_subcommand("pairwise", "all pairwise GW distances");
  gw_pairwise->add_option("--spaces", gwp.dir)->required();
  gw_pairwise->add_option("--out", gwp.out)->required();
  gw_pairwise->add_option("--jobs", jobs);
  gw_pairwise->add_option("--labels-out", gwp.labels_out, "sidecar id,label CSV");
  add_solver_flags(gw_pairwise, gwp.flags);
  gw_pairwise->callback([&] {
    auto spaces = load_space_dir(gwp.dir);
    const auto n = spaces.size();
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
    std::cerr << "gw pairwise: spaces=" << n << " solves=" << pairs.size() << "\n";

    gwt::DistanceMatrix dist;
    for (const auto& s : spaces) dist.ids.push_back(s.id);
    dist.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    gwt::parallel_for(pairs.size(), jobs, [&](std::size_t t) {
      auto [i, j] = pairs[t];
      auto result = gwt::solve_gw(spaces[i], spaces[j], make_config(gwp.flags));
      dist.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = result.distance;
      dist.values(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = result.distance;
    });
    gwt::save_distance_matrix_csv(dist, gwp.out);
    write_labels_if(spaces, gwp.labels_out);
  });

  gw_cmd->callback([&] {
    if (!gw_cmd->get_subcommands().empty()) return;
    if (gw1.a.empty() || gw1.b.empty())
      throw CLI::CallForHelp();
    auto x = gwt::load_mm_space(gw1.a);
    auto y = gwt::load_mm_space(gw1.b);
    auto config = make_config(gw1.flags, &x.weights, &y.weights);
    auto result = gwt::solve_gw(x, y, config);
    if (!gw1.plan_out.empty()) gwt::save_plan_csv(result.plan, gw1.plan_out);
    std::cout << result_json(result).dump() << "\n";
  });

  // --- glgw ---------------------------------------------------------------
  auto* glgw_cmd = app.add_subcommand("glgw", "linear GW through a reference space");
  glgw_cmd->require_subcommand(1);

  struct {
    std::string ref, dir, out;
    SolverFlags flags;
  } ge;
  auto* glgw_embed = glgw_cmd->add_subcommand("embed", "one GW solve per target");
  glgw_embed->add_option("--ref", ge.ref)->required();
  glgw_embed->add_option("--spaces", ge.dir)->required();
  glgw_embed->add_option("--out", ge.out)->required();
  glgw_embed->add_option("--jobs", jobs);
  add_solver_flags(glgw_embed, ge.flags);
  glgw_embed->callback([&] {
    auto ref = gwt::load_mm_space(ge.ref);
    auto spaces = load_space_dir(ge.dir);
    std::cerr << "glgw embed: spaces=" << spaces.size() << " solves=" << spaces.size() << "\n";
    fs::create_directories(ge.out);
    gwt::save_mm_space(ref, fs::path(ge.out) / "_ref.json");
    gwt::parallel_for(spaces.size(), jobs, [&](std::size_t i) {
      if (spaces[i].id.find('/') != std::string::npos)
        throw gwt::ValidationError("space id is not filesystem-safe: " + spaces[i].id);
      auto emb = gwt::embed(ref, spaces[i], make_config(ge.flags));
      gwt::save_embedding(emb, fs::path(ge.out) / (spaces[i].id + ".json"));
    });
  });

  struct {
    std::string dir, out;
  } gp;
  auto* glgw_pairwise = glgw_cmd->add_subcommand("pairwise", "O(n^2) distances from embeddings");
  glgw_pairwise->add_option("--embeddings", gp.dir)->required();
  glgw_pairwise->add_option("--out", gp.out)->required();
  glgw_pairwise->add_option("--jobs", jobs);
  glgw_pairwise->callback([&] {
    auto ref = gwt::load_mm_space(fs::path(gp.dir) / "_ref.json");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(gp.dir))
      if (entry.is_regular_file() && entry.path().extension() == ".json" &&
          entry.path().filename().string().front() != '_')
        files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    std::vector<gwt::LgwEmbedding> embs;
    for (const auto& f : files) embs.push_back(gwt::load_embedding(f));
    std::sort(embs.begin(), embs.end(),
              [](const auto& a, const auto& b) { return a.target_id < b.target_id; });
    const auto n = embs.size();
    if (n == 0) throw gwt::ValidationError("no embeddings in " + gp.dir);

    gwt::DistanceMatrix dist;
    for (const auto& e : embs) dist.ids.push_back(e.target_id);
    dist.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
    gwt::parallel_for(pairs.size(), jobs, [&](std::size_t t) {
      auto [i, j] = pairs[t];
      double d = gwt::glgw(ref.weights, embs[i], embs[j]);
      dist.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = d;
      dist.values(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = d;
    });
    gwt::save_distance_matrix_csv(dist, gp.out);
  });

  // --- barycenter -----------------------------------------------------
  struct {
    std::vector<std::string> spaces;
    Eigen::Index points = 50;
    int iters = 20;
    std::string out, lambdas;
    SolverFlags flags;  // --seed drives the metric init and the GW inits
  } bc;
  auto* bary_cmd = app.add_subcommand("barycenter", "fixed-support GW barycenter");
  bary_cmd->add_option("--spaces", bc.spaces, "input mm-space JSONs")->required();
  bary_cmd->add_option("--points", bc.points);
  bary_cmd->add_option("--iters", bc.iters);
  bary_cmd->add_option("--lambdas", bc.lambdas, "comma-separated simplex weights");
  bary_cmd->add_option("--out", bc.out)->required();
  add_solver_flags(bary_cmd, bc.flags);
  bary_cmd->callback([&] {
    std::vector<gwt::MmSpace> inputs;
    for (const auto& p : bc.spaces) inputs.push_back(gwt::load_mm_space(p));
    gwt::BarycenterConfig config;
    config.points = bc.points;
    config.outer_iters = bc.iters;
    config.seed = bc.flags.seed;
    config.inner = make_config(bc.flags);
    if (!bc.lambdas.empty()) {
      std::istringstream ss(bc.lambdas);
      std::string tok;
      while (std::getline(ss, tok, ',')) config.lambdas.push_back(std::stod(tok));
    }
    gwt::save_mm_space(gwt::solve_barycenter(inputs, config), bc.out);
  });

  // --- analysis ---------------------------------------------------------
  struct {
    std::string in, out;
    Eigen::Index dim = 2;
  } mds;
  auto* mds_cmd = app.add_subcommand("mds", "classical MDS embedding of a distance matrix");
  mds_cmd->add_option("input", mds.in)->required();
  mds_cmd->add_option("--dim", mds.dim);
  mds_cmd->add_option("--out", mds.out)->required();
  mds_cmd->callback([&] {
    auto dist = gwt::load_distance_matrix_csv(mds.in);
    gwt::save_coordinates_csv(dist.ids, gwt::classical_mds(dist, mds.dim), mds.out);
  });

  struct {
    std::string in, labels, out;
    int reps = 10000;
    std::uint64_t seed = 0;
  } conf;
  auto* conf_cmd = app.add_subcommand("confusion", "nearest-representative confusion matrix");
  conf_cmd->add_option("input", conf.in)->required();
  conf_cmd->add_option("--labels", conf.labels)->required();
  conf_cmd->add_option("--reps", conf.reps);
  conf_cmd->add_option("--seed", conf.seed);
  conf_cmd->add_option("--out", conf.out)->required();
  conf_cmd->callback([&] {
    auto dist = gwt::load_distance_matrix_csv(conf.in);
    auto labels = gwt::load_labels_csv(dist.ids, conf.labels);
    gwt::save_confusion_csv(gwt::confusion_matrix(dist, labels, conf.reps, conf.seed), conf.out);
  });

  struct {
    std::string a, b;
  } cmp;
  auto* cmp_cmd = app.add_subcommand("compare", "MRE and PCC between two distance matrices");
  cmp_cmd->add_option("reference", cmp.a, "reference matrix (MRE denominator)")->required();
  cmp_cmd->add_option("candidate", cmp.b)->required();
  cmp_cmd->callback([&] {
    auto result = gwt::compare_distance_matrices(gwt::load_distance_matrix_csv(cmp.a),
                                                 gwt::load_distance_matrix_csv(cmp.b));
    std::cout << json{{"mre", result.mre}, {"pcc", result.pcc}, {"pairs_used", result.pairs_used}}
                     .dump()
              << "\n";
  });

  struct {
    std::string ref, x, y;
    SolverFlags flags;
  } bd;
  auto* bounds_cmd = app.add_subcommand("bounds", "LGW sandwich bound report");
  bounds_cmd->add_option("--ref", bd.ref)->required();
  bounds_cmd->add_option("--x", bd.x)->required();
  bounds_cmd->add_option("--y", bd.y)->required();
  add_solver_flags(bounds_cmd, bd.flags);
  bounds_cmd->callback([&] {
    auto report = gwt::check_lgw_bounds(gwt::load_mm_space(bd.ref), gwt::load_mm_space(bd.x),
                                        gwt::load_mm_space(bd.y), make_config(bd.flags));
    std::cout << json{{"gw_xy", report.gw_xy},
                      {"gw_sx", report.gw_sx},
                      {"gw_sy", report.gw_sy},
                      {"gw_s", report.gw_s_value},
                      {"glue", report.glue_value},
                      {"lower_ok", report.lower_ok},
                      {"upper_ok", report.upper_ok},
                      {"lower_slack", report.lower_slack},
                      {"upper_slack", report.upper_slack}}
                     .dump()
              << "\n";
  });

  struct {
    std::string in, out;
    bool triangle = false, drop_zero = false;
  } chk;
  auto* check_cmd = app.add_subcommand("check", "validate an mm-space file");
  check_cmd->add_option("input", chk.in)->required();
  check_cmd->add_flag("--triangle", chk.triangle, "report the max triangle-inequality violation");
  check_cmd->add_flag("--drop-zero", chk.drop_zero, "drop zero-mass atoms instead of rejecting");
  check_cmd->add_option("--out", chk.out, "write the validated space back out");
  check_cmd->callback([&] {
    auto space = gwt::load_mm_space(chk.in, chk.drop_zero);
    json report{{"id", space.id}, {"n", space.n()}, {"valid", true}};
    if (chk.triangle) report["max_triangle_violation"] = gwt::max_triangle_violation(space);
    std::cout << report.dump() << "\n";
    if (!chk.out.empty()) gwt::save_mm_space(space, chk.out);
  });

  struct {
    std::string dir, out;
  } lab;
  auto* labels_cmd = app.add_subcommand("labels", "extract an id,label CSV from a space dir");
  labels_cmd->add_option("--spaces", lab.dir)->required();
  labels_cmd->add_option("--out", lab.out)->required();
  labels_cmd->callback([&] { write_labels_if(load_space_dir(lab.dir), lab.out); });

  CLI11_PARSE(app, argc, argv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const gwt::Error& e) {
    std::cerr << json{{"error", e.code()}, {"detail", e.what()}}.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "Error"}, {"detail", e.what()}}.dump() << "\n";
    return 1;
  }
}
