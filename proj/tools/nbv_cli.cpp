// Command-line front end. Every subcommand wraps one phase of the active loop
// and communicates through files in the run directory, so `loop` can be
// replayed step by step:
//
//   nbv init-train --out run
//   nbv select     --out run --iter 1
//   nbv refine     --out run --iter 1
//   nbv mesh       --out run --iter 1
//   nbv eval       --out run --iter 1

#include "nbv/experiment.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace nbv;

namespace {

struct Common {
  std::string config_file;
  std::vector<std::string> overrides;
  std::string scene, policy, out;
  int iterations = -1;
  long long seed = -1;
  int k = -1;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config_file, "key = value configuration file");
  app->add_option("--set", c.overrides, "extra key=value assignment (repeatable)");
  app->add_option("--scene", c.scene, "scene preset");
  app->add_option("--policy", c.policy, "selection policy");
  app->add_option("--iterations", c.iterations, "number of selection rounds");
  app->add_option("--seed", c.seed, "master seed");
  app->add_option("--k", c.k, "views per round for k-based policies");
  app->add_option("--out", c.out, "run directory");
}

// --config wins; otherwise a run directory's own config.txt; otherwise defaults.
ExperimentConfig resolve(const Common& c) {
  ExperimentConfig cfg;
  if (!c.config_file.empty()) {
    cfg = load_config(c.config_file);
  } else if (!c.out.empty() && fs::exists(fs::path(c.out) / "config.txt")) {
    cfg = load_config((fs::path(c.out) / "config.txt").string());
  }
  for (const auto& kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
    set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!c.scene.empty()) cfg.scene = c.scene;
  if (!c.policy.empty()) cfg.policy = c.policy;
  if (c.iterations >= 0) cfg.iterations = c.iterations;
  if (c.seed >= 0) cfg.seed = static_cast<std::uint64_t>(c.seed);
  if (c.k >= 0) cfg.policy_options.k = c.k;
  if (!c.out.empty()) cfg.out_dir = c.out;
  cfg.validate();
  return cfg;
}

std::string run_file(const ExperimentConfig& cfg, const char* stem, int iteration, const char* ext) {
  if (cfg.out_dir.empty()) throw std::invalid_argument("--out is required");
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%03d%s", stem, iteration, ext);
  return (fs::path(cfg.out_dir) / buf).string();
}

std::vector<ViewId> read_ids(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_ids(ss.str());
}

void write_ids(const std::string& path, const std::vector<ViewId>& ids) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  os << join_ids(ids, '\n') << '\n';
}

void require_iter(int iter, int min) {
  if (iter < min) throw std::invalid_argument("--iter must be >= " + std::to_string(min));
}

int cmd_viewspace(const Common& c) {
  const ExperimentContext ctx(resolve(c));
  if (c.out.empty()) {
    write_view_space(std::cout, ctx.views);
  } else {
    fs::create_directories(c.out);
    write_view_space((fs::path(c.out) / "views.txt").string(), ctx.views);
  }
  return 0;
}

int cmd_init_train(const Common& c) {
  const ExperimentConfig cfg = resolve(c);
  if (cfg.out_dir.empty()) throw std::invalid_argument("--out is required");
  const ExperimentContext ctx(cfg);
  fs::create_directories(cfg.out_dir);
  {
    std::ofstream os(fs::path(cfg.out_dir) / "config.txt");
    write_config(os, cfg);
  }
  write_view_space((fs::path(cfg.out_dir) / "views.txt").string(), ctx.views);
  RadianceField f = ctx.fresh_field();
  const auto ids = ctx.initial_ids();
  const TrainReport r = train_phase(ctx, f, ids, 0);
  save_checkpoint(run_file(cfg, "ckpt", 0, ".bin"), f);
  write_ids(run_file(cfg, "training", 0, ".txt"), ids);
  std::printf("trained %zu views, psnr %.4f, %.1f s\n", ids.size(), r.final_psnr, r.seconds);
  return 0;
}

int cmd_refine(const Common& c, int iter) {
  require_iter(iter, 1);
  const ExperimentConfig cfg = resolve(c);
  const ExperimentContext ctx(cfg);
  RadianceField f = load_checkpoint(run_file(cfg, "ckpt", iter - 1, ".bin"));
  auto ids = read_ids(run_file(cfg, "training", iter - 1, ".txt"));
  const auto picked = read_ids(run_file(cfg, "selected", iter, ".txt"));
  ids.insert(ids.end(), picked.begin(), picked.end());
  const TrainReport r = train_phase(ctx, f, ids, iter);
  save_checkpoint(run_file(cfg, "ckpt", iter, ".bin"), f);
  write_ids(run_file(cfg, "training", iter, ".txt"), ids);
  std::printf("trained %zu views, psnr %.4f, %.1f s\n", ids.size(), r.final_psnr, r.seconds);
  return 0;
}

int cmd_entropy_map(const Common& c, int iter, int view) {
  require_iter(iter, 0);
  const ExperimentConfig cfg = resolve(c);
  const ExperimentContext ctx(cfg);
  const RadianceField f = load_checkpoint(run_file(cfg, "ckpt", iter, ".bin"));
  const auto training = read_ids(run_file(cfg, "training", iter, ".txt"));
  const PolicyState s = ctx.policy_state(f, training, iter);
  const std::vector<ViewId> ids = view >= 0 ? std::vector<ViewId>{view} : s.candidate_ids;
  std::map<ViewId, EntropyMap> maps;
  const auto scores = entropy_scores(s, ids, &maps);
  std::printf("view_id,mean_entropy\n");
  for (const auto& [id, m] : maps) {
    char name[64];
    std::snprintf(name, sizeof name, "entropy_%03d_%d.pgm", iter, id);
    write_entropy_pgm((fs::path(cfg.out_dir) / name).string(), m);
    std::printf("%d,%.9g\n", id, scores.at(id));
  }
  return 0;
}

int cmd_select(const Common& c, int iter) {
  require_iter(iter, 1);
  const ExperimentConfig cfg = resolve(c);
  const ExperimentContext ctx(cfg);
  const RadianceField f = load_checkpoint(run_file(cfg, "ckpt", iter - 1, ".bin"));
  const auto training = read_ids(run_file(cfg, "training", iter - 1, ".txt"));
  const Selection sel = select_phase(ctx, f, training, iter);
  write_scores_csv(run_file(cfg, "scores", iter, ".csv"), sel, ctx.clustering);
  write_ids(run_file(cfg, "selected", iter, ".txt"), sel.chosen);
  std::printf("%s\n", join_ids(sel.chosen).c_str());
  return 0;
}

int cmd_mesh(const Common& c, int iter) {
  require_iter(iter, 0);
  const ExperimentConfig cfg = resolve(c);
  const ExperimentContext ctx(cfg);
  const RadianceField f = load_checkpoint(run_file(cfg, "ckpt", iter, ".bin"));
  DensityGrid grid = density_grid_export(f, cfg.mesh_resolution, cfg.mesh_side, Vec3::Zero());
  if (cfg.fill_cavities) fill_cavities(grid, cfg.mesh_iso);
  const TriangleMesh mesh = marching_cubes(grid, cfg.mesh_iso);
  const std::string path = run_file(cfg, "mesh", iter, ".ply");
  write_ply(path, mesh);
  std::printf("%s: %zu vertices, %zu triangles\n", path.c_str(), mesh.vertices.size(), mesh.triangles.size());
  return 0;
}

int cmd_eval(const Common& c, int iter, const std::string& pred, const std::string& gt, const std::string& mesh,
             double threshold) {
  std::printf("precision,recall,fscore,threshold,pred_within,gt_within,n_pred,n_gt\n");
  if (!pred.empty() || !gt.empty()) {
    if (pred.empty() || gt.empty()) throw std::invalid_argument("--pred and --gt go together");
    const double d = threshold > 0.0 ? threshold : ExperimentConfig{}.fscore_threshold;
    std::printf("%s\n", to_csv_row(fscore(read_points(pred), read_points(gt), d)).c_str());
    return 0;
  }
  require_iter(iter, 0);
  ExperimentConfig cfg = resolve(c);
  if (threshold > 0.0) cfg.fscore_threshold = threshold;
  const ExperimentContext ctx(cfg);
  const std::string path = mesh.empty() ? run_file(cfg, "mesh", iter, ".ply") : mesh;
  std::printf("%s\n", to_csv_row(evaluate_mesh(ctx, read_ply(path), iter)).c_str());
  return 0;
}

int cmd_loop(const Common& c) {
  const ExperimentConfig cfg = resolve(c);
  const ExperimentReport r = run_active_loop(cfg);
  write_report_csv(std::cout, r, cfg.record_timing);
  for (const auto& w : r.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Uncertainty-guided next-best-view selection on a voxel radiance field"};
  app.require_subcommand(1);
  Common common;
  int iter = -1, view = -1;
  std::string pred, gt, mesh;
  double threshold = 0.0;

  auto* viewspace = app.add_subcommand("viewspace", "write the candidate view file");
  auto* init = app.add_subcommand("init-train", "train from scratch on the initial middle-circle views");
  auto* entropy = app.add_subcommand("entropy-map", "per-view entropy maps of a checkpoint's candidates");
  auto* select = app.add_subcommand("select", "run the policy on checkpoint iter-1");
  auto* refine = app.add_subcommand("refine", "warm-start training with the views picked at iter");
  auto* meshcmd = app.add_subcommand("mesh", "marching cubes on checkpoint iter");
  auto* eval = app.add_subcommand("eval", "F-score of a mesh or of two point files");
  auto* loop = app.add_subcommand("loop", "full active reconstruction loop");
  for (auto* sub : {viewspace, init, entropy, select, refine, meshcmd, eval, loop}) add_common(sub, common);
  for (auto* sub : {entropy, select, refine, meshcmd, eval}) sub->add_option("--iter", iter, "iteration index");
  entropy->add_option("--view", view, "only this view id");
  eval->add_option("--pred", pred, "predicted points (.ply or x y z lines)");
  eval->add_option("--gt", gt, "ground-truth points");
  eval->add_option("--mesh", mesh, "mesh to evaluate against the scene");
  eval->add_option("--threshold", threshold, "distance threshold d");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*viewspace) return cmd_viewspace(common);
    if (*init) return cmd_init_train(common);
    if (*entropy) return cmd_entropy_map(common, iter, view);
    if (*select) return cmd_select(common, iter);
    if (*refine) return cmd_refine(common, iter);
    if (*meshcmd) return cmd_mesh(common, iter);
    if (*eval) return cmd_eval(common, iter, pred, gt, mesh, threshold);
    if (*loop) return cmd_loop(common);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "nbv: %s\n", e.what());
    return 1;
  }
  return 0;
}
