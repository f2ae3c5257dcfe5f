#include "nbv/experiment.hpp"

#include "nbv/random.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace nbv {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string numbered(const std::string& dir, const char* stem, int iteration, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%03d%s", stem, iteration, ext);
  return (std::filesystem::path(dir) / buf).string();
}

}  // namespace

ExperimentContext::ExperimentContext(const ExperimentConfig& c) : cfg(c) {
  cfg.validate();
  scene = scene_preset(cfg.scene);
  std::vector<double> elev(cfg.elevations_deg.size());
  for (std::size_t i = 0; i < elev.size(); ++i) elev[i] = cfg.elevations_deg[i] * std::numbers::pi / 180.0;
  views = generate_view_space(cfg.n_circles, cfg.poses_per_circle, elev, cfg.radius, Vec3::Zero());
  clustering = cluster_regions(views, cfg.azimuth_bins);
}

RadianceField ExperimentContext::fresh_field() const { return RadianceField(Aabb{}, cfg.field_resolution); }

TrainConfig ExperimentContext::train_config(int iteration) const {
  TrainConfig t = cfg.train;
  t.steps = iteration == 0 ? cfg.init_steps : cfg.refine_steps;
  t.seed = derive_seed(cfg.seed, "train", static_cast<std::uint64_t>(iteration));
  return t;
}

TrainConfig ExperimentContext::render_config() const {
  TrainConfig t = cfg.train;
  t.stratified = false;
  return t;
}

PosedImage ExperimentContext::acquire(ViewId id) const {
  PosedImage out;
  out.pose = views.view(id).pose;
  out.image = render_ground_truth(scene, cfg.camera, out.pose, cfg.train.background, &out.coverage);
  return out;
}

std::vector<ViewId> ExperimentContext::initial_ids() const { return initial_middle_views(views, cfg.initial_views); }

std::vector<ViewId> ExperimentContext::candidates(const std::vector<ViewId>& training) const {
  const std::set<ViewId> used(training.begin(), training.end());
  std::vector<ViewId> out;
  for (const auto& v : views.views)
    if (!used.count(v.id)) out.push_back(v.id);
  return out;
}

PolicyState ExperimentContext::policy_state(const RadianceField& f, const std::vector<ViewId>& training,
                                            int iteration) const {
  PolicyState s;
  s.field = &f;
  s.view_space = &views;
  s.clustering = &clustering;
  s.training_ids = training;
  s.candidate_ids = candidates(training);
  s.seed = derive_seed(cfg.seed, "policy", static_cast<std::uint64_t>(iteration));
  s.scene = &scene;
  s.camera = cfg.camera;
  s.render = render_config();
  s.entropy = cfg.entropy;
  s.downsample = cfg.downsample;
  return s;
}

TrainReport train_phase(const ExperimentContext& ctx, RadianceField& f, const std::vector<ViewId>& training,
                        int iteration) {
  std::vector<PosedImage> images;
  images.reserve(training.size());
  for (ViewId id : training) images.push_back(ctx.acquire(id));
  TrainReport r = train(f, images, ctx.cfg.camera, ctx.train_config(iteration));
  f.quantize_float32();
  return r;
}

Selection select_phase(const ExperimentContext& ctx, const RadianceField& f, const std::vector<ViewId>& training,
                       int iteration, const std::map<ViewId, double>* entropy_cache) {
  PolicyState s = ctx.policy_state(f, training, iteration);
  s.entropy_cache = entropy_cache;
  return select_next_views(parse_policy(ctx.cfg.policy), s, ctx.cfg.policy_options);
}

const PointCloud& ground_truth_points(const ExperimentContext& ctx) {
  static std::mutex mu;
  static std::map<std::tuple<std::string, std::uint64_t, int>, PointCloud> cache;
  const std::lock_guard lock(mu);
  auto key = std::make_tuple(ctx.cfg.scene, ctx.cfg.seed, ctx.cfg.eval_points);
  auto it = cache.find(key);
  if (it == cache.end())
    it = cache
             .emplace(key, sample_surface_points(ctx.scene, static_cast<std::size_t>(ctx.cfg.eval_points),
                                                 derive_seed(ctx.cfg.seed, "gt_points")))
             .first;
  return it->second;
}

FScoreReport evaluate_mesh(const ExperimentContext& ctx, const TriangleMesh& mesh, int iteration) {
  const PointCloud& gt = ground_truth_points(ctx);
  PointCloud pred;
  if (!mesh.empty())
    pred = sample_mesh_points(mesh, static_cast<std::size_t>(ctx.cfg.eval_points),
                              derive_seed(ctx.cfg.seed, "mesh_points", static_cast<std::uint64_t>(iteration)));
  return fscore(pred, gt, ctx.cfg.fscore_threshold);
}

MeshEvaluation evaluate_field(const ExperimentContext& ctx, const RadianceField& f, int iteration) {
  DensityGrid grid = density_grid_export(f, ctx.cfg.mesh_resolution, ctx.cfg.mesh_side, Vec3::Zero());
  if (ctx.cfg.fill_cavities) fill_cavities(grid, ctx.cfg.mesh_iso);
  MeshEvaluation e;
  e.mesh = marching_cubes(grid, ctx.cfg.mesh_iso);
  e.score = evaluate_mesh(ctx, e.mesh, iteration);
  return e;
}

void write_report_csv(std::ostream& os, const ExperimentReport& r, bool with_timing) {
  os << "iter,n_images,policy,selected_ids,mean_entropy,psnr,fscore,seconds\n";
  char buf[256];
  for (const auto& row : r.rows) {
    const double secs = with_timing ? row.select_seconds + row.train_seconds : 0.0;
    std::snprintf(buf, sizeof buf, ",%.9g,%.9g,%.9g,%.3f\n", row.mean_entropy, row.psnr, row.fscore, secs);
    os << row.iteration << ',' << row.n_images << ',' << r.policy << ',' << join_ids(row.selected) << buf;
  }
}

ActiveSession::ActiveSession(const ExperimentContext& ctx) : ctx_(&ctx), field_(ctx.fresh_field()) {
  report_.policy = ctx.cfg.policy;
}

void ActiveSession::record(IterationRecord row) {
  const ExperimentConfig& cfg = ctx_->cfg;
  const bool files = !cfg.out_dir.empty();

  // Entropy over the remaining pool of the freshly trained field; the next
  // selection reuses these numbers instead of re-rendering.
  const auto t0 = std::chrono::steady_clock::now();
  PolicyState s = ctx_->policy_state(field_, training_, iteration_);
  std::map<ViewId, EntropyMap> maps;
  const bool want_maps = files && cfg.write_entropy_maps;
  entropy_ = s.candidate_ids.empty() ? std::map<ViewId, double>{}
                                     : entropy_scores(s, s.candidate_ids, want_maps ? &maps : nullptr);
  double sum = 0.0;
  for (const auto& [id, h] : entropy_) sum += h;
  row.mean_entropy = entropy_.empty() ? 0.0 : sum / static_cast<double>(entropy_.size());
  row.select_seconds += seconds_since(t0);

  const MeshEvaluation ev = evaluate_field(*ctx_, field_, iteration_);
  row.fscore = ev.score.fscore;
  row.fscore_detail = ev.score;

  if (files) {
    save_checkpoint(numbered(cfg.out_dir, "ckpt", iteration_, ".bin"), field_);
    std::ofstream ids(numbered(cfg.out_dir, "training", iteration_, ".txt"));
    ids << join_ids(training_, '\n') << '\n';
    const std::string mesh_path = numbered(cfg.out_dir, "mesh", iteration_, ".ply");
    write_ply(mesh_path, ev.mesh);
    report_.final_mesh_path = mesh_path;
    for (const auto& [id, m] : maps) {
      char name[64];
      std::snprintf(name, sizeof name, "entropy_%03d_%d.pgm", iteration_, id);
      write_entropy_pgm((std::filesystem::path(cfg.out_dir) / name).string(), m);
    }
  }
  report_.rows.push_back(std::move(row));
}

void ActiveSession::initialize() {
  if (!report_.rows.empty()) throw std::logic_error("session already initialized");
  training_ = ctx_->initial_ids();
  field_ = ctx_->fresh_field();
  iteration_ = 0;
  IterationRecord row;
  row.iteration = 0;
  row.n_images = static_cast<int>(training_.size());
  const TrainReport tr = train_phase(*ctx_, field_, training_, 0);
  row.psnr = tr.final_psnr;
  row.train_seconds = tr.seconds;
  record(std::move(row));
}

bool ActiveSession::iterate(PolicyKind policy) {
  if (report_.rows.empty()) throw std::logic_error("session not initialized");
  const ExperimentConfig& cfg = ctx_->cfg;
  const int next = iteration_ + 1;

  PolicyState s = ctx_->policy_state(field_, training_, next);
  s.entropy_cache = &entropy_;
  std::string shortage;
  if (s.candidate_ids.empty()) {
    shortage = "candidate pool is empty";
  } else if (is_per_section(policy)) {
    for (const auto& sec : ctx_->clustering.sections)
      if (std::none_of(sec.members.begin(), sec.members.end(), [&](ViewId v) {
            return std::binary_search(s.candidate_ids.begin(), s.candidate_ids.end(), v);
          }))
        shortage = "section " + std::to_string(sec.id) + " has no remaining candidates";
  } else if (static_cast<std::size_t>(cfg.policy_options.k) > s.candidate_ids.size()) {
    shortage = "only " + std::to_string(s.candidate_ids.size()) + " candidates left for k = " +
               std::to_string(cfg.policy_options.k);
  }
  if (!shortage.empty()) {
    report_.warnings.push_back("truncated before iteration " + std::to_string(next) + ": " + shortage);
    return false;
  }

  const auto t0 = std::chrono::steady_clock::now();
  const Selection sel = select_next_views(policy, s, cfg.policy_options);
  IterationRecord row;
  row.select_seconds = seconds_since(t0);
  if (!cfg.out_dir.empty()) {
    write_scores_csv(numbered(cfg.out_dir, "scores", next, ".csv"), sel, ctx_->clustering);
    std::ofstream os(numbered(cfg.out_dir, "selected", next, ".txt"));
    os << join_ids(sel.chosen, '\n') << '\n';
  }

  training_.insert(training_.end(), sel.chosen.begin(), sel.chosen.end());
  iteration_ = next;
  row.iteration = next;
  row.n_images = static_cast<int>(training_.size());
  row.selected = sel.chosen;
  const TrainReport tr = train_phase(*ctx_, field_, training_, next);
  row.psnr = tr.final_psnr;
  row.train_seconds = tr.seconds;
  record(std::move(row));
  return true;
}

ExperimentReport run_active_loop(const ExperimentConfig& cfg) {
  const ExperimentContext ctx(cfg);
  const PolicyKind policy = parse_policy(cfg.policy);
  const bool files = !cfg.out_dir.empty();
  if (files) {
    std::filesystem::create_directories(cfg.out_dir);
    std::ofstream os(std::filesystem::path(cfg.out_dir) / "config.txt");
    write_config(os, cfg);
    write_view_space((std::filesystem::path(cfg.out_dir) / "views.txt").string(), ctx.views);
  }

  ActiveSession session(ctx);
  session.initialize();
  for (int i = 0; i < cfg.iterations; ++i)
    if (!session.iterate(policy)) break;

  ExperimentReport report = session.report();
  if (files) {
    const auto dir = std::filesystem::path(cfg.out_dir);
    std::ofstream os(dir / "report.csv");
    write_report_csv(os, report, cfg.record_timing);
    std::ofstream timing(dir / "timing.csv");
    timing << "iter,select_seconds,train_seconds\n";
    for (const auto& row : report.rows) timing << row.iteration << ',' << row.select_seconds << ',' << row.train_seconds << '\n';
    std::ofstream status(dir / "status.txt");
    status << (report.warnings.empty() ? "complete" : "truncated") << '\n';
    for (const auto& w : report.warnings) status << w << '\n';
  }
  return report;
}

std::string join_ids(const std::vector<ViewId>& ids, char sep) {
  std::string s;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) s += sep;
    s += std::to_string(ids[i]);
  }
  return s;
}

std::vector<ViewId> parse_ids(const std::string& s) {
  std::vector<ViewId> ids;
  std::string token;
  auto flush = [&] {
    if (token.empty()) return;
    std::size_t pos = 0;
    int v = 0;
    try {
      v = std::stoi(token, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != token.size()) throw std::invalid_argument("bad view id '" + token + "'");
    ids.push_back(v);
    token.clear();
  };
  for (char c : s) {
    if (c == ' ' || c == ',' || c == '\n' || c == '\t' || c == '\r') flush();
    else token += c;
  }
  flush();
  return ids;
}

}  // namespace nbv
