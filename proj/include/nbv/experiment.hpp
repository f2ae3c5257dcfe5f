#pragma once

#include "nbv/metrics.hpp"
#include "nbv/policy.hpp"
#include "nbv/radiance_field.hpp"
#include "nbv/scene.hpp"
#include "nbv/trainer.hpp"
#include "nbv/uncertainty.hpp"
#include "nbv/view_space.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace nbv {

/// Flat configuration of one active-reconstruction run. Serialized as
/// `key = value` lines; see `write_config` for the full key list.
struct ExperimentConfig {
  std::string scene = "snowman";
  CameraIntrinsics camera;  // 100 x 100, 40 degree vertical fov

  int n_circles = 5;
  int poses_per_circle = 30;
  std::vector<double> elevations_deg = {15, 30, 45, 60, 75};
  double radius = 4.0;
  int azimuth_bins = 6;
  int initial_views = 6;

  std::string policy = "region-entropy";
  PolicyOptions policy_options;
  int iterations = 1;

  int field_resolution = 32;
  int init_steps = 3000;
  int refine_steps = 3000;
  TrainConfig train;  // steps and seed are overridden per phase

  EntropyOptions entropy;
  int downsample = 4;

  int mesh_resolution = 128;
  double mesh_side = 2.4;
  double mesh_iso = 10.0;
  bool fill_cavities = true;  // close unobserved interiors before meshing
  double fscore_threshold = 0.05;
  int eval_points = 100000;

  std::uint64_t seed = 0;
  std::string out_dir;  // empty: no files are written
  bool write_entropy_maps = true;
  bool record_timing = false;  // wall-clock seconds in report.csv (breaks byte-identical reruns)

  void validate() const;
};

ExperimentConfig parse_config(std::istream& is, ExperimentConfig base = {});
ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {});
/// Applies one `key=value` assignment; throws on unknown keys or bad values.
void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);
void write_config(std::ostream& os, const ExperimentConfig& cfg);

/// Derived objects shared by every phase of a run.
struct ExperimentContext {
  ExperimentConfig cfg;
  SdfScene scene;
  ViewSpace views;
  RegionClustering clustering;

  explicit ExperimentContext(const ExperimentConfig& c);

  RadianceField fresh_field() const;
  TrainConfig train_config(int iteration) const;
  /// Sampling settings for rendering/entropy (no jitter).
  TrainConfig render_config() const;
  PosedImage acquire(ViewId id) const;
  std::vector<ViewId> initial_ids() const;
  std::vector<ViewId> candidates(const std::vector<ViewId>& training) const;
  PolicyState policy_state(const RadianceField& f, const std::vector<ViewId>& training, int iteration) const;
};

/// Trains `f` on the ground-truth images of `training` with the phase's
/// sub-seed (iteration 0 = initialization), then rounds the field to float32
/// so that in-memory runs and checkpoint replays agree.
TrainReport train_phase(const ExperimentContext& ctx, RadianceField& f, const std::vector<ViewId>& training,
                        int iteration);

Selection select_phase(const ExperimentContext& ctx, const RadianceField& f, const std::vector<ViewId>& training,
                       int iteration, const std::map<ViewId, double>* entropy_cache = nullptr);

struct MeshEvaluation {
  TriangleMesh mesh;
  FScoreReport score;
};

MeshEvaluation evaluate_field(const ExperimentContext& ctx, const RadianceField& f, int iteration);
FScoreReport evaluate_mesh(const ExperimentContext& ctx, const TriangleMesh& mesh, int iteration);
const PointCloud& ground_truth_points(const ExperimentContext& ctx);

struct IterationRecord {
  int iteration = 0;
  int n_images = 0;
  std::vector<ViewId> selected;
  double mean_entropy = 0.0;  // mean over candidate views of the per-view mean entropy
  double psnr = 0.0;
  double fscore = 0.0;
  FScoreReport fscore_detail;
  double select_seconds = 0.0;
  double train_seconds = 0.0;
};

struct ExperimentReport {
  std::string policy;
  std::vector<IterationRecord> rows;
  std::string final_mesh_path;
  std::vector<std::string> warnings;
};

/// `iter,n_images,policy,selected_ids,mean_entropy,psnr,fscore,seconds`;
/// selected ids are space separated.
void write_report_csv(std::ostream& os, const ExperimentReport& r, bool with_timing);

/// Resumable state of one run: the trained field and the acquired views.
class ActiveSession {
 public:
  explicit ActiveSession(const ExperimentContext& ctx);

  /// Acquires the initial views, trains from scratch, and records row 0.
  void initialize();
  /// One select -> acquire -> refine -> evaluate round. Returns false (with
  /// a warning) when the candidate pool cannot serve the policy any more.
  bool iterate(PolicyKind policy);

  const ExperimentReport& report() const { return report_; }
  const RadianceField& field() const { return field_; }
  const std::vector<ViewId>& training_ids() const { return training_; }
  int iteration() const { return iteration_; }

 private:
  void record(IterationRecord row);

  const ExperimentContext* ctx_;
  RadianceField field_;
  std::vector<ViewId> training_;
  std::map<ViewId, double> entropy_;  // of the current field, over current candidates
  int iteration_ = 0;
  ExperimentReport report_;
};

ExperimentReport run_active_loop(const ExperimentConfig& cfg);

std::string join_ids(const std::vector<ViewId>& ids, char sep = ' ');
std::vector<ViewId> parse_ids(const std::string& s);

}  // namespace nbv
