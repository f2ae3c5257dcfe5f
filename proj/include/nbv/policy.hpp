#pragma once

#include "nbv/image.hpp"
#include "nbv/radiance_field.hpp"
#include "nbv/scene.hpp"
#include "nbv/uncertainty.hpp"
#include "nbv/view_space.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace nbv {

enum class PolicyKind {
  kRegionEntropy,
  kRandomSection,
  kHeuristic,
  kSimilarity,
  kSimilarityGt,
  kPureRandom,
  kTopkEntropy,
  kEntropyDistance,
};

/// CLI names: region-entropy, random-section, heuristic, similarity,
/// similarity-gt, pure-random, topk-entropy, entropy-distance.
PolicyKind parse_policy(const std::string& name);
std::string policy_name(PolicyKind kind);
std::vector<std::string> policy_names();
bool is_per_section(PolicyKind kind);

/// Everything a policy may look at. Policies never modify it.
struct PolicyState {
  const RadianceField* field = nullptr;
  const ViewSpace* view_space = nullptr;
  const RegionClustering* clustering = nullptr;
  std::vector<ViewId> training_ids;
  std::vector<ViewId> candidate_ids;  // ascending
  std::uint64_t seed = 0;
  const SdfScene* scene = nullptr;  // only the ground-truth similarity baseline needs it

  CameraIntrinsics camera;
  TrainConfig render;  // sampling along rays; jitter is never applied
  EntropyOptions entropy;
  int downsample = 4;

  /// Optional precomputed per-view mean entropies; missing views are computed.
  const std::map<ViewId, double>* entropy_cache = nullptr;

  void validate() const;
};

struct PolicyOptions {
  int k = 12;            // pure-random, topk-entropy, entropy-distance
  double lambda = 0.5;   // entropy-distance trade-off
};

struct Selection {
  std::string policy;
  std::vector<ViewId> chosen;       // in pick order
  std::map<ViewId, double> scores;  // per-candidate score when the policy has one
};

Selection select_next_views(PolicyKind kind, const PolicyState& s, const PolicyOptions& opts = {});

Selection policy_region_entropy(const PolicyState& s);
Selection policy_pure_random(const PolicyState& s, int k);
Selection policy_random_per_section(const PolicyState& s);
Selection policy_heuristic_middle(const PolicyState& s);
Selection policy_similarity(const PolicyState& s, bool use_ground_truth);
Selection policy_topk_entropy(const PolicyState& s, int k);
Selection policy_entropy_distance(const PolicyState& s, int k, double lambda);

/// Per-section argmax of `scores` over candidates; ties go to the lowest id.
std::vector<ViewId> argmax_per_section(const RegionClustering& rc, const std::vector<ViewId>& candidates,
                                       const std::map<ViewId, double>& scores);

/// Mean entropy of every view in `ids`; fills `maps` when given.
std::map<ViewId, double> entropy_scores(const PolicyState& s, const std::vector<ViewId>& ids,
                                        std::map<ViewId, EntropyMap>* maps = nullptr);

struct ImageFeature {
  std::vector<double> values;  // 8x8x3 pooled cells then 3x16 histogram bins
  bool blank = false;          // all-zero input; values are all zero
};

ImageFeature image_feature(const Image& img);
double cosine(const ImageFeature& a, const ImageFeature& b);

/// CSV with header `view_id,section,score`, rows in ascending view id.
void write_scores_csv(const std::string& path, const Selection& sel, const RegionClustering& rc);

}  // namespace nbv
