#include "nbv/policy.hpp"

#include "nbv/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>
#include <set>
#include <stdexcept>

namespace nbv {

namespace {

struct NamedPolicy {
  PolicyKind kind;
  const char* name;
};

constexpr NamedPolicy kPolicies[] = {
    {PolicyKind::kRegionEntropy, "region-entropy"}, {PolicyKind::kRandomSection, "random-section"},
    {PolicyKind::kHeuristic, "heuristic"},          {PolicyKind::kSimilarity, "similarity"},
    {PolicyKind::kSimilarityGt, "similarity-gt"},   {PolicyKind::kPureRandom, "pure-random"},
    {PolicyKind::kTopkEntropy, "topk-entropy"},     {PolicyKind::kEntropyDistance, "entropy-distance"},
};

// Candidates of each section, ascending. Throws if a section has run dry.
std::vector<std::vector<ViewId>> section_candidates(const RegionClustering& rc, const std::vector<ViewId>& candidates) {
  const std::set<ViewId> pool(candidates.begin(), candidates.end());
  std::vector<std::vector<ViewId>> out;
  out.reserve(rc.sections.size());
  for (const auto& sec : rc.sections) {
    std::vector<ViewId> ids;
    for (ViewId m : sec.members)
      if (pool.count(m)) ids.push_back(m);
    if (ids.empty()) throw std::runtime_error("section " + std::to_string(sec.id) + " has no remaining candidates");
    out.push_back(std::move(ids));
  }
  return out;
}

Vec3 direction(double elevation, double azimuth) {
  return {std::cos(elevation) * std::cos(azimuth), std::cos(elevation) * std::sin(azimuth), std::sin(elevation)};
}

// Global ranking by descending score, ties to the lowest id.
std::vector<ViewId> ranked(const std::vector<ViewId>& ids, const std::map<ViewId, double>& scores) {
  std::vector<ViewId> order = ids;
  std::stable_sort(order.begin(), order.end(), [&](ViewId a, ViewId b) {
    const double sa = scores.at(a), sb = scores.at(b);
    return sa != sb ? sa > sb : a < b;
  });
  return order;
}

void require_k(const PolicyState& s, int k) {
  if (k < 0 || static_cast<std::size_t>(k) > s.candidate_ids.size())
    throw std::invalid_argument("k = " + std::to_string(k) + " exceeds the candidate pool of " +
                                std::to_string(s.candidate_ids.size()));
}

}  // namespace

PolicyKind parse_policy(const std::string& name) {
  for (const auto& p : kPolicies)
    if (name == p.name) return p.kind;
  throw std::invalid_argument("unknown policy '" + name + "'");
}

std::string policy_name(PolicyKind kind) {
  for (const auto& p : kPolicies)
    if (kind == p.kind) return p.name;
  return "?";
}

std::vector<std::string> policy_names() {
  std::vector<std::string> names;
  for (const auto& p : kPolicies) names.emplace_back(p.name);
  return names;
}

bool is_per_section(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kRegionEntropy:
    case PolicyKind::kRandomSection:
    case PolicyKind::kHeuristic:
    case PolicyKind::kSimilarity:
    case PolicyKind::kSimilarityGt:
      return true;
    default:
      return false;
  }
}

void PolicyState::validate() const {
  if (!field || !view_space || !clustering) throw std::invalid_argument("policy state: missing field or view space");
  if (candidate_ids.empty()) throw std::invalid_argument("policy state: empty candidate pool");
  if (!std::is_sorted(candidate_ids.begin(), candidate_ids.end()))
    throw std::invalid_argument("policy state: candidate ids must be ascending");
  const std::set<ViewId> train(training_ids.begin(), training_ids.end());
  for (ViewId c : candidate_ids)
    if (train.count(c)) throw std::invalid_argument("policy state: view " + std::to_string(c) + " is in both pools");
  if (train.size() + candidate_ids.size() != view_space->size())
    throw std::invalid_argument("policy state: training and candidate pools must cover the view space");
}

std::map<ViewId, double> entropy_scores(const PolicyState& s, const std::vector<ViewId>& ids,
                                        std::map<ViewId, EntropyMap>* maps) {
  std::map<ViewId, double> scores;
  for (ViewId id : ids) {
    if (s.entropy_cache && !maps) {
      if (auto it = s.entropy_cache->find(id); it != s.entropy_cache->end()) {
        scores[id] = it->second;
        continue;
      }
    }
    EntropyMap m = entropy_map(*s.field, s.camera, s.view_space->view(id).pose, s.render, s.downsample, s.entropy);
    scores[id] = view_mean_entropy(m, s.entropy);
    if (maps) (*maps)[id] = std::move(m);
  }
  return scores;
}

std::vector<ViewId> argmax_per_section(const RegionClustering& rc, const std::vector<ViewId>& candidates,
                                       const std::map<ViewId, double>& scores) {
  std::vector<ViewId> chosen;
  for (const auto& ids : section_candidates(rc, candidates)) {
    ViewId best = ids.front();
    for (ViewId id : ids)
      if (scores.at(id) > scores.at(best)) best = id;
    chosen.push_back(best);
  }
  return chosen;
}

Selection policy_region_entropy(const PolicyState& s) {
  s.validate();
  std::vector<ViewId> sectioned;
  for (const auto& ids : section_candidates(*s.clustering, s.candidate_ids))
    sectioned.insert(sectioned.end(), ids.begin(), ids.end());
  std::sort(sectioned.begin(), sectioned.end());
  Selection sel{"region-entropy", {}, entropy_scores(s, sectioned)};
  sel.chosen = argmax_per_section(*s.clustering, s.candidate_ids, sel.scores);
  return sel;
}

Selection policy_pure_random(const PolicyState& s, int k) {
  s.validate();
  require_k(s, k);
  Rng rng(s.seed);
  std::vector<ViewId> pool = s.candidate_ids;
  Selection sel{"pure-random", {}, {}};
  for (int i = 0; i < k; ++i) {
    const std::size_t j = static_cast<std::size_t>(i) + rng.index(pool.size() - static_cast<std::size_t>(i));
    std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
    sel.chosen.push_back(pool[static_cast<std::size_t>(i)]);
  }
  return sel;
}

Selection policy_random_per_section(const PolicyState& s) {
  s.validate();
  Rng rng(s.seed);
  Selection sel{"random-section", {}, {}};
  for (const auto& ids : section_candidates(*s.clustering, s.candidate_ids))
    sel.chosen.push_back(ids[rng.index(ids.size())]);
  return sel;
}

Selection policy_heuristic_middle(const PolicyState& s) {
  s.validate();
  const ViewSpace& vs = *s.view_space;
  const auto per_section = section_candidates(*s.clustering, s.candidate_ids);
  Selection sel{"heuristic", {}, {}};
  for (std::size_t i = 0; i < per_section.size(); ++i) {
    const auto& members = s.clustering->sections[i].members;
    double el = 0.0, az = 0.0;
    for (ViewId m : members) {
      el += vs.view(m).elevation;
      az += vs.view(m).azimuth;
    }
    el /= static_cast<double>(members.size());
    az /= static_cast<double>(members.size());
    const Vec3 centroid = vs.target + direction(el, az);

    ViewId best = -1;
    double best_d = 0.0;
    for (ViewId id : per_section[i]) {
      const double d = spherical_distance(vs.view(id).pose.position, centroid, vs.target);
      sel.scores[id] = d;
      if (best < 0 || d < best_d - 1e-12) {
        best = id;
        best_d = d;
      }
    }
    sel.chosen.push_back(best);
  }
  return sel;
}

Selection policy_similarity(const PolicyState& s, bool use_ground_truth) {
  s.validate();
  if (!s.scene) throw std::invalid_argument("similarity policies need the scene to render the training images");
  const CameraIntrinsics small = downsampled(s.camera, s.downsample);
  const ViewSpace& vs = *s.view_space;

  std::vector<ImageFeature> train_features;
  for (ViewId id : s.training_ids)
    train_features.push_back(image_feature(render_ground_truth(*s.scene, small, vs.view(id).pose, s.render.background)));

  Selection sel{use_ground_truth ? "similarity-gt" : "similarity", {}, {}};
  for (const auto& ids : section_candidates(*s.clustering, s.candidate_ids)) {
    ViewId best = -1;
    for (ViewId id : ids) {
      const Pose& pose = vs.view(id).pose;
      const Image img = use_ground_truth ? render_ground_truth(*s.scene, small, pose, s.render.background)
                                         : render_image(*s.field, s.camera, pose, s.render, s.downsample);
      const ImageFeature f = image_feature(img);
      double sim = -1.0;
      for (const auto& t : train_features) sim = std::max(sim, cosine(f, t));
      sel.scores[id] = sim;
      if (best < 0 || sim < sel.scores[best]) best = id;
    }
    sel.chosen.push_back(best);
  }
  return sel;
}

Selection policy_topk_entropy(const PolicyState& s, int k) {
  s.validate();
  require_k(s, k);
  Selection sel{"topk-entropy", {}, entropy_scores(s, s.candidate_ids)};
  const auto order = ranked(s.candidate_ids, sel.scores);
  sel.chosen.assign(order.begin(), order.begin() + k);
  return sel;
}

Selection policy_entropy_distance(const PolicyState& s, int k, double lambda) {
  s.validate();
  require_k(s, k);
  Selection sel{"entropy-distance", {}, entropy_scores(s, s.candidate_ids)};
  const ViewSpace& vs = *s.view_space;
  // h + lambda * ln N * d / pi ranks exactly like h / ln N + lambda * d / pi.
  const double ln_n = std::log(static_cast<double>(s.render.n_samples));

  std::vector<ViewId> remaining = s.candidate_ids;
  for (int pick = 0; pick < k; ++pick) {
    std::size_t best = 0;
    double best_score = 0.0;
    for (std::size_t i = 0; i < remaining.size(); ++i) {
      const ViewId id = remaining[i];
      double score = sel.scores.at(id);
      if (!sel.chosen.empty() && lambda != 0.0) {
        double nearest = std::numbers::pi;
        for (ViewId c : sel.chosen)
          nearest = std::min(nearest, spherical_distance(vs.view(id).pose, vs.view(c).pose, vs.target));
        score += lambda * ln_n * nearest / std::numbers::pi;
      }
      if (i == 0 || score > best_score) {
        best = i;
        best_score = score;
      }
    }
    sel.chosen.push_back(remaining[best]);
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(best));
  }
  return sel;
}

Selection select_next_views(PolicyKind kind, const PolicyState& s, const PolicyOptions& opts) {
  switch (kind) {
    case PolicyKind::kRegionEntropy: return policy_region_entropy(s);
    case PolicyKind::kRandomSection: return policy_random_per_section(s);
    case PolicyKind::kHeuristic: return policy_heuristic_middle(s);
    case PolicyKind::kSimilarity: return policy_similarity(s, false);
    case PolicyKind::kSimilarityGt: return policy_similarity(s, true);
    case PolicyKind::kPureRandom: return policy_pure_random(s, opts.k);
    case PolicyKind::kTopkEntropy: return policy_topk_entropy(s, opts.k);
    case PolicyKind::kEntropyDistance: return policy_entropy_distance(s, opts.k, opts.lambda);
  }
  throw std::invalid_argument("unhandled policy");
}

ImageFeature image_feature(const Image& img) {
  constexpr int kCells = 8;
  constexpr int kBins = 16;
  if (img.width < 1 || img.height < 1) throw std::invalid_argument("image_feature: empty image");
  ImageFeature f;
  f.values.assign(kCells * kCells * 3 + 3 * kBins, 0.0);

  for (int cy = 0; cy < kCells; ++cy) {
    const int y0 = cy * img.height / kCells, y1 = std::max(y0 + 1, (cy + 1) * img.height / kCells);
    for (int cx = 0; cx < kCells; ++cx) {
      const int x0 = cx * img.width / kCells, x1 = std::max(x0 + 1, (cx + 1) * img.width / kCells);
      Rgb sum = Rgb::Zero();
      int count = 0;
      for (int y = y0; y < std::min(y1, img.height); ++y)
        for (int x = x0; x < std::min(x1, img.width); ++x) {
          sum += img.at(x, y);
          ++count;
        }
      const Rgb mean = count ? Rgb(sum / count) : Rgb(Rgb::Zero());
      for (int c = 0; c < 3; ++c) f.values[static_cast<std::size_t>((cy * kCells + cx) * 3 + c)] = mean[c];
    }
  }

  const std::size_t hist = kCells * kCells * 3;
  const double inv = 1.0 / static_cast<double>(img.pixels.size());
  for (const auto& p : img.pixels)
    for (int c = 0; c < 3; ++c) {
      const int bin = std::clamp(static_cast<int>(std::floor(p[c] * kBins)), 0, kBins - 1);
      f.values[hist + static_cast<std::size_t>(c * kBins + bin)] += inv;
    }

  double norm2 = 0.0;
  for (double v : f.values) norm2 += v * v;
  // A black image still fills histogram bin 0, so check the pooled part.
  const bool dark = std::all_of(f.values.begin(), f.values.begin() + static_cast<std::ptrdiff_t>(hist),
                                [](double v) { return v == 0.0; });
  if (dark) {
    f.blank = true;
    std::fill(f.values.begin(), f.values.end(), 0.0);
    return f;
  }
  const double norm = std::sqrt(norm2);
  for (double& v : f.values) v /= norm;
  return f;
}

double cosine(const ImageFeature& a, const ImageFeature& b) {
  if (a.values.size() != b.values.size()) throw std::invalid_argument("cosine: feature length mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    dot += a.values[i] * b.values[i];
    na += a.values[i] * a.values[i];
    nb += b.values[i] * b.values[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

void write_scores_csv(const std::string& path, const Selection& sel, const RegionClustering& rc) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  std::fprintf(f, "view_id,section,score\n");
  for (const auto& [id, score] : sel.scores) std::fprintf(f, "%d,%d,%.9g\n", id, rc.section_of(id), score);
  if (std::fclose(f) != 0) throw std::runtime_error("error writing " + path);
}

}  // namespace nbv
