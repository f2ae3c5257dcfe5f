#include "nbv/experiment.hpp"
#include "nbv/random.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace nbv;
namespace fs = std::filesystem;

namespace {

// Small enough to run a full loop in a few seconds.
ExperimentConfig tiny() {
  ExperimentConfig c;
  c.camera.width = 20;
  c.camera.height = 20;
  c.field_resolution = 8;
  c.init_steps = 40;
  c.refine_steps = 40;
  c.train.rays_per_batch = 64;
  c.train.n_samples = 24;
  c.mesh_resolution = 16;
  c.mesh_iso = 1.0;
  c.eval_points = 500;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const char* name) {
  const fs::path d = fs::temp_directory_path() / name;
  fs::remove_all(d);
  return d;
}

}  // namespace

TEST_CASE("config round trip") {
  ExperimentConfig c;
  c.scene = "loader";
  c.policy = "entropy-distance";
  c.policy_options.lambda = 0.25;
  c.train.learning_rate = 0.0123456789;
  c.elevations_deg = {10, 20, 35.5, 50, 80};
  c.entropy.mean = MeanMode::kOpacityMasked;
  c.seed = 123456789012345ULL;
  c.fill_cavities = false;
  std::stringstream ss;
  write_config(ss, c);
  const ExperimentConfig back = parse_config(ss);
  std::stringstream again;
  write_config(again, back);
  CHECK(again.str() == ss.str());
  CHECK(back.scene == "loader");
  CHECK(back.elevations_deg == c.elevations_deg);
  CHECK(back.train.learning_rate == c.train.learning_rate);
  CHECK(back.camera.fov_y == doctest::Approx(c.camera.fov_y).epsilon(1e-15));
  CHECK(back.seed == c.seed);
  CHECK(!back.fill_cavities);
}

TEST_CASE("config parsing errors and comments") {
  std::stringstream ok("# comment\n\n  iterations = 3  # trailing\nscene=ficus\n");
  const ExperimentConfig c = parse_config(ok);
  CHECK(c.iterations == 3);
  CHECK(c.scene == "ficus");

  std::stringstream unknown("colour = red\n");
  CHECK_THROWS_AS(parse_config(unknown), std::invalid_argument);
  std::stringstream bad_number("radius = far\n");
  CHECK_THROWS_AS(parse_config(bad_number), std::invalid_argument);
  std::stringstream no_eq("iterations 3\n");
  CHECK_THROWS_AS(parse_config(no_eq), std::invalid_argument);

  ExperimentConfig v;
  v.initial_views = 31;
  CHECK_THROWS_AS(v.validate(), std::invalid_argument);
  v = ExperimentConfig{};
  v.iterations = -1;
  CHECK_THROWS_AS(v.validate(), std::invalid_argument);
  v = ExperimentConfig{};
  v.policy = "vi";
  CHECK_THROWS_AS(v.validate(), std::invalid_argument);
  v = ExperimentConfig{};
  v.downsample = 3;
  CHECK_THROWS_AS(v.validate(), std::invalid_argument);
  CHECK_THROWS(load_config("/nonexistent/config.txt"));
}

TEST_CASE("id lists") {
  CHECK(join_ids({3, 14, 15}) == "3 14 15");
  CHECK(join_ids({3, 14}, '\n') == "3\n14");
  CHECK(parse_ids("3 14,15\n9\n") == std::vector<ViewId>{3, 14, 15, 9});
  CHECK(parse_ids("").empty());
  CHECK_THROWS_AS(parse_ids("3 x"), std::invalid_argument);
}

TEST_CASE("sub-seeds are labeled and stable") {
  CHECK(derive_seed(0, "train", 1) == derive_seed(0, "train", 1));
  CHECK(derive_seed(0, "train", 1) != derive_seed(0, "train", 2));
  CHECK(derive_seed(0, "train", 1) != derive_seed(0, "policy", 1));
  CHECK(derive_seed(0, "train", 1) != derive_seed(1, "train", 1));
}

TEST_CASE("zero iterations: only the initialization row") {
  ExperimentConfig c = tiny();
  c.iterations = 0;
  const ExperimentReport r = run_active_loop(c);
  REQUIRE(r.rows.size() == 1);
  CHECK(r.rows[0].iteration == 0);
  CHECK(r.rows[0].n_images == 6);
  CHECK(r.rows[0].selected.empty());
  CHECK(r.warnings.empty());
}

TEST_CASE("one region-entropy iteration adds twelve images") {
  ExperimentConfig c = tiny();
  c.iterations = 1;
  const ExperimentReport r = run_active_loop(c);
  REQUIRE(r.rows.size() == 2);
  CHECK(r.rows[1].n_images == 18);
  CHECK(r.rows[1].selected.size() == 12);
  const ExperimentContext ctx(c);
  std::set<int> sections;
  for (ViewId id : r.rows[1].selected) sections.insert(ctx.clustering.section_of(id));
  CHECK(sections.size() == 12);
  CHECK(sections.count(-1) == 0);
}

TEST_CASE("bookkeeping holds for every row and every policy") {
  for (const auto& name : policy_names()) {
    ExperimentConfig c = tiny();
    c.policy = name;
    c.iterations = 2;
    const ExperimentReport r = run_active_loop(c);
    REQUIRE(r.rows.size() == 3);
    std::set<ViewId> seen;
    for (const auto& row : r.rows) {
      CHECK(row.n_images == 6 + 12 * row.iteration);
      for (ViewId id : row.selected) CHECK(seen.insert(id).second);
      CHECK(row.fscore >= 0.0);
      CHECK(row.fscore <= 1.0);
    }
  }
}

TEST_CASE("same seed, same report; different seed, different batches") {
  ExperimentConfig c = tiny();
  c.policy = "pure-random";
  c.iterations = 2;
  std::stringstream a, b, d;
  write_report_csv(a, run_active_loop(c), false);
  write_report_csv(b, run_active_loop(c), false);
  CHECK(a.str() == b.str());
  c.seed = 1;
  write_report_csv(d, run_active_loop(c), false);
  CHECK(d.str() != a.str());
}

TEST_CASE("pool exhaustion truncates with a warning") {
  ExperimentConfig c = tiny();
  c.n_circles = 3;
  c.poses_per_circle = 6;
  c.elevations_deg = {20, 40, 60};
  c.azimuth_bins = 3;
  c.initial_views = 2;
  c.policy = "random-section";
  c.iterations = 5;  // each section has 2 members, so only 2 rounds fit
  const ExperimentReport r = run_active_loop(c);
  CHECK(r.rows.size() == 3);
  REQUIRE(r.warnings.size() == 1);
  CHECK(r.warnings[0].find("truncated before iteration 3") != std::string::npos);

  c.policy = "pure-random";
  c.policy_options.k = 7;  // 16 candidates: two rounds, then 2 left
  const ExperimentReport p = run_active_loop(c);
  CHECK(p.rows.size() == 3);
  CHECK(p.warnings.size() == 1);
}

TEST_CASE("run directory layout") {
  const fs::path dir = fresh_dir("nbv_test_run");
  ExperimentConfig c = tiny();
  c.iterations = 1;
  c.out_dir = dir.string();
  const ExperimentReport r = run_active_loop(c);
  for (const char* f : {"config.txt", "views.txt", "ckpt_000.bin", "ckpt_001.bin", "mesh_000.ply", "mesh_001.ply",
                        "scores_001.csv", "selected_001.txt", "training_000.txt", "training_001.txt", "report.csv",
                        "timing.csv", "status.txt"})
    CHECK_MESSAGE(fs::exists(dir / f), f);
  CHECK(fs::exists(dir / ("entropy_000_" + std::to_string(r.rows[1].selected[0]) + ".pgm")));
  CHECK(r.final_mesh_path == (dir / "mesh_001.ply").string());

  const std::string report = slurp(dir / "report.csv");
  CHECK(report.rfind("iter,n_images,policy,selected_ids,mean_entropy,psnr,fscore,seconds\n", 0) == 0);
  std::stringstream expect;
  write_report_csv(expect, r, false);
  CHECK(report == expect.str());
  CHECK(slurp(dir / "status.txt") == "complete\n");

  // the stored config reproduces the run
  const ExperimentConfig back = load_config((dir / "config.txt").string());
  std::stringstream x, y;
  write_config(x, back);
  write_config(y, c);
  CHECK(x.str() == y.str());

  // the stored checkpoint is the field the session ended with
  const ExperimentContext ctx(c);
  ActiveSession s(ctx);
  s.initialize();
  s.iterate(PolicyKind::kRegionEntropy);
  CHECK(load_checkpoint((dir / "ckpt_001.bin").string()) == s.field());
  fs::remove_all(dir);
}

TEST_CASE("session misuse") {
  const ExperimentConfig c = tiny();
  const ExperimentContext ctx(c);
  ActiveSession s(ctx);
  CHECK_THROWS_AS(s.iterate(PolicyKind::kRegionEntropy), std::logic_error);
  s.initialize();
  CHECK_THROWS_AS(s.initialize(), std::logic_error);
}
