#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "genunc/error.hpp"
#include "genunc/metrics/report.hpp"
#include "genunc/pipeline/config.hpp"
#include "genunc/pipeline/pipeline.hpp"
#include "genunc/uncertainty/records_io.hpp"
#include "helpers.hpp"

using namespace genunc;
using namespace genunc::pipeline;

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ExperimentConfig small_config(const fs::path& dir) {
  auto cfg = ExperimentConfig::parse(
      "config_version = 1\n"
      "dataset.size = 400\n"
      "dataset.reference_size = 200\n"
      "net.hidden = 16,16\n"
      "net.time_embed_dim = 8\n"
      "train.epochs = 3\n"
      "train.batch_size = 64\n"
      "posterior.members = 2\n"
      "scoring.replicas = 2\n"
      "sampler.steps = 10\n"
      "samples.count = 60\n"
      "filter.n_grid = 30,45\n");
  cfg.output_dir = dir;
  return cfg;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(GENUNC_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config defaults and parsing") {
  const auto cfg = ExperimentConfig::parse("config_version = 1\n");
  CHECK(cfg.replicas == 5);
  CHECK(cfg.sigma2 == 1e-3);
  CHECK(cfg.sampler_steps == 200);
  CHECK(cfg.hidden == std::vector<std::size_t>{64, 64, 64});
  const auto c2 = ExperimentConfig::parse(
      "# comment line\nconfig_version = 1\nscoring.replicas = 3  # trailing\n\nlaplace.sigma = 2.5\n");
  CHECK(c2.replicas == 3);
  CHECK(c2.laplace_sigma == 2.5);
}

TEST_CASE("config rejects malformed input") {
  CHECK_THROWS_AS(ExperimentConfig::parse("scoring.replicas = 3\n"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::parse("config_version = 2\n"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::parse("config_version = 1\nscoring.replicaz = 3\n"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::parse("config_version = 1\nseed = 1\nseed = 2\n"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::parse("config_version = 1\nscoring.replicas = three\n"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::parse("config_version = 1\nscoring.sigma2\n"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::parse("config_version = 1\nsampler.kind = euler\n"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::load("/nonexistent/genunc.cfg"), ConfigError);
}

TEST_CASE("config validation") {
  auto cfg = ExperimentConfig::parse("config_version = 1\n");
  CHECK_NOTHROW(cfg.validate());
  auto flow = cfg;
  flow.set("train.objective", "flow-velocity");
  CHECK_THROWS_AS(flow.validate(), ConfigError);
  flow.set("sampler.kind", "flow-euler");
  CHECK_NOTHROW(flow.validate());
  auto many = cfg;
  many.set("scoring.replicas", "6");
  CHECK_THROWS_AS(many.validate(), ConfigError);
  auto sig = cfg;
  sig.set("scoring.sigma2", "0");
  CHECK_THROWS_AS(sig.validate(), ConfigError);
  CHECK_THROWS_AS(cfg.set("no.such.key", "1"), ConfigError);
}

TEST_CASE("config text round trip and hash") {
  auto cfg = ExperimentConfig::parse("config_version = 1\n");
  cfg.set("scoring.steps", "25");
  cfg.set("filter.scores", "entropy,rarity");
  const auto back = ExperimentConfig::parse(cfg.to_text());
  CHECK(back.entries() == cfg.entries());
  CHECK(back.hash() == cfg.hash());

  auto moved = cfg;
  moved.output_dir = "/elsewhere";
  moved.threads = 8;
  CHECK(moved.hash() == cfg.hash());
  auto reseeded = cfg;
  reseeded.seed = 1;
  CHECK(reseeded.hash() != cfg.hash());
}

TEST_CASE("replica sampler selection") {
  auto cfg = ExperimentConfig::parse("config_version = 1\n");
  const auto schedule = cfg.schedule();
  CHECK(cfg.replica_sampler(schedule).steps() == 200);
  CHECK(cfg.replica_sampler(schedule).kind == diffusion::SamplerKind::ddpm);
  cfg.set("scoring.steps", "25");
  CHECK(cfg.replica_sampler(schedule).steps() == 25);
  cfg.set("scoring.sampler", "ddim");
  CHECK(cfg.replica_sampler(schedule).kind == diffusion::SamplerKind::ddim);
  CHECK(cfg.generation_sampler(schedule).steps() == 200);
}

TEST_CASE("small pipeline run, cache reuse and determinism") {
  const auto dir = testutil::scratch("pipeline_a");
  Pipeline first(small_config(dir));
  first.run();
  CHECK(first.manifest().cache_hits() == 0);
  CHECK(first.manifest().scored_seeds == 60);
  CHECK(first.manifest().nfe_generation == 60u * 10u);
  CHECK(first.manifest().scoring_nfe_per_seed() == 20.0);
  CHECK(fs::exists(dir / "manifest.json"));
  CHECK(fs::exists(first.entropy_csv()));
  CHECK(fs::exists(first.report_path("entropy", 30, "kept")));
  CHECK(fs::exists(first.report_path("entropy+realism", 45, "random")));
  CHECK(fs::exists(first.plots_dir() / "scatter.svg"));

  const auto scores = uncertainty::read_scores_csv(first.entropy_csv());
  CHECK(scores.seed_ids.size() == 60);

  std::vector<std::int64_t> kept, random;
  read_filter_file(first.filter_path("entropy", 30), kept, random);
  CHECK(kept.size() == 30);
  CHECK(random.size() == 30);
  const auto kept_report = metrics::MetricReport::load(first.report_path("entropy", 30, "kept"));
  CHECK(kept_report.seed_ids == kept);

  Pipeline second(small_config(dir));
  second.run();
  CHECK(second.manifest().cache_hits() == second.manifest().stages.size());

  const auto other = testutil::scratch("pipeline_b");
  auto cfg = small_config(other);
  cfg.threads = 3;
  Pipeline third(cfg);
  third.run();
  CHECK(slurp(third.entropy_csv()) == slurp(first.entropy_csv()));
  CHECK(slurp(third.filter_path("entropy", 30)) == slurp(first.filter_path("entropy", 30)));

  auto reseeded = small_config(other);
  reseeded.samples_seed = 1;
  Pipeline fourth(reseeded);
  fourth.run();
  CHECK(fourth.pretrained_path() == third.pretrained_path());
  CHECK(slurp(fourth.entropy_csv()) != slurp(third.entropy_csv()));
}

TEST_CASE("tampered stage outputs are detected") {
  const auto dir = testutil::scratch("pipeline_tamper");
  Pipeline p(small_config(dir));
  p.run();
  const auto entropy = p.entropy_csv();
  const auto original = slurp(entropy);
  {
    std::ofstream out(entropy, std::ios::app);
    out << "999,0\n";
  }
  Pipeline again(small_config(dir));
  CHECK_THROWS_AS(again.run(), HashMismatchError);

  fs::remove(entropy);
  Pipeline rebuilt(small_config(dir));
  rebuilt.run();
  CHECK(slurp(entropy) == original);
}

TEST_CASE("laplace and distance-mode runs") {
  const auto dir = testutil::scratch("pipeline_laplace");
  auto cfg = small_config(dir);
  cfg.set("posterior.kind", "laplace");
  cfg.set("laplace.fraction", "0.5");
  Pipeline lap(cfg);
  lap.run();
  CHECK(fs::exists(lap.laplace_path()));
  CHECK_FALSE(fs::exists(lap.ensemble_manifest()));

  auto dist = small_config(dir);
  dist.set("scoring.replicas", "1");
  dist.set("scoring.steps", "4");
  dist.set("scoring.mode", "distance");
  Pipeline d(dist);
  d.run();
  CHECK(d.manifest().scoring_nfe_per_seed() == 4.0);
  CHECK(d.manifest().nfe_scoring == 60u * 4u);
}

TEST_CASE("run manifest round trip") {
  RunManifest m;
  m.config_hash = "abc";
  m.stages.push_back({"score", "k1", true, 1.5, "ok", ""});
  m.stages.push_back({"eval", "k2", false, 0.5, "ok", ""});
  m.artifacts["entropy"] = "score-k1/entropy.csv";
  m.nfe_generation = 10;
  m.nfe_scoring = 40;
  m.scored_seeds = 2;
  const auto back = RunManifest::from_json(m.to_json());
  CHECK(back.config_hash == "abc");
  CHECK(back.cache_hits() == 1);
  CHECK(back.scoring_nfe_per_seed() == 20.0);
  CHECK(back.artifacts == m.artifacts);
}

TEST_CASE("command line exit codes") {
  const auto dir = testutil::scratch("cli");
  const std::string out = "--output-dir " + dir.string();
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("frobnicate") == 2);
  CHECK(run_cli(out + " --set scoring.replicaz=3 gen-dataset") == 2);
  CHECK(run_cli(out + " --config /nonexistent.cfg gen-dataset") == 2);
  CHECK(run_cli(out + " fit-laplace") == 2);
  {
    std::ofstream cfg(dir / "tiny.cfg");
    cfg << small_config(dir).to_text();
  }
  const std::string base = out + " --config " + (dir / "tiny.cfg").string();
  CHECK(run_cli(base + " gen-dataset") == 0);
  CHECK(run_cli(base + " run") == 0);
  Pipeline p(small_config(dir));
  {
    std::ofstream f(p.entropy_csv(), std::ios::app);
    f << "1,1\n";
  }
  CHECK(run_cli(base + " score") == 4);
  CHECK(run_cli(base + " --set train.lr=1e9 --set train.epochs=20 train") == 3);
}
