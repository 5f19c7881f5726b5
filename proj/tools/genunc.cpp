#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "genunc/error.hpp"
#include "genunc/pipeline/pipeline.hpp"

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kNumeric = 3, kMismatch = 4 };

void print_summary(const genunc::pipeline::Pipeline& p, const std::string& command) {
  const auto& m = p.manifest();
  std::printf("%s: %zu stages, %zu cached, output %s\n", command.c_str(), m.stages.size(), m.cache_hits(),
              p.dir().string().c_str());
  if (m.scored_seeds)
    std::printf("nfe: generation %llu, scoring %llu (%.6g per seed)\n",
                static_cast<unsigned long long>(m.nfe_generation), static_cast<unsigned long long>(m.nfe_scoring),
                m.scoring_nfe_per_seed());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generative uncertainty for small diffusion and flow models"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
  std::optional<std::size_t> threads;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "Experiment config (key = value)")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Root seed");
  app.add_option("--output-dir", output_dir, "Output directory");
  app.add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--set", overrides, "Override a config key: key=value (repeatable)");

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"gen-dataset", "Write the training and held-out reference datasets"},
      {"train", "Train the pretrained model (and ensemble members)"},
      {"fit-laplace", "Fit the last-layer Laplace posterior"},
      {"score", "Generate samples and score their uncertainty"},
      {"filter", "Select kept and random-baseline subsets per score"},
      {"eval", "Write metric reports for every filtered subset"},
      {"plot", "Write SVG figures with CSV twins"},
      {"run", "Execute the full pipeline"},
  };
  for (const auto& [name, help] : commands) app.add_subcommand(name, help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    auto cfg = config_path.empty() ? genunc::pipeline::ExperimentConfig{}
                                   : genunc::pipeline::ExperimentConfig::load(config_path);
    for (const auto& o : overrides) {
      auto eq = o.find('=');
      if (eq == std::string::npos) throw genunc::ConfigError("--set expects key=value, got '" + o + "'");
      cfg.set(o.substr(0, eq), o.substr(eq + 1));
    }
    if (seed) cfg.seed = *seed;
    if (output_dir) cfg.output_dir = *output_dir;
    if (threads) cfg.threads = *threads;
    if (command == "fit-laplace" && cfg.posterior != genunc::pipeline::PosteriorKind::laplace)
      throw genunc::ConfigError("fit-laplace needs posterior.kind = laplace");

    genunc::pipeline::Pipeline p(cfg);
    if (command == "gen-dataset") p.gen_dataset();
    else if (command == "train") p.train();
    else if (command == "fit-laplace") p.fit_posterior();
    else if (command == "score") p.score();
    else if (command == "filter") p.filter();
    else if (command == "eval") p.eval();
    else if (command == "plot") p.plot();
    else p.run();
    if (command != "run") p.write_manifest();
    print_summary(p, command);
    return kOk;
  } catch (const genunc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const genunc::HashMismatchError& e) {
    std::cerr << "hash mismatch: " << e.what() << "\n";
    return kMismatch;
  } catch (const genunc::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
}
