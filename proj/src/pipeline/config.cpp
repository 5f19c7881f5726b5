#include "genunc/pipeline/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "genunc/error.hpp"
#include "genunc/numeric/hash.hpp"

namespace genunc::pipeline {

std::string to_string(PosteriorKind k) { return k == PosteriorKind::ensemble ? "ensemble" : "laplace"; }

PosteriorKind posterior_kind_from_string(const std::string& name) {
  if (name == "ensemble") return PosteriorKind::ensemble;
  if (name == "laplace") return PosteriorKind::laplace;
  throw ConfigError("unknown posterior kind '" + name + "'");
}

namespace {

std::string fmt_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
T parse_integer(const std::string& key, const std::string& v) {
  T out{};
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return out;
}

double parse_real(const std::string& key, const std::string& v) {
  char* end = nullptr;
  double out = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0') throw ConfigError(key + ": expected a number, got '" + v + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

template <typename T>
std::string join(const std::vector<T>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ",";
    if constexpr (std::is_same_v<T, std::string>)
      out += items[i];
    else
      out += std::to_string(items[i]);
  }
  return out;
}

struct Key {
  std::string name;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> put;
};

template <typename E, typename ToS, typename FromS>
Key enum_key(std::string name, E ExperimentConfig::*field, ToS to_s, FromS from_s) {
  return {name, [=](const ExperimentConfig& c) { return to_s(c.*field); },
          [=](ExperimentConfig& c, const std::string& v) {
            try {
              c.*field = from_s(v);
            } catch (const Error& e) {
              throw ConfigError(name + ": " + e.what());
            }
          }};
}

Key size_key(std::string name, std::size_t ExperimentConfig::*field) {
  return {name, [=](const ExperimentConfig& c) { return std::to_string(c.*field); },
          [=](ExperimentConfig& c, const std::string& v) { c.*field = parse_integer<std::size_t>(name, v); }};
}

Key int_key(std::string name, int ExperimentConfig::*field) {
  return {name, [=](const ExperimentConfig& c) { return std::to_string(c.*field); },
          [=](ExperimentConfig& c, const std::string& v) { c.*field = parse_integer<int>(name, v); }};
}

Key real_key(std::string name, double ExperimentConfig::*field) {
  return {name, [=](const ExperimentConfig& c) { return fmt_real(c.*field); },
          [=](ExperimentConfig& c, const std::string& v) { c.*field = parse_real(name, v); }};
}

Key bool_key(std::string name, bool ExperimentConfig::*field) {
  return {name, [=](const ExperimentConfig& c) { return std::string(c.*field ? "true" : "false"); },
          [=](ExperimentConfig& c, const std::string& v) { c.*field = parse_bool(name, v); }};
}

Key path_key(std::string name, std::filesystem::path ExperimentConfig::*field) {
  return {name, [=](const ExperimentConfig& c) { return (c.*field).generic_string(); },
          [=](ExperimentConfig& c, const std::string& v) { c.*field = v; }};
}

Key string_key(std::string name, std::string ExperimentConfig::*field) {
  return {name, [=](const ExperimentConfig& c) { return c.*field; },
          [=](ExperimentConfig& c, const std::string& v) { c.*field = v; }};
}

Key size_list_key(std::string name, std::vector<std::size_t> ExperimentConfig::*field) {
  return {name, [=](const ExperimentConfig& c) { return join(c.*field); },
          [=](ExperimentConfig& c, const std::string& v) {
            std::vector<std::size_t> out;
            for (const auto& item : split_list(v)) out.push_back(parse_integer<std::size_t>(name, item));
            c.*field = out;
          }};
}

const std::vector<Key>& keys() {
  using C = ExperimentConfig;
  static const std::vector<Key> table = {
      {"seed", [](const C& c) { return std::to_string(c.seed); },
       [](C& c, const std::string& v) { c.seed = parse_integer<std::uint64_t>("seed", v); }},
      path_key("output_dir", &C::output_dir),
      size_key("threads", &C::threads),
      string_key("dataset.source", &C::dataset_source),
      path_key("dataset.path", &C::dataset_path),
      size_key("dataset.size", &C::dataset_size),
      size_key("dataset.reference_size", &C::reference_size),
      int_key("dataset.modes_per_side", &C::modes_per_side),
      real_key("dataset.span", &C::mode_span),
      real_key("dataset.mode_std", &C::mode_std),
      real_key("dataset.hallucination_radius", &C::hallucination_radius),
      size_list_key("net.hidden", &C::hidden),
      enum_key("net.activation", &C::activation, [](numeric::Activation a) { return numeric::to_string(a); },
               numeric::activation_from_string),
      size_key("net.time_embed_dim", &C::time_embed_dim),
      bool_key("net.conditional", &C::conditional),
      enum_key("schedule.kind", &C::schedule_kind, [](diffusion::ScheduleKind k) { return diffusion::to_string(k); },
               diffusion::schedule_kind_from_string),
      int_key("schedule.steps", &C::schedule_steps),
      enum_key("train.objective", &C::objective, [](diffusion::Objective o) { return diffusion::to_string(o); },
               diffusion::objective_from_string),
      int_key("train.epochs", &C::epochs),
      size_key("train.batch_size", &C::batch_size),
      real_key("train.lr", &C::lr),
      real_key("train.ema_decay", &C::ema_decay),
      enum_key("posterior.kind", &C::posterior, [](PosteriorKind k) { return to_string(k); },
               posterior_kind_from_string),
      size_key("posterior.members", &C::ensemble_members),
      real_key("laplace.prior_precision", &C::laplace_prior_precision),
      real_key("laplace.sigma", &C::laplace_sigma),
      real_key("laplace.fraction", &C::laplace_fraction),
      enum_key("sampler.kind", &C::sampler, [](diffusion::SamplerKind k) { return diffusion::to_string(k); },
               diffusion::sampler_kind_from_string),
      int_key("sampler.steps", &C::sampler_steps),
      real_key("sampler.eta", &C::sampler_eta),
      size_key("samples.count", &C::sample_count),
      {"samples.seed", [](const C& c) { return std::to_string(c.samples_seed); },
       [](C& c, const std::string& v) { c.samples_seed = parse_integer<std::uint64_t>("samples.seed", v); }},
      size_key("scoring.replicas", &C::replicas),
      string_key("scoring.sampler", &C::score_sampler),
      int_key("scoring.steps", &C::score_steps),
      real_key("scoring.sigma2", &C::sigma2),
      enum_key("scoring.mode", &C::score_mode, [](uncertainty::ScoreMode m) { return uncertainty::to_string(m); },
               uncertainty::score_mode_from_string),
      enum_key("scoring.features", &C::features, [](uncertainty::FeatureKind k) { return uncertainty::to_string(k); },
               uncertainty::feature_kind_from_string),
      size_key("scoring.feature_dim", &C::feature_dim),
      path_key("scoring.embedding_path", &C::embedding_path),
      bool_key("scoring.include_pretrained", &C::include_pretrained),
      size_key("scoring.batch_size", &C::batch),
      size_list_key("filter.n_grid", &C::n_grid),
      {"filter.scores", [](const C& c) { return join(c.filter_scores); },
       [](C& c, const std::string& v) { c.filter_scores = split_list(v); }},
      size_key("eval.k", &C::k),
  };
  return table;
}

const Key& find_key(const std::string& name) {
  for (const auto& k : keys())
    if (k.name == name) return k;
  throw ConfigError("unknown config key '" + name + "'");
}

}  // namespace

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  find_key(key).put(*this, trim(value));
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::entries() const {
  std::vector<std::pair<std::string, std::string>> out;
  out.emplace_back("config_version", std::to_string(kConfigVersion));
  for (const auto& k : keys()) out.emplace_back(k.name, k.get(*this));
  return out;
}

std::string ExperimentConfig::to_text() const {
  std::string out;
  for (const auto& [k, v] : entries()) out += k + " = " + v + "\n";
  return out;
}

std::string ExperimentConfig::hash() const {
  numeric::Fnv1a h;
  for (const auto& [k, v] : entries()) {
    if (k == "output_dir" || k == "threads") continue;
    h.update(k + "=" + v + "\n");
  }
  return numeric::to_hex(h.digest());
}

ExperimentConfig ExperimentConfig::parse(const std::string& text, const std::string& origin) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::set<std::string> seen;
  bool versioned = false;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    const std::string where = origin + ":" + std::to_string(lineno);
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (!seen.insert(key).second) throw ConfigError(where + ": duplicate key '" + key + "'");
    try {
      if (key == "config_version") {
        if (value != std::to_string(kConfigVersion))
          throw ConfigError("unsupported config_version " + value + " (expected " + std::to_string(kConfigVersion) +
                            ")");
        versioned = true;
      } else {
        cfg.set(key, value);
      }
    } catch (const ConfigError& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
  if (!versioned) throw ConfigError(origin + ": missing config_version");
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

void ExperimentConfig::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << to_text();
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& key, const std::string& msg) { throw ConfigError(key + ": " + msg); };
  if (threads < 1) fail("threads", "must be at least 1");
  if (dataset_source != "modes" && dataset_source != "csv") fail("dataset.source", "must be modes or csv");
  if (dataset_source == "csv" && dataset_path.empty()) fail("dataset.path", "required when dataset.source = csv");
  if (modes_per_side < 1) fail("dataset.modes_per_side", "must be positive");
  if (!(mode_std > 0.0)) fail("dataset.mode_std", "must be positive");
  if (!(mode_span > 0.0)) fail("dataset.span", "must be positive");
  if (!(hallucination_radius >= 1.0)) fail("dataset.hallucination_radius", "must be at least 1");
  if (reference_size <= k) fail("dataset.reference_size", "must exceed eval.k");
  net_config().validate();
  if (schedule_steps < 1) fail("schedule.steps", "must be positive");
  if (epochs < 1) fail("train.epochs", "must be positive");
  if (batch_size < 1) fail("train.batch_size", "must be positive");
  if (!(lr > 0.0)) fail("train.lr", "must be positive");
  if (!(ema_decay >= 0.0 && ema_decay < 1.0)) fail("train.ema_decay", "must lie in [0, 1)");
  const bool flow = objective == diffusion::Objective::flow_velocity;
  if (flow != (sampler == diffusion::SamplerKind::flow_euler))
    fail("sampler.kind", "flow-euler sampling pairs with the flow-velocity objective and only with it");
  if (posterior == PosteriorKind::ensemble && ensemble_members < 1) fail("posterior.members", "must be positive");
  if (posterior == PosteriorKind::ensemble && replicas > ensemble_members)
    fail("scoring.replicas", "exceeds posterior.members");
  if (!(laplace_prior_precision > 0.0)) fail("laplace.prior_precision", "must be positive");
  if (!(laplace_sigma > 0.0)) fail("laplace.sigma", "must be positive");
  if (!(laplace_fraction > 0.0 && laplace_fraction <= 1.0)) fail("laplace.fraction", "must lie in (0, 1]");
  if (sampler_steps < 0) fail("sampler.steps", "must be non-negative");
  if (!flow && sampler_steps > schedule_steps) fail("sampler.steps", "exceeds schedule.steps");
  if (flow && sampler_steps < 1) fail("sampler.steps", "flow-euler needs at least one step");
  if (replicas < 1) fail("scoring.replicas", "must be positive");
  if (score_sampler != "match" && score_sampler != "ddpm" && score_sampler != "ddim" && score_sampler != "flow-euler")
    fail("scoring.sampler", "must be match, ddpm, ddim or flow-euler");
  if (score_steps < 0) fail("scoring.steps", "must be non-negative");
  if (!flow && score_steps > schedule_steps) fail("scoring.steps", "exceeds schedule.steps");
  if (!(sigma2 > 0.0)) fail("scoring.sigma2", "must be positive");
  if (features == uncertainty::FeatureKind::embedding_file && embedding_path.empty())
    fail("scoring.embedding_path", "required for embedding-file features");
  if (features == uncertainty::FeatureKind::random_projection && (feature_dim < 1 || feature_dim > 2))
    fail("scoring.feature_dim", "must lie in 1..data dimension");
  if (batch < 1) fail("scoring.batch_size", "must be positive");
  if (replicas == 1 && score_mode == uncertainty::ScoreMode::entropy)
    fail("scoring.mode", "entropy needs at least two replicas");
  for (auto n : n_grid) {
    if (n < 2 || n > sample_count) fail("filter.n_grid", "entries must lie in 2..samples.count");
    if (n <= k) fail("filter.n_grid", "entries must exceed eval.k");
  }
  if (filter_scores.empty()) fail("filter.scores", "needs at least one score");
  for (const auto& s : filter_scores) {
    std::stringstream ss(s);
    std::string part;
    while (std::getline(ss, part, '+'))
      if (part != "entropy" && part != "realism" && part != "rarity")
        fail("filter.scores", "unknown score '" + part + "'");
  }
  if (k < 1) fail("eval.k", "must be positive");
}

numeric::MlpConfig ExperimentConfig::net_config() const {
  numeric::MlpConfig net;
  net.input_dim = 2;
  net.output_dim = 2;
  net.hidden_dims = hidden;
  net.activation = activation;
  net.time_embed_dim = time_embed_dim;
  net.condition_count = conditional ? mode_count() : 0;
  return net;
}

diffusion::NoiseSchedule ExperimentConfig::schedule() const {
  return diffusion::NoiseSchedule::make(schedule_kind, schedule_steps);
}

diffusion::TrainConfig ExperimentConfig::train_config(std::uint64_t train_seed) const {
  diffusion::TrainConfig t;
  t.epochs = epochs;
  t.batch_size = batch_size;
  t.lr = lr;
  t.ema_decay = ema_decay;
  t.objective = objective;
  t.seed = train_seed;
  return t;
}

namespace {

diffusion::SamplerSpec make_sampler(diffusion::SamplerKind kind, int steps, double eta,
                                    const diffusion::NoiseSchedule& schedule) {
  switch (kind) {
    case diffusion::SamplerKind::ddpm:
      return diffusion::SamplerSpec::ddpm(schedule, steps);
    case diffusion::SamplerKind::ddim:
      return diffusion::SamplerSpec::ddim(schedule, steps ? steps : schedule.steps(), eta);
    case diffusion::SamplerKind::flow_euler:
      return diffusion::SamplerSpec::flow_euler(steps);
  }
  throw ConfigError("unknown sampler kind");
}

}  // namespace

diffusion::SamplerSpec ExperimentConfig::generation_sampler(const diffusion::NoiseSchedule& s) const {
  return make_sampler(sampler, sampler_steps, sampler_eta, s);
}

diffusion::SamplerSpec ExperimentConfig::replica_sampler(const diffusion::NoiseSchedule& s) const {
  const int steps = score_steps ? score_steps : sampler_steps;
  if (score_sampler == "match") return make_sampler(sampler, steps, sampler_eta, s);
  return make_sampler(diffusion::sampler_kind_from_string(score_sampler), steps, sampler_eta, s);
}

uncertainty::ScoringOptions ExperimentConfig::scoring_options(std::uint64_t replica_seed) const {
  uncertainty::ScoringOptions o;
  o.replicas = replicas;
  o.sigma2 = sigma2;
  o.include_pretrained = include_pretrained;
  o.mode = score_mode;
  o.replica_seed = replica_seed;
  o.batch_size = batch;
  o.threads = threads;
  return o;
}

}  // namespace genunc::pipeline
