#include "genunc/pipeline/pipeline.hpp"

#include <chrono>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "genunc/diffusion/dataset.hpp"
#include "genunc/error.hpp"
#include "genunc/metrics/manifold.hpp"
#include "genunc/metrics/modes.hpp"
#include "genunc/metrics/ranking.hpp"
#include "genunc/metrics/report.hpp"
#include "genunc/numeric/container.hpp"
#include "genunc/numeric/hash.hpp"
#include "genunc/pipeline/plot.hpp"
#include "genunc/posterior/ensemble.hpp"
#include "genunc/posterior/posterior.hpp"
#include "genunc/uncertainty/records_io.hpp"

namespace genunc::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Streams of the root generator, one per consumer.
enum Stream : std::uint64_t {
  kTrainData = 1,
  kReferenceData = 2,
  kPretrained = 3,
  kEnsemble = 4,
  kLaplace = 5,
  kBundles = 6,
  kReplicas = 7,
  kFilter = 8,
  kProjection = 9,
};

std::uint64_t stream_seed(std::uint64_t seed, Stream s) { return numeric::Rng(seed).fork(s).next_u64(); }

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

diffusion::Dataset training_view(diffusion::Dataset data, bool conditional) {
  if (!conditional) data.cond.clear();
  return data;
}

std::vector<std::string> split_plus(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, '+')) out.push_back(part);
  return out;
}

metrics::Direction direction_of(const std::string& score) {
  return score == "realism" ? metrics::Direction::higher_is_better : metrics::Direction::lower_is_better;
}

numeric::Matrix rows_for(const numeric::Matrix& samples, const std::unordered_map<std::int64_t, Eigen::Index>& row_of,
                         const std::vector<std::int64_t>& ids) {
  numeric::Matrix out(static_cast<Eigen::Index>(ids.size()), samples.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = samples.row(row_of.at(ids[i]));
  return out;
}

}  // namespace

std::size_t RunManifest::cache_hits() const {
  std::size_t n = 0;
  for (const auto& s : stages) n += s.cache_hit ? 1 : 0;
  return n;
}

double RunManifest::scoring_nfe_per_seed() const {
  return scored_seeds ? static_cast<double>(nfe_scoring) / static_cast<double>(scored_seeds) : 0.0;
}

json RunManifest::to_json() const {
  json stage_list = json::array();
  for (const auto& s : stages) {
    json j{{"name", s.name}, {"key", s.key}, {"cache_hit", s.cache_hit}, {"seconds", s.seconds}, {"status", s.status}};
    if (!s.error.empty()) j["error"] = s.error;
    stage_list.push_back(j);
  }
  return json{{"kind", "run-manifest"},
              {"format_version", 1},
              {"tool_version", tool_version},
              {"config_hash", config_hash},
              {"stages", stage_list},
              {"cache_hits", cache_hits()},
              {"artifacts", artifacts},
              {"nfe", {{"generation", nfe_generation}, {"scoring", nfe_scoring}, {"scored_seeds", scored_seeds}}},
              {"wall_seconds", wall_seconds}};
}

RunManifest RunManifest::from_json(const json& j) {
  if (j.value("kind", "") != "run-manifest") throw IoError("not a run manifest");
  RunManifest m;
  m.config_hash = j.at("config_hash").get<std::string>();
  m.tool_version = j.at("tool_version").get<std::string>();
  for (const auto& s : j.at("stages")) {
    StageRecord r;
    r.name = s.at("name").get<std::string>();
    r.key = s.at("key").get<std::string>();
    r.cache_hit = s.at("cache_hit").get<bool>();
    r.seconds = s.at("seconds").get<double>();
    r.status = s.at("status").get<std::string>();
    r.error = s.value("error", "");
    m.stages.push_back(r);
  }
  m.artifacts = j.at("artifacts").get<std::map<std::string, std::string>>();
  m.nfe_generation = j.at("nfe").at("generation").get<std::uint64_t>();
  m.nfe_scoring = j.at("nfe").at("scoring").get<std::uint64_t>();
  m.scored_seeds = j.at("nfe").at("scored_seeds").get<std::uint64_t>();
  m.wall_seconds = j.at("wall_seconds").get<double>();
  return m;
}

void RunManifest::save(const fs::path& path) const { write_json(path, to_json()); }

RunManifest RunManifest::load(const fs::path& path) {
  try {
    return from_json(read_json(path));
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

Pipeline::Pipeline(ExperimentConfig cfg) : cfg_(std::move(cfg)), dir_(cfg_.output_dir) {
  cfg_.validate();
  manifest_.config_hash = cfg_.hash();

  std::string data_salt;
  if (cfg_.dataset_source == "csv") {
    if (!fs::exists(cfg_.dataset_path)) throw ConfigError("dataset.path: " + cfg_.dataset_path.string() + " not found");
    data_salt = numeric::file_hash(cfg_.dataset_path);
  }
  std::string feature_salt;
  if (cfg_.features == uncertainty::FeatureKind::embedding_file) {
    if (!fs::exists(cfg_.embedding_path))
      throw ConfigError("scoring.embedding_path: " + cfg_.embedding_path.string() + " not found");
    feature_salt = numeric::file_hash(cfg_.embedding_path);
  }
  const std::string post = to_string(cfg_.posterior);
  keys_["dataset"] = stage_key("dataset", "", {"seed", "dataset."}, data_salt);
  keys_["pretrained"] = stage_key("pretrained", keys_["dataset"], {"net.", "schedule.", "train."});
  keys_["ensemble"] = stage_key("ensemble", keys_["pretrained"], {"posterior.members"});
  keys_["laplace"] = stage_key("laplace", keys_["pretrained"], {"laplace."});
  keys_["score"] = stage_key("score", keys_[post], {"posterior.kind", "sampler.", "samples.", "scoring."}, feature_salt);
  keys_["metrics"] = stage_key("metrics", keys_["score"], {"eval."});
  keys_["filter"] = stage_key("filter", keys_["metrics"], {"filter."});
  keys_["eval"] = stage_key("eval", keys_["filter"], {});
  keys_["plots"] = stage_key("plots", keys_["eval"], {});
}

std::string Pipeline::stage_key(const std::string& name, const std::string& upstream,
                                const std::vector<std::string>& prefixes, const std::string& salt) const {
  numeric::Fnv1a h;
  h.update("stage=" + name + "\nupstream=" + upstream + "\nsalt=" + salt + "\n");
  for (const auto& [k, v] : cfg_.entries())
    for (const auto& p : prefixes)
      if (k.rfind(p, 0) == 0) {
        h.update(k + "=" + v + "\n");
        break;
      }
  return numeric::to_hex(h.digest());
}

namespace {

fs::path stage_dir(const fs::path& root, const std::string& name, const std::string& key) {
  return root / (name + "-" + key.substr(0, 12));
}

}  // namespace

json Pipeline::run_stage(const std::string& name, const std::string& key, const std::function<StageOutputs()>& body) {
  if (done_.count(name)) return done_.at(name);
  const fs::path sdir = stage_dir(dir_, name, key);
  const fs::path meta = sdir / "stage.json";
  StageRecord rec;
  rec.name = name;
  rec.key = key;
  const auto t0 = std::chrono::steady_clock::now();
  json extra;
  std::vector<std::string> outputs;

  if (fs::exists(meta)) {
    json j = read_json(meta);
    bool complete = j.value("key", "") == key;
    if (complete)
      for (const auto& o : j.at("outputs"))
        if (!fs::exists(sdir / o.at("path").get<std::string>())) complete = false;
    if (complete) {
      for (const auto& o : j.at("outputs")) {
        const fs::path p = sdir / o.at("path").get<std::string>();
        const std::string expected = o.at("hash").get<std::string>();
        const std::string actual = numeric::file_hash(p);
        if (actual != expected)
          throw HashMismatchError("stage " + name + ": cached " + p.string() + " has hash " + actual +
                                  ", stage record says " + expected);
        outputs.push_back(o.at("path").get<std::string>());
      }
      rec.cache_hit = true;
      extra = j.at("extra");
    }
  }

  if (!rec.cache_hit) {
    fs::create_directories(sdir);
    fs::remove(meta);
    StageOutputs produced;
    try {
      produced = body();
    } catch (const std::exception& e) {
      rec.status = "failed";
      rec.error = e.what();
      rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      manifest_.stages.push_back(rec);
      write_manifest();
      throw;
    }
    json out_list = json::array();
    for (const auto& f : produced.files) {
      const std::string rel = fs::relative(f, sdir).generic_string();
      out_list.push_back({{"path", rel}, {"hash", numeric::file_hash(f)}});
      outputs.push_back(rel);
    }
    extra = produced.extra;
    write_json(meta, {{"stage", name},
                      {"key", key},
                      {"config_hash", manifest_.config_hash},
                      {"outputs", out_list},
                      {"extra", extra}});
  }

  rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  manifest_.stages.push_back(rec);
  for (const auto& o : outputs)
    manifest_.artifacts[name + "/" + o] = fs::relative(sdir / o, dir_).generic_string();
  manifest_.artifacts[name + "/stage.json"] = fs::relative(meta, dir_).generic_string();
  done_[name] = extra;
  return extra;
}

fs::path Pipeline::stage_path(const std::string& name) const { return stage_dir(dir_, name, keys_.at(name)); }

fs::path Pipeline::train_csv() const { return stage_path("dataset") / "train.csv"; }
fs::path Pipeline::reference_csv() const { return stage_path("dataset") / "reference.csv"; }
fs::path Pipeline::pretrained_path() const { return stage_path("pretrained") / "model.ckpt"; }
fs::path Pipeline::ensemble_manifest() const { return stage_path("ensemble") / "ensemble.json"; }
fs::path Pipeline::laplace_path() const { return stage_path("laplace") / "laplace.bin"; }
fs::path Pipeline::records_csv() const { return stage_path("score") / "records.csv"; }
fs::path Pipeline::records_sidecar() const { return stage_path("score") / "records.bin"; }
fs::path Pipeline::entropy_csv() const { return stage_path("score") / "entropy.csv"; }
fs::path Pipeline::filter_path(const std::string& score, std::size_t n) const {
  return stage_path("filter") / (score + "_n" + std::to_string(n) + ".csv");
}
fs::path Pipeline::report_path(const std::string& score, std::size_t n, const std::string& subset) const {
  return stage_path("eval") / (score + "_n" + std::to_string(n) + "_" + subset + ".txt");
}
fs::path Pipeline::plots_dir() const { return stage_path("plots"); }

void Pipeline::gen_dataset() {
  run_stage("dataset", keys_.at("dataset"), [&] {
    diffusion::Dataset train, reference;
    if (cfg_.dataset_source == "modes") {
      auto spec = metrics::ModeSpec::grid(cfg_.modes_per_side, cfg_.mode_span, cfg_.mode_std,
                                          cfg_.hallucination_radius);
      auto rng_train = numeric::Rng(cfg_.seed).fork(kTrainData);
      auto rng_ref = numeric::Rng(cfg_.seed).fork(kReferenceData);
      auto [x, labels] = metrics::sample_modes(spec, cfg_.dataset_size, rng_train);
      train.x = std::move(x);
      train.cond = std::move(labels);
      auto [rx, rlabels] = metrics::sample_modes(spec, cfg_.reference_size, rng_ref);
      reference.x = std::move(rx);
      reference.cond = std::move(rlabels);
    } else {
      auto all = diffusion::read_dataset_csv(cfg_.dataset_path);
      if (all.dim() != 2) throw ConfigError("dataset.path: only 2-D data is supported");
      if (all.size() <= cfg_.reference_size)
        throw ConfigError("dataset.reference_size: the CSV has only " + std::to_string(all.size()) + " rows");
      std::vector<std::size_t> order(all.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      auto rng = numeric::Rng(cfg_.seed).fork(kTrainData);
      rng.shuffle(order);
      std::vector<std::size_t> ref_rows(order.begin(), order.begin() + cfg_.reference_size);
      std::vector<std::size_t> train_rows(order.begin() + cfg_.reference_size, order.end());
      train = all.subset(train_rows);
      reference = all.subset(ref_rows);
    }
    diffusion::write_dataset_csv(train_csv(), train, 2);
    diffusion::write_dataset_csv(reference_csv(), reference, 2);
    return StageOutputs{{train_csv(), reference_csv()}};
  });
}

void Pipeline::train() {
  gen_dataset();
  run_stage("pretrained", keys_.at("pretrained"), [&] {
    auto data = training_view(diffusion::read_dataset_csv(train_csv()), cfg_.conditional);
    const fs::path loss = stage_path("pretrained") / "loss.csv";
    auto result = diffusion::train(cfg_.train_config(stream_seed(cfg_.seed, kPretrained)), cfg_.net_config(),
                                   cfg_.schedule(), data, loss);
    result.checkpoint.save(pretrained_path());
    return StageOutputs{{pretrained_path(), loss}, {{"final_loss", result.loss_trace.back()}}};
  });
  if (cfg_.posterior == PosteriorKind::ensemble) train_members();
}

void Pipeline::train_members() {
  run_stage("ensemble", keys_.at("ensemble"), [&] {
    auto data = training_view(diffusion::read_dataset_csv(train_csv()), cfg_.conditional);
    const fs::path sdir = stage_path("ensemble");
    const std::uint64_t base = stream_seed(cfg_.seed, kEnsemble);
    StageOutputs out;
    std::vector<posterior::EnsembleManifestEntry> entries;
    for (std::size_t i = 0; i < cfg_.ensemble_members; ++i) {
      const std::uint64_t seed = posterior::member_seed(base, i);
      const fs::path ck_path = sdir / ("member_" + std::to_string(i) + ".ckpt");
      const fs::path loss = sdir / ("member_" + std::to_string(i) + "_loss.csv");
      diffusion::TrainResult result;
      try {
        result = diffusion::train(cfg_.train_config(seed), cfg_.net_config(), cfg_.schedule(), data, loss);
      } catch (const NumericError& e) {
        throw NumericError("ensemble member " + std::to_string(i) + ": " + e.what());
      }
      result.checkpoint.save(ck_path);
      entries.push_back({ck_path, seed, result.checkpoint.hash()});
      out.files.push_back(ck_path);
      out.files.push_back(loss);
    }
    posterior::save_ensemble_manifest(ensemble_manifest(), entries);
    out.files.push_back(ensemble_manifest());
    return out;
  });
}

void Pipeline::fit_posterior() {
  train();
  if (cfg_.posterior == PosteriorKind::ensemble) return;
  run_stage("laplace", keys_.at("laplace"), [&] {
    auto ck = diffusion::Checkpoint::load(pretrained_path());
    auto data = training_view(diffusion::read_dataset_csv(train_csv()), cfg_.conditional);
    posterior::LaplaceFitOptions opts;
    opts.fraction = cfg_.laplace_fraction;
    opts.prior_precision = cfg_.laplace_prior_precision;
    opts.sigma = cfg_.laplace_sigma;
    opts.seed = stream_seed(cfg_.seed, kLaplace);
    auto state = posterior::fit_laplace(ck, data, opts);
    state.save(laplace_path());
    return StageOutputs{{laplace_path()}, {{"fit_count", state.fit_count}}};
  });
}

void Pipeline::score() {
  fit_posterior();
  json extra = run_stage("score", keys_.at("score"), [&] {
    auto ck = diffusion::Checkpoint::load(pretrained_path());
    posterior::PosteriorSpec post;
    if (cfg_.posterior == PosteriorKind::ensemble) {
      post = posterior::make_ensemble_posterior(posterior::load_ensemble(ensemble_manifest()));
    } else {
      post = posterior::make_laplace_posterior(ck, posterior::LaplaceState::load(laplace_path(), ck.hash()));
    }
    auto replicas = posterior::draw_replicas(post, cfg_.replicas, stream_seed(cfg_.seed, kReplicas));

    uncertainty::FeatureMap features = uncertainty::FeatureMap::identity(2);
    if (cfg_.features == uncertainty::FeatureKind::random_projection)
      features = uncertainty::FeatureMap::random_projection(2, cfg_.feature_dim, stream_seed(cfg_.seed, kProjection));
    else if (cfg_.features == uncertainty::FeatureKind::embedding_file)
      features = uncertainty::FeatureMap::embedding_file(cfg_.embedding_path);

    const auto generation = cfg_.generation_sampler(ck.schedule);
    const auto replica = cfg_.replica_sampler(ck.schedule);
    const std::uint64_t base = numeric::Rng(cfg_.seed).fork(kBundles).fork(cfg_.samples_seed).next_u64();
    std::vector<diffusion::SeedBundle> bundles;
    std::vector<int> cond;
    bundles.reserve(cfg_.sample_count);
    for (std::size_t i = 0; i < cfg_.sample_count; ++i) {
      bundles.push_back(diffusion::make_seed_bundle(base, static_cast<std::int64_t>(i), 2, generation));
      if (cfg_.conditional) cond.push_back(static_cast<int>(i % cfg_.mode_count()));
    }

    const auto options = cfg_.scoring_options(stream_seed(cfg_.seed, kReplicas));
    uncertainty::UncertaintyScorer scorer(ck, std::move(replicas), generation, replica, std::move(features), options);
    uncertainty::NfeCount nfe;
    auto records = scorer.score(bundles, cond, &nfe);

    const fs::path sdir = stage_path("score");
    uncertainty::write_records_csv(records_csv(), records);
    uncertainty::write_records_sidecar(records_sidecar(), records, {{"config_hash", manifest_.config_hash}});
    uncertainty::ScoreColumn entropy, ranking;
    diffusion::Dataset samples;
    samples.x.resize(static_cast<Eigen::Index>(records.size()), 2);
    for (std::size_t i = 0; i < records.size(); ++i) {
      entropy.seed_ids.push_back(records[i].seed_id);
      entropy.values.push_back(records[i].entropy);
      ranking.seed_ids.push_back(records[i].seed_id);
      ranking.values.push_back(records[i].score);
      samples.x.row(static_cast<Eigen::Index>(i)) = records[i].sample.transpose();
      if (records[i].cond) samples.cond.push_back(*records[i].cond);
    }
    uncertainty::write_scores_csv(entropy_csv(), entropy);
    uncertainty::write_scores_csv(sdir / "uncertainty.csv", ranking);
    diffusion::write_dataset_csv(sdir / "samples.csv", samples, 2);
    return StageOutputs{{records_csv(), records_sidecar(), entropy_csv(), sdir / "uncertainty.csv", sdir / "samples.csv"},
                        {{"nfe_generation", nfe.generation},
                         {"nfe_scoring", nfe.scoring},
                         {"seeds", records.size()},
                         {"mode", uncertainty::to_string(options.resolved_mode())}}};
  });
  manifest_.nfe_generation = extra.at("nfe_generation").get<std::uint64_t>();
  manifest_.nfe_scoring = extra.at("nfe_scoring").get<std::uint64_t>();
  manifest_.scored_seeds = extra.at("seeds").get<std::uint64_t>();
}

namespace {

struct ScoredSamples {
  std::vector<std::int64_t> ids;
  numeric::Matrix x;
  std::unordered_map<std::int64_t, Eigen::Index> row_of;
};

ScoredSamples load_samples(const fs::path& sidecar) {
  auto records = uncertainty::read_records_sidecar(sidecar);
  ScoredSamples s;
  s.x.resize(static_cast<Eigen::Index>(records.size()), records.empty() ? 2 : records[0].sample.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    s.ids.push_back(records[i].seed_id);
    s.x.row(static_cast<Eigen::Index>(i)) = records[i].sample.transpose();
    s.row_of[records[i].seed_id] = static_cast<Eigen::Index>(i);
  }
  return s;
}

void write_spearman_csv(const fs::path& path, const metrics::SpearmanMatrix& m) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "score";
  for (const auto& n : m.names) out << "," << n;
  out << "\n";
  for (std::size_t i = 0; i < m.names.size(); ++i) {
    out << m.names[i];
    for (double v : m.values[i]) out << "," << format_real(v);
    out << "\n";
  }
}

metrics::SpearmanMatrix read_spearman_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  metrics::SpearmanMatrix m;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.empty()) continue;
    if (header) {
      m.names.assign(cells.begin() + 1, cells.end());
      header = false;
      continue;
    }
    std::vector<double> row;
    for (std::size_t j = 1; j < cells.size(); ++j) row.push_back(std::strtod(cells[j].c_str(), nullptr));
    m.values.push_back(row);
  }
  return m;
}

}  // namespace

void Pipeline::sample_metrics() {
  score();
  run_stage("metrics", keys_.at("metrics"), [&] {
    auto samples = load_samples(records_sidecar());
    auto reference = diffusion::read_dataset_csv(reference_csv());
    const fs::path sdir = stage_path("metrics");
    uncertainty::ScoreColumn realism{samples.ids, {}}, rarity{samples.ids, {}};
    if (!samples.ids.empty()) {
      metrics::ManifoldIndex index(reference.x, cfg_.k, cfg_.threads);
      auto r = index.realism_scores(samples.x, cfg_.threads);
      auto q = index.rarity_scores(samples.x, cfg_.threads);
      realism.values.assign(r.data(), r.data() + r.size());
      rarity.values.assign(q.data(), q.data() + q.size());
    }
    uncertainty::write_scores_csv(sdir / "realism.csv", realism);
    uncertainty::write_scores_csv(sdir / "rarity.csv", rarity);
    std::vector<fs::path> files{sdir / "realism.csv", sdir / "rarity.csv"};
    if (samples.ids.size() >= 2) {
      auto entropy = uncertainty::read_scores_csv(stage_path("score") / "uncertainty.csv");
      auto m = metrics::spearman_matrix({"entropy", "realism", "rarity"},
                                        {entropy.values, realism.values, rarity.values});
      write_spearman_csv(sdir / "spearman.csv", m);
      files.push_back(sdir / "spearman.csv");
    }
    return StageOutputs{files};
  });
}

void Pipeline::filter() {
  sample_metrics();
  run_stage("filter", keys_.at("filter"), [&] {
    std::map<std::string, uncertainty::ScoreColumn> columns;
    columns["entropy"] = uncertainty::read_scores_csv(stage_path("score") / "uncertainty.csv");
    columns["realism"] = uncertainty::read_scores_csv(stage_path("metrics") / "realism.csv");
    columns["rarity"] = uncertainty::read_scores_csv(stage_path("metrics") / "rarity.csv");
    const auto& ids = columns["entropy"].seed_ids;
    for (const auto& [name, col] : columns)
      if (col.seed_ids != ids) throw IoError("score columns disagree on seed ids (" + name + ")");

    StageOutputs out;
    for (const auto& score : cfg_.filter_scores) {
      auto parts = split_plus(score);
      std::vector<double> values;
      if (parts.size() == 1) {
        values = columns.at(score).values;
      } else {
        std::vector<std::vector<double>> cols;
        std::vector<metrics::Direction> dirs;
        for (const auto& p : parts) {
          cols.push_back(columns.at(p).values);
          dirs.push_back(direction_of(p));
        }
        auto combined = metrics::combine_ranks(ids, cols, dirs);
        values.assign(combined.rank.begin(), combined.rank.end());
      }
      const auto dir = parts.size() == 1 ? direction_of(score) : metrics::Direction::lower_is_better;
      for (auto n : cfg_.n_grid) {
        auto rng = numeric::Rng(cfg_.seed).fork(kFilter).fork(n);
        auto result = metrics::filter_by_score(ids, values, dir, n, rng);
        const fs::path path = filter_path(score, n);
        std::ofstream f(path, std::ios::trunc);
        if (!f) throw IoError("cannot write " + path.string());
        f << "seed_id,subset\n";
        for (auto id : result.kept) f << id << ",kept\n";
        for (auto id : result.random) f << id << ",random\n";
        f.close();
        out.files.push_back(path);
      }
    }
    return out;
  });
}

void read_filter_file(const fs::path& path, std::vector<std::int64_t>& kept, std::vector<std::int64_t>& random) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "seed_id,subset") throw IoError(path.string() + ": bad header");
  kept.clear();
  random.clear();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto comma = line.find(',');
    if (comma == std::string::npos) throw IoError(path.string() + ": bad row '" + line + "'");
    const std::int64_t id = std::stoll(line.substr(0, comma));
    const std::string subset = line.substr(comma + 1);
    if (subset == "kept")
      kept.push_back(id);
    else if (subset == "random")
      random.push_back(id);
    else
      throw IoError(path.string() + ": unknown subset '" + subset + "'");
  }
}

void Pipeline::eval() {
  filter();
  run_stage("eval", keys_.at("eval"), [&] {
    auto samples = load_samples(records_sidecar());
    if (samples.ids.size() <= cfg_.k) throw ConfigError("samples.count: too few samples to evaluate");
    auto reference = diffusion::read_dataset_csv(reference_csv());
    metrics::ManifoldIndex index(reference.x, cfg_.k, cfg_.threads);
    std::optional<metrics::ModeSpec> modes;
    if (cfg_.dataset_source == "modes")
      modes = metrics::ModeSpec::grid(cfg_.modes_per_side, cfg_.mode_span, cfg_.mode_std, cfg_.hallucination_radius);
    const metrics::ModeSpec* mp = modes ? &*modes : nullptr;
    metrics::EvalOptions opts{cfg_.k, cfg_.threads};
    const fs::path sdir = stage_path("eval");

    StageOutputs out;
    std::vector<CurvePoint> curves;
    auto add_curve = [&](const std::string& score, const std::string& subset, const metrics::MetricReport& r) {
      curves.push_back({score, subset, r.n, r.fid, r.precision, r.recall, r.hallucination_rate});
    };
    auto all = metrics::evaluate_set("all", samples.ids, samples.x, reference.x, index, mp, opts);
    all.save(sdir / "all.txt");
    out.files.push_back(sdir / "all.txt");

    std::map<std::size_t, metrics::MetricReport> random_reports;
    for (const auto& score : cfg_.filter_scores) {
      for (auto n : cfg_.n_grid) {
        std::vector<std::int64_t> kept, random;
        read_filter_file(filter_path(score, n), kept, random);
        auto kept_report = metrics::evaluate_set(score + "_n" + std::to_string(n) + "_kept", kept,
                                                 rows_for(samples.x, samples.row_of, kept), reference.x, index, mp,
                                                 opts);
        if (!random_reports.count(n))
          random_reports[n] = metrics::evaluate_set("", random, rows_for(samples.x, samples.row_of, random),
                                                    reference.x, index, mp, opts);
        auto random_report = random_reports.at(n);
        random_report.label = score + "_n" + std::to_string(n) + "_random";
        kept_report.save(report_path(score, n, "kept"));
        random_report.save(report_path(score, n, "random"));
        out.files.push_back(report_path(score, n, "kept"));
        out.files.push_back(report_path(score, n, "random"));
        add_curve(score, "kept", kept_report);
        add_curve(score, "random", random_report);
      }
    }
    add_curve("all", "all", all);
    std::ofstream summary(sdir / "summary.csv", std::ios::trunc);
    summary << "score,subset,n,fid,precision,recall,hallucination_rate\n";
    for (const auto& c : curves)
      summary << c.score << "," << c.subset << "," << c.n << "," << format_real(c.fid) << ","
              << format_real(c.precision) << "," << format_real(c.recall) << "," << format_real(c.hallucination_rate)
              << "\n";
    summary.close();
    out.files.push_back(sdir / "summary.csv");
    return out;
  });
}

void Pipeline::plot() {
  eval();
  run_stage("plots", keys_.at("plots"), [&] {
    auto samples = load_samples(records_sidecar());
    if (samples.ids.empty()) throw ConfigError("plot: the record set is empty");
    const fs::path sdir = stage_path("plots");
    StageOutputs out;

    auto train = diffusion::read_dataset_csv(train_csv());
    const Eigen::Index shown = std::min<Eigen::Index>(train.x.rows(), samples.x.rows());
    std::vector<ScatterPanel> panels{{"training data", train.x.topRows(shown)}, {"generated", samples.x}};
    if (!cfg_.n_grid.empty()) {
      std::vector<std::int64_t> kept, random;
      read_filter_file(filter_path(cfg_.filter_scores.front(), cfg_.n_grid.front()), kept, random);
      panels.push_back({"filtered by " + cfg_.filter_scores.front() + " (n=" + std::to_string(cfg_.n_grid.front()) +
                            ")",
                        rows_for(samples.x, samples.row_of, kept)});
    }
    write_scatter(sdir / "scatter.svg", sdir / "scatter.csv", panels);
    out.files.insert(out.files.end(), {sdir / "scatter.svg", sdir / "scatter.csv"});

    std::vector<CurvePoint> curves;
    for (const auto& score : cfg_.filter_scores)
      for (auto n : cfg_.n_grid)
        for (const char* subset : {"kept", "random"}) {
          auto r = metrics::MetricReport::load(report_path(score, n, subset));
          curves.push_back({score, subset, r.n, r.fid, r.precision, r.recall, r.hallucination_rate});
        }
    write_curves(sdir / "curves.svg", sdir / "curves.csv", curves);
    out.files.insert(out.files.end(), {sdir / "curves.svg", sdir / "curves.csv"});

    const fs::path spearman = stage_path("metrics") / "spearman.csv";
    if (fs::exists(spearman)) {
      write_heatmap(sdir / "spearman.svg", sdir / "spearman.csv", read_spearman_csv(spearman));
      out.files.insert(out.files.end(), {sdir / "spearman.svg", sdir / "spearman.csv"});
    }
    return out;
  });
}

void Pipeline::run() {
  const auto t0 = std::chrono::steady_clock::now();
  plot();
  manifest_.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest();
}

void Pipeline::write_manifest() const {
  fs::create_directories(dir_);
  manifest_.save(dir_ / "manifest.json");
  cfg_.save(dir_ / "config.txt");
}

}  // namespace genunc::pipeline
