#include "genunc/uncertainty/records_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "genunc/error.hpp"
#include "genunc/numeric/container.hpp"

namespace genunc::uncertainty {

namespace {

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse(const std::string& s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  return std::stod(s);
}

void append(std::vector<double>& dst, const Matrix& m) { dst.insert(dst.end(), m.data(), m.data() + m.size()); }

}  // namespace

void write_records_csv(const std::filesystem::path& path, std::span<const UncertaintyRecord> records) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  f << "seed_id,cond,entropy\n";
  for (const auto& r : records) {
    f << r.seed_id << ',';
    if (r.cond) f << *r.cond;
    f << ',' << fmt(r.entropy) << '\n';
  }
  if (!f) throw IoError("write failed: " + path.string());
}

void write_records_sidecar(const std::filesystem::path& path, std::span<const UncertaintyRecord> records,
                           const nlohmann::json& meta) {
  numeric::Container c;
  c.kind = "records";
  c.meta = meta;
  const Eigen::Index d = records.empty() ? 0 : records.front().sample.size();
  const Eigen::Index M = records.empty() ? 0 : records.front().replicas.rows();
  const Eigen::Index k = records.empty() ? 0 : records.front().features.cols();
  c.meta["count"] = records.size();
  c.meta["dim"] = d;
  c.meta["replicas"] = M;
  c.meta["feature_dim"] = k;
  std::vector<double> ids, conds, samples, replicas, features, entropy, score;
  for (const auto& r : records) {
    if (r.sample.size() != d || r.replicas.rows() != M || r.features.cols() != k)
      throw DimensionError("records: inconsistent record shapes");
    ids.push_back(static_cast<double>(r.seed_id));
    conds.push_back(r.cond ? static_cast<double>(*r.cond) : -1.0);
    samples.insert(samples.end(), r.sample.data(), r.sample.data() + d);
    append(replicas, r.replicas);
    append(features, r.features);
    entropy.push_back(r.entropy);
    score.push_back(r.score);
  }
  c.add("seed_id", std::move(ids));
  c.add("cond", std::move(conds));
  c.add("sample", std::move(samples));
  c.add("replicas", std::move(replicas));
  c.add("features", std::move(features));
  c.add("entropy", std::move(entropy));
  c.add("score", std::move(score));
  c.save(path);
}

std::vector<UncertaintyRecord> read_records_sidecar(const std::filesystem::path& path) {
  auto c = numeric::Container::load(path, "records");
  const auto n = c.meta.at("count").get<std::size_t>();
  const auto d = c.meta.at("dim").get<Eigen::Index>();
  const auto M = c.meta.at("replicas").get<Eigen::Index>();
  const auto k = c.meta.at("feature_dim").get<Eigen::Index>();
  const auto& ids = c.array("seed_id");
  const auto& conds = c.array("cond");
  const auto& samples = c.array("sample");
  const auto& replicas = c.array("replicas");
  const auto& features = c.array("features");
  const auto& entropy = c.array("entropy");
  const auto& score = c.array("score");
  if (ids.size() != n || samples.size() != n * static_cast<std::size_t>(d))
    throw IoError(path.string() + ": record arrays have inconsistent lengths");
  std::vector<UncertaintyRecord> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& r = out[i];
    r.seed_id = static_cast<std::int64_t>(ids[i]);
    if (conds[i] >= 0) r.cond = static_cast<int>(conds[i]);
    r.sample = Eigen::Map<const Vector>(samples.data() + i * d, d);
    r.replicas = Eigen::Map<const Matrix>(replicas.data() + i * M * d, M, d);
    r.features = Eigen::Map<const Matrix>(features.data() + i * (M + 1) * k, M + 1, k);
    r.entropy = entropy[i];
    r.score = score[i];
  }
  return out;
}

void write_scores_csv(const std::filesystem::path& path, const ScoreColumn& scores) {
  if (scores.seed_ids.size() != scores.values.size()) throw DimensionError("scores: id/value length mismatch");
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  f << "seed_id,score\n";
  for (std::size_t i = 0; i < scores.values.size(); ++i) f << scores.seed_ids[i] << ',' << fmt(scores.values[i]) << '\n';
  if (!f) throw IoError("write failed: " + path.string());
}

ScoreColumn read_scores_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read " + path.string());
  std::string line;
  if (!std::getline(f, line) || line != "seed_id,score") throw ConfigError(path.string() + ": expected header seed_id,score");
  ScoreColumn out;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ConfigError(path.string() + ": malformed row '" + line + "'");
    out.seed_ids.push_back(std::stoll(line.substr(0, comma)));
    out.values.push_back(parse(line.substr(comma + 1)));
  }
  return out;
}

}  // namespace genunc::uncertainty
