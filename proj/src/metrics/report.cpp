#include "genunc/metrics/report.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "genunc/error.hpp"
#include "genunc/metrics/frechet.hpp"
#include "genunc/metrics/manifold.hpp"

namespace genunc::metrics {

namespace {

constexpr int kReportVersion = 1;

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_num(const std::string& s, const std::string& where) {
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0') throw IoError("bad number '" + s + "' in " + where);
  return v;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

void MetricReport::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "# metric report\n";
  out << "format_version = " << kReportVersion << "\n";
  out << "label = " << label << "\n";
  out << "n = " << n << "\n";
  out << "fid = " << num(fid) << "\n";
  out << "precision = " << num(precision) << "\n";
  out << "recall = " << num(recall) << "\n";
  out << "hallucination_rate = " << num(hallucination_rate) << "\n";
  out << "[mode_coverage]\nmode,coverage\n";
  for (std::size_t m = 0; m < mode_coverage.size(); ++m) out << m << "," << num(mode_coverage[m]) << "\n";
  out << "[end]\n[samples]\nseed_id,realism,rarity\n";
  for (std::size_t i = 0; i < seed_ids.size(); ++i)
    out << seed_ids[i] << "," << num(realism[i]) << "," << num(rarity[i]) << "\n";
  out << "[end]\n[spearman]\nscore";
  for (const auto& name : spearman.names) out << "," << name;
  out << "\n";
  for (std::size_t i = 0; i < spearman.names.size(); ++i) {
    out << spearman.names[i];
    for (double v : spearman.values[i]) out << "," << num(v);
    out << "\n";
  }
  out << "[end]\n";
  if (!out) throw IoError("failed writing " + path.string());
}

MetricReport MetricReport::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  const std::string where = path.string();
  MetricReport r;
  std::map<std::string, std::string> kv;
  std::map<std::string, std::vector<std::vector<std::string>>> blocks;
  std::string line, section;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[' && line.back() == ']') {
      section = line == "[end]" ? "" : line.substr(1, line.size() - 2);
      if (!section.empty()) {
        blocks[section];
        if (!std::getline(in, line)) throw IoError("truncated block in " + where);
        blocks[section].push_back(split(line));
      }
      continue;
    }
    if (!section.empty()) {
      blocks[section].push_back(split(line));
      continue;
    }
    auto eq = line.find(" = ");
    if (eq == std::string::npos) throw IoError("malformed line '" + line + "' in " + where);
    kv[line.substr(0, eq)] = line.substr(eq + 3);
  }
  auto need = [&](const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw IoError("missing key '" + key + "' in " + where);
    return it->second;
  };
  if (need("format_version") != std::to_string(kReportVersion))
    throw IoError("unsupported report version in " + where);
  r.label = need("label");
  r.n = static_cast<std::size_t>(std::stoull(need("n")));
  r.fid = parse_num(need("fid"), where);
  r.precision = parse_num(need("precision"), where);
  r.recall = parse_num(need("recall"), where);
  r.hallucination_rate = parse_num(need("hallucination_rate"), where);
  for (const char* name : {"mode_coverage", "samples", "spearman"})
    if (!blocks.count(name)) throw IoError(std::string("missing block '") + name + "' in " + where);
  const auto& modes = blocks["mode_coverage"];
  for (std::size_t i = 1; i < modes.size(); ++i) {
    if (modes[i].size() != 2) throw IoError("bad mode_coverage row in " + where);
    r.mode_coverage.push_back(parse_num(modes[i][1], where));
  }
  const auto& samples = blocks["samples"];
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (samples[i].size() != 3) throw IoError("bad samples row in " + where);
    r.seed_ids.push_back(std::stoll(samples[i][0]));
    r.realism.push_back(parse_num(samples[i][1], where));
    r.rarity.push_back(parse_num(samples[i][2], where));
  }
  const auto& sp = blocks["spearman"];
  r.spearman.names.assign(sp[0].begin() + 1, sp[0].end());
  for (std::size_t i = 1; i < sp.size(); ++i) {
    if (sp[i].size() != r.spearman.names.size() + 1) throw IoError("bad spearman row in " + where);
    std::vector<double> row;
    for (std::size_t j = 1; j < sp[i].size(); ++j) row.push_back(parse_num(sp[i][j], where));
    r.spearman.values.push_back(std::move(row));
  }
  return r;
}

MetricReport evaluate_set(const std::string& label, const std::vector<std::int64_t>& seed_ids, const Matrix& samples,
                          const Matrix& reference, const ManifoldIndex& reference_index, const ModeSpec* modes,
                          const EvalOptions& opts) {
  if (static_cast<std::size_t>(samples.rows()) != seed_ids.size())
    throw DimensionError("evaluate_set needs one seed id per sample");
  MetricReport r;
  r.label = label;
  r.n = seed_ids.size();
  r.seed_ids = seed_ids;
  r.fid = frechet_distance(samples, reference);
  auto pr = precision_recall(samples, reference, opts.k, opts.threads);
  r.precision = pr.precision;
  r.recall = pr.recall;
  Vector realism = reference_index.realism_scores(samples, opts.threads);
  Vector rarity = reference_index.rarity_scores(samples, opts.threads);
  r.realism.assign(realism.data(), realism.data() + realism.size());
  r.rarity.assign(rarity.data(), rarity.data() + rarity.size());
  if (modes) {
    auto stats = mode_stats(samples, *modes);
    r.mode_coverage = stats.coverage;
    r.hallucination_rate = stats.hallucination_rate;
  }
  r.spearman = spearman_matrix({"realism", "rarity"}, {r.realism, r.rarity});
  return r;
}

}  // namespace genunc::metrics
