#include "genunc/pipeline/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "genunc/error.hpp"

namespace genunc::pipeline {

namespace fs = std::filesystem;

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

constexpr double kPanel = 320.0;
constexpr double kMargin = 40.0;
const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

std::string fmt(double v, int digits = 2) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<')
      out += "&lt;";
    else if (c == '>')
      out += "&gt;";
    else if (c == '&')
      out += "&amp;";
    else
      out += c;
  }
  return out;
}

class Svg {
 public:
  Svg(double w, double h) {
    os_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(w, 0) << "\" height=\"" << fmt(h, 0)
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  }
  void text(double x, double y, const std::string& s, const std::string& anchor = "middle") {
    os_ << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" text-anchor=\"" << anchor << "\">" << escape(s)
        << "</text>\n";
  }
  void rect(double x, double y, double w, double h, const std::string& fill, const std::string& stroke = "none") {
    os_ << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" width=\"" << fmt(w) << "\" height=\"" << fmt(h)
        << "\" fill=\"" << fill << "\" stroke=\"" << stroke << "\"/>\n";
  }
  void circle(double x, double y, double r, const std::string& fill) {
    os_ << "<circle cx=\"" << fmt(x) << "\" cy=\"" << fmt(y) << "\" r=\"" << fmt(r) << "\" fill=\"" << fill
        << "\" fill-opacity=\"0.4\"/>\n";
  }
  void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& stroke, bool dashed) {
    os_ << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"1.5\""
        << (dashed ? " stroke-dasharray=\"4 3\"" : "") << " points=\"";
    for (const auto& [x, y] : pts) os_ << fmt(x) << "," << fmt(y) << " ";
    os_ << "\"/>\n";
  }
  void save(const fs::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << os_.str() << "</svg>\n";
  }

 private:
  std::ostringstream os_;
};

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void pad() {
    if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
    if (hi - lo < 1e-12) lo -= 0.5, hi += 0.5;
    double m = 0.05 * (hi - lo);
    lo -= m;
    hi += m;
  }
  double map(double v, double a, double b) const { return a + (v - lo) / (hi - lo) * (b - a); }
};

}  // namespace

void write_scatter(const fs::path& svg, const fs::path& csv, const std::vector<ScatterPanel>& panels) {
  if (panels.empty()) throw ConfigError("scatter plot needs at least one panel");
  Range rx, ry;
  for (const auto& p : panels)
    for (Eigen::Index i = 0; i < p.points.rows(); ++i) {
      rx.add(p.points(i, 0));
      ry.add(p.points(i, 1));
    }
  rx.pad();
  ry.pad();

  std::ofstream table(csv, std::ios::trunc);
  if (!table) throw IoError("cannot write " + csv.string());
  table << "panel,x,y\n";
  Svg s(panels.size() * (kPanel + kMargin) + kMargin, kPanel + 2 * kMargin);
  for (std::size_t k = 0; k < panels.size(); ++k) {
    const double x0 = kMargin + k * (kPanel + kMargin);
    const double y0 = kMargin;
    s.rect(x0, y0, kPanel, kPanel, "none", "#888");
    s.text(x0 + kPanel / 2, y0 - 10, panels[k].title + " (" + std::to_string(panels[k].points.rows()) + ")");
    for (Eigen::Index i = 0; i < panels[k].points.rows(); ++i) {
      const double px = panels[k].points(i, 0), py = panels[k].points(i, 1);
      table << k << "," << format_real(px) << "," << format_real(py) << "\n";
      s.circle(rx.map(px, x0, x0 + kPanel), ry.map(py, y0 + kPanel, y0), 1.2, kPalette[k % 8]);
    }
  }
  s.save(svg);
}

void write_curves(const fs::path& svg, const fs::path& csv, const std::vector<CurvePoint>& points) {
  std::ofstream table(csv, std::ios::trunc);
  if (!table) throw IoError("cannot write " + csv.string());
  table << "score,subset,n,fid,precision,recall,hallucination_rate\n";
  for (const auto& p : points)
    table << p.score << "," << p.subset << "," << p.n << "," << format_real(p.fid) << "," << format_real(p.precision)
          << "," << format_real(p.recall) << "," << format_real(p.hallucination_rate) << "\n";

  const std::vector<std::pair<std::string, double CurvePoint::*>> metrics = {
      {"fid", &CurvePoint::fid},
      {"precision", &CurvePoint::precision},
      {"recall", &CurvePoint::recall},
      {"hallucination rate", &CurvePoint::hallucination_rate}};
  std::map<std::pair<std::string, std::string>, std::vector<const CurvePoint*>> lines;
  Range rn;
  for (const auto& p : points) {
    lines[{p.score, p.subset}].push_back(&p);
    rn.add(static_cast<double>(p.n));
  }
  rn.pad();
  for (auto& [_, pts] : lines)
    std::sort(pts.begin(), pts.end(), [](const CurvePoint* a, const CurvePoint* b) { return a->n < b->n; });

  Svg s(metrics.size() * (kPanel + kMargin) + kMargin, kPanel + 2 * kMargin + 16.0 * (lines.size() + 1));
  for (std::size_t k = 0; k < metrics.size(); ++k) {
    const double x0 = kMargin + k * (kPanel + kMargin);
    const double y0 = kMargin;
    Range rv;
    for (const auto& p : points) rv.add(p.*(metrics[k].second));
    rv.pad();
    s.rect(x0, y0, kPanel, kPanel, "none", "#888");
    s.text(x0 + kPanel / 2, y0 - 10, metrics[k].first + " vs n");
    s.text(x0 - 4, y0 + 10, fmt(rv.hi, 3), "end");
    s.text(x0 - 4, y0 + kPanel, fmt(rv.lo, 3), "end");
    std::size_t c = 0;
    for (const auto& [id, pts] : lines) {
      std::vector<std::pair<double, double>> xy;
      for (const auto* p : pts)
        xy.emplace_back(rn.map(static_cast<double>(p->n), x0, x0 + kPanel), rv.map(p->*(metrics[k].second), y0 + kPanel, y0));
      if (xy.size() == 1) s.circle(xy[0].first, xy[0].second, 3, kPalette[c % 8]);
      s.polyline(xy, kPalette[c % 8], id.second == "random");
      ++c;
    }
  }
  std::size_t c = 0;
  for (const auto& [id, _] : lines) {
    const double y = kPanel + 2 * kMargin + 16.0 * c;
    s.rect(kMargin, y - 9, 10, 10, kPalette[c % 8]);
    s.text(kMargin + 16, y, id.first + " / " + id.second, "start");
    ++c;
  }
  s.save(svg);
}

void write_heatmap(const fs::path& svg, const fs::path& csv, const metrics::SpearmanMatrix& m) {
  const std::size_t k = m.names.size();
  std::ofstream table(csv, std::ios::trunc);
  if (!table) throw IoError("cannot write " + csv.string());
  table << "score";
  for (const auto& n : m.names) table << "," << n;
  table << "\n";
  for (std::size_t i = 0; i < k; ++i) {
    table << m.names[i];
    for (double v : m.values[i]) table << "," << format_real(v);
    table << "\n";
  }

  const double cell = 70.0, left = 90.0, top = 40.0;
  Svg s(left + cell * k + kMargin, top + cell * k + kMargin);
  for (std::size_t i = 0; i < k; ++i) {
    s.text(left - 6, top + cell * i + cell / 2 + 4, m.names[i], "end");
    s.text(left + cell * i + cell / 2, top - 8, m.names[i]);
    for (std::size_t j = 0; j < k; ++j) {
      const double v = m.values[i][j];
      std::string fill = "#cccccc";
      if (std::isfinite(v)) {
        const int a = static_cast<int>(std::lround(255 * (1.0 - std::abs(v))));
        char buf[16];
        if (v >= 0)
          std::snprintf(buf, sizeof buf, "#ff%02x%02x", a, a);
        else
          std::snprintf(buf, sizeof buf, "#%02x%02xff", a, a);
        fill = buf;
      }
      s.rect(left + cell * j, top + cell * i, cell, cell, fill, "#ffffff");
      s.text(left + cell * j + cell / 2, top + cell * i + cell / 2 + 4, std::isfinite(v) ? fmt(v) : "n/a");
    }
  }
  s.save(svg);
}

}  // namespace genunc::pipeline
