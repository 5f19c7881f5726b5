#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "genunc/metrics/ranking.hpp"
#include "genunc/numeric/linalg.hpp"

namespace genunc::pipeline {

struct ScatterPanel {
  std::string title;
  numeric::Matrix points;  // n x 2
};

/// Side-by-side scatter panels sharing one coordinate frame.
/// CSV twin: `panel,x,y`.
void write_scatter(const std::filesystem::path& svg, const std::filesystem::path& csv,
                   const std::vector<ScatterPanel>& panels);

struct CurvePoint {
  std::string score;
  std::string subset;  // kept | random
  std::size_t n = 0;
  double fid = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double hallucination_rate = 0.0;
};

/// One panel per metric with a line per (score, subset).
/// CSV twin: `score,subset,n,fid,precision,recall,hallucination_rate`.
void write_curves(const std::filesystem::path& svg, const std::filesystem::path& csv,
                  const std::vector<CurvePoint>& points);

/// CSV twin: `score,<names...>` rows.
void write_heatmap(const std::filesystem::path& svg, const std::filesystem::path& csv,
                   const metrics::SpearmanMatrix& matrix);

std::string format_real(double v);

}  // namespace genunc::pipeline
