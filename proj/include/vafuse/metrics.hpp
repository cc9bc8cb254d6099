#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vafuse/core.hpp"

namespace vafuse {

// Error metrics pooled over both dimensions plus per-dimension breakdowns.
// Correlations are absent (not zero) when a gold dimension has no variance.
struct EvalReport {
  std::size_t count = 0;
  double mse = 0.0;
  double rmse = 0.0;
  double rmse_v = 0.0;
  double rmse_a = 0.0;
  std::optional<double> rho_v;
  std::optional<double> rho_a;
  std::optional<double> rho_mean;
};

// Sample Pearson correlation. Throws DataError on length mismatch, fewer than
// two points, or zero variance in either argument.
double pearson(std::span<const double> x, std::span<const double> y);

// Overall MSE pools squared errors of both dimensions with equal weight, so
// mse == (rmse_v^2 + rmse_a^2) / 2 and rmse == sqrt(mse).
EvalReport evaluate(const std::vector<VAPair>& preds, const std::vector<VAPair>& gold);

// Report emitted as a JSON document and as a CSV row in table column order
// (MSE, RMSE, RMSE_v, RMSE_a, rho_v, rho_a, rho_mean).
std::string report_to_json(const EvalReport& report);
void write_report_json(const std::string& path, const EvalReport& report);
void write_report_csv(const std::string& path, const EvalReport& report);

}  // namespace vafuse
