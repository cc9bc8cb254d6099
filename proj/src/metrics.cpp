#include "vafuse/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

namespace vafuse {

namespace {

struct Moments {
  double mean_x = 0.0;
  double mean_y = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  double sxy = 0.0;
};

Moments central_moments(std::span<const double> x, std::span<const double> y) {
  Moments m;
  const double n = static_cast<double>(x.size());
  for (double v : x) m.mean_x += v;
  for (double v : y) m.mean_y += v;
  m.mean_x /= n;
  m.mean_y /= n;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - m.mean_x;
    const double dy = y[i] - m.mean_y;
    m.sxx += dx * dx;
    m.syy += dy * dy;
    m.sxy += dx * dy;
  }
  return m;
}

std::optional<double> pearson_opt(std::span<const double> x, std::span<const double> y) {
  const Moments m = central_moments(x, y);
  if (m.sxx <= 0.0 || m.syy <= 0.0) return std::nullopt;
  return m.sxy / std::sqrt(m.sxx * m.syy);
}

}  // namespace

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw DataError("pearson: length mismatch (" + std::to_string(x.size()) + " vs " +
                    std::to_string(y.size()) + ")");
  }
  if (x.size() < 2) throw DataError("pearson: need at least 2 points");
  const auto rho = pearson_opt(x, y);
  if (!rho) throw DataError("pearson: zero variance");
  return *rho;
}

EvalReport evaluate(const std::vector<VAPair>& preds, const std::vector<VAPair>& gold) {
  if (preds.size() != gold.size()) {
    throw DataError("evaluate: prediction/gold size mismatch (" + std::to_string(preds.size()) +
                    " vs " + std::to_string(gold.size()) + ")");
  }
  const std::size_t n = preds.size();
  if (n < 2) throw DataError("evaluate: need at least 2 aligned pairs");

  double sse_v = 0.0;
  double sse_a = 0.0;
  std::vector<double> pv(n), pa(n), gv(n), ga(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double ev = preds[i].valence - gold[i].valence;
    const double ea = preds[i].arousal - gold[i].arousal;
    sse_v += ev * ev;
    sse_a += ea * ea;
    pv[i] = preds[i].valence;
    pa[i] = preds[i].arousal;
    gv[i] = gold[i].valence;
    ga[i] = gold[i].arousal;
  }

  EvalReport report;
  report.count = n;
  const double dn = static_cast<double>(n);
  report.rmse_v = std::sqrt(sse_v / dn);
  report.rmse_a = std::sqrt(sse_a / dn);
  report.mse = (sse_v + sse_a) / (2.0 * dn);
  report.rmse = std::sqrt(report.mse);
  report.rho_v = pearson_opt(pv, gv);
  report.rho_a = pearson_opt(pa, ga);
  if (report.rho_v && report.rho_a) {
    report.rho_mean = (*report.rho_v + *report.rho_a) / 2.0;
  }
  return report;
}

std::string report_to_json(const EvalReport& report) {
  nlohmann::json obj;
  obj["count"] = report.count;
  obj["mse"] = report.mse;
  obj["rmse"] = report.rmse;
  obj["rmse_v"] = report.rmse_v;
  obj["rmse_a"] = report.rmse_a;
  obj["rho_v"] = report.rho_v ? nlohmann::json(*report.rho_v) : nlohmann::json(nullptr);
  obj["rho_a"] = report.rho_a ? nlohmann::json(*report.rho_a) : nlohmann::json(nullptr);
  obj["rho_mean"] = report.rho_mean ? nlohmann::json(*report.rho_mean) : nlohmann::json(nullptr);
  return obj.dump(2);
}

void write_report_json(const std::string& path, const EvalReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out << report_to_json(report) << '\n';
  if (!out) throw DataError("write failed for '" + path + "'");
}

namespace {

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

std::string opt4(const std::optional<double>& v) { return v ? fixed4(*v) : std::string("NA"); }

}  // namespace

void write_report_csv(const std::string& path, const EvalReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out << "MSE,RMSE,RMSE_v,RMSE_a,rho_v,rho_a,rho_mean\n";
  out << fixed4(report.mse) << ',' << fixed4(report.rmse) << ',' << fixed4(report.rmse_v) << ','
      << fixed4(report.rmse_a) << ',' << opt4(report.rho_v) << ',' << opt4(report.rho_a) << ','
      << opt4(report.rho_mean) << '\n';
  if (!out) throw DataError("write failed for '" + path + "'");
}

}  // namespace vafuse
