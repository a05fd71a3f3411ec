#pragma once

#include <map>
#include <string>
#include <vector>

#include "myopic/attack.hpp"
#include "myopic/serialize.hpp"
#include "myopic/threat_model.hpp"

namespace myopic::report {

struct MetricRow {
  std::string scenario;
  std::string name;
  double value = 0.0;
};

struct TradeoffRow {
  std::string scenario;
  std::string scope;
  std::string defense;
  threat::TradeoffReport result;
};

/// One row of a figure data file.
struct PlotRow {
  std::string figure;  // fig4, fig5, fig7, fig8a, fig9, fig10
  std::string series;
  double x = 0.0;
  double mean = 0.0;
  double std = 0.0;
};

inline const std::vector<std::string> kFigures{"fig4", "fig5", "fig7", "fig8a", "fig9", "fig10"};

struct ExperimentReport {
  std::string fingerprint;
  std::vector<MetricRow> metrics;      // baseline metrics and counters
  std::vector<MetricRow> references;   // published values carried for comparison
  std::vector<attack::DegradationCurve> curves;
  std::vector<TradeoffRow> tradeoffs;
  std::vector<PlotRow> plots;
  std::vector<std::string> provenance;
  std::vector<std::pair<std::string, double>> timings;  // seconds

  void add_metric(const std::string& scenario, const std::string& name, double value);
  /// Throws std::out_of_range when absent.
  double metric(const std::string& scenario, const std::string& name) const;
  bool has_metric(const std::string& scenario, const std::string& name) const;
  void add_curve(attack::DegradationCurve c, const std::string& figure = "", const std::string& series = "");
  /// Appends every section of `other` (append-only).
  void append(const ExperimentReport& other);

  Json to_json() const;
  std::string metrics_delimited() const;    // scenario,name,value
  std::string curves_delimited() const;     // DegradationCurve rows
  std::string tradeoffs_delimited() const;  // scenario,scope,defense,metric,p_base,p_hardened,tradeoff
};

/// Inverse of ExperimentReport::to_json.
ExperimentReport report_from_json(const Json& j);

/// Figure name -> delimited content with columns series,x,mean,std, in
/// insertion order. Every figure in kFigures is present, header-only when empty.
std::map<std::string, std::string> emit_plot_data(const ExperimentReport& report);

/// Writes `content` prefixed by "# fingerprint: <fp>\n" via a temporary file
/// and rename.
void write_artifact(const std::string& path, const std::string& content, const std::string& fingerprint);

}  // namespace myopic::report
