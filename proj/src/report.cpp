#include "myopic/report.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace myopic::report {

void ExperimentReport::add_metric(const std::string& scenario, const std::string& name, double value) {
  metrics.push_back({scenario, name, value});
}

bool ExperimentReport::has_metric(const std::string& scenario, const std::string& name) const {
  for (const auto& m : metrics)
    if (m.scenario == scenario && m.name == name) return true;
  return false;
}

double ExperimentReport::metric(const std::string& scenario, const std::string& name) const {
  for (auto it = metrics.rbegin(); it != metrics.rend(); ++it)
    if (it->scenario == scenario && it->name == name) return it->value;
  throw std::out_of_range("no metric " + scenario + "/" + name);
}

void ExperimentReport::add_curve(attack::DegradationCurve c, const std::string& figure, const std::string& series) {
  if (!figure.empty())
    for (const auto& p : c.points) plots.push_back({figure, series, p.x, p.mean, p.std});
  curves.push_back(std::move(c));
}

void ExperimentReport::append(const ExperimentReport& o) {
  if (fingerprint.empty()) fingerprint = o.fingerprint;
  metrics.insert(metrics.end(), o.metrics.begin(), o.metrics.end());
  references.insert(references.end(), o.references.begin(), o.references.end());
  curves.insert(curves.end(), o.curves.begin(), o.curves.end());
  tradeoffs.insert(tradeoffs.end(), o.tradeoffs.begin(), o.tradeoffs.end());
  plots.insert(plots.end(), o.plots.begin(), o.plots.end());
  provenance.insert(provenance.end(), o.provenance.begin(), o.provenance.end());
  timings.insert(timings.end(), o.timings.begin(), o.timings.end());
}

namespace {

std::string num(double v) {
  std::ostringstream s;
  s << std::setprecision(10) << v;
  return s.str();
}

}  // namespace

Json ExperimentReport::to_json() const {
  Json j;
  j["fingerprint"] = fingerprint;
  j["metrics"] = Json::array();
  for (const auto& m : metrics) j["metrics"].push_back({{"scenario", m.scenario}, {"name", m.name}, {"value", m.value}});
  j["references"] = Json::array();
  for (const auto& m : references)
    j["references"].push_back({{"scenario", m.scenario}, {"name", m.name}, {"value", m.value}});
  j["curves"] = Json::array();
  for (const auto& c : curves) {
    Json pts = Json::array();
    for (const auto& p : c.points) pts.push_back({{"x", p.x}, {"mean", p.mean}, {"std", p.std}, {"trials", p.trials}});
    j["curves"].push_back({{"fingerprint", fingerprint},
                           {"scenario", c.scenario},
                           {"stage", c.stage},
                           {"scope", c.scope},
                           {"metric", c.metric},
                           {"defense", c.defense},
                           {"points", pts}});
  }
  j["tradeoffs"] = Json::array();
  for (const auto& t : tradeoffs)
    j["tradeoffs"].push_back({{"scenario", t.scenario},
                              {"scope", t.scope},
                              {"defense", t.defense},
                              {"metric", threat::metric_name(t.result.metric)},
                              {"p_base", t.result.p_base},
                              {"p_hardened", t.result.p_hardened},
                              {"tradeoff", t.result.tradeoff}});
  j["plots"] = Json::array();
  for (const auto& p : plots)
    j["plots"].push_back({{"figure", p.figure}, {"series", p.series}, {"x", p.x}, {"mean", p.mean}, {"std", p.std}});
  j["provenance"] = provenance;
  j["timings"] = Json::object();
  for (const auto& [k, v] : timings) j["timings"][k] = v;
  return j;
}

ExperimentReport report_from_json(const Json& j) {
  ExperimentReport r;
  r.fingerprint = j.at("fingerprint").get<std::string>();
  for (const auto& m : j.at("metrics"))
    r.metrics.push_back({m.at("scenario").get<std::string>(), m.at("name").get<std::string>(), m.at("value").get<double>()});
  for (const auto& m : j.at("references"))
    r.references.push_back(
        {m.at("scenario").get<std::string>(), m.at("name").get<std::string>(), m.at("value").get<double>()});
  for (const auto& c : j.at("curves")) {
    attack::DegradationCurve d;
    d.scenario = c.at("scenario").get<std::string>();
    d.stage = c.at("stage").get<std::string>();
    d.scope = c.at("scope").get<std::string>();
    d.metric = c.at("metric").get<std::string>();
    d.defense = c.at("defense").get<std::string>();
    for (const auto& p : c.at("points"))
      d.points.push_back({p.at("x").get<double>(), p.at("mean").get<double>(), p.at("std").get<double>(),
                          p.at("trials").get<int>()});
    r.curves.push_back(std::move(d));
  }
  for (const auto& t : j.at("tradeoffs")) {
    threat::TradeoffReport tr;
    tr.metric = threat::metric_from_name(t.at("metric").get<std::string>());
    tr.p_base = t.at("p_base").get<double>();
    tr.p_hardened = t.at("p_hardened").get<double>();
    tr.tradeoff = t.at("tradeoff").get<double>();
    r.tradeoffs.push_back({t.at("scenario").get<std::string>(), t.at("scope").get<std::string>(),
                           t.at("defense").get<std::string>(), tr});
  }
  if (j.contains("plots"))
    for (const auto& p : j.at("plots"))
      r.plots.push_back({p.at("figure").get<std::string>(), p.at("series").get<std::string>(), p.at("x").get<double>(),
                         p.at("mean").get<double>(), p.at("std").get<double>()});
  r.provenance = j.at("provenance").get<std::vector<std::string>>();
  for (const auto& [k, v] : j.at("timings").items()) r.timings.emplace_back(k, v.get<double>());
  return r;
}

std::string ExperimentReport::metrics_delimited() const {
  std::string out = "scenario,name,value\n";
  for (const auto& m : metrics) out += m.scenario + "," + m.name + "," + num(m.value) + "\n";
  return out;
}

std::string ExperimentReport::curves_delimited() const {
  std::string out = attack::DegradationCurve::header();
  for (const auto& c : curves) out += c.to_delimited();
  return out;
}

std::string ExperimentReport::tradeoffs_delimited() const {
  std::string out = "scenario,scope,defense,metric,p_base,p_hardened,tradeoff\n";
  for (const auto& t : tradeoffs)
    out += t.scenario + "," + t.scope + "," + t.defense + "," + threat::metric_name(t.result.metric) + "," +
           num(t.result.p_base) + "," + num(t.result.p_hardened) + "," + num(t.result.tradeoff) + "\n";
  return out;
}

std::map<std::string, std::string> emit_plot_data(const ExperimentReport& report) {
  std::map<std::string, std::string> files;
  for (const auto& f : kFigures) files[f] = "series,x,mean,std\n";
  for (const auto& p : report.plots) {
    auto it = files.find(p.figure);
    if (it == files.end()) continue;
    it->second += p.series + "," + num(p.x) + "," + num(p.mean) + "," + num(p.std) + "\n";
  }
  return files;
}

void write_artifact(const std::string& path, const std::string& content, const std::string& fingerprint) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << "# fingerprint: " << fingerprint << "\n" << content;
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
}

}  // namespace myopic::report
