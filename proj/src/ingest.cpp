#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "myopic/scenarios.hpp"

namespace myopic::scenarios {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, ',')) {
    const auto b = cur.find_first_not_of(" \t\r");
    const auto e = cur.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : cur.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool parse_number(const std::string& s, double& v) {
  if (s.empty()) return false;
  const char* end = s.data() + s.size();
  auto r = std::from_chars(s.data(), end, v);
  return r.ec == std::errc() && r.ptr == end && std::isfinite(v);
}

/// Header-indexed delimited file. Rows with the wrong field count are
/// skipped and logged here; value-level checks are left to the adapter.
struct Delimited {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;

  std::size_t col(const std::string& name) const {
    auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? header.size() : static_cast<std::size_t>(it - header.begin());
  }
  bool has(const std::string& name) const { return col(name) < header.size(); }
};

Delimited read_delimited(const std::string& path, IngestLog& log) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open dataset file " + path);
  Delimited d;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_fields(line);
    if (d.header.empty()) {
      d.header = std::move(fields);
      continue;
    }
    if (fields.size() != d.header.size()) {
      ++log.skipped;
      log.messages.push_back("line " + std::to_string(n) + ": expected " + std::to_string(d.header.size()) +
                             " fields, got " + std::to_string(fields.size()));
      continue;
    }
    d.rows.push_back(std::move(fields));
    d.line_numbers.push_back(n);
  }
  if (d.header.empty()) throw std::invalid_argument("dataset file " + path + " has no header");
  return d;
}

void require_columns(const Delimited& d, const std::vector<std::string>& cols, const std::string& what) {
  std::vector<std::string> missing;
  for (const auto& c : cols)
    if (!d.has(c)) missing.push_back(c);
  if (missing.empty()) return;
  std::string msg = what + " column(s) missing:";
  for (const auto& m : missing) msg += " " + m;
  throw std::invalid_argument(msg);
}

/// Numeric matrix of `cols`; rows with any missing or non-numeric value are
/// skipped. `label` (when non-empty) is parsed by `parse_label`, which
/// returns false for unusable labels.
template <typename LabelFn>
std::pair<Matrix, std::vector<double>> numeric_rows(const Delimited& d, const std::vector<std::string>& cols,
                                                    const std::string& label, LabelFn parse_label, IngestLog& log) {
  Matrix m(0, cols.size());
  std::vector<double> y;
  std::vector<std::size_t> idx;
  for (const auto& c : cols) idx.push_back(d.col(c));
  const std::size_t li = d.col(label);
  std::vector<double> row(cols.size());
  for (std::size_t r = 0; r < d.rows.size(); ++r) {
    bool ok = true;
    std::string bad;
    for (std::size_t k = 0; k < cols.size() && ok; ++k)
      if (!parse_number(d.rows[r][idx[k]], row[k])) {
        ok = false;
        bad = cols[k];
      }
    double lv = 0.0;
    if (ok && !parse_label(d.rows[r][li], lv)) {
      ok = false;
      bad = label;
    }
    if (!ok) {
      ++log.skipped;
      log.messages.push_back("line " + std::to_string(d.line_numbers[r]) + ": missing or malformed " + bad);
      continue;
    }
    m.append_row(row);
    y.push_back(lv);
  }
  log.rows = m.rows();
  return {std::move(m), std::move(y)};
}

bool same_name(const std::string& a, const std::string& b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) { return std::tolower(x) == std::tolower(y); });
}

}  // namespace

ScenarioData ingest_real_dataset(int scenario, const std::string& path, IngestLog& log) {
  const Delimited d = read_delimited(path, log);
  switch (scenario) {
    case 1: {
      const std::vector<std::string> cols{"timestamp", "src_ip", "src_port", "dst_ip", "dst_port",
                                          "protocol",  "flags",  "payload_len", "tos"};
      require_columns(d, cols, "schema");
      require_columns(d, {"label"}, "ground-truth");
      TrafficCapture cap;
      cap.source = path;
      cap.attackers.clear();
      for (std::size_t r = 0; r < d.rows.size(); ++r) {
        std::string line;
        for (std::size_t k = 0; k < cols.size(); ++k) line += (k ? "," : "") + d.rows[r][d.col(cols[k])];
        flow::PacketRecord p;
        try {
          p = flow::parse_line(line);
        } catch (const std::exception& e) {
          ++log.skipped;
          log.messages.push_back("line " + std::to_string(d.line_numbers[r]) + ": " + e.what());
          continue;
        }
        const auto& lab = d.rows[r][d.col("label")];
        if (lab.empty()) {
          ++log.skipped;
          log.messages.push_back("line " + std::to_string(d.line_numbers[r]) + ": missing label");
          continue;
        }
        const bool active = lab == "1" || lab == "active" || lab == "Botnet" || lab == "botnet";
        auto& slot = cap.sessions[session_key(p.protocol, p.src_ip, p.src_port, p.dst_ip, p.dst_port)];
        if (active) slot = flow::Label::active;
        cap.packets.push_back(p);
        if (d.has("attacker") && d.rows[r][d.col("attacker")] == "1" &&
            std::find(cap.attackers.begin(), cap.attackers.end(), p.src_ip) == cap.attackers.end())
          cap.attackers.push_back(p.src_ip);
      }
      log.rows = cap.packets.size();
      return cap;
    }
    case 2: {
      require_columns(d, kCqiFeatures, "schema");
      require_columns(d, {"CQI"}, "ground-truth");
      auto [m, y] = numeric_rows(
          d, kCqiFeatures, "CQI",
          [](const std::string& s, double& v) { return parse_number(s, v) && v >= 0.0 && v <= 15.0; }, log);
      CqiDataset out;
      out.table = rsp::RawTable::from_matrix(kCqiFeatures, std::move(m));
      out.cqi = std::move(y);
      out.source = path;
      return out;
    }
    case 3: {
      require_columns(d, {"trace", "timestamp"}, "schema");
      require_columns(d, {"CQI"}, "ground-truth");
      std::map<std::string, CqiSeries> traces;
      std::map<std::string, bool> broken;
      for (std::size_t r = 0; r < d.rows.size(); ++r) {
        const auto& name = d.rows[r][d.col("trace")];
        double t = 0.0, c = 0.0;
        if (!parse_number(d.rows[r][d.col("timestamp")], t) || !parse_number(d.rows[r][d.col("CQI")], c) || c < 0 ||
            c > 15) {
          broken[name] = true;
          ++log.skipped;
          log.messages.push_back("line " + std::to_string(d.line_numbers[r]) + ": CQI not provided");
          continue;
        }
        auto& s = traces[name];
        s.name = name;
        if (d.has("mobility") && d.rows[r][d.col("mobility")] == "driving") s.mobility = Mobility::driving;
        s.timestamps.push_back(t);
        s.cqi.push_back(c);
      }
      std::vector<CqiSeries> out;
      for (auto& [name, s] : traces) {
        if (broken[name]) {
          log.messages.push_back("trace " + name + " dropped: CQI not provided on every report");
          continue;
        }
        out.push_back(std::move(s));
      }
      log.rows = 0;
      for (const auto& s : out) log.rows += s.cqi.size();
      return out;
    }
    case 4: {
      const auto schema = iq_schema();
      require_columns(d, schema, "schema");
      require_columns(d, {"modulation"}, "ground-truth");
      const bool has_snr = d.has("snr");
      IqDataset out;
      out.schema = schema;
      out.source = path;
      out.x = Matrix(0, schema.size());
      std::vector<double> row(schema.size());
      for (std::size_t r = 0; r < d.rows.size(); ++r) {
        const auto& mod = d.rows[r][d.col("modulation")];
        auto it = std::find(kModulations.begin(), kModulations.end(), mod);
        double snr = 10.0;
        bool ok = it != kModulations.end() && (!has_snr || parse_number(d.rows[r][d.col("snr")], snr));
        for (std::size_t k = 0; k < schema.size() && ok; ++k) ok = parse_number(d.rows[r][d.col(schema[k])], row[k]);
        if (!ok) {
          ++log.skipped;
          log.messages.push_back("line " + std::to_string(d.line_numbers[r]) + ": malformed signal or modulation");
          continue;
        }
        if (snr != 10.0) continue;
        out.x.append_row(row);
        out.labels.push_back(static_cast<int>(it - kModulations.begin()));
        out.snr.push_back(snr);
      }
      log.rows = out.x.rows();
      return out;
    }
    case 5: {
      std::vector<std::string> cols;
      for (int k = 0; k < 20; ++k) cols.push_back("x" + std::to_string(k));
      for (int k = 0; k < 20; ++k) cols.push_back("y" + std::to_string(k));
      std::vector<std::string> targets;
      for (int k = 0; k < 20; ++k) targets.push_back("p" + std::to_string(k));
      require_columns(d, cols, "schema");
      require_columns(d, targets, "ground-truth");
      std::vector<std::string> all = cols;
      all.insert(all.end(), targets.begin(), targets.end());
      auto [m, unused] = numeric_rows(
          d, all, cols.front(), [](const std::string&, double& v) { v = 0.0; return true; }, log);
      PowerDataset out;
      out.source = path;
      out.topology = mimo::MimoTopology::grid(0);
      out.x = Matrix(m.rows(), 20);
      out.shares = Matrix(m.rows(), 20);
      std::vector<std::size_t> xy(40);
      std::iota(xy.begin(), xy.end(), std::size_t{0});
      out.positions = m.select_cols(xy);
      std::vector<mimo::Point> pos(20);
      for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t k = 0; k < 20; ++k) pos[k] = {m(r, k), m(r, 20 + k)};
        const auto f = mimo::distance_features(out.topology, pos);
        for (std::size_t k = 0; k < 20; ++k) {
          out.x(r, k) = f[k];
          out.shares(r, k) = m(r, 40 + k) / out.topology.budget;
        }
      }
      return out;
    }
    case 6: {
      require_columns(d, kSliceFeatures, "schema");
      const std::string label = d.has("slice") ? "slice" : "Slice";
      require_columns(d, {label}, "ground-truth");
      // Categorical text is encoded by order of first appearance.
      std::map<std::size_t, std::map<std::string, double>> codes;
      SliceDataset out;
      out.source = path;
      Matrix m(0, kSliceFeatures.size());
      std::vector<double> row(kSliceFeatures.size());
      for (std::size_t r = 0; r < d.rows.size(); ++r) {
        bool ok = true;
        for (std::size_t k = 0; k < kSliceFeatures.size() && ok; ++k) {
          const auto& s = d.rows[r][d.col(kSliceFeatures[k])];
          if (s.empty()) {
            ok = false;
          } else if (!parse_number(s, row[k])) {
            auto& dict = codes[k];
            auto [it, fresh] = dict.try_emplace(s, static_cast<double>(dict.size()));
            row[k] = it->second;
          }
        }
        const auto& ls = d.rows[r][d.col(label)];
        int lab = -1;
        for (std::size_t c = 0; c < kSliceNames.size(); ++c)
          if (same_name(ls, kSliceNames[c]) || ls == std::to_string(c + 1)) lab = static_cast<int>(c);
        if (!ok || lab < 0) {
          ++log.skipped;
          log.messages.push_back("line " + std::to_string(d.line_numbers[r]) + ": missing feature or unknown slice");
          continue;
        }
        m.append_row(row);
        out.labels.push_back(lab);
      }
      out.table = rsp::RawTable::from_matrix(kSliceFeatures, std::move(m));
      log.rows = out.labels.size();
      return out;
    }
  }
  throw std::invalid_argument("unknown scenario " + std::to_string(scenario));
}

namespace {

std::string num(double v) {
  std::ostringstream o;
  o << std::setprecision(17) << v;
  return o.str();
}

void write_row(std::string& out, const std::vector<std::string>& cells) {
  for (std::size_t k = 0; k < cells.size(); ++k) {
    if (k) out += ',';
    out += cells[k];
  }
  out += '\n';
}

void write_table(std::string& out, const rsp::RawTable& t, const std::vector<std::string>& extra_header,
                 const std::function<std::vector<std::string>(std::size_t)>& extra) {
  auto header = t.columns;
  header.insert(header.end(), extra_header.begin(), extra_header.end());
  write_row(out, header);
  for (std::size_t r = 0; r < t.size(); ++r) {
    std::vector<std::string> cells;
    for (double v : t.values.row(r)) cells.push_back(num(v));
    for (auto& c : extra(r)) cells.push_back(std::move(c));
    write_row(out, cells);
  }
}

}  // namespace

std::string export_dataset(const ScenarioData& data) {
  std::string out;
  if (const auto* cap = std::get_if<TrafficCapture>(&data)) {
    write_row(out, {"timestamp", "src_ip", "src_port", "dst_ip", "dst_port", "protocol", "flags", "payload_len", "tos",
                    "label", "attacker"});
    const std::set<std::string> attackers(cap->attackers.begin(), cap->attackers.end());
    for (const auto& p : cap->packets) {
      auto it = cap->sessions.find(session_key(p.protocol, p.src_ip, p.src_port, p.dst_ip, p.dst_port));
      const bool active = it != cap->sessions.end() && it->second == flow::Label::active;
      out += flow::to_line(p) + (active ? ",1," : ",0,") + (attackers.count(p.src_ip) ? "1" : "0") + '\n';
    }
  } else if (const auto* cqi = std::get_if<CqiDataset>(&data)) {
    write_table(out, cqi->table, {"CQI"}, [&](std::size_t r) { return std::vector<std::string>{num(cqi->cqi[r])}; });
  } else if (const auto* series = std::get_if<std::vector<CqiSeries>>(&data)) {
    write_row(out, {"trace", "timestamp", "CQI", "mobility"});
    for (const auto& s : *series)
      for (std::size_t i = 0; i < s.cqi.size(); ++i)
        write_row(out, {s.name, num(s.timestamps[i]), num(s.cqi[i]), mobility_name(s.mobility)});
  } else if (const auto* iq = std::get_if<IqDataset>(&data)) {
    auto header = iq->schema;
    header.push_back("modulation");
    header.push_back("snr");
    write_row(out, header);
    for (std::size_t r = 0; r < iq->x.rows(); ++r) {
      std::vector<std::string> cells;
      for (double v : iq->x.row(r)) cells.push_back(num(v));
      cells.push_back(kModulations[static_cast<std::size_t>(iq->labels[r])]);
      cells.push_back(num(iq->snr.empty() ? 10.0 : iq->snr[r]));
      write_row(out, cells);
    }
  } else if (const auto* pw = std::get_if<PowerDataset>(&data)) {
    if (pw->positions.rows() != pw->x.rows()) throw std::invalid_argument("export_dataset: layouts lack positions");
    std::vector<std::string> header;
    for (const char* prefix : {"x", "y", "p"})
      for (int k = 0; k < 20; ++k) header.push_back(prefix + std::to_string(k));
    write_row(out, header);
    for (std::size_t r = 0; r < pw->x.rows(); ++r) {
      std::vector<std::string> cells;
      for (double v : pw->positions.row(r)) cells.push_back(num(v));
      for (double v : pw->shares.row(r)) cells.push_back(num(v * pw->topology.budget));
      write_row(out, cells);
    }
  } else if (const auto* sl = std::get_if<SliceDataset>(&data)) {
    write_table(out, sl->table, {"slice"}, [&](std::size_t r) {
      return std::vector<std::string>{kSliceNames[static_cast<std::size_t>(sl->labels[r])]};
    });
  }
  return out;
}

}  // namespace myopic::scenarios
