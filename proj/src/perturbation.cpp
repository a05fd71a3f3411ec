#include "myopic/perturbation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

namespace myopic::rsp {

RawTable RawTable::from_matrix(std::vector<std::string> columns, Matrix values) {
  if (!values.empty() && values.cols() != columns.size())
    throw std::invalid_argument("RawTable: column count mismatch");
  RawTable t;
  t.columns = std::move(columns);
  t.ids.resize(values.rows());
  for (std::size_t i = 0; i < t.ids.size(); ++i) t.ids[i] = i;
  t.values = std::move(values);
  return t;
}

std::size_t RawTable::index_of(const std::string& field) const {
  auto it = std::find(columns.begin(), columns.end(), field);
  if (it == columns.end()) throw std::invalid_argument("unknown field: " + field);
  return static_cast<std::size_t>(it - columns.begin());
}

bool RawTable::has(const std::string& field) const {
  return std::find(columns.begin(), columns.end(), field) != columns.end();
}

std::string mode_name(Mode m) {
  switch (m) {
    case Mode::additive_std: return "additive_std";
    case Mode::replace_random: return "replace_random";
    case Mode::spoof_fixed: return "spoof_fixed";
    case Mode::translate_position: return "translate_position";
    case Mode::pad_payload: return "pad_payload";
  }
  return "?";
}

Mode mode_from_name(const std::string& name) {
  for (auto m : {Mode::additive_std, Mode::replace_random, Mode::spoof_fixed, Mode::translate_position,
                 Mode::pad_payload})
    if (mode_name(m) == name) return m;
  throw std::invalid_argument("unknown perturbation mode: " + name);
}

void DependencyGraph::validate() const {
  std::set<std::string> derived_seen;
  for (const auto& e : edges) {
    if (!derived_seen.insert(e.derived).second)
      throw std::invalid_argument("dependency graph: field '" + e.derived + "' has more than one recompute rule");
  }
  (void)topological_edges();
}

std::vector<DerivedRule> DependencyGraph::topological_edges() const {
  // Kahn over fields; an edge is ready once its source has no pending producer.
  std::map<std::string, int> pending;  // field -> number of unresolved producers
  for (const auto& e : edges) {
    pending[e.derived] += 1;
    pending.try_emplace(e.source, 0);
  }
  std::vector<DerivedRule> order;
  std::vector<bool> used(edges.size(), false);
  bool progress = true;
  while (order.size() < edges.size() && progress) {
    progress = false;
    for (std::size_t i = 0; i < edges.size(); ++i) {
      if (used[i] || pending[edges[i].source] != 0) continue;
      used[i] = true;
      order.push_back(edges[i]);
      pending[edges[i].derived] -= 1;
      progress = true;
    }
  }
  if (order.size() != edges.size()) throw std::invalid_argument("dependency graph is cyclic");
  return order;
}

std::vector<std::string> DependencyGraph::closure(const std::vector<std::string>& roots) const {
  std::vector<std::string> out;
  std::set<std::string> seen;
  std::vector<std::string> stack(roots.rbegin(), roots.rend());
  while (!stack.empty()) {
    auto f = stack.back();
    stack.pop_back();
    if (!seen.insert(f).second) continue;
    out.push_back(f);
    for (const auto& e : edges)
      if (e.source == f) stack.push_back(e.derived);
  }
  return out;
}

void PerturbationSpec::validate(const std::vector<std::string>& schema) const {
  auto known = [&](const std::string& f) {
    if (std::find(schema.begin(), schema.end(), f) == schema.end())
      throw std::invalid_argument("unknown field: " + f);
  };
  if (target_fields.empty()) throw std::invalid_argument("perturbation spec has no target fields");
  for (const auto& f : target_fields) known(f);
  if (intensity_levels.empty()) throw std::invalid_argument("perturbation spec has no intensity levels");
  for (std::size_t i = 1; i < intensity_levels.size(); ++i)
    if (!(intensity_levels[i] > intensity_levels[i - 1]))
      throw std::invalid_argument("intensity levels must be strictly increasing");
  if (fraction < 0.0 || fraction > 1.0) throw std::invalid_argument("fraction must be in [0,1]");
  for (const auto& c : constraints) {
    known(c.field);
    if (const auto* iv = std::get_if<Interval>(&c.bounds)) {
      if (iv->lo > iv->hi) throw std::invalid_argument("empty bounds for " + c.field);
    } else if (std::get<std::vector<double>>(c.bounds).empty()) {
      throw std::invalid_argument("empty categorical domain for " + c.field);
    }
  }
  for (const auto& e : derived.edges) {
    known(e.source);
    known(e.derived);
    if (e.rule == Recompute::copy_from_donor) {
      if (mode != Mode::replace_random || !donors || !donors->linked.contains(e.derived))
        throw std::invalid_argument("copy_from_donor rule for '" + e.derived + "' needs a linked donor column");
    }
  }
  derived.validate();
  if (mode == Mode::translate_position && target_fields.size() != 2)
    throw std::invalid_argument("translate_position needs exactly two target fields (x, y)");
  if (mode == Mode::replace_random) {
    if (!donors || donors->values.empty()) throw std::invalid_argument("replace_random needs a non-empty donor pool");
    for (const auto& [name, col] : donors->linked)
      if (col.size() != donors->values.size())
        throw std::invalid_argument("linked donor column '" + name + "' has the wrong length");
  }
}

std::vector<std::string> PerturbationSpec::affected_fields() const { return derived.closure(target_fields); }

std::vector<double> intensity_schedule(std::span<const double> multipliers, double std_f) {
  if (std_f < 0.0) throw std::invalid_argument("intensity_schedule: negative std_f");
  for (std::size_t i = 1; i < multipliers.size(); ++i)
    if (!(multipliers[i] > multipliers[i - 1]))
      throw std::invalid_argument("intensity_schedule: multipliers must be strictly increasing");
  std::vector<double> out;
  out.reserve(multipliers.size());
  for (double m : multipliers) out.push_back(m * std_f);
  return out;
}

std::string verdict_name(Verdict::Kind k) {
  switch (k) {
    case Verdict::Kind::ok: return "ok";
    case Verdict::Kind::clamped: return "clamped";
    case Verdict::Kind::rejected: return "rejected";
  }
  return "?";
}

Verdict verify_integrity(std::span<double> values, const std::vector<std::string>& columns,
                         const std::vector<ConstraintRule>& constraints) {
  Verdict out;
  std::vector<std::string> clamped, rejected;
  for (const auto& rule : constraints) {
    auto it = std::find(columns.begin(), columns.end(), rule.field);
    if (it == columns.end()) continue;
    double& v = values[static_cast<std::size_t>(it - columns.begin())];
    double fixed = v;
    bool inside = true;
    if (const auto* iv = std::get_if<Interval>(&rule.bounds)) {
      inside = !std::isnan(v) && v >= iv->lo && v <= iv->hi;
      if (!inside) fixed = std::isnan(v) ? iv->lo : std::clamp(v, iv->lo, iv->hi);
    } else {
      const auto& domain = std::get<std::vector<double>>(rule.bounds);
      inside = std::find(domain.begin(), domain.end(), v) != domain.end();
      if (!inside) {
        fixed = domain.front();
        for (double d : domain)
          if (std::abs(d - v) < std::abs(fixed - v)) fixed = d;
      }
    }
    if (inside) continue;
    if (rule.action == ViolationAction::clamp) {
      v = fixed;
      clamped.push_back(rule.field);
    } else {
      rejected.push_back(rule.field);
    }
  }
  if (!rejected.empty()) {
    out.kind = Verdict::Kind::rejected;
    out.fields = std::move(rejected);
  } else if (!clamped.empty()) {
    out.kind = Verdict::Kind::clamped;
    out.fields = std::move(clamped);
  }
  return out;
}

std::size_t ProvenanceLog::rejected_count() const {
  return static_cast<std::size_t>(std::count_if(entries.begin(), entries.end(), [](const auto& e) {
    return e.verdict.kind == Verdict::Kind::rejected;
  }));
}

std::string ProvenanceLog::to_delimited() const {
  std::ostringstream os;
  os.precision(17);
  os << "record_id,field,old,new,level,verdict\n";
  for (const auto& e : entries) {
    const auto verdict = verdict_name(e.verdict.kind);
    if (e.changes.empty()) {
      os << e.record_id << ",-,,," << e.level << ',' << verdict << '\n';
      continue;
    }
    for (const auto& c : e.changes)
      os << e.record_id << ',' << c.field << ',' << c.old_value << ',' << c.new_value << ',' << e.level << ','
         << verdict << '\n';
  }
  return os.str();
}

namespace {

struct RowOutcome {
  bool touched = false;
  ProvenanceEntry entry;
  std::vector<double> values;
};

/// Resolved column indices so the per-row kernel never throws.
struct Plan {
  std::vector<std::size_t> targets;
  std::vector<double> target_std;
  struct Edge {
    std::size_t source, derived;
    Recompute rule;
    const std::vector<double>* donor_column;
  };
  std::vector<Edge> edges;
  std::vector<char> eligible;
  double level = 0.0;
  std::uint64_t select_seed = 0, draw_seed = 0, donor_seed = 0;
};

void recompute_derived(std::span<double> v, std::span<const double> orig, const Plan& plan,
                       std::optional<std::size_t> donor, std::vector<std::string>& broken,
                       const std::vector<std::string>& columns) {
  std::vector<char> changed(v.size(), 0);
  for (std::size_t c = 0; c < v.size(); ++c) changed[c] = v[c] != orig[c];
  for (const auto& e : plan.edges) {
    if (!changed[e.source]) continue;
    if (e.rule == Recompute::copy_from_donor) {
      if (donor) v[e.derived] = (*e.donor_column)[*donor];
    } else {
      const double src_new = v[e.source];
      if (src_new == 0.0) {
        broken.push_back(columns[e.derived]);
        continue;
      }
      v[e.derived] = v[e.derived] * orig[e.source] / src_new;
    }
    changed[e.derived] = v[e.derived] != orig[e.derived];
  }
}

RowOutcome perturb_row(const RawTable& in, std::size_t r, const PerturbationSpec& spec, const Plan& plan) {
  RowOutcome out;
  const std::size_t id = in.ids[r];
  if (!plan.eligible[r]) return out;
  if (spec.fraction < 1.0 && !(unit_draw(plan.select_seed, id) < spec.fraction)) return out;
  out.touched = true;
  auto orig = in.values.row(r);
  out.values.assign(orig.begin(), orig.end());
  auto& v = out.values;
  std::optional<std::size_t> donor;

  switch (spec.mode) {
    case Mode::additive_std:
      for (std::size_t k = 0; k < plan.targets.size(); ++k) {
        const double delta = plan.level * plan.target_std[k];
        if (delta != 0.0) v[plan.targets[k]] += delta;
      }
      break;
    case Mode::spoof_fixed:
      for (auto t : plan.targets) v[t] = plan.level;
      break;
    case Mode::pad_payload:
      for (std::size_t k = 0; k < plan.targets.size(); ++k) {
        const double u = unit_draw(plan.draw_seed, id * 1009 + k);
        const double pad = std::floor(u * (plan.level + 1.0));
        if (pad > 0.0) v[plan.targets[k]] += pad;
      }
      break;
    case Mode::translate_position: {
      if (plan.level == 0.0) break;
      const double dx = v[plan.targets[0]] - spec.anchor[0];
      const double dy = v[plan.targets[1]] - spec.anchor[1];
      const double d = std::hypot(dx, dy);
      const double ux = d > 0.0 ? dx / d : 1.0;
      const double uy = d > 0.0 ? dy / d : 0.0;
      v[plan.targets[0]] += plan.level * ux;
      v[plan.targets[1]] += plan.level * uy;
      break;
    }
    case Mode::replace_random: {
      const auto& pool = *spec.donors;
      auto di = static_cast<std::size_t>(unit_draw(plan.donor_seed, id) * static_cast<double>(pool.values.size()));
      di = std::min(di, pool.values.size() - 1);
      donor = di;
      v[plan.targets[0]] = pool.values[di];
      break;
    }
  }

  std::vector<std::string> broken;
  recompute_derived(v, orig, plan, donor, broken, in.columns);
  out.entry.verdict = verify_integrity(v, in.columns, spec.constraints);
  if (!broken.empty()) {
    out.entry.verdict.kind = Verdict::Kind::rejected;
    out.entry.verdict.fields.insert(out.entry.verdict.fields.end(), broken.begin(), broken.end());
  }
  out.entry.record_id = id;
  out.entry.level = plan.level;
  for (std::size_t c = 0; c < v.size(); ++c)
    if (v[c] != orig[c]) out.entry.changes.push_back({in.columns[c], orig[c], v[c]});
  return out;
}

}  // namespace

RspResult apply_rsp(const RawTable& records, const PerturbationSpec& spec, std::size_t level_index,
                    std::uint64_t seed, Exec exec) {
  spec.validate(records.columns);
  if (level_index >= spec.intensity_levels.size()) throw std::out_of_range("apply_rsp: level index out of range");

  Plan plan;
  plan.level = spec.intensity_levels[level_index];
  plan.select_seed = derive_seed(seed, "rsp/select");
  plan.draw_seed = derive_seed(seed, "rsp/draw");
  plan.donor_seed = derive_seed(seed, "rsp/donor", level_index);
  for (const auto& f : spec.target_fields) {
    const auto c = records.index_of(f);
    plan.targets.push_back(c);
    if (spec.mode == Mode::additive_std) {
      auto it = spec.std_reference.find(f);
      plan.target_std.push_back(it != spec.std_reference.end() ? it->second
                                                               : population_std(column(records.values, c)));
    } else {
      plan.target_std.push_back(0.0);
    }
  }
  for (const auto& e : spec.derived.topological_edges()) {
    const std::vector<double>* donor_col = nullptr;
    if (e.rule == Recompute::copy_from_donor) donor_col = &spec.donors->linked.at(e.derived);
    plan.edges.push_back({records.index_of(e.source), records.index_of(e.derived), e.rule, donor_col});
  }
  const std::size_t n = records.size();
  plan.eligible.assign(n, spec.subset.empty() ? 1 : 0);
  for (auto r : spec.subset) {
    if (r >= n) throw std::out_of_range("apply_rsp: subset row out of range");
    plan.eligible[r] = 1;
  }

  std::vector<RowOutcome> rows(n);
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(n); ++r)
      rows[static_cast<std::size_t>(r)] = perturb_row(records, static_cast<std::size_t>(r), spec, plan);
  } else {
    for (std::size_t r = 0; r < n; ++r) rows[r] = perturb_row(records, r, spec, plan);
  }

  RspResult result;
  result.records.columns = records.columns;
  result.records.values = Matrix(0, records.columns.size());
  for (std::size_t r = 0; r < n; ++r) {
    auto& ro = rows[r];
    if (ro.touched) {
      const bool rejected = ro.entry.verdict.kind == Verdict::Kind::rejected;
      result.log.entries.push_back(std::move(ro.entry));
      if (rejected) continue;
      result.records.values.append_row(ro.values);
    } else {
      result.records.values.append_row(records.values.row(r));
    }
    result.records.ids.push_back(records.ids[r]);
  }
  return result;
}

RawTable replace_random(const RawTable& records, const std::string& field, const DonorPool& pool,
                        std::size_t count, std::uint64_t seed, const DependencyGraph& graph) {
  if (pool.values.empty()) throw std::invalid_argument("replace_random: empty donor pool");
  if (count > records.size()) throw std::invalid_argument("replace_random: count exceeds record count");
  PerturbationSpec spec;
  spec.target_fields = {field};
  spec.mode = Mode::replace_random;
  spec.intensity_levels = {0.0};
  spec.donors = pool;
  spec.derived = graph;
  auto order = permutation(records.size(), derive_seed(seed, "replace/select"));
  spec.subset.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count));
  if (count == 0) return records;
  return apply_rsp(records, spec, 0, seed, Exec::serial).records;
}

}  // namespace myopic::rsp
