#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "myopic/common.hpp"

namespace myopic::rsp {

/// Raw-data records in a named-column layout. `ids` survive perturbation so
/// perturbed rows can always be traced back to their clean twins.
struct RawTable {
  std::vector<std::string> columns;
  Matrix values;
  std::vector<std::size_t> ids;

  static RawTable from_matrix(std::vector<std::string> columns, Matrix values);
  std::size_t size() const { return values.rows(); }
  std::size_t index_of(const std::string& field) const;  // throws std::invalid_argument
  bool has(const std::string& field) const;
};

enum class Mode { additive_std, replace_random, spoof_fixed, translate_position, pad_payload };
std::string mode_name(Mode m);
Mode mode_from_name(const std::string& name);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

enum class ViolationAction { clamp, reject };

struct ConstraintRule {
  std::string field;
  std::variant<Interval, std::vector<double>> bounds;  // closed interval or categorical domain
  ViolationAction action = ViolationAction::reject;
};

enum class Recompute {
  /// derived' = derived * source / source'  (mean inter-arrival over a fixed window)
  inverse_proportional,
  /// derived' = donor's value of the derived field (pairwise donor replacement)
  copy_from_donor,
};

struct DerivedRule {
  std::string source;
  std::string derived;
  Recompute rule = Recompute::inverse_proportional;
};

struct DependencyGraph {
  std::vector<DerivedRule> edges;

  /// Throws std::invalid_argument on a cycle or on a field with two rules.
  void validate() const;
  /// Edges ordered so every source is final before it feeds a derived field.
  std::vector<DerivedRule> topological_edges() const;
  /// Every field reachable from `roots`, roots included.
  std::vector<std::string> closure(const std::vector<std::string>& roots) const;
};

/// Donor values for replace_random; `linked` holds parallel columns copied
/// together with the donor's value.
struct DonorPool {
  std::vector<double> values;
  std::map<std::string, std::vector<double>> linked;
};

struct PerturbationSpec {
  std::vector<std::string> target_fields;
  Mode mode = Mode::additive_std;
  /// additive_std: multipliers of std_f; spoof_fixed: the spoofed value;
  /// pad_payload: maximum pad; translate_position: radial offset;
  /// replace_random: one independent replacement draw per level.
  std::vector<double> intensity_levels;
  std::vector<ConstraintRule> constraints;
  DependencyGraph derived;
  /// Fraction of the eligible records that get perturbed.
  double fraction = 1.0;
  /// Row positions eligible for perturbation; empty means every row.
  std::vector<std::size_t> subset;
  /// Per-field std_f; fields missing here use the population std of the input.
  std::map<std::string, double> std_reference;
  std::optional<DonorPool> donors;
  std::array<double, 2> anchor{0.0, 0.0};

  void validate(const std::vector<std::string>& schema) const;
  /// The fields the spec may change: targets plus their derived closure.
  std::vector<std::string> affected_fields() const;
};

/// multipliers × std_f, order preserved. Throws on negative std_f or
/// non-increasing multipliers.
std::vector<double> intensity_schedule(std::span<const double> multipliers, double std_f);

/// Multipliers used throughout the case studies.
inline const std::vector<double> kDefaultMultipliers{0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0};

struct Verdict {
  enum class Kind { ok, clamped, rejected } kind = Kind::ok;
  std::vector<std::string> fields;
};
std::string verdict_name(Verdict::Kind k);

/// Checks `values` (laid out per `columns`) against every rule; clamp rules
/// are applied in place. Rejected wins over clamped.
Verdict verify_integrity(std::span<double> values, const std::vector<std::string>& columns,
                         const std::vector<ConstraintRule>& constraints);

struct FieldChange {
  std::string field;
  double old_value = 0.0;
  double new_value = 0.0;
};

struct ProvenanceEntry {
  std::size_t record_id = 0;
  std::vector<FieldChange> changes;
  double level = 0.0;
  Verdict verdict;
};

struct ProvenanceLog {
  std::vector<ProvenanceEntry> entries;

  std::size_t rejected_count() const;
  /// Delimited rows: record_id,field,old,new,level,verdict.
  std::string to_delimited() const;
};

struct RspResult {
  RawTable records;  // rejected records removed
  ProvenanceLog log;
};

/// Applies one intensity level of `spec` to `records`. Deterministic under
/// `seed`; the parallel and serial paths produce identical output.
RspResult apply_rsp(const RawTable& records, const PerturbationSpec& spec, std::size_t level_index,
                    std::uint64_t seed, Exec exec = Exec::parallel);

/// Replaces `field` in `count` uniformly chosen records with draws from the
/// pool, copying linked donor columns per `graph` and recomputing the rest.
RawTable replace_random(const RawTable& records, const std::string& field, const DonorPool& pool,
                        std::size_t count, std::uint64_t seed, const DependencyGraph& graph = {});

}  // namespace myopic::rsp
