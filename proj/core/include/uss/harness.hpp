//  Licensed under the Apache License, Version 2.0 (the "License");
//  you may not use this file except in compliance with the License.
//  You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
//  Unless required by applicable law or agreed to in writing, software
//  distributed under the License is distributed on an "AS IS" BASIS,
//  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//  See the License for the specific language governing permissions and
//  limitations under the License.

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "uss/sketch.hpp"
#include "uss/streams.hpp"

namespace uss {

/// Estimators the experiment runner can drive under a common space budget.
/// unbiased_ss and deterministic_ss are the two sketch update modes;
/// priority is an offline priority sample of the true per-item counts;
/// bottom_k and sample_hold are the streaming sampling baselines.
enum class EstimatorKind {
  unbiased_ss,
  deterministic_ss,
  priority,
  bottom_k,
  sample_hold,
};

const char* estimator_kind_name(EstimatorKind kind);

struct EstimatorConfig {
  EstimatorKind kind = EstimatorKind::unbiased_ss;
  std::size_t capacity = 0;
  /// Report label; defaults to "<kind>-<capacity>".
  std::string name;
};

struct QueryPlan {
  enum class Kind { random_subsets, epochs, explicit_sets };
  Kind kind = Kind::random_subsets;
  /// random_subsets: `count` subsets of `size` items drawn uniformly without
  /// replacement from the stream universe, fixed across replicates.
  std::size_t count = 0;
  std::size_t size = 0;
  /// epochs: item groups of equal size by ascending frequency.
  std::size_t k = 10;
  /// explicit_sets: caller-provided item lists.
  std::vector<std::vector<ItemId>> sets;
};

struct StreamConfig {
  bool use_weibull = true;
  double shape = 1.0;
  double scale = 1.0;
  std::size_t grid = 1000;
  std::vector<std::uint64_t> explicit_counts;
  /// When nonzero, counts are rescaled so they sum to about this.
  std::uint64_t rescale_total = 0;
  Ordering ordering = Ordering::shuffled;
  /// Redraw the arrival order on every replicate (shuffled and two_halves
  /// orderings only). When false all replicates replay one fixed order.
  bool reshuffle_per_replicate = true;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::uint64_t replicates = 1;
  unsigned threads = 1;
  /// Track per-item sketch membership frequencies across replicates.
  bool inclusion = false;
  /// Confidence level for sketch interval estimates.
  double level = 0.95;
  StreamConfig stream;
  std::vector<EstimatorConfig> estimators;
  QueryPlan queries;
};

/// Parses the JSON mirror of ExperimentConfig. Unknown or ill-typed fields
/// and unsatisfiable settings raise std::runtime_error naming the field.
ExperimentConfig parse_experiment_config(const std::string& json_text);

/// Tag joined with the config seed for the canonical stream emission, shared
/// by the experiment runner and the stream dumper so a dumped stream is the
/// one a run with the same config would feed.
inline constexpr std::uint64_t kStreamSeedTag = 0xFFFF;

/// Ground-truth counts described by the config (rescaled when requested),
/// before any ordering-specific universe extension.
GroundTruth base_truth_from_config(const StreamConfig& stream);

/// Stream spec for one emission of the configured stream.
StreamSpec stream_spec_from_config(const ExperimentConfig& config,
                                   std::uint64_t stream_seed);

struct QueryReportRow {
  std::string query_id;
  double true_count = 0.0;
  std::string estimator;
  double mean_estimate = 0.0;
  /// Root mean squared error over replicates divided by the true count;
  /// absolute (undivided) when true_count is zero, flagged below.
  double rrmse = 0.0;
  bool absolute_rmse = false;
  /// Mean variance estimate and CI coverage; meaningful only when has_interval.
  double mean_var_est = 0.0;
  double emp_variance = 0.0;
  double coverage = 0.0;
  bool has_interval = false;
};

struct InclusionRow {
  ItemId item = 0;
  std::uint64_t true_count = 0;
  /// Fraction of replicates whose final sketch held the item.
  double incl_freq = 0.0;
  /// min(1, alpha * n_i) with alpha solved so the saturated inclusion
  /// probabilities sum to the sketch capacity.
  double pps_ref = 0.0;
};

struct EstimatorInfo {
  std::string name;
  EstimatorKind kind;
  /// Space budget: bins for sketches, sample size for the baselines.
  std::size_t space = 0;
};

struct EvalReport {
  std::uint64_t replicates = 0;
  double level = 0.95;
  std::vector<EstimatorInfo> estimators;
  /// Query-major, estimator order within each query.
  std::vector<QueryReportRow> rows;
  /// Estimator name -> per-item rows, sketch estimators only.
  std::map<std::string, std::vector<InclusionRow>> inclusion;
};

/// Runs every replicate (in parallel when config.threads > 1), feeds every
/// estimator, evaluates every query and aggregates. Output is a pure
/// function of the config: thread count and scheduling cannot change it.
EvalReport run_experiment(const ExperimentConfig& config);

enum class ReportFormat { csv, json };

std::string report_csv_text(const EvalReport& report);
std::string inclusion_csv_text(const std::vector<InclusionRow>& rows);
std::string report_to_json(const EvalReport& report);

/// CSV: writes the main table to `path` and, when inclusion data is present,
/// one inclusion_<estimator>.csv per estimator next to it. JSON: one file.
/// IO failures raise std::runtime_error naming the path.
void write_report(const EvalReport& report, ReportFormat format,
                  const std::string& path);

/// Bidirectional string key <-> dense ItemId table for CSV ingestion.
/// Ids start at 1 and follow first-appearance order.
class StringInterner {
 public:
  ItemId intern(std::string_view key);
  /// Empty string for unknown ids.
  const std::string& name(ItemId id) const;
  std::size_t size() const { return names_.size(); }

 private:
  std::unordered_map<std::string, ItemId> ids_;
  std::vector<std::string> names_;
  std::string empty_;
};

/// Joins composite CSV keys; U+241F (symbol for unit separator) is unlikely
/// to appear in real column values.
inline constexpr const char* kKeySeparator = "\xE2\x90\x9F";

/// Streams (item, weight) rows out of a CSV file in file order. Key columns
/// are joined with kKeySeparator and interned. An empty weight_column means
/// unit weights. Returns the number of data rows. Missing columns raise
/// std::runtime_error naming the column; bad weights name the line number.
std::uint64_t ingest_csv(const std::string& path,
                         const std::vector<std::string>& key_columns,
                         const std::string& weight_column,
                         StringInterner& interner,
                         const std::function<void(ItemId, double)>& sink);

}  // namespace uss
