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

#include "uss/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "uss/estimation.hpp"
#include "uss/reductions.hpp"
#include "uss/rng.hpp"
#include "uss/sampling.hpp"

namespace uss {
namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Seed derivation tags. Every random decision in a run hangs off the config
// seed through these, so results depend only on the config.
constexpr std::uint64_t kQueryPlanTag = 0xA11CE;
constexpr std::uint64_t kReplicateTagBase = 1000003;

[[noreturn]] void config_error(const std::string& what) {
  throw std::runtime_error("config error: " + what);
}

void check_keys(const json& j, const std::string& path,
                std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* name : allowed) known = known || key == name;
    if (!known) config_error(path + ": unknown field '" + key + "'");
  }
}

const json* find_field(const json& j, const char* name) {
  const auto it = j.find(name);
  return it == j.end() ? nullptr : &*it;
}

const json& require_field(const json& j, const std::string& path, const char* name) {
  const json* f = find_field(j, name);
  if (!f) config_error(path + "." + name + " is required");
  return *f;
}

std::uint64_t as_u64(const json& j, const std::string& path) {
  if (!j.is_number_unsigned()) config_error(path + " must be a non-negative integer");
  return j.get<std::uint64_t>();
}

double as_double(const json& j, const std::string& path) {
  if (!j.is_number()) config_error(path + " must be a number");
  return j.get<double>();
}

bool as_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) config_error(path + " must be true or false");
  return j.get<bool>();
}

std::string as_string(const json& j, const std::string& path) {
  if (!j.is_string()) config_error(path + " must be a string");
  return j.get<std::string>();
}

Ordering ordering_from_name(const std::string& name, const std::string& path) {
  if (name == "shuffled") return Ordering::shuffled;
  if (name == "sorted_ascending") return Ordering::sorted_ascending;
  if (name == "two_halves") return Ordering::two_halves;
  if (name == "adversarial_append") return Ordering::adversarial_append;
  if (name == "all_unique") return Ordering::all_unique;
  config_error(path + ": unknown ordering '" + name + "'");
}

EstimatorKind kind_from_name(const std::string& name, const std::string& path) {
  if (name == "uss") return EstimatorKind::unbiased_ss;
  if (name == "dss") return EstimatorKind::deterministic_ss;
  if (name == "priority") return EstimatorKind::priority;
  if (name == "bottom_k") return EstimatorKind::bottom_k;
  if (name == "sample_hold") return EstimatorKind::sample_hold;
  config_error(path + ": unknown estimator kind '" + name + "'");
}

StreamConfig parse_stream(const json& j) {
  if (!j.is_object()) config_error("stream must be an object");
  check_keys(j, "stream",
             {"counts", "rescale_total", "ordering", "reshuffle_per_replicate"});
  StreamConfig s;
  const json& counts = require_field(j, "stream", "counts");
  if (!counts.is_object() || counts.size() != 1)
    config_error("stream.counts must hold exactly one of 'weibull' or 'explicit'");
  if (const json* w = find_field(counts, "weibull")) {
    check_keys(*w, "stream.counts.weibull", {"shape", "scale", "grid"});
    s.use_weibull = true;
    s.shape = as_double(require_field(*w, "stream.counts.weibull", "shape"),
                        "stream.counts.weibull.shape");
    s.scale = as_double(require_field(*w, "stream.counts.weibull", "scale"),
                        "stream.counts.weibull.scale");
    if (!(s.shape > 0.0) || !(s.scale > 0.0))
      config_error("stream.counts.weibull: shape and scale must be positive");
    s.grid = 1000;
    if (const json* g = find_field(*w, "grid")) {
      s.grid = std::size_t(as_u64(*g, "stream.counts.weibull.grid"));
      if (s.grid < 1) config_error("stream.counts.weibull.grid must be at least 1");
    }
  } else if (const json* e = find_field(counts, "explicit")) {
    if (!e->is_array()) config_error("stream.counts.explicit must be an array");
    s.use_weibull = false;
    s.explicit_counts.reserve(e->size());
    for (const json& c : *e)
      s.explicit_counts.push_back(as_u64(c, "stream.counts.explicit[]"));
  } else {
    config_error("stream.counts must hold exactly one of 'weibull' or 'explicit'");
  }
  if (const json* r = find_field(j, "rescale_total"))
    s.rescale_total = as_u64(*r, "stream.rescale_total");
  if (const json* o = find_field(j, "ordering"))
    s.ordering = ordering_from_name(as_string(*o, "stream.ordering"), "stream.ordering");
  if (const json* f = find_field(j, "reshuffle_per_replicate"))
    s.reshuffle_per_replicate = as_bool(*f, "stream.reshuffle_per_replicate");
  return s;
}

std::vector<EstimatorConfig> parse_estimators(const json& j) {
  if (!j.is_array() || j.empty())
    config_error("estimators must be a non-empty array");
  std::vector<EstimatorConfig> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string path = "estimators[" + std::to_string(i) + "]";
    const json& e = j[i];
    if (!e.is_object()) config_error(path + " must be an object");
    check_keys(e, path, {"kind", "capacity", "name"});
    EstimatorConfig cfg;
    cfg.kind = kind_from_name(as_string(require_field(e, path, "kind"), path + ".kind"),
                              path + ".kind");
    cfg.capacity =
        std::size_t(as_u64(require_field(e, path, "capacity"), path + ".capacity"));
    if (cfg.capacity < 1) config_error(path + ".capacity must be at least 1");
    if (const json* n = find_field(e, "name")) cfg.name = as_string(*n, path + ".name");
    if (cfg.name.empty())
      cfg.name = std::string(estimator_kind_name(cfg.kind)) + "-" +
                 std::to_string(cfg.capacity);
    out.push_back(std::move(cfg));
  }
  for (std::size_t i = 0; i < out.size(); ++i)
    for (std::size_t k = i + 1; k < out.size(); ++k)
      if (out[i].name == out[k].name)
        config_error("estimators: duplicate name '" + out[i].name + "'");
  return out;
}

QueryPlan parse_queries(const json* j) {
  QueryPlan plan;
  plan.kind = QueryPlan::Kind::explicit_sets;
  if (!j) return plan;
  if (!j->is_object() || j->size() != 1)
    config_error(
        "queries must hold exactly one of 'random_subsets', 'epochs' or 'explicit'");
  if (const json* r = find_field(*j, "random_subsets")) {
    check_keys(*r, "queries.random_subsets", {"count", "size"});
    plan.kind = QueryPlan::Kind::random_subsets;
    plan.count = std::size_t(as_u64(require_field(*r, "queries.random_subsets", "count"),
                                    "queries.random_subsets.count"));
    plan.size = std::size_t(as_u64(require_field(*r, "queries.random_subsets", "size"),
                                   "queries.random_subsets.size"));
    if (plan.count > 0 && plan.size < 1)
      config_error("queries.random_subsets.size must be at least 1");
  } else if (const json* e = find_field(*j, "epochs")) {
    check_keys(*e, "queries.epochs", {"k"});
    plan.kind = QueryPlan::Kind::epochs;
    plan.k = 10;
    if (const json* k = find_field(*e, "k")) {
      plan.k = std::size_t(as_u64(*k, "queries.epochs.k"));
      if (plan.k < 1) config_error("queries.epochs.k must be at least 1");
    }
  } else if (const json* x = find_field(*j, "explicit")) {
    if (!x->is_array()) config_error("queries.explicit must be an array of item arrays");
    plan.kind = QueryPlan::Kind::explicit_sets;
    for (std::size_t i = 0; i < x->size(); ++i) {
      const json& set = (*x)[i];
      const std::string path = "queries.explicit[" + std::to_string(i) + "]";
      if (!set.is_array()) config_error(path + " must be an array of item ids");
      std::vector<ItemId> ids;
      ids.reserve(set.size());
      for (const json& id : set) ids.push_back(as_u64(id, path + "[]"));
      plan.sets.push_back(std::move(ids));
    }
  } else {
    config_error(
        "queries must hold exactly one of 'random_subsets', 'epochs' or 'explicit'");
  }
  return plan;
}

struct BuiltQuery {
  std::string id;
  double truth_sum;
  SubsetQuery query;
};

std::vector<BuiltQuery> build_queries(const ExperimentConfig& config,
                                      const GroundTruth& truth) {
  std::vector<std::pair<std::string, std::vector<ItemId>>> sets;
  const QueryPlan& plan = config.queries;
  switch (plan.kind) {
    case QueryPlan::Kind::random_subsets: {
      const std::size_t v = truth.universe();
      if (plan.count > 0 && plan.size > v)
        config_error("queries.random_subsets.size exceeds the stream universe");
      Rng rng(derive_seed(config.seed, kQueryPlanTag));
      std::vector<ItemId> ids(v);
      for (std::size_t i = 0; i < v; ++i) ids[i] = ItemId(i + 1);
      for (std::size_t q = 0; q < plan.count; ++q) {
        for (std::size_t i = 0; i < plan.size; ++i)
          std::swap(ids[i], ids[i + std::size_t(rng.next_below(v - i))]);
        sets.emplace_back("q" + std::to_string(q + 1),
                          std::vector<ItemId>(ids.begin(), ids.begin() + plan.size));
      }
      break;
    }
    case QueryPlan::Kind::epochs: {
      auto groups = epoch_items(truth, plan.k);
      for (std::size_t g = 0; g < groups.size(); ++g)
        sets.emplace_back("epoch" + std::to_string(g + 1), std::move(groups[g]));
      break;
    }
    case QueryPlan::Kind::explicit_sets: {
      for (std::size_t i = 0; i < plan.sets.size(); ++i)
        sets.emplace_back("q" + std::to_string(i + 1), plan.sets[i]);
      break;
    }
  }
  std::vector<BuiltQuery> out;
  out.reserve(sets.size());
  for (auto& [id, items] : sets) {
    double t = 0.0;
    for (ItemId item : items) t += double(truth.count_of(item));
    out.push_back(BuiltQuery{std::move(id), t, SubsetQuery::of_items(std::move(items))});
  }
  return out;
}

/// Compensated accumulator for order-stable aggregation.
struct Acc {
  double sum = 0.0, carry = 0.0;
  void add(double v) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v))
      carry += (sum - t) + v;
    else
      carry += (v - t) + sum;
    sum = t;
  }
  double value() const { return sum + carry; }
};

bool is_sketch_kind(EstimatorKind kind) {
  return kind == EstimatorKind::unbiased_ss || kind == EstimatorKind::deterministic_ss;
}

void fisher_yates(std::vector<ItemId>& rows, std::size_t begin, std::size_t end,
                  Rng& rng) {
  for (std::size_t i = end - begin; i > 1; --i)
    std::swap(rows[begin + i - 1], rows[begin + std::size_t(rng.next_below(i))]);
}

std::string fmt_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fmt_u64(std::uint64_t v) {
  char buf[24];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string safe_file_stem(const std::string& name) {
  std::string out = name;
  for (char& c : out) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '-' || c == '_' || c == '.';
    if (!ok) c = '_';
  }
  return out;
}

std::vector<double> pps_reference(const GroundTruth& truth, std::size_t capacity) {
  std::vector<double> positive;
  for (std::uint64_t c : truth.counts)
    if (c > 0) positive.push_back(double(c));
  std::vector<double> ref(truth.universe(), 0.0);
  if (positive.size() <= capacity) {
    for (std::size_t i = 0; i < truth.counts.size(); ++i)
      if (truth.counts[i] > 0) ref[i] = 1.0;
    return ref;
  }
  const double alpha = solve_pps_alpha(positive, capacity);
  for (std::size_t i = 0; i < truth.counts.size(); ++i)
    if (truth.counts[i] > 0)
      ref[i] = std::min(1.0, alpha * double(truth.counts[i]));
  return ref;
}

}  // namespace

const char* estimator_kind_name(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::unbiased_ss: return "uss";
    case EstimatorKind::deterministic_ss: return "dss";
    case EstimatorKind::priority: return "priority";
    case EstimatorKind::bottom_k: return "bottom_k";
    case EstimatorKind::sample_hold: return "sample_hold";
  }
  return "unknown";
}

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    config_error(std::string("not valid JSON (") + e.what() + ")");
  }
  if (!j.is_object()) config_error("top level must be an object");
  check_keys(j, "config",
             {"seed", "replicates", "threads", "inclusion", "level", "stream",
              "estimators", "queries"});
  ExperimentConfig cfg;
  if (const json* s = find_field(j, "seed")) cfg.seed = as_u64(*s, "seed");
  if (const json* r = find_field(j, "replicates")) {
    cfg.replicates = as_u64(*r, "replicates");
    if (cfg.replicates < 1) config_error("replicates must be at least 1");
  }
  if (const json* t = find_field(j, "threads")) {
    cfg.threads = unsigned(as_u64(*t, "threads"));
    if (cfg.threads < 1) config_error("threads must be at least 1");
  }
  if (const json* i = find_field(j, "inclusion"))
    cfg.inclusion = as_bool(*i, "inclusion");
  if (const json* l = find_field(j, "level")) {
    cfg.level = as_double(*l, "level");
    if (!(cfg.level > 0.0) || !(cfg.level < 1.0))
      config_error("level must be strictly between 0 and 1");
  }
  cfg.stream = parse_stream(require_field(j, "config", "stream"));
  cfg.estimators = parse_estimators(require_field(j, "config", "estimators"));
  cfg.queries = parse_queries(find_field(j, "queries"));
  return cfg;
}

GroundTruth base_truth_from_config(const StreamConfig& stream) {
  GroundTruth truth = stream.use_weibull
                          ? weibull_counts(stream.shape, stream.scale, stream.grid)
                          : explicit_counts(stream.explicit_counts);
  if (stream.rescale_total > 0) truth = scale_to_total(truth, stream.rescale_total);
  return truth;
}

StreamSpec stream_spec_from_config(const ExperimentConfig& config,
                                   std::uint64_t stream_seed) {
  StreamSpec spec;
  spec.base = base_truth_from_config(config.stream);
  spec.ordering = config.stream.ordering;
  spec.seed = stream_seed;
  for (const EstimatorConfig& e : config.estimators)
    if (is_sketch_kind(e.kind))
      spec.adversary_capacity = std::max(spec.adversary_capacity, e.capacity);
  return spec;
}

EvalReport run_experiment(const ExperimentConfig& config) {
  if (config.replicates < 1) config_error("replicates must be at least 1");
  if (config.estimators.empty()) config_error("estimators must be non-empty");
  for (const EstimatorConfig& e : config.estimators)
    if (e.capacity < 1) config_error("estimator capacity must be at least 1");
  if (!(config.level > 0.0) || !(config.level < 1.0))
    config_error("level must be strictly between 0 and 1");

  const StreamSpec spec =
      stream_spec_from_config(config, derive_seed(config.seed, kStreamSeedTag));
  GroundTruth truth;
  std::vector<ItemId> canonical;
  try {
    truth = stream_truth(spec);
    canonical.reserve(truth.total);
    emit(spec, [&](ItemId id) { canonical.push_back(id); });
  } catch (const std::invalid_argument& e) {
    config_error(std::string("stream.ordering: ") + e.what());
  }

  const std::vector<BuiltQuery> queries = build_queries(config, truth);
  const std::size_t e_count = config.estimators.size();
  const std::size_t q_count = queries.size();
  const std::uint64_t reps = config.replicates;

  // True counts for the priority baseline, which samples the aggregated table.
  std::vector<std::pair<ItemId, double>> positives;
  for (std::size_t i = 0; i < truth.counts.size(); ++i)
    if (truth.counts[i] > 0)
      positives.emplace_back(ItemId(i + 1), double(truth.counts[i]));

  // Per-replicate result slots; workers write disjoint ranges and a single
  // ordered fold below aggregates, so thread scheduling cannot leak into the
  // output.
  const std::size_t cells = std::size_t(reps) * e_count * q_count;
  std::vector<double> estimates(cells, kNaN);
  std::vector<double> variances(cells, kNaN);
  std::vector<std::uint8_t> covered(cells, 0);

  std::vector<std::size_t> sketch_slot(e_count, SIZE_MAX);
  std::size_t sketch_count = 0;
  if (config.inclusion)
    for (std::size_t e = 0; e < e_count; ++e)
      if (is_sketch_kind(config.estimators[e].kind)) sketch_slot[e] = sketch_count++;

  const bool reshuffles = config.stream.reshuffle_per_replicate &&
                          (spec.ordering == Ordering::shuffled ||
                           spec.ordering == Ordering::two_halves);
  const std::size_t half = spec.base.total;

  const unsigned workers =
      unsigned(std::min<std::uint64_t>(std::max(1u, config.threads), reps));
  std::vector<std::vector<std::vector<std::uint32_t>>> worker_incl(
      workers, std::vector<std::vector<std::uint32_t>>(
                   sketch_count, std::vector<std::uint32_t>(truth.universe(), 0)));

  std::atomic<std::uint64_t> next_rep{0};
  std::exception_ptr failure;
  std::mutex failure_mx;

  auto worker = [&](unsigned windex) {
    try {
      std::vector<ItemId> scratch;
      for (;;) {
        const std::uint64_t r = next_rep.fetch_add(1, std::memory_order_relaxed);
        if (r >= reps) break;
        const std::uint64_t rep_seed =
            derive_seed(config.seed, kReplicateTagBase + r);
        const std::vector<ItemId>* rows = &canonical;
        if (reshuffles) {
          scratch = canonical;
          Rng shuffle_rng(derive_seed(rep_seed, kStreamSeedTag));
          if (spec.ordering == Ordering::two_halves) {
            fisher_yates(scratch, 0, half, shuffle_rng);
            fisher_yates(scratch, half, scratch.size(), shuffle_rng);
          } else {
            fisher_yates(scratch, 0, scratch.size(), shuffle_rng);
          }
          rows = &scratch;
        }
        for (std::size_t e = 0; e < e_count; ++e) {
          const EstimatorConfig& est = config.estimators[e];
          const std::uint64_t est_seed = derive_seed(rep_seed, e);
          const std::size_t base = (std::size_t(r) * e_count + e) * q_count;
          switch (est.kind) {
            case EstimatorKind::unbiased_ss:
            case EstimatorKind::deterministic_ss: {
              Sketch sketch(est.capacity,
                            est.kind == EstimatorKind::unbiased_ss
                                ? UpdateMode::unbiased
                                : UpdateMode::deterministic,
                            est_seed);
              for (ItemId id : *rows) sketch.update(id);
              for (std::size_t q = 0; q < q_count; ++q) {
                const QueryResult res =
                    subset_sum(sketch, queries[q].query, config.level);
                estimates[base + q] = res.estimate;
                variances[base + q] = res.variance_estimate;
                covered[base + q] = res.ci_low <= queries[q].truth_sum &&
                                    queries[q].truth_sum <= res.ci_high;
              }
              if (sketch_slot[e] != SIZE_MAX) {
                auto& counts = worker_incl[windex][sketch_slot[e]];
                for (const auto& bin : sketch.unordered_bins())
                  if (bin.item >= 1 && bin.item <= counts.size())
                    ++counts[bin.item - 1];
              }
              break;
            }
            case EstimatorKind::priority: {
              const PrioritySample sample =
                  priority_sample(positives, est.capacity, est_seed);
              for (std::size_t q = 0; q < q_count; ++q)
                estimates[base + q] = sample.subset_estimate(queries[q].query);
              break;
            }
            case EstimatorKind::bottom_k: {
              BottomK sketch(est.capacity, est_seed);
              for (ItemId id : *rows) sketch.update(id);
              for (std::size_t q = 0; q < q_count; ++q)
                estimates[base + q] = sketch.subset_estimate(queries[q].query);
              break;
            }
            case EstimatorKind::sample_hold: {
              SampleAndHold sketch(est.capacity, est_seed);
              for (ItemId id : *rows) sketch.update(id);
              for (std::size_t q = 0; q < q_count; ++q)
                estimates[base + q] = sketch.subset_estimate(queries[q].query);
              break;
            }
          }
        }
      }
    } catch (...) {
      const std::lock_guard<std::mutex> lock(failure_mx);
      if (!failure) failure = std::current_exception();
    }
  };

  if (workers == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker, w);
    for (std::thread& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  EvalReport report;
  report.replicates = reps;
  report.level = config.level;
  for (const EstimatorConfig& e : config.estimators)
    report.estimators.push_back(EstimatorInfo{e.name, e.kind, e.capacity});

  for (std::size_t q = 0; q < q_count; ++q) {
    for (std::size_t e = 0; e < e_count; ++e) {
      const bool with_interval = is_sketch_kind(config.estimators[e].kind);
      Acc sum_est, sum_sq, sum_var;
      std::uint64_t hits = 0;
      for (std::uint64_t r = 0; r < reps; ++r) {
        const std::size_t idx = (std::size_t(r) * e_count + e) * q_count + q;
        const double est = estimates[idx];
        sum_est.add(est);
        const double err = est - queries[q].truth_sum;
        sum_sq.add(queries[q].truth_sum > 0.0 ? err * err : est * est);
        if (with_interval) {
          sum_var.add(variances[idx]);
          hits += covered[idx];
        }
      }
      QueryReportRow row;
      row.query_id = queries[q].id;
      row.true_count = queries[q].truth_sum;
      row.estimator = config.estimators[e].name;
      row.mean_estimate = sum_est.value() / double(reps);
      const double rms = std::sqrt(sum_sq.value() / double(reps));
      row.absolute_rmse = !(queries[q].truth_sum > 0.0);
      row.rrmse = row.absolute_rmse ? rms : rms / queries[q].truth_sum;
      row.has_interval = with_interval;
      if (with_interval) {
        row.mean_var_est = sum_var.value() / double(reps);
        row.coverage = double(hits) / double(reps);
      }
      Acc sq_dev;
      for (std::uint64_t r = 0; r < reps; ++r) {
        const std::size_t idx = (std::size_t(r) * e_count + e) * q_count + q;
        const double dev = estimates[idx] - row.mean_estimate;
        sq_dev.add(dev * dev);
      }
      row.emp_variance = reps > 1 ? sq_dev.value() / double(reps - 1) : 0.0;
      report.rows.push_back(std::move(row));
    }
  }

  if (config.inclusion) {
    for (std::size_t e = 0; e < e_count; ++e) {
      if (sketch_slot[e] == SIZE_MAX) continue;
      const std::vector<double> ref =
          pps_reference(truth, config.estimators[e].capacity);
      std::vector<InclusionRow> rows(truth.universe());
      for (std::size_t i = 0; i < truth.universe(); ++i) {
        std::uint64_t present = 0;
        for (unsigned w = 0; w < workers; ++w)
          present += worker_incl[w][sketch_slot[e]][i];
        rows[i] = InclusionRow{ItemId(i + 1), truth.counts[i],
                               double(present) / double(reps), ref[i]};
      }
      report.inclusion.emplace(config.estimators[e].name, std::move(rows));
    }
  }
  return report;
}

std::string report_csv_text(const EvalReport& report) {
  std::string out =
      "query_id,true_count,estimator,mean_estimate,rrmse,mean_var_est,"
      "emp_variance,coverage\n";
  for (const QueryReportRow& row : report.rows) {
    out += csv_escape(row.query_id);
    out += ',';
    out += fmt_double(row.true_count);
    out += ',';
    out += csv_escape(row.estimator);
    out += ',';
    out += fmt_double(row.mean_estimate);
    out += ',';
    out += fmt_double(row.rrmse);
    out += ',';
    if (row.has_interval) out += fmt_double(row.mean_var_est);
    out += ',';
    out += fmt_double(row.emp_variance);
    out += ',';
    if (row.has_interval) out += fmt_double(row.coverage);
    out += '\n';
  }
  return out;
}

std::string inclusion_csv_text(const std::vector<InclusionRow>& rows) {
  std::string out = "item_id,true_count,incl_freq,pps_ref\n";
  for (const InclusionRow& row : rows) {
    out += fmt_u64(row.item);
    out += ',';
    out += fmt_u64(row.true_count);
    out += ',';
    out += fmt_double(row.incl_freq);
    out += ',';
    out += fmt_double(row.pps_ref);
    out += '\n';
  }
  return out;
}

std::string report_to_json(const EvalReport& report) {
  json estimators = json::array();
  for (const EstimatorInfo& e : report.estimators)
    estimators.push_back({{"name", e.name},
                          {"kind", estimator_kind_name(e.kind)},
                          {"space", e.space}});
  json rows = json::array();
  for (const QueryReportRow& row : report.rows) {
    json r{{"query_id", row.query_id},
           {"true_count", row.true_count},
           {"estimator", row.estimator},
           {"mean_estimate", row.mean_estimate},
           {"rrmse", row.rrmse},
           {"absolute_rmse", row.absolute_rmse},
           {"emp_variance", row.emp_variance}};
    if (row.has_interval) {
      r["mean_var_est"] = row.mean_var_est;
      r["coverage"] = row.coverage;
    } else {
      r["mean_var_est"] = nullptr;
      r["coverage"] = nullptr;
    }
    rows.push_back(std::move(r));
  }
  json inclusion = json::object();
  for (const auto& [name, item_rows] : report.inclusion) {
    json list = json::array();
    for (const InclusionRow& row : item_rows)
      list.push_back({{"item_id", row.item},
                      {"true_count", row.true_count},
                      {"incl_freq", row.incl_freq},
                      {"pps_ref", row.pps_ref}});
    inclusion[name] = std::move(list);
  }
  return json{{"replicates", report.replicates},
              {"level", report.level},
              {"estimators", std::move(estimators)},
              {"rows", std::move(rows)},
              {"inclusion", std::move(inclusion)}}
      .dump(2);
}

void write_report(const EvalReport& report, ReportFormat format,
                  const std::string& path) {
  const auto write_file = [](const std::string& file, const std::string& text) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + file);
    out << text;
    if (!out) throw std::runtime_error("write failed for " + file);
  };
  if (format == ReportFormat::json) {
    write_file(path, report_to_json(report) + "\n");
    return;
  }
  write_file(path, report_csv_text(report));
  const std::filesystem::path dir = std::filesystem::path(path).parent_path();
  for (const auto& [name, rows] : report.inclusion) {
    const std::filesystem::path file =
        dir / ("inclusion_" + safe_file_stem(name) + ".csv");
    write_file(file.string(), inclusion_csv_text(rows));
  }
}

ItemId StringInterner::intern(std::string_view key) {
  const auto it = ids_.find(std::string(key));
  if (it != ids_.end()) return it->second;
  names_.emplace_back(key);
  const ItemId id = ItemId(names_.size());
  ids_.emplace(names_.back(), id);
  return id;
}

const std::string& StringInterner::name(ItemId id) const {
  if (id < 1 || id > names_.size()) return empty_;
  return names_[id - 1];
}

namespace {

/// One CSV record: comma separation, double-quote quoting with "" escapes.
/// Embedded newlines are not supported.
std::vector<std::string> parse_csv_fields(const std::string& line,
                                          std::uint64_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  std::size_t i = 0;
  for (;;) {
    cur.clear();
    if (i < line.size() && line[i] == '"') {
      ++i;
      for (;;) {
        if (i >= line.size())
          throw std::runtime_error("line " + std::to_string(line_no) +
                                   ": unterminated quoted field");
        if (line[i] == '"') {
          if (i + 1 < line.size() && line[i + 1] == '"') {
            cur += '"';
            i += 2;
          } else {
            ++i;
            break;
          }
        } else {
          cur += line[i++];
        }
      }
      if (i < line.size() && line[i] != ',')
        throw std::runtime_error("line " + std::to_string(line_no) +
                                 ": unexpected character after quoted field");
    } else {
      while (i < line.size() && line[i] != ',') cur += line[i++];
    }
    fields.push_back(cur);
    if (i >= line.size()) break;
    ++i;  // consume the comma
  }
  return fields;
}

std::string trimmed(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t')) --e;
  return s.substr(b, e - b);
}

}  // namespace

std::uint64_t ingest_csv(const std::string& path,
                         const std::vector<std::string>& key_columns,
                         const std::string& weight_column,
                         StringInterner& interner,
                         const std::function<void(ItemId, double)>& sink) {
  if (key_columns.empty())
    throw std::runtime_error("at least one key column is required");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  std::uint64_t line_no = 0;

  auto next_line = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0)
      line.erase(0, 3);
    return true;
  };

  if (!next_line()) throw std::runtime_error(path + ": missing header row");
  const std::vector<std::string> header = parse_csv_fields(line, line_no);
  const auto column_index = [&](const std::string& name) -> std::size_t {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw std::runtime_error("column '" + name + "' not found in " + path);
  };
  std::vector<std::size_t> key_idx;
  key_idx.reserve(key_columns.size());
  std::size_t max_idx = 0;
  for (const std::string& name : key_columns) {
    key_idx.push_back(column_index(name));
    max_idx = std::max(max_idx, key_idx.back());
  }
  std::size_t weight_idx = SIZE_MAX;
  if (!weight_column.empty()) {
    weight_idx = column_index(weight_column);
    max_idx = std::max(max_idx, weight_idx);
  }

  std::uint64_t rows = 0;
  std::string key;
  while (next_line()) {
    if (line.empty()) continue;
    const std::vector<std::string> fields = parse_csv_fields(line, line_no);
    if (fields.size() <= max_idx)
      throw std::runtime_error("line " + std::to_string(line_no) + ": expected " +
                               std::to_string(max_idx + 1) + " fields, found " +
                               std::to_string(fields.size()));
    key.clear();
    for (std::size_t k = 0; k < key_idx.size(); ++k) {
      if (k > 0) key += kKeySeparator;
      key += fields[key_idx[k]];
    }
    double weight = 1.0;
    if (weight_idx != SIZE_MAX) {
      const std::string raw = trimmed(fields[weight_idx]);
      const char* first = raw.data();
      const char* last = raw.data() + raw.size();
      const auto res = std::from_chars(first, last, weight);
      if (res.ec != std::errc{} || res.ptr != last || !(weight > 0.0) ||
          !std::isfinite(weight))
        throw std::runtime_error("line " + std::to_string(line_no) +
                                 ": bad weight '" + fields[weight_idx] + "'");
    }
    sink(interner.intern(key), weight);
    ++rows;
  }
  return rows;
}

}  // namespace uss
