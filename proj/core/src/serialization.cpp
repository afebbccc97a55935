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

#include "uss/serialization.hpp"

#include <array>
#include <cstdint>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace uss {
namespace {

using nlohmann::json;

constexpr const char* kFormatTag = "uss-sketch";
constexpr int kVersion = 1;

template <class Count>
json sketch_record(const SpaceSaving<Count>& sketch, const char* counts_tag) {
  // State order (not display order) so the restored sketch resumes the
  // exact trajectory of this one.
  json bins = json::array();
  for (const auto& bin : sketch.bins_in_state_order())
    bins.push_back({bin.item, bin.count});
  const auto state = sketch.rng_state();
  return json{
      {"format", kFormatTag},
      {"version", kVersion},
      {"counts", counts_tag},
      {"mode", sketch.mode() == UpdateMode::deterministic ? "deterministic"
                                                          : "unbiased"},
      {"capacity", sketch.capacity()},
      {"seed", sketch.seed()},
      {"rows", sketch.rows_processed()},
      {"weight", sketch.total_weight()},
      {"rng", {state[0], state[1], state[2], state[3]}},
      {"bins", std::move(bins)},
  };
}

[[noreturn]] void fail(const std::string& what) {
  throw std::runtime_error("sketch record: " + what);
}

const json& field(const json& record, const char* name) {
  const auto it = record.find(name);
  if (it == record.end()) fail(std::string("missing field '") + name + "'");
  return *it;
}

template <class Count>
SpaceSaving<Count> rebuild(const json& record, UpdateMode mode) {
  std::array<std::uint64_t, 4> state{};
  const json& rng = field(record, "rng");
  if (!rng.is_array() || rng.size() != 4) fail("'rng' must hold 4 words");
  for (std::size_t i = 0; i < 4; ++i) state[i] = rng[i].get<std::uint64_t>();

  const json& bin_list = field(record, "bins");
  if (!bin_list.is_array()) fail("'bins' must be an array");
  std::vector<typename SpaceSaving<Count>::Bin> bins;
  bins.reserve(bin_list.size());
  for (const json& entry : bin_list) {
    if (!entry.is_array() || entry.size() != 2) fail("each bin must be [label, count]");
    // The parser tags non-negative integer literals as unsigned; requiring
    // that here keeps lossy narrowing (floats, negatives) from slipping
    // through get<> casts.
    if (!entry[0].is_number_unsigned()) fail("bin labels must be unsigned integers");
    if constexpr (std::is_same_v<Count, std::uint64_t>) {
      if (!entry[1].is_number_unsigned()) fail("u64 bin counts must be unsigned integers");
    } else {
      if (!entry[1].is_number()) fail("bin counts must be numbers");
    }
    bins.push_back({entry[0].get<ItemId>(), entry[1].get<Count>()});
  }
  return SpaceSaving<Count>::restore(
      field(record, "capacity").get<std::size_t>(), mode,
      field(record, "seed").get<std::uint64_t>(),
      field(record, "rows").get<std::uint64_t>(),
      field(record, "weight").get<double>(), state, bins);
}

}  // namespace

std::string serialize_sketch(const Sketch& sketch) {
  return sketch_record(sketch, "u64").dump();
}

std::string serialize_sketch(const WeightedSketch& sketch) {
  return sketch_record(sketch, "f64").dump();
}

AnySketch deserialize_sketch(const std::string& text) {
  json record;
  try {
    record = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(std::string("not valid JSON (") + e.what() + ")");
  }
  try {
    if (!record.is_object()) fail("top level must be an object");
    if (field(record, "format").get<std::string>() != kFormatTag)
      fail("unknown format tag");
    if (field(record, "version").get<int>() != kVersion)
      fail("unsupported version");
    const std::string mode_tag = field(record, "mode").get<std::string>();
    UpdateMode mode;
    if (mode_tag == "deterministic") {
      mode = UpdateMode::deterministic;
    } else if (mode_tag == "unbiased") {
      mode = UpdateMode::unbiased;
    } else {
      fail("unknown mode '" + mode_tag + "'");
    }
    const std::string counts_tag = field(record, "counts").get<std::string>();
    if (counts_tag == "u64") return rebuild<std::uint64_t>(record, mode);
    if (counts_tag == "f64") return rebuild<double>(record, mode);
    fail("unknown counts tag '" + counts_tag + "'");
  } catch (const json::exception& e) {
    fail(std::string("bad field type (") + e.what() + ")");
  }
}

Sketch deserialize_integer_sketch(const std::string& text) {
  AnySketch any = deserialize_sketch(text);
  if (auto* s = std::get_if<Sketch>(&any)) return std::move(*s);
  throw std::runtime_error("sketch record: expected u64 counts, found f64");
}

WeightedSketch deserialize_weighted_sketch(const std::string& text) {
  AnySketch any = deserialize_sketch(text);
  if (auto* s = std::get_if<WeightedSketch>(&any)) return std::move(*s);
  throw std::runtime_error("sketch record: expected f64 counts, found u64");
}

std::string query_result_to_json(const QueryResult& result) {
  return json{
      {"estimate", result.estimate},
      {"variance", result.variance_estimate},
      {"ci_low", result.ci_low},
      {"ci_high", result.ci_high},
      {"level", result.nominal_level},
      {"c_s", result.items_in_sketch},
  }.dump();
}

}  // namespace uss
