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

#include <string>
#include <variant>

#include "uss/estimation.hpp"
#include "uss/sketch.hpp"

namespace uss {

/// Versioned JSON record carrying mode, capacity, row count, generator state
/// and all bins. Round-trips are lossless: integer counts are exact by
/// construction and real counts rely on shortest-round-trip double
/// formatting, so deserialize(serialize(s)) reproduces s bit for bit. Bins
/// are recorded in state order, which also makes the restored sketch resume
/// the exact update trajectory of the original, random tie-breaks included.
std::string serialize_sketch(const Sketch& sketch);
std::string serialize_sketch(const WeightedSketch& sketch);

/// Either count representation, as tagged in the record.
using AnySketch = std::variant<Sketch, WeightedSketch>;

/// Parses a serialized sketch. Throws std::runtime_error on malformed input,
/// an unknown format tag or an unsupported version; field-level problems
/// (duplicate labels, counts out of range) surface as std::invalid_argument.
AnySketch deserialize_sketch(const std::string& text);

/// Convenience wrappers that additionally require the expected count type.
Sketch deserialize_integer_sketch(const std::string& text);
WeightedSketch deserialize_weighted_sketch(const std::string& text);

/// One-line JSON record {estimate, variance, ci_low, ci_high, level, c_s}.
std::string query_result_to_json(const QueryResult& result);

}  // namespace uss
