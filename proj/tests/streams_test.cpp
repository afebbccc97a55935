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

#include <doctest.h>

#include <algorithm>
#include <cstdint>
#include <map>
#include <vector>

#include "uss/sketch.hpp"
#include "uss/streams.hpp"

using uss::emit;
using uss::epoch_items;
using uss::epochs;
using uss::explicit_counts;
using uss::GroundTruth;
using uss::ItemId;
using uss::Ordering;
using uss::scale_to_total;
using uss::Sketch;
using uss::stream_truth;
using uss::StreamSpec;
using uss::UpdateMode;
using uss::weibull_counts;

namespace {

std::vector<ItemId> collect(const StreamSpec& spec, GroundTruth* truth = nullptr) {
  std::vector<ItemId> rows;
  GroundTruth t = emit(spec, [&](ItemId id) { rows.push_back(id); });
  if (truth) *truth = t;
  return rows;
}

std::map<ItemId, std::uint64_t> histogram(const std::vector<ItemId>& rows) {
  std::map<ItemId, std::uint64_t> h;
  for (ItemId id : rows) ++h[id];
  return h;
}

void check_matches_truth(const std::vector<ItemId>& rows, const GroundTruth& t) {
  const auto h = histogram(rows);
  std::uint64_t seen = 0;
  for (const auto& [id, c] : h) {
    CHECK(t.count_of(id) == c);
    seen += c;
  }
  CHECK(seen == t.total);
  CHECK(rows.size() == t.total);
  std::size_t positive = 0;
  for (std::uint64_t c : t.counts) positive += c > 0;
  CHECK(h.size() == positive);
}

}  // namespace

TEST_CASE("weibull counts follow the inverse cdf on the grid") {
  const GroundTruth t = weibull_counts(1.0, 100.0, 4);
  REQUIRE(t.universe() == 4);
  // u = {1/8, 3/8, 5/8, 7/8}; -ln(1-u) = {0.1335, 0.4700, 0.9808, 2.0794}
  CHECK(t.counts[0] == 13);
  CHECK(t.counts[1] == 47);
  CHECK(t.counts[2] == 98);
  CHECK(t.counts[3] == 208);
  CHECK(t.total == 13 + 47 + 98 + 208);

  const GroundTruth median = weibull_counts(1.0, 100.0, 1);
  CHECK(median.counts[0] == 69);  // 100 * ln 2
}

TEST_CASE("small weibull shapes concentrate mass in the tail") {
  const GroundTruth t = weibull_counts(0.2, 1.0, 1000);
  REQUIRE(t.total > 0);
  std::vector<std::uint64_t> sorted(t.counts);
  std::sort(sorted.begin(), sorted.end());
  std::uint64_t top10 = 0;
  for (std::size_t i = sorted.size() - 10; i < sorted.size(); ++i)
    top10 += sorted[i];
  CHECK(double(top10) / double(t.total) > 0.5);
}

TEST_CASE("rescaling keeps the shape and lands near the target") {
  const GroundTruth base = weibull_counts(0.5, 50.0, 200);
  const GroundTruth big = scale_to_total(base, 1000000);
  REQUIRE(big.universe() == base.universe());
  const double ratio = 1000000.0 / double(base.total);
  for (std::size_t i = 0; i < base.universe(); ++i) {
    const double expect = double(base.counts[i]) * ratio;
    CHECK(std::abs(double(big.counts[i]) - expect) <= 0.5 + 1e-9);
  }
  CHECK(std::abs(double(big.total) - 1000000.0) < double(base.universe()));
}

TEST_CASE("every ordering emits exactly its declared ground truth") {
  const GroundTruth base = explicit_counts({5, 0, 3, 7, 1, 2});
  for (const Ordering o :
       {Ordering::shuffled, Ordering::sorted_ascending, Ordering::two_halves,
        Ordering::adversarial_append, Ordering::all_unique}) {
    StreamSpec spec{base, o, 33, 0};
    GroundTruth t;
    const auto rows = collect(spec, &t);
    check_matches_truth(rows, t);
    const GroundTruth declared = stream_truth(spec);
    CHECK(declared.total == t.total);
    REQUIRE(declared.universe() == t.universe());
    for (std::size_t i = 0; i < t.universe(); ++i)
      CHECK(declared.counts[i] == t.counts[i]);
  }
}

TEST_CASE("emission is deterministic in the seed") {
  const GroundTruth base = weibull_counts(0.8, 20.0, 50);
  const StreamSpec spec{base, Ordering::shuffled, 7, 0};
  const auto a = collect(spec);
  const auto b = collect(spec);
  CHECK(a == b);
  StreamSpec other = spec;
  other.seed = 8;
  CHECK(collect(other) != a);
}

TEST_CASE("shuffled order is a genuine permutation") {
  const GroundTruth base = explicit_counts({100, 100, 100});
  const auto rows = collect({base, Ordering::shuffled, 3, 0});
  REQUIRE(rows.size() == 300);
  // a shuffle of three equal blocks should interleave them heavily
  std::size_t switches = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) switches += rows[i] != rows[i - 1];
  CHECK(switches > 100);
}

TEST_CASE("sorted order walks ascending counts in contiguous runs") {
  const GroundTruth base = explicit_counts({2, 1});
  const auto rows = collect({base, Ordering::sorted_ascending, 0, 0});
  REQUIRE(rows.size() == 3);
  CHECK(rows[0] == 2);
  CHECK(rows[1] == 1);
  CHECK(rows[2] == 1);
}

TEST_CASE("two halves mirror the counts over disjoint id ranges") {
  const GroundTruth base = explicit_counts({4, 2, 6});
  StreamSpec spec{base, Ordering::two_halves, 11, 0};
  GroundTruth t;
  const auto rows = collect(spec, &t);
  REQUIRE(rows.size() == 24);
  CHECK(t.total == 24);
  REQUIRE(t.universe() == 6);
  for (ItemId i = 1; i <= 3; ++i) CHECK(t.count_of(i) == t.count_of(i + 3));
  // first half only ids 1..3, second half only 4..6
  for (std::size_t i = 0; i < 12; ++i) CHECK(rows[i] <= 3);
  for (std::size_t i = 12; i < 24; ++i) CHECK(rows[i] >= 4);
}

TEST_CASE("adversarial order plays heavy blocks then a flood of singletons") {
  const GroundTruth base = explicit_counts({3, 5, 2});
  StreamSpec spec{base, Ordering::adversarial_append, 0, 0};
  GroundTruth t;
  const auto rows = collect(spec, &t);
  REQUIRE(rows.size() == 20);
  const std::vector<ItemId> head{2, 2, 2, 2, 2, 1, 1, 1, 3, 3};
  for (std::size_t i = 0; i < head.size(); ++i) CHECK(rows[i] == head[i]);
  for (std::size_t i = 10; i < 20; ++i) CHECK(rows[i] == ItemId(i - 10 + 4));
  CHECK(t.universe() == 13);
  CHECK(t.total == 20);
}

TEST_CASE("adversarial precondition rejects overly heavy items") {
  // capacity 4 needs every count below 2 * total / 4
  const GroundTruth ok = explicit_counts({5, 5, 5, 5});     // bound 10
  const GroundTruth bad = explicit_counts({10, 3, 3, 3});   // 10 >= 9.5
  CHECK_NOTHROW(collect({ok, Ordering::adversarial_append, 0, 4}));
  CHECK_THROWS_AS(collect({bad, Ordering::adversarial_append, 0, 4}),
                  std::invalid_argument);
}

TEST_CASE("the singleton flood evicts every deterministic label") {
  const GroundTruth base = explicit_counts({20, 22, 24, 26, 28});
  StreamSpec spec{base, Ordering::adversarial_append, 1, 2};
  Sketch s(2, UpdateMode::deterministic, 5);
  emit(spec, [&](ItemId id) { s.update(id); });
  for (ItemId i = 1; i <= 5; ++i) CHECK(s.estimate(i) == 0);
}

TEST_CASE("all-unique emits one row per fresh id") {
  const GroundTruth base = explicit_counts({2, 3});
  StreamSpec spec{base, Ordering::all_unique, 0, 0};
  GroundTruth t;
  const auto rows = collect(spec, &t);
  REQUIRE(rows.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) CHECK(rows[i] == ItemId(i + 1));
  CHECK(t.universe() == 5);
  for (std::uint64_t c : t.counts) CHECK(c == 1);
}

TEST_CASE("epochs partition the universe by ascending count") {
  const GroundTruth t = explicit_counts({50, 10, 40, 20, 30, 5});
  const auto groups = epoch_items(t, 3);
  REQUIRE(groups.size() == 3);
  // ascending count order: 6(5), 2(10), 4(20), 5(30), 3(40), 1(50)
  CHECK(groups[0] == std::vector<ItemId>{6, 2});
  CHECK(groups[1] == std::vector<ItemId>{4, 5});
  CHECK(groups[2] == std::vector<ItemId>{3, 1});

  const auto qs = epochs(t, 3);
  REQUIRE(qs.size() == 3);
  CHECK(qs[0].contains(6));
  CHECK(qs[0].contains(2));
  CHECK_FALSE(qs[0].contains(4));
  CHECK(qs[2].contains(1));
}

TEST_CASE("epoch boundaries handle ragged splits") {
  const GroundTruth t = explicit_counts({1, 2, 3, 4, 5});
  const auto groups = epoch_items(t, 3);
  REQUIRE(groups.size() == 3);
  std::size_t total = 0;
  for (const auto& g : groups) {
    CHECK(!g.empty());
    total += g.size();
  }
  CHECK(total == 5);
}
