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

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "test_util.hpp"
#include "uss/merge.hpp"
#include "uss/rng.hpp"
#include "uss/sketch.hpp"

using uss::ItemId;
using uss::merge;
using uss::merge_misra_gries;
using uss::merge_unbiased;
using uss::MergeKind;
using uss::Rng;
using uss::Sketch;
using uss::SketchSnapshot;
using uss::snapshot;
using uss::UpdateMode;
using uss::WeightedSketch;

namespace {

Sketch from_rows(std::size_t capacity, std::uint64_t seed,
                 const std::vector<ItemId>& rows) {
  Sketch s(capacity, UpdateMode::unbiased, seed);
  for (ItemId id : rows) s.update(id);
  return s;
}

}  // namespace

TEST_CASE("merging below the combined capacity is exact addition") {
  const Sketch a = from_rows(8, 1, {1, 1, 1, 2, 2, 3});
  const Sketch b = from_rows(8, 2, {2, 4, 4, 4, 4});
  const auto r = merge_unbiased(a, b, 8, 99);
  CHECK(r.kind == MergeKind::unbiased);
  CHECK(r.sketch.estimate(1) == 3.0);
  CHECK(r.sketch.estimate(2) == 3.0);
  CHECK(r.sketch.estimate(3) == 1.0);
  CHECK(r.sketch.estimate(4) == 4.0);
  CHECK(r.sketch.size() == 4);
  CHECK(r.sketch.rows_processed() == 11);
  CHECK(r.sketch.total_weight() == 11.0);
  CHECK(r.sketch.validate_structure());
}

TEST_CASE("merging with an empty sketch changes nothing") {
  const Sketch a = from_rows(6, 3, {7, 7, 8});
  const Sketch b(6, UpdateMode::unbiased, 4);
  const auto r = merge_unbiased(a, b, 6, 5);
  CHECK(r.sketch.estimate(7) == 2.0);
  CHECK(r.sketch.estimate(8) == 1.0);
  CHECK(r.sketch.size() == 2);
}

TEST_CASE("oversized merges trim to exactly m bins") {
  const Sketch a = from_rows(10, 5, {1, 2, 3, 4, 5, 6});
  const Sketch b = from_rows(10, 6, {7, 8, 9, 10, 11, 12});
  const auto r = merge_unbiased(a, b, 4, 31);
  CHECK(r.sketch.size() == 4);
  CHECK(r.sketch.capacity() == 4);
}

TEST_CASE("merge validates its capacity") {
  const SketchSnapshot a, b;
  CHECK_THROWS_AS(merge(a, b, 0, MergeKind::unbiased, 1),
                  std::invalid_argument);
}

TEST_CASE("trimmed merges stay unbiased per item") {
  // a holds {x:4, y:1}, b holds {x:1, z:1}; merging to two bins must keep
  // expected estimates at {5, 1, 1}
  const Sketch a = from_rows(2, 1, {1, 1, 1, 1, 2});
  const Sketch b = from_rows(2, 2, {1, 3});
  const int reps = 30000;
  std::vector<double> ex, ey, ez;
  for (int r = 0; r < reps; ++r) {
    const auto m = merge_unbiased(a, b, 2, 4000 + r);
    REQUIRE(m.sketch.size() == 2);
    ex.push_back(m.sketch.estimate(1));
    ey.push_back(m.sketch.estimate(2));
    ez.push_back(m.sketch.estimate(3));
  }
  CHECK(std::abs(uss::testing::mean(ex) - 5.0) <=
        4.0 * uss::testing::se_of_mean(ex) + 1e-9);
  CHECK(std::abs(uss::testing::mean(ey) - 1.0) <=
        4.0 * uss::testing::se_of_mean(ey) + 1e-9);
  CHECK(std::abs(uss::testing::mean(ez) - 1.0) <=
        4.0 * uss::testing::se_of_mean(ez) + 1e-9);
}

TEST_CASE("merged sums of two heavy streams stay near the combined truth") {
  Rng rng(17);
  std::map<ItemId, double> truth;
  std::vector<ItemId> rows_a, rows_b;
  for (int r = 0; r < 4000; ++r) {
    const double u = rng.next_double();
    const ItemId id = 1 + ItemId(u * u * 120);
    rows_a.push_back(id);
    truth[id] += 1.0;
  }
  for (int r = 0; r < 4000; ++r) {
    const double u = rng.next_double();
    const ItemId id = 200 + ItemId(u * u * 120);
    rows_b.push_back(id);
    truth[id] += 1.0;
  }
  double subset_truth = 0.0;
  for (const auto& [id, n] : truth)
    if (id % 2 == 0) subset_truth += n;
  const int reps = 2000;
  std::vector<double> est;
  for (int r = 0; r < reps; ++r) {
    const Sketch a = from_rows(40, 100 + r, rows_a);
    const Sketch b = from_rows(40, 700000 + r, rows_b);
    const auto m = merge_unbiased(a, b, 40, 1400000 + r);
    double sum = 0.0;
    for (const auto& bin : m.sketch.unordered_bins())
      if (bin.item % 2 == 0) sum += bin.count;
    est.push_back(sum);
  }
  CHECK(std::abs(uss::testing::mean(est) - subset_truth) <=
        4.0 * uss::testing::se_of_mean(est));
}

TEST_CASE("misra-gries merge reproduces the worked soft-threshold example") {
  using Bin = Sketch::Bin;
  const std::array<std::uint64_t, 4> state{1, 1, 1, 1};
  const Sketch a = Sketch::restore(
      5, UpdateMode::deterministic, 0, 29, 29.0, state,
      {Bin{1, 10}, Bin{2, 8}, Bin{3, 6}, Bin{4, 4}, Bin{5, 1}});
  const Sketch b(5, UpdateMode::deterministic, 0);
  // a's min is 1, so its view is {9, 7, 5, 3}; the 3rd largest combined
  // count is 5, leaving {1: 4, 2: 2}
  const auto r = merge_misra_gries(a, b, 2, 0);
  CHECK(r.kind == MergeKind::misra_gries);
  REQUIRE(r.sketch.size() == 2);
  CHECK(r.sketch.estimate(1) == 4.0);
  CHECK(r.sketch.estimate(2) == 2.0);
  CHECK(r.sketch.mode() == UpdateMode::deterministic);
}

TEST_CASE("misra-gries merge never overestimates and fits its budget") {
  Rng rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    std::map<ItemId, std::uint64_t> truth;
    std::vector<ItemId> rows_a, rows_b;
    for (int r = 0; r < 3000; ++r) {
      const double u = rng.next_double();
      const ItemId id = 1 + ItemId(u * u * 90);
      ++truth[id];
      (r % 2 == 0 ? rows_a : rows_b).push_back(id);
    }
    Sketch a(15, UpdateMode::deterministic, trial);
    for (ItemId id : rows_a) a.update(id);
    Sketch b(20, UpdateMode::deterministic, trial + 1);
    for (ItemId id : rows_b) b.update(id);
    const auto m = merge_misra_gries(a, b, 10, 0);
    CHECK(m.sketch.size() <= 10);
    for (const auto& bin : m.sketch.unordered_bins()) {
      const auto it = truth.find(bin.item);
      REQUIRE(it != truth.end());
      CHECK(bin.count <= double(it->second));
    }
  }
}

TEST_CASE("merge results can keep merging") {
  const Sketch a = from_rows(6, 1, {1, 1, 2});
  const Sketch b = from_rows(6, 2, {3, 3, 3});
  const Sketch c = from_rows(6, 3, {1, 4});
  const auto ab = merge_unbiased(a, b, 6, 9);
  const auto abc = merge(snapshot(ab.sketch), snapshot(c), 6,
                         MergeKind::unbiased, 10);
  CHECK(abc.sketch.estimate(1) == 3.0);
  CHECK(abc.sketch.estimate(2) == 1.0);
  CHECK(abc.sketch.estimate(3) == 3.0);
  CHECK(abc.sketch.estimate(4) == 1.0);
  CHECK(abc.sketch.rows_processed() == 8);
}
