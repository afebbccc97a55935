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
#include <vector>

#include "uss/rng.hpp"

using uss::Rng;
using uss::derive_seed;

TEST_CASE("same seed reproduces the identical stream") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) REQUIRE(a.next_u64() == b.next_u64());
}

TEST_CASE("different seeds diverge") {
  Rng a(1), b(2);
  int same = 0;
  for (int i = 0; i < 64; ++i) same += a.next_u64() == b.next_u64();
  CHECK(same == 0);
}

TEST_CASE("derive_seed separates streams deterministically") {
  CHECK(derive_seed(7, 0) == derive_seed(7, 0));
  CHECK(derive_seed(7, 0) != derive_seed(7, 1));
  CHECK(derive_seed(7, 0) != derive_seed(8, 0));
}

TEST_CASE("next_double stays in the unit interval with plausible mean") {
  Rng rng(3);
  double sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.next_double();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  // SE of the mean is about 0.00065; allow five of those.
  CHECK(std::abs(sum / n - 0.5) < 0.0033);
}

TEST_CASE("next_below respects the bound and is close to uniform") {
  Rng rng(11);
  const std::uint64_t k = 8;
  const int n = 80000;
  std::array<int, 8> hist{};
  for (int i = 0; i < n; ++i) {
    const std::uint64_t v = rng.next_below(k);
    REQUIRE(v < k);
    ++hist[v];
  }
  // Each cell is Binomial(n, 1/8): sd just under 100, so 500 is five sigma.
  for (int count : hist) CHECK(std::abs(count - n / 8) < 500);
}

TEST_CASE("next_below handles bound one") {
  Rng rng(5);
  for (int i = 0; i < 10; ++i) CHECK(rng.next_below(1) == 0);
}

TEST_CASE("chance tracks its probability") {
  Rng rng(17);
  const int n = 100000;
  int hits = 0;
  for (int i = 0; i < n; ++i) hits += rng.chance(0.3);
  // sd is about 145; allow five.
  CHECK(std::abs(hits - 30000) < 725);
}

TEST_CASE("geometric has unit-shifted support and the right head mass") {
  Rng rng(23);
  const double p = 0.35;
  const int n = 100000;
  int ones = 0;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const std::uint64_t g = rng.geometric(p);
    REQUIRE(g >= 1);
    ones += g == 1;
    sum += double(g);
  }
  // P(G = 1) = p and E[G] = 1/p.
  CHECK(std::abs(double(ones) / n - p) < 0.008);
  CHECK(std::abs(sum / n - 1.0 / p) < 0.05);
}

TEST_CASE("state round-trips through restore") {
  Rng rng(99);
  for (int i = 0; i < 17; ++i) rng.next_u64();
  const std::array<std::uint64_t, 4> snap = rng.state();
  std::vector<std::uint64_t> tail;
  for (int i = 0; i < 50; ++i) tail.push_back(rng.next_u64());
  Rng replay(0);
  replay.restore(snap);
  for (int i = 0; i < 50; ++i) CHECK(replay.next_u64() == tail[i]);
}
