#include <algorithm>
#include <cstdint>
#include <vector>

#include "cogflex/rng.hpp"
#include "doctest.h"

using namespace cogflex;

TEST_CASE("underlying engine matches the standard-pinned mt19937_64 value") {
  // The C++ standard pins the 10000th output of the default-seeded engine.
  Rng rng(5489u);
  std::uint64_t last = 0;
  for (int i = 0; i < 10000; ++i) last = rng.next_u64();
  CHECK(last == 9981545732273789042ULL);
}

TEST_CASE("same seed replays the same stream, different seeds diverge") {
  Rng a(12345), b(12345), c(54321);
  bool saw_difference = false;
  for (int i = 0; i < 256; ++i) {
    const std::uint64_t va = a.next_u64();
    CHECK(va == b.next_u64());
    if (va != c.next_u64()) saw_difference = true;
  }
  CHECK(saw_difference);
}

TEST_CASE("derive_seed separates streams and is order-insensitive") {
  const std::uint64_t base = 777;
  CHECK(derive_seed(base, 1) == derive_seed(base, 1));
  CHECK(derive_seed(base, 1) != derive_seed(base, 2));
  CHECK(derive_seed(base, 1) != derive_seed(base + 1, 1));
  // Static so the seed schedule can never drift silently.
  static_assert(derive_seed(0, 0) == mix64(mix64(0x632be59bd9b4e019ULL)));
}

TEST_CASE("uniform uses the high 53 bits exactly") {
  Rng raw(99), u(99);
  for (int i = 0; i < 100; ++i) {
    const double expect =
        static_cast<double>(raw.next_u64() >> 11) * 0x1.0p-53;
    CHECK(u.uniform() == expect);
  }
}

TEST_CASE("uniform stays in bounds") {
  Rng rng(2024);
  for (int i = 0; i < 10000; ++i) {
    const double v = rng.uniform();
    CHECK(v >= 0.0);
    CHECK(v < 1.0);
  }
  for (int i = 0; i < 1000; ++i) {
    const double v = rng.uniform(-2.5, 3.5);
    CHECK(v >= -2.5);
    CHECK(v < 3.5);
  }
}

TEST_CASE("uniform_u64 respects the bound and is unbiased enough") {
  Rng rng(7);
  CHECK(rng.uniform_u64(1) == 0);
  std::vector<int> counts(6, 0);
  const int draws = 60000;
  for (int i = 0; i < draws; ++i) {
    const std::uint64_t v = rng.uniform_u64(6);
    REQUIRE(v < 6);
    ++counts[static_cast<std::size_t>(v)];
  }
  // Deterministic sequence; loose band around draws / 6 = 10000.
  for (int c : counts) {
    CHECK(c > 9500);
    CHECK(c < 10500);
  }
}

TEST_CASE("uniform_int covers every residue") {
  Rng rng(11);
  std::vector<bool> seen(17, false);
  for (int i = 0; i < 2000; ++i) {
    const int v = rng.uniform_int(17);
    REQUIRE(v >= 0);
    REQUIRE(v < 17);
    seen[static_cast<std::size_t>(v)] = true;
  }
  CHECK(std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }));
}

TEST_CASE("shuffle permutes and is seed-deterministic") {
  std::vector<int> v(100);
  for (int i = 0; i < 100; ++i) v[static_cast<std::size_t>(i)] = i;
  std::vector<int> w = v;

  Rng a(31415), b(31415);
  a.shuffle(v);
  b.shuffle(w);
  CHECK(v == w);

  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 100; ++i) CHECK(sorted[static_cast<std::size_t>(i)] == i);

  std::vector<int> u = sorted;
  Rng c(161803);
  c.shuffle(u);
  CHECK(u != v);  // distinct seeds give distinct orders for 100 elements
}
