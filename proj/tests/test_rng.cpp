// SPDX-License-Identifier: Apache-2.0
#include <catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <vector>

#include "maxmart/parallel.hpp"
#include "maxmart/rng.hpp"

using namespace maxmart;

TEST_CASE("Philox4x32-10 known-answer vectors") {
  // Random123 kat_vectors.
  CHECK(Philox4x32::apply({0, 0, 0, 0}, {0, 0}) ==
        Philox4x32::Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(Philox4x32::apply({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                          {0xffffffffu, 0xffffffffu}) ==
        Philox4x32::Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(Philox4x32::apply({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                          {0xa4093822u, 0x299f31d0u}) ==
        Philox4x32::Counter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("streams are reproducible and distinct") {
  CounterRng a({42, 7}), b({42, 7}), c({42, 8}), e({43, 7});
  std::vector<std::uint64_t> va, vb, vc, ve;
  for (int i = 0; i < 64; ++i) {
    va.push_back(a());
    vb.push_back(b());
    vc.push_back(c());
    ve.push_back(e());
  }
  CHECK(va == vb);
  CHECK(va != vc);
  CHECK(va != ve);

  const SeedStream root{1, 0};
  std::set<std::pair<std::uint64_t, std::uint64_t>> seen;
  for (std::uint64_t k = 0; k < 100; ++k) {
    const auto s = root.split(k);
    seen.insert({s.seed, s.stream});
    const auto t = root.split(k).split(0);
    seen.insert({t.seed, t.stream});
  }
  CHECK(seen.size() == 200);
  CHECK(SeedStream{1, 0}.split(3) != SeedStream{1, 1}.split(3));
}

TEST_CASE("uniform and normal moments") {
  CounterRng rng({2024, 0});
  const int count = 200000;
  double su = 0, sn = 0, sn2 = 0, sr = 0;
  double umin = 1, umax = 0;
  for (int i = 0; i < count; ++i) {
    const double u = rng.uniform();
    umin = std::min(umin, u);
    umax = std::max(umax, u);
    su += u;
    const double z = rng.normal();
    sn += z;
    sn2 += z * z;
    sr += rng.rademacher();
  }
  CHECK(umin >= 0.0);
  CHECK(umax < 1.0);
  CHECK(std::abs(su / count - 0.5) < 4 * std::sqrt(1.0 / 12 / count));
  CHECK(std::abs(sn / count) < 4 / std::sqrt(count));
  CHECK(std::abs(sn2 / count - 1.0) < 4 * std::sqrt(2.0 / count));
  CHECK(std::abs(sr / count) < 4 / std::sqrt(count));
}

TEST_CASE("parallel_for result is independent of the thread count") {
  auto run = [](unsigned threads) {
    std::vector<double> out(1000);
    parallel_for(out.size(), threads, [&](std::size_t k) {
      CounterRng rng(SeedStream{9, 0}.split(k));
      out[k] = rng.normal();
    });
    return out;
  };
  const auto one = run(1);
  CHECK(one == run(3));
  CHECK(one == run(8));
}

TEST_CASE("parallel_for rethrows worker exceptions") {
  CHECK_THROWS_AS(parallel_for(10, 4,
                               [](std::size_t k) {
                                 if (k == 7) throw std::runtime_error("boom");
                               }),
                  std::runtime_error);
}
