#include <set>

#include "doctest.h"
#include <vector>

#include "metricq/random.hpp"

using metricq::Philox4x32;

TEST_CASE("Philox4x32-10 known-answer vectors") {
  using A4 = std::array<std::uint32_t, 4>;
  CHECK(Philox4x32::block({0, 0, 0, 0}, {0, 0}) == A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(Philox4x32::block({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(Philox4x32::block({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are deterministic and distinct") {
  Philox4x32 a(42, 0), b(42, 0), c(42, 1), d(43, 0);
  std::vector<std::uint32_t> va, vb, vc, vd;
  for (int i = 0; i < 64; ++i) va.push_back(a()), vb.push_back(b()), vc.push_back(c()), vd.push_back(d());
  CHECK(va == vb);
  CHECK(va != vc);
  CHECK(va != vd);
}

TEST_CASE("discard skips exactly") {
  for (std::uint64_t skip : {0u, 1u, 3u, 4u, 5u, 17u, 1000u}) {
    Philox4x32 a(9, 2), b(9, 2);
    for (std::uint64_t i = 0; i < skip; ++i) a();
    b.discard(skip);
    for (int i = 0; i < 10; ++i) CHECK(a() == b());
  }
  Philox4x32 a(9, 2), b(9, 2);
  a(), a();
  b(), b();
  a.discard(9);
  for (int i = 0; i < 9; ++i) b();
  CHECK(a() == b());
}

TEST_CASE("derive_seed and uniform01") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 10; ++s)
    for (std::uint64_t t = 0; t < 100; ++t) seen.insert(metricq::derive_seed(s, t));
  CHECK(seen.size() == 1000);
  CHECK(metricq::derive_seed(1, 2) == metricq::derive_seed(1, 2));

  Philox4x32 g(1);
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = metricq::uniform01(g);
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(sum / 100000 == doctest::Approx(0.5).epsilon(0.01));
}
