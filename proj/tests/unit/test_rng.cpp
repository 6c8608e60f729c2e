#include <doctest.h>

#include "pmax/rng.hpp"

TEST_SUITE("rng") {

TEST_CASE("mix is deterministic and tag-sensitive") {
  CHECK(pmax::rng::mix(7, pmax::rng::kTagNoise) == pmax::rng::mix(7, pmax::rng::kTagNoise));
  CHECK(pmax::rng::mix(7, pmax::rng::kTagNoise) != pmax::rng::mix(7, pmax::rng::kTagCovariate));
  CHECK(pmax::rng::mix(7, pmax::rng::kTagNoise) != pmax::rng::mix(8, pmax::rng::kTagNoise));
  CHECK(pmax::rng::mix(7, pmax::rng::kTagSample, 0) != pmax::rng::mix(7, pmax::rng::kTagSample, 1));
}

TEST_CASE("substreams reproduce their sequences") {
  auto a = pmax::rng::substream(11, pmax::rng::kTagBootstrap, 3);
  auto b = pmax::rng::substream(11, pmax::rng::kTagBootstrap, 3);
  for (int i = 0; i < 16; ++i) CHECK(a() == b());
  auto c = pmax::rng::substream(11, pmax::rng::kTagBootstrap, 4);
  bool all_equal = true;
  auto a2 = pmax::rng::substream(11, pmax::rng::kTagBootstrap, 3);
  for (int i = 0; i < 16; ++i) all_equal = all_equal && (a2() == c());
  CHECK_FALSE(all_equal);
}

TEST_CASE("hash_string separates cell identifiers") {
  const auto h1 = pmax::rng::hash_string("n=100 kd=0 kt=35");
  CHECK(h1 == pmax::rng::hash_string("n=100 kd=0 kt=35"));
  CHECK(h1 != pmax::rng::hash_string("n=100 kd=0 kt=36"));
  CHECK(pmax::rng::hash_string("") != pmax::rng::hash_string(" "));
}

}  // TEST_SUITE
