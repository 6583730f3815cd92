#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "priorreg/entropy.hpp"
#include "priorreg/rng.hpp"

using namespace priorreg;

namespace {

// Direct oracle with long-double accumulation, written independently of
// normalized_entropy.
double entropy_oracle(const Vector& w, const IntVector& ranks, double phi) {
  const auto m = static_cast<std::size_t>(w.size());
  long double l1 = 0.0L;
  for (std::size_t j = 0; j < m; ++j) l1 += std::abs((long double)w(j));
  std::vector<long double> tilde(m);
  long double total = 0.0L;
  for (std::size_t j = 0; j < m; ++j) {
    tilde[j] = std::abs((long double)w(j)) / l1 *
               powl(phi, ranks(static_cast<Eigen::Index>(j)));
    total += tilde[j];
  }
  long double h = 0.0L;
  for (std::size_t j = 0; j < m; ++j) {
    long double p = tilde[j] / total;
    if (p > 0.0L) h -= p * log2l(p);
  }
  return static_cast<double>(h / log2l((long double)m));
}

IntVector iota_ranks(int m) {
  IntVector r(m);
  for (int j = 0; j < m; ++j) r(j) = j;
  return r;
}

}  // namespace

TEST_CASE("uniform weights with phi one score one", "[entropy]") {
  for (int m : {2, 3, 5, 17}) {
    Vector w = Vector::Ones(m) * 0.7;
    for (int j = 0; j < m; j += 2) w(j) = -w(j);  // signs are irrelevant
    REQUIRE(normalized_entropy(w, iota_ranks(m), 1.0) ==
            Catch::Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("one-hot weights score zero", "[entropy]") {
  Vector w = Vector::Zero(4);
  w(2) = -3.5;
  REQUIRE(normalized_entropy(w, iota_ranks(4), 1.0) ==
          Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("two-cue worked example with rank scaling", "[entropy]") {
  Vector w(2);
  w << 2, 1;
  IntVector ranks(2);
  ranks << 1, 0;
  // raw tilde = (4/3, 1/3), renormalized (0.8, 0.2)
  double expected = -(0.8 * std::log2(0.8) + 0.2 * std::log2(0.2));
  REQUIRE(normalized_entropy(w, ranks, 2.0) ==
          Catch::Approx(expected).margin(1e-12));
  REQUIRE(normalized_entropy(w, ranks, 2.0) ==
          Catch::Approx(0.7219280949).margin(1e-9));
}

TEST_CASE("all-zero weights are rejected", "[entropy]") {
  REQUIRE_THROWS_AS(normalized_entropy(Vector::Zero(3), iota_ranks(3), 1.0),
                    degenerate_error);
}

TEST_CASE("non-positive phi is rejected", "[entropy]") {
  Vector w(2);
  w << 1, 2;
  REQUIRE_THROWS_AS(normalized_entropy(w, iota_ranks(2), 0.0), input_error);
  REQUIRE_THROWS_AS(normalized_entropy(w, iota_ranks(2), -1.0), input_error);
}

TEST_CASE("single predictor counts as uniform", "[entropy]") {
  Vector w(1);
  w << 4.2;
  REQUIRE(normalized_entropy(w, iota_ranks(1), 2.0) == 1.0);
}

TEST_CASE("entropy stays in the unit interval and matches the oracle",
          "[entropy]") {
  Rng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    int m = 2 + static_cast<int>(rng.below(10));
    Vector w(m);
    for (int j = 0; j < m; ++j) w(j) = rng.normal(0.0, 2.0);
    if (w.cwiseAbs().sum() == 0.0) continue;
    std::vector<int> perm(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) perm[static_cast<std::size_t>(j)] = j;
    rng.shuffle(perm);
    IntVector ranks(m);
    for (int j = 0; j < m; ++j) ranks(j) = perm[static_cast<std::size_t>(j)];
    double phi = rng.uniform() < 0.5 ? 1.0 : 2.0;
    double h = normalized_entropy(w, ranks, phi);
    REQUIRE(h >= 0.0);
    REQUIRE(h <= 1.0 + 1e-12);
    REQUIRE(std::abs(h - entropy_oracle(w, ranks, phi)) < 1e-12);
  }
}
