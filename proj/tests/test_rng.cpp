#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "doctest.h"
#include "hcqrf/errors.hpp"
#include "hcqrf/rng.hpp"

using namespace hcqrf;

TEST_CASE("normal quantile reproduces reference values") {
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
  CHECK(normal_quantile(0.975) == doctest::Approx(1.9599639845400545).epsilon(1e-13));
  CHECK(normal_quantile(0.9) == doctest::Approx(1.2815515655446004).epsilon(1e-13));
  CHECK(normal_quantile(0.1) == doctest::Approx(-1.2815515655446004).epsilon(1e-13));
  CHECK(normal_quantile(0.999) == doctest::Approx(3.090232306167813).epsilon(1e-12));
  CHECK(normal_quantile(1e-10) == doctest::Approx(-6.361340902404056).epsilon(1e-10));
  CHECK_THROWS_AS(normal_quantile(0.0), NumericalError);
  CHECK_THROWS_AS(normal_quantile(1.0), NumericalError);
  CHECK_THROWS_AS(normal_quantile(-0.2), NumericalError);
}

TEST_CASE("normal cdf and quantile are inverses") {
  for (double p = 0.01; p < 1.0; p += 0.037) {
    CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-12));
  }
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("chi-squared(1) quantile matches its closed form") {
  CHECK(chi_squared1_quantile(0.95) == doctest::Approx(3.841458820694124).epsilon(1e-12));
  CHECK(chi_squared1_quantile(0.5) == doctest::Approx(0.45493642311957285).epsilon(1e-12));
}

TEST_CASE("generator is deterministic for a fixed seed") {
  Rng a(123), b(123), c(124);
  bool differs = false;
  for (int i = 0; i < 64; ++i) {
    const std::uint64_t va = a.u64();
    CHECK(va == b.u64());
    differs = differs || va != c.u64();
  }
  CHECK(differs);
}

TEST_CASE("substreams are independent of draw order") {
  Rng root(42);
  Rng s1 = root.stream(1);
  // Drawing from the root must not shift its substreams.
  for (int i = 0; i < 10; ++i) root.u64();
  Rng s1_again = Rng(42).stream(1);
  for (int i = 0; i < 16; ++i) CHECK(s1.u64() == s1_again.u64());

  Rng s2 = Rng(42).stream(2);
  bool differs = false;
  for (int i = 0; i < 16; ++i) differs = differs || Rng(42).stream(1).u64() != s2.u64();
  CHECK(differs);
}

TEST_CASE("mix_seed separates tags") {
  std::set<std::uint64_t> keys;
  for (std::uint64_t tag = 0; tag < 100; ++tag) keys.insert(mix_seed(7, tag));
  CHECK(keys.size() == 100);
  CHECK(mix_seed(7, 3, 9) == mix_seed(mix_seed(7, 3), 9));
}

TEST_CASE("uniform01 lies in the half-open unit interval") {
  Rng rng(1);
  double lo = 1.0, hi = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double v = rng.uniform01();
    CHECK(v >= 0.0);
    CHECK(v < 1.0);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(lo < 0.01);
  CHECK(hi > 0.99);
}

TEST_CASE("draw moments match their distributions") {
  Rng rng(2718);
  const int n = 200000;
  double n_sum = 0, n_sq = 0, e_sum = 0, c2_sum = 0, c1_sum = 0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    n_sum += z;
    n_sq += z * z;
    e_sum += rng.exponential(2.0);
    c2_sum += rng.chi_squared2();
    c1_sum += rng.chi_squared1();
  }
  CHECK(n_sum / n == doctest::Approx(0.0).scale(1.0).epsilon(0.02));
  CHECK(n_sq / n == doctest::Approx(1.0).epsilon(0.03));
  CHECK(e_sum / n == doctest::Approx(0.5).epsilon(0.03));   // mean 1/rate
  CHECK(c2_sum / n == doctest::Approx(2.0).epsilon(0.03));  // mean = df
  CHECK(c1_sum / n == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("student t2 is symmetric with heavy tails") {
  Rng rng(99);
  const int n = 200000;
  int neg = 0, tail = 0;
  for (int i = 0; i < n; ++i) {
    const double t = rng.student_t2();
    if (t < 0) ++neg;
    if (std::abs(t) > 4.0) ++tail;  // P(|t2| > 4) = 1 - 4/sqrt(18) ~ 0.057
  }
  CHECK(static_cast<double>(neg) / n == doctest::Approx(0.5).epsilon(0.02));
  CHECK(static_cast<double>(tail) / n == doctest::Approx(0.0572).epsilon(0.15));
}

TEST_CASE("below stays within range and covers it") {
  Rng rng(5);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) {
    const std::uint64_t v = rng.below(7);
    REQUIRE(v < 7);
    ++counts[static_cast<std::size_t>(v)];
  }
  for (int c : counts) CHECK(c > 8000);
}

TEST_CASE("permutation and sampling helpers are well formed") {
  Rng rng(10);
  const auto perm = rng.permutation(50);
  std::set<std::uint32_t> seen(perm.begin(), perm.end());
  CHECK(seen.size() == 50);
  CHECK(*seen.rbegin() == 49);

  const auto sample = rng.sample_without_replacement(100, 17);
  REQUIRE(sample.size() == 17);
  CHECK(std::is_sorted(sample.begin(), sample.end()));
  CHECK(std::adjacent_find(sample.begin(), sample.end()) == sample.end());
  CHECK(sample.back() < 100);

  // Deterministic replay.
  Rng rng2(10);
  CHECK(rng2.permutation(50) == perm);
  CHECK(rng2.sample_without_replacement(100, 17) == sample);
}

TEST_CASE("shuffle visits all orders of a small set") {
  // Sanity: over many shuffles of {0,1,2}, all 6 orders appear.
  Rng rng(8);
  std::set<std::vector<int>> orders;
  for (int i = 0; i < 600; ++i) {
    std::vector<int> v{0, 1, 2};
    rng.shuffle(v);
    orders.insert(v);
  }
  CHECK(orders.size() == 6);
}
