#include <algorithm>
#include <cmath>
#include <vector>

#include "cmm/bayes.hpp"
#include "cmm/encode.hpp"
#include "cmm/rng.hpp"
#include "cmm/special.hpp"
#include "doctest.h"

using namespace cmm;

TEST_CASE("sample_proportions moments match the Dirichlet posterior") {
  RngStream rng(4711);
  std::vector<double> nk{3.0, 1.0};  // posterior Dirichlet(3.5, 1.5), mean 0.7
  double sum = 0.0;
  const int trials = 100000;
  for (int t = 0; t < trials; ++t) {
    auto pi = sample_proportions(nk, rng);
    REQUIRE(pi.size() == 2);
    CHECK(pi[0] + pi[1] == doctest::Approx(1.0).epsilon(1e-12));
    sum += pi[0];
  }
  CHECK(sum / trials == doctest::Approx(0.7).epsilon(0.01));
  std::vector<double> single{5.0};
  CHECK(sample_proportions(single, rng) == std::vector<double>{1.0});
}

TEST_CASE("posterior_mode_locations picks the top counts, ties by index") {
  auto bc = make_block_counts({1.0, 5.0, 3.0});
  CHECK(posterior_mode_locations(bc, 2) == std::vector<std::uint32_t>{1, 2});
  auto tie = make_block_counts({4.0, 4.0, 1.0});
  CHECK(posterior_mode_locations(tie, 1) == std::vector<std::uint32_t>{0});
}

TEST_CASE("sample_block_probs: flat case mean epsilon is 3/4") {
  // No data, m=2, ell=1: epsilon ~ Uniform[1/2, 1], mean 0.75.
  auto bc = make_block_counts({0.0, 0.0});
  RngStream rng(1);
  double sum = 0.0;
  const int trials = 100000;
  for (int t = 0; t < trials; ++t) sum += sample_block_probs(bc, 0.0, 1, 2, rng).a[0];
  CHECK(sum / trials == doctest::Approx(0.75).epsilon(0.007));
}

TEST_CASE("sample_block_probs invariants over 100000 random draws") {
  RngStream rng(2);
  for (int t = 0; t < 100000; ++t) {
    const long m = 2 + long(rng.uniform_index(4));
    const int ell = 1 + int(rng.uniform_index(std::size_t(m - 1)));
    std::vector<double> counts(m);
    double nk = 0.0;
    for (auto& c : counts) {
      c = double(rng.uniform_index(30));
      nk += c;
    }
    auto bc = make_block_counts(counts);
    auto bp = sample_block_probs(bc, nk, ell, m, rng);
    // validate() hard-asserts the truncated simplex and canonical ordering.
    bp.validate(m);
    CHECK(bp.num_modes() == ell);
  }
}

TEST_CASE("sample_block_probs matches a rejection-sampling oracle") {
  // Same stick construction, but each epsilon drawn by rejection from the
  // untruncated Beta; agreement checks the inverse-CDF path end to end.
  auto bc = make_block_counts({4.0, 2.0, 1.0});
  const double nk = 7.0;
  const long m = 3;
  const int ell = 2;
  const int trials = 100000;

  RngStream rng(33);
  double mean0 = 0.0, mean1 = 0.0;
  for (int t = 0; t < trials; ++t) {
    auto bp = sample_block_probs(bc, nk, ell, m, rng);
    mean0 += bp.a[0];
    mean1 += bp.a[1];
  }
  mean0 /= trials;
  mean1 /= trials;

  RngStream orc(34);
  auto beta_draw = [&](double a, double b) {
    const double x = orc.gamma(a);
    const double y = orc.gamma(b);
    return x / (x + y);
  };
  double omean0 = 0.0, omean1 = 0.0, osq0 = 0.0;
  for (int t = 0; t < trials; ++t) {
    double e1, e2;
    do { e1 = beta_draw(4.0 + 1.0, 3.0 + 1.0); } while (e1 < 1.0 / 3.0);
    do { e2 = beta_draw(2.0 + 1.0, 1.0 + 1.0); } while (e2 < 1.0 / 2.0);
    double a0 = e1, a1 = e2 * (1.0 - e1);
    if (a1 > a0) std::swap(a0, a1);
    omean0 += a0;
    omean1 += a1;
    osq0 += a0 * a0;
  }
  omean0 /= trials;
  omean1 /= trials;
  const double sd0 = std::sqrt(osq0 / trials - omean0 * omean0);
  const double se = 3.0 * sd0 / std::sqrt(double(trials)) * 2.0;  // both sides random
  CHECK(std::fabs(mean0 - omean0) <= std::max(se, 0.003));
  CHECK(std::fabs(mean1 - omean1) <= std::max(se, 0.003));
}

TEST_CASE("log_integrated_block against frozen quadrature constants") {
  struct Case {
    std::vector<double> counts;
    long m;
    int ell;
    double want;
  };
  // Reference values: 60-digit quadrature of the chained stick integrals.
  const Case cases[] = {
      {{7, 3}, 2, 1, -7.30561444257857634},
      {{5, 3, 2}, 3, 1, -12.2164129993244063},
      {{8, 6, 1}, 3, 2, -16.3476376233870994},
      {{50, 1, 1, 1}, 4, 1, -18.4450349968665331},
      {{50, 1, 1, 1}, 4, 3, -21.3354067547626978},
      {{12, 9, 2, 1}, 4, 2, -29.8639793675095339},
      {{20, 15, 10, 5}, 4, 3, -70.4277369573083544},
  };
  for (const auto& c : cases) {
    auto bc = make_block_counts(c.counts);
    double nk = 0.0;
    for (double x : c.counts) nk += x;
    const double got = log_integrated_block(bc, nk, c.ell, c.m);
    CHECK(std::fabs(got - c.want) / std::fabs(c.want) <= 1e-10);
  }
  // A dominant single crossing must prefer ell=1 over ell=3.
  auto bc = make_block_counts({50, 1, 1, 1});
  CHECK(log_integrated_block(bc, 53, 1, 4) > log_integrated_block(bc, 53, 3, 4));
}

TEST_CASE("log_integrated_block is exchangeable below the top-ell counts") {
  auto a = make_block_counts({9, 2, 1, 3});
  auto b = make_block_counts({9, 1, 3, 2});
  for (int ell = 1; ell <= 3; ++ell)
    CHECK(log_integrated_block(a, 15, ell, 4) ==
          doctest::Approx(log_integrated_block(b, 15, ell, 4)).epsilon(1e-14));
  CHECK_THROWS_AS(log_integrated_block(a, 15, 0, 4), std::domain_error);
  CHECK_THROWS_AS(log_integrated_block(a, 15, 4, 4), std::domain_error);
}

TEST_CASE("log_integrated_complete sums per-(class, block) terms") {
  // One class, one block: equal by definition.
  ModelSpec spec1(1, BlockPartition::singletons(1), {{1}}, {3});
  SufficientStats s1{{10.0}, {{make_block_counts({6.0, 3.0, 1.0})}}};
  CHECK(log_integrated_complete(s1, spec1) ==
        doctest::Approx(log_integrated_block(s1.kj[0][0], 10.0, 1, 3)).epsilon(1e-14));

  // Two blocks: additivity.
  ModelSpec spec2(1, BlockPartition::singletons(2), {{1, 2}}, {3, 4});
  SufficientStats s2{{10.0},
                     {{make_block_counts({6.0, 3.0, 1.0}), make_block_counts({4.0, 3.0, 2.0, 1.0})}}};
  CHECK(log_integrated_complete(s2, spec2) ==
        doctest::Approx(log_integrated_block(s2.kj[0][0], 10.0, 1, 3) +
                        log_integrated_block(s2.kj[0][1], 10.0, 2, 4))
            .epsilon(1e-14));
}

TEST_CASE("mode-count selectors on clear-cut count vectors") {
  // Three dominant crossings out of nine.
  auto three = make_block_counts({120, 110, 100, 5, 4, 6, 5, 5, 5});
  CHECK(select_mode_count_integrated(three, 360, 9) == 3);
  CHECK(select_mode_count_bic(three, 360, 9) == 3);
  // One dominant crossing.
  auto one = make_block_counts({200, 3, 2, 4, 3, 2, 3, 2, 1});
  CHECK(select_mode_count_integrated(one, 220, 9) == 1);
  CHECK(select_mode_count_bic(one, 220, 9) == 1);
}

TEST_CASE("ordered-prior criterion never exceeds a clean mode count") {
  // Near-uniform counts: the conservative criterion must stay at ell=1
  // even when the faithful evidence is tempted upward.
  RngStream rng(606);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> counts(9);
    double nk = 0.0;
    for (auto& c : counts) {
      c = 50.0 + double(rng.uniform_index(12));
      nk += c;
    }
    auto bc = make_block_counts(counts);
    const int pick = select_mode_count_integrated(bc, nk, 9);
    CHECK(pick <= 2);
  }
}

TEST_CASE("bic pinned examples") {
  CHECK(bic(-100.0, 0, 500) == doctest::Approx(-100.0));
  CHECK(bic(-100.0, 13, 1) == doctest::Approx(-100.0));
  CHECK(bic(-100.0, 13, 800) ==
        doctest::Approx(-100.0 - 6.5 * std::log(800.0)).epsilon(1e-14));
}
