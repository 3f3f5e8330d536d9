#include "ctrforge/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "ctrforge/errors.hpp"
#include "ctrforge/rng.hpp"
#include "doctest.h"

using namespace ctrforge;

namespace {

// O(n_pos * n_neg) pairwise oracle, double throughout.
double auc_brute(const std::vector<double>& s, const std::vector<float>& y) {
  double wins = 0.0;
  int64_t pairs = 0;
  for (size_t i = 0; i < s.size(); ++i) {
    if (y[i] != 1.0f) continue;
    for (size_t j = 0; j < s.size(); ++j) {
      if (y[j] != 0.0f) continue;
      ++pairs;
      if (s[i] > s[j])
        wins += 1.0;
      else if (s[i] == s[j])
        wins += 0.5;
    }
  }
  return wins / static_cast<double>(pairs);
}

}  // namespace

TEST_CASE("auc hand-computed values") {
  // Two positives above one negative, one negative interleaved: 3 of 4
  // ordered pairs are correct.
  CHECK(auc({0.1, 0.4, 0.35, 0.8}, {0, 0, 1, 1}) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(auc({0.2, 0.8}, {0, 1}) == 1.0);
  CHECK(auc({0.8, 0.2}, {0, 1}) == 0.0);
  // All scores tied: every pair counts half.
  CHECK(auc({0.5, 0.5, 0.5, 0.5}, {0, 1, 0, 1}) == 0.5);
  CHECK(auc({0.3, 0.3, 0.9}, {0, 1, 1}) == doctest::Approx(0.75).epsilon(1e-15));
}

TEST_CASE("auc rejects single-class and empty inputs") {
  CHECK_THROWS_AS(auc({0.1, 0.2}, {1, 1}), DataError);
  CHECK_THROWS_AS(auc({0.1, 0.2}, {0, 0}), DataError);
  CHECK_THROWS_WITH_AS(auc({0.1, 0.2, 0.3}, {0, 0, 0}),
                       "auc undefined: labels are single-class (positives=0, negatives=3)",
                       DataError);
  CHECK_THROWS_AS(auc({}, {}), DataError);
  CHECK_THROWS_AS(auc({0.1}, {0.5f}), ContractViolation);
  CHECK_THROWS_AS(auc({0.1, 0.2}, {0}), ContractViolation);
}

TEST_CASE("auc matches pairwise oracle exactly, ties included") {
  for (uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(mix_seed(77, seed));
    int n = 5 + static_cast<int>(rng.below(120));
    std::vector<double> s(n);
    std::vector<float> y(n);
    bool tied_grid = rng.bernoulli(0.5);  // half the instances force heavy ties
    int pos = 0;
    for (int i = 0; i < n; ++i) {
      s[i] = tied_grid ? 0.1 * static_cast<double>(rng.below(8)) : rng.uniform();
      y[i] = rng.bernoulli(0.4) ? 1.0f : 0.0f;
      pos += y[i] == 1.0f;
    }
    if (pos == 0) y[0] = 1.0f;
    if (pos == n) y[0] = 0.0f;
    // Midrank form and the O(n^2) count are algebraically equal; both are
    // exact sums of halves here, so require bitwise equality.
    CHECK(auc(s, y) == auc_brute(s, y));
  }
}

TEST_CASE("auc complement symmetry on tie-free scores") {
  for (uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(mix_seed(78, seed));
    int n = 10 + static_cast<int>(rng.below(100));
    std::vector<double> s(n), neg(n);
    std::vector<float> y(n);
    for (int i = 0; i < n; ++i) {
      s[i] = rng.uniform();  // continuous draws: ties have probability ~0
      neg[i] = -s[i];
      y[i] = i % 3 == 0 ? 1.0f : 0.0f;
    }
    CHECK(auc(s, y) + auc(neg, y) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("auc invariant under strictly monotone score transforms") {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(mix_seed(79, seed));
    int n = 30;
    std::vector<double> s(n), t(n);
    std::vector<float> y(n);
    for (int i = 0; i < n; ++i) {
      s[i] = rng.uniform(-3.0, 3.0);
      t[i] = std::exp(s[i]);
      y[i] = i % 2 ? 1.0f : 0.0f;
    }
    CHECK(auc(s, y) == auc(t, y));
  }
}

TEST_CASE("rmse hand values and invariances") {
  CHECK(rmse({0.5, 0.5}, {1, 0}) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(rmse({1.0, 0.0}, {1, 0}) == 0.0);
  CHECK(rmse({0.0, 1.0}, {1, 0}) == 1.0);
  CHECK_THROWS_AS(rmse({}, {}), DataError);

  for (uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(mix_seed(80, seed));
    int n = 1 + static_cast<int>(rng.below(200));
    std::vector<double> p(n), pc(n);
    std::vector<float> y(n), yc(n);
    for (int i = 0; i < n; ++i) {
      p[i] = rng.uniform();
      y[i] = rng.bernoulli(0.5) ? 1.0f : 0.0f;
      pc[i] = 1.0 - p[i];
      yc[i] = 1.0f - y[i];
    }
    // (p - y)^2 == ((1-p) - (1-y))^2 termwise, so equality is exact.
    CHECK(rmse(p, y) == rmse(pc, yc));
  }
}

TEST_CASE("rmse matches long-double direct summation within 1e-12") {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(mix_seed(81, seed));
    int n = 1000 + static_cast<int>(rng.below(9000));
    std::vector<double> p(n);
    std::vector<float> y(n);
    long double acc = 0.0L;
    for (int i = 0; i < n; ++i) {
      p[i] = rng.uniform();
      y[i] = rng.bernoulli(0.3) ? 1.0f : 0.0f;
      long double d = static_cast<long double>(p[i]) - static_cast<long double>(y[i]);
      acc += d * d;
    }
    double oracle = static_cast<double>(std::sqrt(acc / n));
    CHECK(std::abs(rmse(p, y) - oracle) <= 1e-12);
  }
}

TEST_CASE("per-content rmse groups and recombines") {
  std::vector<double> p = {0.5, 0.0, 1.0, 0.25};
  std::vector<float> y = {1, 0, 1, 1};
  std::vector<std::string> c = {"b", "a", "b", "a"};
  auto rows = per_content_rmse(p, y, c);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].content_id == "a");  // sorted by id
  CHECK(rows[0].count == 2);
  CHECK(rows[0].rmse == doctest::Approx(std::sqrt((0.0 + 0.5625) / 2)).epsilon(1e-15));
  CHECK(rows[1].content_id == "b");
  CHECK(rows[1].count == 2);
  CHECK(rows[1].rmse == doctest::Approx(std::sqrt(0.125)).epsilon(1e-15));

  for (uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(mix_seed(82, seed));
    int n = 50 + static_cast<int>(rng.below(500));
    std::vector<double> pp(n);
    std::vector<float> yy(n);
    std::vector<std::string> cc(n);
    for (int i = 0; i < n; ++i) {
      pp[i] = rng.uniform();
      yy[i] = rng.bernoulli(0.5) ? 1.0f : 0.0f;
      cc[i] = "c" + std::to_string(rng.below(7));
    }
    auto groups = per_content_rmse(pp, yy, cc);
    double weighted = 0.0;
    int64_t total = 0;
    for (const auto& g : groups) {
      weighted += g.rmse * g.rmse * static_cast<double>(g.count);
      total += g.count;
    }
    CHECK(total == n);
    double global = rmse(pp, yy);
    // Count-weighted mean of per-group MSEs is the global MSE.
    CHECK(std::sqrt(weighted / static_cast<double>(total)) ==
          doctest::Approx(global).epsilon(1e-12));
  }
}
