#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "rcnet/errors.hpp"
#include "rcnet/metrics.hpp"
#include "rcnet/random.hpp"

using namespace rcnet;

namespace {

// Sort-based reference median.
double sorted_median(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("mean squared error") {
  const std::vector<double> a{0.1, -0.4, 2.0};
  CHECK(mse(a, a) == 0.0);
  CHECK(mse(std::vector<double>{0.0, 0.0}, std::vector<double>{1.0, -1.0}) == 1.0);
  CHECK(mse(std::vector<double>{0.5}, std::vector<double>{1.0}) == 0.25);
  CHECK_THROWS_AS(mse(a, std::vector<double>{1.0}), ContractError);
  CHECK_THROWS_AS(mse(std::vector<double>{}, std::vector<double>{}), ContractError);
}

TEST_CASE("population variance") {
  CHECK(variance(std::vector<double>{1.0, 3.0}) == 1.0);
  CHECK(variance(std::vector<double>{2.0}) == 0.0);
}

TEST_CASE("normalized error series") {
  const std::vector<double> t{0.0, 1.0, 2.0, 3.0};
  for (double v : nmse_series(t, t, 1.0)) CHECK(v == 0.0);
  std::vector<double> p = t;
  p[2] += 0.6;
  const auto single = nmse_series(p, t, 4.0);
  CHECK(single[2] == doctest::Approx(0.36 / 4.0));
  CHECK(single[1] == 0.0);
  std::vector<double> shifted = t;
  for (double& v : shifted) v += 0.3;
  for (double v : nmse_series(shifted, t, 0.5)) CHECK(v == doctest::Approx(0.09 / 0.5));
  CHECK(nmse_series(p, t, 4.0).size() == t.size());
  CHECK_THROWS_AS(nmse_series(p, t, 0.0), InputError);
}

TEST_CASE("valid prediction time") {
  std::vector<double> nmse(2000, 0.3);
  CHECK(valid_prediction_time(nmse, 0.007, 1.0, 0.25) == 0.0);
  std::fill(nmse.begin(), nmse.end(), 0.01);
  CHECK(valid_prediction_time(nmse, 0.007, 1.0, 0.25) == doctest::Approx(14.0));
  nmse[999] = 0.25;  // step 1000 reaches the threshold
  CHECK(valid_prediction_time(nmse, 0.007, 1.0, 0.25) == doctest::Approx(6.993));
  // The set-max variant ignores the isolated crossing.
  CHECK(valid_prediction_time_setmax(nmse, 0.007, 1.0, 0.25) == doctest::Approx(14.0));
  nmse[1999] = 1.0;
  CHECK(valid_prediction_time_setmax(nmse, 0.007, 1.0, 0.25) == doctest::Approx(0.007 * 1999));
  nmse[3] = std::numeric_limits<double>::quiet_NaN();
  CHECK(valid_prediction_time(nmse, 0.007, 1.0, 0.25) == doctest::Approx(0.021));
  CHECK(valid_prediction_time(std::vector<double>(10, 0.0), 0.007, 0.5, 0.25) ==
        doctest::Approx(0.035));
}

TEST_CASE("median and MAD") {
  auto s = median_mad(std::vector<double>{1, 2, 3});
  CHECK(s.median == 2.0);
  CHECK(s.mad == 1.0);
  CHECK(s.n_samples == 3);
  s = median_mad(std::vector<double>{5});
  CHECK(s.median == 5.0);
  CHECK(s.mad == 0.0);
  s = median_mad(std::vector<double>{1, 1, 1, 9});
  CHECK(s.median == 1.0);
  CHECK(s.mad == 0.0);
  CHECK_THROWS_AS(median_mad(std::vector<double>{}), ContractError);

  const double inf = std::numeric_limits<double>::infinity();
  CHECK(median({inf, inf, 1.0, inf}) == inf);
  CHECK(median({1.0, 2.0, inf, inf}) == inf);
  CHECK(median({1.0, 2.0, 3.0, inf}) == 2.5);
  s = median_mad(std::vector<double>{inf, inf, 0.5});
  CHECK(s.median == inf);
  CHECK(s.mad == 0.0);
}

TEST_CASE("median properties on random samples") {
  Rng rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = 1 + static_cast<std::size_t>(uniform_index(rng, 40));
    std::vector<double> xs(n);
    for (double& x : xs) x = uniform(rng, -5.0, 5.0);
    const EnsembleStat s = median_mad(xs);
    CHECK(s.median == doctest::Approx(sorted_median(xs)).epsilon(1e-15));
    CHECK(s.mad >= 0.0);

    std::vector<double> perm = xs;
    std::shuffle(perm.begin(), perm.end(), rng);
    CHECK(median_mad(perm).median == s.median);
    CHECK(median_mad(perm).mad == s.mad);

    // One outlier moves the median by at most one rank.
    if (n >= 3) {
      std::vector<double> sorted = xs;
      std::sort(sorted.begin(), sorted.end());
      for (double big : {1e6, -1e6}) {
        std::vector<double> y = xs;
        y[uniform_index(rng, n)] = big;
        const double m = median(y);
        CHECK(m >= sorted[(n - 1) / 2 - 1]);
        CHECK(m <= sorted[n / 2 + 1]);
      }
    }
  }
}

}
