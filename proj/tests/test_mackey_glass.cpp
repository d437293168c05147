#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "rcnet/errors.hpp"
#include "rcnet/mackey_glass.hpp"

using namespace rcnet;

namespace {

// Explicit Heun scheme on a plain array, used as an independent reference.
// Returns the trajectory on its own fine grid, history included.
std::vector<double> heun_reference(const MackeyGlassParams& p, double dt,
                                   std::size_t steps, double constant_history) {
  const auto d = static_cast<std::size_t>(std::llround(p.tau / dt));
  std::vector<double> u(d + 1, constant_history);
  u.reserve(d + 1 + steps);
  auto f = [&](double x, double delayed) {
    return p.a * delayed / (1.0 + std::pow(delayed, p.q)) - p.b * x;
  };
  for (std::size_t n = d; n < d + steps; ++n) {
    const double k1 = f(u[n], u[n - d]);
    const double pred = u[n] + dt * k1;
    const double k2 = f(pred, u[n + 1 - d]);
    u.push_back(u[n] + 0.5 * dt * (k1 + k2));
  }
  return u;
}

MackeyGlassParams short_run(double dt) {
  MackeyGlassParams p;
  p.dt = dt;
  p.transient_steps = 0;
  return p;
}

}  // namespace

TEST_SUITE("mackey_glass") {

TEST_CASE("parameter validation") {
  MackeyGlassParams p;
  CHECK(p.delay_slots() == 1000);
  p.dt = 0.03;
  CHECK_THROWS_AS(p.validate(), ParameterError);
  p = {};
  p.b = 0.0;
  CHECK_THROWS_AS(p.validate(), ParameterError);
  p = {};
  p.history_lo = 2.0;
  CHECK_THROWS_AS(p.validate(), ParameterError);
}

TEST_CASE("fixed points") {
  MackeyGlassParams p;
  p.transient_steps = 2000;
  const std::vector<double> ones(1001, 1.0);
  for (double v : generate_mackey_glass(p, 200, ones).values)
    CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
  const std::vector<double> zeros(1001, 0.0);
  for (double v : generate_mackey_glass(p, 200, zeros).values) CHECK(v == 0.0);
}

TEST_CASE("history length is checked") {
  const std::vector<double> h(10, 0.5);
  CHECK_THROWS_AS(generate_mackey_glass(MackeyGlassParams{}, 5, h), ContractError);
}

TEST_CASE("non-finite history reports divergence") {
  MackeyGlassParams p;
  p.transient_steps = 5;
  std::vector<double> h(1001, 0.5);
  h[0] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(generate_mackey_glass(p, 5, h), DivergenceError);
}

TEST_CASE("agrees with a fine reference over a short horizon") {
  // 60 time units from a constant history, compared at integer times.
  const MackeyGlassParams p = short_run(0.017);
  const std::vector<double> h(1001, 0.5);
  const TimeSeries ts = generate_mackey_glass(p, 61, h);
  const auto ref = heun_reference(p, 0.0017, 60 * 1000 / 1.7 + 20, 0.5);
  for (int t = 0; t <= 60; ++t) {
    const double pos = t / 0.0017;
    const auto i = static_cast<std::size_t>(std::floor(pos));
    const double frac = pos - static_cast<double>(i);
    const double r = ref[10000 + i] * (1 - frac) + ref[10000 + i + 1] * frac;
    CHECK(ts.values[static_cast<std::size_t>(t)] == doctest::Approx(r).epsilon(2e-4));
  }
}

TEST_CASE("second-order convergence in dt") {
  // Same physical horizon at dt, dt/2, dt/4 against a dt/16 run of the same
  // scheme; error ratios near 4 indicate second order.
  const double horizon = 34.0;
  auto end_value = [&](double dt) {
    const MackeyGlassParams p = short_run(dt);
    const std::vector<double> h(static_cast<std::size_t>(p.delay_slots()) + 1, 0.5);
    const auto steps = static_cast<std::size_t>(std::llround(horizon / dt));
    return integrate_mackey_glass(p, steps, h).back();
  };
  const double fine = end_value(0.068 / 16);
  const double e1 = std::abs(end_value(0.068) - fine);
  const double e2 = std::abs(end_value(0.034) - fine);
  const double e3 = std::abs(end_value(0.017) - fine);
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.25));
  CHECK(e2 / e3 == doctest::Approx(4.0).epsilon(0.25));
}

TEST_CASE("long-run envelope matches the fine reference") {
  MackeyGlassParams p;
  Rng rng(2024);
  const TimeSeries ts = generate_mackey_glass(p, 100000, rng);
  const auto [lo, hi] = std::minmax_element(ts.values.begin(), ts.values.end());

  // Reference attractor at dt/10 after a comparable transient.
  const double dt = p.dt / 10;
  const std::size_t transient = 2500000;
  const auto ref = heun_reference(p, dt, transient + 20000000, 0.9);
  const auto [rlo, rhi] = std::minmax_element(ref.begin() + 10001 + transient, ref.end());
  CHECK(*lo == doctest::Approx(*rlo).epsilon(0.03));
  CHECK(*hi == doctest::Approx(*rhi).epsilon(0.03));
  CHECK(*lo > 0.2);
  CHECK(*hi < 1.6);

  // Aperiodic: the autocorrelation decays and does not return to 1.
  std::vector<double> x(ts.values.begin(), ts.values.begin() + 20000);
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  auto acf = [&](std::size_t lag) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i + lag < x.size(); ++i)
      num += (x[i] - mean) * (x[i + lag] - mean);
    for (double v : x) den += (v - mean) * (v - mean);
    return num / den;
  };
  double late_max = 0.0;
  for (std::size_t lag = 500; lag < 1500; ++lag) late_max = std::max(late_max, acf(lag));
  CHECK(late_max < 0.9);
}

TEST_CASE("same seed gives a bit-identical series") {
  MackeyGlassParams p;
  p.transient_steps = 10000;
  Rng a(5), b(5), c(6);
  const auto sa = generate_mackey_glass(p, 500, a);
  CHECK(sa.values == generate_mackey_glass(p, 500, b).values);
  CHECK(sa.values != generate_mackey_glass(p, 500, c).values);
}

TEST_CASE("rescaling") {
  TimeSeries ts;
  ts.values = {0.0, 1.0, 2.0};
  CHECK(rescale(ts).series.values == std::vector<double>{-1.0, 0.0, 1.0});

  ts.values = {-1.0, 0.3, 1.0};
  const auto same = rescale(ts).series.values;
  for (std::size_t i = 0; i < 3; ++i) CHECK(same[i] == doctest::Approx(ts.values[i]).epsilon(1e-15));

  ts.values = {0.2, 0.55, 1.6, 0.9};
  const RescaledSeries r = rescale(ts);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    CHECK(r.series.values[i] == doctest::Approx((ts.values[i] - 0.9) / 0.7).epsilon(1e-14));
    CHECK(r.map.apply(ts.values[i]) == doctest::Approx(r.series.values[i]).epsilon(1e-14));
    CHECK(r.map.invert(r.series.values[i]) == doctest::Approx(ts.values[i]).epsilon(1e-14));
  }

  ts.values = {0.4, 0.4};
  CHECK_THROWS_AS(rescale(ts), DegenerateRangeError);
}

TEST_CASE("series file round trip") {
  MackeyGlassParams p;
  p.transient_steps = 100;
  Rng rng(3);
  const TimeSeries ts = generate_mackey_glass(p, 50, rng);
  std::stringstream io;
  write_series(io, ts, p, 3);
  const TimeSeries back = read_series(io);
  CHECK(back.values == ts.values);
  CHECK(back.step == ts.step);
  std::istringstream bad("# step=1\n0.5\nfoo\n");
  CHECK_THROWS_AS(read_series(bad), IoError);
}

}
