#include "rcnet/mackey_glass.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "rcnet/errors.hpp"

namespace rcnet {

int MackeyGlassParams::delay_slots() const {
  const double ratio = tau / dt;
  const double rounded = std::round(ratio);
  if (!(rounded >= 1.0) || std::abs(ratio - rounded) > 1e-9 * rounded)
    throw ParameterError("tau/dt must be a positive integer");
  return static_cast<int>(rounded);
}

void MackeyGlassParams::validate() const {
  if (!(a > 0.0 && b > 0.0 && dt > 0.0 && tau > 0.0))
    throw ParameterError("Mackey-Glass a, b, dt and tau must be positive");
  if (q < 1) throw ParameterError("Mackey-Glass exponent must be positive");
  if (transient_steps < 0)
    throw ParameterError("transient step count must be nonnegative");
  if (!(target_step > 0.0))
    throw ParameterError("sampling interval must be positive");
  if (!(history_hi >= history_lo))
    throw ParameterError("history range is inverted");
  delay_slots();
}

namespace {

// Trapezoidal delay integrator over a ring buffer holding u_{n-D} .. u_n.
class DelayIntegrator {
 public:
  DelayIntegrator(const MackeyGlassParams& p, std::span<const double> history)
      : a_dt_(p.a * p.dt),
        keep_(2.0 - p.b * p.dt),
        denom_(2.0 + p.b * p.dt),
        q_(p.q),
        buf_(history.begin(), history.end()) {
    if (buf_.size() != static_cast<std::size_t>(p.delay_slots()) + 1)
      throw ContractError("history must hold delay_slots() + 1 values");
  }

  double current() const { return buf_[(head_ + buf_.size() - 1) % buf_.size()]; }

  double advance() {
    const std::size_t n = buf_.size();
    const double delayed = buf_[head_];
    const double next_delayed = buf_[(head_ + 1) % n];
    const double u = current();
    const double next =
        (keep_ * u + a_dt_ * (feedback(delayed) + feedback(next_delayed))) /
        denom_;
    buf_[head_] = next;
    head_ = (head_ + 1) % n;
    return next;
  }

 private:
  double feedback(double u) const { return u / (1.0 + std::pow(u, q_)); }

  double a_dt_;
  double keep_;
  double denom_;
  int q_;
  std::vector<double> buf_;
  std::size_t head_ = 0;
};

void check_bounded(double u, std::size_t step) {
  if (!std::isfinite(u) || std::abs(u) > 1e6)
    throw DivergenceError("Mackey-Glass integration diverged", step);
}

}  // namespace

std::vector<double> integrate_mackey_glass(const MackeyGlassParams& params,
                                           std::size_t n_steps,
                                           std::span<const double> history) {
  params.validate();
  DelayIntegrator integrator(params, history);
  std::size_t step = 0;
  for (long i = 0; i < params.transient_steps; ++i)
    check_bounded(integrator.advance(), ++step);
  std::vector<double> out;
  out.reserve(n_steps + 1);
  out.push_back(integrator.current());
  for (std::size_t i = 0; i < n_steps; ++i) {
    out.push_back(integrator.advance());
    check_bounded(out.back(), ++step);
  }
  return out;
}

TimeSeries generate_mackey_glass(const MackeyGlassParams& params,
                                 std::size_t n_samples,
                                 std::span<const double> history) {
  if (n_samples < 1) throw ParameterError("need at least one sample");
  params.validate();
  DelayIntegrator integrator(params, history);
  std::size_t step = 0;
  for (long i = 0; i < params.transient_steps; ++i)
    check_bounded(integrator.advance(), ++step);

  TimeSeries ts;
  ts.step = params.target_step;
  ts.origin = 0.0;
  ts.values.reserve(n_samples);

  // Fine sample i sits at time i*dt; output k at k*target_step is linearly
  // interpolated between the bracketing fine samples.
  long fine_index = 0;
  double prev = integrator.current();
  double next = integrator.advance();
  check_bounded(next, ++step);
  for (std::size_t k = 0; k < n_samples; ++k) {
    const double pos = static_cast<double>(k) * params.target_step / params.dt;
    const auto base = static_cast<long>(std::floor(pos));
    while (fine_index < base) {
      prev = next;
      next = integrator.advance();
      check_bounded(next, ++step);
      ++fine_index;
    }
    const double frac = pos - static_cast<double>(base);
    ts.values.push_back(prev + frac * (next - prev));
  }
  return ts;
}

TimeSeries generate_mackey_glass(const MackeyGlassParams& params,
                                 std::size_t n_samples, Rng& rng) {
  params.validate();
  std::vector<double> history(static_cast<std::size_t>(params.delay_slots()) + 1);
  for (double& h : history) h = uniform(rng, params.history_lo, params.history_hi);
  return generate_mackey_glass(params, n_samples, history);
}

RescaledSeries rescale(const TimeSeries& ts) {
  if (ts.values.empty()) throw DegenerateRangeError("cannot rescale an empty series");
  const auto [lo_it, hi_it] = std::minmax_element(ts.values.begin(), ts.values.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (!(hi > lo)) throw DegenerateRangeError("cannot rescale a constant series");

  RescaledSeries out;
  out.map.scale = 2.0 / (hi - lo);
  out.map.offset = -(hi + lo) / (hi - lo);
  out.series.step = ts.step;
  out.series.origin = ts.origin;
  out.series.values.reserve(ts.size());
  // Written as 2(u-lo)/(hi-lo) - 1 so that both endpoints land exactly.
  for (double u : ts.values)
    out.series.values.push_back(2.0 * (u - lo) / (hi - lo) - 1.0);
  return out;
}

void write_series(std::ostream& out, const TimeSeries& ts,
                  const MackeyGlassParams& params, std::uint64_t seed) {
  out << "# mackey_glass a=" << params.a << " b=" << params.b
      << " q=" << params.q << " tau=" << params.tau << " seed=" << seed << '\n';
  out << std::setprecision(17) << "# step=" << ts.step
      << " origin=" << ts.origin << '\n';
  for (double v : ts.values) out << v << '\n';
  if (!out) throw IoError("failed to write series");
}

TimeSeries read_series(std::istream& in) {
  TimeSeries ts;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.front() == '#') {
      std::istringstream fields(line.substr(1));
      std::string field;
      while (fields >> field) {
        const auto eq = field.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = field.substr(0, eq);
        const std::string value = field.substr(eq + 1);
        if (key == "step") ts.step = std::stod(value);
        if (key == "origin") ts.origin = std::stod(value);
      }
      continue;
    }
    try {
      ts.values.push_back(std::stod(line));
    } catch (const std::exception&) {
      throw IoError("malformed series value '" + line + "'");
    }
  }
  return ts;
}

}  // namespace rcnet
