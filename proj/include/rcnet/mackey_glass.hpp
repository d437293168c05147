#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "rcnet/random.hpp"

namespace rcnet {

/// Equidistant scalar samples.
struct TimeSeries {
  std::vector<double> values;
  double step = 1.0;
  double origin = 0.0;

  std::size_t size() const noexcept { return values.size(); }
};

/// Affine map u -> scale * u + offset.
struct AffineMap {
  double scale = 1.0;
  double offset = 0.0;

  double apply(double u) const { return scale * u + offset; }
  double invert(double v) const { return (v - offset) / scale; }
};

struct RescaledSeries {
  TimeSeries series;
  AffineMap map;
};

struct MackeyGlassParams {
  double a = 0.2;
  double b = 0.1;
  int q = 10;
  double tau = 17.0;
  double dt = 1.7e-2;
  long transient_steps = 250000;
  double target_step = 1.0;
  double history_lo = 0.1;
  double history_hi = 1.3;

  /// Number of fine steps spanning the delay; throws unless tau/dt is a
  /// positive integer.
  int delay_slots() const;
  void validate() const;
};

/// Integrates the delay equation from a random history drawn uniformly from
/// [history_lo, history_hi], discards the transient, and samples every
/// `target_step` time units.
TimeSeries generate_mackey_glass(const MackeyGlassParams& params,
                                 std::size_t n_samples, Rng& rng);

/// Same integrator from an explicit history of `delay_slots() + 1` values,
/// oldest first.
TimeSeries generate_mackey_glass(const MackeyGlassParams& params,
                                 std::size_t n_samples,
                                 std::span<const double> history);

/// Fine-grid trajectory after the transient, without downsampling.
std::vector<double> integrate_mackey_glass(const MackeyGlassParams& params,
                                           std::size_t n_steps,
                                           std::span<const double> history);

/// Maps the observed minimum to -1 and maximum to +1.
RescaledSeries rescale(const TimeSeries& ts);

void write_series(std::ostream& out, const TimeSeries& ts,
                  const MackeyGlassParams& params, std::uint64_t seed);
TimeSeries read_series(std::istream& in);

}  // namespace rcnet
