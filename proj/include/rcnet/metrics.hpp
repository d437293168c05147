#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace rcnet {

struct EnsembleStat {
  double median = 0.0;
  double mad = 0.0;
  std::size_t n_samples = 0;
};

struct PredictionScore {
  double mse = 0.0;
  std::vector<double> nmse_series;
  double t_vp_lyapunov = 0.0;
};

/// Largest Lyapunov exponent of the Mackey-Glass attractor used to express
/// forecast horizons in Lyapunov times.
inline constexpr double kMackeyGlassLyapunov = 0.007;
inline constexpr double kNmseThreshold = 0.25;

double mse(std::span<const double> pred, std::span<const double> truth);

/// Population variance.
double variance(std::span<const double> xs);

/// Per-step squared error divided by `sigma2`.
std::vector<double> nmse_series(std::span<const double> pred,
                                std::span<const double> truth, double sigma2);

/// lambda1 * t of the last step before the first step whose NMSE reaches
/// `threshold`; the full window when no step does.
double valid_prediction_time(std::span<const double> nmse, double lambda1,
                             double dt, double threshold);

/// lambda1 * t of the latest step with NMSE below `threshold`, ignoring
/// earlier crossings. Diagnostic companion to valid_prediction_time.
double valid_prediction_time_setmax(std::span<const double> nmse,
                                    double lambda1, double dt,
                                    double threshold);

/// Median (midpoint rule for even counts) and median absolute deviation.
EnsembleStat median_mad(std::span<const double> samples);

double median(std::vector<double> samples);

}  // namespace rcnet
