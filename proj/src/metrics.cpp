#include "rcnet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rcnet/errors.hpp"

namespace rcnet {

namespace {

void check_pair(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size())
    throw ContractError("prediction and truth lengths differ");
  if (pred.empty()) throw ContractError("empty series");
}

}  // namespace

double mse(std::span<const double> pred, std::span<const double> truth) {
  check_pair(pred, truth);
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = truth[i] - pred[i];
    sum += e * e;
  }
  return sum / static_cast<double>(pred.size());
}

double variance(std::span<const double> xs) {
  if (xs.empty()) throw ContractError("empty series");
  const double mean =
      std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  double sum = 0.0;
  for (double x : xs) sum += (x - mean) * (x - mean);
  return sum / static_cast<double>(xs.size());
}

std::vector<double> nmse_series(std::span<const double> pred,
                                std::span<const double> truth, double sigma2) {
  check_pair(pred, truth);
  if (!(sigma2 > 0.0)) throw InputError("ground-truth variance must be positive");
  std::vector<double> out(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = truth[i] - pred[i];
    out[i] = e * e / sigma2;
  }
  return out;
}

double valid_prediction_time(std::span<const double> nmse, double lambda1,
                             double dt, double threshold) {
  if (nmse.empty()) throw ContractError("empty NMSE series");
  if (!(threshold > 0.0) || !(dt > 0.0))
    throw ParameterError("threshold and dt must be positive");
  // NaN compares false, so a non-finite step also ends the valid window.
  const auto first_bad = std::find_if(nmse.begin(), nmse.end(),
                                      [&](double v) { return !(v < threshold); });
  const auto valid_steps = static_cast<double>(first_bad - nmse.begin());
  return lambda1 * valid_steps * dt;
}

double valid_prediction_time_setmax(std::span<const double> nmse,
                                    double lambda1, double dt,
                                    double threshold) {
  if (nmse.empty()) throw ContractError("empty NMSE series");
  if (!(threshold > 0.0) || !(dt > 0.0))
    throw ParameterError("threshold and dt must be positive");
  for (std::size_t i = nmse.size(); i > 0; --i)
    if (nmse[i - 1] < threshold) return lambda1 * static_cast<double>(i) * dt;
  return 0.0;
}

double median(std::vector<double> samples) {
  if (samples.empty()) throw ContractError("median of an empty sample");
  const std::size_t n = samples.size();
  const auto mid = samples.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(samples.begin(), mid, samples.end());
  const double upper = *mid;
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(samples.begin(), mid);
  if (lower == upper) return upper;  // also keeps inf sentinels away from inf - inf
  return lower + (upper - lower) / 2.0;
}

EnsembleStat median_mad(std::span<const double> samples) {
  if (samples.empty()) throw ContractError("median of an empty sample");
  EnsembleStat stat;
  stat.n_samples = samples.size();
  stat.median = median({samples.begin(), samples.end()});
  std::vector<double> dev;
  dev.reserve(samples.size());
  // x == median covers infinite sentinels, where x - median would be NaN.
  for (double x : samples) dev.push_back(x == stat.median ? 0.0 : std::abs(x - stat.median));
  stat.mad = median(std::move(dev));
  return stat;
}

}  // namespace rcnet
