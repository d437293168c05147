#pragma once

#include <cstddef>
#include <span>

#include <Eigen/Dense>

#include "rcnet/random.hpp"
#include "rcnet/topology.hpp"

namespace rcnet {

struct ReservoirConfig {
  int n_r = 1024;
  double epsilon = 0.7;  // leaking rate
  double rho_opt = 1.25;
  double gamma = 1e-9;  // Tikhonov parameter
  int n0 = 500;         // washout
  int n1 = 2000;        // training
  int n2 = 2000;        // prediction
  double input_scale = 0.5;
  double density = 0.008;
  bool dense_products = false;

  void validate() const;
};

using InputMatrix = Eigen::MatrixXd;
using ReservoirState = Eigen::VectorXd;

/// Trained linear readout, rows = output dimension.
struct TrainedReadout {
  Eigen::MatrixXd w_out;
  double gamma_used = 0.0;
  double train_mse = 0.0;

  double predict(const ReservoirState& r) const { return w_out.row(0).dot(r); }
};

InputMatrix init_input_matrix(int n_r, int dim, double scale, Rng& rng);

/// One leaky-tanh update: (1-eps) r + eps tanh(W r + W_in u).
ReservoirState step(const ReservoirState& r, const Eigen::VectorXd& u,
                    const SparseMatrix& w, const InputMatrix& w_in,
                    double epsilon);
ReservoirState step(const ReservoirState& r, const Eigen::VectorXd& u,
                    const Eigen::MatrixXd& w, const InputMatrix& w_in,
                    double epsilon);

/// A fixed reservoir and input coupling driven by a scalar input. Holds a
/// reference to the topology's matrix, which must outlive the network.
class EchoStateNetwork {
 public:
  EchoStateNetwork(const ReservoirTopology& topology, InputMatrix w_in,
                   double epsilon, bool dense_products = false);

  int size() const noexcept { return static_cast<int>(w_in_.rows()); }
  double epsilon() const noexcept { return epsilon_; }
  const InputMatrix& input_matrix() const noexcept { return w_in_; }

  /// Advances `r` in place by one step with scalar input `u`.
  void advance(ReservoirState& r, double u) const;

 private:
  const SparseMatrix* sparse_;
  Eigen::MatrixXd dense_;
  InputMatrix w_in_;
  Eigen::VectorXd w_in_col_;
  double epsilon_;
  bool use_dense_;
};

/// Training-phase states. Row t holds the state that absorbed
/// drive[first_input + t] and is paired with target drive[first_target + t].
struct StateCollection {
  Eigen::MatrixXd states;
  Eigen::VectorXd targets;
  std::size_t first_input = 0;
  std::size_t first_target = 0;
  ReservoirState final_state;
};

StateCollection collect_states(const EchoStateNetwork& esn,
                               std::span<const double> drive,
                               const ReservoirConfig& cfg,
                               const ReservoirState* initial = nullptr);

/// Ridge regression w_out = U^T R (R^T R + gamma I)^-1 with rows = time.
TrainedReadout train_readout(const Eigen::MatrixXd& states,
                             const Eigen::MatrixXd& targets, double gamma);

/// Predictions fed with true inputs. Continues from `state` (the final
/// training state); input drive[start + m] yields the prediction of
/// drive[start + m + 1], for m in [0, n2).
Eigen::VectorXd predict_open_loop(const TrainedReadout& readout,
                                  const EchoStateNetwork& esn,
                                  ReservoirState state,
                                  std::span<const double> drive,
                                  std::size_t start, int n2);

/// Autonomous rollout. The first step is driven by `primer`; every later
/// step is driven by the previous prediction.
Eigen::VectorXd predict_closed_loop(const TrainedReadout& readout,
                                    const EchoStateNetwork& esn,
                                    ReservoirState warm_state, double primer,
                                    int n2);

/// Max component gap between two runs from different initial states after
/// `steps` updates with the same drive.
double echo_state_gap(const EchoStateNetwork& esn,
                      std::span<const double> drive, int steps,
                      const ReservoirState& a, const ReservoirState& b);

}  // namespace rcnet
