#include "rcnet/reservoir.hpp"

#include <cmath>
#include <string>

#include <Eigen/Cholesky>

#include "rcnet/errors.hpp"

namespace rcnet {

void ReservoirConfig::validate() const {
  if (n_r < 1) throw ParameterError("reservoir size must be positive");
  if (!(epsilon > 0.0 && epsilon <= 1.0))
    throw ParameterError("leaking rate must lie in (0, 1]");
  if (!(gamma >= 0.0)) throw ParameterError("gamma must be nonnegative");
  if (n0 < 1 || n1 < 1 || n2 < 1)
    throw ParameterError("n0, n1 and n2 must all be at least 1");
  if (!(input_scale > 0.0)) throw ParameterError("input scale must be positive");
  if (!(rho_opt > 0.0)) throw ParameterError("spectral radius must be positive");
}

InputMatrix init_input_matrix(int n_r, int dim, double scale, Rng& rng) {
  if (n_r < 1 || dim < 1) throw ParameterError("input matrix needs positive dimensions");
  if (!(scale > 0.0)) throw ParameterError("input scale must be positive");
  InputMatrix m(n_r, dim);
  for (int i = 0; i < n_r; ++i)
    for (int j = 0; j < dim; ++j) m(i, j) = uniform(rng, -scale, scale);
  return m;
}

namespace {

template <class Matrix>
ReservoirState step_impl(const ReservoirState& r, const Eigen::VectorXd& u,
                         const Matrix& w, const InputMatrix& w_in,
                         double epsilon) {
  if (w.rows() != r.size() || w.cols() != r.size() ||
      w_in.rows() != r.size() || w_in.cols() != u.size())
    throw ContractError("reservoir step dimension mismatch");
  const Eigen::VectorXd pre = w * r + w_in * u;
  return (1.0 - epsilon) * r + epsilon * pre.array().tanh().matrix();
}

}  // namespace

ReservoirState step(const ReservoirState& r, const Eigen::VectorXd& u,
                    const SparseMatrix& w, const InputMatrix& w_in,
                    double epsilon) {
  return step_impl(r, u, w, w_in, epsilon);
}

ReservoirState step(const ReservoirState& r, const Eigen::VectorXd& u,
                    const Eigen::MatrixXd& w, const InputMatrix& w_in,
                    double epsilon) {
  return step_impl(r, u, w, w_in, epsilon);
}

EchoStateNetwork::EchoStateNetwork(const ReservoirTopology& topology,
                                   InputMatrix w_in, double epsilon,
                                   bool dense_products)
    : sparse_(&topology.matrix),
      w_in_(std::move(w_in)),
      epsilon_(epsilon),
      use_dense_(dense_products) {
  if (w_in_.rows() != topology.size() || w_in_.cols() != 1)
    throw ContractError("input matrix must be N_r x 1 for a scalar drive");
  if (!(epsilon > 0.0 && epsilon <= 1.0))
    throw ParameterError("leaking rate must lie in (0, 1]");
  w_in_col_ = w_in_.col(0);
  if (use_dense_) dense_ = Eigen::MatrixXd(topology.matrix);
}

void EchoStateNetwork::advance(ReservoirState& r, double u) const {
  Eigen::VectorXd pre(r.size());
  if (use_dense_)
    pre.noalias() = dense_ * r;
  else
    pre.noalias() = *sparse_ * r;
  pre += u * w_in_col_;
  r = (1.0 - epsilon_) * r + epsilon_ * pre.array().tanh().matrix();
}

StateCollection collect_states(const EchoStateNetwork& esn,
                               std::span<const double> drive,
                               const ReservoirConfig& cfg,
                               const ReservoirState* initial) {
  if (cfg.n0 < 1 || cfg.n1 < 1) throw ContractError("n0 and n1 must be at least 1");
  const auto n0 = static_cast<std::size_t>(cfg.n0);
  const auto n1 = static_cast<std::size_t>(cfg.n1);
  if (drive.size() < n0 + n1 + 1)
    throw ContractError("drive has " + std::to_string(drive.size()) +
                        " samples, need at least n0 + n1 + 1 = " +
                        std::to_string(n0 + n1 + 1));

  ReservoirState r = initial ? *initial : ReservoirState::Zero(esn.size());
  for (std::size_t k = 0; k < n0; ++k) esn.advance(r, drive[k]);

  StateCollection out;
  out.states.resize(static_cast<Eigen::Index>(n1), esn.size());
  out.targets.resize(static_cast<Eigen::Index>(n1));
  out.first_input = n0;
  out.first_target = n0 + 1;
  for (std::size_t t = 0; t < n1; ++t) {
    esn.advance(r, drive[n0 + t]);
    out.states.row(static_cast<Eigen::Index>(t)) = r.transpose();
    out.targets(static_cast<Eigen::Index>(t)) = drive[n0 + t + 1];
  }
  out.final_state = std::move(r);
  return out;
}

TrainedReadout train_readout(const Eigen::MatrixXd& states,
                             const Eigen::MatrixXd& targets, double gamma) {
  if (states.rows() != targets.rows())
    throw ContractError("state and target row counts differ");
  if (states.rows() == 0) throw ContractError("empty training set");
  if (!(gamma >= 0.0)) throw ParameterError("gamma must be nonnegative");

  const Eigen::Index n = states.cols();
  Eigen::MatrixXd normal = Eigen::MatrixXd::Zero(n, n);
  normal.selfadjointView<Eigen::Lower>().rankUpdate(states.transpose());
  normal.diagonal().array() += gamma;
  Eigen::LLT<Eigen::MatrixXd> llt(normal.selfadjointView<Eigen::Lower>());
  if (llt.info() != Eigen::Success)
    throw SolverError(
        "normal matrix is not positive definite; use gamma > 0");

  TrainedReadout out;
  out.w_out = llt.solve(states.transpose() * targets).transpose();
  if (!out.w_out.allFinite())
    throw SolverError("readout solve produced non-finite weights; use gamma > 0");
  out.gamma_used = gamma;
  const Eigen::MatrixXd residual = states * out.w_out.transpose() - targets;
  out.train_mse = residual.squaredNorm() / static_cast<double>(residual.size());
  return out;
}

Eigen::VectorXd predict_open_loop(const TrainedReadout& readout,
                                  const EchoStateNetwork& esn,
                                  ReservoirState state,
                                  std::span<const double> drive,
                                  std::size_t start, int n2) {
  if (n2 < 1) throw ContractError("prediction window must be positive");
  const auto n = static_cast<std::size_t>(n2);
  if (drive.size() < start + n + 1)
    throw ContractError("drive too short for the open-loop window");
  Eigen::VectorXd out(n2);
  for (std::size_t m = 0; m < n; ++m) {
    esn.advance(state, drive[start + m]);
    out(static_cast<Eigen::Index>(m)) = readout.predict(state);
  }
  return out;
}

Eigen::VectorXd predict_closed_loop(const TrainedReadout& readout,
                                    const EchoStateNetwork& esn,
                                    ReservoirState warm_state, double primer,
                                    int n2) {
  if (n2 < 1) throw ContractError("prediction window must be positive");
  Eigen::VectorXd out(n2);
  double input = primer;
  for (int m = 0; m < n2; ++m) {
    esn.advance(warm_state, input);
    input = readout.predict(warm_state);
    if (!std::isfinite(input))
      throw DivergenceError("closed-loop rollout diverged",
                            static_cast<std::size_t>(m) + 1);
    out(m) = input;
  }
  return out;
}

double echo_state_gap(const EchoStateNetwork& esn,
                      std::span<const double> drive, int steps,
                      const ReservoirState& a, const ReservoirState& b) {
  if (steps < 0 || drive.size() < static_cast<std::size_t>(steps))
    throw ContractError("drive shorter than the requested step count");
  ReservoirState ra = a;
  ReservoirState rb = b;
  for (int k = 0; k < steps; ++k) {
    esn.advance(ra, drive[static_cast<std::size_t>(k)]);
    esn.advance(rb, drive[static_cast<std::size_t>(k)]);
  }
  return (ra - rb).cwiseAbs().maxCoeff();
}

}  // namespace rcnet
