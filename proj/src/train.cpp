#include "lds/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace lds {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ContractError("learning_rate must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw ContractError("momentum must lie in [0, 1)");
  }
  if (!(clip_threshold > 0.0)) throw ContractError("clip_threshold must be > 0");
  if (max_iters < 1) throw ContractError("max_iters must be >= 1");
  if (!(divergence_factor > 1.0)) {
    throw ContractError("divergence_factor must be > 1");
  }
  loss.validate();
}

std::string to_string(TrainStatusKind kind) {
  switch (kind) {
    case TrainStatusKind::Converged: return "converged";
    case TrainStatusKind::IterCapReached: return "iter_cap_reached";
    case TrainStatusKind::Diverged: return "diverged";
  }
  return "unknown";
}

GradientBundle clip_gradient(GradientBundle g, double threshold) {
  if (!(threshold > 0.0)) throw ContractError("clip threshold must be > 0");
  const double norm = std::sqrt(g.squared_norm());
  if (norm > threshold) g.scale(threshold / norm);
  return g;
}

namespace {

constexpr double kConvergenceLoss = 1e-12;

// Momentum state shaped like the active parameter set.
struct Velocity {
  RealMatrix vA;
  RealMatrix vC;
  std::vector<RealVector> v_states;
  RealMatrix vW;
  RealVector vb;
};

double clip_factor(double squared_norm, double threshold) {
  const double norm = std::sqrt(squared_norm);
  return norm > threshold ? threshold / norm : 1.0;
}

}  // namespace

TrainResult train(const Dataset& dataset, const SystemParams& init_params,
                  const TrainConfig& config, const ProgressCallback& progress) {
  dataset.validate();
  init_params.validate();
  config.validate();

  const Eigen::Index n = init_params.A.rows();
  SystemParams params = init_params;
  InitialStateMode mode = config.init_mode;
  const InitStateKind kind = mode_kind(mode);

  // Learned mode starts at the least-squares fit of each first sample
  // through the initial C unless states were supplied explicitly.
  if (kind == InitStateKind::Learned) {
    auto& learned = std::get<LearnedStates>(mode);
    if (learned.states.empty()) {
      learned.states = least_squares_initial_states(dataset, params.C);
    }
  }
  double reg_weight = 0.0;
  std::vector<RealVector> features;
  if (kind == InitStateKind::Estimated) {
    auto& est = std::get<EstimatedStates>(mode);
    if (est.phi.W.size() == 0) {
      est.phi = zero_estimator(static_cast<int>(n),
                               dataset.output_dim, est.phi.p);
    }
    reg_weight = est.reg_weight;
    features.reserve(dataset.trajectories.size());
    for (const auto& traj : dataset.trajectories) {
      features.push_back(estimator_features(traj, est.phi.p));
    }
  }

  Velocity vel;
  vel.vA = RealMatrix::Zero(n, n);
  vel.vC = RealMatrix::Zero(params.C.rows(), n);
  if (kind == InitStateKind::Learned) {
    vel.v_states.assign(std::get<LearnedStates>(mode).states.size(),
                        RealVector::Zero(n));
  } else if (kind == InitStateKind::Estimated) {
    const auto& est = std::get<EstimatedStates>(mode);
    vel.vW = RealMatrix::Zero(est.phi.W.rows(), est.phi.W.cols());
    vel.vb = RealVector::Zero(est.phi.b.size());
  }

  std::seed_seq seq{config.seed, config.batch.shuffle_seed};
  std::mt19937_64 shuffle_rng(seq);
  std::vector<int> order(dataset.trajectories.size());
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  result.status = {TrainStatusKind::IterCapReached, config.max_iters};

  auto total_loss = [&]() {
    double value = loss_value(dataset, params, mode, config.loss);
    if (kind == InitStateKind::Estimated && reg_weight > 0.0) {
      value += estimator_loss(std::get<EstimatedStates>(mode).phi, reg_weight);
    }
    return value;
  };

  double initial_loss = -1.0;
  const double mom = config.momentum;
  const double lr = config.learning_rate;

  for (int it = 0;; ++it) {
    double loss;
    try {
      loss = total_loss();
    } catch (const NumericError&) {
      result.status = {TrainStatusKind::Diverged, it};
      break;
    }
    result.loss_curve.push_back(loss);
    result.eigen_trace.push_back(eigenvalues_only(params.A));
    if (initial_loss < 0.0) initial_loss = loss;
    if (progress) progress(it, loss);

    if (loss <= kConvergenceLoss) {
      result.status = {TrainStatusKind::Converged, it};
      break;
    }
    if (loss > config.divergence_factor * initial_loss ||
        !std::isfinite(loss)) {
      result.status = {TrainStatusKind::Diverged, it};
      break;
    }
    if (it == config.max_iters) {
      result.status = {TrainStatusKind::IterCapReached, it};
      break;
    }

    try {
      if (config.batch.kind == BatchKind::FullBatch) {
        GradientBundle g = loss_gradient(dataset, params, mode, config.loss);
        if (kind == InitStateKind::Estimated && reg_weight > 0.0) {
          const auto& est = std::get<EstimatedStates>(mode);
          g.d_phi->dW += 2.0 * reg_weight * est.phi.W;
          g.d_phi->db += 2.0 * reg_weight * est.phi.b;
        }
        if (!config.update_c) g.dC.setZero();
        g = clip_gradient(std::move(g), config.clip_threshold);

        vel.vA = mom * vel.vA + g.dA;
        params.A -= lr * vel.vA;
        if (config.update_c) {
          vel.vC = mom * vel.vC + g.dC;
          params.C -= lr * vel.vC;
        }
        if (kind == InitStateKind::Learned) {
          auto& states = std::get<LearnedStates>(mode).states;
          for (size_t k = 0; k < states.size(); ++k) {
            vel.v_states[k] = mom * vel.v_states[k] + (*g.d_states)[k];
            states[k] -= lr * vel.v_states[k];
          }
        } else if (kind == InitStateKind::Estimated) {
          auto& est = std::get<EstimatedStates>(mode);
          vel.vW = mom * vel.vW + g.d_phi->dW;
          vel.vb = mom * vel.vb + g.d_phi->db;
          est.phi.W -= lr * vel.vW;
          est.phi.b -= lr * vel.vb;
        }
      } else {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        for (int k : order) {
          const auto& traj = dataset.trajectories[static_cast<size_t>(k)];
          TrajectoryGradient tg = trajectory_loss_gradient(
              traj, params, resolve_initial_state(mode, traj), config.loss,
              dataset.time_kind);
          if (!config.update_c) tg.dC.setZero();

          double sq = tg.dA.squaredNorm() + tg.dC.squaredNorm();
          RealMatrix dW;
          RealVector db;
          if (kind == InitStateKind::Learned) {
            sq += tg.d_state.squaredNorm();
          } else if (kind == InitStateKind::Estimated) {
            auto& est = std::get<EstimatedStates>(mode);
            dW = tg.d_state * features[static_cast<size_t>(k)].transpose();
            db = tg.d_state;
            if (reg_weight > 0.0) {
              // Spread the penalty gradient across the epoch's steps.
              const double share =
                  1.0 / static_cast<double>(dataset.trajectories.size());
              dW += 2.0 * reg_weight * share * est.phi.W;
              db += 2.0 * reg_weight * share * est.phi.b;
            }
            sq += dW.squaredNorm() + db.squaredNorm();
          }
          const double factor = clip_factor(sq, config.clip_threshold);

          vel.vA = mom * vel.vA + factor * tg.dA;
          params.A -= lr * vel.vA;
          if (config.update_c) {
            vel.vC = mom * vel.vC + factor * tg.dC;
            params.C -= lr * vel.vC;
          }
          if (kind == InitStateKind::Learned) {
            auto& states = std::get<LearnedStates>(mode).states;
            auto& vs = vel.v_states[static_cast<size_t>(traj.id)];
            vs = mom * vs + factor * tg.d_state;
            states[static_cast<size_t>(traj.id)] -= lr * vs;
          } else if (kind == InitStateKind::Estimated) {
            auto& est = std::get<EstimatedStates>(mode);
            vel.vW = mom * vel.vW + factor * dW;
            vel.vb = mom * vel.vb + factor * db;
            est.phi.W -= lr * vel.vW;
            est.phi.b -= lr * vel.vb;
          }
        }
      }
    } catch (const NumericError&) {
      result.status = {TrainStatusKind::Diverged, it};
      break;
    }
  }

  result.final_params = std::move(params);
  result.final_init = std::move(mode);
  return result;
}

}  // namespace lds
