#pragma once

#include <variant>
#include <vector>

#include "lds/model.hpp"

namespace lds {

/// Affine state estimator s = W * feat + b, where feat stacks the p
/// earliest samples of a trajectory followed by their p time stamps
/// (dimension m*p + p).
struct EstimatorParams {
  RealMatrix W;  // n x (m*p + p)
  RealVector b;  // n
  int p = 1;
};

/// Known initial states; never touched by training.
struct FixedStates {
  std::vector<RealVector> states;  // indexed by trajectory id
};

/// Per-trajectory initial-state variables optimized alongside A and C.
struct LearnedStates {
  std::vector<RealVector> states;  // indexed by trajectory id
};

/// Initial states produced by the estimator; training optimizes (W, b).
/// reg_weight is the weight of the quadratic penalty on the estimator
/// parameters (zero disables it).
struct EstimatedStates {
  EstimatorParams phi;
  double reg_weight = 0.0;
};

using InitialStateMode = std::variant<FixedStates, LearnedStates, EstimatedStates>;

enum class InitStateKind { Fixed, Learned, Estimated };

InitStateKind mode_kind(const InitialStateMode& mode);

/// Feature vector of the p earliest timestamped samples.
RealVector estimator_features(const Trajectory& traj, int p);

/// The initial state a mode assigns to a trajectory: the stored vector for
/// Fixed/Learned, W*feat(traj)+b for Estimated.
RealVector resolve_initial_state(const InitialStateMode& mode,
                                 const Trajectory& traj);

/// All resolved initial states of a dataset, in trajectory order.
std::vector<RealVector> resolve_initial_states(const InitialStateMode& mode,
                                               const Dataset& dataset);

/// mu * (||W||_F^2 + ||b||^2). Independent of A and C by construction.
double estimator_loss(const EstimatorParams& phi, double mu);

/// Least-squares fit of each trajectory's first sample through C (via
/// pseudo-inverse); the zero vector where C provides no information. Used
/// to seed Learned mode.
std::vector<RealVector> least_squares_initial_states(const Dataset& dataset,
                                                     const RealMatrix& C);

/// Zero-initialized estimator of the right shape for a dataset.
EstimatorParams zero_estimator(int state_dim, int output_dim, int p);

}  // namespace lds
