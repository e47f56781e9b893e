#pragma once

#include <optional>
#include <vector>

#include "lds/initstate.hpp"
#include "lds/model.hpp"

namespace lds {

enum class LossKind { SquaredError, TimeWeightedLog };

struct LossSpec {
  LossKind kind = LossKind::SquaredError;
  double epsilon = 1.0;  // only used by TimeWeightedLog
  void validate() const;
};

/// Signed logarithmic transform: log(eps+xi)-log(eps) for xi >= 0 and the
/// odd reflection for xi < 0. Odd, strictly increasing, 1/eps-Lipschitz.
double f_eps(double xi, double eps);

/// d/dxi f_eps = 1/(eps + |xi|); both branches meet at xi = 0.
double f_eps_derivative(double xi, double eps);

struct EstimatorGradient {
  RealMatrix dW;
  RealVector db;
};

/// Gradient blocks for the active parameter set. dA and dC are always
/// present; exactly one of d_states (Learned) or d_phi (Estimated) is set,
/// neither in Fixed mode.
struct GradientBundle {
  RealMatrix dA;
  RealMatrix dC;
  std::optional<std::vector<RealVector>> d_states;
  std::optional<EstimatorGradient> d_phi;

  double squared_norm() const;
  void scale(double factor);
  bool all_finite() const;
};

/// Training objective over the dataset:
///   SquaredError:    sum_k sum_t ||x_k(t) - y_k(t)||^2
///   TimeWeightedLog: sum_k sum_t sum_j t^-2 (F_eps(x_kj) - F_eps(y_kj))^2
/// with y_k(t) = C e^{At} s_k (Continuous) or C A^t s_k (Discrete) and s_k
/// resolved through the initial-state mode. Throws PredictionOverflow when
/// a prediction exceeds 1e150 in magnitude or leaves the finite range.
double loss_value(const Dataset& dataset, const SystemParams& params,
                  const InitialStateMode& init, const LossSpec& spec);

/// Exact analytic gradient of loss_value for the active parameter set.
/// The A block is assembled from matrix-exponential directional-derivative
/// adjoints (Continuous) or reverse accumulation through the repeated
/// multiplications of A^t (Discrete). Reduction order is fixed (ascending
/// trajectory, then ascending time), so results are bit-reproducible.
GradientBundle loss_gradient(const Dataset& dataset,
                             const SystemParams& params,
                             const InitialStateMode& init,
                             const LossSpec& spec);

/// Central-difference approximation of loss_value in every active
/// parameter coordinate. Verification oracle; O(coordinate count) loss
/// evaluations.
GradientBundle fd_gradient_oracle(const Dataset& dataset,
                                  const SystemParams& params,
                                  const InitialStateMode& init,
                                  const LossSpec& spec, double h);

/// Single-trajectory engine backing loss_value/loss_gradient and the
/// trainer's per-trajectory batching. d_state is the gradient with respect
/// to this trajectory's initial state.
struct TrajectoryGradient {
  double loss = 0.0;
  RealMatrix dA;
  RealMatrix dC;
  RealVector d_state;
};

double trajectory_loss(const Trajectory& traj, const SystemParams& params,
                       const RealVector& initial, const LossSpec& spec,
                       TimeKind kind);

TrajectoryGradient trajectory_loss_gradient(const Trajectory& traj,
                                            const SystemParams& params,
                                            const RealVector& initial,
                                            const LossSpec& spec,
                                            TimeKind kind);

/// Jacobian of the scalar residuals f_i with loss_value = sum_i f_i^2:
///   SquaredError:    f = e_j^T (y_k(t) - x_k(t))
///   TimeWeightedLog: f = t^-1 (F_eps(e_j^T y_k(t)) - F_eps(e_j^T x_k(t)))
/// One row per (trajectory, time, output coordinate), ascending; columns
/// are the flattened active parameters: vec(A) row-major, then vec(C)
/// row-major when include_c, then per-mode blocks (states ascending k, or
/// W row-major followed by b).
struct ResidualJacobian {
  RealMatrix jacobian;
  RealVector residuals;
};

ResidualJacobian residual_jacobian(const Dataset& dataset,
                                   const SystemParams& params,
                                   const InitialStateMode& init,
                                   const LossSpec& spec, bool include_c);

/// Number of flattened active parameters (the Jacobian's column count).
int active_parameter_count(const Dataset& dataset, const SystemParams& params,
                           const InitialStateMode& init, bool include_c);

}  // namespace lds
