#include "lds/initstate.hpp"

#include <Eigen/QR>

namespace lds {

InitStateKind mode_kind(const InitialStateMode& mode) {
  if (std::holds_alternative<FixedStates>(mode)) return InitStateKind::Fixed;
  if (std::holds_alternative<LearnedStates>(mode)) {
    return InitStateKind::Learned;
  }
  return InitStateKind::Estimated;
}

RealVector estimator_features(const Trajectory& traj, int p) {
  if (p < 1) throw ContractError("estimator window p must be >= 1");
  if (traj.sample_count() < p) {
    throw DataError("trajectory " + std::to_string(traj.id) + " has fewer than " +
                    std::to_string(p) + " samples for the state estimator");
  }
  const int m = static_cast<int>(traj.samples.cols());
  RealVector feat(m * p + p);
  for (int i = 0; i < p; ++i) {
    feat.segment(i * m, m) = traj.samples.row(i).transpose();
  }
  for (int i = 0; i < p; ++i) {
    feat(m * p + i) = traj.times[static_cast<size_t>(i)];
  }
  return feat;
}

namespace {

const RealVector& stored_state(const std::vector<RealVector>& states,
                               const Trajectory& traj) {
  if (traj.id < 0 || traj.id >= static_cast<int>(states.size())) {
    throw DataError("no stored initial state for trajectory id " +
                    std::to_string(traj.id));
  }
  return states[static_cast<size_t>(traj.id)];
}

}  // namespace

RealVector resolve_initial_state(const InitialStateMode& mode,
                                 const Trajectory& traj) {
  if (const auto* fixed = std::get_if<FixedStates>(&mode)) {
    return stored_state(fixed->states, traj);
  }
  if (const auto* learned = std::get_if<LearnedStates>(&mode)) {
    return stored_state(learned->states, traj);
  }
  const auto& est = std::get<EstimatedStates>(mode);
  return est.phi.W * estimator_features(traj, est.phi.p) + est.phi.b;
}

std::vector<RealVector> resolve_initial_states(const InitialStateMode& mode,
                                               const Dataset& dataset) {
  std::vector<RealVector> out;
  out.reserve(dataset.trajectories.size());
  for (const auto& traj : dataset.trajectories) {
    out.push_back(resolve_initial_state(mode, traj));
  }
  return out;
}

double estimator_loss(const EstimatorParams& phi, double mu) {
  if (mu < 0.0) throw ContractError("estimator penalty weight must be >= 0");
  return mu * (phi.W.squaredNorm() + phi.b.squaredNorm());
}

std::vector<RealVector> least_squares_initial_states(const Dataset& dataset,
                                                     const RealMatrix& C) {
  Eigen::CompleteOrthogonalDecomposition<RealMatrix> cod(C);
  std::vector<RealVector> states(dataset.trajectories.size());
  for (const auto& traj : dataset.trajectories) {
    const RealVector x1 = traj.samples.row(0).transpose();
    states[static_cast<size_t>(traj.id)] = cod.solve(x1);
  }
  return states;
}

EstimatorParams zero_estimator(int state_dim, int output_dim, int p) {
  EstimatorParams phi;
  phi.p = p;
  phi.W = RealMatrix::Zero(state_dim, output_dim * p + p);
  phi.b = RealVector::Zero(state_dim);
  return phi;
}

}  // namespace lds
