#include <doctest.h>

#include "lds/initstate.hpp"
#include "lds/loss.hpp"

using namespace lds;

namespace {

Trajectory toy_trajectory(int id = 0) {
  Trajectory traj;
  traj.id = id;
  traj.times = {1.0, 2.0, 3.0};
  traj.samples.resize(3, 2);
  traj.samples << 1.0, 2.0, 3.0, 4.0, 5.0, 6.0;
  return traj;
}

}  // namespace

TEST_CASE("fixed mode returns the stored vector") {
  FixedStates fixed;
  RealVector s(2);
  s << 1.0, 0.0;
  fixed.states = {s};
  const RealVector got = resolve_initial_state(fixed, toy_trajectory());
  CHECK(got == s);
}

TEST_CASE("bias-only estimator returns its bias") {
  EstimatedStates est;
  est.phi = zero_estimator(2, 2, 1);
  est.phi.b << 3.0, 4.0;
  const RealVector got = resolve_initial_state(est, toy_trajectory());
  CHECK(got(0) == 3.0);
  CHECK(got(1) == 4.0);
}

TEST_CASE("estimator features stack earliest samples then their times") {
  const Trajectory traj = toy_trajectory();
  const RealVector feat = estimator_features(traj, 2);
  REQUIRE(feat.size() == 6);  // two samples of dim 2, then two times
  CHECK(feat(0) == 1.0);
  CHECK(feat(1) == 2.0);
  CHECK(feat(2) == 3.0);
  CHECK(feat(3) == 4.0);
  CHECK(feat(4) == 1.0);
  CHECK(feat(5) == 2.0);

  CHECK_THROWS_AS(estimator_features(traj, 4), DataError);
}

TEST_CASE("sample-selecting estimator composes with known dynamics") {
  // Discrete system with C = I: the first sample IS A s0, so an estimator
  // taking W = [I | 0] over (x(1), 1) must return exactly A s0.
  SystemParams params;
  params.A.resize(2, 2);
  params.A << 0.5, 0.2, -0.1, 0.9;
  params.C = RealMatrix::Identity(2, 2);
  RealVector s0(2);
  s0 << 1.0, -2.0;
  const Trajectory traj =
      simulate(params, s0, {1.0, 2.0}, TimeKind::Discrete);

  EstimatedStates est;
  est.phi = zero_estimator(2, 2, 1);
  est.phi.W.leftCols(2) = RealMatrix::Identity(2, 2);
  const RealVector got = resolve_initial_state(est, traj);
  CHECK((got - params.A * s0).norm() == 0.0);
}

TEST_CASE("estimator penalty is a plain quadratic") {
  EstimatorParams phi = zero_estimator(2, 1, 1);
  CHECK(estimator_loss(phi, 0.0) == 0.0);
  CHECK(estimator_loss(phi, 3.0) == 0.0);
  phi.W(0, 0) = 2.0;
  CHECK(estimator_loss(phi, 1.0) == 4.0);
  phi.b(1) = 3.0;
  CHECK(estimator_loss(phi, 2.0) == 2.0 * (4.0 + 9.0));
  CHECK_THROWS_AS(estimator_loss(phi, -1.0), ContractError);
}

TEST_CASE("the A-gradient block only sees the resolved initial states") {
  // Fixed, Learned and a bias-only Estimated mode that all resolve to the
  // same s_k must produce identical dA (and dC) blocks, away from any
  // equilibrium; at a zero-error equilibrium all three vanish.
  SystemParams truth;
  truth.A.resize(2, 2);
  truth.A << 0.5, 0.1, -0.2, 0.8;
  truth.C.resize(1, 2);
  truth.C << 1.0, 0.7;
  RealVector shared(2);
  shared << 0.9, -0.6;

  Dataset dataset;
  dataset.time_kind = TimeKind::Discrete;
  dataset.state_dim = 2;
  dataset.output_dim = 1;
  for (int k = 0; k < 2; ++k) {
    Trajectory traj =
        simulate(truth, shared, {1.0, 2.0, 3.0}, TimeKind::Discrete);
    traj.id = k;
    dataset.trajectories.push_back(traj);
  }

  FixedStates fixed;
  fixed.states = {shared, shared};
  LearnedStates learned;
  learned.states = {shared, shared};
  EstimatedStates est;
  est.phi = zero_estimator(2, 1, 1);
  est.phi.b = shared;

  SystemParams off_truth = truth;
  off_truth.A(0, 0) += 0.3;
  const LossSpec spec{LossKind::TimeWeightedLog, 1.0};
  const GradientBundle g_fixed = loss_gradient(dataset, off_truth, fixed, spec);
  const GradientBundle g_learned =
      loss_gradient(dataset, off_truth, learned, spec);
  const GradientBundle g_est = loss_gradient(dataset, off_truth, est, spec);
  CHECK((g_fixed.dA - g_learned.dA).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((g_fixed.dA - g_est.dA).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((g_fixed.dC - g_est.dC).cwiseAbs().maxCoeff() <= 1e-12);

  for (const InitialStateMode& mode :
       {InitialStateMode(fixed), InitialStateMode(learned),
        InitialStateMode(est)}) {
    const GradientBundle g = loss_gradient(dataset, truth, mode, spec);
    CHECK(g.dA.cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("least-squares seeding inverts C on its range") {
  SystemParams params;
  params.A = RealMatrix::Identity(2, 2);
  params.C.resize(2, 2);
  params.C << 2.0, 0.0, 0.0, 4.0;
  RealVector s0(2);
  s0 << 3.0, -1.0;
  Dataset dataset;
  dataset.time_kind = TimeKind::Discrete;
  dataset.state_dim = 2;
  dataset.output_dim = 2;
  dataset.trajectories = {simulate(params, s0, {1.0}, TimeKind::Discrete)};
  dataset.trajectories[0].id = 0;

  const auto states = least_squares_initial_states(dataset, params.C);
  // First sample is C A s0 = C s0 here (A = I), so the fit recovers s0.
  CHECK((states[0] - s0).norm() < 1e-12);

  const auto zeros =
      least_squares_initial_states(dataset, RealMatrix::Zero(2, 2));
  CHECK(zeros[0].norm() == 0.0);
}
