#include "lds/loss.hpp"

#include <cmath>
#include <vector>

namespace lds {

namespace {

constexpr double kOverflowLimit = 1e150;

}  // namespace

void LossSpec::validate() const {
  if (kind == LossKind::TimeWeightedLog && !(epsilon > 0.0)) {
    throw ContractError("time-weighted log loss requires epsilon > 0");
  }
}

double f_eps(double xi, double eps) {
  if (!(eps > 0.0)) throw ContractError("f_eps requires eps > 0");
  return std::copysign(std::log1p(std::abs(xi) / eps), xi);
}

double f_eps_derivative(double xi, double eps) {
  if (!(eps > 0.0)) throw ContractError("f_eps requires eps > 0");
  return 1.0 / (eps + std::abs(xi));
}

double GradientBundle::squared_norm() const {
  double total = dA.squaredNorm() + dC.squaredNorm();
  if (d_states) {
    for (const auto& g : *d_states) total += g.squaredNorm();
  }
  if (d_phi) total += d_phi->dW.squaredNorm() + d_phi->db.squaredNorm();
  return total;
}

void GradientBundle::scale(double factor) {
  dA *= factor;
  dC *= factor;
  if (d_states) {
    for (auto& g : *d_states) g *= factor;
  }
  if (d_phi) {
    d_phi->dW *= factor;
    d_phi->db *= factor;
  }
}

bool GradientBundle::all_finite() const {
  if (!dA.allFinite() || !dC.allFinite()) return false;
  if (d_states) {
    for (const auto& g : *d_states) {
      if (!g.allFinite()) return false;
    }
  }
  if (d_phi && (!d_phi->dW.allFinite() || !d_phi->db.allFinite())) {
    return false;
  }
  return true;
}

namespace {

// Cached forward pass of one trajectory. Continuous time chains interval
// exponentials z_i = e^{A dt_i} z_{i-1}; discrete time walks the integer
// lattice so the backward pass can reuse every intermediate state.
struct TrajectoryForward {
  std::vector<RealVector> states;      // z at each sample time
  std::vector<RealMatrix> intervals;   // continuous: e^{A dt_i}
  std::vector<RealVector> lattice;     // discrete: z at 0..t_last
  RealMatrix predictions;              // one row per sample
};

TrajectoryForward forward_pass(const Trajectory& traj,
                               const SystemParams& params,
                               const RealVector& initial, TimeKind kind) {
  if (initial.size() != params.A.rows()) {
    throw DimensionError("initial state dimension mismatch");
  }
  TrajectoryForward fwd;
  const int samples = traj.sample_count();
  fwd.predictions.resize(samples, params.C.rows());
  fwd.states.reserve(static_cast<size_t>(samples));

  auto check = [&](const RealVector& y, const RealVector& z, double t) {
    if (!z.allFinite() || !y.allFinite() ||
        y.cwiseAbs().maxCoeff() > kOverflowLimit) {
      throw PredictionOverflow(traj.id, t);
    }
  };

  if (kind == TimeKind::Continuous) {
    fwd.intervals.reserve(static_cast<size_t>(samples));
    RealVector z = initial;
    double prev = 0.0;
    for (int i = 0; i < samples; ++i) {
      const double t = traj.times[static_cast<size_t>(i)];
      RealMatrix step = mat_exp(params.A, t - prev);
      z = step * z;
      const RealVector y = params.C * z;
      check(y, z, t);
      fwd.intervals.push_back(std::move(step));
      fwd.states.push_back(z);
      fwd.predictions.row(i) = y.transpose();
      prev = t;
    }
  } else {
    const auto last = static_cast<long long>(traj.times.back());
    fwd.lattice.reserve(static_cast<size_t>(last) + 1);
    fwd.lattice.push_back(initial);
    int next_sample = 0;
    for (long long u = 1; u <= last; ++u) {
      RealVector z = params.A * fwd.lattice.back();
      if (!z.allFinite()) {
        throw PredictionOverflow(traj.id, static_cast<double>(u));
      }
      fwd.lattice.push_back(std::move(z));
      if (next_sample < samples &&
          traj.times[static_cast<size_t>(next_sample)] ==
              static_cast<double>(u)) {
        const RealVector y = params.C * fwd.lattice.back();
        check(y, fwd.lattice.back(), static_cast<double>(u));
        fwd.states.push_back(fwd.lattice.back());
        fwd.predictions.row(next_sample) = y.transpose();
        ++next_sample;
      }
    }
  }
  return fwd;
}

// dL/dy for one sample row.
RealVector sample_adjoint(const RealVector& y, const RealVector& x, double t,
                          const LossSpec& spec) {
  if (spec.kind == LossKind::SquaredError) {
    return 2.0 * (y - x);
  }
  const double w = 1.0 / (t * t);
  RealVector r(y.size());
  for (Eigen::Index j = 0; j < y.size(); ++j) {
    const double diff = f_eps(y(j), spec.epsilon) - f_eps(x(j), spec.epsilon);
    r(j) = 2.0 * w * diff * f_eps_derivative(y(j), spec.epsilon);
  }
  return r;
}

double sample_loss(const RealVector& y, const RealVector& x, double t,
                   const LossSpec& spec) {
  if (spec.kind == LossKind::SquaredError) {
    return (y - x).squaredNorm();
  }
  double acc = 0.0;
  for (Eigen::Index j = 0; j < y.size(); ++j) {
    const double diff = f_eps(y(j), spec.epsilon) - f_eps(x(j), spec.epsilon);
    acc += diff * diff;
  }
  return acc / (t * t);
}

}  // namespace

double trajectory_loss(const Trajectory& traj, const SystemParams& params,
                       const RealVector& initial, const LossSpec& spec,
                       TimeKind kind) {
  const TrajectoryForward fwd = forward_pass(traj, params, initial, kind);
  double total = 0.0;
  for (int i = 0; i < traj.sample_count(); ++i) {
    total += sample_loss(fwd.predictions.row(i).transpose(),
                         traj.samples.row(i).transpose(),
                         traj.times[static_cast<size_t>(i)], spec);
  }
  return total;
}

TrajectoryGradient trajectory_loss_gradient(const Trajectory& traj,
                                            const SystemParams& params,
                                            const RealVector& initial,
                                            const LossSpec& spec,
                                            TimeKind kind) {
  const TrajectoryForward fwd = forward_pass(traj, params, initial, kind);
  const Eigen::Index n = params.A.rows();
  const int samples = traj.sample_count();

  TrajectoryGradient grad;
  grad.loss = 0.0;
  grad.dA = RealMatrix::Zero(n, n);
  grad.dC = RealMatrix::Zero(params.C.rows(), n);

  std::vector<RealVector> adjoints(static_cast<size_t>(samples));
  for (int i = 0; i < samples; ++i) {
    const RealVector y = fwd.predictions.row(i).transpose();
    const RealVector x = traj.samples.row(i).transpose();
    const double t = traj.times[static_cast<size_t>(i)];
    grad.loss += sample_loss(y, x, t, spec);
    adjoints[static_cast<size_t>(i)] = sample_adjoint(y, x, t, spec);
    grad.dC += adjoints[static_cast<size_t>(i)] *
               fwd.states[static_cast<size_t>(i)].transpose();
  }

  // Reverse accumulation of the state adjoint; each propagation step
  // deposits its A-gradient contribution on the way down to t = 0.
  RealVector a = RealVector::Zero(n);
  if (kind == TimeKind::Continuous) {
    double prev;
    for (int i = samples - 1; i >= 0; --i) {
      a += params.C.transpose() * adjoints[static_cast<size_t>(i)];
      prev = i > 0 ? traj.times[static_cast<size_t>(i - 1)] : 0.0;
      const double dt = traj.times[static_cast<size_t>(i)] - prev;
      const RealVector& below =
          i > 0 ? fwd.states[static_cast<size_t>(i - 1)] : initial;
      grad.dA += mat_exp_gradient(params.A, a * below.transpose(), dt);
      a = fwd.intervals[static_cast<size_t>(i)].transpose() * a;
    }
  } else {
    const auto last = static_cast<long long>(traj.times.back());
    int i = samples - 1;
    for (long long u = last; u >= 1; --u) {
      if (i >= 0 &&
          traj.times[static_cast<size_t>(i)] == static_cast<double>(u)) {
        a += params.C.transpose() * adjoints[static_cast<size_t>(i)];
        --i;
      }
      grad.dA += a * fwd.lattice[static_cast<size_t>(u - 1)].transpose();
      a = params.A.transpose() * a;
    }
  }
  grad.d_state = a;
  return grad;
}

double loss_value(const Dataset& dataset, const SystemParams& params,
                  const InitialStateMode& init, const LossSpec& spec) {
  dataset.validate();
  params.validate();
  spec.validate();
  double total = 0.0;
  for (const auto& traj : dataset.trajectories) {
    total += trajectory_loss(traj, params,
                             resolve_initial_state(init, traj), spec,
                             dataset.time_kind);
  }
  return total;
}

GradientBundle loss_gradient(const Dataset& dataset,
                             const SystemParams& params,
                             const InitialStateMode& init,
                             const LossSpec& spec) {
  dataset.validate();
  params.validate();
  spec.validate();
  const Eigen::Index n = params.A.rows();

  GradientBundle bundle;
  bundle.dA = RealMatrix::Zero(n, n);
  bundle.dC = RealMatrix::Zero(params.C.rows(), n);
  const InitStateKind kind = mode_kind(init);
  if (kind == InitStateKind::Learned) {
    const auto& learned = std::get<LearnedStates>(init);
    bundle.d_states.emplace(learned.states.size(), RealVector::Zero(n));
  } else if (kind == InitStateKind::Estimated) {
    const auto& est = std::get<EstimatedStates>(init);
    bundle.d_phi.emplace();
    bundle.d_phi->dW = RealMatrix::Zero(est.phi.W.rows(), est.phi.W.cols());
    bundle.d_phi->db = RealVector::Zero(est.phi.b.size());
  }

  for (size_t k = 0; k < dataset.trajectories.size(); ++k) {
    const auto& traj = dataset.trajectories[k];
    TrajectoryGradient tg = trajectory_loss_gradient(
        traj, params, resolve_initial_state(init, traj), spec,
        dataset.time_kind);
    bundle.dA += tg.dA;
    bundle.dC += tg.dC;
    if (kind == InitStateKind::Learned) {
      (*bundle.d_states)[static_cast<size_t>(traj.id)] = tg.d_state;
    } else if (kind == InitStateKind::Estimated) {
      const auto& est = std::get<EstimatedStates>(init);
      const RealVector feat = estimator_features(traj, est.phi.p);
      bundle.d_phi->dW += tg.d_state * feat.transpose();
      bundle.d_phi->db += tg.d_state;
    }
  }
  return bundle;
}

GradientBundle fd_gradient_oracle(const Dataset& dataset,
                                  const SystemParams& params,
                                  const InitialStateMode& init,
                                  const LossSpec& spec, double h) {
  if (!(h > 0.0)) throw ContractError("fd_gradient_oracle requires h > 0");
  auto central = [&](auto&& mutate) {
    SystemParams p_plus = params;
    InitialStateMode m_plus = init;
    mutate(p_plus, m_plus, h);
    SystemParams p_minus = params;
    InitialStateMode m_minus = init;
    mutate(p_minus, m_minus, -h);
    return (loss_value(dataset, p_plus, m_plus, spec) -
            loss_value(dataset, p_minus, m_minus, spec)) /
           (2.0 * h);
  };

  GradientBundle bundle;
  const Eigen::Index n = params.A.rows();
  bundle.dA.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      bundle.dA(i, j) = central(
          [&](SystemParams& p, InitialStateMode&, double d) { p.A(i, j) += d; });
    }
  }
  bundle.dC.resize(params.C.rows(), n);
  for (Eigen::Index i = 0; i < params.C.rows(); ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      bundle.dC(i, j) = central(
          [&](SystemParams& p, InitialStateMode&, double d) { p.C(i, j) += d; });
    }
  }

  const InitStateKind kind = mode_kind(init);
  if (kind == InitStateKind::Learned) {
    const auto& learned = std::get<LearnedStates>(init);
    bundle.d_states.emplace(learned.states.size());
    for (size_t k = 0; k < learned.states.size(); ++k) {
      RealVector g(learned.states[k].size());
      for (Eigen::Index i = 0; i < g.size(); ++i) {
        g(i) = central([&](SystemParams&, InitialStateMode& m, double d) {
          std::get<LearnedStates>(m).states[k](i) += d;
        });
      }
      (*bundle.d_states)[k] = std::move(g);
    }
  } else if (kind == InitStateKind::Estimated) {
    const auto& est = std::get<EstimatedStates>(init);
    bundle.d_phi.emplace();
    bundle.d_phi->dW.resize(est.phi.W.rows(), est.phi.W.cols());
    for (Eigen::Index i = 0; i < est.phi.W.rows(); ++i) {
      for (Eigen::Index j = 0; j < est.phi.W.cols(); ++j) {
        bundle.d_phi->dW(i, j) =
            central([&](SystemParams&, InitialStateMode& m, double d) {
              std::get<EstimatedStates>(m).phi.W(i, j) += d;
            });
      }
    }
    bundle.d_phi->db.resize(est.phi.b.size());
    for (Eigen::Index i = 0; i < est.phi.b.size(); ++i) {
      bundle.d_phi->db(i) =
          central([&](SystemParams&, InitialStateMode& m, double d) {
            std::get<EstimatedStates>(m).phi.b(i) += d;
          });
    }
  }
  return bundle;
}

int active_parameter_count(const Dataset& dataset, const SystemParams& params,
                           const InitialStateMode& init, bool include_c) {
  const int n = params.state_dim();
  int count = n * n;
  if (include_c) count += params.output_dim() * n;
  const InitStateKind kind = mode_kind(init);
  if (kind == InitStateKind::Learned) {
    count += n * dataset.trajectory_count();
  } else if (kind == InitStateKind::Estimated) {
    const auto& est = std::get<EstimatedStates>(init);
    count += static_cast<int>(est.phi.W.size() + est.phi.b.size());
  }
  return count;
}

ResidualJacobian residual_jacobian(const Dataset& dataset,
                                   const SystemParams& params,
                                   const InitialStateMode& init,
                                   const LossSpec& spec, bool include_c) {
  dataset.validate();
  params.validate();
  spec.validate();
  const Eigen::Index n = params.A.rows();
  const Eigen::Index m = params.C.rows();
  const int cols = active_parameter_count(dataset, params, init, include_c);
  const int rows = dataset.total_samples() * static_cast<int>(m);
  const InitStateKind kind = mode_kind(init);

  ResidualJacobian out;
  out.jacobian = RealMatrix::Zero(rows, cols);
  out.residuals.resize(rows);

  int row = 0;
  for (const auto& traj : dataset.trajectories) {
    const RealVector initial = resolve_initial_state(init, traj);
    const TrajectoryForward fwd =
        forward_pass(traj, params, initial, dataset.time_kind);

    for (int i = 0; i < traj.sample_count(); ++i) {
      const double t = traj.times[static_cast<size_t>(i)];
      for (Eigen::Index j = 0; j < m; ++j) {
        const double y = fwd.predictions(i, j);
        const double x = traj.samples(i, j);
        double residual, scale;
        if (spec.kind == LossKind::SquaredError) {
          residual = y - x;
          scale = 1.0;
        } else {
          residual = (f_eps(y, spec.epsilon) - f_eps(x, spec.epsilon)) / t;
          scale = f_eps_derivative(y, spec.epsilon) / t;
        }
        out.residuals(row) = residual;

        // Backpropagate a one-hot output adjoint from sample i to t = 0.
        RealMatrix dA = RealMatrix::Zero(n, n);
        RealVector a = scale * params.C.row(j).transpose();
        if (dataset.time_kind == TimeKind::Continuous) {
          for (int u = i; u >= 0; --u) {
            const double below_t =
                u > 0 ? traj.times[static_cast<size_t>(u - 1)] : 0.0;
            const double dt = traj.times[static_cast<size_t>(u)] - below_t;
            const RealVector& below =
                u > 0 ? fwd.states[static_cast<size_t>(u - 1)] : initial;
            dA += mat_exp_gradient(params.A, a * below.transpose(), dt);
            a = fwd.intervals[static_cast<size_t>(u)].transpose() * a;
          }
        } else {
          const auto ti = static_cast<long long>(t);
          for (long long u = ti; u >= 1; --u) {
            dA += a * fwd.lattice[static_cast<size_t>(u - 1)].transpose();
            a = params.A.transpose() * a;
          }
        }

        int col = 0;
        for (Eigen::Index r = 0; r < n; ++r) {
          for (Eigen::Index c = 0; c < n; ++c) {
            out.jacobian(row, col++) = dA(r, c);
          }
        }
        if (include_c) {
          // y_j depends only on row j of C: d y_j / d C(j, c) = z_i(c).
          for (Eigen::Index r = 0; r < m; ++r) {
            for (Eigen::Index c = 0; c < n; ++c) {
              out.jacobian(row, col++) =
                  r == j ? scale * fwd.states[static_cast<size_t>(i)](c) : 0.0;
            }
          }
        }
        if (kind == InitStateKind::Learned) {
          col += static_cast<int>(n) * traj.id;
          for (Eigen::Index c = 0; c < n; ++c) {
            out.jacobian(row, col++) = a(c);
          }
        } else if (kind == InitStateKind::Estimated) {
          const auto& est = std::get<EstimatedStates>(init);
          const RealVector feat = estimator_features(traj, est.phi.p);
          const RealMatrix dW = a * feat.transpose();
          for (Eigen::Index r = 0; r < dW.rows(); ++r) {
            for (Eigen::Index c = 0; c < dW.cols(); ++c) {
              out.jacobian(row, col++) = dW(r, c);
            }
          }
          for (Eigen::Index c = 0; c < a.size(); ++c) {
            out.jacobian(row, col++) = a(c);
          }
        }
        ++row;
      }
    }
  }
  return out;
}

}  // namespace lds
