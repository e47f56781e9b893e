#include "lds/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace lds {

namespace {

constexpr double kSingularRel = 1e-12;

void check_states_times(const std::vector<RealVector>& init_states,
                        const std::vector<std::vector<double>>& sample_times,
                        Eigen::Index n) {
  if (init_states.empty() || init_states.size() != sample_times.size()) {
    throw DimensionError(
        "bounds: need one initial state and one time list per trajectory");
  }
  for (const auto& s : init_states) {
    if (s.size() != n) throw DimensionError("bounds: state dimension mismatch");
  }
  for (const auto& times : sample_times) {
    for (double t : times) {
      if (!(t > 0.0)) throw ContractError("bounds: sample times must be > 0");
    }
  }
}

// Gram matrix sum_k c_k s_k s_k^T, symmetrized.
RealMatrix weighted_gram(const std::vector<RealVector>& states,
                         const std::vector<double>& coeffs) {
  const Eigen::Index n = states.front().size();
  RealMatrix gram = RealMatrix::Zero(n, n);
  for (size_t k = 0; k < states.size(); ++k) {
    gram += coeffs[k] * (states[k] * states[k].transpose());
  }
  return 0.5 * (gram + gram.transpose());
}

// lambda_min with a relative singularity verdict.
struct GramEig {
  double min_eig = 0.0;
  bool singular = true;
};

GramEig gram_min_eig(const RealMatrix& gram) {
  const auto [lo, hi] = symmetric_extremal_eig(gram);
  GramEig out;
  out.min_eig = lo;
  out.singular = !(lo > kSingularRel * std::max(1.0, std::abs(hi)));
  return out;
}

double continuous_alpha(std::complex<double> lambda, TimeKind kind) {
  if (kind == TimeKind::Continuous) return lambda.real();
  return std::log(std::abs(lambda));
}

}  // namespace

TopMode top_mode(const SystemParams& params_hat, TimeKind kind) {
  params_hat.validate();
  const ComplexSpectrum spec = eigen_decompose(params_hat.A);
  TopMode top;
  top.spectrum_warning = !spec.well_conditioned();

  const Eigen::Index n = spec.eigenvalues.size();
  double best = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    best = std::max(best, continuous_alpha(spec.eigenvalues(i), kind));
  }
  top.alpha = best;

  // All eigenvectors attaining the top growth rate compete for rho^2.
  const double tol = 1e-8 * std::max(1.0, std::abs(best));
  bool first = true;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (continuous_alpha(spec.eigenvalues(i), kind) < best - tol) continue;
    if (first) {
      top.lambda = spec.eigenvalues(i);
      first = false;
    }
    const double r =
        (params_hat.C * spec.right_eigenvectors.col(i)).squaredNorm();
    top.rho_sq = std::max(top.rho_sq, r);
  }
  return top;
}

BoundReport theorem1_bound(const SystemParams& params_hat,
                           const std::vector<RealVector>& init_states,
                           const std::vector<std::vector<double>>& sample_times,
                           TimeKind kind) {
  check_states_times(init_states, sample_times, params_hat.A.rows());
  const TopMode top = top_mode(params_hat, kind);

  std::vector<double> coeffs(init_states.size(), 0.0);
  for (size_t k = 0; k < init_states.size(); ++k) {
    double acc = 0.0;
    for (double t : sample_times[k]) {
      acc += t * t * std::exp(2.0 * top.alpha * t);
    }
    coeffs[k] = top.rho_sq * acc;
  }
  RealMatrix gram = weighted_gram(init_states, coeffs);
  if (!gram.allFinite()) {
    throw NumericError("theorem1_bound: Gram weights overflow");
  }
  const GramEig eig = gram_min_eig(gram);

  BoundReport report;
  report.lambda_top = top.lambda;
  report.lambda_top_alpha = top.alpha;
  report.rho_sq = top.rho_sq;
  report.gram_min_eig = eig.min_eig;
  report.spectrum_warning = top.spectrum_warning;
  report.theorem1_delta_max =
      eig.singular ? std::numeric_limits<double>::infinity()
                   : 2.0 / eig.min_eig;
  return report;
}

BoundReport theorem2_bound(const SystemParams& params_hat,
                           const std::vector<RealVector>& init_states,
                           const std::vector<std::vector<double>>& sample_times,
                           TimeKind kind, double epsilon) {
  if (!(epsilon > 0.0)) throw ContractError("theorem2_bound: epsilon > 0");
  check_states_times(init_states, sample_times, params_hat.A.rows());
  const TopMode top = top_mode(params_hat, kind);
  const Eigen::Index n = params_hat.A.rows();

  // e^{2 alpha t} / (||C e^{At} s||_inf + eps)^2 rewritten with the
  // growth-normalized propagator so neither factor overflows at large t:
  //   weight = rho^2 / (||C P(t) s||_inf + eps*decay(t))^2,
  // P(t) = e^{(A - alpha I)t} or (A/r)^t, decay(t) = e^{-alpha t} or r^-t.
  std::vector<double> coeffs(init_states.size(), 0.0);
  for (size_t k = 0; k < init_states.size(); ++k) {
    double acc = 0.0;
    if (kind == TimeKind::Continuous) {
      const RealMatrix shifted =
          params_hat.A - top.alpha * RealMatrix::Identity(n, n);
      double prev = 0.0;
      RealVector z = init_states[k];
      std::vector<double> times = sample_times[k];
      std::sort(times.begin(), times.end());
      for (double t : times) {
        z = mat_exp(shifted, t - prev) * z;
        prev = t;
        const double y_inf = (params_hat.C * z).cwiseAbs().maxCoeff();
        const double q = y_inf + epsilon * std::exp(-top.alpha * t);
        if (!std::isfinite(q)) {
          throw NumericError("theorem2_bound: non-finite prediction weight");
        }
        const double w = top.rho_sq / (q * q);
        acc += w;
      }
    } else {
      const double radius = std::exp(top.alpha);
      const RealMatrix scaled = params_hat.A / radius;
      double prev = 0.0;
      RealVector z = init_states[k];
      std::vector<double> times = sample_times[k];
      std::sort(times.begin(), times.end());
      for (double t : times) {
        const auto steps = static_cast<long long>(t - prev);
        for (long long s = 0; s < steps; ++s) z = scaled * z;
        prev = t;
        const double y_inf = (params_hat.C * z).cwiseAbs().maxCoeff();
        const double q = y_inf + epsilon * std::pow(radius, -t);
        if (!std::isfinite(q)) {
          throw NumericError("theorem2_bound: non-finite prediction weight");
        }
        acc += top.rho_sq / (q * q);
      }
    }
    coeffs[k] = acc;
  }
  RealMatrix gram = weighted_gram(init_states, coeffs);
  if (!gram.allFinite()) {
    throw NumericError("theorem2_bound: Gram weights overflow");
  }
  const GramEig eig = gram_min_eig(gram);

  BoundReport report;
  report.lambda_top = top.lambda;
  report.lambda_top_alpha = top.alpha;
  report.rho_sq = top.rho_sq;
  report.gram_min_eig = eig.min_eig;
  report.spectrum_warning = top.spectrum_warning;
  report.theorem2_delta_max =
      eig.singular ? std::numeric_limits<double>::infinity()
                   : 2.0 / eig.min_eig;
  return report;
}

SpectrumBound corollary1_bound(const RealMatrix& a_hat, double delta,
                               const std::vector<RealVector>& init_states,
                               const std::vector<std::vector<double>>& sample_times,
                               TimeKind kind) {
  if (!(delta > 0.0)) throw ContractError("corollary1_bound: delta > 0");
  check_states_times(init_states, sample_times, a_hat.rows());

  const ComplexVector lambdas = eigenvalues_only(a_hat);
  double alpha = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < lambdas.size(); ++i) {
    alpha = std::max(alpha, continuous_alpha(lambdas(i), kind));
  }

  std::set<double> unique_times;
  for (const auto& times : sample_times) {
    unique_times.insert(times.begin(), times.end());
  }
  const std::vector<double> grid(unique_times.begin(), unique_times.end());

  auto window_min_eig = [&](double lo, double hi) {
    std::vector<double> counts(init_states.size(), 0.0);
    for (size_t k = 0; k < init_states.size(); ++k) {
      for (double t : sample_times[k]) {
        if (t >= lo && t <= hi) counts[k] += 1.0;
      }
    }
    return gram_min_eig(weighted_gram(init_states, counts));
  };

  SpectrumBound bound;
  bound.unstable_branch = alpha >= 0.0;
  bound.re_lambda_upper = std::numeric_limits<double>::infinity();

  if (bound.unstable_branch) {
    for (double tau : grid) {
      const GramEig eig = window_min_eig(tau, std::numeric_limits<double>::max());
      if (eig.singular) continue;
      const double value =
          std::log(2.0 / (delta * tau * tau * eig.min_eig)) / (2.0 * tau);
      if (value < bound.re_lambda_upper) {
        bound.re_lambda_upper = value;
        bound.tau_star = tau;
        bound.applicable = true;
      }
    }
  } else {
    for (size_t i = 0; i < grid.size(); ++i) {
      for (size_t j = i + 1; j < grid.size(); ++j) {
        const double tau1 = grid[i];
        const double tau2 = grid[j];
        const GramEig eig = window_min_eig(tau1, tau2);
        if (eig.singular) continue;
        const double value =
            std::log(2.0 / (delta * tau1 * tau1 * eig.min_eig)) / (2.0 * tau2);
        if (value < bound.re_lambda_upper) {
          bound.re_lambda_upper = value;
          bound.tau1_star = tau1;
          bound.tau2_star = tau2;
          bound.applicable = true;
        }
      }
    }
  }
  return bound;
}

RealMatrix gauss_newton_hessian(const Dataset& dataset,
                                const SystemParams& params_hat,
                                const InitialStateMode& init_mode,
                                const LossSpec& spec, bool include_c) {
  const double residual_loss = loss_value(dataset, params_hat, init_mode, spec);
  if (!(residual_loss <= 1e-12)) {
    throw ContractError(
        "gauss_newton_hessian requires a zero-residual point (loss <= 1e-12), "
        "got loss = " + std::to_string(residual_loss));
  }
  const ResidualJacobian rj =
      residual_jacobian(dataset, params_hat, init_mode, spec, include_c);
  RealMatrix h = rj.jacobian.transpose() * rj.jacobian;
  return 0.5 * (h + h.transpose());
}

double condition_ratio(const SystemParams& params_hat,
                       const std::vector<RealVector>& init_states,
                       const std::vector<std::vector<double>>& sample_times,
                       TimeKind kind, std::complex<double> lambda1,
                       std::complex<double> lambda2) {
  check_states_times(init_states, sample_times, params_hat.A.rows());
  const ComplexSpectrum spec = eigen_decompose(params_hat.A);
  const double scale =
      std::max(1.0, spec.eigenvalues.cwiseAbs().maxCoeff());

  auto rho_for = [&](std::complex<double> lambda) {
    double rho_sq = -1.0;
    for (Eigen::Index i = 0; i < spec.eigenvalues.size(); ++i) {
      if (std::abs(spec.eigenvalues(i) - lambda) <= 1e-8 * scale) {
        rho_sq = std::max(
            rho_sq,
            (params_hat.C * spec.right_eigenvectors.col(i)).squaredNorm());
      }
    }
    if (rho_sq < 0.0) {
      throw ContractError("condition_ratio: value is not an eigenvalue of A");
    }
    return rho_sq;
  };

  auto gram_for = [&](std::complex<double> lambda, double rho_sq) {
    const double alpha = continuous_alpha(lambda, kind);
    std::vector<double> coeffs(init_states.size(), 0.0);
    for (size_t k = 0; k < init_states.size(); ++k) {
      double acc = 0.0;
      for (double t : sample_times[k]) {
        acc += t * t * std::exp(2.0 * alpha * t);
      }
      coeffs[k] = rho_sq * acc;
    }
    return weighted_gram(init_states, coeffs);
  };

  const double rho1 = rho_for(lambda1);
  const double rho2 = rho_for(lambda2);
  const auto [num_min, num_max] = symmetric_extremal_eig(gram_for(lambda1, rho1));
  const auto [den_min, den_max] = symmetric_extremal_eig(gram_for(lambda2, rho2));
  (void)num_max;
  (void)den_min;
  if (den_max <= 0.0) return std::numeric_limits<double>::infinity();
  return num_min / den_max;
}

std::optional<double> iteration_estimate(double delta, double lambda_min_h,
                                         double eps_accuracy,
                                         double initial_dist) {
  const double product = delta * lambda_min_h;
  if (!(product > 0.0)) {
    throw ContractError("iteration_estimate requires delta*lambda_min > 0");
  }
  if (!(eps_accuracy > 0.0) || !(initial_dist > 0.0)) {
    throw ContractError("iteration_estimate requires positive eps and d0");
  }
  if (product >= 1.0) return std::nullopt;
  return (std::log(1.0 / eps_accuracy) + std::log(initial_dist)) /
         std::log(1.0 / (1.0 - product));
}

}  // namespace lds
