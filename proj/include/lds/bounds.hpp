#pragma once

#include <complex>
#include <optional>
#include <vector>

#include "lds/loss.hpp"

namespace lds {

/// Learning-rate caps around a zero-error equilibrium. delta values are
/// +infinity when the weighted initial-state Gram matrix is singular (the
/// bound is void). lambda_top is the rightmost eigenvalue in the raw
/// parametrization; lambda_top_alpha is its continuous-time real part
/// (log|lambda| for discrete systems). spectrum_warning is set when the
/// eigendecomposition residuals exceed tolerance (near-defective matrix).
struct BoundReport {
  std::optional<double> theorem1_delta_max;
  std::optional<double> theorem2_delta_max;
  std::complex<double> lambda_top;
  double lambda_top_alpha = 0.0;
  double rho_sq = 0.0;
  double gram_min_eig = 0.0;
  bool spectrum_warning = false;
};

/// Certified upper bound on the real part of the rightmost eigenvalue of a
/// converged estimate (C = I regime). The unstable branch minimizes over
/// single cutoff times; the stable branch over time pairs.
struct SpectrumBound {
  double re_lambda_upper = 0.0;
  bool unstable_branch = true;
  double tau_star = 0.0;               // unstable branch minimizer
  double tau1_star = 0.0;              // stable branch minimizers
  double tau2_star = 0.0;
  bool applicable = false;
};

/// 2 / lambda_min(rho^2 sum_k sum_t t^2 e^{2 Re(L) t} s_k s_k^T).
/// Discrete systems enter the continuous formulas through the principal
/// logarithm of the spectrum: e^{2 Re(L) t} becomes |lambda|^{2t}.
BoundReport theorem1_bound(const SystemParams& params_hat,
                           const std::vector<RealVector>& init_states,
                           const std::vector<std::vector<double>>& sample_times,
                           TimeKind kind);

/// 2 / lambda_min(sum_k sum_t rho^2 e^{2 Re(L) t} /
///                (||C e^{At} s_k||_inf + eps)^2 s_k s_k^T).
/// Weights are evaluated in a spectrally shifted form so that large t does
/// not overflow e^{At}.
BoundReport theorem2_bound(const SystemParams& params_hat,
                           const std::vector<RealVector>& init_states,
                           const std::vector<std::vector<double>>& sample_times,
                           TimeKind kind, double epsilon);

SpectrumBound corollary1_bound(const RealMatrix& a_hat, double delta,
                               const std::vector<RealVector>& init_states,
                               const std::vector<std::vector<double>>& sample_times,
                               TimeKind kind);

/// Gauss-Newton Hessian sum_i grad f_i grad f_i^T over all scalar
/// residuals, valid at a zero-residual point (loss <= 1e-12 required).
/// Coordinates follow residual_jacobian's flattened layout.
RealMatrix gauss_newton_hessian(const Dataset& dataset,
                                const SystemParams& params_hat,
                                const InitialStateMode& init_mode,
                                const LossSpec& spec, bool include_c = true);

/// lambda_min(rho1^2 sum t^2 e^{2 Re(l1) t} s s^T) /
/// lambda_max(rho2^2 sum t^2 e^{2 Re(l2) t} s s^T): a certified lower bound
/// on the Hessian condition number. Both eigenvalues must belong to the
/// spectrum of A_hat (to 1e-8).
double condition_ratio(const SystemParams& params_hat,
                       const std::vector<RealVector>& init_states,
                       const std::vector<std::vector<double>>& sample_times,
                       TimeKind kind, std::complex<double> lambda1,
                       std::complex<double> lambda2);

/// Iteration lower bound for the quadratic model:
/// (log(1/eps) + log(d0)) / log(1/(1 - delta*lambda_min)).
/// Empty when delta*lambda_min >= 1 (the estimate does not apply).
std::optional<double> iteration_estimate(double delta, double lambda_min_h,
                                         double eps_accuracy,
                                         double initial_dist);

/// Shared spectral quantities of the theorem bounds.
struct TopMode {
  std::complex<double> lambda;  // raw rightmost eigenvalue
  double alpha = 0.0;           // continuous-time real part
  double rho_sq = 0.0;          // max ||C u||^2 over the top eigenvectors
  bool spectrum_warning = false;
};

TopMode top_mode(const SystemParams& params_hat, TimeKind kind);

}  // namespace lds
