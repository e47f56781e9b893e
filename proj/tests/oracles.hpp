#pragma once

// Test-side oracles, independent of the library's computational paths.

#include <vector>

#include "lds/loss.hpp"

namespace oracles {

// Truncated power series sum_{k=0..terms} (At)^k / k!.
lds::RealMatrix taylor_mat_exp(const lds::RealMatrix& a, double t, int terms);

// Central-difference directional derivative of the matrix exponential:
// (e^{(A+hE)t} - e^{(A-hE)t}) / (2h), evaluated with the Taylor oracle.
lds::RealMatrix fd_mat_exp_frechet(const lds::RealMatrix& a,
                                   const lds::RealMatrix& e, double t,
                                   double h, int terms);

// Characteristic polynomial coefficients by Faddeev-LeVerrier:
// p(x) = x^n + c[1] x^{n-1} + ... + c[n].
std::vector<double> char_poly(const lds::RealMatrix& a);

// All real roots of a polynomial with real coefficients (leading 1),
// found by sign-change scanning plus bisection inside [-bound, bound].
std::vector<double> real_roots(const std::vector<double>& coeffs,
                               double bound, int grid = 20000);

// Flattened parameter coordinates shared with residual_jacobian: vec(A)
// row-major, then vec(C) row-major when include_c, then mode blocks.
int coordinate_count(const lds::Dataset& dataset,
                     const lds::SystemParams& params,
                     const lds::InitialStateMode& mode, bool include_c);
void add_to_coordinate(lds::SystemParams& params, lds::InitialStateMode& mode,
                       bool include_c, int index, double delta);

// Finite-difference Hessian of 0.5 * loss_value in the flattened active
// coordinates (second-order central differences).
lds::RealMatrix fd_half_loss_hessian(const lds::Dataset& dataset,
                                     const lds::SystemParams& params,
                                     const lds::InitialStateMode& mode,
                                     const lds::LossSpec& spec, bool include_c,
                                     double h);

}  // namespace oracles
