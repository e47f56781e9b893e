#pragma once

#include <Eigen/Dense>
#include <complex>
#include <utility>

#include "lds/error.hpp"

namespace lds {

using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

/// Full complex spectrum of a real square matrix with paired unit-norm
/// right and left eigenvectors (columns). Eigenvalues are sorted by
/// descending real part, ties broken by descending imaginary part, so the
/// rightmost eigenvalue is always index 0.
struct ComplexSpectrum {
  ComplexVector eigenvalues;
  ComplexMatrix right_eigenvectors;  // A u = lambda u
  ComplexMatrix left_eigenvectors;   // v^H A = lambda v^H

  // Worst residual over all pairs, and the tolerance it was checked
  // against (1e-9 * max(1, ||A||_F)). A spectrum that fails the check is
  // still returned; callers that care (the bound calculators) inspect
  // well_conditioned().
  double max_residual = 0.0;
  double residual_tol = 0.0;

  bool well_conditioned() const { return max_residual <= residual_tol; }
  double spectral_abscissa() const { return eigenvalues(0).real(); }
  double spectral_radius() const { return eigenvalues.cwiseAbs().maxCoeff(); }
};

/// e^{At} by scaling-and-squaring with a Pade core.
RealMatrix mat_exp(const RealMatrix& a, double t);

/// Directional derivative d/dh e^{(A+hE)t} at h = 0, via the 2n x 2n
/// block-augmentation identity: exp([[A,E],[0,A]] t) carries the
/// derivative in its top-right block. Linear in E.
RealMatrix mat_exp_frechet(const RealMatrix& a, const RealMatrix& e,
                           double t);

/// Adjoint of the map E -> mat_exp_frechet(A, E, t) applied to G, i.e. the
/// gradient of A -> <G, e^{At}> in the Frobenius inner product. Equals
/// mat_exp_frechet(A^T, G, t).
RealMatrix mat_exp_gradient(const RealMatrix& a, const RealMatrix& g,
                            double t);

/// Complex eigendecomposition of a real square matrix (Hessenberg + shifted
/// QR under the hood). Left eigenvectors are obtained from the transposed
/// problem and paired with right eigenvectors by maximal |v^H u|.
ComplexSpectrum eigen_decompose(const RealMatrix& a);

/// Eigenvalues alone, in the same sort order as eigen_decompose. Cheaper
/// when no eigenvectors are needed (per-iteration traces).
ComplexVector eigenvalues_only(const RealMatrix& a);

/// (lambda_min, lambda_max) of a symmetric matrix. Rejects matrices whose
/// relative asymmetry exceeds 1e-12.
std::pair<double, double> symmetric_extremal_eig(const RealMatrix& s);

}  // namespace lds
