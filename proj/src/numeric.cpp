#include "lds/numeric.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace lds {

namespace {

void require_square_finite(const RealMatrix& a, const char* op) {
  if (a.rows() == 0 || a.rows() != a.cols()) {
    throw DimensionError(std::string(op) + ": matrix must be square, got " +
                         std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()));
  }
  if (!a.allFinite()) {
    throw NumericError(std::string(op) + ": matrix has non-finite entries");
  }
}

}  // namespace

RealMatrix mat_exp(const RealMatrix& a, double t) {
  require_square_finite(a, "mat_exp");
  if (!std::isfinite(t)) {
    throw NumericError("mat_exp: time must be finite");
  }
  return (a * t).exp();
}

RealMatrix mat_exp_frechet(const RealMatrix& a, const RealMatrix& e,
                           double t) {
  require_square_finite(a, "mat_exp_frechet");
  if (e.rows() != a.rows() || e.cols() != a.cols()) {
    throw DimensionError("mat_exp_frechet: direction shape mismatch");
  }
  if (!e.allFinite() || !std::isfinite(t)) {
    throw NumericError("mat_exp_frechet: non-finite input");
  }
  const Eigen::Index n = a.rows();
  RealMatrix block = RealMatrix::Zero(2 * n, 2 * n);
  block.topLeftCorner(n, n) = a;
  block.topRightCorner(n, n) = e;
  block.bottomRightCorner(n, n) = a;
  const RealMatrix big = (block * t).exp();
  return big.topRightCorner(n, n);
}

RealMatrix mat_exp_gradient(const RealMatrix& a, const RealMatrix& g,
                            double t) {
  return mat_exp_frechet(a.transpose(), g, t);
}

ComplexSpectrum eigen_decompose(const RealMatrix& a) {
  require_square_finite(a, "eigen_decompose");
  const Eigen::Index n = a.rows();

  Eigen::EigenSolver<RealMatrix> right_solver(a, true);
  if (right_solver.info() != Eigen::Success) {
    throw NumericError("eigen_decompose: QR iteration did not converge");
  }
  Eigen::EigenSolver<RealMatrix> left_solver(a.transpose(), true);
  if (left_solver.info() != Eigen::Success) {
    throw NumericError(
        "eigen_decompose: QR iteration on transpose did not converge");
  }

  const ComplexVector lambdas = right_solver.eigenvalues();
  const ComplexMatrix u_all = right_solver.eigenvectors();
  // A^T w = mu w  implies  (conj w)^H A = mu (conj w)^H, so the left
  // eigenvector candidates are the conjugated eigenvectors of A^T.
  const ComplexMatrix v_all = left_solver.eigenvectors().conjugate();
  const ComplexVector v_lambdas = left_solver.eigenvalues();

  std::vector<int> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int i, int j) {
    const auto li = lambdas(i);
    const auto lj = lambdas(j);
    if (li.real() != lj.real()) return li.real() > lj.real();
    return li.imag() > lj.imag();
  });

  ComplexSpectrum spec;
  spec.eigenvalues.resize(n);
  spec.right_eigenvectors.resize(n, n);
  spec.left_eigenvectors.resize(n, n);

  // Pair each right eigenvector with the unused left candidate maximizing
  // |v^H u|; biorthogonality zeroes the product across distinct eigenvalues.
  std::vector<bool> used(static_cast<size_t>(n), false);
  for (Eigen::Index slot = 0; slot < n; ++slot) {
    const int i = order[static_cast<size_t>(slot)];
    spec.eigenvalues(slot) = lambdas(i);
    ComplexVector u = u_all.col(i);
    u /= u.norm();
    int best = -1;
    double best_score = -1.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (used[static_cast<size_t>(j)]) continue;
      const double score = std::abs(v_all.col(j).dot(u));
      if (score > best_score) {
        best_score = score;
        best = static_cast<int>(j);
      }
    }
    ComplexVector v = v_all.col(best);
    v /= v.norm();
    used[static_cast<size_t>(best)] = true;
    spec.right_eigenvectors.col(slot) = u;
    spec.left_eigenvectors.col(slot) = v;
    (void)v_lambdas;
  }

  spec.residual_tol = 1e-9 * std::max(1.0, a.norm());
  double worst = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const std::complex<double> lam = spec.eigenvalues(k);
    const ComplexVector u = spec.right_eigenvectors.col(k);
    const ComplexVector v = spec.left_eigenvectors.col(k);
    worst = std::max(worst, (a * u - lam * u).norm());
    worst = std::max(worst, (v.adjoint() * a - lam * v.adjoint()).norm());
  }
  spec.max_residual = worst;
  return spec;
}

ComplexVector eigenvalues_only(const RealMatrix& a) {
  require_square_finite(a, "eigenvalues_only");
  Eigen::EigenSolver<RealMatrix> solver(a, false);
  if (solver.info() != Eigen::Success) {
    throw NumericError("eigenvalues_only: QR iteration did not converge");
  }
  ComplexVector lambdas = solver.eigenvalues();
  std::sort(lambdas.data(), lambdas.data() + lambdas.size(),
            [](const std::complex<double>& x, const std::complex<double>& y) {
              if (x.real() != y.real()) return x.real() > y.real();
              return x.imag() > y.imag();
            });
  return lambdas;
}

std::pair<double, double> symmetric_extremal_eig(const RealMatrix& s) {
  require_square_finite(s, "symmetric_extremal_eig");
  const double asym = (s - s.transpose()).norm();
  if (asym > 1e-12 * std::max(1.0, s.norm())) {
    throw ContractError("symmetric_extremal_eig: input is not symmetric "
                        "(relative asymmetry above 1e-12)");
  }
  Eigen::SelfAdjointEigenSolver<RealMatrix> solver(s,
                                                   Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw NumericError("symmetric_extremal_eig: iteration did not converge");
  }
  const RealVector& ev = solver.eigenvalues();
  return {ev(0), ev(ev.size() - 1)};
}

}  // namespace lds
