#pragma once

// Dense helpers shared by every module: error type, tolerance set, numerical
// rank with a mandatory spectral-gap check, kernels, intersections and
// signatures of symmetric forms.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>

namespace specflow {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;

inline constexpr const char* kVersion = "0.1.0";

enum class ErrorCode {
  InvalidArgument,
  DimensionMismatch,
  NotSymmetric,
  NotOrthonormal,
  NumericallyAmbiguous,
  NotLagrangian,
  NotAGraph,
  UnitarityFailure,
  NotClosed,
  RefinementExhausted,
  EndpointNotTransverse,
  TransversalityViolated,
  ParityViolation,
  NotIsotropic,
  NotClean,
  NotNested,
  SingularOperator,
  SingularEndpoint,
  NonIsolatedSingularity,
  DegenerateCrossing,
  BranchAmbiguity,
  CertificateFailure,
  SuspensionBudgetExceeded,
  TransversalityLost,
  AmbientTooSmall,
  NewtonDiverged,
};

inline const char* toString(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::NotOrthonormal: return "NotOrthonormal";
    case ErrorCode::NumericallyAmbiguous: return "NumericallyAmbiguous";
    case ErrorCode::NotLagrangian: return "NotLagrangian";
    case ErrorCode::NotAGraph: return "NotAGraph";
    case ErrorCode::UnitarityFailure: return "UnitarityFailure";
    case ErrorCode::NotClosed: return "NotClosed";
    case ErrorCode::RefinementExhausted: return "RefinementExhausted";
    case ErrorCode::EndpointNotTransverse: return "EndpointNotTransverse";
    case ErrorCode::TransversalityViolated: return "TransversalityViolated";
    case ErrorCode::ParityViolation: return "ParityViolation";
    case ErrorCode::NotIsotropic: return "NotIsotropic";
    case ErrorCode::NotClean: return "NotClean";
    case ErrorCode::NotNested: return "NotNested";
    case ErrorCode::SingularOperator: return "SingularOperator";
    case ErrorCode::SingularEndpoint: return "SingularEndpoint";
    case ErrorCode::NonIsolatedSingularity: return "NonIsolatedSingularity";
    case ErrorCode::DegenerateCrossing: return "DegenerateCrossing";
    case ErrorCode::BranchAmbiguity: return "BranchAmbiguity";
    case ErrorCode::CertificateFailure: return "CertificateFailure";
    case ErrorCode::SuspensionBudgetExceeded: return "SuspensionBudgetExceeded";
    case ErrorCode::TransversalityLost: return "TransversalityLost";
    case ErrorCode::AmbientTooSmall: return "AmbientTooSmall";
    case ErrorCode::NewtonDiverged: return "NewtonDiverged";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(toString(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Numerical thresholds used across the library. Defaults are the values the
/// test and acceptance suites are pinned against.
struct Tolerances {
  double orth = 1e-10;       // frame orthonormality
  double lagr = 1e-9;        // isotropy of Lagrangian frames
  double gap = 1e-8;         // projector-gap equality of subspaces
  double rank = 1e-8;        // singular-value cutoff, relative to the largest
  double sym = 1e-10;        // symmetry of input matrices (relative)
  double ambiguityBand = 1e3;  // required empty spectral band around `rank`
  double invRel = 1e-8;      // invertibility, relative to endpoint spectra
  double loc = 1e-10;        // localisation of singular parameters
  double nd = 1e-6;          // crossing-form nondegeneracy
  double pathGap = 0.05;     // max projector gap between consecutive samples
  int maxRefine = 20;        // bisection levels for path refinement
};

inline const Tolerances& defaultTolerances() {
  static const Tolerances t{};
  return t;
}

inline void requireSameRows(const Matrix& a, const Matrix& b, const char* where) {
  if (a.rows() != b.rows()) {
    throw Error(ErrorCode::DimensionMismatch,
                std::string(where) + ": ambient dimensions " + std::to_string(a.rows()) +
                    " and " + std::to_string(b.rows()));
  }
}

inline double relativeAsymmetry(const Matrix& a) {
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  return (a - a.transpose()).cwiseAbs().maxCoeff() / scale;
}

inline void requireSymmetric(const Matrix& a, const Tolerances& tol, const char* where) {
  if (a.rows() != a.cols()) {
    throw Error(ErrorCode::DimensionMismatch, std::string(where) + ": matrix is not square");
  }
  if (a.size() > 0 && relativeAsymmetry(a) > tol.sym) {
    throw Error(ErrorCode::NotSymmetric, std::string(where) + ": asymmetry " +
                                             std::to_string(relativeAsymmetry(a)));
  }
}

inline Matrix symmetrize(const Matrix& a) { return 0.5 * (a + a.transpose()); }

/// Rank decision on the singular spectrum `sv` (sorted descending) with the
/// gap check: no normalised singular value may fall inside the band
/// (rank / sqrt(band), rank * sqrt(band)). A positive `scale` replaces the
/// largest singular value as the normalisation.
inline int decideRank(const Vector& sv, const Tolerances& tol, const char* where,
                      double scale = 0.0) {
  if (sv.size() == 0) return 0;
  const double smax = scale > 0.0 ? scale : sv(0);
  if (!(smax > 0.0)) return 0;
  const double halfBand = std::sqrt(tol.ambiguityBand);
  const double lo = tol.rank / halfBand;
  const double hi = tol.rank * halfBand;
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    const double s = sv(i) / smax;
    if (s > lo && s < hi) {
      throw Error(ErrorCode::NumericallyAmbiguous,
                  std::string(where) + ": normalised singular value " + std::to_string(s) +
                      " inside the rank ambiguity band");
    }
    if (s > tol.rank) ++r;
  }
  return r;
}

struct SvdResult {
  Matrix u;
  Vector s;
  Matrix v;
};

inline SvdResult svd(const Matrix& a, bool full = false) {
  const unsigned opts = full ? (Eigen::ComputeFullU | Eigen::ComputeFullV)
                             : (Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (std::min(a.rows(), a.cols()) > 32) {
    Eigen::BDCSVD<Matrix> solver(a, opts);
    return {solver.matrixU(), solver.singularValues(), solver.matrixV()};
  }
  Eigen::JacobiSVD<Matrix> solver(a, opts);
  return {solver.matrixU(), solver.singularValues(), solver.matrixV()};
}

inline int numericalRank(const Matrix& a, const Tolerances& tol = defaultTolerances(),
                         const char* where = "numericalRank") {
  if (a.size() == 0) return 0;
  return decideRank(svd(a).s, tol, where);
}

/// Orthonormal basis of the column span of `a`.
inline Matrix orthonormalSpan(const Matrix& a, const Tolerances& tol = defaultTolerances()) {
  if (a.cols() == 0) return Matrix(a.rows(), 0);
  const auto d = svd(a);
  const int r = decideRank(d.s, tol, "orthonormalSpan");
  return d.u.leftCols(r);
}

/// Orthonormal basis of the null space of `a` (columns in R^{a.cols()}).
inline Matrix nullSpace(const Matrix& a, const Tolerances& tol = defaultTolerances()) {
  const auto cols = a.cols();
  if (a.rows() == 0) return Matrix::Identity(cols, cols);
  if (cols == 0) return Matrix(0, 0);
  const auto d = svd(a, true);
  const int r = decideRank(d.s, tol, "nullSpace");
  return d.v.rightCols(cols - r);
}

/// Orthonormal basis of the orthogonal complement of span(basis) in R^rows.
inline Matrix orthogonalComplement(const Matrix& basis, const Tolerances& tol = defaultTolerances()) {
  if (basis.cols() == 0) return Matrix::Identity(basis.rows(), basis.rows());
  return nullSpace(basis.transpose(), tol);
}

/// Basis of span(a) ∩ span(b) for orthonormal frames a, b.
inline Matrix intersectionBasis(const Matrix& a, const Matrix& b,
                                const Tolerances& tol = defaultTolerances()) {
  requireSameRows(a, b, "intersectionBasis");
  if (a.cols() == 0 || b.cols() == 0) return Matrix(a.rows(), 0);
  Matrix stacked(a.rows(), a.cols() + b.cols());
  stacked << a, -b;
  const Matrix kernel = nullSpace(stacked, tol);
  if (kernel.cols() == 0) return Matrix(a.rows(), 0);
  return orthonormalSpan(a * kernel.topRows(a.cols()), tol);
}

inline Matrix projector(const Matrix& frame) { return frame * frame.transpose(); }

/// Smallest singular value of [a | b]; a transversality margin for frames.
inline double transversalityMargin(const Matrix& a, const Matrix& b) {
  Matrix stacked(a.rows(), a.cols() + b.cols());
  stacked << a, b;
  if (stacked.cols() > stacked.rows()) return 0.0;
  Eigen::JacobiSVD<Matrix> solver(stacked);
  return solver.singularValues()(stacked.cols() - 1);
}

/// Spectral-norm distance between the orthogonal projectors of two frames.
inline double gapDistance(const Matrix& a, const Matrix& b) {
  requireSameRows(a, b, "gapDistance");
  const Matrix diff = projector(a) - projector(b);
  Eigen::SelfAdjointEigenSolver<Matrix> es(diff, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

struct Inertia {
  int positive = 0;
  int negative = 0;
  int zero = 0;

  int signature() const { return positive - negative; }
};

/// Inertia of a symmetric matrix; eigenvalues with |e| <= threshold count as zero.
inline Inertia inertia(const Matrix& a, double threshold) {
  Inertia in;
  if (a.rows() == 0) return in;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(a), Eigen::EigenvaluesOnly);
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const double e = es.eigenvalues()(i);
    if (e > threshold) {
      ++in.positive;
    } else if (e < -threshold) {
      ++in.negative;
    } else {
      ++in.zero;
    }
  }
  return in;
}

inline double minAbsEigenvalue(const Matrix& a) {
  if (a.rows() == 0) return std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(a), Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().minCoeff();
}

inline double minSingularValue(const Matrix& a) {
  if (a.size() == 0) return std::numeric_limits<double>::infinity();
  const auto d = svd(a);
  return d.s(d.s.size() - 1);
}

/// (I + B^2)^{-1/2} style orthonormalisation of the columns of [top; bottom]
/// that is smooth in the entries: returns frame * (frame^T frame)^{-1/2}.
inline Matrix symmetricOrthonormalize(const Matrix& frame) {
  const Matrix gram = frame.transpose() * frame;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(gram));
  const Vector inv = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().cwiseInverse();
  return frame * (es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose());
}

inline Matrix randomSymmetric(Eigen::Index n, auto& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = g(rng);
  return scale * symmetrize(a);
}

inline Matrix randomOrthogonal(Eigen::Index n, auto& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = g(rng);
  Eigen::HouseholderQR<Matrix> qr(a);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < n; ++j)
    if (r(j, j) < 0) q.col(j) *= -1.0;
  return q;
}

}  // namespace specflow
