#pragma once

// Standard symplectic structure on R^n x R^n: vectors are stored as (u, v)
// with u the first n coordinates. omega((u1,v1),(u2,v2)) = <v2,u1> - <v1,u2>
// and J(u,v) = (-v,u), so omega(x,y) = <Jx, y>.

#include "specflow/linalg.hpp"

#include <string>

namespace specflow {

/// Standard complex structure on R^{2n}.
inline Matrix complexStructure(Eigen::Index n) {
  Matrix j = Matrix::Zero(2 * n, 2 * n);
  j.topRightCorner(n, n) = -Matrix::Identity(n, n);
  j.bottomLeftCorner(n, n) = Matrix::Identity(n, n);
  return j;
}

/// Applies J to every column of a 2n x k block without forming J.
inline Matrix applyJ(const Matrix& x) {
  const Eigen::Index n = x.rows() / 2;
  Matrix y(x.rows(), x.cols());
  y.topRows(n) = -x.bottomRows(n);
  y.bottomRows(n) = x.topRows(n);
  return y;
}

inline double omega(const Vector& x, const Vector& y) {
  if (x.size() != y.size() || x.size() % 2 != 0) {
    throw Error(ErrorCode::DimensionMismatch, "omega: vectors must share an even dimension");
  }
  const Eigen::Index n = x.size() / 2;
  return y.tail(n).dot(x.head(n)) - x.tail(n).dot(y.head(n));
}

/// Gram matrix of omega between the columns of a and b: G(i,j) = omega(a_i, b_j).
inline Matrix omegaGram(const Matrix& a, const Matrix& b) {
  return applyJ(a).transpose() * b;
}

class Subspace {
 public:
  Subspace() = default;

  /// Span of arbitrary columns; rank decided with the gap check.
  static Subspace span(const Matrix& vectors, const Tolerances& tol = defaultTolerances()) {
    return Subspace(orthonormalSpan(vectors, tol));
  }

  /// Adopts an already orthonormal frame (validated).
  static Subspace fromOrthonormal(Matrix frame, const Tolerances& tol = defaultTolerances()) {
    if (frame.cols() > 0) {
      const double err =
          (frame.transpose() * frame - Matrix::Identity(frame.cols(), frame.cols())).norm();
      if (err > tol.orth) {
        throw Error(ErrorCode::NotOrthonormal, "frame deviates from orthonormal by " +
                                                   std::to_string(err));
      }
    }
    return Subspace(std::move(frame));
  }

  static Subspace zero(Eigen::Index ambient) { return Subspace(Matrix(ambient, 0)); }

  static Subspace whole(Eigen::Index ambient) {
    return Subspace(Matrix::Identity(ambient, ambient));
  }

  const Matrix& basis() const { return basis_; }
  Eigen::Index dim() const { return basis_.cols(); }
  Eigen::Index ambientDim() const { return basis_.rows(); }
  Matrix projector() const { return specflow::projector(basis_); }

  bool contains(const Subspace& other, const Tolerances& tol = defaultTolerances()) const {
    requireSameRows(basis_, other.basis_, "Subspace::contains");
    if (other.dim() == 0) return true;
    const Matrix residual = other.basis_ - basis_ * (basis_.transpose() * other.basis_);
    return residual.norm() < tol.gap;
  }

  bool sameSpan(const Subspace& other, const Tolerances& tol = defaultTolerances()) const {
    return dim() == other.dim() && gapDistance(basis_, other.basis_) < tol.gap;
  }

 private:
  explicit Subspace(Matrix frame) : basis_(std::move(frame)) {}

  Matrix basis_;
};

inline double gapDistance(const Subspace& a, const Subspace& b) {
  return gapDistance(a.basis(), b.basis());
}

/// An n-dimensional isotropic subspace of R^{2n}.
class LagrangianFrame {
 public:
  LagrangianFrame() = default;

  static LagrangianFrame fromSubspace(Subspace s, const Tolerances& tol = defaultTolerances()) {
    const Eigen::Index ambient = s.ambientDim();
    if (ambient % 2 != 0 || s.dim() * 2 != ambient) {
      throw Error(ErrorCode::NotLagrangian, "dimension " + std::to_string(s.dim()) +
                                                " in ambient " + std::to_string(ambient));
    }
    const double iso = s.dim() ? omegaGram(s.basis(), s.basis()).cwiseAbs().maxCoeff() : 0.0;
    if (iso > tol.lagr) {
      throw Error(ErrorCode::NotLagrangian, "isotropy defect " + std::to_string(iso));
    }
    return LagrangianFrame(std::move(s));
  }

  static LagrangianFrame fromBasis(const Matrix& vectors,
                                   const Tolerances& tol = defaultTolerances()) {
    return fromSubspace(Subspace::span(vectors, tol), tol);
  }

  /// Orthonormal frame known to be Lagrangian up to roundoff; checked.
  static LagrangianFrame fromOrthonormal(const Matrix& frame,
                                         const Tolerances& tol = defaultTolerances()) {
    return fromSubspace(Subspace::fromOrthonormal(frame, tol), tol);
  }

  /// R^n x {0}.
  static LagrangianFrame horizontal(Eigen::Index n) {
    Matrix f = Matrix::Zero(2 * n, n);
    f.topRows(n).setIdentity();
    return LagrangianFrame(Subspace::fromOrthonormal(f));
  }

  /// {0} x R^n.
  static LagrangianFrame vertical(Eigen::Index n) {
    Matrix f = Matrix::Zero(2 * n, n);
    f.bottomRows(n).setIdentity();
    return LagrangianFrame(Subspace::fromOrthonormal(f));
  }

  const Subspace& subspace() const { return space_; }
  const Matrix& basis() const { return space_.basis(); }
  Eigen::Index n() const { return space_.dim(); }
  Matrix projector() const { return space_.projector(); }

  bool sameSpan(const LagrangianFrame& other, const Tolerances& tol = defaultTolerances()) const {
    return space_.sameSpan(other.space_, tol);
  }

 private:
  explicit LagrangianFrame(Subspace s) : space_(std::move(s)) {}

  Subspace space_;
};

inline double gapDistance(const LagrangianFrame& a, const LagrangianFrame& b) {
  return gapDistance(a.basis(), b.basis());
}

/// W^# = {y : omega(w, y) = 0 for all w in W} = (JW)^perp.
inline Subspace symplecticComplement(const Subspace& w, const Tolerances& tol = defaultTolerances()) {
  if (w.ambientDim() % 2 != 0) {
    throw Error(ErrorCode::DimensionMismatch, "symplecticComplement: odd ambient dimension");
  }
  return Subspace::fromOrthonormal(orthogonalComplement(applyJ(w.basis()), tol), tol);
}

enum class SubspaceKind { Isotropic, Coisotropic, Symplectic, Lagrangian, None };

inline const char* toString(SubspaceKind k) {
  switch (k) {
    case SubspaceKind::Isotropic: return "isotropic";
    case SubspaceKind::Coisotropic: return "coisotropic";
    case SubspaceKind::Symplectic: return "symplectic";
    case SubspaceKind::Lagrangian: return "lagrangian";
    case SubspaceKind::None: return "none";
  }
  return "none";
}

struct IntersectionInfo {
  bool clean = false;
  int dimIntersection = 0;
};

inline int intersectionDim(const Subspace& v, const Subspace& w,
                           const Tolerances& tol = defaultTolerances()) {
  requireSameRows(v.basis(), w.basis(), "intersectionDim");
  if (v.dim() == 0 || w.dim() == 0) return 0;
  Matrix stacked(v.ambientDim(), v.dim() + w.dim());
  stacked << v.basis(), w.basis();
  const int rank = numericalRank(stacked, tol, "intersectionDim");
  return static_cast<int>(v.dim() + w.dim()) - rank;
}

inline IntersectionInfo cleanIntersection(const Subspace& v, const Subspace& w,
                                          const Tolerances& tol = defaultTolerances()) {
  const int d = intersectionDim(v, w, tol);
  return {d == 0, d};
}

inline IntersectionInfo cleanIntersection(const LagrangianFrame& v, const LagrangianFrame& w,
                                          const Tolerances& tol = defaultTolerances()) {
  return cleanIntersection(v.subspace(), w.subspace(), tol);
}

/// Label per inclusion tests between W and W^#. The zero space reports
/// isotropic, the whole space symplectic.
inline SubspaceKind classify(const Subspace& w, const Tolerances& tol = defaultTolerances()) {
  const Subspace sharp = symplecticComplement(w, tol);
  const bool inSharp = sharp.contains(w, tol);
  const bool sharpIn = w.contains(sharp, tol);
  if (inSharp && sharpIn) return SubspaceKind::Lagrangian;
  if (inSharp) return SubspaceKind::Isotropic;
  if (intersectionDim(w, sharp, tol) == 0) return SubspaceKind::Symplectic;
  if (sharpIn) return SubspaceKind::Coisotropic;
  return SubspaceKind::None;
}

/// ind(V, W) = dim(V ∩ W) - codim(V + W).
inline int fredholmPairIndex(const Subspace& v, const Subspace& w,
                             const Tolerances& tol = defaultTolerances()) {
  requireSameRows(v.basis(), w.basis(), "fredholmPairIndex");
  Matrix stacked(v.ambientDim(), v.dim() + w.dim());
  stacked << v.basis(), w.basis();
  const int sumDim = numericalRank(stacked, tol, "fredholmPairIndex");
  const int capDim = static_cast<int>(v.dim() + w.dim()) - sumDim;
  return capDim - (static_cast<int>(v.ambientDim()) - sumDim);
}

/// Frame of {(u, Bu)} for symmetric B.
inline LagrangianFrame graphLagrangian(const Matrix& b, const Tolerances& tol = defaultTolerances()) {
  requireSymmetric(b, tol, "graphLagrangian");
  const Eigen::Index n = b.rows();
  Matrix f(2 * n, n);
  f.topRows(n).setIdentity();
  f.bottomRows(n) = symmetrize(b);
  return LagrangianFrame::fromOrthonormal(symmetricOrthonormalize(f), tol);
}

/// Inverse of graphLagrangian: the symmetric B with L = {(u, Bu)}.
inline Matrix lagrangianToGraph(const LagrangianFrame& l, const Tolerances& tol = defaultTolerances()) {
  const Eigen::Index n = l.n();
  const Matrix x = l.basis().topRows(n);
  const Matrix y = l.basis().bottomRows(n);
  const auto d = svd(x);
  const int rank = n ? decideRank(d.s, tol, "lagrangianToGraph", 1.0) : 0;
  if (rank < n) {
    throw Error(ErrorCode::NotAGraph, "Lagrangian meets {0} x R^n in dimension " +
                                          std::to_string(n - rank));
  }
  const Matrix xinv = d.v * d.s.cwiseInverse().asDiagonal() * d.u.transpose();
  return symmetrize(y * xinv);
}

/// Direct sum of Lagrangians a in S(n) and b in S(m) as a Lagrangian of
/// S(n+m) in standard (u, v) ordering.
inline Matrix directSumFrame(const Matrix& a, const Matrix& b) {
  const Eigen::Index n = a.rows() / 2;
  const Eigen::Index m = b.rows() / 2;
  Matrix f = Matrix::Zero(2 * (n + m), a.cols() + b.cols());
  f.block(0, 0, n, a.cols()) = a.topRows(n);
  f.block(n + m, 0, n, a.cols()) = a.bottomRows(n);
  f.block(n, a.cols(), m, b.cols()) = b.topRows(m);
  f.block(2 * n + m, a.cols(), m, b.cols()) = b.bottomRows(m);
  return f;
}

inline LagrangianFrame directSum(const LagrangianFrame& a, const LagrangianFrame& b) {
  return LagrangianFrame::fromOrthonormal(directSumFrame(a.basis(), b.basis()));
}

}  // namespace specflow
