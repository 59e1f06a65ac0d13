#pragma once

// Symplectic reduction modulo an isotropic subspace I: S_I = I^# ∩ I^perp,
// the reduction map L -> L_I and its right inverse L -> L + JI.
//
// Reduced objects live in local coordinates of S_I. A basis g_1..g_m of a
// Lagrangian of S_I is fixed once per context and a vector x in S_I gets the
// coordinates (<g_i, x>, <J g_i, x>), which makes the embedding symplectic and
// isometric. When I lies in H x {0} the g_i span F x {0} with F = I^perp in H,
// so the reduced H0 and H1 are exactly the standard horizontal and vertical
// Lagrangians of S(F).

#include "specflow/grassmann.hpp"

#include <vector>

namespace specflow {

class ReductionContext {
 public:
  static ReductionContext build(const Subspace& isotropic, const Tolerances& tol = defaultTolerances()) {
    const Matrix& e = isotropic.basis();
    const Eigen::Index ambient = isotropic.ambientDim();
    if (ambient % 2 != 0) throw Error(ErrorCode::DimensionMismatch, "ReductionContext: odd ambient");
    if (e.cols() > 0 && omegaGram(e, e).cwiseAbs().maxCoeff() > tol.lagr) {
      throw Error(ErrorCode::NotIsotropic, "ReductionContext: subspace is not isotropic");
    }
    const Eigen::Index n = ambient / 2;
    const Eigen::Index m = n - e.cols();

    ReductionContext ctx;
    ctx.iso_ = e;
    ctx.n_ = n;
    ctx.m_ = m;
    const bool horizontal = e.cols() == 0 || e.bottomRows(n).cwiseAbs().maxCoeff() < tol.orth;
    if (horizontal) {
      const Matrix f = orthogonalComplement(e.topRows(n), tol);
      ctx.f_ = f;
      ctx.g_ = Matrix::Zero(2 * n, m);
      ctx.g_.topRows(n) = f;
    } else {
      ctx.g_ = symplecticGramSchmidt(ctx.reducedSpaceBasis(tol), tol);
    }
    return ctx;
  }

  Eigen::Index ambientN() const { return n_; }
  Eigen::Index reducedN() const { return m_; }
  const Matrix& isotropicBasis() const { return iso_; }

  /// Orthonormal basis of F with I = F^perp x {0}, empty unless I lies in H x {0}.
  const Matrix& horizontalComplement() const { return f_; }

  /// [G, JG]: orthonormal symplectic basis of S_I in ambient coordinates.
  Matrix reducedBasis() const {
    Matrix b(2 * n_, 2 * m_);
    b << g_, applyJ(g_);
    return b;
  }

  Matrix toLocal(const Matrix& ambientVectors) const {
    Matrix y(2 * m_, ambientVectors.cols());
    y.topRows(m_) = g_.transpose() * ambientVectors;
    y.bottomRows(m_) = applyJ(g_).transpose() * ambientVectors;
    return y;
  }

  Matrix toAmbient(const Matrix& localVectors) const {
    return g_ * localVectors.topRows(m_) + applyJ(g_) * localVectors.bottomRows(m_);
  }

  /// S_I computed from scratch as the orthogonal complement of I + JI.
  Matrix reducedSpaceBasis(const Tolerances& tol = defaultTolerances()) const {
    Matrix both(2 * n_, 2 * iso_.cols());
    both << iso_, applyJ(iso_);
    return orthogonalComplement(both, tol);
  }

 private:
  /// Lagrangian basis g_1..g_m of a J-invariant subspace spanned by `space`.
  static Matrix symplecticGramSchmidt(Matrix space, const Tolerances& tol) {
    const Eigen::Index m = space.cols() / 2;
    Matrix g(space.rows(), m);
    for (Eigen::Index j = 0; j < m; ++j) {
      const Vector v = space.col(0);
      g.col(j) = v;
      Matrix pair(space.rows(), 2);
      pair << v, applyJ(v);
      const Matrix keep = nullSpace(pair.transpose() * space, tol);
      space = space * keep;
    }
    return g;
  }

  Matrix iso_;
  Matrix g_;
  Matrix f_;
  Eigen::Index n_ = 0;
  Eigen::Index m_ = 0;
};

/// I0 = I x {0} for an orthonormal basis of I in H = R^n.
inline Subspace horizontalLift(const Matrix& basisInH) {
  const Eigen::Index n = basisInH.rows();
  Matrix e = Matrix::Zero(2 * n, basisInH.cols());
  e.topRows(n) = basisInH;
  return Subspace::fromOrthonormal(e);
}

/// Is L ∩ I = {0}?
inline bool isCleanModulo(const ReductionContext& ctx, const LagrangianFrame& l,
                          const Tolerances& tol = defaultTolerances()) {
  if (ctx.isotropicBasis().cols() == 0) return true;
  return cleanIntersection(l.subspace(), Subspace::fromOrthonormal(ctx.isotropicBasis(), tol), tol).clean;
}

/// Orthogonal projection of L ∩ I^# onto S_I, in ambient coordinates.
inline Matrix reduceByProjection(const ReductionContext& ctx, const LagrangianFrame& l,
                                 const Tolerances& tol = defaultTolerances()) {
  const Matrix& e = ctx.isotropicBasis();
  if (e.cols() == 0) return l.basis();
  const Matrix inSharp = l.basis() * nullSpace(applyJ(e).transpose() * l.basis(), tol);
  const Matrix s = ctx.reducedBasis();
  return orthonormalSpan(s * (s.transpose() * inSharp), tol);
}

/// (L + I) ∩ S_I, in ambient coordinates.
inline Matrix reduceBySum(const ReductionContext& ctx, const LagrangianFrame& l,
                          const Tolerances& tol = defaultTolerances()) {
  const Matrix& e = ctx.isotropicBasis();
  if (e.cols() == 0) return l.basis();
  Matrix sum(l.basis().rows(), l.basis().cols() + e.cols());
  sum << l.basis(), e;
  return intersectionBasis(orthonormalSpan(sum, tol), ctx.reducedSpaceBasis(tol), tol);
}

/// L_I in local coordinates of S_I. Finite-dimensional reduction is defined
/// for every Lagrangian; `requireClean` additionally demands L ∩ I = {0}, the
/// condition under which the map is continuous. With `crossCheck` both
/// constructions of L_I are computed and must agree.
inline LagrangianFrame reduceLagrangian(const ReductionContext& ctx, const LagrangianFrame& l,
                                        bool requireClean = false, bool crossCheck = true,
                                        const Tolerances& tol = defaultTolerances()) {
  if (l.n() != ctx.ambientN()) throw Error(ErrorCode::DimensionMismatch, "reduceLagrangian");
  if (requireClean && !isCleanModulo(ctx, l, tol)) {
    throw Error(ErrorCode::NotClean, "reduceLagrangian: L meets I");
  }
  const Matrix projected = reduceByProjection(ctx, l, tol);
  if (projected.cols() != ctx.reducedN()) {
    throw Error(ErrorCode::NumericallyAmbiguous, "reduceLagrangian: reduced dimension " +
                                                     std::to_string(projected.cols()));
  }
  if (crossCheck && ctx.isotropicBasis().cols() > 0) {
    const Matrix viaSum = reduceBySum(ctx, l, tol);
    if (viaSum.cols() != projected.cols() || gapDistance(viaSum, projected) > tol.gap) {
      throw Error(ErrorCode::NumericallyAmbiguous, "reduceLagrangian: projection and sum disagree");
    }
  }
  return LagrangianFrame::fromOrthonormal(symmetricOrthonormalize(ctx.toLocal(projected)), tol);
}

/// L + JI for L a Lagrangian of S_I given in local coordinates.
inline LagrangianFrame extendLagrangian(const ReductionContext& ctx, const LagrangianFrame& reduced,
                                        const Tolerances& tol = defaultTolerances()) {
  if (reduced.n() != ctx.reducedN()) throw Error(ErrorCode::DimensionMismatch, "extendLagrangian");
  const Matrix& e = ctx.isotropicBasis();
  Matrix frame(2 * ctx.ambientN(), ctx.ambientN());
  frame << ctx.toAmbient(reduced.basis()), applyJ(e);
  return LagrangianFrame::fromOrthonormal(frame, tol);
}

/// Checks rho^{I1} = rho^{I} rho^{I2} with I = I1 ∩ I2^perp on every
/// Lagrangian of the batch; both sides compared in ambient coordinates.
inline bool composeCheck(const Subspace& i1, const Subspace& i2, const std::vector<LagrangianFrame>& batch,
                         const Tolerances& tol = defaultTolerances()) {
  if (!i1.contains(i2, tol)) throw Error(ErrorCode::NotNested, "composeCheck: I2 is not inside I1");
  const ReductionContext one = ReductionContext::build(i1, tol);
  const ReductionContext second = ReductionContext::build(i2, tol);
  // I = I1 ∩ I2^perp, in coordinates of I1 so that I2 = I1 leaves nothing
  Matrix rest = i1.basis();
  if (i2.dim() > 0) rest = i1.basis() * nullSpace(i2.basis().transpose() * i1.basis(), tol);
  const ReductionContext inner =
      ReductionContext::build(Subspace::fromOrthonormal(second.toLocal(rest), tol), tol);
  bool ok = true;
  for (const auto& l : batch) {
    const Matrix direct = one.toAmbient(reduceLagrangian(one, l, false, true, tol).basis());
    const LagrangianFrame mid = reduceLagrangian(second, l, false, true, tol);
    const Matrix twoStep = second.toAmbient(inner.toAmbient(reduceLagrangian(inner, mid, false, true, tol).basis()));
    ok = ok && gapDistance(direct, twoStep) < tol.gap;
  }
  return ok;
}

struct CommonIsotropic {
  Matrix basisInH;       // I in H, orthonormal columns
  Matrix complementInH;  // F = I^perp in H
  double margin = 0.0;   // smallest principal angle between I x {0} and any evaluated L(t)
  bool empty = false;    // I = {0}: reduction is the identity
  bool forcedDrop = false;
  std::vector<double> evaluated;
};

namespace detail {

/// Principal directions of I x {0} against L: columns of the returned basis
/// of I are ordered by increasing angle, angles returned alongside.
inline std::pair<Matrix, Vector> anglesAgainst(const Matrix& basisInH, const LagrangianFrame& l) {
  const Eigen::Index n = l.n();
  const Matrix cross = basisInH.transpose() * l.basis().topRows(n);
  const auto d = svd(cross);
  Vector angles(d.s.size());
  for (Eigen::Index i = 0; i < d.s.size(); ++i) angles(i) = std::acos(std::min(1.0, d.s(i)));
  return {basisInH * d.u, angles};
}

inline void collectTimes(const LagrangianPath& path, double tl, const LagrangianFrame& fl, double tr,
                         const LagrangianFrame& fr, int level, const Tolerances& tol,
                         std::vector<std::pair<double, LagrangianFrame>>& out) {
  const double tm = 0.5 * (tl + tr);
  const LagrangianFrame fm = path.evaluate(tm);
  const bool fine = gapDistance(fl, fr) < tol.pathGap;
  if (!fine && level >= tol.maxRefine) {
    throw Error(ErrorCode::RefinementExhausted, "commonIsotropic: path too fast near t=" + std::to_string(tm));
  }
  if (!fine) collectTimes(path, tl, fl, tm, fm, level + 1, tol, out);
  out.emplace_back(tm, fm);
  if (!fine) collectTimes(path, tm, fm, tr, fr, level + 1, tol, out);
  out.emplace_back(tr, fr);
}

}  // namespace detail

/// Largest I ⊂ H found such that I x {0} meets no L(t): the path is sampled
/// at its own samples and midpoints (bisected until consecutive frames are
/// within pathGap), and every direction of I at angle below `cutAngle` from
/// some L(t) is removed.
inline CommonIsotropic commonIsotropic(const LagrangianPath& path, double cutAngle = 0.1,
                                       const Tolerances& tol = defaultTolerances()) {
  const Eigen::Index n = path.n();
  std::vector<std::pair<double, LagrangianFrame>> points;
  points.emplace_back(path.a(), path.front());
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    detail::collectTimes(path, path.t(i), path.frame(i), path.t(i + 1), path.frame(i + 1), 0, tol, points);
  }

  CommonIsotropic out;
  Matrix basis = Matrix::Identity(n, n);
  for (const auto& [t, l] : points) {
    if (basis.cols() == 0) break;
    const auto [dirs, angles] = detail::anglesAgainst(basis, l);
    Eigen::Index drop = 0;
    while (drop < angles.size() && angles(drop) < cutAngle) ++drop;
    basis = dirs.rightCols(dirs.cols() - drop);
  }
  if (basis.cols() == n && n > 0) {
    // Keep at least one reduced dimension: drop the direction closest to the path.
    double worst = std::numeric_limits<double>::infinity();
    Vector worstDir = basis.col(0);
    for (const auto& [t, l] : points) {
      const auto [dirs, angles] = detail::anglesAgainst(basis, l);
      if (angles(0) < worst) {
        worst = angles(0);
        worstDir = dirs.col(0);
      }
    }
    basis = orthogonalComplement(worstDir, tol);
    out.forcedDrop = true;
  }
  double margin = std::numeric_limits<double>::infinity();
  if (basis.cols() > 0) {
    for (const auto& [t, l] : points) {
      margin = std::min(margin, detail::anglesAgainst(basis, l).second(0));
    }
    if (!(margin > 10.0 * tol.rank)) {
      throw Error(ErrorCode::NumericallyAmbiguous, "commonIsotropic: margin " + std::to_string(margin));
    }
  }
  out.basisInH = basis;
  out.complementInH = orthogonalComplement(basis, tol);
  out.margin = margin;
  out.empty = basis.cols() == 0;
  out.evaluated.reserve(points.size());
  for (const auto& p : points) out.evaluated.push_back(p.first);
  return out;
}

}  // namespace specflow
