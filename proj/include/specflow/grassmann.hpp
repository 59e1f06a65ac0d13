#pragma once

// Lagrangian Grassmannian of R^{2n}: the det^2 map, Maslov index of loops and
// of paths relative to a reference Lagrangian, triple signatures, the
// Hormander index and suspension of triples.

#include "specflow/symlin.hpp"

#include <complex>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

namespace specflow {

/// A path t -> L(t) in Λ(n), given by ordered samples and optionally by a
/// generator that can be evaluated anywhere in [a, b]. Without a generator,
/// intermediate frames come from projector interpolation, which is only
/// trusted between samples closer than kInterpolationGap.
class LagrangianPath {
 public:
  using Generator = std::function<LagrangianFrame(double)>;

  static constexpr double kInterpolationGap = 0.9;

  LagrangianPath() = default;

  static LagrangianPath fromSamples(std::vector<double> ts, std::vector<LagrangianFrame> frames) {
    validate(ts, frames);
    LagrangianPath p;
    p.ts_ = std::move(ts);
    p.frames_ = std::move(frames);
    return p;
  }

  static LagrangianPath fromGenerator(double a, double b, Generator gen, int samples = 33) {
    if (!(b > a) || samples < 2) {
      throw Error(ErrorCode::InvalidArgument, "LagrangianPath: need a < b and >= 2 samples");
    }
    std::vector<double> ts(samples);
    std::vector<LagrangianFrame> frames;
    frames.reserve(samples);
    for (int i = 0; i < samples; ++i) {
      ts[i] = (i + 1 == samples) ? b : a + (b - a) * i / (samples - 1);
      frames.push_back(gen(ts[i]));
    }
    validate(ts, frames);
    LagrangianPath p;
    p.ts_ = std::move(ts);
    p.frames_ = std::move(frames);
    p.gen_ = std::move(gen);
    return p;
  }

  static LagrangianPath constant(const LagrangianFrame& l, double a = 0.0, double b = 1.0) {
    return fromGenerator(a, b, [l](double) { return l; }, 2);
  }

  double a() const { return ts_.front(); }
  double b() const { return ts_.back(); }
  std::size_t size() const { return ts_.size(); }
  double t(std::size_t i) const { return ts_[i]; }
  const std::vector<double>& times() const { return ts_; }
  const LagrangianFrame& frame(std::size_t i) const { return frames_[i]; }
  const LagrangianFrame& front() const { return frames_.front(); }
  const LagrangianFrame& back() const { return frames_.back(); }
  bool hasGenerator() const { return static_cast<bool>(gen_); }
  Eigen::Index n() const { return frames_.front().n(); }

  LagrangianFrame evaluate(double t) const {
    if (gen_) return gen_(t);
    if (t <= ts_.front()) return frames_.front();
    if (t >= ts_.back()) return frames_.back();
    const auto it = std::upper_bound(ts_.begin(), ts_.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - ts_.begin()) - 1;
    const double w = (t - ts_[i]) / (ts_[i + 1] - ts_[i]);
    if (w == 0.0) return frames_[i];
    if (gapDistance(frames_[i], frames_[i + 1]) >= kInterpolationGap) {
      throw Error(ErrorCode::RefinementExhausted,
                  "samples at t=" + std::to_string(ts_[i]) + " and t=" + std::to_string(ts_[i + 1]) +
                      " too far apart to interpolate");
    }
    return interpolate(frames_[i], frames_[i + 1], w);
  }

  /// Same subspaces traversed backwards, reparametrised onto [a, b].
  LagrangianPath reversed() const {
    const double lo = a();
    const double hi = b();
    std::vector<double> ts(ts_.size());
    std::vector<LagrangianFrame> frames(frames_.rbegin(), frames_.rend());
    for (std::size_t i = 0; i < ts_.size(); ++i) ts[i] = lo + hi - ts_[ts_.size() - 1 - i];
    LagrangianPath p = fromSamples(std::move(ts), std::move(frames));
    if (gen_) {
      p.gen_ = [g = gen_, lo, hi](double t) { return g(lo + hi - t); };
    }
    return p;
  }

  /// Projector-average interpolation. The top-n eigenspace of
  /// (1-w) P_0 + w P_1 is Lagrangian because the average commutes with
  /// conjugation by J up to P -> I - P.
  static LagrangianFrame interpolate(const LagrangianFrame& x, const LagrangianFrame& y, double w) {
    const Matrix p = (1.0 - w) * x.projector() + w * y.projector();
    Eigen::SelfAdjointEigenSolver<Matrix> es(p);
    const Eigen::Index n = x.n();
    return LagrangianFrame::fromOrthonormal(es.eigenvectors().rightCols(n));
  }

 private:
  static void validate(const std::vector<double>& ts, const std::vector<LagrangianFrame>& frames) {
    if (ts.size() < 2 || ts.size() != frames.size()) {
      throw Error(ErrorCode::InvalidArgument, "LagrangianPath: need >= 2 matching samples");
    }
    for (std::size_t i = 1; i < ts.size(); ++i) {
      if (!(ts[i] > ts[i - 1])) {
        throw Error(ErrorCode::InvalidArgument, "LagrangianPath: times must increase strictly");
      }
      if (frames[i].n() != frames[0].n()) {
        throw Error(ErrorCode::DimensionMismatch, "LagrangianPath: mixed dimensions");
      }
    }
  }

  std::vector<double> ts_;
  std::vector<LagrangianFrame> frames_;
  Generator gen_;
};

/// Z = X + iY for the frame [X; Y].
inline CMatrix unitaryFromLagrangian(const LagrangianFrame& l, const Tolerances& tol = defaultTolerances()) {
  const Eigen::Index n = l.n();
  CMatrix z(n, n);
  z.real() = l.basis().topRows(n);
  z.imag() = l.basis().bottomRows(n);
  const double err = (z * z.adjoint() - CMatrix::Identity(n, n)).norm();
  if (err > tol.orth * std::max<double>(1.0, static_cast<double>(n))) {
    throw Error(ErrorCode::UnitarityFailure, "||ZZ* - I|| = " + std::to_string(err));
  }
  return z;
}

inline std::complex<double> detSquared(const LagrangianFrame& l) {
  const Eigen::Index n = l.n();
  if (n == 0) return {1.0, 0.0};
  CMatrix z(n, n);
  z.real() = l.basis().topRows(n);
  z.imag() = l.basis().bottomRows(n);
  const std::complex<double> d = z.determinant();
  return d * d;
}

/// arg(det(Z)^2) in [0, 2π).
inline double detSquaredPhase(const LagrangianFrame& l, const Tolerances& tol = defaultTolerances()) {
  const CMatrix z = unitaryFromLagrangian(l, tol);
  const std::complex<double> d = z.determinant();
  double phase = std::arg(d * d);
  if (phase < 0.0) phase += 2.0 * std::numbers::pi;
  if (phase >= 2.0 * std::numbers::pi) phase -= 2.0 * std::numbers::pi;
  return phase;
}

namespace detail {

inline double phaseStep(const std::complex<double>& from, const std::complex<double>& to) {
  return std::arg(to * std::conj(from));
}

/// Unwrapped det^2 phase change of f over [tl, tr], bisecting until every
/// step moves less than pathGap in projector gap and less than π/2 in phase.
inline double unwrapSegment(const std::function<LagrangianFrame(double)>& f, double tl,
                            const LagrangianFrame& fl, double tr, const LagrangianFrame& fr,
                            int level, const Tolerances& tol) {
  const double step = phaseStep(detSquared(fl), detSquared(fr));
  if (std::abs(step) < 0.5 * std::numbers::pi && gapDistance(fl, fr) < tol.pathGap) {
    return step;
  }
  if (level >= tol.maxRefine) {
    throw Error(ErrorCode::RefinementExhausted,
                "phase unwrapping did not resolve on [" + std::to_string(tl) + ", " +
                    std::to_string(tr) + "]");
  }
  const double tm = 0.5 * (tl + tr);
  const LagrangianFrame fm = f(tm);
  return unwrapSegment(f, tl, fl, tm, fm, level + 1, tol) +
         unwrapSegment(f, tm, fm, tr, fr, level + 1, tol);
}

inline double accumulatedPhase(const LagrangianPath& path, const Tolerances& tol) {
  const auto eval = [&path](double t) { return path.evaluate(t); };
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    total += unwrapSegment(eval, path.t(i), path.frame(i), path.t(i + 1), path.frame(i + 1), 0, tol);
  }
  return total;
}

inline int windingFromPhase(double phase, const char* where) {
  const double w = phase / (2.0 * std::numbers::pi);
  const double r = std::round(w);
  if (std::abs(w - r) > 1e-6) {
    throw Error(ErrorCode::NotClosed, std::string(where) + ": winding " + std::to_string(w) +
                                          " is not an integer");
  }
  return static_cast<int>(r);
}

}  // namespace detail

/// Winding number of det^2 along a closed path; counterclockwise is positive.
inline int maslovLoopIndex(const LagrangianPath& loop, const Tolerances& tol = defaultTolerances()) {
  if (gapDistance(loop.front(), loop.back()) > tol.gap) {
    throw Error(ErrorCode::NotClosed, "endpoint gap " +
                                          std::to_string(gapDistance(loop.front(), loop.back())));
  }
  return detail::windingFromPhase(detail::accumulatedPhase(loop, tol), "maslovLoopIndex");
}

/// Symmetric C with M = span(E_L C + J E_L), for M transverse to L.
inline Matrix formRelativeTo(const LagrangianFrame& l, const LagrangianFrame& m,
                             const Tolerances& tol = defaultTolerances()) {
  const Matrix a = l.basis().transpose() * m.basis();
  const Matrix b = applyJ(l.basis()).transpose() * m.basis();
  const auto d = svd(b);
  const int rank = decideRank(d.s, tol, "formRelativeTo", 1.0);
  if (rank < l.n()) {
    throw Error(ErrorCode::EndpointNotTransverse, "Lagrangian is not transverse to the reference");
  }
  const Matrix binv = d.v * d.s.cwiseInverse().asDiagonal() * d.u.transpose();
  return symmetrize(a * binv);
}

/// The Lagrangian span(E_L C + J E_L); transverse to L for every symmetric C.
inline LagrangianFrame lagrangianFromForm(const LagrangianFrame& l, const Matrix& c) {
  const Matrix raw = l.basis() * symmetrize(c) + applyJ(l.basis());
  return LagrangianFrame::fromOrthonormal(symmetricOrthonormalize(raw));
}

/// Path s -> lagrangianFromForm(L, (1-s) C0 + s C1) on [0, 1]; stays in Λ_L.
inline LagrangianPath pathInsideTransversal(const LagrangianFrame& l, const LagrangianFrame& from,
                                            const LagrangianFrame& to, int samples = 9,
                                            const Tolerances& tol = defaultTolerances()) {
  const Matrix c0 = formRelativeTo(l, from, tol);
  const Matrix c1 = formRelativeTo(l, to, tol);
  return LagrangianPath::fromGenerator(
      0.0, 1.0, [l, c0, c1](double s) { return lagrangianFromForm(l, (1.0 - s) * c0 + s * c1); },
      samples);
}

/// Maslov index of a path relative to L: the path is closed by the straight
/// line between the endpoint forms inside Λ_L and the loop index is returned.
inline int relativeMaslovIndex(const LagrangianPath& path, const LagrangianFrame& l,
                               const Tolerances& tol = defaultTolerances()) {
  if (!cleanIntersection(path.front(), l, tol).clean || !cleanIntersection(path.back(), l, tol).clean) {
    throw Error(ErrorCode::EndpointNotTransverse, "relativeMaslovIndex: endpoint meets reference");
  }
  const LagrangianPath closure = pathInsideTransversal(l, path.back(), path.front(), 9, tol);
  const double phase = detail::accumulatedPhase(path, tol) + detail::accumulatedPhase(closure, tol);
  return detail::windingFromPhase(phase, "relativeMaslovIndex");
}

namespace detail {

inline void requireTransverse(const LagrangianFrame& x, const LagrangianFrame& y, const Tolerances& tol,
                              const char* what) {
  if (!cleanIntersection(x, y, tol).clean) {
    throw Error(ErrorCode::TransversalityViolated, what);
  }
}

/// Symmetric matrix of Q(v) = omega(Av, v) on L0 (coordinates of the frame
/// of L0), where M is the graph of A: L0 -> L1.
inline Matrix tripleForm(const LagrangianFrame& l0, const LagrangianFrame& m, const LagrangianFrame& l1) {
  const Eigen::Index n = l0.n();
  Matrix split(2 * n, 2 * n);
  split << l0.basis(), l1.basis();
  const Matrix coeff = split.partialPivLu().solve(m.basis());
  const Matrix p = coeff.topRows(n);
  const Matrix r = coeff.bottomRows(n);
  // A E0 x = E1 R P^{-1} x
  const Matrix image = l1.basis() * (r * p.inverse());
  return symmetrize(omegaGram(image, l0.basis()));
}

}  // namespace detail

/// Signature of the triple (L0, M, L1) with all three pairwise transverse.
inline int tripleSignature(const LagrangianFrame& l0, const LagrangianFrame& m, const LagrangianFrame& l1,
                           const Tolerances& tol = defaultTolerances()) {
  if (l0.n() != m.n() || m.n() != l1.n()) {
    throw Error(ErrorCode::DimensionMismatch, "tripleSignature: mixed dimensions");
  }
  detail::requireTransverse(l0, l1, tol, "tripleSignature: L0 meets L1");
  detail::requireTransverse(m, l0, tol, "tripleSignature: M meets L0");
  detail::requireTransverse(m, l1, tol, "tripleSignature: M meets L1");
  const Matrix q = detail::tripleForm(l0, m, l1);
  const double scale = std::max(1.0, q.cwiseAbs().maxCoeff());
  const Inertia in = inertia(q, 1e-9 * scale);
  if (in.zero != 0) {
    throw Error(ErrorCode::TransversalityViolated, "tripleSignature: degenerate form");
  }
  return in.signature();
}

/// h(L0, L1, M0, M1) = (sign(L0, M1, L1) - sign(L0, M0, L1)) / 2 for L0 ⋔ L1.
inline int hormanderIndex(const LagrangianFrame& l0, const LagrangianFrame& l1, const LagrangianFrame& m0,
                          const LagrangianFrame& m1, const Tolerances& tol = defaultTolerances()) {
  detail::requireTransverse(l0, l1, tol, "hormanderIndex: L0 meets L1");
  const int twice = tripleSignature(l0, m1, l1, tol) - tripleSignature(l0, m0, l1, tol);
  if (twice % 2 != 0) {
    throw Error(ErrorCode::ParityViolation, "signature difference " + std::to_string(twice) + " is odd");
  }
  return twice / 2;
}

/// The same index as the Maslov index of the loop M0 -> M1 inside Λ_{L0},
/// then M1 -> M0 inside Λ_{L1}.
inline int hormanderIndexViaLoop(const LagrangianFrame& l0, const LagrangianFrame& l1,
                                 const LagrangianFrame& m0, const LagrangianFrame& m1,
                                 const Tolerances& tol = defaultTolerances()) {
  for (const auto* li : {&l0, &l1}) {
    for (const auto* mj : {&m0, &m1}) {
      detail::requireTransverse(*li, *mj, tol, "hormanderIndexViaLoop: L_i meets M_j");
    }
  }
  const LagrangianPath out = pathInsideTransversal(l0, m0, m1, 9, tol);
  const LagrangianPath back = pathInsideTransversal(l1, m1, m0, 9, tol);
  const double phase = detail::accumulatedPhase(out, tol) + detail::accumulatedPhase(back, tol);
  return detail::windingFromPhase(phase, "hormanderIndexViaLoop");
}

/// Lagrangian span(E0 + E1 W^{-1} S) for transverse L0, L1 (W the omega
/// pairing between them) and nondegenerate symmetric S. Its triple signature
/// sign(L0, M, L1) equals -sign(S).
inline Matrix transversalFrameForTransversePair(const Matrix& e0, const Matrix& e1, const Matrix& s) {
  const Matrix w = omegaGram(e0, e1);
  const Matrix raw = e0 + e1 * w.partialPivLu().solve(s);
  return symmetricOrthonormalize(raw);
}

/// A Lagrangian transverse to both L0 and L1: reduce modulo J(L0 ∩ L1), pick
/// a transversal of the reduced transverse pair, add back J(L0 ∩ L1).
inline LagrangianFrame transversalToPair(const LagrangianFrame& l0, const LagrangianFrame& l1,
                                         const Tolerances& tol = defaultTolerances()) {
  if (l0.n() != l1.n()) throw Error(ErrorCode::DimensionMismatch, "transversalToPair");
  const Eigen::Index n = l0.n();
  const Matrix common = intersectionBasis(l0.basis(), l1.basis(), tol);
  const Eigen::Index r = common.cols();
  if (r == n) return LagrangianFrame::fromOrthonormal(applyJ(l0.basis()));
  Matrix reduced0 = l0.basis();
  Matrix reduced1 = l1.basis();
  if (r > 0) {
    const Matrix keep = Matrix::Identity(2 * n, 2 * n) - projector(common);
    reduced0 = orthonormalSpan(keep * l0.basis(), tol);
    reduced1 = orthonormalSpan(keep * l1.basis(), tol);
  }
  const Matrix reducedM =
      transversalFrameForTransversePair(reduced0, reduced1, Matrix::Identity(n - r, n - r));
  Matrix frame(2 * n, n);
  frame << reducedM, applyJ(common);
  return LagrangianFrame::fromOrthonormal(symmetricOrthonormalize(frame));
}

/// graph(diag(-I_{m/2}, I_{m/2})) in S(m), m even: the co-diagonal {(x,y,-x,y)}.
inline LagrangianFrame coDiagonal(Eigen::Index m) {
  if (m % 2 != 0) throw Error(ErrorCode::InvalidArgument, "coDiagonal needs even dimension");
  Vector d(m);
  d.head(m / 2).setConstant(-1.0);
  d.tail(m / 2).setConstant(1.0);
  return graphLagrangian(Matrix(d.asDiagonal()));
}

struct LagrangianTriple {
  LagrangianFrame l0;
  LagrangianFrame m;
  LagrangianFrame l1;
};

/// k-th suspension: (L0 ⊕ R0^{2k}, M ⊕ co-diagonal, L1 ⊕ R1^{2k}) in S(n + 2k).
inline LagrangianTriple suspendTriple(const LagrangianFrame& l0, const LagrangianFrame& m,
                                      const LagrangianFrame& l1, Eigen::Index k) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "suspendTriple: k must be positive");
  return {directSum(l0, LagrangianFrame::horizontal(2 * k)), directSum(m, coDiagonal(2 * k)),
          directSum(l1, LagrangianFrame::vertical(2 * k))};
}

}  // namespace specflow
