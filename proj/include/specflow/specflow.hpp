#pragma once

// Spectral flow of paths of real symmetric matrices: Morse-index difference,
// crossing forms, generalized Maslov index of the graph path, and a
// brute-force eigenvalue tracker used as referee.
//
// Sign convention: sf = mu(A_a) - mu(A_b), so an eigenvalue increasing
// through zero contributes +1.

#include "specflow/reduction.hpp"

#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace specflow {

class OperatorPath {
 public:
  using Generator = std::function<Matrix(double)>;

  OperatorPath() = default;

  static OperatorPath fromGenerator(double a, double b, Eigen::Index n, Generator eval,
                                    Generator derivative = nullptr) {
    if (!(b > a)) throw Error(ErrorCode::InvalidArgument, "OperatorPath: need a < b");
    if (n < 1) throw Error(ErrorCode::InvalidArgument, "OperatorPath: dimension must be positive");
    OperatorPath p;
    p.a_ = a;
    p.b_ = b;
    p.n_ = n;
    p.eval_ = std::move(eval);
    p.deriv_ = std::move(derivative);
    return p;
  }

  /// Piecewise-linear interpolation of symmetric samples on a strictly
  /// increasing grid. The derivative is the slope of the containing segment.
  static OperatorPath fromSamples(std::vector<double> grid, std::vector<Matrix> mats,
                                  const Tolerances& tol = defaultTolerances()) {
    if (grid.size() < 2 || grid.size() != mats.size()) {
      throw Error(ErrorCode::InvalidArgument, "OperatorPath: need >= 2 matching samples");
    }
    const Eigen::Index n = mats.front().rows();
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (i > 0 && !(grid[i] > grid[i - 1])) {
        throw Error(ErrorCode::InvalidArgument, "OperatorPath: grid must increase strictly");
      }
      if (mats[i].rows() != n || mats[i].cols() != n) {
        throw Error(ErrorCode::DimensionMismatch, "OperatorPath: sample " + std::to_string(i));
      }
      requireSymmetric(mats[i], tol, "OperatorPath sample");
      mats[i] = symmetrize(mats[i]);
    }
    const auto segment = [g = grid](double t) {
      const auto it = std::upper_bound(g.begin(), g.end(), t);
      std::size_t i = it == g.begin() ? 0 : static_cast<std::size_t>(it - g.begin()) - 1;
      return std::min(i, g.size() - 2);
    };
    OperatorPath p;
    p.a_ = grid.front();
    p.b_ = grid.back();
    p.n_ = n;
    p.knots_ = grid;
    p.eval_ = [grid, mats, segment](double t) -> Matrix {
      const std::size_t i = segment(t);
      const double w = std::clamp((t - grid[i]) / (grid[i + 1] - grid[i]), 0.0, 1.0);
      return (1.0 - w) * mats[i] + w * mats[i + 1];
    };
    p.deriv_ = [grid, mats, segment](double t) -> Matrix {
      const std::size_t i = segment(t);
      return (mats[i + 1] - mats[i]) / (grid[i + 1] - grid[i]);
    };
    return p;
  }

  static OperatorPath constant(const Matrix& a, double lo = 0.0, double hi = 1.0) {
    const Matrix s = symmetrize(a);
    return fromGenerator(lo, hi, a.rows(), [s](double) { return s; },
                         [n = a.rows()](double) { return Matrix(Matrix::Zero(n, n)); });
  }

  double a() const { return a_; }
  double b() const { return b_; }
  Eigen::Index n() const { return n_; }
  bool hasDerivative() const { return static_cast<bool>(deriv_); }
  bool piecewiseLinear() const { return !knots_.empty(); }
  const std::vector<double>& knots() const { return knots_; }

  Matrix operator()(double t) const { return evaluate(t); }

  Matrix evaluate(double t) const {
    Matrix m = eval_(t);
    if (m.rows() != n_ || m.cols() != n_) {
      throw Error(ErrorCode::DimensionMismatch, "OperatorPath: generator returned wrong size");
    }
    if (relativeAsymmetry(m) > defaultTolerances().sym) {
      throw Error(ErrorCode::NotSymmetric, "OperatorPath: A(" + std::to_string(t) + ") not symmetric");
    }
    return symmetrize(m);
  }

  std::optional<Matrix> derivative(double t) const {
    if (!deriv_) return std::nullopt;
    return symmetrize(deriv_(t));
  }

  /// Largest |eigenvalue| over the two endpoints.
  double endpointScale() const {
    const auto big = [](const Matrix& m) {
      Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
      return es.eigenvalues().cwiseAbs().maxCoeff();
    };
    return std::max(big(evaluate(a_)), big(evaluate(b_)));
  }

  /// tau_inv = invRel * endpointScale (floored so the zero path stays meaningful).
  double invertibilityThreshold(const Tolerances& tol = defaultTolerances()) const {
    return tol.invRel * std::max(endpointScale(), std::numeric_limits<double>::min() * 1e10);
  }

  /// Same family on [c, d] ⊂ [a, b].
  OperatorPath restricted(double c, double d) const {
    if (!(c < d) || c < a_ || d > b_) throw Error(ErrorCode::InvalidArgument, "restricted: bad subinterval");
    OperatorPath p = *this;
    p.a_ = c;
    p.b_ = d;
    p.knots_.clear();
    return p;
  }

  /// t -> A(a + b - t), same interval.
  OperatorPath reversed() const {
    OperatorPath p = *this;
    const double s = a_ + b_;
    p.eval_ = [e = eval_, s](double t) { return e(s - t); };
    if (deriv_) p.deriv_ = [d = deriv_, s](double t) -> Matrix { return -d(s - t); };
    p.knots_.clear();
    return p;
  }

  /// t -> A(t) + B(t).
  OperatorPath plus(const OperatorPath& other) const {
    if (other.n_ != n_) throw Error(ErrorCode::DimensionMismatch, "plus");
    OperatorPath p = *this;
    p.eval_ = [e = eval_, f = other.eval_](double t) -> Matrix { return e(t) + f(t); };
    if (deriv_ && other.deriv_) {
      p.deriv_ = [d = deriv_, g = other.deriv_](double t) -> Matrix { return d(t) + g(t); };
    } else {
      p.deriv_ = nullptr;
    }
    p.knots_.clear();
    return p;
  }

 private:
  double a_ = 0.0;
  double b_ = 1.0;
  Eigen::Index n_ = 0;
  Generator eval_;
  Generator deriv_;
  std::vector<double> knots_;
};

inline void requireAdmissible(const OperatorPath& path, const Tolerances& tol = defaultTolerances()) {
  const double thr = path.invertibilityThreshold(tol);
  for (const double t : {path.a(), path.b()}) {
    const double m = minAbsEigenvalue(path.evaluate(t));
    if (!(m > thr)) {
      throw Error(ErrorCode::SingularEndpoint, "A(" + std::to_string(t) + ") has |eigenvalue| " +
                                                   std::to_string(m) + " <= tau_inv " + std::to_string(thr));
    }
  }
}

/// Number of eigenvalues below -threshold; threshold defaults to
/// invRel * (largest |eigenvalue|).
inline int morseIndex(const Matrix& a, double threshold = -1.0, const Tolerances& tol = defaultTolerances()) {
  requireSymmetric(a, tol, "morseIndex");
  if (a.rows() == 0) return 0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(a), Eigen::EigenvaluesOnly);
  const Vector& e = es.eigenvalues();
  const double thr = threshold >= 0.0 ? threshold : tol.invRel * e.cwiseAbs().maxCoeff();
  int count = 0;
  for (Eigen::Index i = 0; i < e.size(); ++i) {
    if (std::abs(e(i)) <= thr) {
      throw Error(ErrorCode::SingularOperator, "morseIndex: eigenvalue " + std::to_string(e(i)));
    }
    if (e(i) < 0.0) ++count;
  }
  return count;
}

namespace detail {

/// Eigenvectors spanning E_-(a) (negative = true) or E_+(a).
inline Matrix spectralSubspace(const Matrix& a, bool negative, const Tolerances& tol) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(a));
  const Vector& e = es.eigenvalues();
  const double thr = tol.invRel * e.cwiseAbs().maxCoeff();
  std::vector<Eigen::Index> cols;
  for (Eigen::Index i = 0; i < e.size(); ++i) {
    if (std::abs(e(i)) <= thr) throw Error(ErrorCode::SingularOperator, "relativeMorseIndex: singular input");
    if ((e(i) < 0.0) == negative) cols.push_back(i);
  }
  Matrix out(a.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = es.eigenvectors().col(cols[j]);
  return out;
}

}  // namespace detail

/// dim(E_-(Aa) ∩ E_+(Ab)) - dim(E_-(Ab) ∩ E_+(Aa)).
inline int relativeMorseIndex(const Matrix& aa, const Matrix& ab, const Tolerances& tol = defaultTolerances()) {
  if (aa.rows() != ab.rows()) throw Error(ErrorCode::DimensionMismatch, "relativeMorseIndex");
  const auto sub = [&](const Matrix& m, bool neg) {
    return Subspace::fromOrthonormal(detail::spectralSubspace(m, neg, tol), tol);
  };
  return intersectionDim(sub(aa, true), sub(ab, false), tol) - intersectionDim(sub(ab, true), sub(aa, false), tol);
}

struct CrossingReport {
  double lambda = 0.0;
  Matrix kernelBasis;
  Matrix form;
  int signature = 0;
  bool nondegenerate = false;
  bool analyticDerivative = false;
};

struct SpectralFlowResult {
  int value = 0;
  std::string method;
  std::vector<CrossingReport> crossings;
  std::string diagnostics;
};

struct SpectralOptions {
  int grid = 257;          // uniform evaluation points for singularSet
  int oracleSamples = 513; // initial samples of the eigenvalue tracker
  int oracleRefine = 12;   // bisection depth of the tracker on ambiguous steps
  int maslovSamples = 33;  // initial samples of the graph path
};

namespace detail {

inline Vector sortedEigenvalues(const OperatorPath& path, double t) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(path.evaluate(t), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

inline std::vector<double> evaluationGrid(const OperatorPath& path, int count) {
  std::vector<double> ts;
  const int m = std::max(count, 2);
  for (int i = 0; i < m; ++i) ts.push_back(i + 1 == m ? path.b() : path.a() + (path.b() - path.a()) * i / (m - 1));
  for (double k : path.knots()) {
    if (k > path.a() && k < path.b()) ts.push_back(k);
  }
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  return ts;
}

/// Root of the k-th sorted eigenvalue on [lo, hi] with a sign change.
inline double bisectBranch(const OperatorPath& path, Eigen::Index k, double lo, double elo, double hi,
                           const Tolerances& tol) {
  for (int it = 0; it < 200 && hi - lo > tol.loc; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double e = sortedEigenvalues(path, mid)(k);
    if (e == 0.0) return mid;
    if ((e < 0.0) == (elo < 0.0)) {
      lo = mid;
      elo = e;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// Golden-section minimiser of |e_k| on [lo, hi].
inline std::pair<double, double> minimiseBranch(const OperatorPath& path, Eigen::Index k, double lo, double hi,
                                                const Tolerances& tol) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - g * (hi - lo);
  double x2 = lo + g * (hi - lo);
  double f1 = std::abs(sortedEigenvalues(path, x1)(k));
  double f2 = std::abs(sortedEigenvalues(path, x2)(k));
  for (int it = 0; it < 200 && hi - lo > tol.loc; ++it) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - g * (hi - lo);
      f1 = std::abs(sortedEigenvalues(path, x1)(k));
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + g * (hi - lo);
      f2 = std::abs(sortedEigenvalues(path, x2)(k));
    }
  }
  return f1 < f2 ? std::pair{x1, f1} : std::pair{x2, f2};
}

}  // namespace detail

/// Parameters where A(t) is singular, located to tol.loc. Each sorted
/// eigenvalue branch is continuous, so sign changes between grid points are
/// bisected; zeros touched without a sign change are found at grid points
/// and at local minima of |e_k|.
inline std::vector<double> singularSet(const OperatorPath& path, const SpectralOptions& opt = {},
                                       const Tolerances& tol = defaultTolerances()) {
  requireAdmissible(path, tol);
  const double thr = path.invertibilityThreshold(tol);
  const std::vector<double> ts = detail::evaluationGrid(path, opt.grid);
  std::vector<Vector> eig;
  eig.reserve(ts.size());
  for (double t : ts) eig.push_back(detail::sortedEigenvalues(path, t));

  std::vector<double> roots;
  const Eigen::Index n = path.n();
  for (Eigen::Index k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < ts.size(); ++i) {
      const double e = eig[i](k);
      if (i + 1 < ts.size() && std::abs(e) <= thr && std::abs(eig[i + 1](k)) <= thr) {
        throw Error(ErrorCode::NonIsolatedSingularity, "singular on [" + std::to_string(ts[i]) + ", " +
                                                           std::to_string(ts[i + 1]) + "]");
      }
      if (std::abs(e) <= thr) {
        roots.push_back(ts[i]);
        continue;
      }
      if (i + 1 < ts.size()) {
        const double next = eig[i + 1](k);
        if (std::abs(next) > thr && (e < 0.0) != (next < 0.0)) {
          roots.push_back(detail::bisectBranch(path, k, ts[i], e, ts[i + 1], tol));
        }
      }
      if (i > 0 && i + 1 < ts.size()) {
        const double prev = eig[i - 1](k);
        const double next = eig[i + 1](k);
        const bool sameSign = (prev < 0.0) == (e < 0.0) && (next < 0.0) == (e < 0.0);
        if (sameSign && std::abs(e) < std::abs(prev) && std::abs(e) < std::abs(next)) {
          const auto [tm, fm] = detail::minimiseBranch(path, k, ts[i - 1], ts[i + 1], tol);
          if (fm <= thr) roots.push_back(tm);
        }
      }
    }
  }
  std::sort(roots.begin(), roots.end());
  std::vector<double> merged;
  for (double r : roots) {
    if (merged.empty() || r - merged.back() > 10.0 * tol.loc) merged.push_back(r);
  }
  return merged;
}

/// Derivative of the path at t: analytic when available, else central
/// differences with one Richardson step.
inline Matrix pathDerivative(const OperatorPath& path, double t, bool* analytic = nullptr) {
  if (auto d = path.derivative(t)) {
    if (analytic) *analytic = true;
    return *d;
  }
  if (analytic) *analytic = false;
  const double h = std::max(1e-6, 1e-6 * std::abs(t));
  const auto diff = [&](double step) -> Matrix {
    const double lo = std::max(path.a(), t - step);
    const double hi = std::min(path.b(), t + step);
    return (path.evaluate(hi) - path.evaluate(lo)) / (hi - lo);
  };
  return symmetrize((4.0 * diff(0.5 * h) - diff(h)) / 3.0);
}

/// Kernel of A(t*) and the crossing form <A'(t*) h, h> restricted to it.
inline CrossingReport crossingForm(const OperatorPath& path, double tStar, const Tolerances& tol = defaultTolerances()) {
  const Matrix a = path.evaluate(tStar);
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  const Vector& e = es.eigenvalues();
  const double scale = std::max(1.0, path.endpointScale());
  const double kernelThr = tol.nd * scale;
  std::vector<Eigen::Index> cols;
  for (Eigen::Index i = 0; i < e.size(); ++i) {
    if (std::abs(e(i)) <= kernelThr) cols.push_back(i);
  }
  CrossingReport rep;
  rep.lambda = tStar;
  rep.kernelBasis.resize(a.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    rep.kernelBasis.col(static_cast<Eigen::Index>(j)) = es.eigenvectors().col(cols[j]);
  }
  if (cols.empty()) {
    throw Error(ErrorCode::InvalidArgument, "crossingForm: A(" + std::to_string(tStar) + ") is invertible");
  }
  const Matrix deriv = pathDerivative(path, tStar, &rep.analyticDerivative);
  rep.form = symmetrize(rep.kernelBasis.transpose() * deriv * rep.kernelBasis);
  const double ndThr = tol.nd * std::max(1.0, deriv.cwiseAbs().maxCoeff());
  const Inertia in = inertia(rep.form, ndThr);
  rep.signature = in.signature();
  rep.nondegenerate = in.zero == 0;
  return rep;
}

inline SpectralFlowResult spectralFlowViaMorse(const OperatorPath& path, const Tolerances& tol = defaultTolerances()) {
  requireAdmissible(path, tol);
  const double thr = path.invertibilityThreshold(tol);
  const int ma = morseIndex(path.evaluate(path.a()), thr, tol);
  const int mb = morseIndex(path.evaluate(path.b()), thr, tol);
  SpectralFlowResult r;
  r.value = ma - mb;
  r.method = "morse";
  r.diagnostics = "mu(A_a)=" + std::to_string(ma) + " mu(A_b)=" + std::to_string(mb);
  return r;
}

inline SpectralFlowResult spectralFlowViaCrossings(const OperatorPath& path, const SpectralOptions& opt = {},
                                                   const Tolerances& tol = defaultTolerances()) {
  SpectralFlowResult r;
  r.method = "crossing";
  for (double t : singularSet(path, opt, tol)) {
    CrossingReport c = crossingForm(path, t, tol);
    if (!c.nondegenerate) {
      throw Error(ErrorCode::DegenerateCrossing, "degenerate crossing at t=" + std::to_string(t));
    }
    r.value += c.signature;
    r.crossings.push_back(std::move(c));
  }
  r.diagnostics = std::to_string(r.crossings.size()) + " crossings";
  return r;
}

/// t -> graph(A(t)) as a path of Lagrangians in S(n).
inline LagrangianPath graphPath(const OperatorPath& path, int samples = 33) {
  return LagrangianPath::fromGenerator(
      path.a(), path.b(), [path](double t) { return graphLagrangian(path.evaluate(t)); }, samples);
}

/// m_{H0} of the graph path, computed in the reduction modulo I x {0} with I
/// a common isotropic subspace of the whole path.
inline SpectralFlowResult spectralFlowViaMaslov(const OperatorPath& path, const SpectralOptions& opt = {},
                                                const Tolerances& tol = defaultTolerances()) {
  requireAdmissible(path, tol);
  const LagrangianPath graph = graphPath(path, opt.maslovSamples);
  const CommonIsotropic common = commonIsotropic(graph, 0.1, tol);
  const ReductionContext ctx = ReductionContext::build(horizontalLift(common.basisInH), tol);
  const auto reduce = [ctx, tol](const LagrangianFrame& l) { return reduceLagrangian(ctx, l, false, false, tol); };
  const LagrangianPath reducedPath = LagrangianPath::fromGenerator(
      path.a(), path.b(), [path, reduce](double t) { return reduce(graphLagrangian(path.evaluate(t))); },
      static_cast<int>(graph.size()));
  SpectralFlowResult r;
  r.method = "maslov";
  r.value = relativeMaslovIndex(reducedPath, LagrangianFrame::horizontal(ctx.reducedN()), tol);
  r.diagnostics = "dim I = " + std::to_string(common.basisInH.cols()) +
                  ", reduced dimension " + std::to_string(ctx.reducedN()) +
                  ", isotropic margin " + std::to_string(common.margin);
  return r;
}

struct TrackedBranches {
  std::vector<double> lambda;
  std::vector<Vector> values;  // values[i](j) = eigenvalue of branch j at lambda[i]
};

namespace detail {

/// Matches eigenvectors of consecutive samples by overlap; returns the
/// permutation perm[j] = new column of old branch j, or empty if ambiguous.
inline std::vector<Eigen::Index> matchBranches(const Matrix& prev, const Matrix& cur) {
  const Eigen::Index n = prev.cols();
  const Matrix overlap = (prev.transpose() * cur).cwiseAbs2();
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n), -1);
  std::vector<bool> used(static_cast<std::size_t>(n), false);
  std::vector<std::tuple<double, Eigen::Index, Eigen::Index>> pairs;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) pairs.emplace_back(overlap(i, j), i, j);
  std::sort(pairs.begin(), pairs.end(), [](const auto& x, const auto& y) { return std::get<0>(x) > std::get<0>(y); });
  for (const auto& [o, i, j] : pairs) {
    if (perm[i] >= 0 || used[j]) continue;
    if (o < 0.5) return {};
    perm[i] = j;
    used[j] = true;
  }
  return perm;
}

}  // namespace detail

/// Eigenvalue branches followed by eigenvector continuity, with bisection of
/// steps whose matching is ambiguous.
inline TrackedBranches trackEigenvalues(const OperatorPath& path, const SpectralOptions& opt = {}) {
  const Eigen::Index n = path.n();
  TrackedBranches out;
  const auto solve = [&](double t) { return Eigen::SelfAdjointEigenSolver<Matrix>(path.evaluate(t)); };
  auto es = solve(path.a());
  Matrix vecs = es.eigenvectors();
  Vector vals = es.eigenvalues();
  out.lambda.push_back(path.a());
  out.values.push_back(vals);

  std::function<void(double, double, int)> advance = [&](double t0, double t1, int depth) {
    auto next = solve(t1);
    const auto perm = detail::matchBranches(vecs, next.eigenvectors());
    if (perm.empty()) {
      if (depth >= opt.oracleRefine) {
        throw Error(ErrorCode::BranchAmbiguity, "eigenvector matching ambiguous near t=" + std::to_string(t1));
      }
      const double tm = 0.5 * (t0 + t1);
      advance(t0, tm, depth + 1);
      advance(tm, t1, depth + 1);
      return;
    }
    Matrix nv(n, n);
    Vector ne(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      Vector v = next.eigenvectors().col(perm[j]);
      if (v.dot(vecs.col(j)) < 0.0) v = -v;
      nv.col(j) = v;
      ne(j) = next.eigenvalues()(perm[j]);
    }
    vecs = nv;
    vals = ne;
    out.lambda.push_back(t1);
    out.values.push_back(vals);
  };
  const int m = std::max(opt.oracleSamples, 2);
  double prev = path.a();
  for (int i = 1; i < m; ++i) {
    const double t = i + 1 == m ? path.b() : path.a() + (path.b() - path.a()) * i / (m - 1);
    advance(prev, t, 0);
    prev = t;
  }
  return out;
}

/// Signed count of zero crossings of tracked branches (up +1, down -1).
inline int eigenvalueTrackingOracle(const OperatorPath& path, const SpectralOptions& opt = {},
                                    const Tolerances& tol = defaultTolerances()) {
  requireAdmissible(path, tol);
  const TrackedBranches tr = trackEigenvalues(path, opt);
  const Eigen::Index n = path.n();
  int total = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    int lastSign = tr.values.front()(j) < 0.0 ? -1 : 1;
    for (const Vector& v : tr.values) {
      const double e = v(j);
      if (e == 0.0) continue;
      const int s = e < 0.0 ? -1 : 1;
      if (s != lastSign) total += s;
      lastSign = s;
    }
  }
  return total;
}

inline SpectralFlowResult spectralFlowViaOracle(const OperatorPath& path, const SpectralOptions& opt = {},
                                                const Tolerances& tol = defaultTolerances()) {
  SpectralFlowResult r;
  r.method = "oracle";
  r.value = eigenvalueTrackingOracle(path, opt, tol);
  r.diagnostics = std::to_string(opt.oracleSamples) + " initial samples";
  return r;
}

/// Random C^1 path A(t) = B0 + t B1 + t^2 B2 + t^3 B3 on [-1, 1] with
/// Gaussian symmetric coefficients, redrawn until both endpoints have
/// smallest |eigenvalue| at least `endpointGap`.
inline OperatorPath randomPolynomialPath(Eigen::Index n, std::mt19937_64& rng, double endpointGap = 0.05) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    std::vector<Matrix> c;
    for (int k = 0; k < 4; ++k) c.push_back(randomSymmetric(n, rng, 1.0 / (1 + k)));
    const auto eval = [c](double t) -> Matrix { return c[0] + t * (c[1] + t * (c[2] + t * c[3])); };
    const auto deriv = [c](double t) -> Matrix { return c[1] + t * (2.0 * c[2] + 3.0 * t * c[3]); };
    if (minAbsEigenvalue(eval(-1.0)) >= endpointGap && minAbsEigenvalue(eval(1.0)) >= endpointGap) {
      return OperatorPath::fromGenerator(-1.0, 1.0, n, eval, deriv);
    }
  }
  throw Error(ErrorCode::InvalidArgument, "randomPolynomialPath: no admissible draw");
}

}  // namespace specflow
