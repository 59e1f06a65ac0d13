#pragma once

// Finite-rank parametrices: for a path A(t) of symmetric matrices, a fixed
// subspace F and a continuous path R(t) of symmetric operators on F such that
// A(t) + I_F R(t) P_F is invertible for every t.
//
// The construction goes through Lagrangian paths. A transversal path to a
// pair (l0, l1) is built on a partition of the parameter interval: constant
// Lagrangians on each piece, joined by ramps inside a fixed component of the
// common transversals, with suspension when the component has to change.
//
// Inside the builder every Lagrangian is transverse to R0 = R^n x {0} and is
// stored as its J-graph {(Cv, v)} with C symmetric. For M = Jgraph(C) and
// L = Jgraph(G): M is transverse to L iff C - G is nondegenerate, and
// sign(R0, M, L) = -sign(C - G).

#include "specflow/specflow.hpp"

#include <Eigen/Eigenvalues>

#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <tuple>
#include <vector>

namespace specflow {

/// {(Cv, v)}: the Lagrangian transverse to R^n x {0} with parameter C.
inline LagrangianFrame jGraph(const Matrix& c) {
  const Eigen::Index n = c.rows();
  Matrix f(2 * n, n);
  f.topRows(n) = symmetrize(c);
  f.bottomRows(n).setIdentity();
  return LagrangianFrame::fromOrthonormal(symmetricOrthonormalize(f));
}

/// Inverse of jGraph; NotAGraph when L meets R^n x {0}.
inline Matrix jGraphParameter(const LagrangianFrame& l, const Tolerances& tol = defaultTolerances()) {
  const Eigen::Index n = l.n();
  const auto d = svd(l.basis().bottomRows(n));
  if (n > 0 && decideRank(d.s, tol, "jGraphParameter", 1.0) < n) {
    throw Error(ErrorCode::NotAGraph, "Lagrangian meets R^n x {0}");
  }
  const Matrix yinv = d.v * d.s.cwiseInverse().asDiagonal() * d.u.transpose();
  return symmetrize(l.basis().topRows(n) * yinv);
}

/// Block-diagonal sum of symmetric matrices; J-graphs of direct sums.
inline Matrix blockDiagonal(const Matrix& a, const Matrix& b) {
  Matrix out = Matrix::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  out.topLeftCorner(a.rows(), a.cols()) = a;
  out.bottomRightCorner(b.rows(), b.cols()) = b;
  return out;
}

/// J-graph parameter of the co-diagonal of S(k): diag(-I, I).
inline Matrix coDiagonalParameter(Eigen::Index k) {
  Vector d(k);
  d.head(k / 2).setConstant(-1.0);
  d.tail(k - k / 2).setConstant(1.0);
  return d.asDiagonal();
}

/// A path of nondegenerate symmetric matrices from D0 to D1 (equal inertia):
/// eigenvalues of D0 slide to ±1 with frozen eigenvectors, the eigenframe
/// rotates onto that of D1 inside SO(n), then the eigenvalues slide to D1's.
class InertiaPreservingPath {
 public:
  InertiaPreservingPath(const Matrix& d0, const Matrix& d1, const Tolerances& tol = defaultTolerances()) {
    const Eigen::Index n = d0.rows();
    n_ = n;
    Eigen::SelfAdjointEigenSolver<Matrix> e0(symmetrize(d0));
    Eigen::SelfAdjointEigenSolver<Matrix> e1(symmetrize(d1));
    const auto arrange = [n](const Eigen::SelfAdjointEigenSolver<Matrix>& es, Matrix& v, Vector& lam) {
      // positive eigenvalues first, then negative
      std::vector<Eigen::Index> order;
      for (Eigen::Index i = n - 1; i >= 0; --i) if (es.eigenvalues()(i) > 0.0) order.push_back(i);
      for (Eigen::Index i = 0; i < n; ++i) if (es.eigenvalues()(i) <= 0.0) order.push_back(i);
      v.resize(n, n);
      lam.resize(n);
      for (Eigen::Index j = 0; j < n; ++j) {
        v.col(j) = es.eigenvectors().col(order[static_cast<std::size_t>(j)]);
        lam(j) = es.eigenvalues()(order[static_cast<std::size_t>(j)]);
      }
    };
    arrange(e0, v0_, lam0_);
    arrange(e1, v1_, lam1_);
    for (Eigen::Index j = 0; j < n; ++j) {
      if ((lam0_(j) > 0.0) != (lam1_(j) > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "InertiaPreservingPath: inertia differs");
      }
      const double thr = tol.nd;
      if (std::abs(lam0_(j)) <= thr || std::abs(lam1_(j)) <= thr) {
        throw Error(ErrorCode::InvalidArgument, "InertiaPreservingPath: degenerate endpoint");
      }
    }
    sign_ = lam0_.unaryExpr([](double x) { return x > 0.0 ? 1.0 : -1.0; });
    if (n > 0 && v0_.determinant() < 0.0) v0_.col(n - 1) *= -1.0;
    if (n > 0 && v1_.determinant() < 0.0) v1_.col(n - 1) *= -1.0;
    buildRotation(v0_.transpose() * v1_);
  }

  /// D(s) for s in [0, 1].
  Matrix operator()(double s) const {
    s = std::clamp(s, 0.0, 1.0);
    if (s <= 1.0 / 3.0) {
      const double w = 3.0 * s;
      return v0_ * ((1.0 - w) * lam0_ + w * sign_).asDiagonal() * v0_.transpose();
    }
    if (s >= 2.0 / 3.0) {
      const double w = 3.0 * (1.0 - s);
      return v1_ * ((1.0 - w) * lam1_ + w * sign_).asDiagonal() * v1_.transpose();
    }
    const Matrix v = v0_ * rotation(3.0 * s - 1.0);
    return v * sign_.asDiagonal() * v.transpose();
  }

  /// exp(w log W) for the relative rotation W = V0^T V1.
  Matrix rotation(double w) const {
    Matrix t = Matrix::Identity(n_, n_);
    for (const auto& [i, j, theta] : planes_) {
      const double c = std::cos(w * theta);
      const double s = std::sin(w * theta);
      t(i, i) = c;
      t(j, j) = c;
      t(i, j) = -s;
      t(j, i) = s;
    }
    return schurBasis_ * t * schurBasis_.transpose();
  }

 private:
  void buildRotation(const Matrix& w) {
    if (n_ == 0) {
      schurBasis_ = Matrix(0, 0);
      return;
    }
    Eigen::RealSchur<Matrix> schur(w);
    const Matrix& t = schur.matrixT();
    schurBasis_ = schur.matrixU();
    std::vector<Eigen::Index> minusOnes;
    for (Eigen::Index i = 0; i < n_;) {
      if (i + 1 < n_ && std::abs(t(i + 1, i)) > 1e-12) {
        const double c = 0.5 * (t(i, i) + t(i + 1, i + 1));
        const double s = 0.5 * (t(i + 1, i) - t(i, i + 1));
        planes_.emplace_back(i, i + 1, std::atan2(s, c));
        i += 2;
      } else {
        if (t(i, i) < 0.0) minusOnes.push_back(i);
        ++i;
      }
    }
    for (std::size_t k = 0; k + 1 < minusOnes.size(); k += 2) {
      planes_.emplace_back(minusOnes[k], minusOnes[k + 1], std::numbers::pi);
    }
    if (minusOnes.size() % 2 != 0) {
      throw Error(ErrorCode::NumericallyAmbiguous, "InertiaPreservingPath: rotation has determinant -1");
    }
    const double err = (rotation(1.0) - w).norm();
    if (err > 1e-8 * std::max<double>(1.0, static_cast<double>(n_))) {
      throw Error(ErrorCode::NumericallyAmbiguous, "InertiaPreservingPath: rotation logarithm off by " +
                                                       std::to_string(err));
    }
  }

  Eigen::Index n_ = 0;
  Matrix v0_, v1_, schurBasis_;
  Vector lam0_, lam1_, sign_;
  std::vector<std::tuple<Eigen::Index, Eigen::Index, double>> planes_;
};

struct TransversalOptions {
  int kMax = -1;                // suspension budget; negative means 4n
  double reachMargin = 0.05;    // margin a constant piece must keep on grid points
  double switchMargin = 0.05;   // sigma_min of the R1-block of l(t_m) at partition points
  double rampMargin = 1e-3;     // margin along a ramp
  double reachFraction = 0.5;   // candidates within this fraction of the best reach compete on |d|
  int rampChecks = 32;
  int maxHalvings = 30;
  bool requireEndpoints = true;
};

struct TransversalPathResult {
  int k = 0;
  LagrangianPath path;                      // p(t) in S(n + k)
  std::function<Matrix(double)> canonical;  // C(t) with p_can(t) = Jgraph(C(t))
  std::vector<double> switches;
  std::vector<int> defects;                 // d at each switch
  std::vector<int> workingDims;             // n-bar at each switch
  std::vector<double> grid;
  double minMargin = 0.0;
};

namespace detail {

inline double pieceMargin(const Matrix& c, const LagrangianFrame& l, Eigen::Index s) {
  const Matrix bar = s > 0 ? directSumFrame(l.basis(), LagrangianFrame::vertical(s).basis()) : l.basis();
  return transversalityMargin(jGraph(c).basis(), bar);
}

inline double smoothstep(double x) {
  x = std::clamp(x, 0.0, 1.0);
  return x * x * (3.0 - 2.0 * x);
}

/// Builder of the canonical problem: l0 = R0 constant, l1 = l(t).
class CanonicalBuilder {
 public:
  CanonicalBuilder(std::function<LagrangianFrame(double)> l, std::vector<double> grid, Eigen::Index n,
                   TransversalOptions opt, const Tolerances& tol)
      : l_(std::move(l)), grid_(std::move(grid)), n_(n), opt_(opt), tol_(tol) {
    if (opt_.kMax < 0) opt_.kMax = static_cast<int>(4 * n_);
    frames_.reserve(grid_.size());
    for (double t : grid_) frames_.push_back(l_(t));
  }

  TransversalPathResult run() {
    const std::size_t last = grid_.size() - 1;
    std::size_t startIdx = 0;
    Matrix current = firstPiece();
    pieces_.push_back({grid_.front(), false, current, {}, {}, 0.0, 0});
    while (true) {
      const std::size_t reach = reachOf(current, startIdx);
      if (reach == last) break;
      const std::size_t m = switchPoint(startIdx, reach);
      const Eigen::Index s = dim() - n_;
      const Matrix gBar = blockDiagonal(jGraphParameter(frames_[m], tol_), Matrix::Zero(s, s));
      const Matrix cp = current;
      const int sigCurrent = tripleSignature(LagrangianFrame::horizontal(dim()), jGraph(cp), jGraph(gBar), tol_);

      std::optional<Matrix> chosen;
      std::size_t chosenReach = m;
      int chosenD = 0;
      selectCandidate(gBar, m, sigCurrent, chosen, chosenReach, chosenD);
      if (!chosen) {
        throw Error(ErrorCode::TransversalityLost, "no transversal candidate beyond t=" + std::to_string(grid_[m]));
      }
      if (m == 0) {
        // the first piece fails at once: start from the candidate instead, no
        // signature has to be matched yet
        current = *chosen;
        pieces_.front().c = current;
        continue;
      }
      Matrix from = cp;
      Matrix to = *chosen;
      Matrix g = gBar;
      workingDims_.push_back(static_cast<int>(dim()));
      defects_.push_back(chosenD);
      if (chosenD != 0) {
        const Eigen::Index k = std::abs(chosenD);
        if (k > 2 * dim()) throw Error(ErrorCode::ParityViolation, "signature defect out of range");
        if (suspension_ + static_cast<int>(k) > opt_.kMax) {
          throw Error(ErrorCode::SuspensionBudgetExceeded,
                      "need " + std::to_string(suspension_ + k) + " > kMax " + std::to_string(opt_.kMax));
        }
        suspensions_.push_back(k);
        suspension_ += static_cast<int>(k);
        from = blockDiagonal(from, coDiagonalParameter(k));
        to = blockDiagonal(to, -(chosenD > 0 ? 1.0 : -1.0) * Matrix::Identity(k, k));
        g = blockDiagonal(g, Matrix::Zero(k, k));
      }
      const double tm = grid_[m];
      const double tEnd = grid_[std::min(chosenReach, last)];
      auto ramp = std::make_shared<InertiaPreservingPath>(from - g, to - g, tol_);
      double delta = 0.5 * (tEnd - tm);
      int halvings = 0;
      while (!rampOk(*ramp, g, tm, delta)) {
        delta *= 0.5;
        if (++halvings > opt_.maxHalvings) {
          throw Error(ErrorCode::TransversalityLost, "ramp at t=" + std::to_string(tm) + " never certified");
        }
      }
      switches_.push_back(tm);
      pieces_.push_back({tm, true, g, ramp, {}, delta, suspensions_.size()});
      pieces_.push_back({tm + delta, false, to, {}, {}, 0.0, suspensions_.size()});
      current = to;
      startIdx = firstIndexAfter(tm + delta);
      if (startIdx > chosenReach) startIdx = chosenReach;
    }
    return finish();
  }

 private:
  struct Piece {
    double start;
    bool ramp;
    Matrix c;  // constant parameter, or G-bar for a ramp
    std::shared_ptr<InertiaPreservingPath> path;
    Matrix unused;
    double delta;
    std::size_t suspensionsBefore;
  };

  Eigen::Index dim() const { return n_ + suspension_; }

  Matrix firstPiece() {
    const LagrangianFrame& l = frames_.front();
    const LagrangianFrame r0 = LagrangianFrame::horizontal(n_);
    if (minSingularValue(l.basis().bottomRows(n_)) > opt_.switchMargin) {
      const Matrix g = jGraphParameter(l, tol_);
      std::optional<Matrix> best;
      std::size_t bestReach = 0;
      for (const Matrix& c : candidates(g, 0)) {
        const std::size_t r = reachOf(c, 0);
        if (!best || r > bestReach) {
          best = c;
          bestReach = r;
        }
      }
      if (best && bestReach > 0) return *best;
    }
    if (opt_.requireEndpoints && !cleanIntersection(l, r0, tol_).clean) {
      throw Error(ErrorCode::EndpointNotTransverse, "transversalPath: l0(a) meets l1(a)");
    }
    return jGraphParameter(transversalToPair(r0, l, tol_), tol_);
  }

  /// Arc-midpoint candidates, one per signature: directions of G sorted by
  /// their predicted motion, the fastest decreasing ones placed above.
  std::vector<Matrix> candidates(const Matrix& g, std::size_t m) const {
    const Eigen::Index nb = g.rows();
    Eigen::SelfAdjointEigenSolver<Matrix> es(g);
    const Matrix& q = es.eigenvectors();
    const Vector& lam = es.eigenvalues();
    Vector motion = Vector::Zero(nb);
    if (m + 1 < grid_.size() && minSingularValue(frames_[m + 1].basis().bottomRows(n_)) > 1e-6) {
      const Eigen::Index s = nb - n_;
      const Matrix gNext = blockDiagonal(jGraphParameter(frames_[m + 1], tol_), Matrix::Zero(s, s));
      motion = (q.transpose() * (gNext - g) * q).diagonal();
    }
    std::vector<Eigen::Index> order(static_cast<std::size_t>(nb));
    for (Eigen::Index i = 0; i < nb; ++i) order[static_cast<std::size_t>(i)] = i;
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) { return motion(x) < motion(y); });
    std::vector<Matrix> out;
    for (Eigen::Index j = 0; j <= nb; ++j) {
      Vector c(nb);
      for (Eigen::Index r = 0; r < nb; ++r) {
        const Eigen::Index i = order[static_cast<std::size_t>(r)];
        const double phi = std::atan2(1.0, lam(i));
        const double mid = r < j ? 0.5 * phi : 0.5 * (phi + std::numbers::pi);
        c(i) = std::cos(mid) / std::sin(mid);
      }
      out.push_back(q * c.asDiagonal() * q.transpose());
    }
    return out;
  }

  /// Last grid index up to which Jgraph(c) keeps the reach margin against
  /// l(t) + R1^s, checking grid points and midpoints from `from` on.
  std::size_t reachOf(const Matrix& c, std::size_t from) const {
    const Eigen::Index s = c.rows() - n_;
    if (detail::pieceMargin(c, frames_[from], s) < opt_.reachMargin) return from;
    std::size_t i = from;
    while (i + 1 < grid_.size()) {
      const double mid = 0.5 * (grid_[i] + grid_[i + 1]);
      if (detail::pieceMargin(c, l_(mid), s) < opt_.reachMargin) break;
      if (detail::pieceMargin(c, frames_[i + 1], s) < opt_.reachMargin) break;
      ++i;
    }
    return i;
  }

  std::size_t switchPoint(std::size_t start, std::size_t reach) const {
    std::size_t fallback = start;
    double best = 0.0;
    for (std::size_t m = reach; m > start; --m) {
      const double mar = minSingularValue(frames_[m].basis().bottomRows(n_));
      if (mar > opt_.switchMargin) return m;
      if (mar > best) {
        best = mar;
        fallback = m;
      }
    }
    if (best > 1e-6) return fallback;
    if (start == 0 && reach == 0 && minSingularValue(frames_[0].basis().bottomRows(n_)) > 1e-6) return 0;
    throw Error(ErrorCode::TransversalityLost, "no partition point transverse to R0 in (" +
                                                   std::to_string(grid_[start]) + ", " + std::to_string(grid_[reach]) + "]");
  }

  void selectCandidate(const Matrix& gBar, std::size_t m, int sigCurrent, std::optional<Matrix>& chosen,
                       std::size_t& chosenReach, int& chosenD) const {
    struct Cand {
      Matrix c;
      std::size_t reach;
      int d;
    };
    std::vector<Cand> cands;
    std::size_t best = m;
    const LagrangianFrame r0 = LagrangianFrame::horizontal(gBar.rows());
    const LagrangianFrame lbar = jGraph(gBar);
    for (const Matrix& c : candidates(gBar, m)) {
      const std::size_t r = reachOf(c, m);
      if (r <= m) continue;
      const int sig = tripleSignature(r0, jGraph(c), lbar, tol_);
      cands.push_back({c, r, sigCurrent - sig});
      best = std::max(best, r);
    }
    if (cands.empty()) return;
    const double need = grid_[m] + opt_.reachFraction * (grid_[best] - grid_[m]);
    for (const auto& c : cands) {
      if (grid_[c.reach] + 1e-15 < need) continue;
      const bool better = !chosen || std::abs(c.d) < std::abs(chosenD) ||
                          (std::abs(c.d) == std::abs(chosenD) && c.reach > chosenReach);
      if (better) {
        chosen = c.c;
        chosenReach = c.reach;
        chosenD = c.d;
      }
    }
  }

  bool rampOk(const InertiaPreservingPath& ramp, const Matrix& g, double tm, double delta) const {
    const Eigen::Index s = g.rows() - n_;
    for (int i = 0; i <= opt_.rampChecks; ++i) {
      const double t = tm + delta * i / opt_.rampChecks;
      const Matrix c = g + ramp(smoothstep((t - tm) / delta));
      if (detail::pieceMargin(c, l_(t), s) < opt_.rampMargin) return false;
    }
    return true;
  }

  std::size_t firstIndexAfter(double t) const {
    const auto it = std::lower_bound(grid_.begin(), grid_.end(), t);
    return std::min(static_cast<std::size_t>(it - grid_.begin()), grid_.size() - 1);
  }

  Matrix pad(Matrix c, std::size_t from) const {
    for (std::size_t j = from; j < suspensions_.size(); ++j) c = blockDiagonal(c, coDiagonalParameter(suspensions_[j]));
    return c;
  }

  Matrix evaluate(double t) const {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < pieces_.size(); ++i) {
      if (pieces_[i].start <= t) idx = i;
    }
    const Piece& p = pieces_[idx];
    if (!p.ramp) return pad(p.c, p.suspensionsBefore);
    return pad(p.c + (*p.path)(smoothstep((t - p.start) / p.delta)), p.suspensionsBefore);
  }

  TransversalPathResult finish() {
    TransversalPathResult r;
    r.k = suspension_;
    r.switches = switches_;
    r.defects = defects_;
    r.workingDims = workingDims_;
    r.grid = grid_;
    auto self = std::make_shared<CanonicalBuilder>(*this);
    r.canonical = [self](double t) { return self->evaluate(t); };
    return r;
  }

  std::function<LagrangianFrame(double)> l_;
  std::vector<double> grid_;
  std::vector<LagrangianFrame> frames_;
  Eigen::Index n_;
  TransversalOptions opt_;
  Tolerances tol_;
  int suspension_ = 0;
  std::vector<Eigen::Index> suspensions_;
  std::vector<Piece> pieces_;
  std::vector<double> switches_;
  std::vector<int> defects_;
  std::vector<int> workingDims_;
};

/// Grid containing `seed` refined until consecutive frames of every listed
/// path are within pathGap.
inline std::vector<double> refinedGrid(std::vector<double> seed,
                                       const std::vector<std::function<LagrangianFrame(double)>>& paths,
                                       const Tolerances& tol) {
  std::sort(seed.begin(), seed.end());
  seed.erase(std::unique(seed.begin(), seed.end()), seed.end());
  std::vector<double> out;
  std::function<void(double, double, int)> fill = [&](double lo, double hi, int level) {
    bool fine = true;
    for (const auto& p : paths) {
      if (gapDistance(p(lo), p(hi)) >= tol.pathGap) {
        fine = false;
        break;
      }
    }
    if (fine) {
      out.push_back(hi);
      return;
    }
    if (level >= tol.maxRefine) {
      throw Error(ErrorCode::RefinementExhausted, "path too fast near t=" + std::to_string(lo));
    }
    const double mid = 0.5 * (lo + hi);
    fill(lo, mid, level + 1);
    fill(mid, hi, level + 1);
  };
  out.push_back(seed.front());
  for (std::size_t i = 0; i + 1 < seed.size(); ++i) fill(seed[i], seed[i + 1], 0);
  return out;
}

/// Interleaved embedding of U in O(2n) ∩ Sp(2n) into S(n + k): U on the
/// first factor, identity on the suspension factor.
inline Matrix applyOnFirstFactor(const Matrix& u, const Matrix& frame, Eigen::Index n, Eigen::Index k) {
  Matrix out = frame;
  Matrix head(2 * n, frame.cols());
  head.topRows(n) = frame.topRows(n);
  head.bottomRows(n) = frame.middleRows(n + k, n);
  const Matrix moved = u * head;
  out.topRows(n) = moved.topRows(n);
  out.middleRows(n + k, n) = moved.bottomRows(n);
  return out;
}

inline Matrix unitaryBlock(const Matrix& frame) {
  const Eigen::Index n = frame.cols();
  Matrix u(2 * n, 2 * n);
  u << frame, applyJ(frame);
  return u;
}

}  // namespace detail

/// A path p in S(n + k) with p(t) transverse to l0(t) + R0^k and to
/// l1(t) + R1^k for every t. The problem is first moved to l0 = R0 by a
/// continuous family U(t) of unitary symplectic maps with U(t) R0 = l0(t).
inline TransversalPathResult transversalPath(const LagrangianPath& l0, const LagrangianPath& l1,
                                             TransversalOptions opt = {},
                                             const Tolerances& tol = defaultTolerances()) {
  if (l0.n() != l1.n()) throw Error(ErrorCode::DimensionMismatch, "transversalPath");
  if (std::abs(l0.a() - l1.a()) > 1e-14 || std::abs(l0.b() - l1.b()) > 1e-14) {
    throw Error(ErrorCode::InvalidArgument, "transversalPath: paths on different intervals");
  }
  const Eigen::Index n = l0.n();
  for (const bool start : {true, false}) {
    const auto& x = start ? l0.front() : l0.back();
    const auto& y = start ? l1.front() : l1.back();
    if (!cleanIntersection(x, y, tol).clean) {
      throw Error(ErrorCode::EndpointNotTransverse, "transversalPath: l0 and l1 meet at an endpoint");
    }
  }
  std::vector<double> seed = l0.times();
  seed.insert(seed.end(), l1.times().begin(), l1.times().end());
  const auto e0 = [&l0](double t) { return l0.evaluate(t); };
  const auto e1 = [&l1](double t) { return l1.evaluate(t); };
  const std::vector<double> grid = detail::refinedGrid(seed, {e0, e1}, tol);

  // Transported frame of l0 on the grid; between grid points the frame is
  // the polar part of the projection of the previous grid frame.
  std::vector<Matrix> transported;
  transported.reserve(grid.size());
  transported.push_back(l0.evaluate(grid.front()).basis());
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const Matrix p = l0.evaluate(grid[i]).projector();
    transported.push_back(symmetricOrthonormalize(p * transported.back()));
  }
  const auto frameAt = [grid, transported, l0](double t) -> Matrix {
    const auto it = std::upper_bound(grid.begin(), grid.end(), t);
    std::size_t i = it == grid.begin() ? 0 : static_cast<std::size_t>(it - grid.begin()) - 1;
    i = std::min(i, grid.size() - 1);
    if (t == grid[i]) return transported[i];
    return symmetricOrthonormalize(l0.evaluate(t).projector() * transported[i]);
  };
  const auto canonicalL = [frameAt, l1](double t) {
    const Matrix u = detail::unitaryBlock(frameAt(t));
    return LagrangianFrame::fromOrthonormal(symmetricOrthonormalize(u.transpose() * l1.evaluate(t).basis()));
  };
  detail::CanonicalBuilder builder(canonicalL, grid, n, opt, tol);
  TransversalPathResult res = builder.run();
  const Eigen::Index k = res.k;
  const auto canonical = res.canonical;
  res.path = LagrangianPath::fromGenerator(
      l0.a(), l0.b(),
      [canonical, frameAt, n, k](double t) {
        const Matrix pc = jGraph(canonical(t)).basis();
        const Matrix moved = detail::applyOnFirstFactor(detail::unitaryBlock(frameAt(t)), pc, n, k);
        return LagrangianFrame::fromOrthonormal(symmetricOrthonormalize(moved));
      },
      static_cast<int>(std::min<std::size_t>(grid.size(), 65)));
  double minMargin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (const double t : {grid[i], i + 1 < grid.size() ? 0.5 * (grid[i] + grid[i + 1]) : grid[i]}) {
      const Matrix p = res.path.evaluate(t).basis();
      const Matrix a0 = directSumFrame(l0.evaluate(t).basis(), LagrangianFrame::horizontal(k).basis());
      const Matrix a1 = directSumFrame(l1.evaluate(t).basis(), LagrangianFrame::vertical(k).basis());
      minMargin = std::min({minMargin, transversalityMargin(p, a0), transversalityMargin(p, a1)});
    }
  }
  if (!(minMargin > 10.0 * tol.rank)) {
    throw Error(ErrorCode::TransversalityLost, "certificate margin " + std::to_string(minMargin));
  }
  res.minMargin = minMargin;
  return res;
}

struct SingleInverse {
  Matrix f;  // orthonormal basis of F in H
  Matrix r;  // symmetric operator on F
  Matrix k;  // I_F R P_F
  double certificate = 0.0;
};

/// Finite-rank K = I_F R P_F with A + K invertible: I = range(A) meets
/// ker A trivially, F = I^perp, L is the reduction of graph(A) modulo I x {0}
/// and M = graph(-R) is transverse to L and F1. Passing an engine draws M at
/// random among transversals of the pair.
inline SingleInverse invertSingle(const Matrix& a, std::mt19937_64* rng = nullptr,
                                  const Tolerances& tol = defaultTolerances()) {
  requireSymmetric(a, tol, "invertSingle");
  const Eigen::Index n = a.rows();
  const Matrix s = symmetrize(a);
  Eigen::SelfAdjointEigenSolver<Matrix> es(s);
  const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  const double tauInv = tol.invRel * scale;
  SingleInverse out;
  if (es.eigenvalues().cwiseAbs().minCoeff() > tauInv) {
    out.f = Matrix(n, 0);
    out.r = Matrix(0, 0);
    out.k = Matrix::Zero(n, n);
    out.certificate = minSingularValue(s);
    return out;
  }
  const Matrix range = orthonormalSpan(s, tol);
  const ReductionContext ctx = ReductionContext::build(horizontalLift(range), tol);
  const Eigen::Index m = ctx.reducedN();
  const LagrangianFrame l = reduceLagrangian(ctx, graphLagrangian(s, tol), false, true, tol);
  const LagrangianFrame f1 = LagrangianFrame::vertical(m);
  LagrangianFrame mFrame;
  if (rng && cleanIntersection(l, f1, tol).clean) {
    Matrix sform;
    do {
      sform = randomSymmetric(m, *rng);
    } while (minAbsEigenvalue(sform) < 0.05);
    mFrame = LagrangianFrame::fromOrthonormal(transversalFrameForTransversePair(l.basis(), f1.basis(), sform), tol);
  } else {
    mFrame = transversalToPair(l, f1, tol);
  }
  out.f = ctx.horizontalComplement();
  out.r = -lagrangianToGraph(mFrame, tol);
  out.k = out.f * out.r * out.f.transpose();
  out.certificate = minSingularValue(s + out.k);
  if (!(out.certificate > tauInv)) {
    throw Error(ErrorCode::CertificateFailure, "sigma_min(A + K) = " + std::to_string(out.certificate));
  }
  return out;
}

struct ParametrixPath {
  double a = 0.0;
  double b = 1.0;
  Matrix f;                               // n x dim F, orthonormal
  std::function<Matrix(double)> r;        // symmetric dim F x dim F
  std::vector<double> grid;
  int absorbed = 0;                       // dimensions moved from I into F
  int rounds = 0;
  double minCertificate = 0.0;
  double tauInv = 0.0;

  Eigen::Index dimF() const { return f.cols(); }

  Matrix k(double t) const {
    if (f.cols() == 0) return Matrix::Zero(f.rows(), f.rows());
    return f * r(t) * f.transpose();
  }
};

struct CertificateReplay {
  bool ok = true;
  double minSigma = std::numeric_limits<double>::infinity();
  double worstLambda = 0.0;
  int maxRank = 0;
};

/// sigma_min(A(t) + K(t)) at `count` uniform points; rank of K(t) alongside.
inline CertificateReplay replayCertificate(const OperatorPath& path, const ParametrixPath& p, int count) {
  CertificateReplay rep;
  for (int i = 0; i < count; ++i) {
    const double t = i + 1 == count ? p.b : p.a + (p.b - p.a) * i / (count - 1);
    const Matrix k = p.k(t);
    const double sig = minSingularValue(path.evaluate(t) + k);
    if (sig < rep.minSigma) {
      rep.minSigma = sig;
      rep.worstLambda = t;
    }
    if (k.size() > 0 && k.cwiseAbs().maxCoeff() > 0.0) {
      const auto d = svd(k);
      int r = 0;
      for (Eigen::Index j = 0; j < d.s.size(); ++j) {
        if (d.s(j) > 1e-12 * d.s(0)) ++r;
      }
      rep.maxRank = std::max(rep.maxRank, r);
    }
  }
  rep.ok = rep.minSigma > p.tauInv;
  return rep;
}

namespace detail {

/// k directions of span(basis) along which the compression of A(t) to the
/// span is closest to singular over the grid.
inline Matrix absorbDirections(const OperatorPath& path, const Matrix& basis, Eigen::Index k,
                               const std::vector<double>& grid, const Tolerances& tol) {
  std::vector<std::pair<double, Vector>> scored;
  for (double t : grid) {
    const Matrix comp = symmetrize(basis.transpose() * path.evaluate(t) * basis);
    Eigen::SelfAdjointEigenSolver<Matrix> es(comp);
    for (Eigen::Index j = 0; j < comp.rows(); ++j) {
      scored.emplace_back(std::abs(es.eigenvalues()(j)), es.eigenvectors().col(j));
    }
  }
  std::stable_sort(scored.begin(), scored.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  Matrix chosen(basis.cols(), 0);
  for (const auto& [score, v] : scored) {
    if (chosen.cols() == k) break;
    Vector w = v - chosen * (chosen.transpose() * v);
    if (w.norm() < 0.5) continue;
    chosen.conservativeResize(Eigen::NoChange, chosen.cols() + 1);
    chosen.col(chosen.cols() - 1) = w.normalized();
  }
  for (Eigen::Index j = 0; chosen.cols() < k && j < basis.cols(); ++j) {
    Vector w = Vector::Unit(basis.cols(), j);
    w -= chosen * (chosen.transpose() * w);
    if (w.norm() < 0.5) continue;
    chosen.conservativeResize(Eigen::NoChange, chosen.cols() + 1);
    chosen.col(chosen.cols() - 1) = w.normalized();
  }
  (void)tol;
  return basis * chosen;
}

}  // namespace detail

struct ParametrixOptions {
  int samples = 65;
  TransversalOptions transversal;
  int maxRounds = 8;
};

/// Parametrix construction: common isotropic I of the graph path, reduced
/// path l in S(F), transversal path to (l, F1) via the canonical builder
/// applied to J l. A nonzero suspension k is absorbed by moving k directions
/// of I into F and rebuilding, until no suspension is needed.
inline ParametrixPath parametrixPath(const OperatorPath& path, const ParametrixOptions& opt = {},
                                     const Tolerances& tol = defaultTolerances()) {
  const Eigen::Index n = path.n();
  ParametrixPath out;
  out.a = path.a();
  out.b = path.b();
  std::vector<double> seed = detail::evaluationGrid(path, opt.samples);

  double scale = 1.0;
  for (double t : seed) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(path.evaluate(t), Eigen::EigenvaluesOnly);
    scale = std::max(scale, es.eigenvalues().cwiseAbs().maxCoeff());
  }
  out.tauInv = tol.invRel * scale;

  bool invertibleEverywhere = true;
  for (std::size_t i = 0; i < seed.size() && invertibleEverywhere; ++i) {
    const double t0 = seed[i];
    const double t1 = i + 1 < seed.size() ? 0.5 * (seed[i] + seed[i + 1]) : seed[i];
    invertibleEverywhere = minAbsEigenvalue(path.evaluate(t0)) > 1e3 * out.tauInv &&
                           minAbsEigenvalue(path.evaluate(t1)) > 1e3 * out.tauInv;
  }
  if (invertibleEverywhere) {
    // the sorted-eigenvalue scan of the spectral-flow module decides it for the whole path
    try {
      const OperatorPath probe = path;
      if (singularSet(probe, SpectralOptions{}, tol).empty()) {
        out.f = Matrix(n, 0);
        out.r = [](double) { return Matrix(0, 0); };
        out.grid = seed;
        out.minCertificate = replayCertificate(path, out, static_cast<int>(10 * seed.size())).minSigma;
        return out;
      }
    } catch (const Error&) {
    }
  }

  const LagrangianPath graph = graphPath(path, opt.samples);
  const CommonIsotropic common = commonIsotropic(graph, 0.1, tol);
  Matrix iso = common.basisInH;
  Matrix f = common.complementInH;

  for (int round = 0; round < opt.maxRounds; ++round) {
    out.rounds = round + 1;
    const ReductionContext ctx = ReductionContext::build(horizontalLift(iso), tol);
    const Eigen::Index m = ctx.reducedN();
    const auto rotated = [path, ctx, tol](double t) {
      const LagrangianFrame red = reduceLagrangian(ctx, graphLagrangian(path.evaluate(t)), false, false, tol);
      return LagrangianFrame::fromOrthonormal(applyJ(red.basis()));
    };
    const std::vector<double> grid = detail::refinedGrid(seed, {rotated}, tol);
    TransversalOptions topt = opt.transversal;
    topt.requireEndpoints = false;
    if (topt.kMax < 0) topt.kMax = static_cast<int>(4 * m);
    detail::CanonicalBuilder builder(rotated, grid, m, topt, tol);
    const TransversalPathResult res = builder.run();
    if (res.k == 0) {
      out.f = ctx.horizontalComplement();
      out.r = res.canonical;
      out.grid = grid;
      break;
    }
    if (iso.cols() == 0) {
      throw Error(ErrorCode::AmbientTooSmall,
                  "suspension " + std::to_string(res.k) + " needed with I = {0}" +
                      "; pad the ambient space with A(t) + c Id on extra coordinates");
    }
    // a suspension larger than I is absorbed in part; the next round rebuilds
    const Eigen::Index take = std::min<Eigen::Index>(res.k, iso.cols());
    const Matrix v = detail::absorbDirections(path, iso, take, grid, tol);
    f = orthonormalSpan((Matrix(n, f.cols() + v.cols()) << f, v).finished(), tol);
    iso = orthogonalComplement(f, tol);
    out.absorbed += static_cast<int>(take);
    if (round + 1 == opt.maxRounds) {
      throw Error(ErrorCode::SuspensionBudgetExceeded, "absorption did not converge");
    }
  }
  (void)f;

  double minSig = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < out.grid.size(); ++i) {
    for (const double t : {out.grid[i], i + 1 < out.grid.size() ? 0.5 * (out.grid[i] + out.grid[i + 1]) : out.grid[i]}) {
      const double sig = minSingularValue(path.evaluate(t) + out.k(t));
      if (sig < minSig) minSig = sig;
      if (!(sig > out.tauInv)) {
        throw Error(ErrorCode::CertificateFailure, "sigma_min(A + K) = " + std::to_string(sig) +
                                                       " at t=" + std::to_string(t));
      }
    }
  }
  out.minCertificate = minSig;
  return out;
}

}  // namespace specflow
