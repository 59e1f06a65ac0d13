#pragma once

// Generators and independent oracles shared by the test suites. Oracles here
// avoid the library's own routines for the quantity they referee.

#include "specflow/linalg.hpp"
#include "specflow/symlin.hpp"

#include <complex>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

namespace testing_support {

using specflow::Matrix;
using specflow::Vector;

inline Matrix gaussian(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = g(rng);
  return m;
}

inline Matrix symmetric(Eigen::Index n, std::mt19937_64& rng) {
  const Matrix g = gaussian(n, n, rng);
  return 0.5 * (g + g.transpose());
}

inline Matrix orthogonal(Eigen::Index n, std::mt19937_64& rng) {
  Eigen::HouseholderQR<Matrix> qr(gaussian(n, n, rng));
  Matrix q = qr.householderQ();
  for (Eigen::Index j = 0; j < n; ++j) {
    if (qr.matrixQR()(j, j) < 0.0) q.col(j) *= -1.0;
  }
  return q;
}

/// Symmetric matrix with prescribed spectrum in a random eigenbasis.
inline Matrix withSpectrum(const Vector& eig, std::mt19937_64& rng) {
  const Matrix q = orthogonal(eig.size(), rng);
  return q * eig.asDiagonal() * q.transpose();
}

inline int uniformInt(int lo, int hi, std::mt19937_64& rng) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

/// Unitary-group sample: [Re U; Im U] spans a Lagrangian, every Lagrangian arises.
inline Matrix lagrangianBasis(Eigen::Index n, std::mt19937_64& rng) {
  const Matrix a = orthogonal(n, rng);
  const Matrix b = symmetric(n, rng);
  // frame of graph(b) rotated by the unitary a + 0i acting on both blocks, then
  // a random unitary phase exp(i theta) per direction
  std::uniform_real_distribution<double> u(0.0, 2.0 * std::numbers::pi);
  Matrix x(n, n), y(n, n);
  Eigen::SelfAdjointEigenSolver<Matrix> es(b);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double th = u(rng);
    x.col(j) = std::cos(th) * es.eigenvectors().col(j);
    y.col(j) = std::sin(th) * es.eigenvectors().col(j);
  }
  Matrix f(2 * n, n);
  f.topRows(n) = a * x;
  f.bottomRows(n) = a * y;
  return f;
}

/// Lagrangian L with dim(L ∩ ref) = k exactly: keep k directions of ref and
/// rotate the remaining ones off it by a nondegenerate form.
inline Matrix lagrangianMeeting(const Matrix& refFrame, int k, std::mt19937_64& rng) {
  const Eigen::Index n = refFrame.cols();
  Vector d(n);
  std::uniform_real_distribution<double> mag(0.5, 2.0);
  for (Eigen::Index i = 0; i < n; ++i) d(i) = i < k ? 0.0 : (uniformInt(0, 1, rng) ? 1.0 : -1.0) * mag(rng);
  const Matrix q = orthogonal(n, rng);
  const Matrix form = q * d.asDiagonal() * q.transpose();
  // refFrame + J refFrame form : in the (ref, J ref) chart
  Matrix jr(refFrame.rows(), n);
  jr.topRows(n) = -refFrame.bottomRows(n);
  jr.bottomRows(n) = refFrame.topRows(n);
  return refFrame + jr * form;
}

/// Winding of arg det(X + iY)^2 sampled at `count` points, unwrapped
/// naively. Needs dense sampling; independent of the library unwrapping.
inline int denseWinding(const std::function<Matrix(double)>& frame, double a, double b, int count) {
  double total = 0.0;
  std::complex<double> prev;
  for (int i = 0; i <= count; ++i) {
    const double t = a + (b - a) * i / count;
    const Matrix f = frame(t);
    const Eigen::Index n = f.cols();
    // orthonormalise so that X + iY is unitary
    Eigen::JacobiSVD<Matrix> svd(f, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Matrix q = svd.matrixU() * svd.matrixV().transpose();
    Eigen::MatrixXcd z(n, n);
    z.real() = q.topRows(n);
    z.imag() = q.bottomRows(n);
    const std::complex<double> d = z.determinant();
    const std::complex<double> d2 = d * d / std::norm(d);
    if (i > 0) total += std::arg(d2 * std::conj(prev));
    prev = d2;
  }
  return static_cast<int>(std::lround(total / (2.0 * std::numbers::pi)));
}

/// Signature of a symmetric matrix by Sylvester counting on eigenvalues.
inline int signatureOf(const Matrix& s, double thr = 1e-9) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (s + s.transpose()), Eigen::EigenvaluesOnly);
  int sig = 0;
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    if (es.eigenvalues()(i) > thr) ++sig;
    if (es.eigenvalues()(i) < -thr) --sig;
  }
  return sig;
}

inline int negativeCount(const Matrix& s) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (s + s.transpose()), Eigen::EigenvaluesOnly);
  return static_cast<int>((es.eigenvalues().array() < 0.0).count());
}

/// Spectral flow by counting sign changes of sorted eigenvalues on a fine
/// grid; valid for paths whose eigenvalues cross zero transversally and
/// never collide near zero.
inline int sortedSignChanges(const std::function<Matrix(double)>& a, double lo, double hi, int count) {
  Eigen::SelfAdjointEigenSolver<Matrix> es0(a(lo), Eigen::EigenvaluesOnly);
  int negPrev = static_cast<int>((es0.eigenvalues().array() < 0.0).count());
  int flow = 0;
  for (int i = 1; i <= count; ++i) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(a(lo + (hi - lo) * i / count), Eigen::EigenvaluesOnly);
    const int neg = static_cast<int>((es.eigenvalues().array() < 0.0).count());
    flow += negPrev - neg;
    negPrev = neg;
  }
  return flow;
}

/// Closed-form eigenvalues of the Dirichlet second-difference matrix with N
/// interior nodes on (0, length): (2/h^2)(1 - cos(k pi/(N+1))).
inline std::vector<double> discreteLaplacianEigenvalues(int nodes, double length) {
  const double h = length / (nodes + 1);
  std::vector<double> out;
  for (int k = 1; k <= nodes; ++k) out.push_back(2.0 / (h * h) * (1.0 - std::cos(k * std::numbers::pi / (nodes + 1))));
  return out;
}

/// Loop t -> exp(i theta_j(t)) on each line of a rotated coordinate frame
/// with theta_j = pi w_j t + a_j sin(2 pi t); Maslov index sum(w_j). The
/// first `parked` lines stay near the vertical (w_j = 0, theta_j around
/// pi/2) so the loop keeps away from part of the horizontal, and the whole
/// loop is then moved by the constant unitary exp(i mix S).
struct RandomLoop {
  std::function<Matrix(double)> frame;
  int index = 0;
};

inline RandomLoop randomLoop(Eigen::Index n, std::mt19937_64& rng, int maxTurns = 2, Eigen::Index parked = 0,
                             double mix = 0.0) {
  std::vector<int> w(static_cast<std::size_t>(n));
  std::vector<double> amp(static_cast<std::size_t>(n)), base(static_cast<std::size_t>(n), 0.0);
  RandomLoop out;
  for (std::size_t j = 0; j < w.size(); ++j) {
    const bool park = static_cast<Eigen::Index>(j) < parked;
    w[j] = park ? 0 : uniformInt(-maxTurns, maxTurns, rng);
    amp[j] = std::uniform_real_distribution<double>(0.0, park ? 0.8 : 1.0)(rng);
    if (park) base[j] = 0.5 * std::numbers::pi;
    out.index += w[j];
  }
  const Matrix q = orthogonal(n, rng);
  const Matrix u = orthogonal(n, rng);
  Vector mu(n);
  for (Eigen::Index i = 0; i < n; ++i) mu(i) = mix * std::normal_distribution<double>()(rng);
  const Matrix cr = u * Vector(mu.array().cos()).asDiagonal() * u.transpose();
  const Matrix sr = u * Vector(mu.array().sin()).asDiagonal() * u.transpose();
  out.frame = [=](double t) {
    Matrix f = Matrix::Zero(2 * n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto k = static_cast<std::size_t>(j);
      const double th = base[k] + std::numbers::pi * w[k] * t + amp[k] * std::sin(2.0 * std::numbers::pi * t);
      f.block(0, j, n, 1) = std::cos(th) * q.col(j);
      f.block(n, j, n, 1) = std::sin(th) * q.col(j);
    }
    Matrix g(2 * n, n);
    g.topRows(n) = cr * f.topRows(n) - sr * f.bottomRows(n);
    g.bottomRows(n) = sr * f.topRows(n) + cr * f.bottomRows(n);
    return g;
  };
  return out;
}

}  // namespace testing_support
