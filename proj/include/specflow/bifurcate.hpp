#pragma once

// Bifurcation from the trivial branch of f(t, u) = A(t) u + F(t, u) = 0 with
// F(t, 0) = 0 and D_u F(t, 0) = 0: candidates are the singular points of A,
// certified by nondegenerate crossing forms of nonzero signature, and the
// spectral flow bounds the number of bifurcation points from below.

#include "specflow/specflow.hpp"

#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace specflow {

struct VariationalFamily {
  using Field = std::function<Vector(double, const Vector&)>;
  using Jacobian = std::function<Matrix(double, const Vector&)>;
  using Potential = std::function<double(double, const Vector&)>;

  OperatorPath linearPath;
  Field nonlinearity;
  Jacobian nonlinearityJacobian;  // D_u F; finite differences when empty
  Potential potential;            // optional, grad_u potential = F
  std::string tag;

  Vector residual(double t, const Vector& u) const { return linearPath.evaluate(t) * u + nonlinearity(t, u); }

  Matrix jacobianOfF(double t, const Vector& u) const {
    if (nonlinearityJacobian) return nonlinearityJacobian(t, u);
    const Eigen::Index n = u.size();
    Matrix j(n, n);
    const double h = 1e-6 * std::max(1.0, u.norm());
    for (Eigen::Index k = 0; k < n; ++k) {
      Vector up = u, um = u;
      up(k) += h;
      um(k) -= h;
      j.col(k) = (nonlinearity(t, up) - nonlinearity(t, um)) / (2.0 * h);
    }
    return j;
  }

  Vector dFdt(double t, const Vector& u) const {
    const double h = 1e-6 * std::max(1.0, std::abs(t));
    return (nonlinearity(t + h, u) - nonlinearity(t - h, u)) / (2.0 * h);
  }
};

/// F(u) = c u^k componentwise for odd k, with potential c/(k+1) sum u^{k+1}.
inline VariationalFamily powerFamily(OperatorPath path, double coefficient, int power, std::string tag) {
  VariationalFamily fam;
  fam.linearPath = std::move(path);
  fam.nonlinearity = [coefficient, power](double, const Vector& u) {
    return Vector(coefficient * u.array().pow(power));
  };
  fam.nonlinearityJacobian = [coefficient, power](double, const Vector& u) {
    return Matrix((coefficient * power * u.array().pow(power - 1)).matrix().asDiagonal());
  };
  fam.potential = [coefficient, power](double, const Vector& u) {
    return coefficient / (power + 1) * u.array().pow(power + 1).sum();
  };
  fam.tag = std::move(tag);
  return fam;
}

inline VariationalFamily cubicFamily(OperatorPath path, double coefficient = 1.0) {
  return powerFamily(std::move(path), coefficient, 3, "cubic");
}

inline VariationalFamily quinticFamily(OperatorPath path, double coefficient = 1.0) {
  return powerFamily(std::move(path), coefficient, 5, "quintic");
}

inline VariationalFamily linearFamily(OperatorPath path) {
  VariationalFamily fam;
  const Eigen::Index n = path.n();
  fam.linearPath = std::move(path);
  fam.nonlinearity = [n](double, const Vector&) { return Vector(Vector::Zero(n)); };
  fam.nonlinearityJacobian = [n](double, const Vector&) { return Matrix(Matrix::Zero(n, n)); };
  fam.potential = [](double, const Vector&) { return 0.0; };
  fam.tag = "none";
  return fam;
}

struct FamilyContract {
  double maxValueAtZero = 0.0;       // max ||F(t, 0)||
  double maxJacobianAtZero = 0.0;    // max ||D_u F(t, 0)|| by finite differences
  double maxGradientMismatch = 0.0;  // |<F, v> - d potential[v]|, potential families only
  double maxJacobianAsymmetry = 0.0;
  bool ok = true;
};

/// Spot checks of the structural assumptions at `count` random points.
inline FamilyContract checkFamily(const VariationalFamily& fam, std::mt19937_64& rng, int count = 20) {
  FamilyContract c;
  const Eigen::Index n = fam.linearPath.n();
  std::uniform_real_distribution<double> par(fam.linearPath.a(), fam.linearPath.b());
  std::normal_distribution<double> gauss;
  const auto randomVector = [&] {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = gauss(rng);
    return v;
  };
  const Vector zero = Vector::Zero(n);
  for (int i = 0; i < count; ++i) {
    const double t = par(rng);
    c.maxValueAtZero = std::max(c.maxValueAtZero, fam.nonlinearity(t, zero).norm());
    const double h = 1e-4;
    Matrix j(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
      const Vector e = h * Vector::Unit(n, k);
      j.col(k) = (fam.nonlinearity(t, e) - fam.nonlinearity(t, -e)) / (2.0 * h);
    }
    c.maxJacobianAtZero = std::max(c.maxJacobianAtZero, j.norm());
    if (fam.potential) {
      const Vector u = 0.5 * randomVector();
      const Vector v = randomVector().normalized();
      const double g = 1e-5;
      const double dir = (fam.potential(t, u + g * v) - fam.potential(t, u - g * v)) / (2.0 * g);
      c.maxGradientMismatch = std::max(c.maxGradientMismatch, std::abs(dir - fam.nonlinearity(t, u).dot(v)));
      Matrix ju(n, n);
      for (Eigen::Index k = 0; k < n; ++k) {
        const Vector e = g * Vector::Unit(n, k);
        ju.col(k) = (fam.nonlinearity(t, u + e) - fam.nonlinearity(t, u - e)) / (2.0 * g);
      }
      c.maxJacobianAsymmetry = std::max(c.maxJacobianAsymmetry, (ju - ju.transpose()).cwiseAbs().maxCoeff());
    }
  }
  c.ok = c.maxValueAtZero < 1e-12 && c.maxJacobianAtZero < 1e-6 && c.maxGradientMismatch < 1e-6 &&
         c.maxJacobianAsymmetry < 1e-5;
  return c;
}

/// 3-point Dirichlet discretization of -u'' + q u on (0, length) with N
/// interior nodes, shifted to A - t Id for t in [a, b].
inline OperatorPath discretizeSturmLiouville(int nodes, double length, const std::function<double(double)>& q,
                                             double a, double b) {
  if (nodes < 3) throw Error(ErrorCode::InvalidArgument, "discretizeSturmLiouville: N >= 3");
  const Eigen::Index n = nodes;
  const double h = length / (nodes + 1);
  Matrix base = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    base(i, i) = 2.0 / (h * h) + (q ? q(h * static_cast<double>(i + 1)) : 0.0);
    if (i + 1 < n) {
      base(i, i + 1) = -1.0 / (h * h);
      base(i + 1, i) = -1.0 / (h * h);
    }
  }
  return OperatorPath::fromGenerator(
      a, b, n, [base](double t) { return Matrix(base - t * Matrix::Identity(base.rows(), base.cols())); },
      [n](double) { return Matrix(-Matrix::Identity(n, n)); });
}

struct BifurcationCandidate {
  double lambda = 0.0;
  int kernelDim = 0;
  int signature = 0;
  bool nondegenerate = false;
  bool certified = false;
  Matrix kernel;
};

struct BranchPoint {
  double lambda = 0.0;
  Vector u;
  double norm = 0.0;
  double residual = 0.0;
  int iterations = 0;
};

struct BranchRecord {
  double lambdaStar = 0.0;
  bool verified = false;
  std::vector<BranchPoint> points;
  double exponent = 0.0;  // slope of log||u|| against log|t - t*|
  double maxResidual = 0.0;
  std::string failure;
};

struct BifurcationReport {
  std::vector<BifurcationCandidate> candidates;
  std::vector<double> excludedNearEndpoints;
  int totalSf = 0;
  std::string sfMethod;
  int maxKernelDim = 1;
  int guaranteedCount = 0;
  std::vector<BranchRecord> verifiedBranches;
};

/// floor(|sf| / m) with m the largest kernel dimension among candidates.
inline int countingBound(const BifurcationReport& report) {
  const int m = std::max(1, report.maxKernelDim);
  const int bound = std::abs(report.totalSf) / m;
  bool allNondegenerate = true;
  int certified = 0;
  for (const auto& c : report.candidates) {
    allNondegenerate = allNondegenerate && c.nondegenerate;
    certified += c.certified ? 1 : 0;
  }
  if (allNondegenerate && certified < bound) {
    throw Error(ErrorCode::NumericallyAmbiguous, "countingBound: fewer certified candidates than the bound");
  }
  return bound;
}

inline BifurcationReport detectCandidates(const VariationalFamily& fam, const SpectralOptions& opt = {},
                                          const Tolerances& tol = defaultTolerances()) {
  const OperatorPath& path = fam.linearPath;
  requireAdmissible(path, tol);
  BifurcationReport rep;
  for (double t : singularSet(path, opt, tol)) {
    if (t - path.a() <= tol.loc * 10.0 || path.b() - t <= tol.loc * 10.0) {
      rep.excludedNearEndpoints.push_back(t);
      continue;
    }
    const CrossingReport cr = crossingForm(path, t, tol);
    BifurcationCandidate c;
    c.lambda = t;
    c.kernelDim = static_cast<int>(cr.kernelBasis.cols());
    c.signature = cr.signature;
    c.nondegenerate = cr.nondegenerate;
    c.certified = cr.nondegenerate && cr.signature != 0;
    c.kernel = cr.kernelBasis;
    rep.maxKernelDim = std::max(rep.maxKernelDim, c.kernelDim);
    rep.candidates.push_back(std::move(c));
  }
  try {
    const SpectralFlowResult sf = spectralFlowViaCrossings(path, opt, tol);
    rep.totalSf = sf.value;
    rep.sfMethod = sf.method;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateCrossing) throw;
    const SpectralFlowResult sf = spectralFlowViaMaslov(path, opt, tol);
    rep.totalSf = sf.value;
    rep.sfMethod = sf.method;
  }
  rep.guaranteedCount = countingBound(rep);
  return rep;
}

struct BranchOptions {
  double eps0 = 0.1;  // first amplitude relative to ||kernelDir||
  int rungs = 8;      // J
  int maxIterations = 50;
  double residualTol = 1e-10;
};

namespace detail {

struct NewtonOutcome {
  bool converged = false;
  double lambda = 0.0;
  Vector u;
  double residual = 0.0;
  int iterations = 0;
};

/// Damped Newton on {f(t, u) = 0, <u, phi> = eps} with Armijo backtracking.
inline NewtonOutcome borderedNewton(const VariationalFamily& fam, const Vector& phi, double eps, double t0,
                                    Vector u0, const BranchOptions& opt) {
  const Eigen::Index n = phi.size();
  const auto system = [&](double t, const Vector& u) {
    Vector g(n + 1);
    g.head(n) = fam.residual(t, u);
    g(n) = u.dot(phi) - eps;
    return g;
  };
  NewtonOutcome out;
  double t = t0;
  Vector u = std::move(u0);
  Vector g = system(t, u);
  for (int it = 0; it < opt.maxIterations; ++it) {
    out.iterations = it;
    if (g.head(n).norm() < 0.01 * opt.residualTol && std::abs(g(n)) < 1e-14) break;
    Matrix jac = Matrix::Zero(n + 1, n + 1);
    jac.topLeftCorner(n, n) = fam.linearPath.evaluate(t) + fam.jacobianOfF(t, u);
    const std::optional<Matrix> adot = fam.linearPath.derivative(t);
    const Matrix dA = adot ? *adot : pathDerivative(fam.linearPath, t);
    jac.topRightCorner(n, 1) = dA * u + fam.dFdt(t, u);
    jac.bottomLeftCorner(1, n) = phi.transpose();
    const Vector step = jac.partialPivLu().solve(-g);
    if (!step.allFinite()) break;
    double alpha = 1.0;
    const double merit = g.norm();
    Vector gNew;
    while (true) {
      gNew = system(t + alpha * step(n), u + alpha * step.head(n));
      if (gNew.norm() <= (1.0 - 1e-4 * alpha) * merit || alpha < 1e-9) break;
      alpha *= 0.5;
    }
    t += alpha * step(n);
    u += alpha * step.head(n);
    const bool stalled = gNew.norm() >= merit;
    g = gNew;
    out.iterations = it + 1;
    if (stalled && alpha < 1e-9) break;
  }
  out.lambda = t;
  out.u = u;
  out.residual = g.head(n).norm();
  out.converged = out.residual < opt.residualTol && std::abs(g(n)) < 1e-12 && u.allFinite();
  return out;
}

}  // namespace detail

/// Numerical witness of a branch (t_j, u_j) -> (t*, 0) with u_j != 0 along
/// a geometric amplitude ladder. A nearly singular A(t*) first has t*
/// polished by Newton on its smallest eigenvalue.
inline BranchRecord branchVerify(const VariationalFamily& fam, double lambdaStar, const Vector& kernelDir,
                                 const BranchOptions& opt = {}) {
  const OperatorPath& path = fam.linearPath;
  if (kernelDir.size() != path.n() || kernelDir.norm() == 0.0) {
    throw Error(ErrorCode::InvalidArgument, "branchVerify: kernel direction");
  }
  BranchRecord rec;
  Vector phi = kernelDir.normalized();
  double star = lambdaStar;
  {
    Eigen::SelfAdjointEigenSolver<Matrix> es(path.evaluate(star));
    const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    Eigen::Index k = 0;
    es.eigenvalues().cwiseAbs().minCoeff(&k);
    if (std::abs(es.eigenvalues()(k)) < 1e-6 * scale) {
      for (int it = 0; it < 8; ++it) {
        Eigen::SelfAdjointEigenSolver<Matrix> ek(path.evaluate(star));
        Eigen::Index j = 0;
        (ek.eigenvectors().transpose() * phi).cwiseAbs().maxCoeff(&j);
        const Vector v = ek.eigenvectors().col(j);
        const std::optional<Matrix> adot = path.derivative(star);
        const double slope = v.dot((adot ? *adot : pathDerivative(path, star)) * v);
        if (slope == 0.0) break;
        const double stepT = ek.eigenvalues()(j) / slope;
        star -= stepT;
        phi = v.dot(phi) < 0.0 ? Vector(-v) : v;
        if (std::abs(stepT) < 1e-15 * std::max(1.0, std::abs(star))) break;
      }
    }
  }
  rec.lambdaStar = star;

  double previousGap = std::numeric_limits<double>::infinity();
  for (int j = 0; j <= opt.rungs; ++j) {
    const double eps = opt.eps0 * std::ldexp(1.0, -j);
    const detail::NewtonOutcome nt = detail::borderedNewton(fam, phi, eps, star, eps * phi, opt);
    BranchPoint bp{nt.lambda, nt.u, nt.u.norm(), nt.residual, nt.iterations};
    rec.points.push_back(bp);
    rec.maxResidual = std::max(rec.maxResidual, nt.residual);
    if (!nt.converged) {
      rec.failure = "Newton did not converge at amplitude " + std::to_string(eps) + " (residual " +
                    std::to_string(nt.residual) + ")";
      return rec;
    }
    const double gap = std::abs(nt.lambda - star);
    if (!(bp.norm > 0.0) || !(gap < previousGap)) {
      rec.failure = "branch does not approach t* at amplitude " + std::to_string(eps);
      return rec;
    }
    previousGap = gap;
  }
  const double firstGap = std::abs(rec.points.front().lambda - star);
  if (!(previousGap < 0.5 * firstGap)) {
    rec.failure = "parameter does not converge to t*";
    return rec;
  }
  // least-squares slope of log||u|| against log|t - t*|
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int count = 0;
  for (const auto& p : rec.points) {
    const double gap = std::abs(p.lambda - star);
    if (gap <= 0.0) continue;
    const double x = std::log(gap);
    const double y = std::log(p.norm);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++count;
  }
  if (count < 2) {
    rec.failure = "branch parameter coincides with t*";
    return rec;
  }
  rec.exponent = (count * sxy - sx * sy) / (count * sxx - sx * sx);
  rec.verified = true;
  return rec;
}

/// detectCandidates followed by branchVerify on every certified candidate
/// with a one-dimensional kernel.
inline BifurcationReport analyseBifurcations(const VariationalFamily& fam, const SpectralOptions& opt = {},
                                             const BranchOptions& branch = {},
                                             const Tolerances& tol = defaultTolerances()) {
  BifurcationReport rep = detectCandidates(fam, opt, tol);
  for (const auto& c : rep.candidates) {
    if (!c.certified || c.kernelDim != 1) continue;
    rep.verifiedBranches.push_back(branchVerify(fam, c.lambda, c.kernel.col(0), branch));
  }
  return rep;
}

}  // namespace specflow
