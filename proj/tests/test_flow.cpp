#include "specflow/reduction.hpp"
#include "specflow/specflow.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

using namespace specflow;
namespace ts = testing_support;

namespace {

Matrix diag(std::initializer_list<double> d) {
  Vector v(static_cast<Eigen::Index>(d.size()));
  Eigen::Index i = 0;
  for (double x : d) v(i++) = x;
  return v.asDiagonal();
}

Vector e(Eigen::Index dim, Eigen::Index i) { return Vector::Unit(dim, i); }

OperatorPath scalarPath(double sign) {
  return OperatorPath::fromGenerator(-1.0, 1.0, 1, [sign](double t) { return Matrix::Constant(1, 1, sign * t); },
                                     [sign](double) { return Matrix::Constant(1, 1, sign); });
}

/// Isotropic subspace spanned by k directions of a random Lagrangian.
Subspace randomIsotropic(Eigen::Index n, Eigen::Index k, std::mt19937_64& rng) {
  const Matrix l = LagrangianFrame::fromBasis(ts::lagrangianBasis(n, rng)).basis();
  return Subspace::span(l * ts::orthogonal(n, rng).leftCols(k));
}

}  // namespace

// ---------------------------------------------------------------- reduction

TEST(ReductionContext, TrivialIsotropicKeepsSpace) {
  const auto ctx = ReductionContext::build(Subspace::zero(4));
  EXPECT_EQ(ctx.reducedN(), 2);
  std::mt19937_64 rng(20);
  const auto l = LagrangianFrame::fromBasis(ts::lagrangianBasis(2, rng));
  EXPECT_TRUE(reduceLagrangian(ctx, l).sameSpan(l));
  EXPECT_TRUE(extendLagrangian(ctx, l).sameSpan(l));
}

TEST(ReductionContext, HorizontalLineGivesFxF) {
  const auto ctx = ReductionContext::build(horizontalLift(e(2, 1)));
  const Matrix expected = (Matrix(4, 2) << e(4, 0), e(4, 2)).finished();
  EXPECT_LT(gapDistance(ctx.reducedSpaceBasis(), expected), 1e-12);
}

TEST(ReductionContext, DimensionsAndOrthogonalSplitting) {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 50; ++i) {
    const int n = ts::uniformInt(1, 6, rng);
    const int k = ts::uniformInt(0, n, rng);
    const Subspace iso = randomIsotropic(n, k, rng);
    const auto ctx = ReductionContext::build(iso);
    const Matrix s = ctx.reducedSpaceBasis();
    EXPECT_EQ(s.cols(), 2 * n - 2 * k);
    // S_I is orthogonal to I and JI, and is a symplectic subspace
    if (k > 0) {
      EXPECT_LT((s.transpose() * iso.basis()).norm(), 1e-9);
      EXPECT_LT((s.transpose() * applyJ(iso.basis())).norm(), 1e-9);
    }
    if (s.cols() > 0) EXPECT_EQ(classify(Subspace::fromOrthonormal(s)), SubspaceKind::Symplectic);
    // S_I = S_JI
    if (k > 0) {
      const auto jctx = ReductionContext::build(Subspace::fromOrthonormal(applyJ(iso.basis())));
      if (s.cols() > 0) EXPECT_LT(gapDistance(jctx.reducedSpaceBasis(), s), 1e-9);
    }
  }
}

TEST(ReductionContext, RejectsNonIsotropic) {
  try {
    ReductionContext::build(Subspace::span((Matrix(4, 2) << e(4, 0), e(4, 2)).finished()));
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::NotIsotropic);
  }
}

TEST(ReduceLagrangian, DiagonalGraph) {
  const auto ctx = ReductionContext::build(horizontalLift(e(2, 1)));
  for (double b1 : {-2.0, 0.5, 3.0}) {
    const auto reduced = reduceLagrangian(ctx, graphLagrangian(diag({b1, 1.7})), true);
    EXPECT_NEAR(lagrangianToGraph(reduced)(0, 0), b1, 1e-10);
  }
}

TEST(ReduceLagrangian, HorizontalReducesToHorizontal) {
  const auto ctx = ReductionContext::build(horizontalLift(e(3, 2)));
  EXPECT_TRUE(reduceLagrangian(ctx, LagrangianFrame::horizontal(3)).sameSpan(LagrangianFrame::horizontal(2)));
}

TEST(ReduceLagrangian, NotCleanRejectedWhenRequired) {
  const auto ctx = ReductionContext::build(horizontalLift(e(2, 1)));
  try {
    reduceLagrangian(ctx, LagrangianFrame::horizontal(2), true);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::NotClean);
  }
}

TEST(ExtendLagrangian, HorizontalExample) {
  const auto ctx = ReductionContext::build(horizontalLift(e(2, 1)));
  const auto ext = extendLagrangian(ctx, LagrangianFrame::horizontal(1));
  const Matrix expected = (Matrix(4, 2) << e(4, 0), e(4, 3)).finished();
  EXPECT_LT(gapDistance(ext.basis(), expected), 1e-12);
  EXPECT_EQ(classify(ext.subspace()), SubspaceKind::Lagrangian);
}

TEST(ExtendLagrangian, ReduceAfterExtendIsIdentity) {
  std::mt19937_64 rng(22);
  for (int i = 0; i < 100; ++i) {
    const int n = ts::uniformInt(2, 6, rng);
    const int k = ts::uniformInt(1, n - 1, rng);
    const auto ctx = ReductionContext::build(randomIsotropic(n, k, rng));
    const auto l = LagrangianFrame::fromBasis(ts::lagrangianBasis(n - k, rng));
    const auto ext = extendLagrangian(ctx, l);
    EXPECT_TRUE(isCleanModulo(ctx, ext));
    EXPECT_LT(gapDistance(reduceLagrangian(ctx, ext, true), l), 1e-8);
  }
}

TEST(ReduceLagrangian, ResultIsLagrangianAndContinuous) {
  std::mt19937_64 rng(23);
  for (int i = 0; i < 50; ++i) {
    const int n = ts::uniformInt(2, 5, rng);
    const int k = ts::uniformInt(1, n - 1, rng);
    const auto ctx = ReductionContext::build(randomIsotropic(n, k, rng));
    const Matrix b = ts::symmetric(n, rng);
    const Matrix db = ts::symmetric(n, rng);
    const auto l = graphLagrangian(b);
    if (!isCleanModulo(ctx, l)) continue;
    const auto r = reduceLagrangian(ctx, l, true);
    const Matrix full = ctx.toAmbient(r.basis());
    EXPECT_LT(omegaGram(full, full).norm(), 1e-9);
    const double eps = 1e-6;
    const auto r2 = reduceLagrangian(ctx, graphLagrangian(b + eps * db), true);
    EXPECT_LT(gapDistance(r, r2), 1e4 * eps);
  }
}

TEST(ComposeCheck, TrivialNestings) {
  std::mt19937_64 rng(24);
  const Subspace i1 = randomIsotropic(3, 2, rng);
  std::vector<LagrangianFrame> batch;
  for (int i = 0; i < 5; ++i) batch.push_back(LagrangianFrame::fromBasis(ts::lagrangianBasis(3, rng)));
  EXPECT_TRUE(composeCheck(i1, Subspace::zero(6), batch));
  EXPECT_TRUE(composeCheck(i1, i1, batch));
}

TEST(ComposeCheck, RandomNestedTriples) {
  std::mt19937_64 rng(25);
  for (int trial = 0; trial < 5; ++trial) {
    const Subspace i1 = randomIsotropic(6, 4, rng);
    const Subspace i2 = Subspace::span(i1.basis() * ts::orthogonal(4, rng).leftCols(2));
    std::vector<LagrangianFrame> batch;
    while (batch.size() < 50) {
      const auto l = LagrangianFrame::fromBasis(ts::lagrangianBasis(6, rng));
      if (cleanIntersection(l.subspace(), i1).clean) batch.push_back(l);
    }
    EXPECT_TRUE(composeCheck(i1, i2, batch));
  }
}

TEST(ComposeCheck, RejectsNonNested) {
  std::mt19937_64 rng(26);
  try {
    composeCheck(horizontalLift(e(2, 0)), horizontalLift(e(2, 1)), {});
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::NotNested);
  }
}

TEST(CommonIsotropic, ConstantInvertibleKeepsOneDirection) {
  const auto l = LagrangianPath::constant(graphLagrangian(diag({2.0, -1.0, 3.0})));
  const auto ci = commonIsotropic(l);
  EXPECT_EQ(ci.basisInH.cols(), 2);
  EXPECT_EQ(ci.complementInH.cols(), 1);
  EXPECT_TRUE(ci.forcedDrop);
}

TEST(CommonIsotropic, DiagonalGraphsKeepSecondAxis) {
  const auto path =
      LagrangianPath::fromGenerator(-1.0, 1.0, [](double t) { return graphLagrangian(diag({t, 1.0})); });
  const auto ci = commonIsotropic(path);
  ASSERT_GE(ci.basisInH.cols(), 1);
  EXPECT_LT(gapDistance(Matrix(e(2, 1)), ci.basisInH), 1e-12);
  for (double t : ci.evaluated) {
    EXPECT_TRUE(cleanIntersection(path.evaluate(t).subspace(), horizontalLift(ci.basisInH)).clean);
  }
}

TEST(CommonIsotropic, PostconditionOnRandomGraphPaths) {
  std::mt19937_64 rng(27);
  for (int i = 0; i < 20; ++i) {
    const auto op = randomPolynomialPath(ts::uniformInt(1, 5, rng), rng);
    const auto path = graphPath(op);
    const auto ci = commonIsotropic(path);
    if (ci.empty) continue;
    const Subspace i0 = horizontalLift(ci.basisInH);
    for (double t : ci.evaluated) EXPECT_TRUE(cleanIntersection(path.evaluate(t).subspace(), i0).clean);
  }
}

TEST(Reduction, MaslovIndexOfLoopsSurvives) {
  std::mt19937_64 rng(28);
  int compared = 0;
  for (int i = 0; i < 25; ++i) {
    const int n = ts::uniformInt(2, 4, rng);
    const auto rl = ts::randomLoop(n, rng, 2, ts::uniformInt(1, n - 1, rng), 0.3);
    const auto loop = LagrangianPath::fromGenerator(
        0.0, 1.0, [&](double t) { return LagrangianFrame::fromOrthonormal(rl.frame(t)); }, 65);
    const auto ci = commonIsotropic(loop);
    if (ci.empty) continue;
    ++compared;
    const auto ctx = ReductionContext::build(horizontalLift(ci.basisInH));
    std::vector<LagrangianFrame> reduced;
    std::vector<double> grid;
    for (int j = 0; j <= 256; ++j) {
      grid.push_back(j / 256.0);
      reduced.push_back(reduceLagrangian(ctx, loop.evaluate(j / 256.0), true));
    }
    EXPECT_EQ(maslovLoopIndex(LagrangianPath::fromSamples(grid, reduced)), rl.index);
    EXPECT_EQ(maslovLoopIndex(loop), rl.index);
    EXPECT_EQ(ts::denseWinding(rl.frame, 0.0, 1.0, 2000), rl.index);
  }
  EXPECT_GE(compared, 20);
}

// ---------------------------------------------------------------- spectral flow

TEST(MorseIndex, Examples) {
  EXPECT_EQ(morseIndex(Matrix::Identity(3, 3)), 0);
  EXPECT_EQ(morseIndex(-Matrix::Identity(3, 3)), 3);
  EXPECT_EQ(morseIndex(diag({-2.0, -1.0, 3.0})), 2);
  try {
    morseIndex(diag({1.0, 0.0}));
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::SingularOperator);
  }
}

TEST(RelativeMorseIndex, Examples) {
  EXPECT_EQ(relativeMorseIndex(-Matrix::Identity(2, 2), Matrix::Identity(2, 2)), 2);
  EXPECT_EQ(relativeMorseIndex(diag({1.0, -3.0}), diag({1.0, -3.0})), 0);
}

TEST(RelativeMorseIndex, MatchesMorseDifference) {
  std::mt19937_64 rng(29);
  for (int i = 0; i < 200; ++i) {
    const int n = ts::uniformInt(1, 7, rng);
    const Matrix a = ts::symmetric(n, rng);
    const Matrix b = ts::symmetric(n, rng);
    EXPECT_EQ(relativeMorseIndex(a, b), ts::negativeCount(a) - ts::negativeCount(b));
  }
}

TEST(SpectralFlowViaMorse, Examples) {
  EXPECT_EQ(spectralFlowViaMorse(scalarPath(1.0)).value, 1);
  EXPECT_EQ(spectralFlowViaMorse(OperatorPath::constant(diag({1.0, -2.0}))).value, 0);
  const auto twin = OperatorPath::fromGenerator(-1.0, 1.0, 2, [](double t) { return diag({t, -t}); });
  EXPECT_EQ(spectralFlowViaMorse(twin).value, 0);
  try {
    spectralFlowViaMorse(OperatorPath::fromGenerator(0.0, 1.0, 1, [](double t) { return Matrix::Constant(1, 1, t); }));
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::SingularEndpoint);
  }
}

TEST(SingularSet, Examples) {
  const auto s1 = singularSet(scalarPath(1.0));
  ASSERT_EQ(s1.size(), 1u);
  EXPECT_NEAR(s1[0], 0.0, 1e-10);
  const auto two = OperatorPath::fromGenerator(0.0, 1.0, 2, [](double t) { return diag({t - 0.25, t - 0.75}); });
  const auto s2 = singularSet(two);
  ASSERT_EQ(s2.size(), 2u);
  EXPECT_NEAR(s2[0], 0.25, 1e-10);
  EXPECT_NEAR(s2[1], 0.75, 1e-10);
  EXPECT_TRUE(singularSet(OperatorPath::constant(diag({1.0, -1.0}))).empty());
}

TEST(SingularSet, NonIsolatedRejected) {
  const auto flat = OperatorPath::fromGenerator(-1.0, 1.0, 1, [](double t) {
    return Matrix::Constant(1, 1, std::abs(t) < 0.25 ? 0.0 : t);
  });
  try {
    singularSet(flat);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::NonIsolatedSingularity);
  }
}

TEST(CrossingForm, Examples) {
  const auto up = crossingForm(scalarPath(1.0), 0.0);
  EXPECT_EQ(up.signature, 1);
  EXPECT_NEAR(up.form(0, 0), 1.0, 1e-12);
  EXPECT_EQ(crossingForm(scalarPath(-1.0), 0.0).signature, -1);
}

TEST(CrossingForm, CubicIsDegenerateByFiniteDifferences) {
  const auto cubic = OperatorPath::fromGenerator(-1.0, 1.0, 2, [](double t) { return diag({t, t * t * t}); });
  const auto rep = crossingForm(cubic, 0.0);
  EXPECT_FALSE(rep.analyticDerivative);
  EXPECT_EQ(rep.kernelBasis.cols(), 2);
  EXPECT_FALSE(rep.nondegenerate);
  Eigen::SelfAdjointEigenSolver<Matrix> es(rep.form);
  EXPECT_NEAR(es.eigenvalues()(0), 0.0, 1e-6);
  EXPECT_NEAR(es.eigenvalues()(1), 1.0, 1e-6);
}

TEST(SpectralFlowViaCrossings, Examples) {
  EXPECT_EQ(spectralFlowViaCrossings(scalarPath(1.0)).value, 1);
  const auto opposite = OperatorPath::fromGenerator(0.0, 1.0, 2, [](double t) { return diag({t - 0.25, 0.75 - t}); },
                                                    [](double) { return diag({1.0, -1.0}); });
  const auto r = spectralFlowViaCrossings(opposite);
  EXPECT_EQ(r.value, 0);
  EXPECT_EQ(r.crossings.size(), 2u);
  EXPECT_EQ(spectralFlowViaCrossings(OperatorPath::constant(diag({2.0, -1.0}))).value, 0);
}

TEST(SpectralFlowViaCrossings, DegenerateCrossingReported) {
  const auto cubic = OperatorPath::fromGenerator(-1.0, 1.0, 1, [](double t) { return Matrix::Constant(1, 1, t * t * t); });
  try {
    spectralFlowViaCrossings(cubic);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::DegenerateCrossing);
  }
  EXPECT_EQ(spectralFlowViaMaslov(cubic).value, 1);
  EXPECT_EQ(spectralFlowViaMorse(cubic).value, 1);
}

TEST(SpectralFlowViaMaslov, Calibration) {
  EXPECT_EQ(spectralFlowViaMaslov(scalarPath(1.0)).value, 1);
  EXPECT_EQ(spectralFlowViaMaslov(scalarPath(-1.0)).value, -1);
}

TEST(EigenvalueOracle, Examples) {
  EXPECT_EQ(spectralFlowViaOracle(scalarPath(1.0)).value, 1);
  std::mt19937_64 rng(30);
  const Matrix q = ts::orthogonal(2, rng);
  const auto conj = OperatorPath::fromGenerator(-1.0, 1.0, 2, [q](double t) {
    return Matrix(q * diag({t, -t}) * q.transpose());
  });
  EXPECT_EQ(spectralFlowViaOracle(conj).value, 0);
}

TEST(SpectralFlow, FourMethodsAgreeWithSignCountOracle) {
  std::mt19937_64 rng(31);
  for (int i = 0; i < 40; ++i) {
    const auto path = randomPolynomialPath(ts::uniformInt(1, 6, rng), rng);
    const int expected = ts::sortedSignChanges([&](double t) { return path.evaluate(t); }, -1.0, 1.0, 4000);
    EXPECT_EQ(spectralFlowViaMorse(path).value, expected);
    EXPECT_EQ(spectralFlowViaMaslov(path).value, expected);
    EXPECT_EQ(spectralFlowViaOracle(path).value, expected);
    try {
      EXPECT_EQ(spectralFlowViaCrossings(path).value, expected);
    } catch (const Error& err) {
      EXPECT_EQ(err.code(), ErrorCode::DegenerateCrossing);
    }
  }
}

TEST(SpectralFlow, ReversalAndConcatenation) {
  std::mt19937_64 rng(32);
  int checked = 0;
  for (int i = 0; i < 30; ++i) {
    const auto path = randomPolynomialPath(ts::uniformInt(1, 5, rng), rng);
    const double c = std::uniform_real_distribution<double>(-0.8, 0.8)(rng);
    if (minAbsEigenvalue(path.evaluate(c)) < 0.02) continue;
    ++checked;
    const int whole = spectralFlowViaMaslov(path).value;
    EXPECT_EQ(spectralFlowViaMaslov(path.reversed()).value, -whole);
    EXPECT_EQ(spectralFlowViaMaslov(path.restricted(-1.0, c)).value + spectralFlowViaMaslov(path.restricted(c, 1.0)).value,
              whole);
  }
  EXPECT_GT(checked, 10);
}

TEST(SpectralFlow, HomotopyInvariance) {
  std::mt19937_64 rng(33);
  for (int i = 0; i < 20; ++i) {
    const int n = ts::uniformInt(1, 5, rng);
    const auto path = randomPolynomialPath(n, rng, 0.2);
    const Matrix b0 = ts::symmetric(n, rng);
    const Matrix b1 = ts::symmetric(n, rng);
    const double scale = 0.05 / std::max(b0.norm(), b1.norm());
    const auto bump = OperatorPath::fromGenerator(-1.0, 1.0, n, [=](double t) { return Matrix(scale * (b0 + t * b1)); },
                                                  [=](double) { return Matrix(scale * b1); });
    const auto moved = path.plus(bump);
    EXPECT_EQ(spectralFlowViaMorse(moved).value, spectralFlowViaMorse(path).value);
    EXPECT_EQ(spectralFlowViaMaslov(moved).value, spectralFlowViaMaslov(path).value);
  }
}

TEST(OperatorPath, SamplesValidated) {
  EXPECT_THROW(OperatorPath::fromSamples({0.0}, {Matrix::Identity(1, 1)}), Error);
  EXPECT_THROW(OperatorPath::fromSamples({0.0, 1.0}, {Matrix::Identity(1, 1), Matrix::Identity(2, 2)}), Error);
  Matrix ns(2, 2);
  ns << 1, 2, 0, 1;
  EXPECT_THROW(OperatorPath::fromSamples({0.0, 1.0}, {ns, ns}), Error);
  const auto p = OperatorPath::fromSamples({0.0, 1.0}, {Matrix::Constant(1, 1, -1.0), Matrix::Constant(1, 1, 1.0)});
  EXPECT_EQ(spectralFlowViaCrossings(p).value, 1);
}
