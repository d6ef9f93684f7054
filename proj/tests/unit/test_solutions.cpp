#include "ancient/error.hpp"
#include "ancient/quadrature.hpp"
#include "ancient/solutions.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>

using namespace ancient;
using std::numbers::pi;

namespace {

const StripDomain unit1({1.0}, 4.0);

SpacePoint at(double x0, double x1, double x2 = 0.0) {
    SpacePoint p;
    p.x0 = x0;
    p.cross = {x1, x2};
    return p;
}

SeparatedSolution sep(double alpha, int k = 1, double coeff = 1.0, const StripDomain& d = unit1) {
    return SeparatedSolution::make(coeff, alpha, make_mode(d, {k}));
}

} // namespace

TEST(Evaluate, FirstModeAtCentre) {
    const auto u = sep(0.0);
    EXPECT_NEAR(evaluate(u, 0.0, at(0.0, 0.5), unit1), std::sqrt(2.0), 1e-15);
}

TEST(Evaluate, VanishesOnLateralBoundary) {
    for (double alpha : {0.0, 1.0, 4.0})
        for (int k : {1, 2, 5}) {
            const auto u = sep(alpha, k, 3.0);
            EXPECT_EQ(evaluate(u, -0.3, at(0.7, 0.0), unit1), 0.0);
            const double scale = 3.0 * std::sqrt(2.0) * std::exp(alpha * 0.7 - 0.3 * u.rho);
            EXPECT_NEAR(evaluate(u, -0.3, at(0.7, 1.0), unit1), 0.0, 1e-14 * k * scale);
        }
}

TEST(Evaluate, ClosedFormProduct) {
    const auto u = sep(1.0);
    EXPECT_NEAR(evaluate(u, -1.0, at(0.0, 0.5), unit1), std::sqrt(2.0) * std::exp(pi * pi - 1.0),
                1e-12 * std::exp(pi * pi));
}

TEST(Evaluate, RejectsPositiveTime) {
    const auto u = sep(1.0);
    EXPECT_THROW(evaluate(u, 0.1, at(0.0, 0.5), unit1), Error);
    const SolutionSpan s(unit1, {u});
    EXPECT_THROW(s.evaluate(0, 1e-9, at(0.0, 0.5)), Error);
}

TEST(SeparatedSolution, RateIsCheckedOnConstruction) {
    auto u = sep(2.0);
    EXPECT_DOUBLE_EQ(u.rho, 4.0 - pi * pi);
    u.rho += 1e-9;
    try {
        u.check();
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.category(), ErrorCategory::Invariant);
    }
}

TEST(SeparatedSolution, SolvesHeatEquationPointwise) {
    // central differences of the closed form; oracle is the PDE itself
    const auto u = sep(2.5, 2, 0.7);
    const double t = -0.4, h = 1e-4;
    const SpacePoint x = at(0.3, 0.37);
    const double ut = (u.value(t + h, x, unit1) - u.value(t - h, x, unit1)) / (2 * h);
    double lap = 0.0;
    for (int a = 0; a < 2; ++a) {
        SpacePoint p = x, q = x;
        if (a == 0) {
            p.x0 += h;
            q.x0 -= h;
        } else {
            p.cross[0] += h;
            q.cross[0] -= h;
        }
        lap += (u.value(t, p, unit1) - 2 * u.value(t, x, unit1) + u.value(t, q, unit1)) / (h * h);
    }
    EXPECT_NEAR(ut, lap, 1e-5 * std::abs(ut));
}

TEST(ClassifyGrowth, SignOfRate) {
    const auto g0 = classify_growth(sep(0.0));
    EXPECT_EQ(g0.kind, GrowthClass::Kind::NotAncientBounded);
    EXPECT_FALSE(g0.member_of(100.0));

    const auto gpi = classify_growth(sep(pi));
    EXPECT_EQ(gpi.kind, GrowthClass::Kind::EdMember);
    EXPECT_DOUBLE_EQ(gpi.d_min, pi);
    EXPECT_TRUE(gpi.member_of(pi));
    EXPECT_FALSE(gpi.member_of(3.0));

    const auto u4 = sep(4.0, 1, -2.0);
    const auto g4 = classify_growth(u4);
    EXPECT_EQ(g4.kind, GrowthClass::Kind::EdMember);
    EXPECT_DOUBLE_EQ(g4.d_min, 4.0);
    EXPECT_DOUBLE_EQ(g4.constant, 2.0 * std::sqrt(2.0));
    EXPECT_GT(u4.rho, 0.0);
}

TEST(ClassifyGrowth, WitnessBoundHoldsOnSampledCylinder) {
    const auto u = sep(4.0);
    const auto g = classify_growth(u);
    const double R = 6.0;
    double worst = 0.0;
    for (int a = 0; a <= 40; ++a)
        for (int b = 0; b <= 40; ++b)
            for (int c = 0; c <= 20; ++c) {
                const double t = -R * R * a / 40.0;
                const SpacePoint x = at(-R + 2 * R * b / 40.0, c / 20.0);
                const double bound = g.constant * std::exp(g.d_min * (std::abs(x.x0) + std::sqrt(-t)));
                worst = std::max(worst, std::abs(u.value(t, x, unit1)) / bound);
            }
    EXPECT_LE(worst, 1.0 + 1e-12);
    EXPECT_GT(worst, 0.99); // attained at t = 0, x1 = 1/2
}

TEST(GrowthWitness, SumsTermConstants) {
    const SolutionSum u{sep(4.0, 1, 2.0), sep(5.0, 1, -1.0)};
    EXPECT_DOUBLE_EQ(growth_witness(u), 3.0 * std::sqrt(2.0));
    EXPECT_THROW(growth_witness(SolutionSum{sep(0.0)}), Error);
}

TEST(PdeResidual, ZeroForZero) {
    const StripDomain d({1.0}, 1.0);
    const SpaceTimeGrid g(d, 1.0, 16, 16, {8, 0});
    EXPECT_EQ(verify_pde_residual(SolutionSum{}, g), 0.0);
    EXPECT_EQ(verify_pde_residual(SolutionSum{sep(1.0, 1, 0.0, d)}, g), 0.0);
}

TEST(PdeResidual, SecondOrderUnderRefinement) {
    const StripDomain d({1.0}, 1.0);
    const SpaceTimeGrid g(d, 1.0, 64, 64, {32, 0});
    const auto s = pde_residual_study(SolutionSum{sep(1.0, 1, 1.0, d)}, g);
    EXPECT_GT(s.coarse, 0.0);
    EXPECT_NEAR(s.ratio, 4.0, 0.5);
    // the O(tau^2) remainder is still visible at rho tau = 0.14; a finer
    // time step puts the study in the asymptotic range
    const SpaceTimeGrid g2(d, 1.0, 256, 64, {32, 0});
    const auto s2 = pde_residual_study(SolutionSum{sep(1.0, 1, 1.0, d)}, g2);
    EXPECT_GE(s2.order, 1.9);
}

TEST(PdeResidual, LinearityBound) {
    const StripDomain d({1.0}, 1.0);
    const SpaceTimeGrid g(d, 1.0, 32, 32, {16, 0});
    const auto a = sep(1.0, 1, 1.0, d), b = sep(3.5, 2, -0.5, d);
    const double ra = verify_pde_residual(SolutionSum{a}, g);
    const double rb = verify_pde_residual(SolutionSum{b}, g);
    EXPECT_LE(verify_pde_residual(SolutionSum{a, b}, g), ra + rb + 1e-12 * (ra + rb));
}

TEST(ContinuumFamily, EquallySpacedAlphas) {
    const auto s = build_continuum_family(unit1, 4.0, 3);
    ASSERT_EQ(s.size(), 3u);
    EXPECT_DOUBLE_EQ(s.basis()[0].alpha, pi);
    EXPECT_DOUBLE_EQ(s.basis()[1].alpha, (pi + 4.0) / 2.0);
    EXPECT_DOUBLE_EQ(s.basis()[2].alpha, 4.0);
    for (const auto& u : s.basis()) {
        EXPECT_EQ(u.coeff, 1.0);
        EXPECT_TRUE(classify_growth(u).member_of(4.0));
    }
}

TEST(ContinuumFamily, RejectsEmptyRegime) {
    EXPECT_THROW(build_continuum_family(unit1, pi, 3), Error);
    EXPECT_THROW(build_continuum_family(unit1, 4.0, 1), Error);
}

TEST(ContinuumFamily, GramFullRankAtRadiusTwo) {
    const auto s = build_continuum_family(unit1, 6.0, 8);
    const auto g = gram(s, 2.0, GramMethod::ClosedForm);
    Eigen::SelfAdjointEigenSolver<Matrix> es(g.correlation());
    EXPECT_GT(es.eigenvalues().minCoeff(), 1e-12 * es.eigenvalues().maxCoeff());
}

TEST(SolutionSpan, Guards) {
    EXPECT_THROW(SolutionSpan(unit1, {}), Error);
    EXPECT_THROW(SolutionSpan(unit1, {sep(4.0), sep(4.0, 1, 2.0)}), Error);
    Matrix c(2, 2);
    c << 1, 2, 2, 4;
    EXPECT_THROW(SolutionSpan(unit1, {sep(4.0), sep(5.0)}, c), Error);
    const StripDomain sq({1.0, 1.0}, 4.0);
    EXPECT_THROW(SolutionSpan(unit1, {SeparatedSolution::make(1.0, 5.0, make_mode(sq, {1, 1}))}), Error);
}

TEST(SolutionSpan, ElementsAndScaling) {
    Matrix c(2, 2);
    c << 1, 1, 0, 2;
    const SolutionSpan s(unit1, {sep(4.0), sep(5.0)}, c);
    const SpacePoint x = at(0.2, 0.3);
    EXPECT_NEAR(s.evaluate(0, -0.5, x), sep(4.0).value(-0.5, x, unit1) + sep(5.0).value(-0.5, x, unit1), 1e-12);
    EXPECT_NEAR(evaluate(s.element(1), -0.5, x, unit1), 2.0 * sep(5.0).value(-0.5, x, unit1), 1e-12);
    EXPECT_EQ(s.element(1).size(), 1u);
    const auto t = s.scaled(3.0);
    EXPECT_NEAR(t.evaluate(0, -0.5, x), 3.0 * s.evaluate(0, -0.5, x), 1e-12);
    EXPECT_EQ(s.ids(), (std::vector<std::string>{"u1", "u2"}));
}

TEST(PolynomialBound, ViolatedByEveryNonzeroMember) {
    const auto fam = build_continuum_family(unit1, 6.0, 5);
    for (std::size_t i = 0; i < fam.size(); ++i)
        for (double d : {1.0, 3.0, 6.0}) {
            const auto p = probe_polynomial_bound(fam.element(i), unit1, d, {2, 4, 8, 16});
            EXPECT_TRUE(p.violated) << "element " << i << " d " << d;
            EXPECT_GT(p.ratio, 1.0);
            EXPECT_GT(p.fitted_constant, 0.0);
        }
    const auto hm = probe_polynomial_bound(SolutionSum{sep(7.0, 2)}, unit1, 2.0, {2, 4, 8, 16});
    EXPECT_TRUE(hm.violated);
}

TEST(PolynomialBound, ZeroIsNeverViolated) {
    const auto p = probe_polynomial_bound(SolutionSum{sep(4.0, 1, 0.0)}, unit1, 1.0, {2, 4, 8, 16});
    EXPECT_FALSE(p.violated);
    EXPECT_EQ(p.fitted_constant, 0.0);
    EXPECT_THROW(probe_polynomial_bound(SolutionSum{sep(4.0)}, unit1, 1.0, {}), Error);
}
