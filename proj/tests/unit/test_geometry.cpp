#include "ancient/error.hpp"
#include "ancient/geometry.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace ancient;
using std::numbers::pi;

namespace {

const StripDomain unit1({1.0}, 4.0);
const StripDomain unit2({1.0, 1.0}, 4.0);

template <class F>
ErrorCategory category_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.category();
    }
    return static_cast<ErrorCategory>(0);
}

} // namespace

TEST(StripDomain, RejectsBadShapes) {
    EXPECT_EQ(category_of([] { StripDomain({}, 4.0); }), ErrorCategory::Precondition);
    EXPECT_EQ(category_of([] { StripDomain({1.0, 1.0, 1.0}, 4.0); }), ErrorCategory::Precondition);
    EXPECT_EQ(category_of([] { StripDomain({-1.0}, 4.0); }), ErrorCategory::Precondition);
    EXPECT_EQ(category_of([] { StripDomain({1.0}, 0.0); }), ErrorCategory::Precondition);
    EXPECT_EQ(category_of([] { StripDomain({std::nan("")}, 1.0); }), ErrorCategory::Precondition);
}

TEST(StripDomain, FirstEigenvalueAndVolume) {
    EXPECT_DOUBLE_EQ(unit1.first_eigenvalue(), pi * pi);
    EXPECT_DOUBLE_EQ(unit2.first_eigenvalue(), 2.0 * pi * pi);
    const StripDomain d({2.0, 0.5}, 3.0);
    EXPECT_DOUBLE_EQ(d.volume(), 1.0);
    EXPECT_NEAR(d.first_eigenvalue(), pi * pi / 4.0 + 4.0 * pi * pi, 1e-12);
}

TEST(BoxEigenpairs, UnitIntervalBelowHundred) {
    const auto modes = box_eigenpairs(unit1, 100.0);
    ASSERT_EQ(modes.size(), 3u);
    for (int k = 1; k <= 3; ++k) {
        EXPECT_EQ(modes[k - 1].k, std::vector<int>{k});
        EXPECT_DOUBLE_EQ(modes[k - 1].mu, k * k * pi * pi);
        EXPECT_DOUBLE_EQ(modes[k - 1].normalization, std::sqrt(2.0));
    }
    EXPECT_NEAR(modes[0].mu, 9.8696044, 1e-6);
    EXPECT_NEAR(modes[1].mu, 39.4784176, 1e-6);
    EXPECT_NEAR(modes[2].mu, 88.8264396, 1e-6);
}

TEST(BoxEigenpairs, EmptyBelowFirstEigenvalue) {
    EXPECT_TRUE(box_eigenpairs(unit1, 5.0).empty());
}

TEST(BoxEigenpairs, RejectsNonPositiveCutoff) {
    EXPECT_EQ(category_of([] { box_eigenpairs(unit1, 0.0); }), ErrorCategory::Precondition);
}

TEST(BoxEigenpairs, UnitSquareEnumeration) {
    const auto modes = box_eigenpairs(unit2, 100.0);
    // oracle: direct enumeration of k1^2 + k2^2 <= 100/pi^2
    std::vector<std::pair<double, std::vector<int>>> brute;
    for (int a = 1; a < 10; ++a)
        for (int b = 1; b < 10; ++b)
            if ((a * a + b * b) * pi * pi <= 100.0) brute.push_back({(a * a + b * b) * pi * pi, {a, b}});
    std::sort(brute.begin(), brute.end());
    ASSERT_EQ(modes.size(), brute.size());
    ASSERT_EQ(modes.size(), 6u);
    for (std::size_t i = 0; i < modes.size(); ++i) {
        EXPECT_EQ(modes[i].k, brute[i].second) << i;
        EXPECT_NEAR(modes[i].mu, brute[i].first, 1e-12);
    }
    const std::vector<std::vector<int>> expected{{1, 1}, {1, 2}, {2, 1}, {2, 2}, {1, 3}, {3, 1}};
    for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(modes[i].k, expected[i]);
}

TEST(Mode, ValueAndBoundary) {
    const Mode m = make_mode(unit1, {1});
    SpacePoint x;
    x.cross[0] = 0.5;
    EXPECT_NEAR(m.value(x, unit1), std::sqrt(2.0), 1e-15);
    x.cross[0] = 0.0;
    EXPECT_EQ(m.value(x, unit1), 0.0);
    x.cross[0] = 1.0;
    EXPECT_NEAR(m.value(x, unit1), 0.0, 1e-15);
    EXPECT_EQ(category_of([] { make_mode(unit1, {0}); }), ErrorCategory::Precondition);
    EXPECT_EQ(category_of([] { make_mode(unit1, {1, 1}); }), ErrorCategory::Precondition);
}

TEST(Mode, GradientMatchesDifferenceQuotient) {
    const Mode m = make_mode(unit2, {2, 3});
    SpacePoint x;
    x.cross = {0.31, 0.67};
    const auto g = m.gradient(x, unit2);
    for (int a = 0; a < 2; ++a) {
        SpacePoint p = x, q = x;
        const double h = 1e-6;
        p.cross[a] += h;
        q.cross[a] -= h;
        EXPECT_NEAR(g[a], (m.value(p, unit2) - m.value(q, unit2)) / (2 * h), 1e-6);
    }
}

TEST(FdEigenpairs, ThousandNodesFirstEigenvalue) {
    const auto e = fd_eigenpairs_1d(1.0, 1000, 1);
    ASSERT_EQ(e.size(), 1u);
    EXPECT_LT(oracle::rel_err(e[0].mu, pi * pi), 1e-4);
}

TEST(FdEigenpairs, SingleInteriorNode) {
    const auto e = fd_eigenpairs_1d(1.0, 3);
    ASSERT_EQ(e.size(), 1u);
    const double h = 0.5;
    EXPECT_NEAR(e[0].mu, 2.0 / (h * h) * (1.0 - std::cos(pi * h)), 1e-12);
    ASSERT_EQ(e[0].vector.size(), 1u);
    EXPECT_NEAR(std::abs(e[0].vector[0]), 1.0, 1e-15);
}

TEST(FdEigenpairs, LengthTwo) {
    const auto e = fd_eigenpairs_1d(2.0, 1000, 3);
    EXPECT_LT(oracle::rel_err(e[0].mu, pi * pi / 4.0), 1e-4);
}

TEST(FdEigenpairs, MatchesClosedFormDiscreteSpectrum) {
    // the second-difference matrix has eigenvalues (4/h^2) sin^2(k pi h / 2L)
    const int nodes = 41;
    const double h = 1.0 / (nodes - 1);
    const auto e = fd_eigenpairs_1d(1.0, nodes);
    ASSERT_EQ(e.size(), static_cast<std::size_t>(nodes - 2));
    for (std::size_t k = 1; k <= e.size(); ++k) {
        const double s = std::sin(k * pi * h / 2.0);
        EXPECT_NEAR(e[k - 1].mu, 4.0 / (h * h) * s * s, 1e-9 * e[k - 1].mu);
    }
}

TEST(FdEigenpairs, RejectsTooFewNodes) {
    EXPECT_EQ(category_of([] { fd_eigenpairs_1d(1.0, 2); }), ErrorCategory::Precondition);
    EXPECT_EQ(category_of([] { fd_eigenpairs_1d(-1.0, 10); }), ErrorCategory::Precondition);
}

TEST(WeylCount, TabulatedValues) {
    EXPECT_EQ(weyl_count(unit1, 4.0), 1u);
    EXPECT_EQ(weyl_count(unit1, 10.0), 3u);
    EXPECT_EQ(weyl_count(unit2, 10.0), 6u);
    EXPECT_EQ(weyl_count(unit1, 1.0), 0u);
    EXPECT_EQ(category_of([] { weyl_count(unit1, 0.0); }), ErrorCategory::Precondition);
}

TEST(SpaceTimeGrid, FromSpacingRequiresIntegerMultiples) {
    const auto g = SpaceTimeGrid::from_spacing(unit1, 9.0, 0.02, 0.1, 0.1);
    EXPECT_EQ(g.time_steps(), 450);
    EXPECT_EQ(g.cells_x0(), 80);
    EXPECT_EQ(g.cells_cross(0), 10);
    EXPECT_DOUBLE_EQ(g.time(g.time_steps()), 0.0);
    EXPECT_DOUBLE_EQ(g.x0(g.cells_x0()), 4.0);
    EXPECT_EQ(category_of([] { SpaceTimeGrid::from_spacing(unit1, 9.0, 0.07, 0.1, 0.1); }),
              ErrorCategory::Precondition);
    EXPECT_EQ(category_of([] { SpaceTimeGrid::from_spacing(unit1, 9.0, 0.02, 0.3, 0.1); }),
              ErrorCategory::Precondition);
    EXPECT_EQ(category_of([] { SpaceTimeGrid::from_spacing(unit1, 9.0, 0.02, 0.1, 0.3); }),
              ErrorCategory::Precondition);
}

TEST(SpaceTimeGrid, RefinedKeepsExtents) {
    const SpaceTimeGrid g(unit1, 4.0, 8, 16, {4, 0});
    const auto f = g.refined(2, 4);
    EXPECT_EQ(f.time_steps(), 32);
    EXPECT_EQ(f.cells_x0(), 32);
    EXPECT_EQ(f.cells_cross(0), 8);
    EXPECT_DOUBLE_EQ(f.time_extent(), 4.0);
    EXPECT_DOUBLE_EQ(f.h0(), g.h0() / 2);
}

TEST(SnapCylinder, SnapsToNodesAndGuardsWindow) {
    const auto g = SpaceTimeGrid::from_spacing(unit1, 9.0, 0.02, 0.1, 0.1);
    const auto s = snap_cylinder(g, 1.03);
    EXPECT_DOUBLE_EQ(s.requested_r, 1.03);
    EXPECT_NEAR(s.r, 1.0, 1e-12);
    EXPECT_EQ(s.half_cells, 10);
    EXPECT_EQ(s.time_steps, 50);
    try {
        snap_cylinder(g, 3.5);
        FAIL() << "expected window-too-small";
    } catch (const Error& e) {
        EXPECT_EQ(e.category(), ErrorCategory::Precondition);
        EXPECT_NE(std::string(e.what()).find("window-too-small"), std::string::npos);
    }
    EXPECT_EQ(category_of([&] { snap_cylinder(g, 0.01); }), ErrorCategory::Precondition);
}

TEST(ParabolicSets, MembershipAndVolume) {
    const ParabolicCylinder q(2.0);
    SpacePoint x;
    x.x0 = 1.9;
    x.cross[0] = 0.5;
    EXPECT_TRUE(q.contains(-3.9, x, unit1));
    EXPECT_FALSE(q.contains(-4.1, x, unit1));
    EXPECT_FALSE(q.contains(0.1, x, unit1));
    EXPECT_DOUBLE_EQ(q.volume(unit1), 16.0);
    const ParabolicBall p(0.0, x, 1.0);
    EXPECT_NEAR(p.volume(1), pi, 1e-15);
    EXPECT_NEAR(p.volume(2), 4.0 * pi / 3.0, 1e-15);
}
