#include "ancient/error.hpp"
#include "ancient/estimates.hpp"
#include "ancient/quadrature.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace ancient;
using std::numbers::pi;

namespace {

const StripDomain unit1({1.0}, 4.0);

SeparatedSolution sep(double alpha, int k = 1, double coeff = 1.0, const StripDomain& d = unit1) {
    return SeparatedSolution::make(coeff, alpha, make_mode(d, {k}));
}

EstimateConstants lap_constants() { return estimate_constants(1.0, 1.0, pi * pi); }

SolutionField bump_field(double h, std::uint64_t seed, const std::string& op = "laplacian") {
    const StripDomain d({1.0}, 3.0);
    const auto g = SpaceTimeGrid::from_spacing(d, 4.0, h / 5.0, h, h);
    return evolve(operator_preset(op), seeded_bump(g, seed), g, TimeScheme::CrankNicolson, seed);
}

} // namespace

TEST(Cutoff, EndpointsSlopesAndSymmetry) {
    const auto p = cutoff_profile(1.0, 2.0);
    EXPECT_EQ(p.value(0.0, 0.0), 1.0);
    EXPECT_EQ(p.value(-0.5, 0.9), 1.0);
    EXPECT_EQ(p.value(-4.0 - 1e-9, 0.0), 0.0);
    EXPECT_EQ(p.value(0.0, 2.0), 0.0);
    EXPECT_DOUBLE_EQ(p.d0_max, 1.5);
    EXPECT_DOUBLE_EQ(p.dt_max, 0.5);
    for (double x : {0.1, 1.2, 1.5, 1.9})
        for (double t : {-0.3, -2.0, -3.7}) {
            EXPECT_EQ(p.value(t, x), p.value(t, -x));
            EXPECT_GE(p.value(t, x), 0.0);
            EXPECT_LE(p.value(t, x), 1.0);
        }
    // mid-ramp slope is the maximum 1.5/(R-r) < 2/(R-r)
    EXPECT_NEAR(std::abs(p.d0(0.0, 1.5)), 1.5, 1e-12);
    EXPECT_NEAR(std::abs(p.dt(-2.5, 0.0)), 0.5, 1e-12);
}

TEST(Cutoff, SampledSlopesWithinBound) {
    const StripDomain d({1.0}, 3.0);
    const auto g = SpaceTimeGrid::from_spacing(d, 4.0, 0.01, 0.05, 0.1);
    const auto p = cutoff_profile(1.0, 2.0, g);
    EXPECT_LE(p.sampled_d0_max, 2.0);
    EXPECT_LE(p.sampled_dt_max, 2.0);
    EXPECT_NEAR(p.sampled_d0_max, 1.5, 0.01);
    EXPECT_THROW(cutoff_profile(1.0, 1.1, g), Error);
    EXPECT_THROW(cutoff_profile(2.0, 1.0), Error);
}

TEST(EstimateConstants, LaplacianChain) {
    const auto c = lap_constants();
    EXPECT_DOUBLE_EQ(c.energy, 4.0);
    EXPECT_DOUBLE_EQ(c.gradient, 72.0);
    EXPECT_DOUBLE_EQ(c.l2, 72.0 / (pi * pi));
    EXPECT_DOUBLE_EQ(c.eps0, pi * pi / 8.0);
    EXPECT_THROW(estimate_constants(1.0, 0.5, 1.0), Error);
}

TEST(ReversePoincare, ZeroPasses) {
    const auto rep = reverse_poincare_check(SolutionSum{sep(4.0, 1, 0.0)}, 1.0, 2.0, lap_constants());
    EXPECT_TRUE(rep.pass);
    EXPECT_EQ(rep.lhs, 0.0);
    EXPECT_EQ(rep.rhs, 0.0);
    EXPECT_TRUE(rep.vacuous);
}

TEST(ReversePoincare, ClosedFormAlphaFour) {
    const auto u = sep(4.0);
    const auto rep = reverse_poincare_check(SolutionSum{u}, 1.0, 2.0, lap_constants());
    EXPECT_TRUE(rep.pass);
    // oracle: |grad u|^2 integrates factorwise; x0 part alpha^2 e^{2 alpha x0}, cross part
    // int (psi')^2 = mu; every factor by Simpson
    const long double T = oracle::simpson([&](long double t) { return std::exp(2.0L * u.rho * t); }, -1, 0, 4000);
    const long double S = oracle::simpson([](long double x) { return std::exp(8.0L * x); }, -1, 1, 4000);
    const long double Xv = oracle::simpson([](long double y) { return 2.0L * std::pow(std::sin(pi * y), 2); }, 0, 1, 4000);
    const long double Xg = oracle::simpson([](long double y) { return 2.0L * std::pow(pi * std::cos(pi * y), 2); }, 0, 1, 4000);
    const double grad = static_cast<double>(T * S * (16.0L * Xv + Xg));
    EXPECT_LT(oracle::rel_err(rep.lhs, grad), 1e-6);
    EXPECT_LT(oracle::rel_err(rep.detail("annulus"), annulus_energy_closed(SolutionSum{u}, 1.0, 2.0)), 1e-14);
    EXPECT_DOUBLE_EQ(rep.constant_used, 72.0);
    EXPECT_NEAR(rep.empirical_constant, rep.lhs / rep.detail("annulus"), 1e-12 * rep.empirical_constant);
}

TEST(ReversePoincare, FieldPassesAndIsStableUnderRefinement) {
    const auto coarse = bump_field(0.1, 1), fine = bump_field(0.05, 1);
    const auto op = laplacian_operator();
    const auto a = reverse_poincare_check(coarse, op, 1.0, 2.0);
    const auto b = reverse_poincare_check(fine, op, 1.0, 2.0);
    EXPECT_TRUE(a.pass);
    EXPECT_TRUE(b.pass);
    EXPECT_EQ(a.source, "field");
    EXPECT_LT(oracle::rel_err(a.empirical_constant, b.empirical_constant), 0.2);
}

TEST(ReversePoincare, FieldWindowGuards) {
    const auto f = bump_field(0.1, 1);
    EXPECT_THROW(reverse_poincare_check(f, laplacian_operator(), 1.0, 2.5), Error); // R^2 > T
    const StripDomain d({1.0}, 2.5);
    const auto g = SpaceTimeGrid::from_spacing(d, 4.0, 0.02, 0.1, 0.1);
    const auto narrow = evolve(laplacian_operator(), seeded_bump(g, 1), g);
    EXPECT_THROW(reverse_poincare_check(narrow, laplacian_operator(), 1.0, 2.0), Error); // R + 1 > X
}

TEST(L2Reverse, ZeroAndClosedForm) {
    EXPECT_TRUE(l2_reverse_check(SolutionSum{sep(4.0, 1, 0.0)}, 1.0, 2.0, lap_constants()).pass);
    const SolutionSum u{sep(4.0)};
    const auto rep = l2_reverse_check(u, 1.0, 2.0, lap_constants());
    EXPECT_TRUE(rep.pass);
    EXPECT_NEAR(rep.lhs, energy_closed(u, 1.0), 1e-12 * rep.lhs);
    EXPECT_GT(rep.empirical_constant, 0.0);
    EXPECT_LT(rep.empirical_constant, rep.constant_used);
}

TEST(L2Reverse, GrowthFactorRearrangement) {
    // I(R) = (1 + (R-r)^2/C_emp) I(r) by algebra when C_emp is the empirical constant
    const SolutionSum u{sep(4.5), sep(5.0, 1, -0.5)};
    const double r = 1.0, R = 2.0;
    const double c = l2_empirical_constant(u, r, R);
    EXPECT_NEAR(energy_closed(u, R), (1 + (R - r) * (R - r) / c) * energy_closed(u, r), 1e-12 * energy_closed(u, R));
    const auto rep = l2_reverse_check(u, r, R, lap_constants());
    EXPECT_NEAR(rep.empirical_constant, c, 1e-12 * c);
}

TEST(L2Reverse, FieldBothOperators) {
    for (const std::string op : {"laplacian", "varying"}) {
        const auto f = bump_field(0.1, 3, op);
        const auto rep = l2_reverse_check(f, operator_preset(op), 1.0, 2.0);
        EXPECT_TRUE(rep.pass) << op;
        EXPECT_GT(rep.empirical_constant, 0.0);
    }
}

TEST(SlicePoincare, EigenfunctionSaturates) {
    const auto rep = slice_poincare_check(SolutionSum{sep(4.0)}, unit1);
    EXPECT_TRUE(rep.pass);
    EXPECT_NEAR(rep.detail("sharpness"), 1.0, 1e-10);
}

TEST(SlicePoincare, SecondModeRatio) {
    const auto rep = slice_poincare_check(SolutionSum{sep(7.0, 2)}, unit1);
    EXPECT_TRUE(rep.pass);
    EXPECT_NEAR(rep.detail("sharpness"), 0.25, 1e-10);
}

TEST(SlicePoincare, FieldPasses) {
    const auto rep = slice_poincare_check(bump_field(0.1, 2));
    EXPECT_TRUE(rep.pass);
    EXPECT_LT(rep.detail("sharpness"), 1.0 + rep.detail("allowance"));
}

TEST(EnergyInequality, FieldPasses) {
    const auto f = bump_field(0.1, 1);
    const auto rep = energy_inequality_check(f, laplacian_operator(), 1.0, 2.0);
    EXPECT_TRUE(rep.pass) << rep.lhs << " " << rep.rhs;
}

TEST(GrowthIteration, ZeroIsVacuous) {
    const auto rep = growth_iteration_check(SolutionSum{sep(4.0, 1, 0.0)}, 1.0, 0.0, 4);
    EXPECT_TRUE(rep.vacuous);
}

TEST(GrowthIteration, AlphaFourRatiosAtLeastOne) {
    const auto rep = growth_iteration_check(SolutionSum{sep(4.0)}, 1.0, 0.0, 4);
    EXPECT_FALSE(rep.vacuous);
    ASSERT_EQ(rep.ratios.size(), 4u);
    EXPECT_GE(rep.min_ratio, 1.0);
    EXPECT_TRUE(rep.pass);
    EXPECT_NEAR(rep.r0, std::sqrt(rep.constant * (std::exp(1.0) - 1.0)), 1e-12);
}

TEST(GrowthExponent, AlphaFourApproachesEight) {
    const SolutionSum u{sep(4.0)};
    // the raw quotient carries the intercept -log(2 alpha 2 rho)/R; the slope does not
    const double rho = 16.0 - pi * pi;
    EXPECT_NEAR(log_energy(u, 6.0) / 6.0, 8.0 - std::log(8.0 * 2.0 * rho) / 6.0, 1e-3);
    const auto g = growth_exponent(u, {1, 2, 3, 4, 5, 6});
    EXPECT_NEAR(g.slope, 8.0, 0.4);
    EXPECT_LT(g.residual, 0.05);
}

TEST(GrowthExponent, DominantTermWins) {
    const SolutionSum u{sep(3.5), sep(4.0)};
    const auto g = growth_exponent(u, {2, 4, 6, 8, 10, 12});
    EXPECT_NEAR(g.slope, 8.0, 0.4);
}

TEST(GrowthExponent, ZeroSentinelAndGuards) {
    const auto g = growth_exponent(SolutionSum{sep(4.0, 1, 0.0)}, {1, 2, 3});
    EXPECT_TRUE(g.zero);
    EXPECT_EQ(g.slope, -std::numeric_limits<double>::infinity());
    EXPECT_THROW(growth_exponent(SolutionSum{sep(4.0)}, {1, 2}), Error);
    EXPECT_THROW(growth_exponent(SolutionSum{sep(4.0)}, {1, 3, 2}), Error);
}

TEST(Liouville, ZeroPasses) {
    const auto p = polynomial_liouville_probe(SolutionSum{sep(4.0, 1, 0.0)}, 3.0, 1.0, 20);
    EXPECT_TRUE(p.zero);
    EXPECT_FALSE(p.certificate);
}

TEST(Liouville, AlphaFourCertificate) {
    const auto p = polynomial_liouville_probe(SolutionSum{sep(4.0)}, 3.0, 1.0, 20);
    EXPECT_TRUE(p.certificate);
    EXPECT_GT(p.log_ratio, std::log(10.0));
    EXPECT_GE(p.certificate_k, 1);
}

TEST(Liouville, ModelCertificateGrowsLikeDLogD) {
    // oracle: smallest k with e^k >= (r + k r0)^{2d}, solved by direct search
    const double r = 1.0, r0 = 2.0;
    for (double d : {1.0, 2.0, 4.0, 8.0, 16.0}) {
        const auto p = polynomial_liouville_probe(SolutionSum{sep(4.0)}, d, r, 4, r0);
        long k = 1;
        while (static_cast<double>(k) < 2.0 * d * std::log(r + k * r0)) ++k;
        EXPECT_EQ(p.model_k, k);
        EXPECT_LE(static_cast<double>(p.model_k), 8.0 * d * std::log(2.0 + d) + 10.0);
    }
}

TEST(MeanValue, ConstantFunctionVolumeIdentity) {
    MeanValueOptions opt;
    opt.zero_extend = false;
    opt.C_mv = 1.0;
    const SpacePoint x;
    const auto rep = mean_value_check([](double, const SpacePoint&) { return 1.0; }, StripDomain({1.0}, 10.0), 0.0, x,
                                      0.7, opt);
    EXPECT_NEAR(rep.detail("volume"), 0.49 * pi * 0.49, 1e-12);
    EXPECT_NEAR(rep.empirical_constant, 1.0 / pi, 1e-6);
    EXPECT_TRUE(rep.pass); // C = 1 >= 1/pi
    opt.C_mv = 0.3;
    EXPECT_FALSE(mean_value_check([](double, const SpacePoint&) { return 1.0; }, StripDomain({1.0}, 10.0), 0.0, x, 0.7,
                                  opt).pass);
}

TEST(MeanValue, SeparatedSolutionAndRefinement) {
    SpacePoint x;
    x.cross[0] = 0.5;
    MeanValueOptions opt;
    opt.C_mv = default_mean_value_constant(1);
    const SolutionSum u{sep(4.0)};
    const auto a = mean_value_check(u, unit1, 0.0, x, 0.5, opt);
    EXPECT_TRUE(a.pass);
    EXPECT_TRUE(std::isfinite(a.empirical_constant));
    EXPECT_GT(a.empirical_constant, 0.0);
    opt.radial_cells *= 2;
    opt.angular_cells *= 2;
    opt.time_cells *= 2;
    const auto b = mean_value_check(u, unit1, 0.0, x, 0.5, opt);
    EXPECT_LT(oracle::rel_err(a.empirical_constant, b.empirical_constant), 0.2);
}

TEST(MeanValue, CalibrationReproducesFrozenDefault) {
    const auto cal = calibrate_mean_value(1);
    EXPECT_DOUBLE_EQ(cal.frozen, default_mean_value_constant(1));
    EXPECT_NEAR(cal.max_empirical, 1.0 / pi, 1e-3);
}

TEST(MeanValue, Guards) {
    MeanValueOptions opt;
    const SpacePoint x;
    EXPECT_THROW(mean_value_check(SolutionSum{sep(4.0)}, unit1, 0.1, x, 0.5, opt), Error);
    EXPECT_THROW(mean_value_check(SolutionSum{sep(4.0)}, unit1, 0.0, x, 0.0, opt), Error);
}
