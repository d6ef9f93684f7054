#include "ancient/error.hpp"
#include "ancient/fd_solver.hpp"
#include "ancient/quadrature.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>

using namespace ancient;
using std::numbers::pi;

namespace {

OperatorCoefficients constant_diag(double a0, double a1, double lambda) {
    OperatorCoefficients op;
    op.name = "diag";
    op.lambda_ell = lambda;
    op.Lambda_ell = std::max(a0, a1);
    op.at = [=](const SpacePoint&) {
        CoefficientSample s;
        s.a[0][0] = a0;
        s.a[1][1] = a1;
        return s;
    };
    return op;
}

// Eigenfunction of the truncated window with zero ends:
// sin(p pi (x0 + X)/(2X)) sin(q pi x1 / L) e^{-lambda t'} relative to t = -T.
struct WindowMode {
    int p = 1, q = 1;
    double X = 1.0, L = 1.0;
    double rate() const { return std::pow(p * pi / (2 * X), 2) + std::pow(q * pi / L, 2); }
    double space(double x0, double x1) const {
        return std::sin(p * pi * (x0 + X) / (2 * X)) * std::sin(q * pi * x1 / L);
    }
};

std::vector<double> sample_level(const SpaceTimeGrid& g, const std::function<double(double, double)>& f) {
    std::vector<double> v;
    v.reserve(g.spatial_size());
    for (int i = 0; i < g.n0(); ++i)
        for (int j = 0; j < g.n_cross(0); ++j) v.push_back(f(g.x0(i), g.cross(0, j)));
    return v;
}

double final_error(const SolutionField& f, const WindowMode& m) {
    const auto& g = f.grid();
    const double decay = std::exp(-m.rate() * g.time_extent());
    double err = 0.0;
    for (int i = 0; i < g.n0(); ++i)
        for (int j = 0; j < g.n_cross(0); ++j)
            err = std::max(err, std::abs(f.field.at(g.time_steps(), i, j) - decay * m.space(g.x0(i), g.cross(0, j))));
    return err / decay;
}

} // namespace

TEST(ValidateCoefficients, LaplacianPasses) {
    const StripDomain d({1.0}, 2.0);
    const SpaceTimeGrid g(d, 1.0, 4, 20, {10, 0});
    const auto r = validate_coefficients(laplacian_operator(), g);
    EXPECT_TRUE(r.pass);
    EXPECT_DOUBLE_EQ(r.min_rayleigh, 1.0);
    EXPECT_EQ(r.max_b, 0.0);
    EXPECT_EQ(r.max_c, 0.0);
    EXPECT_EQ(r.nodes_checked, g.spatial_size());
    EXPECT_FALSE(r.first_violation.has_value());
}

TEST(ValidateCoefficients, WeakDirectionFailsEverywhere) {
    const StripDomain d({1.0}, 2.0);
    const SpaceTimeGrid g(d, 1.0, 4, 20, {10, 0});
    const auto r = validate_coefficients(constant_diag(2.0, 0.5, 1.0), g);
    EXPECT_FALSE(r.pass);
    EXPECT_EQ(r.violating_nodes, r.nodes_checked);
    ASSERT_TRUE(r.first_violation.has_value());
    EXPECT_EQ(r.first_violation->node, 0u);
    EXPECT_NEAR(r.min_rayleigh, 0.5, 1e-12);
}

TEST(ValidateCoefficients, VaryingPresetMinimumMatchesDirectSampling) {
    const StripDomain d({1.0}, 4.0);
    const SpaceTimeGrid g(d, 1.0, 4, 80, {10, 0});
    const auto op = operator_preset("varying");
    const auto r = validate_coefficients(op, g);
    EXPECT_TRUE(r.pass);
    double lo = 1e9;
    for (int i = 0; i < g.n0(); ++i) lo = std::min(lo, 1.0 + 0.1 * std::sin(g.x0(i)));
    EXPECT_NEAR(r.min_rayleigh, lo, 1e-12);
    EXPECT_NEAR(r.min_rayleigh, 0.9, 1e-3);
}

TEST(ValidateCoefficients, DriftBudget) {
    const StripDomain d({1.0}, 2.0);
    const SpaceTimeGrid g(d, 1.0, 4, 20, {10, 0});
    auto op = operator_preset("anisotropic");
    EXPECT_TRUE(validate_coefficients(op, g).pass);
    op.eps = 0.001; // |b| = 0.1 > sqrt(eps)
    EXPECT_FALSE(validate_coefficients(op, g).pass);
}

TEST(OperatorPreset, UnknownNameIsConfigError) {
    try {
        operator_preset("nope");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.category(), ErrorCategory::Config);
    }
    EXPECT_EQ(time_scheme_from_string("crank-nicolson"), TimeScheme::CrankNicolson);
    EXPECT_THROW(time_scheme_from_string("rk4"), Error);
}

TEST(Evolve, ZeroStaysZero) {
    const StripDomain d({1.0}, 2.0);
    const SpaceTimeGrid g(d, 1.0, 10, 20, {10, 0});
    const auto f = evolve(laplacian_operator(), std::vector<double>(g.spatial_size(), 0.0), g);
    for (double v : f.field.values) EXPECT_EQ(v, 0.0);
}

TEST(Evolve, ManufacturedSolutionConverges) {
    const StripDomain d({1.0}, 1.0);
    const WindowMode m{1, 1, 1.0, 1.0};
    auto run = [&](const SpaceTimeGrid& g, TimeScheme s) {
        return final_error(evolve(laplacian_operator(), sample_level(g, [&](double a, double b) { return m.space(a, b); }), g, s), m);
    };
    const SpaceTimeGrid g(d, 0.25, 64, 16, {8, 0});
    const double ie1 = run(g, TimeScheme::ImplicitEuler);
    const double ie2 = run(g.refined(2, 4), TimeScheme::ImplicitEuler);
    EXPECT_LT(ie1, 0.2);
    EXPECT_GT(ie1 / ie2, 3.0); // O(tau + h^2) with tau/4, h/2
    const double cn1 = run(g, TimeScheme::CrankNicolson);
    const double cn2 = run(g.refined(2, 2), TimeScheme::CrankNicolson);
    EXPECT_GT(cn1 / cn2, 3.5); // O(tau^2 + h^2)
    EXPECT_LT(cn2, ie2 * 4);
}

TEST(Evolve, MaximumPrinciple) {
    const StripDomain d({1.0}, 4.0);
    const auto g = SpaceTimeGrid::from_spacing(d, 2.0, 0.02, 0.1, 0.1);
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto f = evolve(laplacian_operator(), seeded_bump(g, seed), g, TimeScheme::ImplicitEuler, seed);
        double prev = 1e300;
        for (int k = 0; k < g.nt(); ++k) {
            double sup = 0.0;
            for (int i = 0; i < g.n0(); ++i)
                for (int j = 0; j < g.n_cross(0); ++j) sup = std::max(sup, std::abs(f.field.at(k, i, j)));
            EXPECT_LE(sup, prev * (1 + 1e-13)) << "seed " << seed << " step " << k;
            prev = sup;
        }
        EXPECT_LE(f.max_relative_residual, 1e-12);
        EXPECT_EQ(f.seed, seed);
    }
}

TEST(Evolve, BoundaryNodesExactlyZero) {
    const StripDomain d({1.0}, 2.0);
    const auto g = SpaceTimeGrid::from_spacing(d, 1.0, 0.05, 0.1, 0.1);
    const auto f = evolve(operator_preset("varying"), seeded_bump(g, 7), g, TimeScheme::CrankNicolson);
    for (int k = 0; k < g.nt(); ++k) {
        for (int i = 0; i < g.n0(); ++i) {
            EXPECT_EQ(f.field.at(k, i, 0), 0.0);
            EXPECT_EQ(f.field.at(k, i, g.cells_cross(0)), 0.0);
        }
        for (int j = 0; j < g.n_cross(0); ++j) {
            EXPECT_EQ(f.field.at(k, 0, j), 0.0);
            EXPECT_EQ(f.field.at(k, g.cells_x0(), j), 0.0);
        }
    }
}

TEST(Evolve, Guards) {
    const StripDomain d({1.0}, 2.0);
    const SpaceTimeGrid g(d, 1.0, 10, 20, {10, 0});
    EXPECT_THROW(evolve(laplacian_operator(), std::vector<double>(3, 0.0), g), Error);
    try {
        evolve(constant_diag(2.0, 0.5, 1.0), std::vector<double>(g.spatial_size(), 0.0), g);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.category(), ErrorCategory::Precondition);
    }
    const StripDomain sq({1.0, 1.0}, 2.0);
    const SpaceTimeGrid g2(sq, 1.0, 10, 20, {10, 10});
    EXPECT_THROW(evolve(laplacian_operator(), std::vector<double>(g2.spatial_size(), 0.0), g2), Error);
}

TEST(SeededBump, DeterministicAndVanishingOnBoundary) {
    const StripDomain d({1.0}, 4.0);
    const auto g = SpaceTimeGrid::from_spacing(d, 1.0, 0.1, 0.1, 0.1);
    const auto a = seeded_bump(g, 11), b = seeded_bump(g, 11), c = seeded_bump(g, 12);
    EXPECT_EQ(a, b);
    EXPECT_NE(a, c);
    const int n1 = g.n_cross(0);
    for (int i = 0; i < g.n0(); ++i) {
        EXPECT_EQ(a[static_cast<std::size_t>(i * n1)], 0.0);
        EXPECT_EQ(a[static_cast<std::size_t>(i * n1 + n1 - 1)], 0.0);
    }
}

TEST(DiscreteGradient, LinearFieldIsExact) {
    const StripDomain d({1.0}, 1.0);
    const SpaceTimeGrid g(d, 1.0, 2, 8, {4, 0});
    SampledField f(g);
    for (int k = 0; k < g.nt(); ++k)
        for (int i = 0; i < g.n0(); ++i)
            for (int j = 0; j < g.n_cross(0); ++j) f.at(k, i, j) = g.x0(i);
    const auto grad = discrete_gradient(f);
    ASSERT_EQ(grad.size(), 2u);
    for (double v : grad[0].values) EXPECT_NEAR(v, 1.0, 1e-13);
    for (double v : grad[1].values) EXPECT_NEAR(v, 0.0, 1e-13);
}

TEST(DiscreteGradient, ZeroField) {
    const StripDomain d({1.0}, 1.0);
    const SpaceTimeGrid g(d, 1.0, 2, 8, {4, 0});
    const auto grad = discrete_gradient(SampledField(g));
    for (const auto& c : grad)
        for (double v : c.values) EXPECT_EQ(v, 0.0);
}

TEST(DiscreteGradient, SecondOrderOnSeparatedSolution) {
    const StripDomain d({1.0}, 1.0);
    const auto u = SeparatedSolution::make(1.0, 4.0, make_mode(d, {1}));
    auto err = [&](const SpaceTimeGrid& g) {
        const auto grad = discrete_gradient(sample_solution(SolutionSum{u}, g));
        double e = 0.0;
        for (int i = 0; i < g.n0(); ++i)
            for (int j = 0; j < g.n_cross(0); ++j) {
                SpacePoint x;
                x.x0 = g.x0(i);
                x.cross[0] = g.cross(0, j);
                const auto exact = u.gradient(0.0, x, d);
                e = std::max(e, std::abs(grad[0].at(g.time_steps(), i, j) - exact[0]));
                e = std::max(e, std::abs(grad[1].at(g.time_steps(), i, j) - exact[1]));
            }
        return e;
    };
    const SpaceTimeGrid g(d, 1.0, 2, 32, {16, 0});
    const double e1 = err(g), e2 = err(g.refined(2, 1));
    EXPECT_GE(oracle::observed_order(e1, e2), 1.8);
}

TEST(FieldBinary, RoundTripAndLayout) {
    const StripDomain d({1.0}, 2.0);
    const auto g = SpaceTimeGrid::from_spacing(d, 1.0, 0.1, 0.2, 0.25);
    const auto f = evolve(laplacian_operator(), seeded_bump(g, 5), g, TimeScheme::ImplicitEuler, 5);
    const auto path = (std::filesystem::temp_directory_path() / "ancient_field_test.bin").string();
    write_field_binary(path, f);
    const auto back = read_field_binary(path, d);
    EXPECT_EQ(back.field.values, f.field.values);
    EXPECT_EQ(back.seed, 5u);
    EXPECT_EQ(back.grid().nt(), g.nt());
    EXPECT_DOUBLE_EQ(back.grid().tau(), g.tau());

    std::ifstream is(path, std::ios::binary);
    std::uint64_t head[3];
    is.read(reinterpret_cast<char*>(head), sizeof head);
    EXPECT_EQ(head[0], static_cast<std::uint64_t>(g.nt()));
    EXPECT_EQ(head[1], static_cast<std::uint64_t>(g.n0()));
    EXPECT_EQ(head[2], static_cast<std::uint64_t>(g.n_cross(0)));
    const auto size = std::filesystem::file_size(path);
    EXPECT_EQ(size, 9 * 8 + f.field.values.size() * 8);
    std::remove(path.c_str());

    try {
        read_field_binary(path, d);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.category(), ErrorCategory::Io);
    }
    EXPECT_THROW(read_field_binary(path + ".missing", StripDomain({1.0}, 3.0)), Error);
}
