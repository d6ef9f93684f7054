#pragma once

#include "ancient/fd_solver.hpp"
#include "ancient/geometry.hpp"
#include "ancient/solutions.hpp"

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ancient {

/// phi(t, x0) = s(|x0|) q(t): s ramps 1 -> 0 on r <= |x0| <= R, q ramps
/// 0 -> 1 on -R^2 <= t <= -r^2, both cubic smoothsteps.
struct CutoffProfile {
    double r = 0.0;
    double R = 0.0;
    double d0_max = 0.0; ///< sup |d phi / d x0| = 1.5/(R-r)
    double dt_max = 0.0; ///< sup |d phi / d t| = 1.5/(R^2-r^2)
    double sampled_d0_max = 0.0;
    double sampled_dt_max = 0.0;

    double value(double t, double x0) const;
    double d0(double t, double x0) const;
    double dt(double t, double x0) const;
};

/// Rejects R - r below 4 x0-cells of `grid`; records sampled slope maxima.
CutoffProfile cutoff_profile(double r, double R, const SpaceTimeGrid& grid);
CutoffProfile cutoff_profile(double r, double R);

/// Constants tracked through the reverse Poincare argument for an operator
/// with ellipticity lambda, bound Lambda and cross-section eigenvalue mu1.
struct EstimateConstants {
    double lambda = 1.0;
    double Lambda = 1.0;
    double mu1 = 0.0;
    double energy = 0.0;   ///< 4 Lambda^2 / lambda
    double gradient = 0.0; ///< (16 energy + 8) / lambda
    double l2 = 0.0;       ///< gradient / mu1
    double eps0 = 0.0;     ///< largest admissible smallness budget
};

EstimateConstants estimate_constants(double lambda, double Lambda, double mu1);
EstimateConstants estimate_constants(const OperatorCoefficients& op, const StripDomain& domain);
/// lambda^2 mu1 / (4 (lambda + 1)).
double epsilon0(double lambda, double mu1);

struct EstimateReport {
    std::string check;
    std::string source; ///< "closed-form" or "field"
    double lhs = 0.0;
    double rhs = 0.0;
    double constant_used = 0.0;
    double empirical_constant = 0.0;
    bool pass = false;
    bool vacuous = false;
    double r = 0.0;
    double R = 0.0;
    double snapped_r = 0.0;
    double snapped_R = 0.0;
    std::string grid;
    std::vector<std::pair<std::string, double>> details;
    std::string message;

    double detail(const std::string& key) const;
};

/// int_{Q_r} |grad u|^2 <= C/(R-r)^2 int_{Q_R \ Q_r} u^2 with C = constants.gradient.
EstimateReport reverse_poincare_check(const SolutionSum& u, double r, double R, const EstimateConstants& constants);
/// FD field version: quadrature over snapped cylinders, discrete gradient.
/// Requires R^2 <= T and R + 1 <= X.
EstimateReport reverse_poincare_check(const SolutionField& u, const OperatorCoefficients& op, double r, double R);

/// int_{Q_r} u^2 <= C/(R-r)^2 int_{Q_R \ Q_r} u^2 with C = constants.l2.
EstimateReport l2_reverse_check(const SolutionSum& u, double r, double R, const EstimateConstants& constants);
EstimateReport l2_reverse_check(const SolutionField& u, const OperatorCoefficients& op, double r, double R);

/// int phi^2 u^2 <= (1/mu1) int phi^2 |grad' u|^2 with the cutoff of (r, R).
/// The closed-form path integrates the cross-section exactly and (t, x0) by
/// Simpson on `cells` intervals per axis. lhs/rhs is the sharpness ratio.
EstimateReport slice_poincare_check(const SolutionSum& u, const StripDomain& domain, double r = 1.0,
                                    double R = 2.0, int cells = 400);
/// Field path; the discrete cross-gradient underestimates the continuous one
/// by O((pi h/L)^2), so the bound is relaxed by 1 + 2 (pi h/L)^2.
EstimateReport slice_poincare_check(const SolutionField& u, double r = 1.0, double R = 2.0);

/// The integrated energy inequality behind the estimate:
/// int_{t=0} phi^2 u^2 + (lambda/2) int phi^2 |grad u|^2
///   <= C int u^2 |d0 phi|^2 + 2 int u^2 |phi| |dt phi|,  C = 4 Lambda^2/lambda.
EstimateReport energy_inequality_check(const SolutionField& u, const OperatorCoefficients& op, double r,
                                       double R);

/// (R-r)^2 I(r) / (I(R) - I(r)); 0 when I(r) = 0.
double l2_empirical_constant(const SolutionSum& u, double r, double R);

/// Empirical L2 constant: sup of l2_empirical_constant over base radii
/// r..r+8 (step 1/4) and gaps 1e-3..10 (log spaced), raised if needed so the
/// ladder r_k = r + k r0, r0 = sqrt(C (e-1)), k = 1..K also satisfies it.
double growth_constant(const SolutionSum& u, double r, int K);

struct GrowthIterationReport {
    bool vacuous = false;
    double r = 0.0;
    double r0 = 0.0;
    double constant = 0.0;
    int K = 0;
    std::vector<double> ratios; ///< I(r + k r0) / (e^k I(r))
    double min_ratio = 0.0;
    bool pass = false;
};

/// `r0` <= 0 selects r0 = sqrt(growth_constant (e-1)).
GrowthIterationReport growth_iteration_check(const SolutionSum& u, double r, double r0, int K);

struct GrowthExponent {
    double slope = 0.0; ///< -inf for u = 0
    double intercept = 0.0;
    double residual = 0.0; ///< max |log I - fit| over the fitted points
    std::vector<double> radii;
    std::vector<double> log_energy;
    bool zero = false;
};

/// Least-squares slope of log I_u(R) against R over the top half of R_list.
GrowthExponent growth_exponent(const SolutionSum& u, const std::vector<double>& R_list);

/// log I_u(r) computed termwise in the log domain.
double log_energy(const SolutionSum& u, double r);

struct LiouvilleProbe {
    bool zero = false;
    bool certificate = false;
    double d = 0.0;
    double r = 0.0;
    double r0 = 0.0;
    int K = 0;
    double log_fitted_constant = 0.0; ///< log max_{k<=K} I(r+k r0)/(r+k r0)^{2d}
    long certificate_k = 0;
    double log_ratio = 0.0; ///< log [I(r) e^k / (C (r + k r0)^{2d})] at certificate_k
    double margin = 10.0;
    long model_k = 0; ///< first k with e^k >= (r + k r0)^{2d}
};

/// Searches k = 1..k_max for I(r) > margin C (r + k r0)^{2d} / e^k.
/// `r0` <= 0 selects the growth_constant ladder.
LiouvilleProbe polynomial_liouville_probe(const SolutionSum& u, double d, double r, int K, double r0 = 0.0,
                                          double margin = 10.0, long k_max = 10000000);

using PointFunction = std::function<double(double t, const SpacePoint& x)>;

struct MeanValueOptions {
    double C_mv = 1.0;
    bool zero_extend = true;
    int radial_cells = 64;
    int angular_cells = 128;
    int time_cells = 64;
};

/// |u(t,x)|^2 <= C_mv / r^{n+3} int_{P_r(t,x)} u^2, with u extended by zero
/// outside (-inf,0] x Omega when zero_extend is set.
EstimateReport mean_value_check(const PointFunction& u, const StripDomain& domain, double t, const SpacePoint& x,
                                double r, const MeanValueOptions& opt);
EstimateReport mean_value_check(const SolutionSum& u, const StripDomain& domain, double t, const SpacePoint& x,
                                double r, const MeanValueOptions& opt);

struct MeanValueCalibration {
    double max_empirical = 0.0;
    double frozen = 0.0; ///< max_empirical rounded up with a factor 2 safety margin
    std::size_t samples = 0;
};

/// Empirical constants of the whole-space heat kernel in R^{n+1} over a
/// fixed family of source offsets, plus u = 1.
MeanValueCalibration calibrate_mean_value(int n);

/// Frozen calibration value used as the default C_mv.
double default_mean_value_constant(int n);

} // namespace ancient
