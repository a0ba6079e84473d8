#pragma once

#include "henon/critical.hpp"
#include "henon/curves.hpp"
#include "henon/map.hpp"

#include <functional>
#include <vector>

namespace henon::tangency {

/// Where to look for the fold/leg pair, and how finely to trace.
struct TangencyLocality {
    double x_lo = -1.5, x_hi = 1.5;
    double y_lo = -0.6, y_hi = 0.6;
    int wu_generations = 10;
    double ws_arclength = 2.5;
    double h_max = 1e-3;
    double theta_max = 0.05;
};

struct GapResult {
    double gap = std::numeric_limits<double>::quiet_NaN();
    Vec2 apex = Vec2::Zero();       // fold apex on W^u
    Vec2 leg_point = Vec2::Zero();  // the leg hit along the fold axis
    Vec2 opening = Vec2::Zero();    // unit fold-opening direction
    double leg_slope = 0;           // |dy/dx| of the leg near the hit
    double apex_curvature = 0;      // polyline-fit curvature at the apex
    bool found = false;
};

/// Signed offset between the most-penetrating W^u fold apex in the locality
/// and the W^s leg, measured along the fold axis. Positive exactly when the
/// fold cuts the leg twice. Throws std::domain_error when either curve or a
/// fold/leg pairing is missing from the locality.
GapResult signed_gap(double a, double b, const TangencyLocality& loc);

struct TangencyCertificate {
    double a_star = 0;
    double b = 0;
    Vec2 point = Vec2::Zero();  // tangency point (fold apex at a_star)
    Vec2 z0 = Vec2::Zero();     // the critical point whose orbit makes the fold
    int N = 0;                  // iterate depth z0 -> apex
    double log_W_N = 0;         // log ||DF^{N-1}(z1)(1,0)||
    double log_E_N = 0;         // log of the smaller singular value of DF^N(z0)
    double measured_curvature = 0;   // second-variation pushforward at the apex
    double curvature_lower_bound = 0;  // (C1/2) |W_N| / |E_N|^2
    double C1 = 0;              // 2 a |t_x| at z0, expected in [2,4]
    double gap_derivative = 0;  // d(gap)/da at a_star
    double rho_slope = 0;       // slope-matching arclength
    double rho0 = 0;            // |E_N|/|W_N| window radius
    double leg_slope = 0;
    bool quadratic_ok = false;
};

struct TangencySolveConfig {
    double gap_tol_rel = 1e-10;  // of the locality height
    int max_bisect = 80;
    int critical_field_order = 6;
    int critical_generations = 2;
    int n_probe_max = 60;  // when matching the apex to F^N(z0)
};

/// Bisection on the signed gap over [a_lo, a_hi] (opposite signs required),
/// then the quadraticity certificate. Throws std::domain_error when there is
/// no sign change or the contact fails the curvature bound.
TangencyCertificate find_tangency_parameter(double a_lo, double a_hi, double b,
                                            const TangencyLocality& loc,
                                            const TangencySolveConfig& cfg = {});

struct WPrimeReport {
    std::vector<double> log_w;       // log||W_N|| per vertex
    std::vector<double> log_wprime;  // log||dW_N/drho|| per interior vertex
    double max_log_wprime = 0;
    double bound = 0;  // N log 25
    bool passed = false;
};

/// Finite-difference check of |W'_N| <= 25^N along a curve of starting points.
WPrimeReport w_prime_bound_check(const curves::PlanarCurve& gamma, const MapParams& p,
                                 int N);

struct RenormalizationData {
    int n = 0;
    double sigma = 0;       // |lambda_u| at (a_star, b)
    double u = 0, v = 0, w = 0;  // normal-form coefficients, w = 0 here
    double mu_scale = 0;    // mu_bar = mu_scale * mu + mu_offset
    double mu_offset = 0;
    double residual_R1 = 0; // sampled deviation from the quadratic normal form
    int samples = 0;
};

/// Palis-Takens style renormalization data for the unfolding at cert, with a
/// sampled verification that the composed return map matches v x^2 + mu_bar.
/// Throws std::domain_error when sigma <= 1.
RenormalizationData renormalize(const TangencyCertificate& cert, int n);

using GapFn = std::function<double(double a, double b)>;

struct DoubleTangencyResult {
    bool converged = false;
    double a_star = 0, b_star = 0;
    std::vector<std::array<double, 2>> iterates;  // (a, b) per round
    double contraction_ratio = 0;                 // fitted |step_{k+1}|/|step_k|
    std::string note;
};

struct DoubleTangencyConfig {
    double tol = 1e-10;
    int max_rounds = 40;
    double bracket_step = 1e-3;  // initial 1D bracket probe
    double damping_trigger = 0.9;
    double damping = 0.8;
};

/// Alternating one-parameter solves: fix b and solve gap1 = 0 in a, then fix
/// a and solve gap2 = 0 in b, until both vanish or the alternation diverges
/// (ratio >= 1 over 5 rounds).
DoubleTangencyResult double_tangency_search(const GapFn& gap1, const GapFn& gap2,
                                            double a0, double b0,
                                            const DoubleTangencyConfig& cfg = {});

/// Curvature of F^N(curve) at F^N(z0) by the second-variation recursion with
/// the analytic Hessian of the map, in overflow-safe scaled form.
double pushforward_curvature(const Vec2& z0, const Vec2& tangent0, double curvature0,
                             const MapParams& p, int N);

}  // namespace henon::tangency
