#pragma once

#include "henon/critical.hpp"
#include "henon/map.hpp"
#include "henon/quad1d.hpp"

#include <vector>

namespace henon::param_deriv {

enum class ParamKind { a, b };

/// tau_{nu+1} = DF(z_nu) tau_nu + forcing(z_nu), in log-scaled form.
/// Forcing is (0, x_nu) for b and (-x_nu^2, 0) for a.
struct TangentTrace {
    std::vector<LogVec> tau;   // nu = 0..n
    std::vector<Vec2> orbit;   // z_nu
    ParamKind which = ParamKind::b;
};

TangentTrace tangent_recursion(const Vec2& z0, const Vec2& tau0, const MapParams& p,
                               int n, ParamKind which);

/// Homogeneous variant (zero forcing); must reproduce derivative_product.
TangentTrace tangent_recursion_homogeneous(const Vec2& z0, const Vec2& tau0,
                                           const MapParams& p, int n);

/// d z0 / d(param) of the primary critical point by central differences on
/// find_critical_point across the parameter.
Vec2 critical_tangent_initial(const MapParams& p, ParamKind which, int field_order = 6,
                              int generations = 2, double h = 1e-6);

struct ComparabilityReport {
    std::vector<double> ratio;       // ||tau_nu|| / ||w*_nu||
    std::vector<double> angle;       // angle(tau_nu, w*_nu)
    std::vector<bool> ratio_in_band; // within [1/100, 100]
    std::vector<bool> angle_ok;      // free iterates: angle <= b^{t/2}
    std::vector<bool> is_free;
    bool all_pass = true;            // over nu = 2..n
};

/// Lemma-style comparison of the parameter tangent against the splitting
/// vectors along the same orbit.
ComparabilityReport comparability_check(const TangentTrace& trace,
                                        const critical::SplittingTrace& splitting,
                                        const MapParams& p);

struct AlignmentReport {
    std::vector<int> free_times;
    std::vector<double> lambda;          // projection coefficients at free times
    std::vector<double> residual;        // ||tau - lambda w|| at free times
    std::vector<double> residual_ratio;  // residual / ||w||
    double cauchy_ratio = 0;             // fitted decay ratio of |lambda_{k+1}-lambda_k|
};

/// lambda_n = <tau_n, w_n>/||w_n|| at free iterates; the sequence should be
/// Cauchy while the residual stays bounded relative to ||w_n||.
AlignmentReport b_alignment_check(const TangentTrace& trace,
                                  const critical::SplittingTrace& splitting, int n);

/// Dyadic startup windows [2 - 2^-N, 2 - 2^-N-1] for N = 4..N_max.
std::vector<quad1d::ParamInterval> startup_windows(int N_max);

}  // namespace henon::param_deriv
