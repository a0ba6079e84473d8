#pragma once

#include "henon/contraction.hpp"
#include "henon/curves.hpp"
#include "henon/map.hpp"

#include <optional>
#include <vector>

namespace henon::critical {

/// Tangency of the unstable-manifold tangent with the contractive field e_n.
struct CriticalPoint {
    Vec2 z0;              // the critical point, on W^u
    Vec2 z1;              // critical value F(z0)
    int generation = 0;
    int order_n = 0;      // order of the contractive field used
    double residual_angle = 0;
    double arclength = 0; // location on the defining curve
};

/// Locates the tangency between the curve tangent and e_n along wu by a sign
/// change of the cross product, refined by bisection. When several candidates
/// exist the one with smallest |x| is returned (critical points sit on the
/// roughly horizontal legs near x = 0).
/// Throws std::domain_error when no sign change exists on the segment.
CriticalPoint find_critical_point(const curves::PlanarCurve& wu, const MapParams& p,
                                  int n);

struct CEReport {
    double min_margin = 0;  // min over j<=n of log||w_j|| - kappa j
    int argmin = 0;
    bool passed = false;
    std::vector<double> log_norms;  // log||DF^j(z1)(1,0)||, j = 0..n
};

CEReport collet_eckmann_check(const CriticalPoint& cp, const MapParams& p, int n,
                              double kappa);

struct BoundPeriod2D {
    int p = 0;
    bool capped = false;
};

/// Maximal p with |F^j(zeta0) - F^j(cp.z0)| <= e^{-beta j} for 1 <= j <= p.
BoundPeriod2D bound_period_2d(const Vec2& zeta0, const CriticalPoint& cp,
                              const MapParams& p, double beta, int horizon = 2000);

struct SplitStep {
    int nu = 0;
    Vec2 z;               // F^nu(z1)
    LogVec w;             // full derivative product DF^nu(z1)(1,0)
    LogVec w_star;        // the splitting vector; equals w when free
    bool is_free = true;  // outside all fold periods
    bool is_return = false;
    int binding = -1;     // index into the critical set, at returns
    double d = 0;         // dist_h to the binding point, at returns
    int bound_period = 0; // p recorded at returns
};

struct SplittingTrace {
    std::vector<SplitStep> steps;        // nu = 0..n
    std::vector<int> ba_violations;      // return times with d < e^{-alpha nu}
    std::vector<int> unbound_returns;    // returns with no admissible binding point
};

struct SplitConfig {
    double alpha = 1.0 / 400.0;
    double beta = 1.0 / 100.0;
    double delta = std::exp(-3.0);
    double vertical_fraction = 0.1;  // admissibility: |dy| <= fraction * |dx|
    int bound_horizon = 2000;
};

/// Runs the expanded-vector splitting along the orbit of the critical value.
/// At free returns the binding point minimizing horizontal distance among
/// admissible candidates is selected, d_nu is recorded, and a fold period is
/// pushed; w* is re-seeded horizontally at fold starts and re-derived from the
/// full product at fold expiry.
SplittingTrace splitting_run(const CriticalPoint& cp, const MapParams& p, int n,
                             const std::vector<CriticalPoint>& critical_set,
                             const SplitConfig& cfg = {});

struct CaptureConfig {
    double c_lo = 0.3;  // window [c_lo q^{j+1}, c_hi q^j], q = det/(2a)
    double c_hi = 3.0;
    double local_span = 0.4;  // arclength of the leaf piece handed to the refiner
};

/// Vertical distances from cp.z0 to the other W^u leaves crossing the vertical
/// line through it (ascending, self-crossings excluded).
std::vector<double> leaf_vertical_distances(const curves::PlanarCurve& wu,
                                            const CriticalPoint& cp,
                                            double exclusion = 1e-9);

/// Captures a critical point on the W^u leaf whose vertical distance from
/// cp.z0 falls in the spacing window for index j. Throws std::domain_error
/// when no leaf lies in the window (trace more generations).
CriticalPoint capture_nearby_critical(const curves::PlanarCurve& wu,
                                      const CriticalPoint& cp, int j,
                                      const MapParams& p,
                                      const CaptureConfig& cfg = {});

}  // namespace henon::critical
