#pragma once

#include "henon/map.hpp"

#include <functional>
#include <vector>

namespace henon::curves {

/// Adaptive polyline with arclength parametrization.
struct PlanarCurve {
    std::vector<Vec2> pts;
    std::vector<double> s;  // cumulative arclength, s[0] = 0
    double h_max = 1e-3;
    double theta_max = 0.05;
    bool truncated = false;  // tracing left the escape box

    size_t size() const { return pts.size(); }
    double length() const { return s.empty() ? 0.0 : s.back(); }
    void push(const Vec2& z);
    /// Point at arclength u (clamped, linear interpolation).
    Vec2 at(double u) const;
    /// Index of the last vertex with s[i] <= u.
    size_t segment_of(double u) const;
};

PlanarCurve from_points(const std::vector<Vec2>& pts, double h_max = 1e-3,
                        double theta_max = 0.05);

struct TraceConfig {
    double h_max = 1e-3;
    double theta_max = 0.05;
    double eps_seed = 1e-4;     // seed scale along the eigenvector
    double r_escape = kRescapeDefault;
    size_t max_vertices = 10'000'000;
    double cone_floor = 0.0;    // stable tracing aborts when |slope| < cone_floor/sqrt(b)
};

/// Unstable manifold of a saddle: a fundamental segment along the unstable
/// eigenvector, iterated with refinement by bisection of preimage parameters.
/// Generations are concatenated in arclength order.
PlanarCurve trace_unstable(const FixedPointData& fp, const MapParams& p,
                           int generations, const TraceConfig& cfg = {});

struct StableLeg {
    PlanarCurve curve;
    double min_abs_slope = 0;  // over all emitted segments
    double k_cone = 0;         // min |slope| * sqrt(b)
};

/// Downward leg of the stable manifold, grown by inverse iteration.
/// Throws std::runtime_error on a cone violation (|slope| below
/// cone_floor/sqrt(b)); requires b > 0.
StableLeg trace_stable_leg(const FixedPointData& fp, const MapParams& p,
                           double target_arclength, const TraceConfig& cfg = {});

struct C2bCertificate {
    double max_slope = 0;
    double max_second_derivative = 0;
    double bound = 0;  // C * b^t
    bool passed = false;
};

/// Slope/second-derivative bounds of a graph-over-x curve by divided
/// differences. Rotates to the principal axis first when needed; throws
/// std::invalid_argument if the curve is not a graph even then.
C2bCertificate c2b_check(const PlanarCurve& c, double b, double t, double C);

/// Curvature |z' x z''| / |z'|^3 at arclength u from a local least-squares
/// quadratic fit over a window of vertices. window_arclength <= 0 picks
/// roughly ten local spacings. Returns 0 (flag set) on a degenerate window.
double curvature(const PlanarCurve& c, double u, double window_arclength = 0,
                 bool* degenerate = nullptr);

struct SpacingReport {
    std::vector<double> crossings;     // measured x positions on the reference line
    std::vector<double> predicted;     // sin(pi/2 * nu/(3*2^k))
    std::vector<double> gaps;          // measured consecutive gaps
    std::vector<double> predicted_gaps;
    double max_rel_gap_error = 0;      // over matched gaps
    int matched = 0;
};

/// Locations where legs of W^s(z-hat) cross a horizontal reference line,
/// compared against the sinusoidal preimage-ladder prediction at level k.
/// Crossings with |x| < delta are excluded from the comparison.
SpacingReport stable_leg_spacing(const MapParams& p, int k, double y_ref = 0.0,
                                 double delta = std::exp(-3.0));

/// All transversal segment-pair intersections of two polylines, deduplicated
/// within 1e-9.
std::vector<Vec2> intersect(const PlanarCurve& c1, const PlanarCurve& c2);

/// Distance from point q to the polyline (nearest segment).
double distance_to_curve(const PlanarCurve& c, const Vec2& q);

/// Symmetric Hausdorff distance between a curve and a point cloud.
double hausdorff_curve_cloud(const PlanarCurve& c, const std::vector<Vec2>& cloud,
                             double cell = 0.01);

/// Generic adaptive image tracer: appends src(t) for t in [t0,t1] to out,
/// refining by parameter bisection until spacing <= h_max and turning angle
/// <= theta_max (or the parameter step hits resolution).
/// Returns false (and stops) when the image leaves the escape box.
bool trace_parametric(const std::function<Vec2(double)>& src, double t0, double t1,
                      PlanarCurve& out, const TraceConfig& cfg);

}  // namespace henon::curves
