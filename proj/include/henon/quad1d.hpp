#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

namespace henon::quad1d {

/// One parameter interval of the induction, with the itinerary of return
/// depths rho recorded at its free returns.
struct ParamInterval {
    double lo = 0, hi = 0;
    int depth = 0;  // induction step count (number of free returns processed)
    std::vector<int> itinerary;

    double length() const { return hi - lo; }
};

struct PartitionIndex {
    int r = 0;   // signed; |x| in (e^{-|r|}, e^{-|r|+1})
    int ell = 0; // subcell within the r^2 equal pieces
};

enum class ReturnKind { essential, inessential, escape };

struct ReturnEvent {
    int time = 0;
    ReturnKind kind = ReturnKind::inessential;
    PartitionIndex index;
    int bound_period = 0;
};

struct ExclusionReport {
    double initial_measure = 0;
    double surviving_measure = 0;
    double deleted_measure = 0;
    std::map<int, double> escape_histogram;  // first escape time -> surviving measure
    double never_escaped_measure = 0;
    double tail_fit_gamma = 0;  // from log-survival regression; > 0 on healthy runs
    double tail_fit_r2 = 0;
};

/// xi_0..xi_n with xi_0 = 0, xi_{j+1} = 1 - a xi_j^2.
template <class Scalar>
std::vector<Scalar> critical_orbit_1d(Scalar a, int n) {
    std::vector<Scalar> xi(n + 1);
    xi[0] = Scalar(0);
    for (int j = 0; j < n; ++j) xi[j + 1] = Scalar(1) - a * xi[j] * xi[j];
    return xi;
}

inline int r_delta(double delta) { return static_cast<int>(std::ceil(-std::log(delta))); }

/// Partition cell of x inside (-delta, delta) \ {0}. Throws std::domain_error
/// when |x| >= delta (not a return) or x == 0 (degenerate).
PartitionIndex partition_index(double x, double delta);

/// Endpoints of I_{r,ell} (positive-r cell; mirror for r < 0).
struct CellBounds { double lo, hi; };
CellBounds cell_bounds(const PartitionIndex& idx);

struct BoundPeriodResult {
    int p = 0;
    bool capped = false;
};

/// Maximal p with |xi_{n+j}(a) - xi_j(a)| <= e^{-beta j} for 1 <= j <= p.
/// Requires |xi_n| < delta. Capped at `horizon` with the flag set.
BoundPeriodResult bound_period_1d(double a, int n, double beta, double delta,
                                  int horizon = 2000);

/// Classification of an interval image [lo,hi]. Escape when length >= 1/10;
/// essential when it contains at least one full partition cell; otherwise
/// inessential. Throws std::domain_error when it neither meets the window
/// nor has escape length.
ReturnKind classify_return(double lo, double hi, double delta);

struct BcConfig {
    double alpha = 1.0 / 400.0;
    double beta = 1.0 / 100.0;
    double delta = std::exp(-3.0);
    int n_max = 30;
    int bound_horizon = 2000;
    int max_elements = 200000;
    int samples = 33;          // per-element image sampling resolution
    double min_width = 1e-14;  // elements thinner than this are not split further
};

struct DeletionEvent {
    double lo = 0, hi = 0;  // deleted parameter subinterval
    int time = 0;           // free return at which the BA cut happened
    double ba_threshold = 0;
};

struct BcResult {
    ExclusionReport report;
    std::vector<ParamInterval> survivors;
    std::vector<DeletionEvent> deletions;
    std::vector<ReturnEvent> returns;  // processed free-return events (aggregate)
};

/// The executable partition/return/deletion induction on parameter intervals.
/// Interval images are tracked by adaptive sampling; elements are split where
/// the parameter map folds. Deletions happen at essential free returns only:
/// the part mapped into (-e^{-alpha n}, e^{-alpha n}) is removed.
/// Throws std::invalid_argument when omega0 folds before its first return.
BcResult bc_induction(const ParamInterval& omega0, const BcConfig& cfg);

struct EscapeTimeResult {
    int time = 0;
    bool capped = false;
};

/// First time the image of omega reaches length >= 1/10 under the parameter
/// dynamics, capped at cfg.n_max.
EscapeTimeResult escape_time(const ParamInterval& omega, const BcConfig& cfg);

/// log |(q_a^n)'(x0)| accumulated in log scale (1D analogue of the 2D
/// derivative products).
double derivative_log_1d(double a, double x0, int n);

}  // namespace henon::quad1d
