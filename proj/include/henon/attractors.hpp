#pragma once

#include "henon/critical.hpp"
#include "henon/map.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace henon::attractors {

enum class Kind { sink, strange, divergent, undecided };

std::string kind_name(Kind k);

struct AttractorRecord {
    Kind kind = Kind::undecided;
    int period = 0;                       // sinks
    std::array<double, 2> multipliers{};  // real pair, or (modulus, modulus)
    bool complex_multipliers = false;
    double lyapunov = 0;
    Vec2 representative = Vec2::Zero();
    double basin_share = 0;
    std::vector<Vec2> signature;  // periodic orbit, or a tail sample (strange)
};

struct ClassifyConfig {
    int transient = 10000;
    long horizon = 1000000;
    int p_max = 64;
    double eps_per = 1e-9;
    double lambda_threshold = 0.05;
    double r_escape = kRescapeDefault;
    int tail_points = 1000;
    double match_tol_periodic = 1e-6;
    double match_tol_hausdorff = 0.05;
};

/// Classifies the omega-limit set of one orbit: transient discard, recurrence
/// scan for a period up to p_max confirmed by Newton on F^p, otherwise a
/// Lyapunov estimate over the horizon.
AttractorRecord classify_orbit(const Vec2& z0, const MapParams& p,
                               const ClassifyConfig& cfg = {});

/// Largest Lyapunov exponent by renormalized tangent iteration. When
/// `converged` is given it reports whether two independent halves agree
/// within 0.02. Throws std::runtime_error on divergence.
double lyapunov_exponent(const Vec2& z0, const MapParams& p, long n,
                         bool* converged = nullptr);

/// Newton search for attracting periodic orbits of period 1..p_max from a
/// coarse seed grid; deduplicated, spectral radius < 1 only.
std::vector<AttractorRecord> find_sinks(const MapParams& p, int p_max,
                                        int grid_per_axis = 24,
                                        double box_x = 2.0, double box_y = 2.0);

/// Samples the boundary and interior of the quadrilateral; true iff all
/// images stay inside with positive margin (reported).
bool verify_trapping(const MapParams& p, const std::array<Vec2, 4>& quad,
                     int boundary_samples, double* margin = nullptr);

/// The standard trapping quadrilateral around the attractor at (1.4, 0.3).
std::array<Vec2, 4> standard_trapping_quad();

struct SinkRegionReport {
    bool geometry_found = false;   // the return-time precondition was met
    int N = 0;                     // the return time used
    double D_N = 0;                // ||w_N||
    double return_distance = 0;    // |z_N - z0|
    int k_contraction = 0;         // smallest k with (1/2)^k D_N^2 < 1
    double recursion_spectral_radius = 0;
    bool invariant = false;        // sampled F^N(D'_N) subset of D'_N
    double inside_fraction = 0;    // fraction of sampled iterates landing inside
    std::string note;
};

/// Builds the region bounded by the image of the critical curve and a stable
/// leaf, checks F^N-invariance by boundary sampling, and reports the 2x2
/// recursion data. Reports geometry_found = false (with a note) when the
/// return-time precondition |z_N - z0| <= (1/50)/D_N fails up to n_max.
SinkRegionReport sink_region_contraction(const critical::CriticalPoint& cp,
                                         const MapParams& p, int n_max);

enum class CoexistenceFlag { empty, single, multi_sink, two_strange, sink_strange };

std::string flag_name(CoexistenceFlag f);

struct CoexistenceInventory {
    MapParams params;
    std::vector<AttractorRecord> records;
    CoexistenceFlag flag = CoexistenceFlag::empty;
    int divergent_seeds = 0;
    int undecided_seeds = 0;
    int total_seeds = 0;
};

/// classify_orbit per seed, then merge matching attractors (periodic: same
/// orbit up to cyclic shift within tolerance; strange: tail Hausdorff).
CoexistenceInventory attractor_inventory(const MapParams& p,
                                         const std::vector<Vec2>& seeds,
                                         const ClassifyConfig& cfg = {});

struct ScanWindow {
    double a_lo = 1.0, a_hi = 1.25;
    double b_lo = 0.25, b_hi = 0.35;
};

struct ScanConfig {
    ScanWindow window;
    int na = 100, nb = 20;
    int seeds_per_cell = 25;
    std::uint64_t seed = 1;
    int threads = 0;  // 0: hardware concurrency
    ClassifyConfig classify;
};

Vec2 cell_params(const ScanConfig& cfg, int i, int j);  // cell center (a, b)

/// Seeds for one cell, derived from the per-cell substream hash.
std::vector<Vec2> cell_seeds(const ScanConfig& cfg, int i, int j);

struct CellResult {
    int i = 0, j = 0;
    CoexistenceInventory inventory;
};

/// Inventory per grid cell, embarrassingly parallel and deterministic for a
/// given seed. `skip` marks already-completed cells (resume support).
std::vector<CellResult> coexistence_scan(const ScanConfig& cfg,
                                         const std::vector<char>* skip = nullptr);

}  // namespace henon::attractors
