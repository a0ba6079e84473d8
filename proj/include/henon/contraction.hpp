#pragma once

#include "henon/curves.hpp"
#include "henon/map.hpp"

#include <vector>

namespace henon::contraction {

/// Most contractive direction of DF^n(z): the right singular vector for the
/// smaller singular value, with the sign convention y-component >= 0.
struct ContractiveDirection {
    Vec2 base;
    int order = 0;
    Vec2 direction;              // e_n(z), unit
    Vec2 expanding_direction;    // f_n(z), unit, orthogonal to e_n
    double contraction_log = 0;  // log sigma_2 = log|det DF^n| - log sigma_1
    double expansion_log = 0;    // log sigma_1, from forward power iteration
    double logdet = 0;           // accumulated log|det DF^n|
};

/// Throws std::domain_error when the singular-value gap sigma_1/sigma_2 is
/// below min_gap, or std::runtime_error when the orbit escapes before n.
ContractiveDirection contractive_direction(const Vec2& z, const MapParams& p, int n,
                                           double min_gap = 10.0);

/// log ||DF^mu(z) e_n(z)|| by forward application in log scale. Faithful only
/// while the true contracted norm stays above roughly 1e-16 * sigma_1(mu);
/// beyond that the measurement floors at the roundoff of the direction.
double contracted_log_norm(const Vec2& z, const MapParams& p, int n, int mu,
                           double min_gap = 10.0);

/// log of the largest singular value of DF^nu(z) for nu = 0..n.
std::vector<double> operator_log_norms(const Vec2& z, const MapParams& p, int n);

struct ExpansionCheck {
    bool passed = false;
    double worst_margin = 0;  // min over nu of log||M^nu u0|| - nu log kappa
    int argmin = 0;
};

/// Collet-Eckmann style gate: log||DF^nu(z) u0|| >= nu log kappa for nu <= n.
ExpansionCheck expansion_check(const Vec2& zeta0, const Vec2& u0, const MapParams& p,
                               int n, double kappa);

struct HorizontalExpansionReport {
    std::vector<double> min_ratio;  // per nu: min over sampled v of ||M^nu v||/||M^nu||
    bool holds_half = false;        // min ratio >= 1/2 for all nu
};

/// Samples unit vectors with |slope| <= 1/10 and reports the worst norm ratio
/// against the operator norm, per iterate.
HorizontalExpansionReport horizontal_expansion_property(const Vec2& zeta0,
                                                        const MapParams& p, int n,
                                                        int n_samples = 32);

struct LeafConfig {
    double step = 0;           // <= 0: min(1e-3, sqrt(b)/10)
    double min_gap = 10.0;
    double r_escape = kRescapeDefault;
};

/// Integral curve of the unit field e_k(z) through z0, fourth-order
/// integration both ways until the half-span is reached or the field becomes
/// undefined (leaf truncated, flag on the curve).
curves::PlanarCurve integrate_leaf(const Vec2& z0, const MapParams& p, int k,
                                   double span, const LeafConfig& cfg = {});

struct FoliationPatch {
    Vec2 center;
    int order_k = 0;
    std::vector<curves::PlanarCurve> leaves;
    std::array<Vec2, 4> quad{};  // hull corners of the extreme leaves
};

struct PatchConfig {
    double c = 0.9;        // seed half-width c^n
    double height = 0.3;   // vertical half-extent of the patch
    int leaves = 0;        // <= 0: n + 1
    double kappa = std::exp(0.3);
    LeafConfig leaf;
};

/// Foliated quadrilateral around the critical value z1; leaves are integral
/// curves of e_k, k = floor(n/10), seeded on a horizontal segment through z1.
/// Refused (std::domain_error) when the expansion check fails at z1.
FoliationPatch build_foliation_patch(const Vec2& z1, const MapParams& p, int n,
                                     const PatchConfig& cfg = {});

/// Minimum pairwise distance between leaves of a patch (sampled).
double min_leaf_separation(const FoliationPatch& patch);

}  // namespace henon::contraction
