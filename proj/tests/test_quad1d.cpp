#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "henon/quad1d.hpp"
#include "henon/util.hpp"

#include <cmath>
#include <random>

using namespace henon;
using namespace henon::quad1d;

TEST_CASE("critical orbit: a = 2 reaches the fixed point -1") {
    auto xi = critical_orbit_1d<double>(2.0, 10);
    CHECK(xi[0] == 0.0);
    CHECK(xi[1] == 1.0);
    for (int j = 2; j <= 10; ++j) CHECK(xi[j] == doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("critical orbit: a = 1 is period two") {
    auto xi = critical_orbit_1d<double>(1.0, 9);
    for (int j = 0; j <= 9; ++j) CHECK(xi[j] == (j % 2 == 0 ? 0.0 : 1.0));
}

TEST_CASE("critical orbit matches an extended-precision recomputation") {
    auto xi = critical_orbit_1d<double>(1.9, 50);
    auto xl = critical_orbit_1d<long double>(1.9L, 50);
    for (int j = 0; j <= 50; ++j) {
        double ref = static_cast<double>(xl[j]);
        REQUIRE(std::abs(xi[j] - ref) <= 1e-9 * std::max(1.0, std::abs(ref)));
    }
}

TEST_CASE("partition_index: pinned cell and mirrored cell") {
    double delta = std::exp(-3.0);
    double x = std::exp(-5.5);
    PartitionIndex pi = partition_index(x, delta);
    CHECK(pi.r == 6);
    // ell by brute-force scan over the 36 equal pieces of (e^-6, e^-5).
    double lo = std::exp(-6.0), hi = std::exp(-5.0);
    double w = (hi - lo) / 36.0;
    int ell_oracle = -1;
    for (int k = 0; k < 36; ++k)
        if (x >= lo + k * w && x < lo + (k + 1) * w) ell_oracle = k;
    CHECK(pi.ell == ell_oracle);

    PartitionIndex mi = partition_index(-x, delta);
    CHECK(mi.r == -6);
    CHECK(mi.ell == pi.ell);
    CellBounds cb = cell_bounds(mi);
    CHECK(cb.lo < -x);
    CHECK(cb.hi > -x);
}

TEST_CASE("partition covers (-delta,delta)\\{0} uniquely") {
    double delta = std::exp(-3.0);
    std::mt19937_64 rng(4);
    for (int i = 0; i < 20000; ++i) {
        double u = (rng() >> 11) * 0x1.0p-53;
        double mag = std::exp(-3.0 - 10.0 * u);  // log-uniform depth
        double x = (rng() & 1) ? mag : -mag;
        if (std::abs(x) >= delta) continue;
        PartitionIndex pi = partition_index(x, delta);
        REQUIRE(std::abs(pi.r) >= r_delta(delta));
        CellBounds cb = cell_bounds(pi);
        REQUIRE(x >= cb.lo);
        REQUIRE(x <= cb.hi);
        REQUIRE(pi.ell >= 0);
        REQUIRE(pi.ell < pi.r * pi.r);
    }
}

TEST_CASE("partition_index error paths") {
    double delta = std::exp(-3.0);
    CHECK_THROWS_AS(partition_index(0.0, delta), std::domain_error);
    CHECK_THROWS_AS(partition_index(0.2, delta), std::domain_error);
}

TEST_CASE("bound_period_1d: self-shadowing orbit hits the cap") {
    // a = 1 has xi_2 = 0 exactly: the return at n = 2 shadows itself forever.
    BoundPeriodResult r = bound_period_1d(1.0, 2, 0.01, 0.5, 500);
    CHECK(r.capped);
    CHECK(r.p == 500);
}

TEST_CASE("bound_period_1d: huge beta kills the period immediately") {
    double a = 1.98;
    auto xi = critical_orbit_1d<double>(a, 200);
    double delta = std::exp(-3.0);
    int n_ret = -1;
    for (int n = 2; n <= 200; ++n)
        if (std::abs(xi[n]) < delta && std::abs(xi[n]) > 0) {
            n_ret = n;
            break;
        }
    REQUIRE(n_ret > 0);
    BoundPeriodResult r = bound_period_1d(a, n_ret, 50.0, delta, 500);
    CHECK(r.p <= 1);
}

TEST_CASE("bound_period_1d agrees with a direct two-orbit scan") {
    double a = 1.98, beta = 0.01, delta = std::exp(-3.0);
    auto xi = critical_orbit_1d<double>(a, 400);
    for (int n = 2; n <= 200; ++n) {
        if (std::abs(xi[n]) >= delta || xi[n] == 0) continue;
        BoundPeriodResult r = bound_period_1d(a, n, beta, delta, 300);
        int p_oracle = 0;
        for (int j = 1; j <= 300; ++j) {
            if (n + j > 400) break;
            if (std::abs(xi[n + j] - xi[j]) > std::exp(-beta * j)) break;
            p_oracle = j;
        }
        if (n + r.p + 1 <= 400) CHECK(r.p == p_oracle);
    }
}

TEST_CASE("bound_period_1d rejects non-returns") {
    CHECK_THROWS_AS(bound_period_1d(1.98, 1, 0.01, std::exp(-3.0), 100), std::domain_error);
}

TEST_CASE("classify_return: pinned cases") {
    double delta = std::exp(-3.0);
    PartitionIndex pi{4, 7};
    CellBounds cb = cell_bounds(pi);
    // Exactly one full cell: essential.
    CHECK(classify_return(cb.lo, cb.hi, delta) == ReturnKind::essential);
    // Strictly inside one cell: inessential.
    double w = cb.hi - cb.lo;
    CHECK(classify_return(cb.lo + w / 4, cb.hi - w / 4, delta) == ReturnKind::inessential);
    // Long image: escape, regardless of window overlap.
    CHECK(classify_return(-0.2, 0.0, delta) == ReturnKind::escape);
    // Contains zero: essential (full cells of every deep r).
    CHECK(classify_return(-1e-5, 2e-5, delta) == ReturnKind::essential);
    // Neither meets the window nor long: error.
    CHECK_THROWS_AS(classify_return(0.06, 0.08, delta), std::domain_error);
}

TEST_CASE("derivative chain at a = 2 is exactly 4^j") {
    CHECK(std::abs(derivative_log_1d(2.0, 1.0, 200) - 200 * std::log(4.0)) < 1e-9);
    for (int j : {1, 7, 50, 128})
        CHECK(std::abs(derivative_log_1d(2.0, 1.0, j) - j * std::log(4.0)) < 1e-9);
}

TEST_CASE("bc_induction: a = 2 endpoint orbit survives everything") {
    // The orbit of 0 at a = 2 lands on -1 and never re-enters (-delta,delta):
    // a hairline interval at the endpoint survives with no deletions.
    BcConfig cfg;
    cfg.n_max = 30;
    ParamInterval w0{2.0 - 1e-9, 2.0, 0, {}};
    BcResult res = bc_induction(w0, cfg);
    CHECK(res.report.deleted_measure == 0.0);
    CHECK(res.report.surviving_measure ==
          doctest::Approx(res.report.initial_measure).epsilon(1e-12));
}

TEST_CASE("bc_induction: default acceptance window") {
    BcConfig cfg;  // alpha = 1/400, beta = 1/100, delta = e^-3, n_max = 30
    ParamInterval w0{2.0 - std::pow(2.0, -6.0), 2.0 - std::pow(2.0, -7.0), 0, {}};
    BcResult res = bc_induction(w0, cfg);

    CHECK(res.report.surviving_measure + res.report.deleted_measure ==
          doctest::Approx(res.report.initial_measure).epsilon(1e-12));
    CHECK(res.report.surviving_measure > 0.0);
    CHECK(res.report.deleted_measure / res.report.initial_measure < 0.5);
    CHECK(res.report.tail_fit_gamma > 0.0);
    CHECK(res.report.tail_fit_r2 > 0.9);

    // Deletions are genuine BA violations: every deleted subinterval maps
    // inside the cut zone at its deletion time (dense point check).
    for (const auto& d : res.deletions) {
        for (int k = 0; k <= 10; ++k) {
            double a = d.lo + (d.hi - d.lo) * k / 10.0;
            double x = critical_orbit_1d<double>(a, d.time).back();
            REQUIRE(std::abs(x) < std::min(d.ba_threshold, cfg.delta) * (1 + 1e-6));
        }
    }
}

TEST_CASE("bc_induction: synthetic large alpha exercises cell partitioning") {
    BcConfig cfg;
    cfg.alpha = 0.5;  // e^{-alpha n} < delta from n = 6 on
    cfg.n_max = 25;
    ParamInterval w0{2.0 - std::pow(2.0, -6.0), 2.0 - std::pow(2.0, -7.0), 0, {}};
    BcResult res = bc_induction(w0, cfg);
    CHECK(res.report.surviving_measure + res.report.deleted_measure ==
          doctest::Approx(res.report.initial_measure).epsilon(1e-12));
    // With the relaxed threshold some in-window mass survives and binds.
    bool some_bound = false;
    for (const auto& s : res.survivors)
        if (!s.itinerary.empty()) some_bound = true;
    CHECK(some_bound);
    for (const auto& s : res.survivors)
        for (int rho : s.itinerary) REQUIRE(rho >= r_delta(cfg.delta));
}

TEST_CASE("bc_induction rejects degenerate input") {
    BcConfig cfg;
    CHECK_THROWS_AS(bc_induction(ParamInterval{1.9, 1.9, 0, {}}, cfg),
                    std::invalid_argument);
    CHECK_THROWS_AS(bc_induction(ParamInterval{-1.0, 1.0, 0, {}}, cfg),
                    std::invalid_argument);
}

TEST_CASE("escape_time: wide interval escapes immediately; nesting is monotone") {
    BcConfig cfg;
    cfg.n_max = 30;
    ParamInterval wide{1.6, 1.9, 0, {}};
    EscapeTimeResult e = escape_time(wide, cfg);
    CHECK(!e.capped);
    CHECK(e.time <= 3);

    ParamInterval big{2.0 - std::pow(2.0, -6.0), 2.0 - std::pow(2.0, -7.0), 0, {}};
    ParamInterval small{big.lo, big.lo + big.length() / 64, 0, {}};
    EscapeTimeResult eb = escape_time(big, cfg);
    EscapeTimeResult es = escape_time(small, cfg);
    if (!eb.capped && !es.capped) CHECK(es.time >= eb.time);
}

TEST_CASE("escape ensemble: deeper first returns escape later on average") {
    BcConfig cfg;
    cfg.alpha = 0.5;
    cfg.n_max = 30;
    ParamInterval w0{2.0 - std::pow(2.0, -6.0), 2.0 - std::pow(2.0, -7.0), 0, {}};
    BcResult res = bc_induction(w0, cfg);
    std::vector<double> depth, esc;
    for (const auto& s : res.survivors) {
        if (s.itinerary.empty()) continue;
        EscapeTimeResult e = escape_time(s, cfg);
        if (e.capped) continue;
        depth.push_back(s.itinerary.front());
        esc.push_back(e.time);
    }
    if (depth.size() >= 6) {
        LinearFit f = fit_linear(depth, esc);
        CHECK(f.slope >= 0.0);
    }
}
