#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "henon/map.hpp"
#include "henon/util.hpp"

#include <cmath>
#include <random>

using namespace henon;

TEST_CASE("apply: pinned values") {
    MapParams p(1.4, 0.3);
    Vec2 w = apply<double>(Vec2(0, 0), p);
    CHECK(w.x() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(w.y() == doctest::Approx(0.0).epsilon(1e-15));

    MapParams q(2.0, 0.0);
    Vec2 v = apply<double>(Vec2(1, 0), q);
    CHECK(v.x() == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(v.y() == 0.0);
}

TEST_CASE("fixed point is invariant under apply") {
    MapParams p(1.4, 0.3);
    FixedPointData fp = saddle_fixed_point(p);
    // Quadratic-formula oracle: a x^2 + (1-b) x - 1 = 0.
    double x_oracle = (-0.7 + std::sqrt(0.49 + 4 * 1.4)) / (2 * 1.4);
    CHECK(fp.location.x() == doctest::Approx(x_oracle).epsilon(1e-14));
    CHECK(fp.location.x() == doctest::Approx(0.6314).epsilon(1e-3));
    Vec2 img = apply<double>(fp.location, p);
    CHECK((img - fp.location).norm() < 1e-12);
}

TEST_CASE("apply_inverse round trips and inverts pinned points") {
    MapParams p(1.4, 0.3);
    Vec2 z(0.3, 0.1);
    Vec2 rt = apply_inverse(apply<double>(z, p), p);
    CHECK((rt - z).norm() < 1e-12);

    Vec2 w = apply_inverse(Vec2(1, 0), p);
    CHECK(w.x() == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(w.y() == doctest::Approx(0.0).epsilon(1e-14));

    FixedPointData fp = saddle_fixed_point(p);
    CHECK((apply_inverse(fp.location, p) - fp.location).norm() < 1e-12);
}

TEST_CASE("round trip holds over random points in the working box") {
    MapParams p(1.4, 0.3);
    std::mt19937_64 rng(12345);
    auto unif = [&](double lo, double hi) {
        return lo + (hi - lo) * (rng() >> 11) * 0x1.0p-53;
    };
    for (int i = 0; i < 10000; ++i) {
        Vec2 z(unif(-2, 2), unif(-2, 2));
        Vec2 rt = apply_inverse(apply<double>(z, p), p);
        REQUIRE((rt - z).norm() < 1e-10);
    }
}

TEST_CASE("jacobian analytic entries and determinant") {
    MapParams p(2.0, 0.3);
    Mat2 J = jacobian<double>(Vec2(0.5, 0.0), p);
    CHECK(J(0, 0) == doctest::Approx(-2.0).epsilon(1e-15));
    CHECK(J(0, 1) == 1.0);
    CHECK(J(1, 0) == 0.3);
    CHECK(J(1, 1) == 0.0);

    MapParams q(1.7, 0.25);
    std::mt19937_64 rng(99);
    auto unif = [&](double lo, double hi) {
        return lo + (hi - lo) * (rng() >> 11) * 0x1.0p-53;
    };
    for (int i = 0; i < 100; ++i) {
        Vec2 z(unif(-2, 2), unif(-2, 2));
        CHECK(jacobian<double>(z, q).determinant() == doctest::Approx(-0.25).epsilon(1e-13));
    }
}

TEST_CASE("jacobian agrees with central finite differences") {
    MapParams p(1.4, 0.3);
    Poly3 p1{}, p2{};
    p1.c[2][1] = 0.01;  // x^2 y
    p2.c[0][2] = -0.02; // y^2
    MapParams q(1.4, 0.3, 1.0, PerturbationSpec{p1, p2, 5.0});
    const double h = 1e-6;
    std::mt19937_64 rng(7);
    auto unif = [&](double lo, double hi) {
        return lo + (hi - lo) * (rng() >> 11) * 0x1.0p-53;
    };
    for (const MapParams* mp : {&p, &q}) {
        for (int i = 0; i < 50; ++i) {
            Vec2 z(unif(-2, 2), unif(-2, 2));
            Mat2 J = jacobian<double>(z, *mp);
            Mat2 Jfd;
            Jfd.col(0) = (apply<double>(z + Vec2(h, 0), *mp) - apply<double>(z - Vec2(h, 0), *mp)) / (2 * h);
            Jfd.col(1) = (apply<double>(z + Vec2(0, h), *mp) - apply<double>(z - Vec2(0, h), *mp)) / (2 * h);
            REQUIRE((J - Jfd).norm() / std::max(1.0, J.norm()) < 1e-5);
        }
    }
}

TEST_CASE("jacobian at the origin has eigenvalues +-sqrt(b)") {
    MapParams p(1.2, 0.36);
    Mat2 J = jacobian<double>(Vec2(0, 0), p);
    CHECK(J(0, 0) == 0.0);
    CHECK(J(0, 1) == 1.0);
    CHECK(J(1, 0) == 0.36);
    double tr = J.trace(), det = J.determinant();
    double sq = std::sqrt(tr * tr - 4 * det);
    CHECK((tr + sq) / 2 == doctest::Approx(0.6).epsilon(1e-14));
    CHECK((tr - sq) / 2 == doctest::Approx(-0.6).epsilon(1e-14));
}

TEST_CASE("fixed points: eigenvalue product and the near-2 unstable eigenvalue") {
    MapParams p(1.99, 1e-4);
    FixedPointData fp = saddle_fixed_point(p);
    CHECK(std::abs(fp.lambda_u + 2.0) < 0.05);

    for (double a : {0.9, 1.2, 1.4, 1.8, 1.99}) {
        for (double b : {0.05, 0.3, 0.6}) {
            MapParams q(a, b);
            for (const auto& f : fixed_points(q)) {
                CHECK(std::abs(f.lambda_u * f.lambda_s + q.b) < 1e-10);
                CHECK((apply<double>(f.location, q) - f.location).norm() < 1e-12);
                // Eigenvector residual.
                Mat2 J = jacobian<double>(f.location, q);
                CHECK((J * f.ev_u - f.lambda_u * f.ev_u).norm() < 1e-9);
                CHECK((J * f.ev_s - f.lambda_s * f.ev_s).norm() < 1e-9);
            }
        }
    }
}

TEST_CASE("derivative_product: constant-Jacobian growth rate at a = 0") {
    // At a = 0 the Jacobian is a constant matrix with spectral radius sqrt(b);
    // seeding along its eigenvector gives exactly linear log-norm growth.
    MapParams p(1e-12, 0.49);
    Vec2 z0(0, 0);
    OrbitBuffer orb = iterate_orbit(z0, p, 40);
    Vec2 v0 = Vec2(1.0, std::sqrt(0.49)).normalized();
    auto w = derivative_product(orb, v0);
    double slope = std::log(std::sqrt(0.49));
    for (int j = 1; j <= 40; ++j)
        CHECK(w[j].log_norm == doctest::Approx(j * slope).epsilon(1e-6));
}

TEST_CASE("derivative_product: 4^j growth on the a=2, b=0 axis orbit") {
    MapParams p(2.0, 0.0);
    OrbitBuffer orb = iterate_orbit(Vec2(1, 0), p, 60);
    auto w = derivative_product(orb, Vec2(1, 0));
    for (int j = 1; j <= 60; ++j)
        CHECK(w[j].log_norm == doctest::Approx(j * std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("perturbation validator enforces the C3 budget") {
    Poly3 small{}, big{};
    small.c[1][1] = 1e-4;  // xy
    big.c[3][0] = 1.0;     // x^3: third derivative alone is 6
    CHECK_NOTHROW(MapParams(1.4, 0.3, 1.0, PerturbationSpec{small, Poly3{}, 10.0}));
    CHECK_THROWS_AS(MapParams(1.4, 0.3, 1.0, PerturbationSpec{big, Poly3{}, 1.0}),
                    std::invalid_argument);
    // The same big coefficient passes with a budget that covers it.
    CHECK_NOTHROW(MapParams(1.4, 0.3, 1.0, PerturbationSpec{big, Poly3{}, 200.0}));
}

TEST_CASE("c3 bound matches sampled finite-difference derivatives") {
    Poly3 p1{};
    p1.c[2][1] = 0.3;  // x^2 y
    p1.c[1][0] = -0.2;
    PerturbationSpec ps{p1, Poly3{}, 1.0};
    double bound = ps.c3_bound(2.0);
    // Sample |d^3/dx^2 dy| = |0.3 * 2| and friends on the box.
    double measured = 0;
    for (double x : {-2.0, -1.0, 0.0, 1.0, 2.0})
        for (double y : {-2.0, 0.0, 2.0}) {
            measured = std::max(measured, std::abs(p1.eval(x, y)));
            measured = std::max(measured, std::abs(p1.dx().eval(x, y)));
            measured = std::max(measured, std::abs(p1.dx().dx().dy().eval(x, y)));
        }
    CHECK(bound >= measured);
}

TEST_CASE("parameter validation rejects out-of-range a, b, t") {
    CHECK_THROWS_AS(MapParams(-0.5, 0.3), std::invalid_argument);
    CHECK_THROWS_AS(MapParams(2.5, 0.3), std::invalid_argument);
    CHECK_THROWS_AS(MapParams(1.4, 1.2), std::invalid_argument);
    CHECK_THROWS_AS(MapParams(1.4, 0.3, -1.0), std::invalid_argument);
}

TEST_CASE("orbit divergence is flagged") {
    MapParams p(1.4, 0.3);
    OrbitBuffer orb = iterate_orbit(Vec2(5, 5), p, 100);
    CHECK(orb.diverged);
    CHECK(orb.points.size() < 100);
}

TEST_CASE("apply_inverse requires b != 0") {
    MapParams p(1.4, 0.0);
    CHECK_THROWS_AS(apply_inverse(Vec2(0.5, 0.0), p), std::domain_error);
}

TEST_CASE("long-double instantiation agrees with double at short horizons") {
    MapParams p(1.9, 0.2);
    PointT<long double> zl(0.1L, 0.05L);
    Vec2 zd(0.1, 0.05);
    for (int k = 0; k < 12; ++k) {
        zl = apply<long double>(zl, p);
        zd = apply<double>(zd, p);
    }
    CHECK(std::abs(static_cast<double>(zl.x()) - zd.x()) < 1e-9);
    CHECK(std::abs(static_cast<double>(zl.y()) - zd.y()) < 1e-9);
}
