#include "henon/map.hpp"

namespace henon {

double PerturbationSpec::c3_bound(double r) const {
    // Walk every derivative multi-index up to order 3 of both components.
    double worst = 0;
    for (const Poly3* comp : {&p1, &p2}) {
        std::vector<Poly3> level{*comp};
        for (int order = 0; order <= 3; ++order) {
            for (const Poly3& q : level) worst = std::max(worst, q.box_bound(r));
            std::vector<Poly3> next;
            for (const Poly3& q : level) {
                next.push_back(q.dx());
                next.push_back(q.dy());
            }
            level = std::move(next);
        }
    }
    return worst;
}

void MapParams::validate() const {
    if (!(a > 0.0 && a < 2.0 + 1e-15))
        throw std::invalid_argument("MapParams: a must lie in (0,2], got " + std::to_string(a));
    if (!(b >= 0.0 && b < 1.0))
        throw std::invalid_argument("MapParams: b must lie in [0,1), got " + std::to_string(b));
    if (!(t > 0.0))
        throw std::invalid_argument("MapParams: t must be positive");
    if (perturbation) {
        double bound = perturbation->c3_bound();
        double budget = perturbation->K * std::pow(b, t);
        if (bound > budget)
            throw std::invalid_argument(
                "MapParams: perturbation C3 norm " + std::to_string(bound) +
                " exceeds K*b^t = " + std::to_string(budget));
    }
}

Vec2 apply_inverse(const Vec2& z, const MapParams& p) {
    if (p.b == 0.0)
        throw std::domain_error("apply_inverse: map is not invertible at b = 0");
    double x = z.y() / p.b;
    Vec2 w(x, z.x() - 1.0 + p.a * x * x);
    if (!p.perturbed()) return w;
    // Newton on F(w) = z from the pure-Henon inverse.
    for (int it = 0; it < 60; ++it) {
        Vec2 r = apply<double>(w, p) - z;
        if (r.norm() < 1e-13) return w;
        Mat2 J = jacobian<double>(w, p);
        double det = J.determinant();
        if (std::abs(det) < 1e-300)
            throw std::runtime_error("apply_inverse: singular Jacobian in Newton");
        w -= J.inverse() * r;
    }
    if ((apply<double>(w, p) - z).norm() < 1e-9) return w;
    throw std::runtime_error("apply_inverse: Newton failed to converge");
}

std::vector<FixedPointData> fixed_points(const MapParams& p) {
    // Pure-Henon roots of a x^2 + (1-b) x - 1 = 0, lifted to (x, b x);
    // Newton polish handles the perturbed family.
    double disc = (1.0 - p.b) * (1.0 - p.b) + 4.0 * p.a;
    if (disc < 0) throw std::domain_error("fixed_points: negative discriminant");
    double sq = std::sqrt(disc);
    std::vector<FixedPointData> out;
    for (double sign : {+1.0, -1.0}) {
        double x = (-(1.0 - p.b) + sign * sq) / (2.0 * p.a);
        Vec2 z(x, p.b * x);
        if (p.perturbed()) {
            for (int it = 0; it < 50; ++it) {
                Vec2 r = apply<double>(z, p) - z;
                if (r.norm() < 1e-14) break;
                Mat2 M = jacobian<double>(z, p) - Mat2::Identity();
                z -= M.inverse() * r;
            }
        }
        FixedPointData fp;
        fp.location = z;
        Mat2 J = jacobian<double>(z, p);
        double tr = J.trace(), det = J.determinant();
        double d2 = tr * tr - 4.0 * det;
        if (d2 >= 0) {
            double s = std::sqrt(d2);
            double l1 = (tr + s) / 2.0, l2 = (tr - s) / 2.0;
            if (std::abs(l1) < std::abs(l2)) std::swap(l1, l2);
            fp.lambda_u = l1;
            fp.lambda_s = l2;
            auto eigvec = [&](double lam) {
                // (J - lam I) v = 0; pick the better-conditioned row.
                Vec2 r0(J(0, 0) - lam, J(0, 1));
                Vec2 r1(J(1, 0), J(1, 1) - lam);
                Vec2 r = r0.norm() > r1.norm() ? r0 : r1;
                Vec2 v(-r.y(), r.x());
                return v.normalized();
            };
            fp.ev_u = eigvec(l1);
            fp.ev_s = eigvec(l2);
            if (std::abs(l1) > 1.0 && std::abs(l2) < 1.0)
                fp.kind = FixedPointKind::saddle;
            else if (std::abs(l1) < 1.0)
                fp.kind = FixedPointKind::sink;
            else
                fp.kind = FixedPointKind::source;
        } else {
            // Complex pair; kind from modulus |lambda| = sqrt(det).
            double mod = std::sqrt(std::abs(det));
            fp.lambda_u = fp.lambda_s = mod;
            fp.kind = mod < 1.0 ? FixedPointKind::sink : FixedPointKind::source;
        }
        fp.first_quadrant = (z.x() > 0 && (p.b == 0.0 ? true : z.y() > 0));
        out.push_back(fp);
    }
    return out;
}

FixedPointData saddle_fixed_point(const MapParams& p) {
    for (const auto& fp : fixed_points(p))
        if (fp.first_quadrant) return fp;
    throw std::domain_error("saddle_fixed_point: no first-quadrant fixed point");
}

OrbitBuffer iterate_orbit(const Vec2& z0, const MapParams& p, int n, double r_escape) {
    OrbitBuffer orb;
    orb.params = p;
    orb.points.reserve(n + 1);
    Vec2 z = z0;
    orb.points.push_back(z);
    for (int k = 0; k < n; ++k) {
        z = apply<double>(z, p);
        if (escaped(z, r_escape)) {
            orb.diverged = true;
            break;
        }
        orb.points.push_back(z);
    }
    return orb;
}

std::vector<LogVec> derivative_product(const OrbitBuffer& orbit, const Vec2& v0) {
    std::vector<LogVec> out;
    out.reserve(orbit.points.size());
    LogVec w = LogVec::from(v0);
    out.push_back(w);
    for (size_t k = 0; k + 1 < orbit.points.size(); ++k) {
        w = w.advanced(jacobian<double>(orbit.points[k], orbit.params));
        out.push_back(w);
    }
    return out;
}

}  // namespace henon
