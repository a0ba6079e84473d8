#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace henon {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

inline constexpr double kRescapeDefault = 10.0;

/// Bivariate polynomial of total degree <= 3, coefficients c[i][j] for x^i y^j.
struct Poly3 {
    std::array<std::array<double, 4>, 4> c{};

    template <class Scalar>
    Scalar eval(Scalar x, Scalar y) const {
        Scalar acc = Scalar(0);
        Scalar xi = Scalar(1);
        for (int i = 0; i <= 3; ++i) {
            Scalar yj = Scalar(1);
            for (int j = 0; i + j <= 3; ++j) {
                if (c[i][j] != 0.0) acc += Scalar(c[i][j]) * xi * yj;
                yj *= y;
            }
            xi *= x;
        }
        return acc;
    }

    Poly3 dx() const {
        Poly3 d;
        for (int i = 1; i <= 3; ++i)
            for (int j = 0; i + j <= 3; ++j) d.c[i - 1][j] = i * c[i][j];
        return d;
    }
    Poly3 dy() const {
        Poly3 d;
        for (int i = 0; i <= 3; ++i)
            for (int j = 1; i + j <= 3; ++j) d.c[i][j - 1] = j * c[i][j];
        return d;
    }

    /// Upper bound for sup |p| on [-r,r]^2 from coefficient magnitudes.
    double box_bound(double r) const {
        double s = 0;
        for (int i = 0; i <= 3; ++i)
            for (int j = 0; i + j <= 3; ++j)
                s += std::abs(c[i][j]) * std::pow(r, i + j);
        return s;
    }

    bool zero() const {
        for (auto& row : c)
            for (double v : row)
                if (v != 0.0) return false;
        return true;
    }
};

/// Smooth perturbation psi = (p1, p2) added on top of the base Henon map.
/// Admissible when the C^3 norm on the working box is at most K * b^t.
struct PerturbationSpec {
    Poly3 p1, p2;
    double K = 1.0;

    /// Bound for max over all derivatives of order <= 3 of both components
    /// on [-r,r]^2, by exact coefficient arithmetic.
    double c3_bound(double r = 2.0) const;
};

class MapParams {
public:
    double a = 1.4;
    double b = 0.3;
    double t = 1.0;
    std::optional<PerturbationSpec> perturbation;

    MapParams() = default;
    MapParams(double a_, double b_, double t_ = 1.0,
              std::optional<PerturbationSpec> psi = std::nullopt)
        : a(a_), b(b_), t(t_), perturbation(std::move(psi)) {
        validate();
    }

    bool perturbed() const { return perturbation && !(perturbation->p1.zero() && perturbation->p2.zero()); }

    /// Throws std::invalid_argument on parameter-range or C^3-bound violations.
    void validate() const;
};

template <class Scalar>
using PointT = Eigen::Matrix<Scalar, 2, 1>;

/// One application of the map. (1 - a x^2 + y, b x), plus psi when configured.
template <class Scalar>
PointT<Scalar> apply(const PointT<Scalar>& z, const MapParams& p) {
    PointT<Scalar> w(Scalar(1) - Scalar(p.a) * z.x() * z.x() + z.y(),
                     Scalar(p.b) * z.x());
    if (p.perturbed()) {
        w.x() += p.perturbation->p1.eval(z.x(), z.y());
        w.y() += p.perturbation->p2.eval(z.x(), z.y());
    }
    return w;
}

template <class Scalar>
Eigen::Matrix<Scalar, 2, 2> jacobian(const PointT<Scalar>& z, const MapParams& p) {
    Eigen::Matrix<Scalar, 2, 2> J;
    J(0, 0) = Scalar(-2) * Scalar(p.a) * z.x();
    J(0, 1) = Scalar(1);
    J(1, 0) = Scalar(p.b);
    J(1, 1) = Scalar(0);
    if (p.perturbed()) {
        const auto& ps = *p.perturbation;
        J(0, 0) += ps.p1.dx().eval(z.x(), z.y());
        J(0, 1) += ps.p1.dy().eval(z.x(), z.y());
        J(1, 0) += ps.p2.dx().eval(z.x(), z.y());
        J(1, 1) += ps.p2.dy().eval(z.x(), z.y());
    }
    return J;
}

/// Inverse map. Closed form for the pure Henon family (requires b != 0);
/// Newton refinement from that seed when a perturbation is present.
/// Throws std::domain_error when b == 0, std::runtime_error when Newton fails.
Vec2 apply_inverse(const Vec2& z, const MapParams& p);

inline bool escaped(const Vec2& z, double r_escape = kRescapeDefault) {
    return !std::isfinite(z.x()) || !std::isfinite(z.y()) ||
           std::abs(z.x()) > r_escape || std::abs(z.y()) > r_escape;
}

enum class FixedPointKind { saddle, sink, source };

struct FixedPointData {
    Vec2 location;
    double lambda_u = 0;  // |lambda_u| >= |lambda_s|
    double lambda_s = 0;
    Vec2 ev_u = Vec2::Zero();
    Vec2 ev_s = Vec2::Zero();
    FixedPointKind kind = FixedPointKind::saddle;
    bool first_quadrant = false;  // the paper's z-hat
};

/// Both fixed points, eigen-data of the Jacobian there. The first-quadrant
/// saddle (x>0, y>0 for b>0) is flagged. Throws if the quadratic in x has no
/// real roots (impossible for a>0, pure Henon).
std::vector<FixedPointData> fixed_points(const MapParams& p);

/// Convenience: the first-quadrant saddle z-hat.
FixedPointData saddle_fixed_point(const MapParams& p);

struct OrbitBuffer {
    std::vector<Vec2> points;  // points[k] = F^k(z0)
    MapParams params;
    bool diverged = false;     // left the escape box before the horizon
};

OrbitBuffer iterate_orbit(const Vec2& z0, const MapParams& p, int n,
                          double r_escape = kRescapeDefault);

/// Unit vector with the log of its accumulated norm; keeps products of
/// derivatives representable out to n in the hundreds of thousands.
struct LogVec {
    double log_norm = 0.0;
    Vec2 dir = Vec2(1, 0);

    LogVec() = default;
    LogVec(double ln, const Vec2& d) : log_norm(ln), dir(d) {}
    static LogVec from(const Vec2& v) {
        double n = v.norm();
        if (n == 0) return LogVec(-std::numeric_limits<double>::infinity(), Vec2(1, 0));
        return LogVec(std::log(n), v / n);
    }
    LogVec advanced(const Mat2& J) const {
        Vec2 w = J * dir;
        double n = w.norm();
        if (n == 0) return LogVec(-std::numeric_limits<double>::infinity(), Vec2(1, 0));
        return LogVec(log_norm + std::log(n), w / n);
    }
};

/// w_nu = DF^nu(points[0]) v0 for nu = 0..points.size()-1, in log scale.
std::vector<LogVec> derivative_product(const OrbitBuffer& orbit, const Vec2& v0);

}  // namespace henon
