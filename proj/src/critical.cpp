#include "henon/critical.hpp"

#include <algorithm>
#include <cmath>

namespace henon::critical {

namespace {

// Smoothed unit tangent at arclength u from a local quadratic fit.
Vec2 tangent_at(const curves::PlanarCurve& c, double u) {
    size_t i = c.segment_of(u);
    size_t a = i >= 3 ? i - 3 : 0;
    size_t b = std::min(i + 3, c.size() - 1);
    if (b - a < 2) {
        Vec2 d = c.pts[std::min(i + 1, c.size() - 1)] - c.pts[i];
        return d.normalized();
    }
    int m = static_cast<int>(b - a + 1);
    Eigen::MatrixXd A(m, 3);
    Eigen::VectorXd bx(m), by(m);
    for (int r = 0; r < m; ++r) {
        double w = c.s[a + r] - u;
        A(r, 0) = 1;
        A(r, 1) = w;
        A(r, 2) = w * w;
        bx(r) = c.pts[a + r].x();
        by(r) = c.pts[a + r].y();
    }
    Eigen::Matrix3d N = A.transpose() * A;
    Eigen::Vector3d cx = N.ldlt().solve(A.transpose() * bx);
    Eigen::Vector3d cy = N.ldlt().solve(A.transpose() * by);
    Vec2 t(cx(1), cy(1));
    double n = t.norm();
    return n > 0 ? Vec2(t / n) : Vec2(1, 0);
}

}  // namespace

CriticalPoint find_critical_point(const curves::PlanarCurve& wu, const MapParams& p,
                                  int n) {
    if (wu.size() < 8) throw std::invalid_argument("find_critical_point: curve too short");
    auto cross_sign = [&](double u) -> double {
        Vec2 t = tangent_at(wu, u);
        Vec2 z = wu.at(u);
        contraction::ContractiveDirection cd = contraction::contractive_direction(z, p, n);
        return t.x() * cd.direction.y() - t.y() * cd.direction.x();
    };

    // Coarse scan for sign changes of cross(tangent, e_n).
    const size_t stride = std::max<size_t>(1, wu.size() / 4096);
    std::vector<std::pair<double, double>> samples;
    for (size_t i = 0; i < wu.size(); i += stride) {
        double u = wu.s[i];
        try {
            samples.emplace_back(u, cross_sign(u));
        } catch (const std::exception&) {
            // e_n undefined here (escaping orbit or tiny gap); skip.
        }
    }
    struct Cand { double u; double x_abs; };
    std::vector<Cand> cands;
    for (size_t i = 0; i + 1 < samples.size(); ++i) {
        auto [u0, g0] = samples[i];
        auto [u1, g1] = samples[i + 1];
        if (g0 == 0 || g1 == 0 || (g0 > 0) == (g1 > 0)) continue;
        for (int it = 0; it < 80; ++it) {
            double um = 0.5 * (u0 + u1);
            double gm = cross_sign(um);
            if ((gm > 0) == (g0 > 0)) {
                u0 = um;
                g0 = gm;
            } else {
                u1 = um;
                g1 = gm;
            }
            if (u1 - u0 < 1e-15 * std::max(1.0, wu.length())) break;
        }
        double u = 0.5 * (u0 + u1);
        cands.push_back({u, std::abs(wu.at(u).x())});
    }
    if (cands.empty())
        throw std::domain_error("find_critical_point: no tangency sign change on this segment");
    auto best = std::min_element(cands.begin(), cands.end(),
                                 [](const Cand& a, const Cand& b) { return a.x_abs < b.x_abs; });

    CriticalPoint cp;
    cp.arclength = best->u;
    cp.z0 = wu.at(best->u);
    cp.z1 = apply<double>(cp.z0, p);
    cp.order_n = n;
    Vec2 t = tangent_at(wu, best->u);
    contraction::ContractiveDirection cd = contraction::contractive_direction(cp.z0, p, n);
    double dot = std::abs(t.dot(cd.direction));
    cp.residual_angle = std::acos(std::clamp(dot, 0.0, 1.0));
    return cp;
}

CEReport collet_eckmann_check(const CriticalPoint& cp, const MapParams& p, int n,
                              double kappa) {
    OrbitBuffer orb = iterate_orbit(cp.z1, p, n);
    CEReport rep;
    if (static_cast<int>(orb.points.size()) < n + 1) {
        rep.passed = false;
        rep.min_margin = -std::numeric_limits<double>::infinity();
        return rep;
    }
    std::vector<LogVec> w = derivative_product(orb, Vec2(1, 0));
    rep.log_norms.resize(w.size());
    rep.min_margin = std::numeric_limits<double>::infinity();
    double logk = std::log(kappa);
    for (size_t j = 0; j < w.size(); ++j) {
        rep.log_norms[j] = w[j].log_norm;
        if (j == 0) continue;
        double margin = w[j].log_norm - logk * static_cast<double>(j);
        if (margin < rep.min_margin) {
            rep.min_margin = margin;
            rep.argmin = static_cast<int>(j);
        }
    }
    rep.passed = rep.min_margin >= 0;
    return rep;
}

BoundPeriod2D bound_period_2d(const Vec2& zeta0, const CriticalPoint& cp,
                              const MapParams& p, double beta, int horizon) {
    Vec2 u = zeta0, v = cp.z0;
    int pbest = 0;
    for (int j = 1; j <= horizon; ++j) {
        u = apply<double>(u, p);
        v = apply<double>(v, p);
        if (escaped(u) || escaped(v)) break;
        if ((u - v).norm() > std::exp(-beta * j)) break;
        pbest = j;
    }
    return {pbest, pbest == horizon};
}

SplittingTrace splitting_run(const CriticalPoint& cp, const MapParams& p, int n,
                             const std::vector<CriticalPoint>& critical_set,
                             const SplitConfig& cfg) {
    SplittingTrace tr;
    tr.steps.reserve(n + 1);

    struct Fold {
        int expires;
    };
    std::vector<Fold> stack;

    Vec2 z = cp.z1;
    LogVec w = LogVec::from(Vec2(1, 0));
    LogVec wstar = w;

    for (int nu = 0; nu <= n; ++nu) {
        while (!stack.empty() && nu > stack.back().expires) {
            stack.pop_back();
            if (stack.empty()) wstar = w;  // re-derive from the full product
        }
        SplitStep st;
        st.nu = nu;
        st.z = z;
        st.w = w;
        st.is_free = stack.empty();
        if (st.is_free) wstar = w;
        st.w_star = wstar;

        bool is_return = st.is_free && nu >= 1 && std::abs(z.x()) < cfg.delta;
        st.is_return = is_return;
        if (is_return) {
            // Binding point: minimal horizontal distance among candidates in
            // roughly horizontal position.
            int best = -1;
            double best_dx = std::numeric_limits<double>::infinity();
            for (size_t i = 0; i < critical_set.size(); ++i) {
                double dx = std::abs(z.x() - critical_set[i].z0.x());
                double dy = std::abs(z.y() - critical_set[i].z0.y());
                if (dy > cfg.vertical_fraction * std::max(dx, 1e-300)) continue;
                if (dx < best_dx) {
                    best_dx = dx;
                    best = static_cast<int>(i);
                }
            }
            if (best < 0) {
                tr.unbound_returns.push_back(nu);
                tr.ba_violations.push_back(nu);
            } else {
                const CriticalPoint& bp = critical_set[best];
                st.binding = best;
                // dist_h surrogate: the midpoint of the paper's comparability
                // band around the Euclidean distance to the binding point.
                st.d = 4.0 * (z - bp.z0).norm();
                if (st.d < std::exp(-cfg.alpha * nu)) tr.ba_violations.push_back(nu);
                BoundPeriod2D bpd = bound_period_2d(z, bp, p, cfg.beta, cfg.bound_horizon);
                st.bound_period = bpd.p;
                if (bpd.p >= 1) {
                    stack.push_back({nu + bpd.p});
                    // Fold start: re-seed the splitting vector horizontally at
                    // the current magnitude.
                    wstar = LogVec(w.log_norm, Vec2(1, 0));
                    st.is_free = false;
                }
            }
        }
        tr.steps.push_back(st);
        if (nu == n) break;
        Mat2 J = jacobian<double>(z, p);
        z = apply<double>(z, p);
        if (escaped(z)) break;
        w = w.advanced(J);
        wstar = wstar.advanced(J);
    }
    return tr;
}

std::vector<double> leaf_vertical_distances(const curves::PlanarCurve& wu,
                                            const CriticalPoint& cp, double exclusion) {
    const double x0 = cp.z0.x();
    const double y0 = cp.z0.y();
    std::vector<double> dists;
    for (size_t i = 0; i + 1 < wu.size(); ++i) {
        double xa = wu.pts[i].x(), xb = wu.pts[i + 1].x();
        if ((xa - x0) * (xb - x0) > 0) continue;
        if (xa == xb) continue;
        double t = (x0 - xa) / (xb - xa);
        if (t < 0 || t > 1) continue;
        double y = wu.pts[i].y() + t * (wu.pts[i + 1].y() - wu.pts[i].y());
        double d = std::abs(y - y0);
        if (d > exclusion) dists.push_back(d);
    }
    std::sort(dists.begin(), dists.end());
    // Merge crossings that belong to the same leaf (polyline jitter).
    std::vector<double> out;
    for (double d : dists)
        if (out.empty() || d - out.back() > exclusion) out.push_back(d);
    return out;
}

CriticalPoint capture_nearby_critical(const curves::PlanarCurve& wu,
                                      const CriticalPoint& cp, int j,
                                      const MapParams& p, const CaptureConfig& cfg) {
    FixedPointData zhat = saddle_fixed_point(p);
    Mat2 J = jacobian<double>(zhat.location, p);
    double dhat = std::abs(J.determinant());
    double q = dhat / (2.0 * p.a);
    double wlo = cfg.c_lo * std::pow(q, j + 1);
    double whi = cfg.c_hi * std::pow(q, j);

    const double x0 = cp.z0.x();
    const double y0 = cp.z0.y();
    // Locate the crossing segment whose vertical offset falls in the window.
    double best_d = -1;
    size_t best_i = 0;
    double best_t = 0;
    for (size_t i = 0; i + 1 < wu.size(); ++i) {
        double xa = wu.pts[i].x(), xb = wu.pts[i + 1].x();
        if ((xa - x0) * (xb - x0) > 0 || xa == xb) continue;
        double t = (x0 - xa) / (xb - xa);
        if (t < 0 || t > 1) continue;
        double y = wu.pts[i].y() + t * (wu.pts[i + 1].y() - wu.pts[i].y());
        double d = std::abs(y - y0);
        if (d < wlo || d > whi) continue;
        if (best_d < 0 || d < best_d) {
            best_d = d;
            best_i = i;
            best_t = t;
        }
    }
    if (best_d < 0)
        throw std::domain_error(
            "capture_nearby_critical: no leaf in the spacing window; trace more generations");

    // Hand the local leaf piece to the tangency refiner.
    double u_mid = wu.s[best_i] + best_t * (wu.s[best_i + 1] - wu.s[best_i]);
    double u_lo = std::max(0.0, u_mid - cfg.local_span / 2);
    double u_hi = std::min(wu.length(), u_mid + cfg.local_span / 2);
    curves::PlanarCurve piece;
    piece.h_max = wu.h_max;
    piece.theta_max = wu.theta_max;
    piece.push(wu.at(u_lo));
    for (size_t i = wu.segment_of(u_lo) + 1; i <= wu.segment_of(u_hi); ++i)
        piece.push(wu.pts[i]);
    piece.push(wu.at(u_hi));

    CriticalPoint cap = find_critical_point(piece, p, cp.order_n);
    cap.generation = j;
    return cap;
}

}  // namespace henon::critical
