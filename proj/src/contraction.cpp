#include "henon/contraction.hpp"

#include <algorithm>
#include <cmath>

namespace henon::contraction {

namespace {

struct ProductScan {
    std::vector<Mat2> jac;      // J at orbit points 0..n-1
    std::vector<double> logdet; // cumulative log|det| after nu steps
};

ProductScan scan_orbit(const Vec2& z, const MapParams& p, int n) {
    OrbitBuffer orb = iterate_orbit(z, p, n);
    if (static_cast<int>(orb.points.size()) < n + 1)
        throw std::runtime_error("contractive_direction: orbit escaped before n");
    ProductScan ps;
    ps.jac.reserve(n);
    ps.logdet.assign(n + 1, 0.0);
    for (int k = 0; k < n; ++k) {
        Mat2 J = jacobian<double>(orb.points[k], p);
        ps.jac.push_back(J);
        ps.logdet[k + 1] = ps.logdet[k] + std::log(std::abs(J.determinant()));
    }
    return ps;
}

// One power-iteration sweep of M^T M in log-scaled form.
LogVec sweep(const ProductScan& ps, const LogVec& v) {
    LogVec w = v;
    for (const Mat2& J : ps.jac) w = w.advanced(J);
    for (auto it = ps.jac.rbegin(); it != ps.jac.rend(); ++it)
        w = w.advanced(it->transpose());
    return w;
}

}  // namespace

ContractiveDirection contractive_direction(const Vec2& z, const MapParams& p, int n,
                                           double min_gap) {
    if (n < 1) throw std::invalid_argument("contractive_direction: n >= 1 required");
    ProductScan ps = scan_orbit(z, p, n);

    // Dominant right singular vector of M = J_{n-1}...J_0 via power iteration
    // on M^T M; the gap makes a few sweeps plenty.
    LogVec v = LogVec::from(Vec2(1.0, 0.0));
    LogVec v2 = LogVec::from(Vec2(0.0, 1.0));
    LogVec s1 = sweep(ps, v), s2 = sweep(ps, v2);
    v = s1.log_norm >= s2.log_norm ? s1 : s2;
    for (int it = 0; it < 6; ++it) v = sweep(ps, v);

    Vec2 v1 = v.dir;
    LogVec fwd = LogVec::from(v1);
    for (const Mat2& J : ps.jac) fwd = fwd.advanced(J);
    double log_sigma1 = fwd.log_norm;
    double log_sigma2 = ps.logdet[n] - log_sigma1;
    if (log_sigma1 - log_sigma2 < std::log(min_gap))
        throw std::domain_error("contractive_direction: singular value gap below threshold");

    ContractiveDirection cd;
    cd.base = z;
    cd.order = n;
    Vec2 e(-v1.y(), v1.x());
    if (e.y() < 0 || (e.y() == 0 && e.x() < 0)) e = -e;
    cd.direction = e;
    Vec2 f = v1;
    if (f.y() < 0 || (f.y() == 0 && f.x() < 0)) f = -f;
    cd.expanding_direction = f;
    cd.contraction_log = log_sigma2;
    cd.expansion_log = log_sigma1;
    cd.logdet = ps.logdet[n];
    return cd;
}

double contracted_log_norm(const Vec2& z, const MapParams& p, int n, int mu,
                           double min_gap) {
    if (mu < 0 || mu > n) throw std::invalid_argument("contracted_log_norm: need 0 <= mu <= n");
    ContractiveDirection cd = contractive_direction(z, p, n, min_gap);
    if (mu == 0) return 0.0;
    OrbitBuffer orb = iterate_orbit(z, p, mu);
    LogVec w = LogVec::from(cd.direction);
    for (int k = 0; k < mu; ++k) w = w.advanced(jacobian<double>(orb.points[k], p));
    return w.log_norm;
}

std::vector<double> operator_log_norms(const Vec2& z, const MapParams& p, int n) {
    ProductScan ps = scan_orbit(z, p, n);
    std::vector<double> out(n + 1, 0.0);
    for (int nu = 1; nu <= n; ++nu) {
        ProductScan sub;
        sub.jac.assign(ps.jac.begin(), ps.jac.begin() + nu);
        LogVec v = LogVec::from(Vec2(1.0, 0.0));
        LogVec v2 = LogVec::from(Vec2(0.0, 1.0));
        LogVec s1 = sweep(sub, v), s2 = sweep(sub, v2);
        v = s1.log_norm >= s2.log_norm ? s1 : s2;
        for (int it = 0; it < 4; ++it) v = sweep(sub, v);
        LogVec fwd = LogVec::from(v.dir);
        for (const Mat2& J : sub.jac) fwd = fwd.advanced(J);
        out[nu] = fwd.log_norm;
    }
    return out;
}

ExpansionCheck expansion_check(const Vec2& zeta0, const Vec2& u0, const MapParams& p,
                               int n, double kappa) {
    OrbitBuffer orb = iterate_orbit(zeta0, p, n);
    ExpansionCheck chk;
    chk.worst_margin = std::numeric_limits<double>::infinity();
    if (static_cast<int>(orb.points.size()) < n + 1) {
        chk.passed = false;
        chk.worst_margin = -std::numeric_limits<double>::infinity();
        return chk;
    }
    double logk = std::log(kappa);
    LogVec w = LogVec::from(u0);
    for (int nu = 1; nu <= n; ++nu) {
        w = w.advanced(jacobian<double>(orb.points[nu - 1], p));
        double margin = w.log_norm - nu * logk;
        if (margin < chk.worst_margin) {
            chk.worst_margin = margin;
            chk.argmin = nu;
        }
    }
    chk.passed = chk.worst_margin >= 0;
    return chk;
}

HorizontalExpansionReport horizontal_expansion_property(const Vec2& zeta0,
                                                        const MapParams& p, int n,
                                                        int n_samples) {
    std::vector<double> opn = operator_log_norms(zeta0, p, n);
    OrbitBuffer orb = iterate_orbit(zeta0, p, n);
    HorizontalExpansionReport rep;
    rep.min_ratio.assign(n + 1, std::numeric_limits<double>::infinity());
    rep.min_ratio[0] = 1.0;
    std::vector<LogVec> ws;
    for (int i = 0; i < n_samples; ++i) {
        double slope = -0.1 + 0.2 * i / (n_samples - 1);
        ws.push_back(LogVec::from(Vec2(1.0, slope).normalized()));
    }
    for (int nu = 1; nu <= n; ++nu) {
        Mat2 J = jacobian<double>(orb.points[nu - 1], p);
        for (auto& w : ws) {
            w = w.advanced(J);
            rep.min_ratio[nu] = std::min(rep.min_ratio[nu], std::exp(w.log_norm - opn[nu]));
        }
    }
    rep.holds_half = true;
    for (int nu = 1; nu <= n; ++nu)
        if (rep.min_ratio[nu] < 0.5) rep.holds_half = false;
    return rep;
}

curves::PlanarCurve integrate_leaf(const Vec2& z0, const MapParams& p, int k,
                                   double span, const LeafConfig& cfg) {
    double h = cfg.step > 0 ? cfg.step : std::min(1e-3, std::sqrt(std::max(p.b, 1e-12)) / 10.0);
    auto field = [&](const Vec2& z, const Vec2& prev_dir, Vec2& out) {
        try {
            ContractiveDirection cd = contractive_direction(z, p, k, cfg.min_gap);
            out = cd.direction;
            if (out.dot(prev_dir) < 0) out = -out;
            return true;
        } catch (const std::exception&) {
            return false;
        }
    };
    auto half = [&](double dir_sign) {
        std::vector<Vec2> pts;
        Vec2 z = z0;
        Vec2 d0;
        if (!field(z, Vec2(0, dir_sign), d0)) return std::pair(pts, true);
        Vec2 prev = d0;
        double acc = 0;
        bool trunc = false;
        while (acc < span / 2) {
            Vec2 k1, k2, k3, k4;
            if (!field(z, prev, k1) || !field(z + 0.5 * h * k1, k1, k2) ||
                !field(z + 0.5 * h * k2, k2, k3) || !field(z + h * k3, k3, k4)) {
                trunc = true;
                break;
            }
            Vec2 step = (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4);
            z += step;
            prev = k1;
            acc += step.norm();
            if (escaped(z, cfg.r_escape)) {
                trunc = true;
                break;
            }
            pts.push_back(z);
        }
        return std::pair(pts, trunc);
    };
    auto [up, t_up] = half(+1.0);
    auto [down, t_down] = half(-1.0);
    std::reverse(down.begin(), down.end());
    curves::PlanarCurve leaf;
    leaf.h_max = h;
    for (const Vec2& z : down) leaf.push(z);
    leaf.push(z0);
    for (const Vec2& z : up) leaf.push(z);
    leaf.truncated = t_up || t_down;
    return leaf;
}

FoliationPatch build_foliation_patch(const Vec2& z1, const MapParams& p, int n,
                                     const PatchConfig& cfg) {
    ExpansionCheck gate = expansion_check(z1, Vec2(1, 0), p, n, cfg.kappa);
    if (!gate.passed)
        throw std::domain_error("build_foliation_patch: expansion check failed at z1");
    FoliationPatch patch;
    patch.center = z1;
    patch.order_k = std::max(1, n / 10);
    double halfw = std::pow(cfg.c, n);
    int leaves = cfg.leaves > 0 ? cfg.leaves : n + 1;
    double span = 2.2 * cfg.height;
    for (int i = 0; i < leaves; ++i) {
        double x = z1.x() - halfw + 2.0 * halfw * i / (leaves - 1);
        curves::PlanarCurve leaf =
            integrate_leaf(Vec2(x, z1.y()), p, patch.order_k, span, cfg.leaf);
        patch.leaves.push_back(std::move(leaf));
    }
    const auto& first = patch.leaves.front();
    const auto& last = patch.leaves.back();
    patch.quad = {first.pts.front(), first.pts.back(), last.pts.back(), last.pts.front()};
    return patch;
}

double min_leaf_separation(const FoliationPatch& patch) {
    double best = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i + 1 < patch.leaves.size(); ++i) {
        const auto& a = patch.leaves[i];
        const auto& b = patch.leaves[i + 1];
        for (size_t j = 0; j < a.size(); j += std::max<size_t>(1, a.size() / 64))
            best = std::min(best, curves::distance_to_curve(b, a.pts[j]));
    }
    return best;
}

}  // namespace henon::contraction
