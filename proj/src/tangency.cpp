#include "henon/tangency.hpp"

#include "henon/contraction.hpp"
#include "henon/util.hpp"

#include <algorithm>
#include <cmath>

namespace henon::tangency {

namespace {

bool in_rect(const Vec2& z, const TangencyLocality& loc) {
    return z.x() >= loc.x_lo && z.x() <= loc.x_hi && z.y() >= loc.y_lo && z.y() <= loc.y_hi;
}

// Local parametric quadratic fit around vertex i: position, first and second
// derivative with respect to arclength.
struct LocalJet {
    Vec2 pos, d1, d2;
};

LocalJet local_jet(const curves::PlanarCurve& c, size_t i, int half_window = 4) {
    size_t a = i >= static_cast<size_t>(half_window) ? i - half_window : 0;
    size_t b = std::min(i + half_window, c.size() - 1);
    int m = static_cast<int>(b - a + 1);
    Eigen::MatrixXd A(m, 3);
    Eigen::VectorXd bx(m), by(m);
    for (int r = 0; r < m; ++r) {
        double w = c.s[a + r] - c.s[i];
        A(r, 0) = 1;
        A(r, 1) = w;
        A(r, 2) = w * w;
        bx(r) = c.pts[a + r].x();
        by(r) = c.pts[a + r].y();
    }
    Eigen::Matrix3d N = A.transpose() * A;
    Eigen::Vector3d cx = N.ldlt().solve(A.transpose() * bx);
    Eigen::Vector3d cy = N.ldlt().solve(A.transpose() * by);
    return {Vec2(cx(0), cy(0)), Vec2(cx(1), cy(1)), Vec2(2 * cx(2), 2 * cy(2))};
}

// First intersection of the ray apex + t*dir (both signs) with the polyline.
bool ray_hit(const curves::PlanarCurve& leg, const Vec2& apex, const Vec2& dir, Vec2& hit,
             double& t_out) {
    double best = std::numeric_limits<double>::infinity();
    bool found = false;
    for (size_t i = 0; i + 1 < leg.size(); ++i) {
        Vec2 q = leg.pts[i], d = leg.pts[i + 1] - q;
        double denom = dir.x() * d.y() - dir.y() * d.x();
        if (denom == 0) continue;
        Vec2 rhs = q - apex;
        double t = (rhs.x() * d.y() - rhs.y() * d.x()) / denom;
        double w = (rhs.x() * dir.y() - rhs.y() * dir.x()) / denom;
        if (w < 0 || w > 1) continue;
        if (std::abs(t) < std::abs(best)) {
            best = t;
            hit = apex + t * dir;
            found = true;
        }
    }
    t_out = best;
    return found;
}

struct Curves {
    curves::PlanarCurve wu;
    curves::PlanarCurve leg;
};

Curves trace_pair(const MapParams& p, const TangencyLocality& loc) {
    FixedPointData fp = saddle_fixed_point(p);
    curves::TraceConfig tc;
    tc.h_max = loc.h_max;
    tc.theta_max = loc.theta_max;
    Curves cv;
    cv.wu = curves::trace_unstable(fp, p, loc.wu_generations, tc);
    cv.leg = curves::trace_stable_leg(fp, p, loc.ws_arclength, tc).curve;
    return cv;
}

GapResult gap_from_curves(const Curves& cv, const TangencyLocality& loc) {
    // The leg restricted to the locality.
    curves::PlanarCurve leg_loc;
    for (const Vec2& z : cv.leg.pts)
        if (in_rect(z, loc)) leg_loc.push(z);
    if (leg_loc.size() < 2)
        throw std::domain_error("signed_gap: stable leg missing from locality");

    Vec2 ldir = (leg_loc.pts.back() - leg_loc.pts.front()).normalized();
    Vec2 lnormal(-ldir.y(), ldir.x());

    GapResult best;
    const auto& wu = cv.wu;
    for (size_t i = 1; i + 1 < wu.size(); ++i) {
        if (!in_rect(wu.pts[i], loc)) continue;
        if (!in_rect(wu.pts[i - 1], loc) || !in_rect(wu.pts[i + 1], loc)) continue;
        double f0 = wu.pts[i - 1].dot(lnormal);
        double f1 = wu.pts[i].dot(lnormal);
        double f2 = wu.pts[i + 1].dot(lnormal);
        bool is_max = f1 >= f0 && f1 >= f2;
        bool is_min = f1 <= f0 && f1 <= f2;
        if (!is_max && !is_min) continue;
        LocalJet jet = local_jet(wu, i);
        double g1 = jet.d1.dot(lnormal), g2 = jet.d2.dot(lnormal);
        if (g2 == 0) continue;
        double s_off = std::clamp(-g1 / g2, -2 * wu.h_max, 2 * wu.h_max);
        // Re-fit the jet at the refined apex.
        Vec2 apex = jet.pos + s_off * jet.d1 + 0.5 * s_off * s_off * jet.d2;
        Vec2 d1 = jet.d1 + s_off * jet.d2;
        Vec2 opening = jet.d2 - jet.d2.dot(d1.normalized()) * d1.normalized();
        double on = opening.norm();
        if (on < 1e-14) continue;
        opening /= on;
        Vec2 hit;
        double t;
        if (!ray_hit(leg_loc, apex, opening, hit, t)) continue;
        double gap = t;  // positive: the leg lies on the opening side (two cuts)
        if (!best.found || gap > best.gap) {
            best.found = true;
            best.gap = gap;
            best.apex = apex;
            best.leg_point = hit;
            best.opening = opening;
            // Leg slope near the hit.
            double d = std::numeric_limits<double>::infinity();
            for (size_t k = 0; k + 1 < leg_loc.size(); ++k) {
                double dk = (leg_loc.pts[k] - hit).norm();
                if (dk < d) {
                    d = dk;
                    Vec2 seg = leg_loc.pts[k + 1] - leg_loc.pts[k];
                    best.leg_slope = seg.x() != 0
                                         ? std::abs(seg.y() / seg.x())
                                         : std::numeric_limits<double>::infinity();
                }
            }
            double u = wu.s[i] + s_off;
            best.apex_curvature = curves::curvature(wu, u);
        }
    }
    if (!best.found)
        throw std::domain_error("signed_gap: no fold/leg pairing in locality");
    return best;
}

}  // namespace

GapResult signed_gap(double a, double b, const TangencyLocality& loc) {
    MapParams p(a, b);
    Curves cv = trace_pair(p, loc);
    return gap_from_curves(cv, loc);
}

double pushforward_curvature(const Vec2& z0, const Vec2& tangent0, double curvature0,
                             const MapParams& p, int N) {
    // v' = J v, u' = J u + H(v, v); common rescaling tracked in log_c.
    Vec2 z = z0;
    Vec2 v = tangent0.normalized();
    Vec2 n(-v.y(), v.x());
    Vec2 u = curvature0 * n;  // gamma'' for an arclength parametrization
    double log_c = 0;
    for (int k = 0; k < N; ++k) {
        Mat2 J = jacobian<double>(z, p);
        Vec2 hvv(-2.0 * p.a * v.x() * v.x(), 0.0);
        if (p.perturbed()) {
            const auto& ps = *p.perturbation;
            auto quad = [&](const Poly3& q) {
                double xx = q.dx().dx().eval(z.x(), z.y());
                double xy = q.dx().dy().eval(z.x(), z.y());
                double yy = q.dy().dy().eval(z.x(), z.y());
                return xx * v.x() * v.x() + 2 * xy * v.x() * v.y() + yy * v.y() * v.y();
            };
            hvv.x() += quad(ps.p1);
            hvv.y() += quad(ps.p2);
        }
        // The Hessian term enters at the *current* scale of v (v true = e^{log_c} v):
        // H(V,V) = e^{2 log_c} H(v,v); with U = e^{log_c} u the update is
        // u' = J u + e^{log_c} H(v,v).
        u = J * u + std::exp(log_c) * hvv;
        v = J * v;
        z = apply<double>(z, p);
        double nv = v.norm();
        if (nv == 0 || escaped(z, 1e6)) return 0;
        v /= nv;
        u /= nv;
        log_c += std::log(nv);
    }
    double cross = std::abs(v.x() * u.y() - v.y() * u.x());
    double speed3 = v.squaredNorm() * v.norm();  // = 1
    // kappa = |V x U| / |V|^3 with V = e^{log_c} v (unit v): extra e^{-log_c}.
    return cross / speed3 * std::exp(-log_c);
}

TangencyCertificate find_tangency_parameter(double a_lo, double a_hi, double b,
                                            const TangencyLocality& loc,
                                            const TangencySolveConfig& cfg) {
    auto gap_at = [&](double a) { return signed_gap(a, b, loc).gap; };
    double g_lo = gap_at(a_lo), g_hi = gap_at(a_hi);
    if ((g_lo > 0) == (g_hi > 0))
        throw std::domain_error("find_tangency_parameter: no sign change on the bracket");
    const double tol = cfg.gap_tol_rel * (loc.y_hi - loc.y_lo);
    double lo = a_lo, hi = a_hi, flo = g_lo, fhi = g_hi;
    for (int it = 0; it < cfg.max_bisect; ++it) {
        double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        double fm = gap_at(mid);
        if (std::abs(fm) < tol) {
            lo = hi = mid;
            flo = fhi = fm;
            break;
        }
        if ((fm > 0) == (flo > 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
            fhi = fm;
        }
        // The bracket must keep its sign change.
        if ((flo > 0) == (fhi > 0))
            throw std::runtime_error("find_tangency_parameter: bracket lost the sign change");
    }
    // Final secant polish.
    double a_star = lo == hi ? lo : (lo * fhi - hi * flo) / (fhi - flo);
    if (!(a_star >= a_lo && a_star <= a_hi)) a_star = 0.5 * (lo + hi);

    MapParams p(a_star, b);
    Curves cv = trace_pair(p, loc);
    GapResult g = gap_from_curves(cv, loc);

    TangencyCertificate cert;
    cert.a_star = a_star;
    cert.b = b;
    cert.point = g.apex;
    cert.leg_slope = g.leg_slope;

    // The critical point whose forward orbit produces this fold.
    curves::TraceConfig tc;
    tc.h_max = loc.h_max;
    curves::PlanarCurve wu_short =
        curves::trace_unstable(saddle_fixed_point(p), p, cfg.critical_generations, tc);
    critical::CriticalPoint cp =
        critical::find_critical_point(wu_short, p, cfg.critical_field_order);
    cert.z0 = cp.z0;

    Vec2 z = cp.z0;
    int N_best = -1;
    double d_best = std::numeric_limits<double>::infinity();
    for (int m = 1; m <= cfg.n_probe_max; ++m) {
        z = apply<double>(z, p);
        if (escaped(z)) break;
        double d = (z - g.apex).norm();
        if (d < d_best) {
            d_best = d;
            N_best = m;
        }
    }
    if (N_best < 0 || d_best > 0.05 * std::max(loc.x_hi - loc.x_lo, loc.y_hi - loc.y_lo))
        throw std::domain_error(
            "find_tangency_parameter: fold apex does not match the critical orbit");
    cert.N = N_best;

    OrbitBuffer orb1 = iterate_orbit(cp.z1, p, cert.N - 1);
    std::vector<LogVec> w = derivative_product(orb1, Vec2(1, 0));
    cert.log_W_N = w.back().log_norm;
    contraction::ContractiveDirection cd =
        contraction::contractive_direction(cp.z0, p, cert.N);
    cert.log_E_N = cd.contraction_log;

    double kappa0 = 0;
    {
        bool degen = false;
        kappa0 = curves::curvature(wu_short, cp.arclength, 0, &degen);
    }
    cert.measured_curvature = pushforward_curvature(cp.z0, cd.direction, kappa0, p, cert.N);
    cert.C1 = 2.0 * p.a * std::abs(cd.direction.normalized().x());
    cert.curvature_lower_bound =
        (cert.C1 / 2.0) * std::exp(cert.log_W_N - 2.0 * cert.log_E_N);
    cert.rho0 = std::exp(cert.log_E_N - cert.log_W_N);
    double C_slope = g.leg_slope * std::sqrt(b);
    cert.rho_slope = -(std::exp(cert.log_E_N - cert.log_W_N) / (2.0 * C_slope)) * std::sqrt(b);
    cert.quadratic_ok = cert.measured_curvature >= cert.curvature_lower_bound;

    double h = std::max(1e-9, 1e-6 * (a_hi - a_lo));
    cert.gap_derivative = (signed_gap(a_star + h, b, loc).gap -
                           signed_gap(a_star - h, b, loc).gap) /
                          (2 * h);
    if (!cert.quadratic_ok)
        throw std::domain_error(
            "find_tangency_parameter: contact fails the quadratic curvature bound");
    return cert;
}

WPrimeReport w_prime_bound_check(const curves::PlanarCurve& gamma, const MapParams& p,
                                 int N) {
    WPrimeReport rep;
    rep.bound = N * std::log(25.0);
    std::vector<LogVec> wv;
    std::vector<double> ss;
    for (size_t i = 0; i < gamma.size(); ++i) {
        OrbitBuffer orb = iterate_orbit(apply<double>(gamma.pts[i], p), p, N - 1);
        if (static_cast<int>(orb.points.size()) < N) continue;
        std::vector<LogVec> w = derivative_product(orb, Vec2(1, 0));
        wv.push_back(w.back());
        ss.push_back(gamma.s[i]);
        rep.log_w.push_back(w.back().log_norm);
    }
    rep.max_log_wprime = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i + 1 < wv.size(); ++i) {
        double ds = ss[i + 1] - ss[i];
        if (ds <= 0) continue;
        double lmax = std::max(wv[i].log_norm, wv[i + 1].log_norm);
        Vec2 diff = wv[i + 1].dir * std::exp(wv[i + 1].log_norm - lmax) -
                    wv[i].dir * std::exp(wv[i].log_norm - lmax);
        double lw = lmax + std::log(diff.norm() / ds);
        rep.log_wprime.push_back(lw);
        rep.max_log_wprime = std::max(rep.max_log_wprime, lw);
    }
    rep.passed = rep.max_log_wprime <= rep.bound;
    return rep;
}

RenormalizationData renormalize(const TangencyCertificate& cert, int n) {
    MapParams p(cert.a_star, cert.b);
    FixedPointData zhat = saddle_fixed_point(p);
    double sigma = std::abs(zhat.lambda_u);
    if (sigma <= 1.0) throw std::domain_error("renormalize: fixed point is not a saddle");

    RenormalizationData rd;
    rd.n = n;
    rd.sigma = sigma;
    rd.u = std::exp(cert.log_E_N);
    rd.v = std::exp(cert.log_W_N);
    rd.w = 0.0;
    rd.mu_scale = std::pow(sigma, 2 * n);
    rd.mu_offset = -std::pow(sigma, n);

    // Sampled verification: the composed map near the tangency, in the frame
    // of the reference orbit, should follow out = P s^2 + Q mu + R; the
    // relative residual of that fit is reported as R1.
    const int Ntot = cert.N + n;
    auto compose = [&](const Vec2& z, double mu) {
        MapParams q(cert.a_star + mu, cert.b, p.t, p.perturbation);
        Vec2 w = z;
        for (int k = 0; k < Ntot; ++k) {
            w = apply<double>(w, q);
            if (escaped(w, 100)) break;
        }
        return w;
    };
    Vec2 ref = compose(cert.z0, 0.0);
    // Direction of the quadratic displacement.
    contraction::ContractiveDirection cd =
        contraction::contractive_direction(cert.z0, p, cert.N);
    Vec2 tdir = cd.direction;
    auto out_of = [&](double s, double mu) {
        Vec2 w = compose(cert.z0 + s * tdir, mu);
        return w - ref;
    };
    // Pick the s scale so the displacement is moderate, then the e-direction.
    double target = 0.02;
    double s_max = 1e-3;
    for (int it = 0; it < 60; ++it) {
        double d = out_of(s_max, 0).norm();
        if (d > target) s_max *= 0.7;
        else if (d < target / 2) s_max *= 1.3;
        else break;
    }
    Vec2 e_out = out_of(s_max, 0).normalized();
    double mu_max = 1e-6;
    for (int it = 0; it < 80; ++it) {
        double d = std::abs(out_of(0, mu_max).dot(e_out));
        if (d > target / 2) mu_max *= 0.7;
        else if (d < target / 4) mu_max *= 1.3;
        else break;
    }

    std::vector<double> S, MU, OUT;
    for (int i = -4; i <= 4; ++i) {
        for (int j = -2; j <= 2; ++j) {
            double s = s_max * i / 4.0;
            double mu = mu_max * j / 2.0;
            S.push_back(s);
            MU.push_back(mu);
            OUT.push_back(out_of(s, mu).dot(e_out));
        }
    }
    // LSQ for out = P s^2 + Q mu + R.
    Eigen::MatrixXd A(S.size(), 3);
    Eigen::VectorXd rhs(S.size());
    for (size_t i = 0; i < S.size(); ++i) {
        A(i, 0) = S[i] * S[i];
        A(i, 1) = MU[i];
        A(i, 2) = 1.0;
        rhs(i) = OUT[i];
    }
    Eigen::Vector3d coef =
        (A.transpose() * A).ldlt().solve(A.transpose() * rhs);
    double spread = 0;
    for (double o : OUT) spread = std::max(spread, std::abs(o));
    double worst = 0;
    for (size_t i = 0; i < S.size(); ++i) {
        double model = coef(0) * S[i] * S[i] + coef(1) * MU[i] + coef(2);
        worst = std::max(worst, std::abs(OUT[i] - model));
    }
    rd.residual_R1 = spread > 0 ? worst / spread : 0.0;
    rd.samples = static_cast<int>(S.size());
    return rd;
}

DoubleTangencyResult double_tangency_search(const GapFn& gap1, const GapFn& gap2,
                                            double a0, double b0,
                                            const DoubleTangencyConfig& cfg) {
    DoubleTangencyResult res;
    double a = a0, b = b0;
    res.iterates.push_back({a, b});

    auto solve1d = [&](const std::function<double(double)>& f, double x) {
        double step = cfg.bracket_step;
        double f0 = f(x);
        if (f0 == 0) return x;
        for (int grow = 0; grow < 60; ++grow) {
            double xl = x - step, xr = x + step;
            double fl = f(xl), fr = f(xr);
            if ((fl > 0) != (f0 > 0)) { xr = x; fr = f0; x = xl; f0 = fl; std::swap(xl, xr); std::swap(fl, fr); }
            else if ((fr > 0) != (f0 > 0)) { xl = x; fl = f0; }
            else { step *= 2; continue; }
            // Bisect [xl, xr].
            for (int it = 0; it < 80; ++it) {
                double mid = 0.5 * (xl + xr);
                if (mid == xl || mid == xr) break;
                double fm = f(mid);
                if ((fm > 0) == (fl > 0)) { xl = mid; fl = fm; }
                else { xr = mid; }
            }
            return 0.5 * (xl + xr);
        }
        throw std::runtime_error("double_tangency_search: no 1D bracket found");
    };

    std::vector<double> steps;
    int bad_rounds = 0;
    for (int round = 0; round < cfg.max_rounds; ++round) {
        double a_solved = solve1d([&](double x) { return gap1(x, b); }, a);
        double damp_a = 1.0;
        if (steps.size() >= 2 && steps.back() > cfg.damping_trigger * steps[steps.size() - 2])
            damp_a = cfg.damping;
        double a_next = a + damp_a * (a_solved - a);

        double b_solved = solve1d([&](double y) { return gap2(a_next, y); }, b);
        double damp_b = damp_a;
        double b_next = b + damp_b * (b_solved - b);

        double step = std::hypot(a_next - a, b_next - b);
        a = a_next;
        b = b_next;
        res.iterates.push_back({a, b});
        if (!steps.empty()) {
            double ratio = steps.back() > 0 ? step / steps.back() : 0;
            if (ratio >= 1.0) ++bad_rounds;
            else bad_rounds = 0;
            if (bad_rounds >= 5) {
                res.note = "alternation diverged (ratio >= 1 over 5 rounds)";
                res.a_star = a;
                res.b_star = b;
                return res;
            }
        }
        steps.push_back(step);
        if (std::abs(gap1(a, b)) < cfg.tol && std::abs(gap2(a, b)) < cfg.tol) {
            res.converged = true;
            break;
        }
        if (step < cfg.tol) {
            res.converged =
                std::abs(gap1(a, b)) < 100 * cfg.tol && std::abs(gap2(a, b)) < 100 * cfg.tol;
            break;
        }
    }
    res.a_star = a;
    res.b_star = b;
    std::vector<double> xs, ys;
    for (size_t k = 0; k + 1 < steps.size(); ++k) {
        if (steps[k] > 0 && steps[k + 1] > 0) {
            xs.push_back(static_cast<double>(k));
            ys.push_back(std::log(steps[k + 1] / steps[k]));
        }
    }
    if (!ys.empty()) {
        double mean = 0;
        for (double y : ys) mean += y;
        res.contraction_ratio = std::exp(mean / ys.size());
    }
    if (!res.converged && res.note.empty()) res.note = "round budget exhausted";
    return res;
}

}  // namespace henon::tangency
