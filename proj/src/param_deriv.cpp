#include "henon/param_deriv.hpp"

#include "henon/util.hpp"

#include <cmath>

namespace henon::param_deriv {

namespace {

TangentTrace run_recursion(const Vec2& z0, const Vec2& tau0, const MapParams& p, int n,
                           ParamKind which, bool with_forcing) {
    TangentTrace tr;
    tr.which = which;
    tr.orbit.reserve(n + 1);
    tr.tau.reserve(n + 1);
    Vec2 z = z0;
    LogVec tau = LogVec::from(tau0);
    tr.orbit.push_back(z);
    tr.tau.push_back(tau);
    for (int nu = 0; nu < n; ++nu) {
        Mat2 M = jacobian<double>(z, p);
        Vec2 forcing = Vec2::Zero();
        if (with_forcing) {
            if (which == ParamKind::b) forcing = Vec2(0.0, z.x());
            else forcing = Vec2(-z.x() * z.x(), 0.0);
        }
        // tau' = M tau + f, evaluated in the scale of tau.
        Vec2 dir = M * tau.dir;
        double lt = tau.log_norm;
        Vec2 scaled_f = std::isfinite(lt) ? Vec2(forcing * std::exp(-lt)) : forcing;
        if (!std::isfinite(lt)) {
            // tau was exactly zero; restart the scale from the forcing.
            tau = LogVec::from(forcing);
        } else {
            Vec2 w = dir + scaled_f;
            double nw = w.norm();
            tau = nw > 0 ? LogVec(lt + std::log(nw), w / nw)
                         : LogVec(-std::numeric_limits<double>::infinity(), Vec2(1, 0));
        }
        z = apply<double>(z, p);
        if (escaped(z)) throw std::runtime_error("tangent_recursion: base orbit diverged");
        tr.orbit.push_back(z);
        tr.tau.push_back(tau);
    }
    return tr;
}

}  // namespace

TangentTrace tangent_recursion(const Vec2& z0, const Vec2& tau0, const MapParams& p, int n,
                               ParamKind which) {
    return run_recursion(z0, tau0, p, n, which, true);
}

TangentTrace tangent_recursion_homogeneous(const Vec2& z0, const Vec2& tau0,
                                           const MapParams& p, int n) {
    return run_recursion(z0, tau0, p, n, ParamKind::b, false);
}

Vec2 critical_tangent_initial(const MapParams& p, ParamKind which, int field_order,
                              int generations, double h) {
    auto locate = [&](double da, double db) {
        MapParams q(p.a + da, p.b + db, p.t, p.perturbation);
        FixedPointData fp = saddle_fixed_point(q);
        curves::TraceConfig tc;
        tc.h_max = 1e-3;
        curves::PlanarCurve wu = curves::trace_unstable(fp, q, generations, tc);
        return critical::find_critical_point(wu, q, field_order).z0;
    };
    Vec2 plus = which == ParamKind::a ? locate(h, 0) : locate(0, h);
    Vec2 minus = which == ParamKind::a ? locate(-h, 0) : locate(0, -h);
    return (plus - minus) / (2 * h);
}

ComparabilityReport comparability_check(const TangentTrace& trace,
                                        const critical::SplittingTrace& splitting,
                                        const MapParams& p) {
    size_t n = std::min(trace.tau.size(), splitting.steps.size());
    ComparabilityReport rep;
    rep.ratio.resize(n, 0);
    rep.angle.resize(n, 0);
    rep.ratio_in_band.resize(n, true);
    rep.angle_ok.resize(n, true);
    rep.is_free.resize(n, true);
    double angle_budget = std::pow(p.b, p.t / 2.0);
    for (size_t nu = 0; nu < n; ++nu) {
        const LogVec& tau = trace.tau[nu];
        const LogVec& ws = splitting.steps[nu].w_star;
        rep.is_free[nu] = splitting.steps[nu].is_free;
        rep.ratio[nu] = std::exp(tau.log_norm - ws.log_norm);
        double c = std::clamp(std::abs(tau.dir.dot(ws.dir)), 0.0, 1.0);
        rep.angle[nu] = std::acos(c);
        if (nu < 2) continue;
        rep.ratio_in_band[nu] = rep.ratio[nu] >= 0.01 && rep.ratio[nu] <= 100.0;
        rep.angle_ok[nu] = !rep.is_free[nu] || rep.angle[nu] <= angle_budget;
        if (!rep.ratio_in_band[nu] || !rep.angle_ok[nu]) rep.all_pass = false;
    }
    return rep;
}

AlignmentReport b_alignment_check(const TangentTrace& trace,
                                  const critical::SplittingTrace& splitting, int n) {
    AlignmentReport rep;
    size_t lim = std::min<size_t>(n + 1, std::min(trace.tau.size(), splitting.steps.size()));
    for (size_t nu = 2; nu < lim; ++nu) {
        if (!splitting.steps[nu].is_free) continue;
        const LogVec& tau = trace.tau[nu];
        const LogVec& w = splitting.steps[nu].w;
        // lambda = <tau, w_hat> / ||w||, residual = ||tau - lambda w||.
        double lam = tau.dir.dot(w.dir) * std::exp(tau.log_norm - w.log_norm);
        Vec2 tau_full_dir = tau.dir;
        // Residual in units of ||tau||: r = || tau_hat - (lambda ||w||/||tau||) w_hat ||.
        double scale = std::exp(w.log_norm - tau.log_norm) * lam;
        double resid = (tau_full_dir - scale * w.dir).norm() * std::exp(tau.log_norm);
        rep.free_times.push_back(static_cast<int>(nu));
        rep.lambda.push_back(lam);
        rep.residual.push_back(resid);
        rep.residual_ratio.push_back(resid * std::exp(-w.log_norm));
    }
    // Fitted decay ratio of consecutive |lambda| differences.
    std::vector<double> xs, ys;
    for (size_t k = 0; k + 1 < rep.lambda.size(); ++k) {
        double d = std::abs(rep.lambda[k + 1] - rep.lambda[k]);
        if (d > 0) {
            xs.push_back(static_cast<double>(rep.free_times[k + 1]));
            ys.push_back(std::log(d));
        }
    }
    LinearFit fit = fit_linear(xs, ys);
    rep.cauchy_ratio = xs.size() >= 2 ? std::exp(fit.slope) : 0.0;
    return rep;
}

std::vector<quad1d::ParamInterval> startup_windows(int N_max) {
    if (N_max < 4) throw std::invalid_argument("startup_windows: N >= 4 required");
    std::vector<quad1d::ParamInterval> out;
    for (int N = 4; N <= N_max; ++N) {
        quad1d::ParamInterval w;
        w.lo = 2.0 - std::pow(2.0, -N);
        w.hi = 2.0 - std::pow(2.0, -(N + 1));
        out.push_back(w);
    }
    return out;
}

}  // namespace henon::param_deriv
