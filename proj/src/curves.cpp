#include "henon/curves.hpp"

#include "henon/util.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

namespace henon::curves {

void PlanarCurve::push(const Vec2& z) {
    if (pts.empty()) {
        pts.push_back(z);
        s.push_back(0.0);
        return;
    }
    double d = (z - pts.back()).norm();
    if (d == 0.0) return;
    pts.push_back(z);
    s.push_back(s.back() + d);
}

size_t PlanarCurve::segment_of(double u) const {
    auto it = std::upper_bound(s.begin(), s.end(), u);
    size_t i = static_cast<size_t>(std::distance(s.begin(), it));
    if (i == 0) return 0;
    if (i >= s.size()) return s.size() - 2;
    return i - 1;
}

Vec2 PlanarCurve::at(double u) const {
    if (pts.empty()) return Vec2::Zero();
    if (pts.size() == 1 || u <= 0) return pts.front();
    if (u >= s.back()) return pts.back();
    size_t i = segment_of(u);
    double d = s[i + 1] - s[i];
    double t = d > 0 ? (u - s[i]) / d : 0.0;
    return pts[i] + t * (pts[i + 1] - pts[i]);
}

PlanarCurve from_points(const std::vector<Vec2>& pts, double h_max, double theta_max) {
    PlanarCurve c;
    c.h_max = h_max;
    c.theta_max = theta_max;
    for (const Vec2& z : pts) c.push(z);
    return c;
}

namespace {

double turn_angle(const Vec2& u, const Vec2& v) {
    double nu = u.norm(), nv = v.norm();
    if (nu == 0 || nv == 0) return 0;
    double c = std::clamp(u.dot(v) / (nu * nv), -1.0, 1.0);
    return std::acos(c);
}

}  // namespace

bool trace_parametric(const std::function<Vec2(double)>& src, double t0, double t1,
                      PlanarCurve& out, const TraceConfig& cfg) {
    const double t_eps = std::max(std::abs(t1 - t0), 1e-30) * 1e-13;
    struct Item { double t; Vec2 z; };
    std::vector<Item> stack;
    double t_last = t0;
    Vec2 z_last = src(t0);
    if (out.pts.empty()) out.push(z_last);
    else z_last = out.pts.back();
    stack.push_back({t1, src(t1)});
    while (!stack.empty()) {
        if (out.pts.size() > cfg.max_vertices)
            throw std::runtime_error("trace_parametric: vertex budget exceeded");
        Item it = stack.back();
        Vec2 step = it.z - z_last;
        bool ok = step.norm() <= cfg.h_max;
        if (ok && out.pts.size() >= 2) {
            Vec2 prev = out.pts[out.pts.size() - 1] - out.pts[out.pts.size() - 2];
            ok = turn_angle(prev, step) <= cfg.theta_max;
        }
        if (!ok && std::abs(it.t - t_last) > t_eps) {
            double tm = 0.5 * (t_last + it.t);
            stack.push_back({tm, src(tm)});
            continue;
        }
        stack.pop_back();
        if (escaped(it.z, cfg.r_escape)) {
            out.truncated = true;
            return false;
        }
        out.push(it.z);
        t_last = it.t;
        z_last = it.z;
    }
    return true;
}

PlanarCurve trace_unstable(const FixedPointData& fp, const MapParams& p,
                           int generations, const TraceConfig& cfg) {
    if (fp.kind != FixedPointKind::saddle)
        throw std::invalid_argument("trace_unstable: fixed point is not a saddle");
    const double lu = fp.lambda_u;
    const Vec2 v = fp.ev_u;
    const double eps = cfg.eps_seed;
    // Fundamental segment: F maps its start to its end. For lu < 0 it crosses
    // the fixed point; for lu > 0 it lies on one side.
    double t_lo = lu > 0 ? eps / lu : -eps / std::abs(lu);
    double t_hi = eps;

    PlanarCurve out;
    out.h_max = cfg.h_max;
    out.theta_max = cfg.theta_max;
    for (int g = 0; g <= generations; ++g) {
        auto src = [&](double t) {
            Vec2 z = fp.location + t * v;
            for (int k = 0; k < g; ++k) z = apply<double>(z, p);
            return z;
        };
        if (!trace_parametric(src, t_lo, t_hi, out, cfg)) break;
    }
    return out;
}

StableLeg trace_stable_leg(const FixedPointData& fp, const MapParams& p,
                           double target_arclength, const TraceConfig& cfg) {
    if (fp.kind != FixedPointKind::saddle)
        throw std::invalid_argument("trace_stable_leg: fixed point is not a saddle");
    if (p.b <= 0.0)
        throw std::domain_error("trace_stable_leg: requires b > 0");
    const double ls = fp.lambda_s;
    Vec2 m = fp.ev_s;
    if (m.y() == 0)
        throw std::domain_error("trace_stable_leg: stable eigenvector is horizontal");
    if (m.y() > 0) m = -m;  // downward leg
    const double eps = cfg.eps_seed;
    // Fundamental segment of the inverse map along the leg.
    double t_lo = ls > 0 ? eps * ls : -eps * std::abs(ls);
    double t_hi = eps;

    StableLeg leg;
    leg.curve.h_max = cfg.h_max;
    leg.curve.theta_max = cfg.theta_max;
    leg.min_abs_slope = std::numeric_limits<double>::infinity();
    const double slope_floor = cfg.cone_floor / std::sqrt(p.b);

    for (int g = 0; g <= 256 && leg.curve.length() < target_arclength; ++g) {
        auto src = [&](double t) {
            Vec2 z = fp.location + t * m;
            for (int k = 0; k < g; ++k) z = apply_inverse(z, p);
            return z;
        };
        size_t before = leg.curve.size();
        bool cont = trace_parametric(src, t_lo, t_hi, leg.curve, cfg);
        for (size_t i = std::max<size_t>(before, 1); i < leg.curve.size(); ++i) {
            Vec2 d = leg.curve.pts[i] - leg.curve.pts[i - 1];
            if (std::abs(d.x()) < 1e-300) continue;
            double slope = std::abs(d.y() / d.x());
            leg.min_abs_slope = std::min(leg.min_abs_slope, slope);
            if (slope < slope_floor)
                throw std::runtime_error(
                    "trace_stable_leg: cone violation, |slope| = " + std::to_string(slope) +
                    " < " + std::to_string(slope_floor));
        }
        if (!cont) break;
    }
    leg.k_cone = leg.min_abs_slope * std::sqrt(p.b);
    return leg;
}

C2bCertificate c2b_check(const PlanarCurve& c, double b, double t, double C) {
    if (c.size() < 3) throw std::invalid_argument("c2b_check: need at least 3 vertices");
    std::vector<Vec2> pts = c.pts;
    auto monotone_x = [](const std::vector<Vec2>& v) {
        for (size_t i = 1; i < v.size(); ++i)
            if (v[i].x() <= v[i - 1].x()) return false;
        return true;
    };
    bool increasing = monotone_x(pts);
    if (!increasing) {
        std::vector<Vec2> rev(pts.rbegin(), pts.rend());
        if (monotone_x(rev)) {
            pts = std::move(rev);
        } else {
            // Rotate to the principal axis and retry.
            Vec2 mean = Vec2::Zero();
            for (const Vec2& z : pts) mean += z;
            mean /= static_cast<double>(pts.size());
            double sxx = 0, sxy = 0, syy = 0;
            for (const Vec2& z : pts) {
                Vec2 d = z - mean;
                sxx += d.x() * d.x();
                sxy += d.x() * d.y();
                syy += d.y() * d.y();
            }
            double theta = 0.5 * std::atan2(2 * sxy, sxx - syy);
            Eigen::Rotation2D<double> rot(-theta);
            for (Vec2& z : pts) z = rot * (z - mean);
            if (!monotone_x(pts)) {
                std::reverse(pts.begin(), pts.end());
                if (!monotone_x(pts))
                    throw std::invalid_argument("c2b_check: curve is not a graph over x");
            }
        }
    }
    C2bCertificate cert;
    cert.bound = C * std::pow(b, t);
    std::vector<double> slope(pts.size() - 1), xmid(pts.size() - 1);
    for (size_t i = 0; i + 1 < pts.size(); ++i) {
        slope[i] = (pts[i + 1].y() - pts[i].y()) / (pts[i + 1].x() - pts[i].x());
        xmid[i] = 0.5 * (pts[i + 1].x() + pts[i].x());
        cert.max_slope = std::max(cert.max_slope, std::abs(slope[i]));
    }
    for (size_t i = 0; i + 1 < slope.size(); ++i) {
        double d2 = (slope[i + 1] - slope[i]) / (xmid[i + 1] - xmid[i]);
        cert.max_second_derivative = std::max(cert.max_second_derivative, std::abs(d2));
    }
    cert.passed = cert.max_slope <= cert.bound && cert.max_second_derivative <= cert.bound;
    return cert;
}

double curvature(const PlanarCurve& c, double u, double window_arclength, bool* degenerate) {
    if (degenerate) *degenerate = false;
    if (c.size() < 5) throw std::invalid_argument("curvature: need at least 5 vertices");
    size_t i0 = c.segment_of(u);
    if (window_arclength <= 0) {
        size_t a = i0 > 5 ? i0 - 5 : 0;
        size_t b = std::min(i0 + 5, c.size() - 1);
        window_arclength = c.s[b] - c.s[a];
    }
    double lo = u - window_arclength / 2, hi = u + window_arclength / 2;
    size_t a = c.segment_of(std::max(lo, 0.0));
    size_t b = std::min(c.segment_of(std::min(hi, c.length())) + 1, c.size() - 1);
    while (b - a + 1 < 5) {  // widen degenerate windows
        if (a > 0) --a;
        if (b < c.size() - 1) ++b;
        if (a == 0 && b == c.size() - 1) break;
    }
    int m = static_cast<int>(b - a + 1);
    if (m < 5) throw std::invalid_argument("curvature: window too small");

    // Parametric least-squares quadratics x(w), y(w) in centered arclength.
    Eigen::MatrixXd A(m, 3);
    Eigen::VectorXd bx(m), by(m);
    for (int i = 0; i < m; ++i) {
        double w = c.s[a + i] - u;
        A(i, 0) = 1;
        A(i, 1) = w;
        A(i, 2) = w * w;
        bx(i) = c.pts[a + i].x();
        by(i) = c.pts[a + i].y();
    }
    Eigen::Matrix3d N = A.transpose() * A;
    Eigen::Vector3d cx = N.ldlt().solve(A.transpose() * bx);
    Eigen::Vector3d cy = N.ldlt().solve(A.transpose() * by);
    double x1 = cx(1), x2 = 2 * cx(2), y1 = cy(1), y2 = 2 * cy(2);
    double cross = x1 * y2 - y1 * x2;
    double speed = std::hypot(x1, y1);
    if (speed < 1e-14 || std::abs(cross) < 1e-14 * speed * speed * speed) {
        if (degenerate) *degenerate = true;
        return 0.0;
    }
    return std::abs(cross) / (speed * speed * speed);
}

SpacingReport stable_leg_spacing(const MapParams& p, int k, double y_ref, double delta) {
    // Reference leg through the saddle; short, so it stays inside the box.
    FixedPointData fp = saddle_fixed_point(p);
    TraceConfig tc;
    tc.h_max = 1e-3;
    StableLeg leg = trace_stable_leg(fp, p, 0.6, tc);
    const PlanarCurve& g0 = leg.curve;

    // Signed side of z relative to the leg (projection onto the local normal).
    auto side = [&](const Vec2& z) {
        double best = std::numeric_limits<double>::infinity();
        double sgn = 0;
        for (size_t i = 0; i + 1 < g0.size(); ++i) {
            Vec2 a = g0.pts[i], d = g0.pts[i + 1] - a;
            double len2 = d.squaredNorm();
            if (len2 == 0) continue;
            double t = std::clamp((z - a).dot(d) / len2, 0.0, 1.0);
            Vec2 q = a + t * d;
            double dist = (z - q).norm();
            if (dist < best) {
                best = dist;
                sgn = d.x() * (z - q).y() - d.y() * (z - q).x();
            }
        }
        return sgn;
    };
    auto fwd = [&](double x) {
        Vec2 z(x, y_ref);
        for (int j = 0; j < k; ++j) z = apply<double>(z, p);
        return z;
    };

    SpacingReport rep;
    const int levels = 3 * (1 << k);
    // Predicted ladder, restricted to |x| >= delta.
    for (int nu = -levels + 1; nu <= levels - 1; ++nu) {
        double x = std::sin(M_PI / 2.0 * nu / static_cast<double>(levels));
        if (std::abs(x) >= delta) rep.predicted.push_back(x);
    }
    std::sort(rep.predicted.begin(), rep.predicted.end());

    const int grid = 8192;
    const double x_max = 0.995;
    double prev_x = -x_max;
    double prev_side = side(fwd(prev_x));
    for (int i = 1; i <= grid; ++i) {
        double x = -x_max + 2 * x_max * i / grid;
        double sv = side(fwd(x));
        if (prev_side != 0 && sv != 0 && (sv > 0) != (prev_side > 0)) {
            double lo = prev_x, hi = x, flo = prev_side;
            for (int it = 0; it < 60; ++it) {
                double mid = 0.5 * (lo + hi);
                double fm = side(fwd(mid));
                if ((fm > 0) == (flo > 0)) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            double xr = 0.5 * (lo + hi);
            // Keep genuine crossings only: the image must be near the leg.
            if (distance_to_curve(g0, fwd(xr)) < 0.05 && std::abs(xr) >= delta)
                rep.crossings.push_back(xr);
        }
        prev_x = x;
        prev_side = sv;
    }
    std::sort(rep.crossings.begin(), rep.crossings.end());

    for (size_t i = 0; i + 1 < rep.crossings.size(); ++i)
        rep.gaps.push_back(rep.crossings[i + 1] - rep.crossings[i]);
    for (size_t i = 0; i + 1 < rep.predicted.size(); ++i)
        rep.predicted_gaps.push_back(rep.predicted[i + 1] - rep.predicted[i]);

    // Match each measured crossing to the nearest predicted one, then compare gaps.
    if (rep.crossings.size() >= 2) {
        for (size_t i = 0; i + 1 < rep.crossings.size(); ++i) {
            auto nearest = [&](double x) {
                double best = std::numeric_limits<double>::infinity();
                size_t bi = 0;
                for (size_t j = 0; j < rep.predicted.size(); ++j) {
                    double d = std::abs(rep.predicted[j] - x);
                    if (d < best) {
                        best = d;
                        bi = j;
                    }
                }
                return bi;
            };
            size_t j0 = nearest(rep.crossings[i]);
            size_t j1 = nearest(rep.crossings[i + 1]);
            if (j1 != j0 + 1) continue;  // only adjacent-ladder gaps are comparable
            double pg = rep.predicted[j1] - rep.predicted[j0];
            double rel = std::abs(rep.gaps[i] - pg) / pg;
            rep.max_rel_gap_error = std::max(rep.max_rel_gap_error, rel);
            ++rep.matched;
        }
    }
    if (rep.crossings.size() < 2)
        throw std::runtime_error("stable_leg_spacing: too few legs found at this k");
    return rep;
}

double distance_to_curve(const PlanarCurve& c, const Vec2& q) {
    double best = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i + 1 < c.size(); ++i) {
        Vec2 a = c.pts[i], d = c.pts[i + 1] - a;
        double len2 = d.squaredNorm();
        double t = len2 > 0 ? std::clamp((q - a).dot(d) / len2, 0.0, 1.0) : 0.0;
        best = std::min(best, (q - (a + t * d)).norm());
    }
    return best;
}

std::vector<Vec2> intersect(const PlanarCurve& c1, const PlanarCurve& c2) {
    std::vector<Vec2> hits;
    if (c1.size() < 2 || c2.size() < 2) return hits;
    // Hash c2 segments by cell.
    double cell = 0;
    for (size_t i = 0; i + 1 < c2.size(); ++i)
        cell = std::max(cell, (c2.pts[i + 1] - c2.pts[i]).norm());
    cell = std::max(cell, 1e-9);
    auto key = [&](long ix, long iy) {
        return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(ix)) << 32) |
               static_cast<std::uint32_t>(iy);
    };
    std::unordered_map<std::uint64_t, std::vector<size_t>> bins;
    for (size_t i = 0; i + 1 < c2.size(); ++i) {
        Vec2 a = c2.pts[i], b = c2.pts[i + 1];
        long x0 = static_cast<long>(std::floor(std::min(a.x(), b.x()) / cell));
        long x1 = static_cast<long>(std::floor(std::max(a.x(), b.x()) / cell));
        long y0 = static_cast<long>(std::floor(std::min(a.y(), b.y()) / cell));
        long y1 = static_cast<long>(std::floor(std::max(a.y(), b.y()) / cell));
        for (long ix = x0; ix <= x1; ++ix)
            for (long iy = y0; iy <= y1; ++iy) bins[key(ix, iy)].push_back(i);
    }
    auto seg_intersect = [](const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2,
                            Vec2& out) {
        Vec2 r = p2 - p1, sdir = q2 - q1;
        double denom = r.x() * sdir.y() - r.y() * sdir.x();
        if (denom == 0) return false;
        Vec2 d = q1 - p1;
        double t = (d.x() * sdir.y() - d.y() * sdir.x()) / denom;
        double w = (d.x() * r.y() - d.y() * r.x()) / denom;
        if (t < 0 || t > 1 || w < 0 || w > 1) return false;
        out = p1 + t * r;
        return true;
    };
    for (size_t i = 0; i + 1 < c1.size(); ++i) {
        Vec2 a = c1.pts[i], b = c1.pts[i + 1];
        long x0 = static_cast<long>(std::floor(std::min(a.x(), b.x()) / cell));
        long x1 = static_cast<long>(std::floor(std::max(a.x(), b.x()) / cell));
        long y0 = static_cast<long>(std::floor(std::min(a.y(), b.y()) / cell));
        long y1 = static_cast<long>(std::floor(std::max(a.y(), b.y()) / cell));
        std::vector<size_t> cand;
        for (long ix = x0; ix <= x1; ++ix)
            for (long iy = y0; iy <= y1; ++iy) {
                auto it = bins.find(key(ix, iy));
                if (it != bins.end()) cand.insert(cand.end(), it->second.begin(), it->second.end());
            }
        std::sort(cand.begin(), cand.end());
        cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
        for (size_t j : cand) {
            Vec2 xpt;
            if (seg_intersect(a, b, c2.pts[j], c2.pts[j + 1], xpt)) hits.push_back(xpt);
        }
    }
    // Dedup within 1e-9.
    std::sort(hits.begin(), hits.end(), [](const Vec2& u, const Vec2& v) {
        return u.x() != v.x() ? u.x() < v.x() : u.y() < v.y();
    });
    std::vector<Vec2> out;
    for (const Vec2& h : hits) {
        bool dup = false;
        for (auto it = out.rbegin(); it != out.rend(); ++it) {
            if ((*it - h).norm() < 1e-9) {
                dup = true;
                break;
            }
            if (h.x() - it->x() > 1e-9) break;
        }
        if (!dup) out.push_back(h);
    }
    return out;
}

double hausdorff_curve_cloud(const PlanarCurve& c, const std::vector<Vec2>& cloud,
                             double cell) {
    // curve -> cloud
    double d1 = directed_hausdorff(c.pts, cloud, cell);
    // cloud -> curve: nearest segment via a grid over curve vertices
    PointGrid grid(c.pts, cell);
    double d2 = 0;
    for (const Vec2& q : cloud) {
        double dv = grid.nearest_distance(q);
        d2 = std::max(d2, dv);
    }
    // Vertex distance over-estimates segment distance by at most h_max/2;
    // refine the worst offenders against true segments.
    if (d2 > 0) {
        double worst = 0;
        for (const Vec2& q : cloud) {
            double dv = grid.nearest_distance(q);
            if (dv + 1e-12 >= d2 - c.h_max) worst = std::max(worst, distance_to_curve(c, q));
        }
        d2 = worst;
    }
    return std::max(d1, d2);
}

}  // namespace henon::curves
