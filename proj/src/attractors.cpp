#include "henon/attractors.hpp"

#include "henon/util.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace henon::attractors {

std::string kind_name(Kind k) {
    switch (k) {
        case Kind::sink: return "sink";
        case Kind::strange: return "strange";
        case Kind::divergent: return "divergent";
        default: return "undecided";
    }
}

std::string flag_name(CoexistenceFlag f) {
    switch (f) {
        case CoexistenceFlag::empty: return "empty";
        case CoexistenceFlag::single: return "single";
        case CoexistenceFlag::multi_sink: return "multi-sink";
        case CoexistenceFlag::two_strange: return "two-strange";
        case CoexistenceFlag::sink_strange: return "sink+strange";
    }
    return "empty";
}

namespace {

// Newton for a period-p orbit from seed z; returns true on convergence.
bool newton_periodic(const MapParams& p, int period, Vec2& z, Mat2* dfp_out = nullptr) {
    for (int it = 0; it < 40; ++it) {
        Vec2 w = z;
        Mat2 M = Mat2::Identity();
        for (int k = 0; k < period; ++k) {
            M = jacobian<double>(w, p) * M;
            w = apply<double>(w, p);
            if (escaped(w, 50.0)) return false;
        }
        Vec2 r = w - z;
        if (r.norm() < 1e-12) {
            if (dfp_out) *dfp_out = M;
            return true;
        }
        Mat2 A = M - Mat2::Identity();
        double det = A.determinant();
        if (std::abs(det) < 1e-14) return false;
        Vec2 step = A.inverse() * r;
        if (!std::isfinite(step.x()) || !std::isfinite(step.y()) || step.norm() > 10) return false;
        z -= step;
    }
    return false;
}

void multipliers_of(const Mat2& M, AttractorRecord& rec) {
    double tr = M.trace(), det = M.determinant();
    double d2 = tr * tr - 4 * det;
    if (d2 >= 0) {
        double sq = std::sqrt(d2);
        rec.multipliers = {(tr + sq) / 2, (tr - sq) / 2};
        rec.complex_multipliers = false;
    } else {
        double mod = std::sqrt(std::abs(det));
        rec.multipliers = {mod, mod};
        rec.complex_multipliers = true;
    }
}

double spectral_radius(const Mat2& M) {
    double tr = M.trace(), det = M.determinant();
    double d2 = tr * tr - 4 * det;
    if (d2 >= 0) {
        double sq = std::sqrt(d2);
        return std::max(std::abs((tr + sq) / 2), std::abs((tr - sq) / 2));
    }
    return std::sqrt(std::abs(det));
}

// Minimal period of a Newton-confirmed period-p point.
int minimal_period(const MapParams& p, const Vec2& z, int period) {
    for (int q = 1; q < period; ++q) {
        if (period % q != 0) continue;
        Vec2 w = z;
        for (int k = 0; k < q; ++k) w = apply<double>(w, p);
        if ((w - z).norm() < 1e-9) return q;
    }
    return period;
}

std::vector<Vec2> orbit_points(const MapParams& p, const Vec2& z, int period) {
    std::vector<Vec2> pts;
    Vec2 w = z;
    for (int k = 0; k < period; ++k) {
        pts.push_back(w);
        w = apply<double>(w, p);
    }
    return pts;
}

bool same_periodic_orbit(const std::vector<Vec2>& a, const std::vector<Vec2>& b, double tol) {
    if (a.size() != b.size()) return false;
    auto key = [](const std::vector<Vec2>& v) {
        std::vector<Vec2> s = v;
        std::sort(s.begin(), s.end(), [](const Vec2& u, const Vec2& w) {
            return u.x() != w.x() ? u.x() < w.x() : u.y() < w.y();
        });
        return s;
    };
    std::vector<Vec2> sa = key(a), sb = key(b);
    for (size_t i = 0; i < sa.size(); ++i)
        if ((sa[i] - sb[i]).norm() > tol) return false;
    return true;
}

}  // namespace

double lyapunov_exponent(const Vec2& z0, const MapParams& p, long n, bool* converged) {
    Vec2 z = z0;
    Vec2 v(1, 0);
    double acc1 = 0, acc2 = 0;
    long half = n / 2;
    for (long k = 0; k < n; ++k) {
        Mat2 J = jacobian<double>(z, p);
        v = J * v;
        double nv = v.norm();
        if (nv == 0) throw std::runtime_error("lyapunov_exponent: tangent collapsed");
        (k < half ? acc1 : acc2) += std::log(nv);
        v /= nv;
        z = apply<double>(z, p);
        if (escaped(z)) throw std::runtime_error("lyapunov_exponent: orbit diverged");
    }
    double l1 = acc1 / half, l2 = acc2 / (n - half);
    if (converged) *converged = std::abs(l1 - l2) <= 0.02;
    return (acc1 + acc2) / n;
}

AttractorRecord classify_orbit(const Vec2& z0, const MapParams& p, const ClassifyConfig& cfg) {
    AttractorRecord rec;
    Vec2 z = z0;
    for (int k = 0; k < cfg.transient; ++k) {
        z = apply<double>(z, p);
        if (escaped(z, cfg.r_escape)) {
            rec.kind = Kind::divergent;
            rec.representative = z0;
            return rec;
        }
    }
    rec.representative = z;

    // Recurrence scan for a candidate period.
    const int buf_n = 3 * cfg.p_max;
    std::vector<Vec2> buf(buf_n);
    Vec2 w = z;
    for (int k = 0; k < buf_n; ++k) {
        buf[k] = w;
        w = apply<double>(w, p);
        if (escaped(w, cfg.r_escape)) {
            rec.kind = Kind::divergent;
            return rec;
        }
    }
    int candidate = 0;
    for (int q = 1; q <= cfg.p_max && candidate == 0; ++q) {
        bool ok = true;
        for (int k = cfg.p_max; k < 2 * cfg.p_max; ++k) {
            if ((buf[k + q] - buf[k]).norm() > cfg.eps_per) {
                ok = false;
                break;
            }
        }
        if (ok) candidate = q;
    }
    if (candidate > 0) {
        Vec2 zs = buf[cfg.p_max];
        Mat2 M;
        if (newton_periodic(p, candidate, zs, &M)) {
            int q = minimal_period(p, zs, candidate);
            if (q != candidate) {
                Mat2 Mq;
                if (newton_periodic(p, q, zs, &Mq)) {
                    candidate = q;
                    M = Mq;
                }
            }
            if (spectral_radius(M) < 1.0) {
                rec.kind = Kind::sink;
                rec.period = candidate;
                multipliers_of(M, rec);
                rec.signature = orbit_points(p, zs, candidate);
                rec.representative = zs;
                rec.lyapunov = std::log(std::max(std::abs(rec.multipliers[0]),
                                                 std::abs(rec.multipliers[1])));
                return rec;
            }
        }
    }

    bool conv = false;
    double lam;
    try {
        lam = lyapunov_exponent(z, p, cfg.horizon, &conv);
    } catch (const std::exception&) {
        rec.kind = Kind::divergent;
        return rec;
    }
    rec.lyapunov = lam;
    if (lam > cfg.lambda_threshold && conv) {
        rec.kind = Kind::strange;
        // Tail sample for the matching metric.
        Vec2 u = z;
        long thin = std::max(1L, cfg.horizon / (10L * cfg.tail_points));
        for (int i = 0; i < cfg.tail_points; ++i) {
            for (long s = 0; s < thin; ++s) u = apply<double>(u, p);
            rec.signature.push_back(u);
        }
    } else {
        rec.kind = Kind::undecided;
    }
    return rec;
}

std::vector<AttractorRecord> find_sinks(const MapParams& p, int p_max, int grid_per_axis,
                                        double box_x, double box_y) {
    std::vector<AttractorRecord> sinks;
    for (int period = 1; period <= p_max; ++period) {
        for (int gi = 0; gi < grid_per_axis; ++gi) {
            for (int gj = 0; gj < grid_per_axis; ++gj) {
                Vec2 z(-box_x + 2 * box_x * (gi + 0.5) / grid_per_axis,
                       -box_y + 2 * box_y * (gj + 0.5) / grid_per_axis);
                Mat2 M;
                if (!newton_periodic(p, period, z, &M)) continue;
                int q = minimal_period(p, z, period);
                if (q != period) continue;  // picked up again at its own period
                if (spectral_radius(M) >= 1.0) continue;
                AttractorRecord rec;
                rec.kind = Kind::sink;
                rec.period = period;
                multipliers_of(M, rec);
                rec.representative = z;
                rec.signature = orbit_points(p, z, period);
                rec.lyapunov = std::log(std::max(std::abs(rec.multipliers[0]),
                                                 std::abs(rec.multipliers[1])));
                bool dup = false;
                for (const auto& s : sinks)
                    if (s.period == rec.period &&
                        same_periodic_orbit(s.signature, rec.signature, 1e-6))
                        dup = true;
                if (!dup) sinks.push_back(std::move(rec));
            }
        }
    }
    return sinks;
}

std::array<Vec2, 4> standard_trapping_quad() {
    return {Vec2(-1.33, 0.42), Vec2(1.32, 0.133), Vec2(1.245, -0.14), Vec2(-1.06, -0.5)};
}

namespace {

bool point_in_polygon(const std::array<Vec2, 4>& q, const Vec2& z) {
    bool in = false;
    for (size_t i = 0, j = 3; i < 4; j = i++) {
        if ((q[i].y() > z.y()) != (q[j].y() > z.y()) &&
            z.x() < (q[j].x() - q[i].x()) * (z.y() - q[i].y()) / (q[j].y() - q[i].y()) + q[i].x())
            in = !in;
    }
    return in;
}

double polygon_boundary_distance(const std::array<Vec2, 4>& q, const Vec2& z) {
    double best = std::numeric_limits<double>::infinity();
    for (size_t i = 0, j = 3; i < 4; j = i++) {
        Vec2 a = q[j], d = q[i] - q[j];
        double t = std::clamp((z - a).dot(d) / d.squaredNorm(), 0.0, 1.0);
        best = std::min(best, (z - (a + t * d)).norm());
    }
    return best;
}

}  // namespace

bool verify_trapping(const MapParams& p, const std::array<Vec2, 4>& quad,
                     int boundary_samples, double* margin) {
    double worst = std::numeric_limits<double>::infinity();
    bool ok = true;
    auto check = [&](const Vec2& z) {
        Vec2 w = apply<double>(z, p);
        double d = polygon_boundary_distance(quad, w);
        bool inside = point_in_polygon(quad, w);
        if (!inside) {
            ok = false;
            worst = std::min(worst, -d);
        } else {
            worst = std::min(worst, d);
        }
    };
    for (size_t e = 0; e < 4; ++e) {
        Vec2 a = quad[e], b = quad[(e + 1) % 4];
        for (int i = 0; i <= boundary_samples; ++i)
            check(a + (b - a) * (static_cast<double>(i) / boundary_samples));
    }
    // Interior grid over the bounding box, filtered by the polygon.
    double xlo = quad[0].x(), xhi = quad[0].x(), ylo = quad[0].y(), yhi = quad[0].y();
    for (const Vec2& v : quad) {
        xlo = std::min(xlo, v.x());
        xhi = std::max(xhi, v.x());
        ylo = std::min(ylo, v.y());
        yhi = std::max(yhi, v.y());
    }
    int g = std::max(8, boundary_samples / 8);
    for (int i = 0; i <= g; ++i)
        for (int j = 0; j <= g; ++j) {
            Vec2 z(xlo + (xhi - xlo) * i / g, ylo + (yhi - ylo) * j / g);
            if (point_in_polygon(quad, z)) check(z);
        }
    if (margin) *margin = worst;
    return ok && worst > 0;
}

SinkRegionReport sink_region_contraction(const critical::CriticalPoint& cp,
                                         const MapParams& p, int n_max) {
    SinkRegionReport rep;
    OrbitBuffer orb = iterate_orbit(cp.z0, p, n_max);
    std::vector<LogVec> w = derivative_product(orb, Vec2(1, 0));

    for (int N = 4; N < static_cast<int>(orb.points.size()); ++N) {
        double D = std::exp(w[N].log_norm);
        double dist = (orb.points[N] - cp.z0).norm();
        if (dist <= 0.02 / D) {
            rep.geometry_found = true;
            rep.N = N;
            rep.D_N = D;
            rep.return_distance = dist;
            break;
        }
    }
    if (!rep.geometry_found) {
        rep.note = "no sink certificate here: return-time geometry precondition unmet";
        return rep;
    }

    const int N = rep.N;
    int k = 0;
    while (std::pow(0.5, k) * rep.D_N * rep.D_N >= 1.0) ++k;
    rep.k_contraction = k;

    // Recursion matrix of the contraction argument, with the contracted norm
    // measured rather than bounded.
    int n_field = std::max(1, N / 10);
    double contracted = std::exp(
        contraction::contracted_log_norm(orb.points[0], p, std::max(n_field, 1), n_field));
    Mat2 A;
    A << contracted, rep.D_N, contracted, 0.5;
    rep.recursion_spectral_radius = spectral_radius(A);

    // Invariance of the region bounded by the image curve and a stable leaf.
    double rho = 0.1 / rep.D_N;
    // The critical curve around z0, resampled finely: use the leaf of W^u
    // through z0 approximated by the local quadratic of the orbit curve.
    // Build the boundary in image space: F(gamma) for gamma the horizontal
    // segment through z0 bent onto W^u is approximated by the actual curve
    // piece; here the caller's curve is not available, so use the straight
    // segment through z0 along the curve tangent (width rho is tiny).
    Vec2 tangent(1, 0);
    std::vector<Vec2> gamma;
    int m = 400;
    for (int i = 0; i <= m; ++i) {
        double s = -1.5 * rho + 3.0 * rho * i / m;
        gamma.push_back(cp.z0 + s * tangent);
    }
    std::vector<Vec2> image;
    for (const Vec2& g : gamma) image.push_back(apply<double>(g, p));
    // Stable leaf through the image of the +rho endpoint.
    curves::PlanarCurve leaf = contraction::integrate_leaf(
        apply<double>(Vec2(cp.z0 + rho * tangent), p), p, n_field, 8 * rho * rep.D_N,
        {std::min(1e-4, rho), 10.0, kRescapeDefault});
    // Region polygon: image arc + leaf arc (closed crudely by the chord).
    std::vector<Vec2> poly = image;
    for (auto it = leaf.pts.rbegin(); it != leaf.pts.rend(); ++it) poly.push_back(*it);

    auto inside = [&](const Vec2& z) {
        bool in = false;
        for (size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
            if ((poly[i].y() > z.y()) != (poly[j].y() > z.y()) &&
                z.x() < (poly[j].x() - poly[i].x()) * (z.y() - poly[i].y()) /
                                (poly[j].y() - poly[i].y()) +
                            poly[i].x())
                in = !in;
        }
        return in;
    };
    int tested = 0, ok = 0;
    for (size_t i = 0; i < poly.size(); i += 5) {
        Vec2 z = poly[i];
        Vec2 zz = z;
        bool esc = false;
        for (int s = 0; s < N; ++s) {
            zz = apply<double>(zz, p);
            if (escaped(zz)) {
                esc = true;
                break;
            }
        }
        if (esc) continue;
        ++tested;
        if (inside(zz)) ++ok;
    }
    rep.invariant = tested > 0 && ok == tested;
    rep.inside_fraction = tested > 0 ? static_cast<double>(ok) / tested : 0.0;
    return rep;
}

CoexistenceInventory attractor_inventory(const MapParams& p, const std::vector<Vec2>& seeds,
                                         const ClassifyConfig& cfg) {
    CoexistenceInventory inv;
    inv.params = p;
    inv.total_seeds = static_cast<int>(seeds.size());
    for (const Vec2& s : seeds) {
        AttractorRecord rec = classify_orbit(s, p, cfg);
        if (rec.kind == Kind::divergent) {
            ++inv.divergent_seeds;
            continue;
        }
        if (rec.kind == Kind::undecided) {
            ++inv.undecided_seeds;
            continue;
        }
        bool merged = false;
        for (auto& ex : inv.records) {
            if (ex.kind != rec.kind) continue;
            if (rec.kind == Kind::sink) {
                if (ex.period == rec.period &&
                    same_periodic_orbit(ex.signature, rec.signature, cfg.match_tol_periodic)) {
                    ex.basin_share += 1.0;
                    merged = true;
                    break;
                }
            } else {
                double d = std::max(directed_hausdorff(ex.signature, rec.signature, 0.02),
                                    directed_hausdorff(rec.signature, ex.signature, 0.02));
                if (d < cfg.match_tol_hausdorff) {
                    ex.basin_share += 1.0;
                    merged = true;
                    break;
                }
            }
        }
        if (!merged) {
            rec.basin_share = 1.0;
            inv.records.push_back(std::move(rec));
        }
    }
    for (auto& r : inv.records) r.basin_share /= std::max(1, inv.total_seeds);

    int n_sink = 0, n_strange = 0;
    for (const auto& r : inv.records) {
        if (r.kind == Kind::sink) ++n_sink;
        if (r.kind == Kind::strange) ++n_strange;
    }
    if (n_sink >= 1 && n_strange >= 1) inv.flag = CoexistenceFlag::sink_strange;
    else if (n_sink >= 2) inv.flag = CoexistenceFlag::multi_sink;
    else if (n_strange >= 2) inv.flag = CoexistenceFlag::two_strange;
    else if (n_sink + n_strange >= 1) inv.flag = CoexistenceFlag::single;
    else inv.flag = CoexistenceFlag::empty;
    return inv;
}

Vec2 cell_params(const ScanConfig& cfg, int i, int j) {
    double a = cfg.window.a_lo + (cfg.window.a_hi - cfg.window.a_lo) * (i + 0.5) / cfg.na;
    double b = cfg.window.b_lo + (cfg.window.b_hi - cfg.window.b_lo) * (j + 0.5) / cfg.nb;
    return {a, b};
}

std::vector<Vec2> cell_seeds(const ScanConfig& cfg, int i, int j) {
    std::uint64_t state = mix_seed(cfg.seed, static_cast<std::uint64_t>(i),
                                   static_cast<std::uint64_t>(j));
    auto next_unit = [&state]() {
        state = splitmix64(state);
        return static_cast<double>(state >> 11) * 0x1.0p-53;
    };
    std::vector<Vec2> seeds;
    seeds.reserve(cfg.seeds_per_cell);
    for (int s = 0; s < cfg.seeds_per_cell; ++s) {
        double x = -1.2 + 2.4 * next_unit();
        double y = -0.45 + 0.9 * next_unit();
        seeds.emplace_back(x, y);
    }
    return seeds;
}

std::vector<CellResult> coexistence_scan(const ScanConfig& cfg, const std::vector<char>* skip) {
    const int total = cfg.na * cfg.nb;
    std::vector<CellResult> results(total);
    std::atomic<int> next{0};
    int threads = cfg.threads > 0 ? cfg.threads
                                  : static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, threads);
    auto worker = [&]() {
        for (;;) {
            int idx = next.fetch_add(1);
            if (idx >= total) return;
            int i = idx / cfg.nb, j = idx % cfg.nb;
            CellResult& r = results[idx];
            r.i = i;
            r.j = j;
            if (skip && (*skip)[idx]) continue;
            Vec2 ab = cell_params(cfg, i, j);
            MapParams p(ab.x(), ab.y());
            r.inventory = attractor_inventory(p, cell_seeds(cfg, i, j), cfg.classify);
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    return results;
}

}  // namespace henon::attractors
