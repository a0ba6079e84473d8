#include "henon/quad1d.hpp"

#include "henon/util.hpp"

#include <algorithm>
#include <deque>

namespace henon::quad1d {

namespace {

double iterate_q(double a, int n, double x0 = 0.0) {
    double x = x0;
    for (int j = 0; j < n; ++j) x = 1.0 - a * x * x;
    return x;
}

}  // namespace

PartitionIndex partition_index(double x, double delta) {
    if (x == 0.0) throw std::domain_error("partition_index: x = 0 is degenerate");
    double ax = std::abs(x);
    if (ax >= delta) throw std::domain_error("partition_index: |x| >= delta, not a return");
    int r = static_cast<int>(std::ceil(-std::log(ax)));
    // Land |x| strictly inside (e^{-r}, e^{-r+1}); exact powers go to the next cell.
    if (ax <= std::exp(-static_cast<double>(r))) ++r;
    double lo = std::exp(-static_cast<double>(r));
    double hi = std::exp(-static_cast<double>(r - 1));
    double w = (hi - lo) / (r * r);
    int ell = static_cast<int>((ax - lo) / w);
    ell = std::clamp(ell, 0, r * r - 1);
    return {x > 0 ? r : -r, ell};
}

CellBounds cell_bounds(const PartitionIndex& idx) {
    int r = std::abs(idx.r);
    double lo = std::exp(-static_cast<double>(r));
    double hi = std::exp(-static_cast<double>(r - 1));
    double w = (hi - lo) / (r * r);
    double clo = lo + idx.ell * w;
    double chi = clo + w;
    if (idx.r > 0) return {clo, chi};
    return {-chi, -clo};
}

BoundPeriodResult bound_period_1d(double a, int n, double beta, double delta, int horizon) {
    std::vector<double> xi = critical_orbit_1d<double>(a, n);
    if (std::abs(xi[n]) >= delta)
        throw std::domain_error("bound_period_1d: time n is not a return");
    double u = xi[n];  // shadowing orbit, from the return point
    double v = 0.0;    // critical orbit, from the critical point
    int p = 0;
    for (int j = 1; j <= horizon; ++j) {
        u = 1.0 - a * u * u;
        v = 1.0 - a * v * v;
        if (std::abs(u - v) > std::exp(-beta * j)) break;
        p = j;
    }
    return {p, p == horizon};
}

ReturnKind classify_return(double lo, double hi, double delta) {
    if (lo > hi) std::swap(lo, hi);
    double len = hi - lo;
    if (len >= 0.1) return ReturnKind::escape;
    if (hi <= -delta || lo >= delta)
        throw std::domain_error("classify_return: image misses (-delta,delta) and is short");
    // Essential iff some full cell I_{r,ell} fits inside [lo,hi].
    auto side_has_full_cell = [&](double u, double v) {
        // [u,v] subset of (0, delta); look for a fully contained cell.
        if (v <= 0) return false;
        if (u <= 0) return true;  // reaches 0: contains whole cells of every deep r
        v = std::min(v, delta);
        if (u >= v) return false;
        int r_hi = partition_index(std::min(v, std::nexttoward(delta, 0.0)), delta).r;
        int r_lo_raw = static_cast<int>(std::ceil(-std::log(u)));
        for (int r = r_hi; r <= r_lo_raw + 1 && r <= r_hi + 64; ++r) {
            double clo = std::exp(-static_cast<double>(r));
            double chi = std::exp(-static_cast<double>(r - 1));
            double w = (chi - clo) / (r * r);
            double first = std::max(u, clo);
            int k = static_cast<int>(std::ceil((first - clo) / w - 1e-12));
            if (k < 0) k = 0;
            if (k > r * r - 1) continue;
            double cello = clo + k * w;
            double cellhi = cello + w;
            if (cello >= u - 1e-18 && cellhi <= std::min(v, chi) + 1e-18) return true;
        }
        return false;
    };
    if (side_has_full_cell(lo, hi)) return ReturnKind::essential;
    if (side_has_full_cell(-hi, -lo)) return ReturnKind::essential;
    return ReturnKind::inessential;
}

double derivative_log_1d(double a, double x0, int n) {
    double x = x0, acc = 0.0;
    for (int j = 0; j < n; ++j) {
        acc += std::log(std::abs(-2.0 * a * x));
        x = 1.0 - a * x * x;
    }
    return acc;
}

namespace {

struct Element {
    double lo, hi;
    int depth = 0;
    std::vector<int> itin;
    int bound_until = 0;   // returns at n <= bound_until are bound
    int escape_time = -1;  // first time the image length reached 1/10

    double length() const { return hi - lo; }
};

struct ImageSample {
    std::vector<double> a, x;  // xi_n(a) at the sampled parameters, a ascending
};

ImageSample sample_image(const Element& e, int n, int samples) {
    ImageSample s;
    s.a.resize(samples);
    s.x.resize(samples);
    for (int i = 0; i < samples; ++i) {
        double t = samples == 1 ? 0.5 : static_cast<double>(i) / (samples - 1);
        s.a[i] = e.lo + (e.hi - e.lo) * t;
        s.x[i] = iterate_q(s.a[i], n);
    }
    return s;
}

// Index of an interior extremum breaking monotonicity, or -1 when monotone.
// Direction flips of roundoff size are not folds.
int fold_index(const ImageSample& s) {
    int n = static_cast<int>(s.x.size());
    double span = 0;
    for (int i = 1; i < n; ++i) span = std::max(span, std::abs(s.x[i] - s.x[0]));
    double noise = std::max(1e-14, 1e-12 * span);
    int dir = 0;
    for (int i = 1; i < n; ++i) {
        double d = s.x[i] - s.x[i - 1];
        if (std::abs(d) <= noise) continue;
        int nd = d > 0 ? 1 : -1;
        if (dir == 0) dir = nd;
        else if (nd != dir) return i - 1;
    }
    return -1;
}

// Ternary search for the interior extremum of a -> xi_n(a) so the element can
// be split exactly there; children are then monotone and do not re-split.
double refine_extremum(double alo, double ahi, int n, bool maximize) {
    for (int it = 0; it < 200; ++it) {
        double m1 = alo + (ahi - alo) / 3.0;
        double m2 = ahi - (ahi - alo) / 3.0;
        if (m1 >= m2) break;
        double f1 = iterate_q(m1, n), f2 = iterate_q(m2, n);
        if ((f1 < f2) == maximize) alo = m1;
        else ahi = m2;
    }
    return 0.5 * (alo + ahi);
}

// Solve xi_n(a) = target inside [alo, ahi] where the map is monotone.
double solve_preimage(double alo, double ahi, int n, double target) {
    double flo = iterate_q(alo, n) - target;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (alo + ahi);
        if (mid == alo || mid == ahi) break;
        double fm = iterate_q(mid, n) - target;
        if ((fm <= 0) == (flo <= 0)) {
            alo = mid;
            flo = fm;
        } else {
            ahi = mid;
        }
    }
    return 0.5 * (alo + ahi);
}

// Worst-pair bound period over the sampled endpoints and midpoint of omega.
int interval_bound_period(const Element& e, int n, double beta, int horizon) {
    const double as[3] = {e.lo, 0.5 * (e.lo + e.hi), e.hi};
    int p = horizon;
    for (double a : as) {
        for (double ap : as) {
            double u = iterate_q(a, n);
            double v = 0.0;
            int pj = 0;
            for (int j = 1; j <= horizon; ++j) {
                u = 1.0 - a * u * u;
                v = 1.0 - ap * v * v;
                if (std::abs(u - v) > std::exp(-beta * j)) break;
                pj = j;
            }
            p = std::min(p, pj);
        }
    }
    return p;
}

}  // namespace

BcResult bc_induction(const ParamInterval& omega0, const BcConfig& cfg) {
    if (!(omega0.lo < omega0.hi))
        throw std::invalid_argument("bc_induction: empty interval");
    if (!(omega0.lo > 0.0 && omega0.hi <= 2.0))
        throw std::invalid_argument("bc_induction: omega0 must lie in (0,2]");

    BcResult res;
    res.report.initial_measure = omega0.length();

    std::deque<Element> active;
    active.push_back({omega0.lo, omega0.hi, 0, omega0.itinerary, 0, -1});
    // Elements in an escape situation hand off to the next construction stage
    // after one re-partitioning pass; their side pieces settle here.
    std::vector<Element> settled;

    bool had_first_return = false;

    for (int n = 1; n <= cfg.n_max; ++n) {
        std::deque<Element> next;
        while (!active.empty()) {
            Element e = std::move(active.front());
            active.pop_front();

            ImageSample s = sample_image(e, n, cfg.samples);
            int fi = fold_index(s);
            if (fi >= 0 && e.hi - e.lo > cfg.min_width) {
                if (!had_first_return)
                    throw std::invalid_argument(
                        "bc_induction: image folds before the first return; subdivide omega0");
                bool maximize = fi + 1 < static_cast<int>(s.x.size())
                                    ? s.x[fi] > s.x[fi + 1]
                                    : true;
                double blo = s.a[fi >= 1 ? fi - 1 : 0];
                double bhi = s.a[std::min<size_t>(fi + 1, s.a.size() - 1)];
                double split = refine_extremum(blo, bhi, n, maximize);
                if (split <= e.lo || split >= e.hi) split = 0.5 * (e.lo + e.hi);
                Element left = e, right = e;
                left.hi = split;
                right.lo = split;
                active.push_front(right);
                active.push_front(left);
                continue;
            }

            double img_lo = *std::min_element(s.x.begin(), s.x.end());
            double img_hi = *std::max_element(s.x.begin(), s.x.end());
            double len = img_hi - img_lo;

            if (e.escape_time < 0 && len >= 0.1) e.escape_time = n;

            bool in_window = img_lo < cfg.delta && img_hi > -cfg.delta;
            if (n <= e.bound_until || !in_window) {
                next.push_back(std::move(e));
                continue;
            }
            had_first_return = true;

            ReturnKind kind = classify_return(img_lo, img_hi, cfg.delta);

            if (kind == ReturnKind::inessential) {
                double mid = iterate_q(0.5 * (e.lo + e.hi), n);
                ReturnEvent ev;
                ev.time = n;
                ev.kind = kind;
                if (std::abs(mid) > 0 && std::abs(mid) < cfg.delta)
                    ev.index = partition_index(mid, cfg.delta);
                ev.bound_period = interval_bound_period(e, n, cfg.beta, cfg.bound_horizon);
                e.bound_until = n + ev.bound_period;
                e.depth += 1;
                e.itin.push_back(std::abs(ev.index.r));
                res.returns.push_back(ev);
                next.push_back(std::move(e));
                continue;
            }

            // Essential return: the basic-assumption zone is cut before the
            // window part is re-partitioned. Escape return: the element is in
            // an escape situation, which restarts the construction cycle; the
            // window part is re-partitioned with no deletion.
            const bool do_ba = kind == ReturnKind::essential;
            double ba = std::exp(-cfg.alpha * n);
            double zone = do_ba ? std::min(ba, cfg.delta) : 0.0;
            bool increasing = s.x.back() >= s.x.front();
            auto value_at = [&](double aa) { return iterate_q(aa, n); };

            // Breakpoints in x-space: window edges, the BA zone, and the I_r
            // boundaries (children are carved at I_r granularity; partition
            // cells below e^{-r_cap} coalesce into the core piece).
            const int r_cap = r_delta(cfg.delta) + 5;
            std::vector<double> xcuts;
            auto add_cut = [&](double x) {
                if (x > img_lo && x < img_hi) xcuts.push_back(x);
            };
            add_cut(-cfg.delta);
            add_cut(cfg.delta);
            if (do_ba) {
                add_cut(-zone);
                add_cut(zone);
            }
            for (int r = r_delta(cfg.delta); r <= r_cap; ++r) {
                double edge = std::exp(-static_cast<double>(r));
                if (edge < zone) break;
                add_cut(edge);
                add_cut(-edge);
            }
            std::sort(xcuts.begin(), xcuts.end());
            xcuts.erase(std::unique(xcuts.begin(), xcuts.end()), xcuts.end());
            if (!increasing) std::reverse(xcuts.begin(), xcuts.end());

            // Parameter-space breakpoints, ascending in a.
            std::vector<double> acuts{e.lo};
            for (double xc : xcuts) acuts.push_back(solve_preimage(e.lo, e.hi, n, xc));
            acuts.push_back(e.hi);
            std::sort(acuts.begin(), acuts.end());

            ReturnEvent ev;
            ev.time = n;
            ev.kind = kind;
            bool event_recorded = false;

            for (size_t i = 0; i + 1 < acuts.size(); ++i) {
                Element child = e;
                child.lo = acuts[i];
                child.hi = acuts[i + 1];
                if (child.length() <= 0) continue;
                double xm = value_at(0.5 * (child.lo + child.hi));
                if (do_ba && std::abs(xm) < zone) {
                    res.report.deleted_measure += child.length();
                    res.deletions.push_back({child.lo, child.hi, n, ba});
                    continue;
                }
                if (std::abs(xm) < cfg.delta && std::abs(xm) > 0) {
                    // Surviving window piece: a fresh partition element of the
                    // new cycle. Bind it and restart its escape clock.
                    child.depth += 1;
                    PartitionIndex pi = partition_index(xm, cfg.delta);
                    child.itin.push_back(std::abs(pi.r));
                    child.bound_until =
                        n + interval_bound_period(child, n, cfg.beta, cfg.bound_horizon);
                    child.escape_time = -1;
                    if (!event_recorded) {
                        ev.index = pi;
                        ev.bound_period = child.bound_until - n;
                        event_recorded = true;
                    }
                    next.push_back(std::move(child));
                } else if (kind == ReturnKind::escape) {
                    // Side piece of an escape-situation handoff: settled.
                    settled.push_back(std::move(child));
                } else {
                    next.push_back(std::move(child));
                }
            }
            if (!event_recorded) {
                double probe = std::min(std::abs(img_lo), std::abs(img_hi));
                if (probe < cfg.delta && probe > 0) ev.index = partition_index(probe, cfg.delta);
                ev.bound_period = 0;
            }
            res.returns.push_back(ev);

            if (static_cast<int>(next.size() + settled.size()) > cfg.max_elements)
                throw std::runtime_error("bc_induction: element budget exceeded");
        }
        active = std::move(next);
    }

    for (const Element& e : settled) active.push_back(e);
    for (const Element& e : active) {
        res.report.surviving_measure += e.length();
        if (e.escape_time >= 0)
            res.report.escape_histogram[e.escape_time] += e.length();
        else
            res.report.never_escaped_measure += e.length();
        ParamInterval pi;
        pi.lo = e.lo;
        pi.hi = e.hi;
        pi.depth = e.depth;
        pi.itinerary = e.itin;
        res.survivors.push_back(std::move(pi));
    }

    // Tail fit on the survival function of the escape time, over escaped mass.
    double escaped_total = 0;
    for (auto& [t, m] : res.report.escape_histogram) escaped_total += m;
    std::vector<double> ts, logs;
    double tail = escaped_total;
    for (auto& [t, m] : res.report.escape_histogram) {
        if (tail > 0) {
            ts.push_back(t);
            logs.push_back(std::log(tail));
        }
        tail -= m;
    }
    LinearFit fit = fit_linear(ts, logs);
    res.report.tail_fit_gamma = -fit.slope;
    res.report.tail_fit_r2 = fit.r2;
    return res;
}

EscapeTimeResult escape_time(const ParamInterval& omega, const BcConfig& cfg) {
    Element e{omega.lo, omega.hi, omega.depth, omega.itinerary, 0, -1};
    for (int n = 1; n <= cfg.n_max; ++n) {
        ImageSample s = sample_image(e, n, cfg.samples);
        double len = *std::max_element(s.x.begin(), s.x.end()) -
                     *std::min_element(s.x.begin(), s.x.end());
        if (len >= 0.1) return {n, false};
    }
    return {cfg.n_max, true};
}

}  // namespace henon::quad1d
