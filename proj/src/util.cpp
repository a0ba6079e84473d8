#include "henon/util.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace henon {

LinearFit fit_linear(const std::vector<double>& xs, const std::vector<double>& ys) {
    LinearFit f;
    f.n = static_cast<int>(xs.size());
    if (xs.size() != ys.size() || xs.size() < 2) return f;
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
        syy += ys[i] * ys[i];
    }
    double n = static_cast<double>(xs.size());
    double den = n * sxx - sx * sx;
    if (den == 0) return f;
    f.slope = (n * sxy - sx * sy) / den;
    f.intercept = (sy - f.slope * sx) / n;
    double ss_tot = syy - sy * sy / n;
    double ss_res = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
        double r = ys[i] - (f.slope * xs[i] + f.intercept);
        ss_res += r * r;
    }
    f.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
    return f;
}

PointGrid::PointGrid(const std::vector<Vec2>& pts, double cell) : cell_(cell), pts_(&pts) {
    bins_.reserve(pts.size());
    for (int i = 0; i < static_cast<int>(pts.size()); ++i) {
        long ix = static_cast<long>(std::floor(pts[i].x() / cell_));
        long iy = static_cast<long>(std::floor(pts[i].y() / cell_));
        bins_[key(ix, iy)].push_back(i);
    }
}

double PointGrid::nearest_distance(const Vec2& q) const {
    long cx = static_cast<long>(std::floor(q.x() / cell_));
    long cy = static_cast<long>(std::floor(q.y() / cell_));
    double best = std::numeric_limits<double>::infinity();
    for (int ring = 0; ring < 1024; ++ring) {
        bool any = false;
        for (long ix = cx - ring; ix <= cx + ring; ++ix) {
            for (long iy = cy - ring; iy <= cy + ring; ++iy) {
                if (std::max(std::labs(ix - cx), std::labs(iy - cy)) != ring) continue;
                auto it = bins_.find(key(ix, iy));
                if (it == bins_.end()) continue;
                any = true;
                for (int i : it->second)
                    best = std::min(best, ((*pts_)[i] - q).norm());
            }
        }
        // Once a candidate exists, one more ring guarantees correctness.
        if (std::isfinite(best) && ring >= 1 && best <= cell_ * (ring - 1)) break;
        if (std::isfinite(best) && any && best <= cell_ * ring) break;
    }
    return best;
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double directed_hausdorff(const std::vector<Vec2>& from, const std::vector<Vec2>& to,
                          double cell) {
    PointGrid grid(to, cell);
    double worst = 0;
    for (const Vec2& q : from) worst = std::max(worst, grid.nearest_distance(q));
    return worst;
}

}  // namespace henon
