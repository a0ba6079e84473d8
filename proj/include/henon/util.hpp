#pragma once

#include "henon/map.hpp"

#include <cstdint>
#include <cstdio>
#include <string>
#include <unordered_map>
#include <vector>

namespace henon {

struct LinearFit {
    double slope = 0, intercept = 0, r2 = 0;
    int n = 0;
};

/// Ordinary least squares y = slope*x + intercept with R^2.
LinearFit fit_linear(const std::vector<double>& xs, const std::vector<double>& ys);

/// Deterministic 64-bit mix; used to derive per-cell RNG substreams.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t i, std::uint64_t j) {
    return splitmix64(splitmix64(splitmix64(seed) ^ i) ^ (j * 0x9e3779b97f4a7c15ULL));
}

/// Uniform hash grid over 2D points for nearest-neighbour style queries.
class PointGrid {
public:
    PointGrid(const std::vector<Vec2>& pts, double cell);
    /// Distance from q to the nearest stored point (expanding ring search).
    double nearest_distance(const Vec2& q) const;

private:
    double cell_;
    std::unordered_map<std::uint64_t, std::vector<int>> bins_;
    const std::vector<Vec2>* pts_;
    static std::uint64_t key(long ix, long iy) {
        return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(ix)) << 32) |
               static_cast<std::uint32_t>(iy);
    }
};

/// Stable shortest-round-trip formatting (%.17g) so equal runs emit equal bytes.
std::string fmt_double(double v);

/// max over A of dist(a, B-point-set) using a hash grid; one-sided.
double directed_hausdorff(const std::vector<Vec2>& from, const std::vector<Vec2>& to,
                          double cell = 0.01);

}  // namespace henon
