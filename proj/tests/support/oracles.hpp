#pragma once

// Brute-force reference implementations used only by tests. They follow the
// textbook definitions directly and share no code path with the library
// beyond the data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "agbmap/compositing.hpp"
#include "agbmap/cube.hpp"
#include "agbmap/raster.hpp"
#include "agbmap/rng.hpp"

namespace oracle {

using agbmap::Grid;
using agbmap::Raster;

inline Raster random_raster(const Grid& grid, std::size_t n_channels, agbmap::Rng& rng, double invalid_fraction = 0.0) {
    std::vector<agbmap::ChannelId> ids;
    for (std::size_t c = 0; c < n_channels; ++c) ids.push_back({agbmap::Modality::S2, "R" + std::to_string(c)});
    const std::size_t n = grid.pixel_count();
    std::vector<double> data(n * n_channels);
    for (auto& v : data) v = rng.uniform(-5.0, 5.0);
    std::vector<std::uint8_t> valid(n);
    for (auto& v : valid) v = rng.uniform() >= invalid_fraction ? 1 : 0;
    return Raster(grid, ids, std::move(data), std::move(valid));
}

struct BlendResult {
    bool valid = false;
    std::vector<double> values;
    double lo = 0, hi = 0;  // range of contributing source values, channel 0
};

/// Per-pixel 4-neighbour bilinear blend: map the target centre to world
/// coordinates, then into source pixel space, then weight the four
/// surrounding source centres, renormalising over valid ones.
inline BlendResult bilinear_pixel(const Raster& src, const Grid& target, int row, int col) {
    const Grid& s = src.grid();
    const double x = target.origin_x + (col + 0.5) * target.pixel_size_x;
    const double y = target.north_up ? target.origin_y - (row + 0.5) * target.pixel_size_y
                                     : target.origin_y + (row + 0.5) * target.pixel_size_y;
    const double fc = (x - s.origin_x) / s.pixel_size_x - 0.5;
    const double fr = (s.north_up ? s.origin_y - y : y - s.origin_y) / s.pixel_size_y - 0.5;
    const int c0 = static_cast<int>(std::floor(fc));
    const int r0 = static_cast<int>(std::floor(fr));
    const double tx = fc - c0, ty = fr - r0;
    BlendResult out;
    out.values.assign(src.n_channels(), 0.0);
    out.lo = std::numeric_limits<double>::infinity();
    out.hi = -out.lo;
    double wsum = 0.0;
    for (int dr = 0; dr <= 1; ++dr) {
        for (int dc = 0; dc <= 1; ++dc) {
            const double w = (dc ? tx : 1 - tx) * (dr ? ty : 1 - ty);
            const int rr = r0 + dr, cc = c0 + dc;
            if (w <= 0 || rr < 0 || cc < 0 || rr >= s.height || cc >= s.width || !src.valid(rr, cc)) continue;
            wsum += w;
            for (std::size_t ch = 0; ch < src.n_channels(); ++ch) out.values[ch] += w * src.value(ch, rr, cc);
            out.lo = std::min(out.lo, src.value(0, rr, cc));
            out.hi = std::max(out.hi, src.value(0, rr, cc));
        }
    }
    if (wsum < 0.5) return out;
    out.valid = true;
    for (auto& v : out.values) v /= wsum;
    return out;
}

/// Usable observations at one pixel/channel, collected by walking the series.
inline std::vector<double> usable_values(const agbmap::SceneSeries& series, std::size_t pixel, std::size_t channel,
                                         const agbmap::DateWindow* window) {
    std::vector<double> vals;
    for (std::size_t s = 0; s < series.size(); ++s) {
        if (window && !(window->first <= series.timestamps()[s] && series.timestamps()[s] <= window->last)) continue;
        if (!series.scenes()[s].valid(pixel)) continue;
        if (series.has_scl()) {
            const auto& scl = series.scl()[s];
            if (!scl.valid(pixel)) continue;
            const int code = static_cast<int>(scl.plane(0)[pixel]);
            bool cloudy = false;
            for (int bad : {0, 1, 3, 8, 9, 10, 11}) cloudy = cloudy || code == bad;
            if (cloudy) continue;
        }
        vals.push_back(series.scenes()[s].plane(channel)[pixel]);
    }
    return vals;
}

inline bool median_oracle(const agbmap::SceneSeries& series, std::size_t pixel, std::size_t channel, double& out) {
    auto vals = usable_values(series, pixel, channel, nullptr);
    if (vals.empty()) return false;
    // selection sort, to stay clear of the library's std::sort call
    for (std::size_t i = 0; i < vals.size(); ++i) {
        for (std::size_t j = i + 1; j < vals.size(); ++j) {
            if (vals[j] < vals[i]) std::swap(vals[i], vals[j]);
        }
    }
    const std::size_t k = vals.size();
    out = k % 2 ? vals[k / 2] : (vals[k / 2 - 1] + vals[k / 2]) / 2.0;
    return true;
}

inline bool mean_oracle(const agbmap::SceneSeries& series, std::size_t pixel, std::size_t channel,
                        const agbmap::DateWindow& window, double& out) {
    auto vals = usable_values(series, pixel, channel, &window);
    if (vals.empty()) return false;
    for (std::size_t i = 0; i < vals.size(); ++i) {
        for (std::size_t j = i + 1; j < vals.size(); ++j) {
            if (vals[j] < vals[i]) std::swap(vals[i], vals[j]);
        }
    }
    double sum = 0.0;
    for (double v : vals) sum += v;
    out = sum / static_cast<double>(vals.size());
    return true;
}

struct MatchOracle {
    std::vector<double> value;
    std::vector<std::uint8_t> mask;
    std::size_t assigned = 0;
};

/// Loops cells x footprints and tests containment with the cell's own bounds.
inline MatchOracle match_oracle(const agbmap::FootprintSet& fps, const Grid& g) {
    MatchOracle o;
    o.value.assign(g.pixel_count(), std::numeric_limits<double>::quiet_NaN());
    o.mask.assign(g.pixel_count(), 0);
    std::vector<std::uint8_t> used(fps.footprints.size(), 0);
    for (int r = 0; r < g.height; ++r) {
        const double top = g.origin_y - r * g.pixel_size_y;
        const double bottom = g.origin_y - (r + 1) * g.pixel_size_y;
        for (int c = 0; c < g.width; ++c) {
            const double left = g.origin_x + c * g.pixel_size_x;
            const double right = g.origin_x + (c + 1) * g.pixel_size_x;
            double sum = 0.0;
            int count = 0;
            for (std::size_t i = 0; i < fps.footprints.size(); ++i) {
                const auto& f = fps.footprints[i];
                if (!f.quality) continue;
                if (f.x >= left && f.x < right && f.y <= top && f.y > bottom) {
                    sum += f.agb;
                    ++count;
                    used[i] = 1;
                }
            }
            if (count) {
                const std::size_t p = static_cast<std::size_t>(r) * g.width + c;
                o.value[p] = sum / count;
                o.mask[p] = 1;
            }
        }
    }
    for (auto u : used) o.assigned += u;
    return o;
}

inline double masked_rmse_loop(const std::vector<double>& pred, const std::vector<double>& target,
                               const std::vector<std::uint8_t>& mask) {
    double ss = 0.0;
    int n = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (!mask[i]) continue;
        ss += (pred[i] - target[i]) * (pred[i] - target[i]);
        ++n;
    }
    return std::sqrt(ss / n);
}

/// Linear-interpolation quantile on a sorted copy.
inline double quantile_sorted(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace oracle
