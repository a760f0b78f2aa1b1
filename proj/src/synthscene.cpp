#include "agbmap/synthscene.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "agbmap/error.hpp"
#include "agbmap/rng.hpp"

namespace agbmap {

namespace {

enum Stream : std::uint64_t {
    kAgbField = 1,
    kS2Noise,
    kS1Noise,
    kGppNoise,
    kClouds,
    kFootprints,
    kGppPattern,
    kZones,
    kBurn,
};

struct Bump {
    double col, row, sigma, amp;
};

/// Sum of isotropic Gaussian bumps, evaluated in pixel coordinates.
class BumpField {
public:
    BumpField(int size, std::size_t count, double sigma_lo, double sigma_hi, Rng& rng) {
        for (std::size_t k = 0; k < count; ++k) {
            bumps_.push_back({rng.uniform(-0.1 * size, 1.1 * size), rng.uniform(-0.1 * size, 1.1 * size),
                              rng.uniform(sigma_lo, sigma_hi), rng.uniform(0.2, 1.0)});
        }
    }

    /// Rasterises onto a width x height pixel lattice shifted by (dcol, drow).
    std::vector<double> render(int width, int height, double dcol = 0.0, double drow = 0.0) const {
        std::vector<double> out(static_cast<std::size_t>(width) * height, 0.0);
        for (const auto& b : bumps_) {
            const double reach = 4.0 * b.sigma;
            const int c0 = std::max(0, static_cast<int>(std::floor(b.col - dcol - reach)));
            const int c1 = std::min(width - 1, static_cast<int>(std::ceil(b.col - dcol + reach)));
            const int r0 = std::max(0, static_cast<int>(std::floor(b.row - drow - reach)));
            const int r1 = std::min(height - 1, static_cast<int>(std::ceil(b.row - drow + reach)));
            if (c0 > c1 || r0 > r1) continue;
            const double inv = 1.0 / (2.0 * b.sigma * b.sigma);
            // The kernel is separable, so one exp per column and per row suffices.
            std::vector<double> ex(static_cast<std::size_t>(c1 - c0 + 1));
            for (int c = c0; c <= c1; ++c) {
                const double dx = c + dcol - b.col;
                ex[c - c0] = std::exp(-dx * dx * inv);
            }
            for (int r = r0; r <= r1; ++r) {
                const double dy = r + drow - b.row;
                const double ey = b.amp * std::exp(-dy * dy * inv);
                double* row = out.data() + static_cast<std::size_t>(r) * width;
                for (int c = c0; c <= c1; ++c) row[c] += ey * ex[c - c0];
            }
        }
        return out;
    }

private:
    std::vector<Bump> bumps_;
};

double saturate(double a, double k) { return (1.0 - std::exp(-k * a)) / (1.0 - std::exp(-k)); }

struct BandModel {
    double base, amp, k;
};

// Visible and SWIR reflectance fall with canopy density, NIR rises; all saturate.
constexpr std::array<BandModel, 12> kS2Model{{
    {0.12, -0.05, 2.0},  // B01
    {0.10, -0.05, 2.0},  // B02
    {0.12, -0.05, 2.0},  // B03
    {0.15, -0.11, 3.0},  // B04 red
    {0.18, -0.05, 2.0},  // B05
    {0.20, 0.10, 2.0},   // B06
    {0.22, 0.15, 2.0},   // B07
    {0.22, 0.22, 2.5},   // B08 NIR
    {0.23, 0.20, 2.5},   // B8A
    {0.10, 0.05, 2.0},   // B09
    {0.25, -0.10, 1.5},  // B11
    {0.20, -0.12, 1.5},  // B12
}};

double s1_vv(double a) { return -17.0 + 9.0 * saturate(a, 3.0); }
double s1_vh(double a) { return -24.0 + 10.0 * saturate(a, 2.5); }
double gpp_of(double a) { return 2.0 + 8.0 * a; }

std::size_t bump_count(int size, double area_per_bump) {
    return std::max<std::size_t>(4, static_cast<std::size_t>(std::llround(double(size) * size / area_per_bump)));
}

/// Normalised biomass on the scene grid and, through the same field, on any shifted lattice.
struct AgbField {
    BumpField field;
    double lo = 0.0, hi = 1.0;

    std::vector<double> normalised(int size, double dcol = 0.0, double drow = 0.0) const {
        auto v = field.render(size, size, dcol, drow);
        for (auto& x : v) x = hi > lo ? std::clamp((x - lo) / (hi - lo), 0.0, 1.0) : 0.0;
        return v;
    }
};

AgbField make_agb_field(const SceneParams& p) {
    Rng rng(derive_seed(p.seed, kAgbField));
    AgbField f{BumpField(p.size, bump_count(p.size, 1500.0), 12.0, 40.0, rng)};
    const auto raw = f.field.render(p.size, p.size);
    const auto [mn, mx] = std::minmax_element(raw.begin(), raw.end());
    f.lo = *mn;
    f.hi = *mx;
    return f;
}

std::vector<Date> scene_dates(const SceneParams& p) {
    using namespace std::chrono;
    const sys_days start = std::chrono::year(p.year) / June / 5;
    const int spacing = std::max(1, 85 / std::max(1, p.n_timestamps));
    std::vector<Date> out;
    for (int i = 0; i < p.n_timestamps; ++i) out.emplace_back(start + days(spacing * i));
    return out;
}

/// Exactly round(fraction * n) cloudy pixels per scene, placed where a smooth field is highest.
std::vector<std::uint8_t> cloud_cover(const SceneParams& p, int timestamp, std::vector<double>& intensity) {
    const std::size_t n = static_cast<std::size_t>(p.size) * p.size;
    std::vector<std::uint8_t> cloudy(n, 0);
    intensity.assign(n, 0.0);
    const auto k = static_cast<std::size_t>(std::llround(p.cloud_fraction * static_cast<double>(n)));
    if (k == 0) return cloudy;
    Rng rng(derive_seed(p.seed, kClouds, static_cast<std::uint64_t>(timestamp)));
    const BumpField field(p.size, bump_count(p.size, 400.0), 4.0, 16.0, rng);
    auto v = field.render(p.size, p.size);
    for (auto& x : v) x += 1e-6 * rng.uniform();  // break ties between empty regions
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });
    for (std::size_t i = 0; i < k; ++i) {
        cloudy[order[i]] = 1;
        intensity[order[i]] = 1.0 - static_cast<double>(i) / static_cast<double>(k);
    }
    return cloudy;
}

}  // namespace

void SceneParams::validate() const {
    std::vector<std::string> problems;
    if (size < 1) problems.push_back("size must be >= 1");
    if (!(agb_lo >= 0)) problems.push_back("agb_lo must be >= 0");
    if (!(agb_hi >= agb_lo)) problems.push_back("agb_hi must be >= agb_lo");
    if (!(s2_noise >= 0)) problems.push_back("s2_noise must be >= 0");
    if (!(s1_noise >= 0)) problems.push_back("s1_noise must be >= 0");
    if (!(gpp_noise >= 0)) problems.push_back("gpp_noise must be >= 0");
    if (!(cloud_fraction >= 0 && cloud_fraction <= 1)) problems.push_back("cloud_fraction must lie in [0, 1]");
    if (!(footprint_density > 0)) problems.push_back("footprint_density must be > 0");
    if (!(footprint_noise >= 0)) problems.push_back("footprint_noise must be >= 0");
    if (!(across_track_spacing >= 0)) problems.push_back("across_track_spacing must be >= 0");
    if (n_timestamps < 1 || n_timestamps > 85) problems.push_back("n_timestamps must lie in [1, 85]");
    if (!(pixel_size > 0)) problems.push_back("pixel_size must be > 0");
    if (!problems.empty()) {
        std::ostringstream msg;
        msg << "invalid scene parameters:";
        for (const auto& p : problems) msg << "\n  - " << p;
        throw Error(ErrorCode::InvalidArgument, msg.str());
    }
}

Grid SceneParams::grid() const {
    Grid g;
    g.origin_x = origin_x;
    g.origin_y = origin_y;
    g.pixel_size_x = g.pixel_size_y = pixel_size;
    g.width = g.height = size;
    g.crs_id = crs_id;
    return g;
}

double s2_reflectance(std::size_t band, double a) {
    const auto& m = kS2Model.at(band);
    return m.base + m.amp * saturate(a, m.k);
}

SyntheticScene generate_scene(const SceneParams& p) {
    p.validate();
    const Grid grid = p.grid();
    const std::size_t n = grid.pixel_count();
    const AgbField field = make_agb_field(p);
    const auto a = field.normalised(p.size);

    std::vector<double> agb(n);
    for (std::size_t i = 0; i < n; ++i) agb[i] = p.agb_lo + (p.agb_hi - p.agb_lo) * a[i];
    Raster true_agb = make_single_band(grid, agb_channel(), std::move(agb));

    const auto dates = scene_dates(p);
    const std::vector<std::uint8_t> all_valid(n, 1);

    // Sentinel-2 with clouds and SCL.
    std::vector<Raster> s2_scenes, scl_scenes;
    for (int t = 0; t < p.n_timestamps; ++t) {
        Rng noise(derive_seed(p.seed, kS2Noise, static_cast<std::uint64_t>(t)));
        std::vector<double> intensity;
        const auto cloudy = cloud_cover(p, t, intensity);
        std::vector<double> bands(12 * n);
        std::vector<double> scl(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t b = 0; b < 12; ++b) {
                const double clear = s2_reflectance(b, a[i]) + p.s2_noise * noise.normal();
                bands[b * n + i] = cloudy[i] ? 0.45 + 0.3 * intensity[i] + 0.02 * noise.normal() : clear;
            }
            if (cloudy[i]) {
                scl[i] = intensity[i] > 0.66 ? 9.0 : (intensity[i] > 0.33 ? 8.0 : 10.0);
            } else {
                scl[i] = a[i] > 0.15 ? 4.0 : 5.0;
            }
        }
        s2_scenes.emplace_back(grid, s2_channels(), std::move(bands), all_valid);
        scl_scenes.push_back(make_single_band(grid, scl_channel(), std::move(scl), all_valid));
    }

    // Sentinel-1 sampled on a lattice shifted by half a pixel in both axes.
    Grid s1_grid = grid;
    s1_grid.origin_x += 0.5 * p.pixel_size;
    s1_grid.origin_y -= 0.5 * p.pixel_size;
    const auto a_s1 = field.normalised(p.size, 0.5, 0.5);
    std::vector<Raster> s1_scenes;
    for (int t = 0; t < p.n_timestamps; ++t) {
        Rng noise(derive_seed(p.seed, kS1Noise, static_cast<std::uint64_t>(t)));
        std::vector<double> bands(2 * n);
        for (std::size_t i = 0; i < n; ++i) {
            bands[i] = s1_vv(a_s1[i]) + p.s1_noise * noise.normal();
            bands[n + i] = s1_vh(a_s1[i]) + p.s1_noise * noise.normal();
        }
        s1_scenes.emplace_back(s1_grid, s1_channels(), std::move(bands), all_valid);
    }

    // GPP: informative tracks biomass; otherwise a static pattern unrelated to it.
    std::vector<double> driver(n);
    if (p.gpp_informative) {
        driver = a;
    } else {
        Rng pattern(derive_seed(p.seed, kGppPattern));
        for (auto& v : driver) v = pattern.uniform();
    }
    using namespace std::chrono;
    std::vector<Raster> gpp_scenes;
    std::vector<Date> gpp_dates;
    gpp_dates.emplace_back(std::chrono::year(p.year) / May / 15);
    gpp_dates.insert(gpp_dates.end(), dates.begin(), dates.end());
    for (std::size_t t = 0; t < gpp_dates.size(); ++t) {
        Rng noise(derive_seed(p.seed, kGppNoise, t));
        const double season = t == 0 ? 0.5 : 1.0;
        std::vector<double> v(n);
        for (std::size_t i = 0; i < n; ++i) v[i] = season * gpp_of(driver[i]) + p.gpp_noise * noise.normal();
        gpp_scenes.push_back(make_single_band(grid, gpp_channel(), std::move(v), all_valid));
    }

    return SyntheticScene{std::move(true_agb), SceneSeries(std::move(s2_scenes), dates, std::move(scl_scenes)),
                          SceneSeries(std::move(s1_scenes), dates), SceneSeries(std::move(gpp_scenes), gpp_dates)};
}

TrackLayout track_layout(const SceneParams& p) {
    const double pixels = static_cast<double>(p.size) * p.size;
    const double expected = p.footprint_density * pixels / 1000.0;
    double across = p.across_track_spacing;
    if (across <= 0) across = 10.0 * std::sqrt(1000.0 / (10.0 * p.footprint_density));
    TrackLayout t;
    t.n_tracks = std::max(1, static_cast<int>(std::lround(p.size / across)));
    t.across = static_cast<double>(p.size) / t.n_tracks;
    t.along = static_cast<double>(p.size) * t.n_tracks / expected;
    return t;
}

FootprintSet sample_footprints(const Raster& true_agb, const SceneParams& p) {
    p.validate();
    const Grid& g = true_agb.grid();
    const TrackLayout layout = track_layout(p);
    Rng rng(derive_seed(p.seed, kFootprints));
    FootprintSet out{{}, g.crs_id};
    const double col_offset = rng.uniform(0.0, layout.across);
    for (int k = 0; k < layout.n_tracks; ++k) {
        const double track_col = col_offset + k * layout.across;
        if (track_col >= g.width) break;
        const int col = static_cast<int>(std::floor(track_col));
        double row_pos = rng.uniform(0.0, layout.along);
        for (; row_pos < g.height; row_pos += layout.along) {
            const int row = static_cast<int>(std::floor(row_pos));
            const double fx = rng.uniform(0.05, 0.95);
            const double fy = rng.uniform(0.05, 0.95);
            const MapCoord w = pixel_to_world(g, col - 0.5 + fx, row - 0.5 + fy);
            const double truth = true_agb.value(0, row, col);
            const double agb = std::max(0.0, truth + p.footprint_noise * rng.normal());
            out.footprints.push_back({w.x, w.y, agb, true, "synth-track-" + std::to_string(k)});
        }
    }
    return out;
}

Raster generate_zones(const Grid& grid, std::uint64_t seed, double unclassified_fraction) {
    static constexpr std::array<int, 6> kCodes{4, 7, 9, 14, 25, 26};
    Rng rng(derive_seed(seed, kZones));
    const int size = std::max(grid.width, grid.height);
    const BumpField field(size, bump_count(size, 3000.0), 20.0, 60.0, rng);
    auto v = field.render(grid.width, grid.height);
    std::vector<double> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    // Unequal area shares so the top-N ranking is well defined.
    static constexpr std::array<double, 6> kShares{0.30, 0.22, 0.17, 0.13, 0.10, 0.08};
    std::array<double, 6> cuts{};
    double acc = 0.0;
    for (std::size_t z = 0; z < 6; ++z) {
        acc += kShares[z];
        cuts[z] = sorted[std::min(sorted.size() - 1, static_cast<std::size_t>(acc * static_cast<double>(sorted.size())))];
    }
    std::vector<double> codes(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        std::size_t z = 0;
        while (z < 5 && v[i] > cuts[z]) ++z;
        codes[i] = rng.uniform() < unclassified_fraction ? 0.0 : kCodes[z];
    }
    return make_single_band(grid, zone_channel(), std::move(codes), std::vector<std::uint8_t>(v.size(), 1));
}

BurnScene generate_burn_scene(const BurnParams& bp) {
    const SceneParams& p = bp.scene;
    p.validate();
    const Grid grid = p.grid();
    const std::size_t n = grid.pixel_count();
    const auto a = make_agb_field(p).normalised(p.size);
    Rng rng(derive_seed(p.seed, kBurn));

    const double cx = bp.center_col * p.size, cy = bp.center_row * p.size, radius = bp.radius * p.size;
    BurnScene out;
    out.cell_area_ha = p.pixel_size * p.pixel_size / 10000.0;
    std::vector<double> before(n), after(n), b08b(n), b12b(n), b08a(n), b12a(n);
    for (int r = 0; r < p.size; ++r) {
        for (int c = 0; c < p.size; ++c) {
            const std::size_t i = static_cast<std::size_t>(r) * p.size + c;
            const double d = std::hypot(c + 0.5 - cx, r + 0.5 - cy) / radius;
            // Full severity in the core, tapering to zero at the rim.
            const double severity = d < 0.7 ? 1.0 : (d < 1.0 ? (1.0 - d) / 0.3 : 0.0);
            const double agb = p.agb_lo + (p.agb_hi - p.agb_lo) * a[i];
            const double lost = agb * bp.loss_fraction * severity;
            out.true_loss_mg += lost * out.cell_area_ha;
            before[i] = std::max(0.0, agb + bp.map_noise * rng.normal());
            after[i] = std::max(0.0, agb - lost + bp.map_noise * rng.normal());
            const double nir = s2_reflectance(kNirBand, a[i]);
            const double swir = s2_reflectance(11, a[i]);
            b08b[i] = std::max(0.001, nir + p.s2_noise * rng.normal());
            b12b[i] = std::max(0.001, swir + p.s2_noise * rng.normal());
            b08a[i] = std::max(0.001, (1 - severity) * nir + severity * 0.10 + p.s2_noise * rng.normal());
            b12a[i] = std::max(0.001, (1 - severity) * swir + severity * 0.30 + p.s2_noise * rng.normal());
        }
    }
    out.before_agb = make_single_band(grid, agb_channel(), std::move(before));
    out.after_agb = make_single_band(grid, agb_channel(), std::move(after));
    out.b08_before = make_single_band(grid, {Modality::S2, "B08"}, std::move(b08b));
    out.b12_before = make_single_band(grid, {Modality::S2, "B12"}, std::move(b12b));
    out.b08_after = make_single_band(grid, {Modality::S2, "B08"}, std::move(b08a));
    out.b12_after = make_single_band(grid, {Modality::S2, "B12"}, std::move(b12a));
    return out;
}

}  // namespace agbmap
