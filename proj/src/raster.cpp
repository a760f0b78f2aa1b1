#include "agbmap/raster.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <set>

#include "agbmap/error.hpp"

namespace agbmap {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool near_integer(double v, double tol) { return std::abs(v - std::round(v)) <= tol; }

}  // namespace

std::string_view modality_name(Modality m) noexcept {
    switch (m) {
        case Modality::S1: return "S1";
        case Modality::S2: return "S2";
        case Modality::SIF: return "SIF";
        case Modality::TARGET: return "TARGET";
        case Modality::SCL: return "SCL";
        case Modality::ZONE: return "ZONE";
    }
    return "?";
}

std::optional<Modality> parse_modality(std::string_view name) noexcept {
    for (Modality m : {Modality::S1, Modality::S2, Modality::SIF, Modality::TARGET, Modality::SCL, Modality::ZONE}) {
        if (modality_name(m) == name) return m;
    }
    return std::nullopt;
}

std::string ChannelId::str() const { return std::string(modality_name(modality)) + ":" + band; }

ChannelId ChannelId::parse(std::string_view text) {
    const auto colon = text.find(':');
    if (colon == std::string_view::npos) {
        throw Error(ErrorCode::Format, "channel id '" + std::string(text) + "' is not MODALITY:BAND");
    }
    const auto modality = parse_modality(text.substr(0, colon));
    if (!modality) throw Error(ErrorCode::Format, "unknown modality in '" + std::string(text) + "'");
    return {*modality, std::string(text.substr(colon + 1))};
}

const std::vector<ChannelId>& s1_channels() {
    static const std::vector<ChannelId> ids{{Modality::S1, "VV"}, {Modality::S1, "VH"}};
    return ids;
}

const std::vector<ChannelId>& s2_channels() {
    static const std::vector<ChannelId> ids = [] {
        std::vector<ChannelId> out;
        for (const char* b : {"B01", "B02", "B03", "B04", "B05", "B06", "B07", "B08", "B8A", "B09", "B11", "B12"}) {
            out.push_back({Modality::S2, b});
        }
        return out;
    }();
    return ids;
}

const ChannelId& gpp_channel() {
    static const ChannelId id{Modality::SIF, "GPP"};
    return id;
}

const ChannelId& agb_channel() {
    static const ChannelId id{Modality::TARGET, "AGB"};
    return id;
}

const ChannelId& scl_channel() {
    static const ChannelId id{Modality::SCL, "SCL"};
    return id;
}

const ChannelId& zone_channel() {
    static const ChannelId id{Modality::ZONE, "KOPPEN"};
    return id;
}

void Grid::validate() const {
    if (!(pixel_size_x > 0.0) || !(pixel_size_y > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "grid pixel sizes must be positive");
    }
    if (width < 1 || height < 1) throw Error(ErrorCode::InvalidArgument, "grid must be at least 1x1");
    if (!std::isfinite(origin_x) || !std::isfinite(origin_y)) {
        throw Error(ErrorCode::InvalidArgument, "grid origin must be finite");
    }
}

bool aligned(const Grid& a, const Grid& b) {
    if (a.crs_id != b.crs_id || a.north_up != b.north_up) return false;
    if (a.pixel_size_x != b.pixel_size_x || a.pixel_size_y != b.pixel_size_y) return false;
    return near_integer((a.origin_x - b.origin_x) / a.pixel_size_x, 1e-9) &&
           near_integer((a.origin_y - b.origin_y) / a.pixel_size_y, 1e-9);
}

bool same_footprint(const Grid& a, const Grid& b) {
    return aligned(a, b) && a.width == b.width && a.height == b.height &&
           std::abs(a.origin_x - b.origin_x) <= 1e-9 * a.pixel_size_x &&
           std::abs(a.origin_y - b.origin_y) <= 1e-9 * a.pixel_size_y;
}

PixelCoord world_to_pixel(const Grid& grid, double x, double y) {
    const double col = (x - grid.origin_x) / grid.pixel_size_x - 0.5;
    const double dy = grid.north_up ? (grid.origin_y - y) : (y - grid.origin_y);
    return {col, dy / grid.pixel_size_y - 0.5};
}

MapCoord pixel_to_world(const Grid& grid, double col, double row) {
    const double x = grid.origin_x + (col + 0.5) * grid.pixel_size_x;
    const double dy = (row + 0.5) * grid.pixel_size_y;
    return {x, grid.north_up ? grid.origin_y - dy : grid.origin_y + dy};
}

Raster::Raster(Grid grid, std::vector<ChannelId> channels, std::vector<double> data, std::vector<std::uint8_t> valid)
    : grid_(std::move(grid)), channels_(std::move(channels)), data_(std::move(data)), valid_(std::move(valid)) {
    grid_.validate();
    const std::size_t n = grid_.pixel_count();
    if (channels_.empty()) throw Error(ErrorCode::InvalidArgument, "raster needs at least one channel");
    if (data_.size() != n * channels_.size()) {
        throw Error(ErrorCode::ShapeMismatch, "raster data size does not match grid and channel count");
    }
    if (valid_.size() != n) throw Error(ErrorCode::ShapeMismatch, "valid mask size does not match grid");
    std::set<ChannelId> seen(channels_.begin(), channels_.end());
    if (seen.size() != channels_.size()) throw Error(ErrorCode::InvalidArgument, "duplicate channel ids in raster");
    for (std::size_t p = 0; p < n; ++p) {
        if (!valid_[p]) {
            for (std::size_t c = 0; c < channels_.size(); ++c) data_[c * n + p] = kNaN;
            continue;
        }
        valid_[p] = 1;
        for (std::size_t c = 0; c < channels_.size(); ++c) {
            if (!std::isfinite(data_[c * n + p])) {
                throw Error(ErrorCode::InvalidArgument, "non-finite value at a valid pixel of channel " + channels_[c].str());
            }
        }
    }
}

std::size_t Raster::valid_count() const {
    return static_cast<std::size_t>(std::count(valid_.begin(), valid_.end(), std::uint8_t{1}));
}

std::optional<std::size_t> Raster::find_channel(const ChannelId& id) const {
    const auto it = std::find(channels_.begin(), channels_.end(), id);
    if (it == channels_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - channels_.begin());
}

Raster Raster::select(std::span<const ChannelId> ids) const {
    const std::size_t n = pixel_count();
    std::vector<double> out;
    out.reserve(ids.size() * n);
    for (const auto& id : ids) {
        const auto idx = find_channel(id);
        if (!idx) throw Error(ErrorCode::MissingModality, "channel " + id.str() + " not present");
        const auto p = plane(*idx);
        out.insert(out.end(), p.begin(), p.end());
    }
    return Raster(grid_, std::vector<ChannelId>(ids.begin(), ids.end()), std::move(out), valid_);
}

Raster make_single_band(const Grid& grid, ChannelId channel, std::vector<double> values, std::vector<std::uint8_t> valid) {
    return Raster(grid, {std::move(channel)}, std::move(values), std::move(valid));
}

Raster make_single_band(const Grid& grid, ChannelId channel, std::vector<double> values) {
    std::vector<std::uint8_t> valid(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) valid[i] = std::isfinite(values[i]) ? 1 : 0;
    return Raster(grid, {std::move(channel)}, std::move(values), std::move(valid));
}

Raster bilinear_resample(const Raster& src, const Grid& target) {
    target.validate();
    const Grid& sg = src.grid();
    if (sg.crs_id != target.crs_id) {
        throw Error(ErrorCode::CrsMismatch, "source CRS '" + sg.crs_id + "' differs from target '" + target.crs_id + "'");
    }
    if (src.valid_count() == 0) throw Error(ErrorCode::EmptySource, "source raster has no valid pixels");

    // Source fractional index of target pixel centre, composed directly from
    // the two affine maps so that identical grids give exact integers.
    const double sx = target.pixel_size_x / sg.pixel_size_x;
    const double sy = target.pixel_size_y / sg.pixel_size_y;
    const double ox = (target.origin_x - sg.origin_x) / sg.pixel_size_x;
    const double tdir = target.north_up ? -1.0 : 1.0;
    const double sdir = sg.north_up ? -1.0 : 1.0;
    const double oy = (target.origin_y - sg.origin_y) * sdir / sg.pixel_size_y;
    const double yscale = sy * tdir * sdir;

    const std::size_t nc = src.n_channels();
    const std::size_t nt = target.pixel_count();
    std::vector<double> out(nc * nt, kNaN);
    std::vector<std::uint8_t> valid(nt, 0);

    auto snap = [](double v) {
        const double r = std::round(v);
        return std::abs(v - r) < 1e-12 ? r : v;
    };

    for (int r = 0; r < target.height; ++r) {
        const double fr = snap(oy + (r + 0.5) * yscale - 0.5);
        const double r0 = std::floor(fr);
        const double wy = fr - r0;
        for (int c = 0; c < target.width; ++c) {
            const double fc = snap(ox + (c + 0.5) * sx - 0.5);
            const double c0 = std::floor(fc);
            const double wx = fc - c0;
            const std::array<double, 4> w{(1 - wx) * (1 - wy), wx * (1 - wy), (1 - wx) * wy, wx * wy};
            const std::array<double, 4> rr{r0, r0, r0 + 1, r0 + 1};
            const std::array<double, 4> cc{c0, c0 + 1, c0, c0 + 1};
            double wsum = 0.0;
            std::array<long long, 4> idx{-1, -1, -1, -1};
            for (int k = 0; k < 4; ++k) {
                if (w[k] == 0.0) continue;
                if (rr[k] < 0 || cc[k] < 0 || rr[k] >= sg.height || cc[k] >= sg.width) continue;
                const auto ri = static_cast<int>(rr[k]);
                const auto ci = static_cast<int>(cc[k]);
                if (!src.valid(ri, ci)) continue;
                idx[k] = static_cast<long long>(ri) * sg.width + ci;
                wsum += w[k];
            }
            if (wsum < 0.5) continue;
            const std::size_t t = static_cast<std::size_t>(r) * target.width + c;
            valid[t] = 1;
            for (std::size_t ch = 0; ch < nc; ++ch) {
                const auto plane = src.plane(ch);
                double acc = 0.0;
                for (int k = 0; k < 4; ++k) {
                    if (idx[k] >= 0) acc += w[k] * plane[static_cast<std::size_t>(idx[k])];
                }
                out[ch * nt + t] = acc / wsum;
            }
        }
    }
    return Raster(target, src.channels(), std::move(out), std::move(valid));
}

std::vector<TileView> tile_windows(int width, int height, int tile_size, int stride) {
    if (tile_size < 1 || stride < 1) throw Error(ErrorCode::InvalidArgument, "tile_size and stride must be >= 1");
    auto origins = [&](int extent) {
        std::vector<int> out{0};
        while (out.back() + tile_size < extent) out.push_back(out.back() + stride);
        return out;
    };
    std::vector<TileView> tiles;
    for (int r0 : origins(height)) {
        for (int c0 : origins(width)) {
            tiles.push_back({r0, c0, tile_size, r0 + tile_size > height || c0 + tile_size > width});
        }
    }
    return tiles;
}

std::vector<TileView> tile(const Raster& raster, int tile_size, int stride) {
    return tile_windows(raster.width(), raster.height(), tile_size, stride);
}

int reflect_index(int i, int n) noexcept {
    if (n <= 1) return 0;
    const int period = 2 * (n - 1);
    int m = i % period;
    if (m < 0) m += period;
    return m < n ? m : period - m;
}

TileData extract_tile(const Raster& raster, const TileView& view) {
    TileData t;
    t.view = view;
    t.n_channels = raster.n_channels();
    const std::size_t s = static_cast<std::size_t>(view.size);
    t.data.resize(t.n_channels * s * s);
    t.valid.resize(s * s);
    t.inside.resize(s * s);
    for (int r = 0; r < view.size; ++r) {
        const int gr = view.row0 + r;
        const int sr = reflect_index(gr, raster.height());
        for (int c = 0; c < view.size; ++c) {
            const int gc = view.col0 + c;
            const int sc = reflect_index(gc, raster.width());
            const std::size_t k = static_cast<std::size_t>(r) * s + c;
            t.inside[k] = (gr >= 0 && gc >= 0 && gr < raster.height() && gc < raster.width()) ? 1 : 0;
            t.valid[k] = raster.valid(sr, sc) ? 1 : 0;
            for (std::size_t ch = 0; ch < t.n_channels; ++ch) t.data[ch * s * s + k] = raster.value(ch, sr, sc);
        }
    }
    return t;
}

Grid tile_grid(const Grid& grid, const TileView& view) {
    Grid g = grid;
    const MapCoord corner = pixel_to_world(grid, view.col0 - 0.5, view.row0 - 0.5);
    g.origin_x = corner.x;
    g.origin_y = corner.y;
    g.width = view.size;
    g.height = view.size;
    return g;
}

}  // namespace agbmap
