#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace agbmap {

enum class Modality { S1, S2, SIF, TARGET, SCL, ZONE };

std::string_view modality_name(Modality m) noexcept;
std::optional<Modality> parse_modality(std::string_view name) noexcept;

struct ChannelId {
    Modality modality = Modality::S2;
    std::string band;

    /// "S2:B08" form, used in file metadata.
    std::string str() const;
    static ChannelId parse(std::string_view text);

    friend bool operator==(const ChannelId&, const ChannelId&) = default;
    friend auto operator<=>(const ChannelId&, const ChannelId&) = default;
};

/// Sentinel-1 polarizations in canonical order.
const std::vector<ChannelId>& s1_channels();
/// The 12 Sentinel-2 surface-reflectance bands in canonical order (B10 excluded).
const std::vector<ChannelId>& s2_channels();
const ChannelId& gpp_channel();
const ChannelId& agb_channel();
const ChannelId& scl_channel();
const ChannelId& zone_channel();

/// North-up affine grid. Pixel sizes are positive magnitudes; `north_up`
/// says whether y decreases as the row index grows (the usual case).
struct Grid {
    double origin_x = 0.0;  // upper-left corner
    double origin_y = 0.0;
    double pixel_size_x = 30.0;
    double pixel_size_y = 30.0;
    bool north_up = true;
    int width = 1;
    int height = 1;
    std::string crs_id;

    void validate() const;
    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }

    friend bool operator==(const Grid&, const Grid&) = default;
};

/// Same CRS, same pixel sizes and orientation, origins an integer number of pixels apart.
bool aligned(const Grid& a, const Grid& b);
/// Aligned with identical origin and extent.
bool same_footprint(const Grid& a, const Grid& b);

struct PixelCoord {
    double col = 0.0;
    double row = 0.0;
};

struct MapCoord {
    double x = 0.0;
    double y = 0.0;
};

/// (0, 0) is the centre of the upper-left pixel.
PixelCoord world_to_pixel(const Grid& grid, double x, double y);
MapCoord pixel_to_world(const Grid& grid, double col, double row);

/// Immutable multi-channel raster with a single per-pixel validity mask.
/// Values are stored band-sequential: channel, then row, then column.
/// Invalid pixels hold NaN in every channel.
class Raster {
public:
    Raster() = default;
    Raster(Grid grid, std::vector<ChannelId> channels, std::vector<double> data, std::vector<std::uint8_t> valid);

    const Grid& grid() const noexcept { return grid_; }
    const std::vector<ChannelId>& channels() const noexcept { return channels_; }
    std::size_t n_channels() const noexcept { return channels_.size(); }
    int width() const noexcept { return grid_.width; }
    int height() const noexcept { return grid_.height; }
    std::size_t pixel_count() const noexcept { return grid_.pixel_count(); }

    double value(std::size_t channel, int row, int col) const {
        return data_[channel * pixel_count() + static_cast<std::size_t>(row) * grid_.width + col];
    }
    bool valid(int row, int col) const { return valid_[static_cast<std::size_t>(row) * grid_.width + col] != 0; }
    bool valid(std::size_t pixel) const { return valid_[pixel] != 0; }

    std::span<const double> plane(std::size_t channel) const {
        return {data_.data() + channel * pixel_count(), pixel_count()};
    }
    std::span<const double> data() const noexcept { return data_; }
    const std::vector<std::uint8_t>& valid_mask() const noexcept { return valid_; }
    std::size_t valid_count() const;

    std::optional<std::size_t> find_channel(const ChannelId& id) const;
    /// New raster holding only `ids`, in that order. Throws MissingModality.
    Raster select(std::span<const ChannelId> ids) const;

private:
    Grid grid_;
    std::vector<ChannelId> channels_;
    std::vector<double> data_;
    std::vector<std::uint8_t> valid_;
};

/// Raster whose channel values all come from one plane; validity from `valid`.
Raster make_single_band(const Grid& grid, ChannelId channel, std::vector<double> values, std::vector<std::uint8_t> valid);
/// Validity inferred from finiteness of `values`.
Raster make_single_band(const Grid& grid, ChannelId channel, std::vector<double> values);

/// Bilinear blend of the four nearest source pixel centres. Invalid or
/// out-of-range neighbours drop out and the remaining weights are
/// renormalised; the output is valid only when at least half the weight survives.
Raster bilinear_resample(const Raster& src, const Grid& target);

struct TileView {
    int row0 = 0;
    int col0 = 0;
    int size = 0;
    bool padded = false;

    friend bool operator==(const TileView&, const TileView&) = default;
};

/// Square windows of `tile_size` placed every `stride` pixels. Windows that
/// run past the raster edge are flagged padded. Ordered row-major by origin.
std::vector<TileView> tile_windows(int width, int height, int tile_size, int stride);
std::vector<TileView> tile(const Raster& raster, int tile_size, int stride);

/// Reflect an out-of-range index back into [0, n) without repeating the edge sample.
int reflect_index(int i, int n) noexcept;

struct TileData {
    TileView view;
    std::size_t n_channels = 0;
    std::vector<double> data;            // channel, row, col over size x size
    std::vector<std::uint8_t> valid;     // validity of the (possibly reflected) source pixel
    std::vector<std::uint8_t> inside;    // true where the window overlaps the raster itself
};

TileData extract_tile(const Raster& raster, const TileView& view);

/// Grid describing the window, padded part included.
Grid tile_grid(const Grid& grid, const TileView& view);

}  // namespace agbmap
