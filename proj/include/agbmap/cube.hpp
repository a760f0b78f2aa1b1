#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "agbmap/raster.hpp"

namespace agbmap {

/// One AGB measurement (Mg C/ha) at map coordinates.
struct Footprint {
    double x = 0.0;
    double y = 0.0;
    double agb = 0.0;
    bool quality = true;
    std::string source_id;

    friend bool operator==(const Footprint&, const Footprint&) = default;
};

struct FootprintSet {
    std::vector<Footprint> footprints;
    std::string crs_id;
};

/// CSV with header `x,y,agb,quality,source_id`.
FootprintSet read_footprints_csv(const std::filesystem::path& path, std::string crs_id);
void write_footprints_csv(const std::filesystem::path& path, const FootprintSet& set);

struct MatchResult {
    Raster target;                    // TARGET:AGB, valid where mask is true
    std::vector<std::uint8_t> mask;   // cells that received at least one footprint
    std::size_t n_total = 0;
    std::size_t n_assigned = 0;
    std::size_t n_out_of_bounds = 0;
    std::size_t n_rejected_quality = 0;
};

/// Cell containing (x, y); edges belong to the cell to their right / below.
/// Returns nullopt outside the grid.
std::optional<std::size_t> cell_index(const Grid& grid, double x, double y);

/// Drops quality=false footprints, then averages footprints per containing cell.
MatchResult match_footprints(const FootprintSet& footprints, const Grid& grid);

enum class ModalitySubset { SifS1S2, S1S2, S2Only };

/// "SIF/S1/S2", "S1/S2", "S2-only".
std::string_view subset_name(ModalitySubset subset) noexcept;
/// Accepts the display names plus "full", "sif-s1-s2", "s1-s2", "s2-only", "s2".
ModalitySubset parse_subset(std::string_view text);
const std::vector<ModalitySubset>& all_subsets();
/// Canonical stacking order: S1 VV, VH, the 12 S2 bands, then GPP.
std::vector<ChannelId> subset_channels(ModalitySubset subset);

struct ChannelStats {
    double mean = 0.0;
    double std = 1.0;

    friend bool operator==(const ChannelStats&, const ChannelStats&) = default;
};

struct Datacube {
    Raster inputs;
    Raster target;
    std::vector<std::uint8_t> target_mask;  // supervised: footprint present and inputs valid
    std::vector<ChannelStats> norm_stats;   // empty until normalised
    ModalitySubset subset = ModalitySubset::SifS1S2;

    const Grid& grid() const noexcept { return inputs.grid(); }
    bool normalized() const noexcept { return !norm_stats.empty(); }
    std::size_t supervised_count() const;
};

/// Stacks the subset's channels from `inputs` (any order, any grouping) in
/// canonical order. Throws GridMismatch or MissingModality.
Datacube assemble(std::span<const Raster> inputs, const Raster& target, std::span<const std::uint8_t> mask,
                  ModalitySubset subset);

/// Population mean/std per channel over valid input pixels, optionally
/// restricted to `region`. Throws DegenerateChannel when std < 1e-12.
std::vector<ChannelStats> compute_norm_stats(const Raster& inputs, std::span<const std::uint8_t> region = {});

/// Z-scores the inputs with `stats`, or with stats computed from this cube
/// when none are given. The target is never touched.
Datacube normalize(const Datacube& cube, std::optional<std::span<const ChannelStats>> stats = std::nullopt);
Datacube denormalize(const Datacube& cube);

enum class SplitUnit { Pixel, Tile };

struct SplitSpec {
    double train_fraction = 0.9;
    SplitUnit unit = SplitUnit::Pixel;
    std::uint64_t seed = 0;
    int tile_size = 512;
};

struct CubeSplit {
    SplitUnit unit = SplitUnit::Pixel;
    std::vector<std::uint8_t> train_mask;  // supervised pixels on each side
    std::vector<std::uint8_t> test_mask;
    std::vector<TileView> train_tiles;     // tile unit only
    std::vector<TileView> test_tiles;
};

/// round(fraction * n), kept within [1, n - 1].
std::size_t train_count(std::size_t n_units, double fraction);

/// Seeded partition of supervised pixels, or of tiles holding at least one
/// supervised pixel. Needs at least 10 units.
CubeSplit split(const Datacube& cube, const SplitSpec& spec);

/// Supervised pixels (row-major indices) lying inside the given tiles.
std::vector<std::uint8_t> tile_supervision(const Datacube& cube, std::span<const TileView> tiles);

/// Writes `<path>` (inputs then the target band) plus a `<path>.json` sidecar.
void write_cube(const std::filesystem::path& path, const Datacube& cube, std::optional<std::uint64_t> split_seed = {});
Datacube read_cube(const std::filesystem::path& path);

}  // namespace agbmap
