#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "agbmap/compositing.hpp"
#include "agbmap/cube.hpp"
#include "agbmap/raster.hpp"

namespace agbmap {

/// Knobs for a synthetic landscape. Noise levels are standard deviations in
/// each channel's own units: reflectance for S2, dB for S1, gC/m2/day for GPP,
/// Mg C/ha for footprints.
struct SceneParams {
    int size = 256;
    std::uint64_t seed = 0;
    double agb_lo = 5.0;
    double agb_hi = 300.0;
    double s2_noise = 0.02;
    double s1_noise = 1.0;
    double gpp_noise = 0.3;
    bool gpp_informative = true;
    double cloud_fraction = 0.3;
    double footprint_density = 4.0;  // per 1000 pixels
    double footprint_noise = 5.0;
    double across_track_spacing = 0.0;  // cells; 0 derives it from the density at a 1:10 along/across ratio
    int n_timestamps = 5;
    int year = 2021;
    double pixel_size = 30.0;
    double origin_x = 0.0;
    double origin_y = 0.0;
    std::string crs_id = "EPSG:5070";

    /// Throws InvalidArgument listing every violated field.
    void validate() const;
    Grid grid() const;
};

struct SyntheticScene {
    Raster true_agb;
    SceneSeries s2;   // 12 bands, with SCL
    SceneSeries s1;   // VV/VH on a grid offset by half a pixel
    SceneSeries gpp;  // summer scenes plus one spring scene
};

SyntheticScene generate_scene(const SceneParams& params);

/// Parallel north-south ground tracks, footprints at cell-interior points.
FootprintSet sample_footprints(const Raster& true_agb, const SceneParams& params);

/// Along- and across-track spacing (cells) that `sample_footprints` uses.
struct TrackLayout {
    double along = 0.0;
    double across = 0.0;
    int n_tracks = 0;
};
TrackLayout track_layout(const SceneParams& params);

/// Reflectance of S2 band `band` (index into s2_channels()) at normalised
/// biomass a in [0, 1], before noise.
double s2_reflectance(std::size_t band, double a);
/// Index of the near-infrared-role (B08) and red-role (B04) bands.
inline constexpr std::size_t kNirBand = 7;
inline constexpr std::size_t kRedBand = 3;

/// Categorical Koppen-style zone map (codes 4, 7, 9, 14, 25, 26; 0 unclassified).
Raster generate_zones(const Grid& grid, std::uint64_t seed, double unclassified_fraction = 0.02);

struct BurnParams {
    // A forested stand: the burn disk should hold biomass worth losing.
    SceneParams scene = [] {
        SceneParams p;
        p.agb_lo = 80.0;
        return p;
    }();
    double center_col = 0.5;  // fraction of size
    double center_row = 0.5;
    double radius = 0.25;     // fraction of size
    double loss_fraction = 0.8;
    double map_noise = 1.0;   // Mg C/ha, independent on each AGB map
};

struct BurnScene {
    Raster before_agb;
    Raster after_agb;
    Raster b08_before;
    Raster b12_before;
    Raster b08_after;
    Raster b12_after;
    double true_loss_mg = 0.0;  // sum of constructed losses x cell area
    double cell_area_ha = 0.0;
};

/// Disk of AGB loss whose post-fire reflectance drops in NIR and rises in SWIR.
BurnScene generate_burn_scene(const BurnParams& params);

}  // namespace agbmap
