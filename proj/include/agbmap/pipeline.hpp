#pragma once

#include "agbmap/compositing.hpp"
#include "agbmap/cube.hpp"
#include "agbmap/synthscene.hpp"

namespace agbmap {

/// Per-modality layers on the S2 grid, ready for stacking.
struct SiteLayers {
    Raster s2;   // cloud-filtered median composite
    Raster s1;   // window mean, bilinearly resampled onto the S2 grid
    Raster gpp;  // window mean
    MatchResult match;
};

/// Scenes of `series` dated inside `window`. Throws EmptyWindow when none are.
SceneSeries restrict_to_window(const SceneSeries& series, const DateWindow& window);

/// Composites, resamples and averages a scene's series over `window`, and
/// matches the footprints onto the S2 grid.
SiteLayers prepare_site(const SceneSeries& s2, const SceneSeries& s1, const SceneSeries& gpp,
                        const FootprintSet& footprints, const DateWindow& window);
SiteLayers prepare_site(const SyntheticScene& scene, const FootprintSet& footprints, const DateWindow& window);

Datacube site_cube(const SiteLayers& layers, ModalitySubset subset);

/// On-disk layout of one site: `s2/`, `s1/` and `gpp/` each hold GeoTIFF
/// scenes plus `manifest.txt`; `footprints.csv` sits at the top, and
/// synthetic sites add `true_agb.tif` and `zones.tif`.
struct SiteFiles {
    SceneSeries s2;
    SceneSeries s1;
    SceneSeries gpp;
    FootprintSet footprints;
};

void write_site_dir(const std::filesystem::path& dir, const SyntheticScene& scene, const FootprintSet& footprints);
SiteFiles read_site_dir(const std::filesystem::path& dir);
SiteLayers prepare_site(const SiteFiles& site, const DateWindow& window);

}  // namespace agbmap
