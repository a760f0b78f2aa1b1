#include "agbmap/pipeline.hpp"

#include <array>

#include "agbmap/error.hpp"
#include "agbmap/geotiff.hpp"

namespace agbmap {

SceneSeries restrict_to_window(const SceneSeries& series, const DateWindow& window) {
    std::vector<Raster> scenes, scl;
    std::vector<Date> dates;
    for (std::size_t t = 0; t < series.size(); ++t) {
        if (!window.contains(series.timestamps()[t])) continue;
        scenes.push_back(series.scenes()[t]);
        dates.push_back(series.timestamps()[t]);
        if (series.has_scl()) scl.push_back(series.scl()[t]);
    }
    if (scenes.empty()) throw Error(ErrorCode::EmptyWindow, "no scene falls inside " + window.str());
    return SceneSeries(std::move(scenes), std::move(dates), std::move(scl));
}

SiteLayers prepare_site(const SceneSeries& s2, const SceneSeries& s1, const SceneSeries& gpp,
                        const FootprintSet& footprints, const DateWindow& window) {
    SiteLayers out;
    out.s2 = median_composite(restrict_to_window(s2, window));
    const Grid& grid = out.s2.grid();
    out.s1 = bilinear_resample(temporal_mean(s1, window), grid);
    out.gpp = temporal_mean(gpp, window);
    if (!same_footprint(out.gpp.grid(), grid)) out.gpp = bilinear_resample(out.gpp, grid);
    out.match = match_footprints(footprints, grid);
    return out;
}

SiteLayers prepare_site(const SyntheticScene& scene, const FootprintSet& footprints, const DateWindow& window) {
    return prepare_site(scene.s2, scene.s1, scene.gpp, footprints, window);
}

SiteLayers prepare_site(const SiteFiles& site, const DateWindow& window) {
    return prepare_site(site.s2, site.s1, site.gpp, site.footprints, window);
}

Datacube site_cube(const SiteLayers& layers, ModalitySubset subset) {
    const std::array<Raster, 3> inputs{layers.s1, layers.s2, layers.gpp};
    return assemble(inputs, layers.match.target, layers.match.mask, subset);
}

namespace {

void write_series(const std::filesystem::path& dir, std::string_view prefix, const SceneSeries& series) {
    std::filesystem::create_directories(dir);
    std::vector<ManifestEntry> entries;
    for (std::size_t t = 0; t < series.size(); ++t) {
        const std::string date = format_date(series.timestamps()[t]);
        ManifestEntry e{dir / (std::string(prefix) + "_" + date + ".tif"), series.timestamps()[t], std::nullopt};
        write_raster(e.scene, series.scenes()[t]);
        if (series.has_scl()) {
            e.scl = dir / ("scl_" + date + ".tif");
            write_raster(*e.scl, series.scl()[t]);
        }
        entries.push_back(std::move(e));
    }
    write_manifest(dir / "manifest.txt", entries);
}

}  // namespace

void write_site_dir(const std::filesystem::path& dir, const SyntheticScene& scene, const FootprintSet& footprints) {
    std::filesystem::create_directories(dir);
    write_raster(dir / "true_agb.tif", scene.true_agb);
    write_series(dir / "s2", "s2", scene.s2);
    write_series(dir / "s1", "s1", scene.s1);
    write_series(dir / "gpp", "gpp", scene.gpp);
    write_footprints_csv(dir / "footprints.csv", footprints);
}

SiteFiles read_site_dir(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw Error(ErrorCode::Io, "site directory " + dir.string() + " does not exist");
    SceneSeries s2 = load_series(read_manifest(dir / "s2" / "manifest.txt"));
    const std::string crs = s2.scenes().front().grid().crs_id;
    return {std::move(s2), load_series(read_manifest(dir / "s1" / "manifest.txt")),
            load_series(read_manifest(dir / "gpp" / "manifest.txt")), read_footprints_csv(dir / "footprints.csv", crs)};
}

}  // namespace agbmap
