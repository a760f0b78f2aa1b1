#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "agbmap/raster.hpp"

namespace agbmap {

using Date = std::chrono::year_month_day;

/// Parses YYYY-MM-DD.
Date parse_date(std::string_view text);
std::string format_date(const Date& d);

struct DateWindow {
    Date first;
    Date last;  // inclusive

    bool contains(const Date& d) const { return first <= d && d <= last; }
    /// "YYYY-MM-DD:YYYY-MM-DD"
    static DateWindow parse(std::string_view text);
    std::string str() const;
};

/// June 1 through August 31 of `year`.
DateWindow summer_window(int year);

/// SCL classes treated as unusable: no-data, saturated, cloud shadow,
/// cloud medium/high probability, cirrus, snow.
inline constexpr std::array<int, 7> kCloudyClasses{0, 1, 3, 8, 9, 10, 11};

bool is_cloudy_class(int code) noexcept;

/// Time-ordered scenes on one grid, optionally with a parallel SCL layer per scene.
class SceneSeries {
public:
    SceneSeries(std::vector<Raster> scenes, std::vector<Date> timestamps, std::vector<Raster> scl = {});

    const std::vector<Raster>& scenes() const noexcept { return scenes_; }
    const std::vector<Date>& timestamps() const noexcept { return timestamps_; }
    bool has_scl() const noexcept { return !scl_.empty(); }
    const std::vector<Raster>& scl() const noexcept { return scl_; }
    std::size_t size() const noexcept { return scenes_.size(); }

private:
    std::vector<Raster> scenes_;
    std::vector<Date> timestamps_;
    std::vector<Raster> scl_;
};

/// true where the pixel is usable (valid and not in a cloudy class).
std::vector<std::uint8_t> cloud_mask(const Raster& scl_scene);

/// Per-band median over usable observations. Even counts average the two
/// middle values. Pixels with no usable observation are invalid.
Raster median_composite(const SceneSeries& series);

/// Per-pixel mean over usable observations whose date falls in `window`.
Raster temporal_mean(const SceneSeries& series, const DateWindow& window);

struct ManifestEntry {
    std::filesystem::path scene;
    Date date;
    std::optional<std::filesystem::path> scl;
};

/// One scene per line: `path,YYYY-MM-DD[,scl_path]`. Blank lines and lines
/// starting with '#' are skipped; relative paths resolve against the manifest's directory.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries);
SceneSeries load_series(const std::vector<ManifestEntry>& entries);

}  // namespace agbmap
