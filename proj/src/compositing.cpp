#include "agbmap/compositing.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "agbmap/error.hpp"
#include "agbmap/geotiff.hpp"

namespace agbmap {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

/// Usable-observation flags per scene, flattened scene-major.
std::vector<std::uint8_t> usable_flags(const SceneSeries& series) {
    const std::size_t n = series.scenes().front().pixel_count();
    std::vector<std::uint8_t> usable(series.size() * n, 0);
    for (std::size_t s = 0; s < series.size(); ++s) {
        const auto& scene = series.scenes()[s];
        std::vector<std::uint8_t> clear;
        if (series.has_scl()) clear = cloud_mask(series.scl()[s]);
        for (std::size_t p = 0; p < n; ++p) {
            usable[s * n + p] = scene.valid(p) && (clear.empty() || clear[p]) ? 1 : 0;
        }
    }
    return usable;
}

}  // namespace

Date parse_date(std::string_view text) {
    int y = 0;
    unsigned m = 0, d = 0;
    char tail = 0;
    const std::string s(text);
    if (std::sscanf(s.c_str(), "%d-%u-%u%c", &y, &m, &d, &tail) != 3) {
        throw Error(ErrorCode::Format, "date '" + s + "' is not YYYY-MM-DD");
    }
    const Date date{std::chrono::year(y), std::chrono::month(m), std::chrono::day(d)};
    if (!date.ok()) throw Error(ErrorCode::Format, "date '" + s + "' does not exist");
    return date;
}

std::string format_date(const Date& d) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()), static_cast<unsigned>(d.month()),
                  static_cast<unsigned>(d.day()));
    return buf;
}

DateWindow DateWindow::parse(std::string_view text) {
    const auto colon = text.find(':');
    if (colon == std::string_view::npos) throw Error(ErrorCode::Format, "window must be FIRST:LAST");
    DateWindow w{parse_date(text.substr(0, colon)), parse_date(text.substr(colon + 1))};
    if (w.last < w.first) throw Error(ErrorCode::InvalidArgument, "window ends before it starts");
    return w;
}

std::string DateWindow::str() const { return format_date(first) + ":" + format_date(last); }

DateWindow summer_window(int year) {
    using namespace std::chrono;
    return {std::chrono::year(year) / June / 1, std::chrono::year(year) / August / 31};
}

bool is_cloudy_class(int code) noexcept {
    return std::find(kCloudyClasses.begin(), kCloudyClasses.end(), code) != kCloudyClasses.end();
}

SceneSeries::SceneSeries(std::vector<Raster> scenes, std::vector<Date> timestamps, std::vector<Raster> scl)
    : scenes_(std::move(scenes)), timestamps_(std::move(timestamps)), scl_(std::move(scl)) {
    if (scenes_.empty()) throw Error(ErrorCode::EmptySeries, "scene series is empty");
    if (timestamps_.size() != scenes_.size()) {
        throw Error(ErrorCode::InvalidArgument, "one timestamp per scene is required");
    }
    if (!scl_.empty() && scl_.size() != scenes_.size()) {
        throw Error(ErrorCode::InvalidArgument, "SCL list must parallel the scene list");
    }
    for (std::size_t i = 0; i < scenes_.size(); ++i) {
        if (!same_footprint(scenes_[i].grid(), scenes_[0].grid())) {
            throw Error(ErrorCode::GridMismatch, "scene " + std::to_string(i) + " is not on the series grid");
        }
        if (scenes_[i].channels() != scenes_[0].channels()) {
            throw Error(ErrorCode::InvalidArgument, "scene " + std::to_string(i) + " has different channels");
        }
        if (i > 0 && !(timestamps_[i - 1] < timestamps_[i])) {
            throw Error(ErrorCode::InvalidArgument, "timestamps must be strictly increasing");
        }
        if (!scl_.empty() && !same_footprint(scl_[i].grid(), scenes_[0].grid())) {
            throw Error(ErrorCode::GridMismatch, "SCL layer " + std::to_string(i) + " is not on the series grid");
        }
    }
}

std::vector<std::uint8_t> cloud_mask(const Raster& scl_scene) {
    if (scl_scene.n_channels() != 1) throw Error(ErrorCode::InvalidArgument, "SCL raster must have one channel");
    const auto plane = scl_scene.plane(0);
    std::vector<std::uint8_t> mask(plane.size(), 0);
    for (std::size_t p = 0; p < plane.size(); ++p) {
        if (!scl_scene.valid(p)) continue;
        const double v = plane[p];
        if (v != std::floor(v) || v < 0 || v > 11) {
            throw Error(ErrorCode::BadClassCode, "SCL value " + std::to_string(v) + " outside class codes 0-11");
        }
        mask[p] = is_cloudy_class(static_cast<int>(v)) ? 0 : 1;
    }
    return mask;
}

Raster median_composite(const SceneSeries& series) {
    const Raster& first = series.scenes().front();
    const std::size_t n = first.pixel_count();
    const std::size_t nc = first.n_channels();
    const auto usable = usable_flags(series);

    std::vector<double> out(nc * n, kNaN);
    std::vector<std::uint8_t> valid(n, 0);
    std::vector<double> values;
    values.reserve(series.size());
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t c = 0; c < nc; ++c) {
            values.clear();
            for (std::size_t s = 0; s < series.size(); ++s) {
                if (usable[s * n + p]) values.push_back(series.scenes()[s].plane(c)[p]);
            }
            if (values.empty()) break;
            std::sort(values.begin(), values.end());
            const std::size_t k = values.size();
            out[c * n + p] = (k % 2 == 1) ? values[k / 2] : (values[k / 2 - 1] + values[k / 2]) / 2.0;
            valid[p] = 1;
        }
    }
    return Raster(first.grid(), first.channels(), std::move(out), std::move(valid));
}

Raster temporal_mean(const SceneSeries& series, const DateWindow& window) {
    std::vector<std::size_t> in_window;
    for (std::size_t s = 0; s < series.size(); ++s) {
        if (window.contains(series.timestamps()[s])) in_window.push_back(s);
    }
    if (in_window.empty()) throw Error(ErrorCode::EmptyWindow, "no scene falls inside " + window.str());

    const Raster& first = series.scenes().front();
    const std::size_t n = first.pixel_count();
    const std::size_t nc = first.n_channels();
    const auto usable = usable_flags(series);

    std::vector<double> out(nc * n, kNaN);
    std::vector<std::uint8_t> valid(n, 0);
    std::vector<double> values;
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t c = 0; c < nc; ++c) {
            values.clear();
            for (std::size_t s : in_window) {
                if (usable[s * n + p]) values.push_back(series.scenes()[s].plane(c)[p]);
            }
            if (values.empty()) break;
            // Summing in sorted order makes the result independent of scene order.
            std::sort(values.begin(), values.end());
            double sum = 0.0;
            for (double v : values) sum += v;
            out[c * n + p] = sum / static_cast<double>(values.size());
            valid[p] = 1;
        }
    }
    return Raster(first.grid(), first.channels(), std::move(out), std::move(valid));
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw Error(ErrorCode::Io, "cannot open manifest '" + path.string() + "'");
    const auto base = path.parent_path();
    auto resolve = [&base](const std::string& p) {
        std::filesystem::path fp(p);
        return fp.is_absolute() ? fp : base / fp;
    };
    std::vector<ManifestEntry> entries;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(trim(field));
        if (fields.size() < 2 || fields.size() > 3) {
            throw Error(ErrorCode::Format, path.string() + ":" + std::to_string(lineno) + ": expected path,date[,scl_path]");
        }
        ManifestEntry e{resolve(fields[0]), parse_date(fields[1]), std::nullopt};
        if (fields.size() == 3 && !fields[2].empty()) e.scl = resolve(fields[2]);
        entries.push_back(std::move(e));
    }
    return entries;
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries) {
    std::ofstream f(path);
    if (!f) throw Error(ErrorCode::Io, "cannot write manifest '" + path.string() + "'");
    const auto base = path.parent_path();
    for (const auto& e : entries) {
        f << e.scene.lexically_relative(base).generic_string() << ',' << format_date(e.date);
        if (e.scl) f << ',' << e.scl->lexically_relative(base).generic_string();
        f << '\n';
    }
}

SceneSeries load_series(const std::vector<ManifestEntry>& entries) {
    if (entries.empty()) throw Error(ErrorCode::EmptySeries, "manifest lists no scenes");
    std::vector<ManifestEntry> sorted = entries;
    std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.date < b.date; });
    std::vector<Raster> scenes;
    std::vector<Date> dates;
    std::vector<Raster> scl;
    const bool any_scl = std::any_of(sorted.begin(), sorted.end(), [](const auto& e) { return e.scl.has_value(); });
    for (const auto& e : sorted) {
        scenes.push_back(read_raster(e.scene));
        dates.push_back(e.date);
        if (any_scl) {
            if (!e.scl) throw Error(ErrorCode::InvalidArgument, "manifest mixes scenes with and without SCL");
            scl.push_back(read_raster(*e.scl));
        }
    }
    return SceneSeries(std::move(scenes), std::move(dates), std::move(scl));
}

}  // namespace agbmap
