#include "agbmap/cube.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "agbmap/csv.hpp"
#include "agbmap/error.hpp"
#include "agbmap/geotiff.hpp"
#include "agbmap/rng.hpp"

namespace agbmap {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool parse_bool(const std::string& s) {
    if (s == "true" || s == "1" || s == "True" || s == "TRUE") return true;
    if (s == "false" || s == "0" || s == "False" || s == "FALSE") return false;
    throw Error(ErrorCode::Format, "expected boolean, got '" + s + "'");
}

}  // namespace

FootprintSet read_footprints_csv(const std::filesystem::path& path, std::string crs_id) {
    const CsvTable table = read_csv(path);
    const std::size_t ix = table.column("x"), iy = table.column("y"), iagb = table.column("agb"),
                      iq = table.column("quality"), isrc = table.column("source_id");
    FootprintSet set{{}, std::move(crs_id)};
    set.footprints.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        try {
            Footprint fp{std::stod(row.at(ix)), std::stod(row.at(iy)), std::stod(row.at(iagb)), parse_bool(row.at(iq)),
                         row.at(isrc)};
            if (!std::isfinite(fp.agb) || fp.agb < 0) {
                throw Error(ErrorCode::InvalidArgument, "agb must be finite and >= 0");
            }
            set.footprints.push_back(std::move(fp));
        } catch (const std::exception& e) {
            throw Error(ErrorCode::Format, path.string() + " row " + std::to_string(r + 2) + ": " + e.what());
        }
    }
    return set;
}

void write_footprints_csv(const std::filesystem::path& path, const FootprintSet& set) {
    CsvTable table;
    table.header = {"x", "y", "agb", "quality", "source_id"};
    for (const auto& fp : set.footprints) {
        table.rows.push_back({format_double(fp.x), format_double(fp.y), format_double(fp.agb),
                              fp.quality ? "true" : "false", fp.source_id});
    }
    write_csv(path, table);
}

std::optional<std::size_t> cell_index(const Grid& grid, double x, double y) {
    // The division only gives a first guess; membership is decided against
    // the edge coordinates themselves so points on an edge land consistently.
    const double sx = grid.pixel_size_x, sy = grid.pixel_size_y;
    auto left = [&](double c) { return grid.origin_x + c * sx; };
    auto top = [&](double r) { return grid.north_up ? grid.origin_y - r * sy : grid.origin_y + r * sy; };
    auto above = [&](double v, double edge) { return grid.north_up ? v > edge : v < edge; };

    double c = std::floor((x - grid.origin_x) / sx);
    double r = std::floor((grid.north_up ? grid.origin_y - y : y - grid.origin_y) / sy);
    if (!std::isfinite(c) || !std::isfinite(r)) return std::nullopt;
    if (x < left(c)) c -= 1;
    else if (x >= left(c + 1)) c += 1;
    if (above(y, top(r))) r -= 1;
    else if (!above(y, top(r + 1))) r += 1;
    if (c < 0 || r < 0 || c >= grid.width || r >= grid.height) return std::nullopt;
    return static_cast<std::size_t>(r) * grid.width + static_cast<std::size_t>(c);
}

MatchResult match_footprints(const FootprintSet& footprints, const Grid& grid) {
    grid.validate();
    if (footprints.crs_id != grid.crs_id) {
        throw Error(ErrorCode::CrsMismatch,
                    "footprints in '" + footprints.crs_id + "' but grid is '" + grid.crs_id + "'");
    }
    const std::size_t n = grid.pixel_count();
    std::vector<double> sum(n, 0.0);
    std::vector<std::size_t> count(n, 0);
    MatchResult result;
    result.n_total = footprints.footprints.size();
    for (const auto& fp : footprints.footprints) {
        if (!fp.quality) {
            ++result.n_rejected_quality;
            continue;
        }
        const auto cell = cell_index(grid, fp.x, fp.y);
        if (!cell) {
            ++result.n_out_of_bounds;
            continue;
        }
        sum[*cell] += fp.agb;
        ++count[*cell];
        ++result.n_assigned;
    }
    std::vector<double> values(n, kNaN);
    result.mask.assign(n, 0);
    for (std::size_t p = 0; p < n; ++p) {
        if (count[p] == 0) continue;
        values[p] = sum[p] / static_cast<double>(count[p]);
        result.mask[p] = 1;
    }
    result.target = make_single_band(grid, agb_channel(), std::move(values), result.mask);
    return result;
}

std::string_view subset_name(ModalitySubset subset) noexcept {
    switch (subset) {
        case ModalitySubset::SifS1S2: return "SIF/S1/S2";
        case ModalitySubset::S1S2: return "S1/S2";
        case ModalitySubset::S2Only: return "S2-only";
    }
    return "?";
}

ModalitySubset parse_subset(std::string_view text) {
    std::string s(text);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (s == "sif/s1/s2" || s == "full" || s == "sif-s1-s2") return ModalitySubset::SifS1S2;
    if (s == "s1/s2" || s == "s1-s2") return ModalitySubset::S1S2;
    if (s == "s2-only" || s == "s2") return ModalitySubset::S2Only;
    throw Error(ErrorCode::InvalidArgument, "unknown modality subset '" + std::string(text) + "'");
}

const std::vector<ModalitySubset>& all_subsets() {
    static const std::vector<ModalitySubset> subsets{ModalitySubset::SifS1S2, ModalitySubset::S1S2,
                                                     ModalitySubset::S2Only};
    return subsets;
}

std::vector<ChannelId> subset_channels(ModalitySubset subset) {
    std::vector<ChannelId> ids;
    if (subset != ModalitySubset::S2Only) ids = s1_channels();
    ids.insert(ids.end(), s2_channels().begin(), s2_channels().end());
    if (subset == ModalitySubset::SifS1S2) ids.push_back(gpp_channel());
    return ids;
}

std::size_t Datacube::supervised_count() const {
    return static_cast<std::size_t>(std::count(target_mask.begin(), target_mask.end(), std::uint8_t{1}));
}

Datacube assemble(std::span<const Raster> inputs, const Raster& target, std::span<const std::uint8_t> mask,
                  ModalitySubset subset) {
    if (inputs.empty()) throw Error(ErrorCode::MissingModality, "no input rasters given");
    const Grid& grid = target.grid();
    if (mask.size() != grid.pixel_count()) throw Error(ErrorCode::ShapeMismatch, "mask size does not match target grid");
    for (const auto& r : inputs) {
        if (!same_footprint(r.grid(), grid)) throw Error(ErrorCode::GridMismatch, "input raster is not on the target grid");
    }
    const auto ids = subset_channels(subset);
    const std::size_t n = grid.pixel_count();
    std::vector<double> data;
    data.reserve(ids.size() * n);
    std::vector<std::uint8_t> valid(n, 1);
    for (const auto& id : ids) {
        const Raster* source = nullptr;
        std::size_t index = 0;
        for (const auto& r : inputs) {
            if (auto idx = r.find_channel(id)) {
                source = &r;
                index = *idx;
                break;
            }
        }
        if (!source) {
            throw Error(ErrorCode::MissingModality,
                        "channel " + id.str() + " required by " + std::string(subset_name(subset)) + " is missing");
        }
        const auto plane = source->plane(index);
        data.insert(data.end(), plane.begin(), plane.end());
        for (std::size_t p = 0; p < n; ++p) valid[p] &= source->valid(p) ? 1 : 0;
    }
    Datacube cube;
    cube.subset = subset;
    cube.inputs = Raster(grid, ids, std::move(data), valid);
    cube.target = target.select(std::span<const ChannelId>(&agb_channel(), 1));
    cube.target_mask.assign(n, 0);
    for (std::size_t p = 0; p < n; ++p) cube.target_mask[p] = (mask[p] && valid[p] && target.valid(p)) ? 1 : 0;
    return cube;
}

std::vector<ChannelStats> compute_norm_stats(const Raster& inputs, std::span<const std::uint8_t> region) {
    const std::size_t n = inputs.pixel_count();
    if (!region.empty() && region.size() != n) throw Error(ErrorCode::ShapeMismatch, "region mask size mismatch");
    std::vector<ChannelStats> stats;
    for (std::size_t c = 0; c < inputs.n_channels(); ++c) {
        const auto plane = inputs.plane(c);
        double sum = 0.0;
        std::size_t count = 0;
        for (std::size_t p = 0; p < n; ++p) {
            if (!inputs.valid(p) || (!region.empty() && !region[p])) continue;
            sum += plane[p];
            ++count;
        }
        if (count < 2) {
            throw Error(ErrorCode::InsufficientData, "channel " + inputs.channels()[c].str() + " has fewer than 2 valid pixels");
        }
        const double mean = sum / static_cast<double>(count);
        double ss = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            if (!inputs.valid(p) || (!region.empty() && !region[p])) continue;
            ss += (plane[p] - mean) * (plane[p] - mean);
        }
        const double sd = std::sqrt(ss / static_cast<double>(count));
        if (!(sd >= 1e-12)) throw Error(ErrorCode::DegenerateChannel, "channel " + inputs.channels()[c].str() + " is constant");
        stats.push_back({mean, sd});
    }
    return stats;
}

Datacube normalize(const Datacube& cube, std::optional<std::span<const ChannelStats>> stats) {
    std::vector<ChannelStats> use = stats ? std::vector<ChannelStats>(stats->begin(), stats->end())
                                          : compute_norm_stats(cube.inputs);
    if (use.size() != cube.inputs.n_channels()) {
        throw Error(ErrorCode::StatsMismatch, "normalisation stats cover " + std::to_string(use.size()) +
                                                  " channels, cube has " + std::to_string(cube.inputs.n_channels()));
    }
    for (const auto& s : use) {
        if (!(s.std >= 1e-12)) throw Error(ErrorCode::DegenerateChannel, "normalisation std below 1e-12");
    }
    const std::size_t n = cube.inputs.pixel_count();
    std::vector<double> data(cube.inputs.data().begin(), cube.inputs.data().end());
    for (std::size_t c = 0; c < use.size(); ++c) {
        for (std::size_t p = 0; p < n; ++p) {
            if (cube.inputs.valid(p)) data[c * n + p] = (data[c * n + p] - use[c].mean) / use[c].std;
        }
    }
    Datacube out = cube;
    out.inputs = Raster(cube.inputs.grid(), cube.inputs.channels(), std::move(data), cube.inputs.valid_mask());
    out.norm_stats = std::move(use);
    return out;
}

Datacube denormalize(const Datacube& cube) {
    if (!cube.normalized()) return cube;
    const std::size_t n = cube.inputs.pixel_count();
    std::vector<double> data(cube.inputs.data().begin(), cube.inputs.data().end());
    for (std::size_t c = 0; c < cube.norm_stats.size(); ++c) {
        for (std::size_t p = 0; p < n; ++p) {
            if (cube.inputs.valid(p)) data[c * n + p] = data[c * n + p] * cube.norm_stats[c].std + cube.norm_stats[c].mean;
        }
    }
    Datacube out = cube;
    out.inputs = Raster(cube.inputs.grid(), cube.inputs.channels(), std::move(data), cube.inputs.valid_mask());
    out.norm_stats.clear();
    return out;
}

std::size_t train_count(std::size_t n_units, double fraction) {
    if (n_units < 2) return n_units;
    const auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n_units)));
    return std::clamp<std::size_t>(k, 1, n_units - 1);
}

std::vector<std::uint8_t> tile_supervision(const Datacube& cube, std::span<const TileView> tiles) {
    const Grid& g = cube.grid();
    std::vector<std::uint8_t> out(g.pixel_count(), 0);
    for (const auto& t : tiles) {
        for (int r = std::max(0, t.row0); r < std::min(g.height, t.row0 + t.size); ++r) {
            for (int c = std::max(0, t.col0); c < std::min(g.width, t.col0 + t.size); ++c) {
                const std::size_t p = static_cast<std::size_t>(r) * g.width + c;
                if (cube.target_mask[p]) out[p] = 1;
            }
        }
    }
    return out;
}

CubeSplit split(const Datacube& cube, const SplitSpec& spec) {
    if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "train_fraction must lie in (0, 1)");
    }
    CubeSplit out;
    out.unit = spec.unit;
    const std::size_t n = cube.grid().pixel_count();
    Rng rng(derive_seed(spec.seed, 0x5b11));
    if (spec.unit == SplitUnit::Pixel) {
        std::vector<std::size_t> units;
        for (std::size_t p = 0; p < n; ++p) {
            if (cube.target_mask[p]) units.push_back(p);
        }
        if (units.size() < 10) {
            throw Error(ErrorCode::TooFewUnits, std::to_string(units.size()) + " supervised pixels; at least 10 needed");
        }
        rng.shuffle(std::span<std::size_t>(units));
        const std::size_t k = train_count(units.size(), spec.train_fraction);
        out.train_mask.assign(n, 0);
        out.test_mask.assign(n, 0);
        for (std::size_t i = 0; i < units.size(); ++i) (i < k ? out.train_mask : out.test_mask)[units[i]] = 1;
        return out;
    }
    std::vector<TileView> units;
    for (const auto& t : tile_windows(cube.grid().width, cube.grid().height, spec.tile_size, spec.tile_size)) {
        const auto sup = tile_supervision(cube, std::span<const TileView>(&t, 1));
        if (std::find(sup.begin(), sup.end(), std::uint8_t{1}) != sup.end()) units.push_back(t);
    }
    if (units.size() < 10) {
        throw Error(ErrorCode::TooFewUnits, std::to_string(units.size()) + " supervised tiles; at least 10 needed");
    }
    rng.shuffle(std::span<TileView>(units));
    const std::size_t k = train_count(units.size(), spec.train_fraction);
    out.train_tiles.assign(units.begin(), units.begin() + static_cast<std::ptrdiff_t>(k));
    out.test_tiles.assign(units.begin() + static_cast<std::ptrdiff_t>(k), units.end());
    auto by_origin = [](const TileView& a, const TileView& b) {
        return std::pair(a.row0, a.col0) < std::pair(b.row0, b.col0);
    };
    std::sort(out.train_tiles.begin(), out.train_tiles.end(), by_origin);
    std::sort(out.test_tiles.begin(), out.test_tiles.end(), by_origin);
    out.train_mask = tile_supervision(cube, out.train_tiles);
    out.test_mask = tile_supervision(cube, out.test_tiles);
    return out;
}

void write_cube(const std::filesystem::path& path, const Datacube& cube, std::optional<std::uint64_t> split_seed) {
    const std::size_t n = cube.grid().pixel_count();
    GeoTiffImage image;
    image.grid = cube.grid();
    image.channels = cube.inputs.channels();
    image.channels.push_back(agb_channel());
    image.data.assign(cube.inputs.data().begin(), cube.inputs.data().end());
    const auto target = cube.target.plane(0);
    for (std::size_t p = 0; p < n; ++p) image.data.push_back(cube.target_mask[p] ? target[p] : kNaN);
    image.metadata["MODALITY_SUBSET"] = std::string(subset_name(cube.subset));
    write_geotiff(path, image);

    nlohmann::json side;
    side["format"] = "agbmap-cube/1";
    side["modality_subset"] = subset_name(cube.subset);
    side["target_channel"] = agb_channel().str();
    side["crs_id"] = cube.grid().crs_id;
    auto& channels = side["channels"] = nlohmann::json::array();
    for (const auto& c : cube.inputs.channels()) channels.push_back(c.str());
    side["normalized"] = cube.normalized();
    auto& stats = side["norm_stats"] = nlohmann::json::array();
    for (std::size_t c = 0; c < cube.norm_stats.size(); ++c) {
        stats.push_back({{"channel", cube.inputs.channels()[c].str()},
                         {"mean", cube.norm_stats[c].mean},
                         {"std", cube.norm_stats[c].std}});
    }
    side["split_seed"] = split_seed ? nlohmann::json(*split_seed) : nlohmann::json(nullptr);
    side["supervised_pixels"] = cube.supervised_count();
    std::ofstream f(path.string() + ".json");
    if (!f) throw Error(ErrorCode::Io, "cannot write cube sidecar for '" + path.string() + "'");
    f << side.dump(2) << '\n';
}

Datacube read_cube(const std::filesystem::path& path) {
    const auto sidecar = std::filesystem::path(path.string() + ".json");
    std::ifstream f(sidecar);
    if (!f) throw Error(ErrorCode::Io, "cube sidecar '" + sidecar.string() + "' not found");
    nlohmann::json side;
    try {
        side = nlohmann::json::parse(f);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Format, "bad cube sidecar: " + std::string(e.what()));
    }
    GeoTiffImage image = read_geotiff(path);
    const std::size_t n = image.grid.pixel_count();
    const std::size_t nb = image.channels.size();
    if (nb < 2 || image.channels.back() != agb_channel()) {
        throw Error(ErrorCode::Format, "cube file must end with a " + agb_channel().str() + " band");
    }
    const std::size_t ni = nb - 1;
    std::vector<ChannelId> ids(image.channels.begin(), image.channels.begin() + static_cast<std::ptrdiff_t>(ni));
    std::vector<std::string> listed = side.at("channels").get<std::vector<std::string>>();
    if (listed.size() != ni) throw Error(ErrorCode::Format, "sidecar channel list does not match the cube bands");
    for (std::size_t c = 0; c < ni; ++c) {
        if (ChannelId::parse(listed[c]) != ids[c]) throw Error(ErrorCode::Format, "sidecar channel order mismatch");
    }
    std::vector<std::uint8_t> valid(n, 1);
    for (std::size_t c = 0; c < ni; ++c) {
        for (std::size_t p = 0; p < n; ++p) {
            if (!std::isfinite(image.data[c * n + p])) valid[p] = 0;
        }
    }
    std::vector<double> target(image.data.begin() + static_cast<std::ptrdiff_t>(ni * n), image.data.end());
    image.data.resize(ni * n);

    Datacube cube;
    cube.subset = parse_subset(side.at("modality_subset").get<std::string>());
    cube.inputs = Raster(image.grid, std::move(ids), std::move(image.data), valid);
    cube.target_mask.assign(n, 0);
    for (std::size_t p = 0; p < n; ++p) cube.target_mask[p] = (valid[p] && std::isfinite(target[p])) ? 1 : 0;
    cube.target = make_single_band(image.grid, agb_channel(), std::move(target));
    for (const auto& s : side.at("norm_stats")) cube.norm_stats.push_back({s.at("mean").get<double>(), s.at("std").get<double>()});
    return cube;
}

}  // namespace agbmap
