#include "agbmap/evaluation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "agbmap/csv.hpp"
#include "agbmap/error.hpp"
#include "agbmap/image.hpp"
#include "agbmap/parallel.hpp"
#include "agbmap/pipeline.hpp"

namespace agbmap {

EvalResult evaluate(const ModelArtifact& artifact, const Datacube& cube, std::span<const std::uint8_t> region) {
    const std::size_t n = cube.grid().pixel_count();
    if (!region.empty() && region.size() != n) throw Error(ErrorCode::ShapeMismatch, "region does not match the cube");
    std::vector<std::uint8_t> mask(n, 0);
    std::size_t count = 0;
    for (std::size_t p = 0; p < n; ++p) {
        mask[p] = cube.target_mask[p] && (region.empty() || region[p]);
        count += mask[p];
    }
    if (count == 0) throw Error(ErrorCode::EmptySplit, "no supervised pixels in the evaluation split");

    const Datacube prepared = prepare_cube(artifact, cube);
    const Raster pred = predict_region(artifact, prepared, mask);
    // Pixels the model could not predict (invalid inputs) drop out.
    for (std::size_t p = 0; p < n; ++p) mask[p] = mask[p] && pred.valid(p);
    const auto loss = masked_rmse(pred.plane(0), cube.target.plane(0), mask);
    return {loss.loss, loss.count};
}

std::string_view eval_split_name(EvalSplit split) noexcept {
    return split == EvalSplit::Testing ? "testing" : "validation";
}

EvalSplit parse_eval_split(std::string_view text) {
    if (text == "testing" || text == "test") return EvalSplit::Testing;
    if (text == "validation") return EvalSplit::Validation;
    throw Error(ErrorCode::InvalidArgument, "unknown split '" + std::string(text) + "'");
}

const EvalRow* EvalReport::find(ModelKind model, ModalitySubset subset, EvalSplit split) const {
    for (const auto& r : rows)
        if (r.model == model && r.subset == subset && r.split == split) return &r;
    return nullptr;
}

EvalRow summarize_runs(ModelKind model, ModalitySubset subset, EvalSplit split, std::span<const double> rmses,
                       std::size_t n_pixels) {
    if (rmses.empty()) throw Error(ErrorCode::InvalidArgument, "no runs to summarise");
    EvalRow row{model, subset, split, 0.0, 0.0, static_cast<int>(rmses.size()), n_pixels};
    const double k = static_cast<double>(rmses.size());
    row.rmse_mean = std::accumulate(rmses.begin(), rmses.end(), 0.0) / k;
    if (rmses.size() > 1) {
        double ss = 0.0;
        for (double v : rmses) ss += (v - row.rmse_mean) * (v - row.rmse_mean);
        row.rmse_std = std::sqrt(ss / k);
    }
    return row;
}

namespace {

const std::vector<std::string> kReportHeader{"model",
                                             "modality_subset",
                                             "testing_rmse_mean",
                                             "testing_rmse_std",
                                             "testing_n_pixels",
                                             "validation_rmse_mean",
                                             "validation_rmse_std",
                                             "validation_n_pixels",
                                             "n_runs"};

// (model, subset) pairs in first-appearance order.
std::vector<std::pair<ModelKind, ModalitySubset>> report_cells(const EvalReport& report) {
    std::vector<std::pair<ModelKind, ModalitySubset>> cells;
    for (const auto& r : report.rows) {
        const std::pair key{r.model, r.subset};
        if (std::find(cells.begin(), cells.end(), key) == cells.end()) cells.push_back(key);
    }
    return cells;
}

double parse_number(const std::string& s, const char* what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw Error(ErrorCode::Format, std::string("bad ") + what + " '" + s + "'");
    }
}

std::string fixed(double v, int digits = 2) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

// Display columns of UTF-8 text ("±" is two bytes, one column).
std::size_t columns(std::string_view s) {
    std::size_t cols = 0;
    for (unsigned char c : s) cols += (c & 0xC0) != 0x80;
    return cols;
}

std::string pad(std::string s, std::size_t width) {
    const std::size_t cols = columns(s);
    if (cols < width) s.append(width - cols, ' ');
    return s;
}

}  // namespace

std::string format_report_csv(const EvalReport& report) {
    CsvTable t;
    t.header = kReportHeader;
    for (const auto& [model, subset] : report_cells(report)) {
        std::vector<std::string> row{std::string(model_kind_name(model)), std::string(subset_name(subset))};
        int n_runs = 0;
        for (EvalSplit split : {EvalSplit::Testing, EvalSplit::Validation}) {
            if (const EvalRow* r = report.find(model, subset, split)) {
                row.push_back(format_double(r->rmse_mean));
                row.push_back(format_double(r->rmse_std));
                row.push_back(std::to_string(r->n_pixels));
                n_runs = r->n_runs;
            } else {
                row.insert(row.end(), 3, "");
            }
        }
        row.push_back(std::to_string(n_runs));
        t.rows.push_back(std::move(row));
    }
    return format_csv(t);
}

EvalReport parse_report_csv(std::string_view text) {
    const CsvTable t = parse_csv(text);
    std::vector<std::size_t> col;
    for (const auto& name : kReportHeader) col.push_back(t.column(name));
    EvalReport report;
    for (const auto& row : t.rows) {
        if (row.size() != t.header.size()) throw Error(ErrorCode::Format, "report row has the wrong number of fields");
        const ModelKind model = parse_model_kind(row[col[0]]);
        const ModalitySubset subset = parse_subset(row[col[1]]);
        const int n_runs = static_cast<int>(parse_number(row[col[8]], "n_runs"));
        for (int s = 0; s < 2; ++s) {
            const std::size_t base = 2 + 3 * static_cast<std::size_t>(s);
            if (row[col[base]].empty()) continue;
            EvalRow r;
            r.model = model;
            r.subset = subset;
            r.split = s == 0 ? EvalSplit::Testing : EvalSplit::Validation;
            r.rmse_mean = parse_number(row[col[base]], "rmse_mean");
            r.rmse_std = parse_number(row[col[base + 1]], "rmse_std");
            r.n_pixels = static_cast<std::size_t>(parse_number(row[col[base + 2]], "n_pixels"));
            r.n_runs = n_runs;
            report.rows.push_back(r);
        }
    }
    return report;
}

void write_report_csv(const std::filesystem::path& path, const EvalReport& report) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << format_report_csv(report);
}

EvalReport read_report_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_report_csv(ss.str());
}

std::string format_report_table(const EvalReport& report) {
    std::vector<std::array<std::string, 4>> lines{{"Model", "Inputs", "Testing", "Validation"}};
    for (const auto& [model, subset] : report_cells(report)) {
        std::array<std::string, 4> line{std::string(model_display_name(model)), std::string(subset_name(subset)), "-",
                                        "-"};
        for (int s = 0; s < 2; ++s) {
            if (const EvalRow* r = report.find(model, subset, s == 0 ? EvalSplit::Testing : EvalSplit::Validation)) {
                line[2 + s] = fixed(r->rmse_mean) + " ± " + fixed(r->rmse_std);
            }
        }
        lines.push_back(line);
    }
    std::array<std::size_t, 4> width{};
    for (const auto& l : lines)
        for (std::size_t i = 0; i < 4; ++i) width[i] = std::max(width[i], columns(l[i]));
    std::string out = std::string(kReportTitle) + "\n\n";
    for (std::size_t k = 0; k < lines.size(); ++k) {
        std::string row;
        for (std::size_t i = 0; i < 4; ++i) row += pad(lines[k][i], width[i] + 3);
        while (!row.empty() && row.back() == ' ') row.pop_back();
        out += row + "\n";
        if (k == 0) out += std::string(columns(row), '-') + "\n";
    }
    return out;
}

void AblationConfig::validate() const {
    std::vector<std::string> problems;
    try {
        site.validate();
    } catch (const Error& e) {
        problems.push_back(std::string("site: ") + e.what());
    }
    try {
        validation_site.validate();
    } catch (const Error& e) {
        problems.push_back(std::string("validation_site: ") + e.what());
    }
    try {
        unet.validate();
    } catch (const Error& e) {
        problems.push_back(std::string("unet: ") + e.what());
    }
    if (models.empty()) problems.push_back("models must not be empty");
    if (subsets.empty()) problems.push_back("subsets must not be empty");
    if (n_runs < 1) problems.push_back("n_runs must be >= 1");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) problems.push_back("train_fraction must lie in (0, 1)");
    if (workers < 1) problems.push_back("workers must be >= 1");
    if (!problems.empty()) {
        std::string msg = "invalid ablation config:";
        for (const auto& p : problems) msg += "\n  " + p;
        throw Error(ErrorCode::InvalidArgument, msg);
    }
}

AblationResult ablation(const AblationConfig& config, const AblationProgress& progress) {
    config.validate();
    const auto train_scene = generate_scene(config.site);
    const auto val_scene = generate_scene(config.validation_site);
    const SiteLayers train_layers =
        prepare_site(train_scene, sample_footprints(train_scene.true_agb, config.site), summer_window(config.site.year));
    const SiteLayers val_layers = prepare_site(val_scene, sample_footprints(val_scene.true_agb, config.validation_site),
                                               summer_window(config.validation_site.year));

    struct SubsetData {
        Datacube train;
        Datacube validation;
        CubeSplit pixel_split;
        CubeSplit tile_split;
    };
    std::vector<SubsetData> data;
    for (ModalitySubset subset : config.subsets) {
        SubsetData d;
        d.train = normalize(site_cube(train_layers, subset));
        d.validation = normalize(site_cube(val_layers, subset), d.train.norm_stats);
        SplitSpec spec;
        spec.train_fraction = config.train_fraction;
        spec.seed = config.split_seed;
        spec.unit = SplitUnit::Pixel;
        d.pixel_split = split(d.train, spec);
        if (std::find(config.models.begin(), config.models.end(), ModelKind::UNet) != config.models.end()) {
            spec.unit = SplitUnit::Tile;
            spec.tile_size = config.unet.tile_size;
            d.tile_split = split(d.train, spec);
        }
        data.push_back(std::move(d));
    }

    AblationResult result;
    for (ModelKind m : config.models)
        for (ModalitySubset s : config.subsets)
            for (int r = 0; r < config.n_runs; ++r)
                result.runs.push_back({m, s, r, derive_seed(config.seed, 0xab1a, static_cast<std::uint64_t>(r)), {}, {}, -1});

    parallel_for(result.runs.size(), config.workers, [&](std::size_t i) {
        RunRecord& rec = result.runs[i];
        const auto si = static_cast<std::size_t>(
            std::find(config.subsets.begin(), config.subsets.end(), rec.subset) - config.subsets.begin());
        const SubsetData& d = data[si];
        const CubeSplit& sp = rec.model == ModelKind::UNet ? d.tile_split : d.pixel_split;
        ModelSpec spec;
        spec.kind = rec.model;
        spec.train = config.unet;
        if (auto it = config.hyperparams.find(rec.model); it != config.hyperparams.end()) spec.hyperparams = it->second;
        const ModelArtifact artifact = train_model(d.train, sp, spec, rec.seed);
        rec.best_epoch = artifact.best_epoch;
        rec.testing = evaluate(artifact, d.train, sp.test_mask);
        rec.validation = evaluate(artifact, d.validation);
        if (progress) progress(rec);
    });

    for (ModelKind m : config.models) {
        for (ModalitySubset s : config.subsets) {
            std::vector<double> test, val;
            std::size_t n_test = 0, n_val = 0;
            for (const auto& rec : result.runs) {
                if (rec.model != m || rec.subset != s) continue;
                test.push_back(rec.testing.rmse);
                val.push_back(rec.validation.rmse);
                n_test = rec.testing.n_pixels;
                n_val = rec.validation.n_pixels;
            }
            result.report.rows.push_back(summarize_runs(m, s, EvalSplit::Testing, test, n_test));
            result.report.rows.push_back(summarize_runs(m, s, EvalSplit::Validation, val, n_val));
        }
    }
    return result;
}

void write_runs_csv(const std::filesystem::path& path, std::span<const RunRecord> runs) {
    CsvTable t;
    t.header = {"model",        "modality_subset", "run",          "seed",      "testing_rmse",
                "validation_rmse", "n_testing",    "n_validation", "best_epoch"};
    for (const auto& r : runs) {
        t.rows.push_back({std::string(model_kind_name(r.model)), std::string(subset_name(r.subset)),
                          std::to_string(r.run), std::to_string(r.seed), format_double(r.testing.rmse),
                          format_double(r.validation.rmse), std::to_string(r.testing.n_pixels),
                          std::to_string(r.validation.n_pixels), std::to_string(r.best_epoch)});
    }
    write_csv(path, t);
}

namespace {

constexpr std::array<std::string_view, 31> kKoppen{"",    "Af",  "Am",  "Aw",  "BWh", "BWk", "BSh", "BSk",
                                                   "Csa", "Csb", "Csc", "Cwa", "Cwb", "Cwc", "Cfa", "Cfb",
                                                   "Cfc", "Dsa", "Dsb", "Dsc", "Dsd", "Dwa", "Dwb", "Dwc",
                                                   "Dwd", "Dfa", "Dfb", "Dfc", "Dfd", "ET",  "EF"};

}  // namespace

std::string_view koppen_name(int code) noexcept {
    if (code < 1 || code >= static_cast<int>(kKoppen.size())) return "";
    return kKoppen[static_cast<std::size_t>(code)];
}

int parse_koppen(std::string_view name) {
    for (std::size_t i = 1; i < kKoppen.size(); ++i)
        if (kKoppen[i] == name) return static_cast<int>(i);
    throw Error(ErrorCode::InvalidArgument, "unknown Koppen class '" + std::string(name) + "'");
}

double quantile_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) return std::nan("");
    const double h = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

ZoneSummary climate_zone_summary(const Raster& prediction, const Raster& zones, int top_n) {
    if (!same_footprint(prediction.grid(), zones.grid())) {
        throw Error(ErrorCode::GridMismatch, "zone map and prediction are on different grids");
    }
    if (top_n < 1) throw Error(ErrorCode::InvalidArgument, "top_n must be >= 1");
    ZoneSummary out;
    std::map<int, std::vector<double>> by_zone;
    const auto pred = prediction.plane(0);
    const auto code = zones.plane(0);
    for (std::size_t p = 0; p < prediction.pixel_count(); ++p) {
        if (!prediction.valid(p)) continue;
        ++out.total_valid;
        const int z = zones.valid(p) ? static_cast<int>(std::lround(code[p])) : 0;
        if (z == 0) {
            ++out.unclassified;
            continue;
        }
        by_zone[z].push_back(pred[p]);
    }
    std::vector<std::pair<int, std::vector<double>*>> ranked;
    for (auto& [z, v] : by_zone) ranked.emplace_back(z, &v);
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second->size() > b.second->size(); });
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        auto& values = *ranked[i].second;
        if (i >= static_cast<std::size_t>(top_n)) {
            out.other += values.size();
            continue;
        }
        std::sort(values.begin(), values.end());
        out.zones.push_back({ranked[i].first, values.size(), quantile_sorted(values, 0.05),
                             quantile_sorted(values, 0.25), quantile_sorted(values, 0.50),
                             quantile_sorted(values, 0.75), quantile_sorted(values, 0.95)});
    }
    return out;
}

void write_zone_csv(const std::filesystem::path& path, const ZoneSummary& summary) {
    CsvTable t;
    t.header = {"zone", "code", "count", "p5", "p25", "p50", "p75", "p95"};
    for (const auto& z : summary.zones) {
        const std::string_view name = koppen_name(z.code);
        t.rows.push_back({name.empty() ? std::to_string(z.code) : std::string(name), std::to_string(z.code),
                          std::to_string(z.count), format_double(z.p5), format_double(z.p25), format_double(z.p50),
                          format_double(z.p75), format_double(z.p95)});
    }
    write_csv(path, t);
}

void write_zone_boxplot(const std::filesystem::path& path, const ZoneSummary& summary) {
    const int n = std::max<int>(1, static_cast<int>(summary.zones.size()));
    const int left = 60, right = 20, top = 30, bottom = 40, slot = 70, plot_h = 300;
    Image img(left + right + n * slot, top + plot_h + bottom);
    const Rgb black{0, 0, 0}, grey{160, 160, 160};
    double hi = 0.0;
    for (const auto& z : summary.zones) hi = std::max(hi, z.p95);
    hi = hi > 0 ? hi * 1.05 : 1.0;
    auto y_of = [&](double v) { return top + plot_h - static_cast<int>(std::lround(std::max(0.0, v) / hi * plot_h)); };

    img.text(left, 8, "AGB (Mg C/ha) by climate zone", black);
    img.line(left, top, left, top + plot_h, black);
    img.line(left, top + plot_h, left + n * slot, top + plot_h, black);
    for (int k = 0; k <= 4; ++k) {
        const double v = hi * k / 4.0;
        const int y = y_of(v);
        img.line(left - 4, y, left, y, black);
        const std::string label = fixed(v, 0);
        img.text(left - 8 - Image::text_width(label), y - 3, label, black);
    }
    for (std::size_t i = 0; i < summary.zones.size(); ++i) {
        const auto& z = summary.zones[i];
        const int cx = left + static_cast<int>(i) * slot + slot / 2;
        const Rgb fill = viridis(summary.zones.size() > 1 ? static_cast<double>(i) / (summary.zones.size() - 1) : 0.5);
        img.line(cx, y_of(z.p5), cx, y_of(z.p25), grey);
        img.line(cx, y_of(z.p75), cx, y_of(z.p95), grey);
        img.line(cx - 8, y_of(z.p5), cx + 8, y_of(z.p5), black);
        img.line(cx - 8, y_of(z.p95), cx + 8, y_of(z.p95), black);
        img.fill_rect(cx - 20, y_of(z.p75), cx + 20, y_of(z.p25), fill);
        img.rect(cx - 20, y_of(z.p75), cx + 20, y_of(z.p25), black);
        img.line(cx - 20, y_of(z.p50), cx + 20, y_of(z.p50), {255, 255, 255});
        const std::string name(koppen_name(z.code));
        img.text(cx - Image::text_width(name) / 2, top + plot_h + 8, name, black);
        const std::string count = std::to_string(z.count);
        img.text(cx - Image::text_width(count) / 2, top + plot_h + 20, count, grey);
    }
    img.write_png(path);
}

}  // namespace agbmap
