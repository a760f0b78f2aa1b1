// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any fail.
//
//   acceptance --cli path/to/agbmap [--only 4,5,8]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "agbmap/config.hpp"
#include "agbmap/csv.hpp"
#include "agbmap/error.hpp"
#include "agbmap/evaluation.hpp"
#include "agbmap/geotiff.hpp"
#include "agbmap/pipeline.hpp"
#include "agbmap/rng.hpp"
#include "agbmap/training.hpp"
#include "agbmap/wildfire.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace agbmap;

namespace {

struct Outcome {
    bool pass = true;
    std::vector<std::string> notes;

    void check(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            notes.push_back("FAILED " + what);
        }
    }
    void note(const std::string& s) { notes.push_back(s); }
};

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Grid grid30(int w, int h, double ox = 0.0, double oy = 0.0) {
    Grid g;
    g.origin_x = ox;
    g.origin_y = oy;
    g.pixel_size_x = g.pixel_size_y = 30.0;
    g.width = w;
    g.height = h;
    g.crs_id = "EPSG:5070";
    return g;
}

Date day(int d) { return std::chrono::sys_days(std::chrono::year(2021) / 6 / 1) + std::chrono::days(d); }

// Population std of the supervised target of a site's cube.
double target_std(const SceneParams& p) {
    const auto scene = generate_scene(p);
    const auto layers = prepare_site(scene, sample_footprints(scene.true_agb, p), summer_window(p.year));
    const Datacube cube = site_cube(layers, ModalitySubset::SifS1S2);
    double sum = 0, ss = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < cube.target_mask.size(); ++i) {
        if (!cube.target_mask[i]) continue;
        const double v = cube.target.plane(0)[i];
        sum += v;
        ss += v * v;
        ++n;
    }
    const double mean = sum / static_cast<double>(n);
    return std::sqrt(ss / static_cast<double>(n) - mean * mean);
}

double gpp_range(const SceneParams& p) {
    const auto scene = generate_scene(p);
    const auto layers = prepare_site(scene, sample_footprints(scene.true_agb, p), summer_window(p.year));
    double lo = INFINITY, hi = -INFINITY;
    for (std::size_t i = 0; i < layers.gpp.pixel_count(); ++i) {
        if (!layers.gpp.valid(i)) continue;
        lo = std::min(lo, layers.gpp.plane(0)[i]);
        hi = std::max(hi, layers.gpp.plane(0)[i]);
    }
    return hi - lo;
}

double validation_mean(const EvalReport& r, ModelKind m, ModalitySubset s) {
    const EvalRow* row = r.find(m, s, EvalSplit::Validation);
    return row ? row->rmse_mean : NAN;
}

// Shared by the table, ordering and ablation criteria.
struct AblationRun {
    bool done = false;
    AblationConfig config;
    AblationResult result;
    double seconds = 0;
    double validation_target_std = 0;
};

AblationRun& headline_ablation() {
    static AblationRun run;
    if (run.done) return run;
    run.config = RunConfig().ablation();
    const auto t0 = std::chrono::steady_clock::now();
    run.result = ablation(run.config, [&](const RunRecord& r) {
        std::fprintf(stderr, "  %7.1fs %-6s %-10s run %d  testing %7.3f  validation %7.3f\n", seconds_since(t0),
                     model_kind_name(r.model).data(), subset_name(r.subset).data(), r.run, r.testing.rmse,
                     r.validation.rmse);
    });
    run.seconds = seconds_since(t0);
    run.validation_target_std = target_std(run.config.validation_site);
    run.done = true;
    return run;
}

Outcome table_reproduction() {
    Outcome o;
    AblationRun& run = headline_ablation();
    const AblationConfig& c = run.config;
    o.check(c.site.size == 512, "scene is 512x512");
    o.check(c.site.gpp_informative, "gpp_informative");
    o.check(std::abs(c.site.footprint_density - 4.0) < 1e-12, "footprint density 4/1000");
    o.check(c.n_runs == 3, "n_runs = 3");

    const EvalReport& rep = run.result.report;
    o.check(rep.rows.size() == 24, "24 report rows (4 models x 3 subsets x 2 splits)");
    for (ModelKind m : all_model_kinds()) {
        for (ModalitySubset s : all_subsets()) {
            for (EvalSplit sp : {EvalSplit::Testing, EvalSplit::Validation}) {
                const EvalRow* row = rep.find(m, s, sp);
                o.check(row && row->n_runs == 3 && std::isfinite(row->rmse_mean) && std::isfinite(row->rmse_std) &&
                            row->n_pixels > 0,
                        std::string(model_kind_name(m)) + " " + std::string(subset_name(s)) + " " +
                            std::string(eval_split_name(sp)) + " row");
            }
        }
    }
    const std::string table = format_report_table(rep);
    o.check(table.find("Evaluation RMSE (Mg C/ha)") != std::string::npos, "table title");
    o.check(parse_report_csv(format_report_csv(rep)) == rep, "report CSV round trip");
    o.check(run.seconds <= 1800.0, "runtime within 30 min");
    o.note("runtime " + fmt("%.0f s", run.seconds));
    std::istringstream lines(table);
    for (std::string line; std::getline(lines, line);) o.note("  " + line);
    return o;
}

Outcome unet_ordering() {
    Outcome o;
    AblationRun& run = headline_ablation();
    const auto subset = ModalitySubset::SifS1S2;
    const EvalReport& rep = run.result.report;
    const double lr = validation_mean(rep, ModelKind::Linear, subset);
    const double rf = validation_mean(rep, ModelKind::RandomForest, subset);
    const double gbm = validation_mean(rep, ModelKind::GradientBoosting, subset);
    int wins = 0, n = 0;
    std::string per_run;
    for (const RunRecord& r : run.result.runs) {
        if (r.model != ModelKind::UNet || r.subset != subset) continue;
        ++n;
        const double v = r.validation.rmse;
        if (v < lr && v < rf && v < gbm) ++wins;
        per_run += fmt(" %.3f", v);
    }
    o.check(n == 3 && wins >= 2, "UNet beats every tabular mean in at least 2 of 3 runs");
    o.note("UNet validation per run:" + per_run + fmt("; LR %.3f", lr) + fmt(", RF %.3f", rf) + fmt(", GBM %.3f", gbm) +
           "; wins " + std::to_string(wins) + "/" + std::to_string(n));
    return o;
}

Outcome modality_ablation() {
    Outcome o;
    AblationRun& run = headline_ablation();
    const double gpp_rel = run.config.site.gpp_noise / gpp_range(run.config.site);
    o.check(gpp_rel <= 0.10, "gpp_noise within 10% of the GPP range");
    o.note("gpp_noise / range " + fmt("%.3f", gpp_rel));

    const double sd = run.validation_target_std;
    const double tol = 0.02 * sd;
    for (ModelKind m : {ModelKind::UNet, ModelKind::RandomForest}) {
        const auto& rep = run.result.report;
        const double a = validation_mean(rep, m, ModalitySubset::SifS1S2);
        const double b = validation_mean(rep, m, ModalitySubset::S1S2);
        const double c = validation_mean(rep, m, ModalitySubset::S2Only);
        const std::string name(model_kind_name(m));
        o.check(a <= b + tol, name + " SIF/S1/S2 <= S1/S2");
        o.check(b <= c + tol, name + " S1/S2 <= S2-only");
        o.note(name + fmt(": %.3f", a) + fmt(" / %.3f", b) + fmt(" / %.3f", c) + fmt(" (tolerance %.3f)", tol));
    }

    AblationConfig flat = run.config;
    flat.site.gpp_informative = false;
    flat.validation_site.gpp_informative = false;
    flat.models = {ModelKind::UNet, ModelKind::RandomForest};
    flat.subsets = {ModalitySubset::SifS1S2, ModalitySubset::S1S2};
    const auto t0 = std::chrono::steady_clock::now();
    const AblationResult res = ablation(flat, [&](const RunRecord& r) {
        std::fprintf(stderr, "  %7.1fs %-6s %-10s run %d  validation %7.3f (uninformative GPP)\n", seconds_since(t0),
                     model_kind_name(r.model).data(), subset_name(r.subset).data(), r.run, r.validation.rmse);
    });
    const double flat_tol = 0.05 * target_std(flat.validation_site);
    for (ModelKind m : flat.models) {
        const double a = validation_mean(res.report, m, ModalitySubset::SifS1S2);
        const double b = validation_mean(res.report, m, ModalitySubset::S1S2);
        const std::string name(model_kind_name(m));
        o.check(std::abs(a - b) <= flat_tol, name + " shows no gain from uninformative GPP");
        o.note(name + " uninformative GPP" + fmt(": %.3f", a) + fmt(" vs %.3f", b) + fmt(" (tolerance %.3f)", flat_tol));
    }
    return o;
}

Outcome masked_gradient() {
    Outcome o;
    Rng rng(404);
    double worst = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 64;  // 8 x 8
        std::vector<double> pred(n), target(n);
        std::vector<std::uint8_t> mask(n);
        for (std::size_t i = 0; i < n; ++i) {
            pred[i] = rng.normal(100, 40);
            target[i] = rng.normal(100, 40);
            mask[i] = rng.bernoulli(0.3);
        }
        mask[rng.index(n)] = 1;
        const auto g = masked_rmse_grad(pred, target, mask);
        for (std::size_t i = 0; i < n; ++i) {
            if (!mask[i]) {
                o.check(g[i] == 0.0, "zero gradient off the mask");
                continue;
            }
            const double h = 1e-5 * std::max(1.0, std::abs(pred[i]));
            auto up = pred, dn = pred;
            up[i] += h;
            dn[i] -= h;
            const double fd = (masked_rmse(up, target, mask).loss - masked_rmse(dn, target, mask).loss) / (2 * h);
            const double rel = std::abs(fd - g[i]) / std::max({std::abs(fd), std::abs(g[i]), 1e-12});
            worst = std::max(worst, rel);
        }
    }
    o.check(worst < 1e-4, "finite-difference agreement");
    o.note("worst relative error " + fmt("%.2e", worst));
    return o;
}

Outcome compositing_oracle() {
    Outcome o;
    Rng rng(505);
    std::size_t compared = 0, mismatched = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const Grid g = grid30(3 + static_cast<int>(rng.index(6)), 3 + static_cast<int>(rng.index(6)));
        const std::size_t len = 1 + rng.index(7);
        std::vector<Raster> scenes, scl;
        std::set<int> offsets;
        while (offsets.size() < len) offsets.insert(static_cast<int>(rng.index(60)));
        std::vector<Date> dates;
        for (int off : offsets) dates.push_back(day(off));
        for (std::size_t s = 0; s < len; ++s) {
            scenes.push_back(oracle::random_raster(g, 2, rng, 0.1));
            std::vector<double> codes(g.pixel_count());
            for (auto& c : codes) c = static_cast<double>(rng.index(12));
            scl.push_back(make_single_band(g, scl_channel(), std::move(codes)));
        }
        const SceneSeries series(scenes, dates, scl);
        const int a = static_cast<int>(rng.index(40));
        const DateWindow window{day(a), day(a + 5 + static_cast<int>(rng.index(30)))};

        const Raster med = median_composite(series);
        std::optional<Raster> mean;
        bool any_in_window = false;
        for (const Date& d : dates) any_in_window = any_in_window || (window.first <= d && d <= window.last);
        try {
            mean = temporal_mean(series, window);
            o.check(any_in_window, "temporal_mean accepted an empty window");
        } catch (const Error& e) {
            o.check(!any_in_window && e.code() == ErrorCode::EmptyWindow, "temporal_mean raised " + std::string(e.what()));
        }
        for (std::size_t p = 0; p < g.pixel_count(); ++p) {
            for (std::size_t c = 0; c < 2; ++c) {
                double expect = 0;
                bool ok = oracle::median_oracle(series, p, c, expect);
                ++compared;
                if (med.valid(p) != ok || (ok && med.plane(c)[p] != expect)) ++mismatched;
                if (!mean) continue;
                ok = oracle::mean_oracle(series, p, c, window, expect);
                ++compared;
                if (mean->valid(p) != ok || (ok && mean->plane(c)[p] != expect)) ++mismatched;
            }
        }
    }
    o.check(mismatched == 0, "exact agreement with the loop oracles");
    o.note(std::to_string(compared) + " pixel values compared, " + std::to_string(mismatched) + " mismatched");
    return o;
}

Outcome resampling_oracle() {
    Outcome o;
    Rng rng(606);
    double worst = 0;
    std::size_t validity_mismatch = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const Grid sg = grid30(6 + static_cast<int>(rng.index(8)), 6 + static_cast<int>(rng.index(8)),
                               rng.uniform(-500, 500), rng.uniform(-500, 500));
        const Raster src = oracle::random_raster(sg, 2, rng, trial % 2 ? 0.15 : 0.0);
        Grid tg = grid30(4 + static_cast<int>(rng.index(10)), 4 + static_cast<int>(rng.index(10)),
                         sg.origin_x + rng.uniform(-60, 120), sg.origin_y + rng.uniform(-120, 60));
        tg.pixel_size_x = rng.uniform(8, 50);
        tg.pixel_size_y = rng.uniform(8, 50);
        const Raster out = bilinear_resample(src, tg);
        for (int r = 0; r < tg.height; ++r) {
            for (int c = 0; c < tg.width; ++c) {
                const auto ref = oracle::bilinear_pixel(src, tg, r, c);
                if (out.valid(r, c) != ref.valid) {
                    ++validity_mismatch;
                    continue;
                }
                if (!ref.valid) continue;
                for (std::size_t ch = 0; ch < 2; ++ch) worst = std::max(worst, std::abs(out.value(ch, r, c) - ref.values[ch]));
            }
        }

        // Same grid, then a whole-pixel shift of it.
        const Raster same = bilinear_resample(src, sg);
        bool exact = same.valid_mask() == src.valid_mask();
        for (std::size_t i = 0; exact && i < src.data().size(); ++i) {
            const double a = same.data()[i], b = src.data()[i];
            exact = (std::isnan(a) && std::isnan(b)) || a == b;
        }
        const int dx = static_cast<int>(rng.index(3)), dy = static_cast<int>(rng.index(3));
        const Grid shifted = grid30(sg.width - dx, sg.height - dy, sg.origin_x + dx * 30.0, sg.origin_y - dy * 30.0);
        const Raster sh = bilinear_resample(src, shifted);
        for (int r = 0; exact && r < shifted.height; ++r) {
            for (int c = 0; exact && c < shifted.width; ++c) {
                exact = sh.valid(r, c) == src.valid(r + dy, c + dx);
                for (std::size_t ch = 0; exact && ch < 2 && sh.valid(r, c); ++ch) {
                    exact = sh.value(ch, r, c) == src.value(ch, r + dy, c + dx);
                }
            }
        }
        o.check(exact, "identity on aligned grids (trial " + std::to_string(trial) + ")");
    }
    o.check(validity_mismatch == 0, "validity agrees with the oracle");
    o.check(worst <= 1e-9, "values within 1e-9 of the oracle");
    o.note("worst deviation " + fmt("%.2e", worst));
    return o;
}

Outcome matching_conservation() {
    Outcome o;
    Rng rng(707);
    std::size_t footprints = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const int w = 5 + static_cast<int>(rng.index(40)), h = 5 + static_cast<int>(rng.index(40));
        const Grid g = grid30(w, h, rng.uniform(-1000, 1000), rng.uniform(-1000, 1000));
        FootprintSet fps{{}, g.crs_id};
        const std::size_t n = rng.index(400);
        for (std::size_t i = 0; i < n; ++i) {
            double x = rng.uniform(g.origin_x - 90, g.origin_x + w * 30.0 + 90);
            double y = rng.uniform(g.origin_y - h * 30.0 - 90, g.origin_y + 90);
            if (rng.bernoulli(0.1)) x = g.origin_x + 30.0 * static_cast<double>(rng.index(w + 1));  // on a cell edge
            if (rng.bernoulli(0.1)) y = g.origin_y - 30.0 * static_cast<double>(rng.index(h + 1));
            fps.footprints.push_back({x, y, rng.uniform(0, 300), true, "s"});
        }
        footprints += n;
        const MatchResult m = match_footprints(fps, g);
        const auto ref = oracle::match_oracle(fps, g);
        o.check(m.n_assigned + m.n_out_of_bounds == m.n_total && m.n_total == n, "assigned + out-of-bounds = total");
        o.check(m.n_assigned == ref.assigned, "assigned count matches the oracle");
        o.check(m.mask == ref.mask, "supervised cells match the oracle");
        for (std::size_t p = 0; p < g.pixel_count(); ++p) {
            if (ref.mask[p] && m.target.plane(0)[p] != ref.value[p]) {
                o.check(false, "cell mean (trial " + std::to_string(trial) + ")");
                break;
            }
        }
    }
    o.note(std::to_string(footprints) + " footprints over 100 sets");
    return o;
}

Outcome nbr_checks() {
    Outcome o;
    const Grid g = grid30(100, 100);
    Rng rng(808);
    std::vector<double> a(g.pixel_count()), b(g.pixel_count()), zero(g.pixel_count(), 0.0);
    for (auto& v : a) v = rng.uniform(1e-6, 1.0);
    for (auto& v : b) v = rng.uniform(0.0, 1.0);
    const Raster ra = make_single_band(g, {Modality::S2, "B08"}, a);
    const Raster rb = make_single_band(g, {Modality::S2, "B12"}, b);
    const Raster rz = make_single_band(g, {Modality::S2, "B12"}, zero);

    const Raster same = nbr(ra, make_single_band(g, {Modality::S2, "B12"}, a));
    const Raster one = nbr(ra, rz);
    const Raster ab = nbr(ra, rb);
    const Raster ba = nbr(make_single_band(g, {Modality::S2, "B08"}, b), make_single_band(g, {Modality::S2, "B12"}, a));
    bool zero_ok = true, one_ok = true, bounded = true, anti = true;
    for (std::size_t p = 0; p < g.pixel_count(); ++p) {
        zero_ok = zero_ok && same.valid(p) && same.plane(0)[p] == 0.0;
        one_ok = one_ok && one.valid(p) && one.plane(0)[p] == 1.0;
        if (!ab.valid(p)) continue;
        const double v = ab.plane(0)[p];
        bounded = bounded && v >= -1.0 && v <= 1.0;
        anti = anti && ba.valid(p) && ba.plane(0)[p] == -v;
    }
    o.check(zero_ok, "nbr(x, x) = 0");
    o.check(one_ok, "nbr(x, 0) = 1");
    o.check(bounded, "bounded in [-1, 1] on 10^4 pairs");
    o.check(anti, "antisymmetric");
    const Grid g1 = grid30(1, 1);
    const double v = nbr(make_single_band(g1, {Modality::S2, "B08"}, {0.3}), make_single_band(g1, {Modality::S2, "B12"}, {0.1}))
                         .plane(0)[0];
    o.check(std::abs(v - 0.5) <= 1e-12, "nbr(0.3, 0.1) = 0.5");
    o.note("nbr(0.3, 0.1) = " + fmt("%.17g", v));
    return o;
}

Outcome wildfire_pipeline() {
    Outcome o;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        BurnParams bp;
        bp.scene.seed = seed;
        const BurnScene b = generate_burn_scene(bp);
        const ImpactReport r = impact_report(agb_delta(b.after_agb, b.before_agb), nbr(b.b08_after, b.b12_after), b.cell_area_ha);
        const double dev = std::abs(r.total_loss - b.true_loss_mg) / b.true_loss_mg;
        o.check(r.correlation_defined && r.correlation > 0.7, "correlation > 0.7 (seed " + std::to_string(seed) + ")");
        o.check(dev <= 0.10, "total loss within 10% (seed " + std::to_string(seed) + ")");
        o.note("seed " + std::to_string(seed) + fmt(": r = %.3f", r.correlation) + fmt(", loss %.0f", r.total_loss) +
               fmt(" vs %.0f Mg C", b.true_loss_mg));
    }
    return o;
}

std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) out += c == '\'' ? std::string("'\\''") : std::string(1, c);
    return out + "'";
}

std::set<fs::path> relative_files(const fs::path& root) {
    std::set<fs::path> out;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) out.insert(fs::relative(e.path(), root));
    return out;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool rasters_match(const fs::path& a, const fs::path& b) {
    const Raster x = read_raster(a), y = read_raster(b);
    if (x.grid() != y.grid() || x.channels() != y.channels() || x.valid_mask() != y.valid_mask()) return false;
    for (std::size_t i = 0; i < x.data().size(); ++i) {
        const double u = x.data()[i], v = y.data()[i];
        if (std::isnan(u) != std::isnan(v)) return false;
        if (!std::isnan(u) && std::abs(u - v) > 1e-9) return false;
    }
    return true;
}

Outcome determinism(const std::string& cli) {
    Outcome o;
    if (cli.empty() || !fs::exists(cli)) {
        o.check(false, "command-line tool available (pass --cli)");
        return o;
    }
    const std::vector<std::string> stages = {
        "synth --out site --size 128 --seed 5 --burn",
        "composite --manifest site/s2/manifest.txt --out comp/s2.tif",
        "composite --manifest site/s1/manifest.txt --method mean --out comp/s1.tif",
        "composite --manifest site/gpp/manifest.txt --method mean --out comp/gpp.tif",
        "resample --src comp/s1.tif --like comp/s2.tif --out comp/s1_on_s2.tif",
        "match --footprints site/footprints.csv --like comp/s2.tif --out comp/target.tif",
        "cube --scene site --out cube/cube.tif",
        "cube --s2 comp/s2.tif --s1 comp/s1.tif --gpp comp/gpp.tif --target comp/target.tif --subset S1/S2 --out cube/s1s2.tif",
        "train --cube cube/cube.tif --model linear --out model/linear.bin",
        "train --cube cube/cube.tif --model rf --out model/rf.bin",
        "train --cube cube/cube.tif --model gbm --out model/gbm.bin",
        "train --cube cube/cube.tif --model unet --set train.max_epochs=3 --set train.tile_size=32 "
        "--set train.crop_size=32 --out model/unet.bin",
        "search --cube cube/cube.tif --model gbm --n 3 --k 3 --out search",
        "evaluate --artifact model/rf.bin --cube cube/cube.tif --split testing --out eval",
        "predict --artifact model/unet.bin --cube cube/cube.tif --out pred/unet.tif",
        "predict --artifact model/rf.bin --cube cube/cube.tif --out pred/rf.tif",
        "zones --prediction pred/rf.tif --zones site/zones.tif --out zones",
        "wildfire --before site/burn/before_agb.tif --after site/burn/after_agb.tif --b08 site/burn/b08_after.tif "
        "--b12 site/burn/b12_after.tif --out fire",
        "ablate --size 128 --n-runs 2 --set \"ablate.models=['linear','gbm','unet']\" --set train.max_epochs=2 "
        "--set train.tile_size=32 --set train.crop_size=32 --out ablate",
    };
    const fs::path root = fs::temp_directory_path() / ("agbmap_determinism_" + std::to_string(::getpid()));
    fs::remove_all(root);
    const fs::path log = root / "log.txt";
    for (const char* rerun : {"a", "b"}) {
        const fs::path dir = root / rerun;
        fs::create_directories(dir);
        for (const auto& s : stages) {
            const std::string cmd = "cd " + shell_quote(dir.string()) + " && AGBMAP_WORKERS=1 " + shell_quote(cli) + " " +
                                    s + " >>" + shell_quote(log.string()) + " 2>&1";
            if (std::system(cmd.c_str()) != 0) o.check(false, "stage ran: " + s.substr(0, s.find(' ')));
        }
    }
    const auto fa = relative_files(root / "a"), fb = relative_files(root / "b");
    o.check(fa == fb, "both runs wrote the same files");
    std::size_t rasters = 0, bytes = 0;
    for (const auto& f : fa) {
        if (!fb.count(f)) continue;
        if (f.extension() == ".tif") {
            ++rasters;
            o.check(rasters_match(root / "a" / f, root / "b" / f), "raster values of " + f.string());
        } else {
            ++bytes;
            o.check(slurp(root / "a" / f) == slurp(root / "b" / f), "bytes of " + f.string());
        }
    }
    o.note(std::to_string(stages.size()) + " stages; " + std::to_string(bytes) + " files byte-compared, " +
           std::to_string(rasters) + " rasters value-compared");
    if (o.pass) fs::remove_all(root);
    else o.note("outputs kept in " + root.string());
    return o;
}

Datacube cube_with_supervision(const Grid& g, const std::vector<std::uint8_t>& mask) {
    const std::size_t n = g.pixel_count();
    std::vector<double> x(n, 1.0), t(n, NAN);
    for (std::size_t i = 0; i < n; ++i)
        if (mask[i]) t[i] = 1.0;
    Datacube c;
    c.inputs = make_single_band(g, {Modality::S2, "B04"}, x);
    c.target = make_single_band(g, agb_channel(), t);
    c.target_mask = mask;
    return c;
}

Outcome split_hygiene() {
    Outcome o;
    Rng rng(1111);
    int configs = 0, tile_configs = 0, attempts = 0;
    while (configs < 100 && attempts < 1000) {
        ++attempts;
        const Grid g = grid30(16 + static_cast<int>(rng.index(80)), 16 + static_cast<int>(rng.index(80)));
        const double density = rng.uniform(0.01, 0.3);
        std::vector<std::uint8_t> mask(g.pixel_count());
        for (auto& m : mask) m = rng.bernoulli(density);
        const Datacube cube = cube_with_supervision(g, mask);
        SplitSpec spec;
        spec.train_fraction = rng.uniform(0.5, 0.95);
        spec.unit = rng.bernoulli(0.5) ? SplitUnit::Tile : SplitUnit::Pixel;
        spec.seed = rng.next_u64();
        spec.tile_size = 4 + static_cast<int>(rng.index(13));
        CubeSplit s;
        try {
            s = split(cube, spec);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::TooFewUnits) continue;
            throw;
        }
        ++configs;
        // Set oracle: every supervised pixel on exactly one side, nothing else on either.
        std::set<std::size_t> train, test, supervised;
        for (std::size_t p = 0; p < mask.size(); ++p) {
            if (mask[p]) supervised.insert(p);
            if (s.train_mask[p]) train.insert(p);
            if (s.test_mask[p]) test.insert(p);
        }
        std::set<std::size_t> both, all;
        std::set_intersection(train.begin(), train.end(), test.begin(), test.end(), std::inserter(both, both.end()));
        std::set_union(train.begin(), train.end(), test.begin(), test.end(), std::inserter(all, all.end()));
        o.check(both.empty(), "train and test disjoint");
        o.check(all == supervised, "train and test cover the supervision");
        o.check(!train.empty() && !test.empty(), "both sides non-empty");
        if (spec.unit == SplitUnit::Tile) {
            ++tile_configs;
            auto key = [](const TileView& t) { return std::pair(t.row0, t.col0); };
            std::set<std::pair<int, int>> tr, te;
            for (const auto& t : s.train_tiles) tr.insert(key(t));
            for (const auto& t : s.test_tiles) te.insert(key(t));
            bool disjoint = true;
            for (const auto& k : te) disjoint = disjoint && !tr.count(k);
            o.check(disjoint, "tile sides disjoint");
            o.check(tile_supervision(cube, s.train_tiles) == s.train_mask, "train pixels are those inside train tiles");
            o.check(tile_supervision(cube, s.test_tiles) == s.test_mask, "test pixels are those inside test tiles");
        }

        const std::size_t n = all.size();
        for (int k : {5, 2 + static_cast<int>(rng.index(8))}) {
            if (n < static_cast<std::size_t>(k)) continue;
            const auto folds = kfold_partition(n, k, rng.next_u64());
            std::set<std::size_t> seen;
            std::size_t lo = n, hi = 0, total = 0;
            for (const auto& f : folds) {
                for (auto u : f) seen.insert(u);
                total += f.size();
                lo = std::min(lo, f.size());
                hi = std::max(hi, f.size());
            }
            o.check(static_cast<int>(folds.size()) == k, "k folds");
            o.check(total == n && seen.size() == n && *seen.rbegin() == n - 1, "folds disjoint and exhaustive");
            o.check(hi - lo <= 1, "fold sizes differ by at most 1");
        }
    }
    o.check(configs == 100, "100 configurations");
    o.note(std::to_string(configs) + " configurations (" + std::to_string(tile_configs) + " tile splits)");
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    std::string cli;
    std::set<int> only;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--cli" && i + 1 < argc) {
            cli = fs::absolute(argv[++i]).string();
        } else if (a == "--only" && i + 1 < argc) {
            std::stringstream ss(argv[++i]);
            for (std::string t; std::getline(ss, t, ',');) only.insert(std::stoi(t));
        } else {
            std::cerr << "usage: acceptance [--cli PATH] [--only 1,2,...]\n";
            return 2;
        }
    }

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"ablation table, 4 models x 3 input subsets x 2 splits", table_reproduction},
        {"UNet has the lowest validation RMSE", unet_ordering},
        {"SIF-based GPP lowers validation RMSE, and only when informative", modality_ablation},
        {"masked RMSE gradient", masked_gradient},
        {"compositing matches loop oracles", compositing_oracle},
        {"bilinear resampling matches the oracle", resampling_oracle},
        {"footprint matching conservation", matching_conservation},
        {"normalised burn ratio", nbr_checks},
        {"wildfire impact on a synthetic burn", wildfire_pipeline},
        {"reruns are deterministic", [&] { return determinism(cli); }},
        {"split hygiene", split_hygiene},
    };

    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!only.empty() && !only.count(id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o.check(false, std::string("exception: ") + e.what());
        }
        for (const auto& n : o.notes) std::cout << "    " << n << "\n";
        std::cout << (o.pass ? "PASS" : "FAIL") << " " << id << ": " << criteria[i].first << " ("
                  << fmt("%.1f s", seconds_since(t0)) << ")" << std::endl;
        failed += o.pass ? 0 : 1;
    }
    return failed == 0 ? 0 : 1;
}
