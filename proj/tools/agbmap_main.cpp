// agbmap command-line tool: one subcommand per pipeline stage.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "agbmap/config.hpp"
#include "agbmap/csv.hpp"
#include "agbmap/error.hpp"
#include "agbmap/evaluation.hpp"
#include "agbmap/geotiff.hpp"
#include "agbmap/image.hpp"
#include "agbmap/pipeline.hpp"
#include "agbmap/training.hpp"
#include "agbmap/wildfire.hpp"

namespace fs = std::filesystem;
using namespace agbmap;
using json = nlohmann::ordered_json;

namespace {

void log(const std::string& msg) { std::cerr << "[agbmap] " << msg << std::endl; }

std::string toml_literal(const std::string& s) { return "'" + s + "'"; }

// Options every subcommand accepts, plus flag-level overrides collected as
// dotted TOML keys.
struct Common {
    std::optional<fs::path> config;
    std::vector<std::string> sets;
    std::vector<Override> flags;
    std::map<std::string, std::string> args;

    RunConfig resolve() const {
        std::vector<Override> all;
        for (const auto& s : sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos) throw Error(ErrorCode::InvalidArgument, "--set expects key=value, got '" + s + "'");
            all.emplace_back(s.substr(0, eq), s.substr(eq + 1));
        }
        all.insert(all.end(), flags.begin(), flags.end());
        return load_run_config(config, all);
    }
};

class Command {
public:
    Command(CLI::App& app, const std::string& name, const std::string& description)
        : sub_(app.add_subcommand(name, description)), name_(name) {
        sub_->add_option("--config", common_.config, "TOML run configuration")->check(CLI::ExistingFile);
        sub_->add_option("--set", common_.sets, "Override a config key, e.g. train.max_epochs=20");
    }
    virtual ~Command() = default;

    bool selected() const { return sub_->parsed(); }
    virtual void run() = 0;

protected:
    // Flag bound to a config key; applied only when given.
    template <class T>
    void flag(const std::string& opt, const std::string& key, const std::string& help) {
        auto value = std::make_shared<T>();
        auto* o = sub_->add_option(opt, *value, help);
        finishers_.push_back([this, o, value, key] {
            if (o->count() == 0) return;
            if constexpr (std::is_same_v<T, std::string>) {
                common_.flags.emplace_back(key, toml_literal(*value));
            } else {
                common_.flags.emplace_back(key, std::to_string(*value));
            }
        });
    }

    CLI::Option* path(const std::string& opt, fs::path& target, const std::string& help, bool required = true,
                      bool must_exist = false) {
        auto* o = sub_->add_option(opt, target, help);
        if (required) o->required();
        if (must_exist) o->check(CLI::ExistingPath);
        return o;
    }

    RunConfig config() {
        for (auto& f : finishers_) f();
        for (const auto* o : sub_->get_options()) {
            if (o->count() == 0 || o->get_name() == "--help") continue;
            std::string joined;
            for (const auto& r : o->results()) joined += (joined.empty() ? "" : " ") + r;
            common_.args[o->get_name().substr(o->get_name().rfind('-') + 1)] = joined;
        }
        return common_.resolve();
    }

    void snapshot(const fs::path& dir, const RunConfig& cfg) { write_config_snapshot(dir, name_, cfg, common_.args); }

    CLI::App* sub_;
    std::string name_;
    Common common_;
    std::vector<std::function<void()>> finishers_;
};

fs::path dir_of(const fs::path& file) {
    const fs::path p = file.parent_path();
    return p.empty() ? fs::path(".") : p;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << text;
}

// Cubes normalised with other statistics are brought back to raw values so
// the artifact's own statistics can be applied.
Datacube cube_for(const ModelArtifact& artifact, Datacube cube) {
    if (cube.normalized() && cube.norm_stats != artifact.norm_stats) cube = denormalize(cube);
    return prepare_cube(artifact, cube);
}

class Synth : public Command {
public:
    explicit Synth(CLI::App& app) : Command(app, "synth", "Generate a synthetic site") {
        path("--out", out_, "Output directory");
        flag<int>("--size", "scene.size", "Scene width and height in pixels");
        flag<std::uint64_t>("--seed", "scene.seed", "Scene seed");
        sub_->add_option("--site", site_, "Which configured site to generate")->check(CLI::IsMember({"train", "validation"}));
        sub_->add_flag("--burn", burn_, "Also write a burn scene under burn/");
    }

    void run() override {
        const RunConfig cfg = config();
        const SceneParams& p = site_ == "validation" ? cfg.validation_scene : cfg.scene;
        const auto scene = generate_scene(p);
        const auto fps = sample_footprints(scene.true_agb, p);
        write_site_dir(out_, scene, fps);
        write_raster(out_ / "zones.tif", generate_zones(p.grid(), derive_seed(p.seed, 0x20e5)));
        log("wrote " + std::to_string(p.size) + "x" + std::to_string(p.size) + " site with " +
            std::to_string(fps.footprints.size()) + " footprints to " + out_.string());
        if (burn_) {
            BurnParams bp;
            bp.scene.size = p.size;
            bp.scene.seed = p.seed;
            bp.scene.pixel_size = p.pixel_size;
            bp.scene.origin_x = p.origin_x;
            bp.scene.origin_y = p.origin_y;
            bp.scene.crs_id = p.crs_id;
            const BurnScene b = generate_burn_scene(bp);
            const fs::path d = out_ / "burn";
            fs::create_directories(d);
            write_raster(d / "before_agb.tif", b.before_agb);
            write_raster(d / "after_agb.tif", b.after_agb);
            write_raster(d / "b08_before.tif", b.b08_before);
            write_raster(d / "b12_before.tif", b.b12_before);
            write_raster(d / "b08_after.tif", b.b08_after);
            write_raster(d / "b12_after.tif", b.b12_after);
            write_text(d / "truth.json", json{{"true_loss_mg_c", b.true_loss_mg}, {"cell_area_ha", b.cell_area_ha}}.dump(2) + "\n");
        }
        snapshot(out_, cfg);
    }

private:
    fs::path out_;
    std::string site_ = "train";
    bool burn_ = false;
};

class Composite : public Command {
public:
    explicit Composite(CLI::App& app) : Command(app, "composite", "Cloud-filtered composite of a scene series") {
        path("--manifest", manifest_, "Scene manifest (path,date[,scl_path] per line)", true, true);
        path("--out", out_, "Output GeoTIFF");
        flag<std::string>("--method", "compositing.method", "median or mean");
        flag<std::string>("--window", "compositing.window", "YYYY-MM-DD:YYYY-MM-DD");
    }

    void run() override {
        const RunConfig cfg = config();
        fs::create_directories(dir_of(out_));
        const SceneSeries series = load_series(read_manifest(manifest_));
        const DateWindow window = cfg.resolved_window();
        const Raster r = cfg.composite_method == "median" ? median_composite(restrict_to_window(series, window))
                                                          : temporal_mean(series, window);
        write_raster(out_, r);
        log(cfg.composite_method + " composite of " + std::to_string(series.size()) + " scenes: " +
            std::to_string(r.valid_count()) + " valid pixels");
        snapshot(dir_of(out_), cfg);
    }

private:
    fs::path manifest_, out_;
};

class Resample : public Command {
public:
    explicit Resample(CLI::App& app) : Command(app, "resample", "Bilinear resampling onto another raster's grid") {
        path("--src", src_, "Raster to resample", true, true);
        path("--like", like_, "Raster whose grid is the target", true, true);
        path("--out", out_, "Output GeoTIFF");
    }

    void run() override {
        const RunConfig cfg = config();
        fs::create_directories(dir_of(out_));
        write_raster(out_, bilinear_resample(read_raster(src_), read_raster(like_).grid()));
        snapshot(dir_of(out_), cfg);
    }

private:
    fs::path src_, like_, out_;
};

class Match : public Command {
public:
    explicit Match(CLI::App& app) : Command(app, "match", "Average footprints onto a raster grid") {
        path("--footprints", footprints_, "Footprint CSV (x,y,agb,quality,source_id)", true, true);
        path("--like", like_, "Raster defining the grid", true, true);
        path("--out", out_, "Output target GeoTIFF");
    }

    void run() override {
        const RunConfig cfg = config();
        fs::create_directories(dir_of(out_));
        const Grid grid = read_raster(like_).grid();
        const MatchResult m = match_footprints(read_footprints_csv(footprints_, grid.crs_id), grid);
        write_raster(out_, m.target);
        const json j{{"n_total", m.n_total},
                     {"n_assigned", m.n_assigned},
                     {"n_out_of_bounds", m.n_out_of_bounds},
                     {"n_rejected_quality", m.n_rejected_quality},
                     {"n_cells", std::count(m.mask.begin(), m.mask.end(), 1)}};
        fs::path stats = out_;
        write_text(stats.replace_extension(".json"), j.dump(2) + "\n");
        log("assigned " + std::to_string(m.n_assigned) + " of " + std::to_string(m.n_total) + " footprints");
        snapshot(dir_of(out_), cfg);
    }

private:
    fs::path footprints_, like_, out_;
};

class Cube : public Command {
public:
    explicit Cube(CLI::App& app) : Command(app, "cube", "Assemble a normalised datacube") {
        path("--scene", scene_, "Site directory written by synth (or the same layout)", false, true);
        path("--s2", s2_, "S2 composite", false, true);
        path("--s1", s1_, "S1 mean", false, true);
        path("--gpp", gpp_, "GPP mean", false, true);
        path("--target", target_, "Matched AGB target", false, true);
        path("--stats-from", stats_from_, "Normalise with the statistics of this cube", false, true);
        path("--out", out_, "Output cube GeoTIFF (plus .json sidecar)");
        flag<std::string>("--subset", "data.modality_subset", "SIF/S1/S2, S1/S2 or S2-only");
    }

    void run() override {
        const RunConfig cfg = config();
        fs::create_directories(dir_of(out_));
        Datacube cube;
        if (!scene_.empty()) {
            cube = site_cube(prepare_site(read_site_dir(scene_), cfg.resolved_window()), cfg.subset);
        } else {
            if (s2_.empty() || target_.empty()) {
                throw Error(ErrorCode::InvalidArgument, "cube needs --scene, or --s2 and --target (with --s1/--gpp as required)");
            }
            const Raster s2 = read_raster(s2_);
            auto on_grid = [&](const fs::path& p) {
                Raster r = read_raster(p);
                return same_footprint(r.grid(), s2.grid()) ? r : bilinear_resample(r, s2.grid());
            };
            std::vector<Raster> inputs{s2};
            if (!s1_.empty()) inputs.push_back(on_grid(s1_));
            if (!gpp_.empty()) inputs.push_back(on_grid(gpp_));
            const Raster target = read_raster(target_);
            cube = assemble(inputs, target, target.valid_mask(), cfg.subset);
        }
        if (!stats_from_.empty()) {
            const Datacube ref = read_cube(stats_from_);
            if (!ref.normalized()) throw Error(ErrorCode::StatsMismatch, stats_from_.string() + " holds no statistics");
            cube = normalize(cube, ref.norm_stats);
        } else {
            cube = normalize(cube);
        }
        write_cube(out_, cube, cfg.split_seed);
        log(std::string(subset_name(cube.subset)) + " cube with " + std::to_string(cube.inputs.n_channels()) +
            " channels and " + std::to_string(cube.supervised_count()) + " supervised pixels");
        snapshot(dir_of(out_), cfg);
    }

private:
    fs::path scene_, s2_, s1_, gpp_, target_, stats_from_, out_;
};

class Train : public Command {
public:
    explicit Train(CLI::App& app) : Command(app, "train", "Train one model on a cube") {
        path("--cube", cube_, "Datacube GeoTIFF", true, true);
        path("--out", out_, "Model artifact file");
        flag<std::string>("--model", "model.kind", "unet, linear, rf or gbm");
        flag<std::uint64_t>("--seed", "seed", "Model seed");
        flag<std::uint64_t>("--split-seed", "data.split_seed", "Train/test split seed");
        flag<std::string>("--split-unit", "data.split_unit", "pixel or tile");
        flag<int>("--max-epochs", "train.max_epochs", "UNet epoch limit");
        flag<double>("--lr", "train.learning_rate", "UNet learning rate");
    }

    void run() override {
        const RunConfig cfg = config();
        fs::create_directories(dir_of(out_));
        Datacube cube = read_cube(cube_);
        if (!cube.normalized()) cube = normalize(cube);
        const CubeSplit sp = split(cube, cfg.split_spec());
        ModelArtifact artifact;
        if (cfg.model == ModelKind::UNet) {
            TrainConfig tc = apply_unet_hyperparams(cfg.train, cfg.hyperparams);
            tc.seed = cfg.seed;
            artifact = train_unet(cube, sp, tc, [](const EpochLoss& e) {
                char buf[96];
                std::snprintf(buf, sizeof buf, "epoch %3d  train %.4f  test %.4f", e.epoch, e.train, e.test);
                log(buf);
            });
        } else {
            artifact = train_model(cube, sp, cfg.model_spec(), cfg.seed);
            if (artifact.singular()) log("warning: design matrix is rank deficient");
        }
        const EvalResult test = evaluate(artifact, cube, sp.test_mask);
        save_artifact(out_, artifact);

        if (!artifact.history.empty()) {
            CsvTable h;
            h.header = {"epoch", "train", "test"};
            for (const auto& e : artifact.history) {
                h.rows.push_back({std::to_string(e.epoch), format_double(e.train), format_double(e.test)});
            }
            write_csv(fs::path(out_).concat(".history.csv"), h);
        }
        const json summary{{"model", model_kind_name(artifact.kind)},
                           {"modality_subset", subset_name(artifact.subset)},
                           {"seed", std::to_string(cfg.seed)},
                           {"split_seed", std::to_string(cfg.split_seed)},
                           {"testing_rmse", test.rmse},
                           {"n_testing", test.n_pixels},
                           {"best_epoch", artifact.best_epoch}};
        write_text(fs::path(out_).concat(".json"), summary.dump(2) + "\n");
        std::printf("testing RMSE %.4f Mg C/ha over %zu pixels\n", test.rmse, test.n_pixels);
        snapshot(dir_of(out_), cfg);
    }

private:
    fs::path cube_, out_;
};

class Search : public Command {
public:
    explicit Search(CLI::App& app) : Command(app, "search", "Randomised hyperparameter search with k-fold CV") {
        path("--cube", cube_, "Datacube GeoTIFF", true, true);
        path("--out", out_, "Output directory");
        flag<std::string>("--model", "model.kind", "unet, linear, rf or gbm");
        flag<std::string>("--space", "search.space", "Search space TOML");
        n_opt_ = sub_->add_option("--n", n_, "Number of sampled configurations");
        flag<int>("--k", "search.folds", "Folds");
        flag<int>("--workers", "workers", "Parallel trials");
        flag<std::uint64_t>("--seed", "seed", "Search seed");
    }

    void run() override {
        const RunConfig cfg = config();
        Datacube cube = read_cube(cube_);
        if (!cube.normalized()) cube = normalize(cube);
        const SearchSpace space =
            cfg.search_space.empty() ? default_search_space(cfg.model) : load_search_space(cfg.search_space, cfg.model);
        int n = cfg.search_samples;
        if (n_opt_->count()) n = n_;
        else if (!cfg.search_space.empty()) n = space.n_samples;
        const Objective objective = [&](const Hyperparams& hp, std::size_t trial) {
            ModelSpec spec = cfg.model_spec();
            spec.hyperparams = hp;
            const auto r = kfold_cv(cube, spec, cfg.folds, cfg.split_seed);
            log("trial " + std::to_string(trial) + " " + hyperparams_json(hp) + " mean " + format_double(r.mean));
            return r.scores;
        };
        const SearchResult result = random_search(space, objective, n, cfg.seed, cfg.workers);
        fs::create_directories(out_);
        write_trial_log(out_ / "trials.csv", result);
        const Trial& best = result.trials[result.best];
        const json j{{"model", model_kind_name(cfg.model)},
                     {"best_trial", best.index},
                     {"hyperparams", json::parse(hyperparams_json(best.hyperparams))},
                     {"mean", best.mean},
                     {"std", best.std},
                     {"folds", cfg.folds}};
        write_text(out_ / "best.json", j.dump(2) + "\n");
        std::printf("best trial %zu: %s  mean RMSE %.4f\n", best.index, hyperparams_json(best.hyperparams).c_str(), best.mean);
        snapshot(out_, cfg);
    }

private:
    fs::path cube_, out_;
    int n_ = 0;
    CLI::Option* n_opt_ = nullptr;
};

class Evaluate : public Command {
public:
    explicit Evaluate(CLI::App& app) : Command(app, "evaluate", "Masked RMSE of a model on a cube") {
        path("--artifact", artifact_, "Model artifact");
        path("--cube", cube_, "Datacube GeoTIFF", true, true);
        path("--out", out_, "Output directory");
        sub_->add_option("--split", split_, "all supervised pixels, or the testing split used by train")
            ->check(CLI::IsMember({"all", "testing"}));
        flag<std::uint64_t>("--split-seed", "data.split_seed", "Split seed used in training");
    }

    void run() override {
        RunConfig cfg = config();
        const ModelArtifact artifact = load_artifact(artifact_);
        const Datacube cube = cube_for(artifact, read_cube(cube_));
        std::vector<std::uint8_t> region;
        if (split_ == "testing") {
            cfg.model = artifact.kind;
            region = agbmap::split(cube, cfg.split_spec()).test_mask;
        }
        const EvalResult r = evaluate(artifact, cube, region);
        fs::create_directories(out_);
        const json j{{"model", model_kind_name(artifact.kind)},
                     {"modality_subset", subset_name(artifact.subset)},
                     {"split", split_},
                     {"rmse", r.rmse},
                     {"n_pixels", r.n_pixels}};
        write_text(out_ / "evaluation.json", j.dump(2) + "\n");
        std::printf("RMSE %.4f Mg C/ha over %zu pixels\n", r.rmse, r.n_pixels);
        snapshot(out_, cfg);
    }

private:
    fs::path artifact_, cube_, out_;
    std::string split_ = "all";
};

class Ablate : public Command {
public:
    explicit Ablate(CLI::App& app) : Command(app, "ablate", "Models x input subsets x runs on synthetic sites") {
        path("--out", out_, "Output directory");
        flag<int>("--n-runs", "train.n_runs", "Runs per cell");
        flag<int>("--workers", "workers", "Parallel cells");
        flag<int>("--size", "scene.size", "Scene size (both sites)");
        flag<std::uint64_t>("--seed", "seed", "Base model seed");
    }

    void run() override {
        RunConfig cfg = config();
        const auto t0 = std::chrono::steady_clock::now();
        const AblationResult result = ablation(cfg.ablation(), [&](const RunRecord& r) {
            const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            char buf[160];
            std::snprintf(buf, sizeof buf, "%7.1fs %-6s %-10s run %d  testing %.3f  validation %.3f", s,
                          model_kind_name(r.model).data(), subset_name(r.subset).data(), r.run, r.testing.rmse,
                          r.validation.rmse);
            log(buf);
        });
        fs::create_directories(out_);
        write_report_csv(out_ / "report.csv", result.report);
        write_runs_csv(out_ / "runs.csv", result.runs);
        const std::string table = format_report_table(result.report);
        write_text(out_ / "report.txt", table);
        std::cout << table;
        snapshot(out_, cfg);
    }

private:
    fs::path out_;
};

class Predict : public Command {
public:
    explicit Predict(CLI::App& app) : Command(app, "predict", "Wall-to-wall AGB map from a model") {
        path("--artifact", artifact_, "Model artifact");
        path("--cube", cube_, "Datacube GeoTIFF", true, true);
        path("--out", out_, "Output map GeoTIFF (a .png preview is written alongside)");
        sub_->add_flag("--no-clamp", no_clamp_, "Keep negative predictions");
        sub_->add_option("--overlap", overlap_, "UNet window overlap in pixels");
    }

    void run() override {
        const RunConfig cfg = config();
        fs::create_directories(dir_of(out_));
        const ModelArtifact artifact = load_artifact(artifact_);
        PredictOptions opts;
        opts.overlap = overlap_;
        Raster map = predict_dense(artifact, cube_for(artifact, read_cube(cube_)), opts);
        if (!no_clamp_) map = clamp_nonnegative(map);
        write_raster(out_, map, {{"units", "Mg C/ha"}, {"model", std::string(model_kind_name(artifact.kind))}});
        double hi = 0.0;
        for (std::size_t p = 0; p < map.pixel_count(); ++p)
            if (map.valid(p)) hi = std::max(hi, map.plane(0)[p]);
        fs::path preview = out_;
        render_raster(map, 0, 0.0, hi, viridis).write_png(preview.replace_extension(".png"));
        log("predicted " + std::to_string(map.valid_count()) + " pixels");
        snapshot(dir_of(out_), cfg);
    }

private:
    fs::path artifact_, cube_, out_;
    bool no_clamp_ = false;
    int overlap_ = 64;
};

class Zones : public Command {
public:
    explicit Zones(CLI::App& app) : Command(app, "zones", "AGB distribution per climate zone") {
        path("--prediction", prediction_, "AGB map GeoTIFF", true, true);
        path("--zones", zones_, "Categorical Koppen zone GeoTIFF", true, true);
        path("--out", out_, "Output directory");
        flag<int>("--top-n", "zones.top_n", "Number of zones to keep");
    }

    void run() override {
        const RunConfig cfg = config();
        const ZoneSummary s = climate_zone_summary(read_raster(prediction_), read_raster(zones_), cfg.top_n);
        fs::create_directories(out_);
        write_zone_csv(out_ / "zones.csv", s);
        write_zone_boxplot(out_ / "zones.png", s);
        const json j{{"total_valid", s.total_valid}, {"unclassified", s.unclassified}, {"other", s.other}};
        write_text(out_ / "zones.json", j.dump(2) + "\n");
        for (const auto& z : s.zones) {
            std::printf("%-4s %8zu px  p50 %.1f  [p25 %.1f, p75 %.1f]\n", koppen_name(z.code).data(), z.count, z.p50,
                        z.p25, z.p75);
        }
        snapshot(out_, cfg);
    }

private:
    fs::path prediction_, zones_, out_;
};

class Wildfire : public Command {
public:
    explicit Wildfire(CLI::App& app) : Command(app, "wildfire", "AGB change against the normalised burn ratio") {
        path("--before", before_, "AGB map before the fire", true, true);
        path("--after", after_, "AGB map after the fire", true, true);
        path("--b08", b08_, "Post-fire B08 reflectance", true, true);
        path("--b12", b12_, "Post-fire B12 reflectance", true, true);
        path("--b08-before", b08_pre_, "Pre-fire B08 (for dNBR)", false, true);
        path("--b12-before", b12_pre_, "Pre-fire B12 (for dNBR)", false, true);
        path("--out", out_, "Output directory");
        flag<std::string>("--index", "wildfire.index", "nbr or dnbr");
        flag<double>("--cell-area", "wildfire.cell_area_ha", "Cell area in hectares");
    }

    void run() override {
        const RunConfig cfg = config();
        const Raster delta = agb_delta(read_raster(after_), read_raster(before_));
        Raster index = nbr(read_raster(b08_), read_raster(b12_));
        if (cfg.burn_index == BurnIndex::Dnbr) {
            if (b08_pre_.empty() || b12_pre_.empty()) {
                throw Error(ErrorCode::InvalidArgument, "dNBR needs --b08-before and --b12-before");
            }
            index = dnbr(nbr(read_raster(b08_pre_), read_raster(b12_pre_)), index);
        }
        const ImpactReport r = impact_report(delta, index, cfg.cell_area_ha, cfg.burn_index);
        fs::create_directories(out_);
        write_raster(out_ / "delta.tif", r.delta_agb, {{"units", "Mg C/ha"}});
        write_raster(out_ / "nbr.tif", r.burn_index,
                     {{"index", std::string(burn_index_name(r.index))},
                      {"interpretation", r.index == BurnIndex::Nbr ? "lower NBR suggests a burned area"
                                                                   : "higher dNBR suggests a more severe burn"}});
        write_text(out_ / "report.json", impact_report_json(r));
        write_impact_panel(out_ / "panel.png", r);
        std::printf("total loss %.1f Mg C, r(%s) = %s over %zu pixels\n", r.total_loss,
                    burn_index_name(r.index).data(),
                    r.correlation_defined ? format_double(r.correlation).c_str() : "undefined", r.n_pixels);
        snapshot(out_, cfg);
    }

private:
    fs::path before_, after_, b08_, b12_, b08_pre_, b12_pre_, out_;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sparse-supervision AGB mapping pipeline", "agbmap"};
    app.set_version_flag("--version", std::string(version()));
    app.require_subcommand(1);

    std::vector<std::unique_ptr<Command>> commands;
    commands.push_back(std::make_unique<Synth>(app));
    commands.push_back(std::make_unique<Composite>(app));
    commands.push_back(std::make_unique<Resample>(app));
    commands.push_back(std::make_unique<Match>(app));
    commands.push_back(std::make_unique<Cube>(app));
    commands.push_back(std::make_unique<Train>(app));
    commands.push_back(std::make_unique<Search>(app));
    commands.push_back(std::make_unique<Evaluate>(app));
    commands.push_back(std::make_unique<Ablate>(app));
    commands.push_back(std::make_unique<Predict>(app));
    commands.push_back(std::make_unique<Zones>(app));
    commands.push_back(std::make_unique<Wildfire>(app));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    try {
        for (auto& c : commands)
            if (c->selected()) c->run();
    } catch (const Error& e) {
        std::cerr << "agbmap: error: " << e.what() << std::endl;
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "agbmap: error: " << e.what() << std::endl;
        return 1;
    }
    return 0;
}
