#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "agbmap/models.hpp"
#include "agbmap/synthscene.hpp"
#include "agbmap/training.hpp"

namespace agbmap {

struct EvalResult {
    double rmse = 0.0;
    std::size_t n_pixels = 0;
};

/// Masked RMSE of the artifact's predictions over supervised pixels inside
/// `region` (all supervised pixels when empty). Raw cubes are normalised with
/// the artifact's statistics first. Throws EmptySplit.
EvalResult evaluate(const ModelArtifact& artifact, const Datacube& cube, std::span<const std::uint8_t> region = {});

enum class EvalSplit { Testing, Validation };
std::string_view eval_split_name(EvalSplit split) noexcept;  // "testing", "validation"
EvalSplit parse_eval_split(std::string_view text);

struct EvalRow {
    ModelKind model = ModelKind::UNet;
    ModalitySubset subset = ModalitySubset::SifS1S2;
    EvalSplit split = EvalSplit::Testing;
    double rmse_mean = 0.0;  // Mg C/ha
    double rmse_std = 0.0;   // population std over runs
    int n_runs = 1;
    std::size_t n_pixels = 0;

    friend bool operator==(const EvalRow&, const EvalRow&) = default;
};

struct EvalReport {
    std::vector<EvalRow> rows;

    const EvalRow* find(ModelKind model, ModalitySubset subset, EvalSplit split) const;
    friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

/// Mean and population std of per-run scores.
EvalRow summarize_runs(ModelKind model, ModalitySubset subset, EvalSplit split, std::span<const double> rmses,
                       std::size_t n_pixels);

inline constexpr std::string_view kReportTitle =
    "Evaluation RMSE (Mg C/ha) for different combinations of inputs and models";

/// One CSV row per (model, modality_subset) with testing_ and validation_
/// rmse_mean, rmse_std and n_pixels columns, then n_runs.
std::string format_report_csv(const EvalReport& report);
EvalReport parse_report_csv(std::string_view text);
void write_report_csv(const std::filesystem::path& path, const EvalReport& report);
EvalReport read_report_csv(const std::filesystem::path& path);

/// Text table: one row per model and input combination, Testing and
/// Validation columns as "mean ± std".
std::string format_report_table(const EvalReport& report);

struct AblationConfig {
    SceneParams site;             // training site
    SceneParams validation_site;  // geographically disjoint site
    std::vector<ModelKind> models = all_model_kinds();
    std::vector<ModalitySubset> subsets = all_subsets();
    int n_runs = 3;
    std::uint64_t seed = 0;        // model seeds are derived per run
    std::uint64_t split_seed = 0;  // splits stay fixed across runs
    double train_fraction = 0.9;
    TrainConfig unet;
    std::map<ModelKind, Hyperparams> hyperparams;
    int workers = 1;

    void validate() const;
};

struct RunRecord {
    ModelKind model = ModelKind::UNet;
    ModalitySubset subset = ModalitySubset::SifS1S2;
    int run = 0;
    std::uint64_t seed = 0;
    EvalResult testing;
    EvalResult validation;
    int best_epoch = -1;
};

struct AblationResult {
    EvalReport report;
    std::vector<RunRecord> runs;  // ordered by model, subset, run
};

using AblationProgress = std::function<void(const RunRecord&)>;

/// Trains every (model, subset, run) cell, evaluating on the held-out split of
/// the training site ("testing") and on the whole validation site. Input
/// statistics come from the training site.
AblationResult ablation(const AblationConfig& config, const AblationProgress& progress = {});

/// Per-run CSV: model, modality_subset, run, seed, testing_rmse, validation_rmse, n_testing, n_validation, best_epoch.
void write_runs_csv(const std::filesystem::path& path, std::span<const RunRecord> runs);

/// Standard Koppen-Geiger class names by integer code (1 Af ... 30 EF).
std::string_view koppen_name(int code) noexcept;
int parse_koppen(std::string_view name);

struct ZoneStats {
    int code = 0;
    std::size_t count = 0;
    double p5 = 0.0, p25 = 0.0, p50 = 0.0, p75 = 0.0, p95 = 0.0;
};

struct ZoneSummary {
    std::vector<ZoneStats> zones;  // largest first, ties by code
    std::size_t total_valid = 0;   // valid prediction pixels
    std::size_t unclassified = 0;  // valid prediction, no zone
    std::size_t other = 0;         // classified but outside the top zones
};

/// Linear-interpolation quantile of sorted values, q in [0, 1].
double quantile_sorted(std::span<const double> sorted, double q);

/// Per-zone prediction quantiles for the `top_n` zones by valid-pixel count.
/// Zone code 0 or an invalid zone pixel counts as unclassified. Throws GridMismatch.
ZoneSummary climate_zone_summary(const Raster& prediction, const Raster& zones, int top_n = 6);

/// CSV columns: zone, code, count, p5, p25, p50, p75, p95.
void write_zone_csv(const std::filesystem::path& path, const ZoneSummary& summary);
/// Box per zone (p25-p75 box, p50 line, p5-p95 whiskers).
void write_zone_boxplot(const std::filesystem::path& path, const ZoneSummary& summary);

}  // namespace agbmap
