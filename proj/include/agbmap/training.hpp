#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "agbmap/models.hpp"
#include "agbmap/rng.hpp"

namespace agbmap {

struct TrainConfig {
    double learning_rate = 0.01;
    int batch_size = 32;
    int max_epochs = 100;
    int patience = 10;
    int crop_size = 512;
    bool augment = true;
    double hflip_p = 0.5;
    double vflip_p = 0.5;
    std::uint64_t seed = 0;
    int n_runs = 3;
    int depth = 4;
    int base_width = 32;
    int tile_size = 512;  // training tiles cut from the cube

    /// Throws InvalidArgument listing every violated field.
    void validate() const;
    /// Inference window stored in the artifact: the crop size, at least 256.
    int inference_tile() const;
};

/// One training tile: inputs as float (NaN replaced by 0), sparse targets.
struct TileSample {
    int channels = 0;
    int size = 0;
    std::vector<float> input;          // channels x size x size
    std::vector<double> target;        // size x size, NaN where unknown
    std::vector<std::uint8_t> mask;    // supervised pixels

    std::size_t supervised() const;
};

/// Cuts `tiles` out of a normalised cube; only pixels in `supervision` (and
/// inside the raster) are marked supervised.
std::vector<TileSample> make_samples(const Datacube& cube, std::span<const TileView> tiles,
                                     std::span<const std::uint8_t> supervision);

/// Joint flip/crop of input, target and mask. Tiles smaller than the crop are
/// reflection-padded first. When the tile holds supervision the crop window
/// always contains at least one supervised pixel.
TileSample augment(const TileSample& sample, int crop_size, double hflip_p, double vflip_p, Rng& rng);
TileSample hflip(const TileSample& sample);
TileSample vflip(const TileSample& sample);

using EpochCallback = std::function<void(const EpochLoss&)>;

/// Adam on masked RMSE over batches of augmented tiles; early-stops on the
/// test tiles and returns the best epoch's weights. Throws NoSupervision,
/// DivergedLoss.
ModelArtifact train_unet(const Datacube& cube, const CubeSplit& split, const TrainConfig& cfg,
                         const EpochCallback& on_epoch = {});

/// Fits a pixel-wise model on the supervised pixels inside `train_mask`.
ModelArtifact train_tabular(const Datacube& cube, std::span<const std::uint8_t> train_mask, ModelKind kind,
                            const Hyperparams& hyperparams, std::uint64_t seed);

struct ModelSpec {
    ModelKind kind = ModelKind::Linear;
    Hyperparams hyperparams;  // tabular settings, or UNet overrides (see apply_unet_hyperparams)
    TrainConfig train;
};

/// Overrides learning_rate, base_width, depth, batch_size, max_epochs from a map.
TrainConfig apply_unet_hyperparams(TrainConfig cfg, const Hyperparams& hp);

/// Trains the spec on `train_mask`/`train_tiles`, and for UNet early-stops on `test_tiles`.
ModelArtifact train_model(const Datacube& cube, const CubeSplit& split, const ModelSpec& spec, std::uint64_t seed);

/// Seeded partition of n units into k folds whose sizes differ by at most 1.
/// Throws TooFewUnits when n < k.
std::vector<std::vector<std::size_t>> kfold_partition(std::size_t n_units, int k, std::uint64_t seed);

struct KFoldResult {
    std::vector<double> scores;
    double mean = 0.0;
    double std = 0.0;  // population std over folds
};

/// k-fold over supervised pixels (tabular) or supervised tiles (UNet). The
/// cube must be normalised.
KFoldResult kfold_cv(const Datacube& cube, const ModelSpec& spec, int k, std::uint64_t seed, int workers = 1);

struct SearchDim {
    enum class Kind { Choice, LogUniform, Uniform };
    std::string name;
    Kind kind = Kind::Choice;
    std::vector<double> choices;  // "none" is stored as 0
    double lo = 0.0, hi = 0.0;
};

struct SearchSpace {
    ModelKind model = ModelKind::RandomForest;
    std::vector<SearchDim> dims;
    int n_samples = 10;

    Hyperparams draw(Rng& rng) const;
};

SearchSpace default_search_space(ModelKind kind);
/// TOML: top-level `n_samples`, then one table per model (unet, rf, gbm, linear)
/// whose keys are arrays (discrete choices) or {log_uniform = [lo, hi]} /
/// {uniform = [lo, hi]}.
SearchSpace load_search_space(const std::filesystem::path& path, ModelKind kind);

struct Trial {
    std::size_t index = 0;
    Hyperparams hyperparams;
    std::vector<double> fold_scores;
    double mean = 0.0;
    double std = 0.0;
};

struct SearchResult {
    std::vector<Trial> trials;
    std::size_t best = 0;  // argmin of mean, earliest on ties
};

using Objective = std::function<std::vector<double>(const Hyperparams&, std::size_t trial)>;

/// n seeded draws, scored by `objective` (one score per fold).
SearchResult random_search(const SearchSpace& space, const Objective& objective, int n, std::uint64_t seed,
                           int workers = 1);
/// CSV: trial, hyperparams (JSON), fold_scores (JSON), mean, std.
void write_trial_log(const std::filesystem::path& path, const SearchResult& result);
std::string hyperparams_json(const Hyperparams& hp);

}  // namespace agbmap
