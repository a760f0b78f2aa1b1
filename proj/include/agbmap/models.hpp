#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "agbmap/cube.hpp"
#include "agbmap/nn.hpp"
#include "agbmap/tabular.hpp"

namespace agbmap {

struct MaskedLoss {
    double loss = 0.0;          // RMSE over masked pixels
    double sum_sq = 0.0;        // sum of squared errors over masked pixels
    std::size_t count = 0;
};

/// sqrt(mean squared error) over mask=true pixels. Unmasked pixels never
/// touch the result, even when they hold NaN. Throws ShapeMismatch, EmptyMask.
MaskedLoss masked_rmse(std::span<const double> pred, std::span<const double> target, std::span<const std::uint8_t> mask);

/// d(loss)/d(pred): (pred - target) / (n * loss) on masked pixels, exactly 0
/// elsewhere (and everywhere when the loss is 0).
std::vector<double> masked_rmse_grad(std::span<const double> pred, std::span<const double> target,
                                     std::span<const std::uint8_t> mask);

enum class ModelKind { UNet, Linear, RandomForest, GradientBoosting };

std::string_view model_kind_name(ModelKind kind) noexcept;  // "unet", "linear", "rf", "gbm"
/// Display name used in reports: "UNet", "LR", "RF", "GBM".
std::string_view model_display_name(ModelKind kind) noexcept;
ModelKind parse_model_kind(std::string_view text);
const std::vector<ModelKind>& all_model_kinds();
TabularKind to_tabular(ModelKind kind);

struct EpochLoss {
    int epoch = 0;
    double train = 0.0;
    double test = 0.0;  // NaN when no test tiles were given
};

/// Trained predictor plus everything needed to apply it to a new cube.
/// Immutable once built; share it freely between threads.
struct ModelArtifact {
    ModelKind kind = ModelKind::Linear;
    ModalitySubset subset = ModalitySubset::SifS1S2;
    std::vector<ChannelStats> norm_stats;
    std::vector<ChannelId> channels;
    std::uint64_t train_seed = 0;
    std::vector<EpochLoss> history;
    int best_epoch = -1;
    int tile_size = 0;  // UNet inference window
    std::shared_ptr<const TabularModel> tabular;
    std::shared_ptr<const nn::UNet> unet;

    bool singular() const noexcept { return tabular && tabular->singular; }
};

/// One row per pixel that is supervised and input-valid, scanned row-major,
/// optionally restricted to `region`. Throws NoSupervisedPixels.
PixelTable extract_pixel_table(const Datacube& cube, std::span<const std::uint8_t> region = {});
/// Features of every input-valid pixel (target left NaN).
PixelTable extract_input_table(const Datacube& cube, std::span<const std::uint8_t> region = {});

ModelArtifact make_tabular_artifact(ModelKind kind, TabularModel model, const Datacube& cube, std::uint64_t seed);

/// Normalises a raw cube with the artifact's statistics; a cube already
/// normalised with exactly those statistics passes through. Throws
/// ModalityMismatch or StatsMismatch.
Datacube prepare_cube(const ModelArtifact& artifact, const Datacube& cube);

struct PredictOptions {
    int tile_size = 0;  // 0: the artifact's tile size
    int overlap = 64;
};

/// Prediction at every input-valid pixel, in Mg C/ha (no clamping). The cube
/// must already be normalised with the artifact's statistics.
Raster predict_dense(const ModelArtifact& artifact, const Datacube& cube, const PredictOptions& options = {});
/// Prediction only where `region` is true (and inputs are valid).
Raster predict_region(const ModelArtifact& artifact, const Datacube& cube, std::span<const std::uint8_t> region,
                      const PredictOptions& options = {});

/// UNet forward on a single (channels, h, w) tile of normalised values;
/// NaN inputs are read as 0.
std::vector<double> unet_forward(const nn::UNet& net, std::span<const double> tile, int channels, int h, int w);

/// Negative predictions set to 0, used only when exporting maps.
Raster clamp_nonnegative(const Raster& prediction);

void save_artifact(const std::filesystem::path& path, const ModelArtifact& artifact);
ModelArtifact load_artifact(const std::filesystem::path& path);

}  // namespace agbmap
