#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "agbmap/compositing.hpp"
#include "agbmap/evaluation.hpp"
#include "agbmap/wildfire.hpp"

namespace agbmap {

std::string_view version() noexcept;

/// Everything a command-line run needs, resolved from a TOML file plus
/// overrides. Defaults describe a desk-sized synthetic experiment.
///
///     seed = 0
///     workers = 1
///     [scene]             size, seed, noise levels, gpp_informative, ...
///     [validation_scene]  same keys; defaults to [scene] with seed + 1
///     [compositing]       window = "YYYY-MM-DD:YYYY-MM-DD", method = "median" | "mean"
///     [data]              modality_subset, train_fraction, split_unit, split_seed
///     [model]             kind; [model.hyperparams] numeric settings
///     [train]             learning_rate, batch_size, max_epochs, patience, crop_size,
///                         augment, hflip_p, vflip_p, depth, base_width, tile_size, n_runs
///     [search]            n_samples, folds, space
///     [ablate]            models, subsets
///     [zones]             top_n
///     [wildfire]          cell_area_ha, index
struct RunConfig {
    RunConfig();

    std::uint64_t seed = 0;
    int workers = 1;
    SceneParams scene;
    SceneParams validation_scene;
    std::string window;  // empty: summer of scene.year
    std::string composite_method = "median";
    ModalitySubset subset = ModalitySubset::SifS1S2;
    double train_fraction = 0.9;
    std::string split_unit;  // "pixel", "tile", or empty for the model's natural unit
    std::uint64_t split_seed = 0;
    ModelKind model = ModelKind::UNet;
    Hyperparams hyperparams;
    TrainConfig train;
    int search_samples = 10;
    int folds = 5;
    std::string search_space;  // TOML space file; empty for the built-in grids
    std::vector<ModelKind> ablate_models = all_model_kinds();
    std::vector<ModalitySubset> ablate_subsets = all_subsets();
    int top_n = 6;
    double cell_area_ha = kDefaultCellAreaHa;
    BurnIndex burn_index = BurnIndex::Nbr;

    DateWindow resolved_window() const;
    SplitUnit resolved_split_unit() const;
    SplitSpec split_spec() const;
    ModelSpec model_spec() const;
    AblationConfig ablation() const;

    /// Throws InvalidArgument listing every violated field.
    void validate() const;
    /// Resolved configuration as TOML; parsing it back yields the same config.
    std::string to_toml() const;
};

/// `key=value` with a dotted key such as `train.max_epochs`; the value is read
/// as a TOML literal, falling back to a bare string.
using Override = std::pair<std::string, std::string>;

/// Unknown keys, wrong types and invalid values are all reported together
/// (InvalidArgument). Parse errors raise Format.
RunConfig parse_run_config(std::string_view toml_text, std::span<const Override> overrides = {},
                           std::string_view source = "config");
RunConfig load_run_config(const std::optional<std::filesystem::path>& path, std::span<const Override> overrides = {});

/// Writes `<dir>/<command>.config.toml`: tool version, command, arguments and the resolved config.
void write_config_snapshot(const std::filesystem::path& dir, std::string_view command, const RunConfig& config,
                           const std::map<std::string, std::string>& arguments = {});

}  // namespace agbmap
