#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace agbmap {

/// Row-major feature matrix with one regression target per row.
struct PixelTable {
    std::size_t n_features = 0;
    std::vector<double> features;     // n_rows x n_features
    std::vector<double> target;
    std::vector<std::size_t> pixel;   // row-major pixel index each row came from

    std::size_t rows() const noexcept { return target.size(); }
    std::span<const double> row(std::size_t i) const { return {features.data() + i * n_features, n_features}; }
};

enum class TabularKind { Linear, RandomForest, GradientBoosting };

std::string_view tabular_kind_name(TabularKind kind) noexcept;  // "linear", "rf", "gbm"
TabularKind parse_tabular_kind(std::string_view text);

/// Hyperparameters by name. Unknown names are rejected at fit time.
///   rf:  n_trees (100), max_depth (0 = unlimited), max_features (0 = ceil(p/3)),
///        min_samples_leaf (1), bootstrap (1)
///   gbm: n_trees (100), learning_rate (0.1), max_depth (6), min_samples_leaf (1),
///        subsample (1.0)
///   linear: none
using Hyperparams = std::map<std::string, double>;

/// Binary regression tree stored as flat node arrays. Leaves have feature == -1.
struct RegressionTree {
    std::vector<int> feature;
    std::vector<double> threshold;  // go left when x[feature] <= threshold
    std::vector<int> left, right;
    std::vector<double> value;

    double predict(std::span<const double> x) const;
    std::size_t depth() const;
};

struct TreeParams {
    int max_depth = 0;  // 0 = unlimited
    int min_samples_leaf = 1;
    int max_features = 0;  // 0 = all
};

/// Exact greedy CART on squared error; thresholds are midpoints between
/// distinct sorted values; ties go to the lowest feature, then lowest threshold.
RegressionTree fit_tree(const PixelTable& table, std::span<const double> target, std::span<const std::size_t> rows,
                        const TreeParams& params, std::uint64_t seed);

struct TabularModel {
    TabularKind kind = TabularKind::Linear;
    Hyperparams hyperparams;
    std::size_t n_features = 0;
    // linear
    std::vector<double> coefficients;  // per feature, then the intercept last
    bool singular = false;
    // ensembles
    double base = 0.0;
    double shrinkage = 1.0;
    std::vector<RegressionTree> trees;

    double predict(std::span<const double> x) const;
    std::vector<double> predict(const PixelTable& table) const;
};

/// Throws InsufficientData when there are too few rows, InvalidArgument for bad
/// hyperparameters. SingularDesign is not thrown: rank-deficient linear fits
/// fall back to the minimum-norm least-squares solution and set `singular`.
TabularModel fit_tabular(TabularKind kind, const Hyperparams& hyperparams, const PixelTable& table, std::uint64_t seed);

}  // namespace agbmap
