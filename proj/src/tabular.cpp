#include "agbmap/tabular.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "agbmap/error.hpp"
#include "agbmap/rng.hpp"

namespace agbmap {

std::string_view tabular_kind_name(TabularKind kind) noexcept {
    switch (kind) {
        case TabularKind::Linear: return "linear";
        case TabularKind::RandomForest: return "rf";
        case TabularKind::GradientBoosting: return "gbm";
    }
    return "?";
}

TabularKind parse_tabular_kind(std::string_view text) {
    if (text == "linear" || text == "lr") return TabularKind::Linear;
    if (text == "rf" || text == "random_forest") return TabularKind::RandomForest;
    if (text == "gbm" || text == "gradient_boosting" || text == "xgboost") return TabularKind::GradientBoosting;
    throw Error(ErrorCode::InvalidArgument, "unknown tabular model kind '" + std::string(text) + "'");
}

double RegressionTree::predict(std::span<const double> x) const {
    int node = 0;
    while (feature[node] >= 0) node = x[feature[node]] <= threshold[node] ? left[node] : right[node];
    return value[node];
}

std::size_t RegressionTree::depth() const {
    std::vector<std::size_t> d(feature.size(), 0);
    std::size_t best = 0;
    for (std::size_t i = 0; i < feature.size(); ++i) {
        best = std::max(best, d[i]);
        if (feature[i] >= 0) d[left[i]] = d[right[i]] = d[i] + 1;
    }
    return best;
}

namespace {

struct TreeBuilder {
    const PixelTable& table;
    std::span<const double> y;
    const TreeParams& params;
    Rng rng;
    RegressionTree tree;
    std::vector<std::size_t> order;  // scratch

    int make_leaf(std::span<const std::size_t> rows) {
        double s = 0.0;
        for (auto r : rows) s += y[r];
        tree.feature.push_back(-1);
        tree.threshold.push_back(0.0);
        tree.left.push_back(-1);
        tree.right.push_back(-1);
        tree.value.push_back(s / static_cast<double>(rows.size()));
        return static_cast<int>(tree.value.size() - 1);
    }

    std::vector<int> candidate_features() {
        const int p = static_cast<int>(table.n_features);
        std::vector<int> f(p);
        std::iota(f.begin(), f.end(), 0);
        if (params.max_features > 0 && params.max_features < p) {
            rng.shuffle(std::span<int>(f));
            f.resize(params.max_features);
            std::sort(f.begin(), f.end());
        }
        return f;
    }

    int build(std::vector<std::size_t> rows, int depth) {
        const std::size_t n = rows.size();
        const std::size_t min_leaf = static_cast<std::size_t>(std::max(1, params.min_samples_leaf));
        if ((params.max_depth > 0 && depth >= params.max_depth) || n < 2 * min_leaf) return make_leaf(rows);

        double total = 0.0;
        for (auto r : rows) total += y[r];
        const double parent = total * total / static_cast<double>(n);

        int best_f = -1;
        double best_gain = 1e-12 * std::max(1.0, std::abs(parent));
        double best_t = 0.0;
        for (int f : candidate_features()) {
            order = rows;
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                const double va = table.features[a * table.n_features + f], vb = table.features[b * table.n_features + f];
                return va < vb || (va == vb && a < b);
            });
            double left_sum = 0.0;
            for (std::size_t i = 0; i + 1 < n; ++i) {
                left_sum += y[order[i]];
                const std::size_t nl = i + 1, nr = n - nl;
                if (nl < min_leaf || nr < min_leaf) continue;
                const double v0 = table.features[order[i] * table.n_features + f];
                const double v1 = table.features[order[i + 1] * table.n_features + f];
                if (!(v1 > v0)) continue;
                const double right_sum = total - left_sum;
                // Reduction in squared error, up to the parent's constant term.
                const double gain = left_sum * left_sum / nl + right_sum * right_sum / nr - parent;
                if (gain > best_gain) {
                    best_gain = gain;
                    best_f = f;
                    best_t = v0 + 0.5 * (v1 - v0);
                    if (!(best_t < v1)) best_t = v0;
                }
            }
        }
        if (best_f < 0) return make_leaf(rows);

        std::vector<std::size_t> lrows, rrows;
        for (auto r : rows) (table.features[r * table.n_features + best_f] <= best_t ? lrows : rrows).push_back(r);
        rows.clear();
        rows.shrink_to_fit();

        const int node = static_cast<int>(tree.feature.size());
        tree.feature.push_back(best_f);
        tree.threshold.push_back(best_t);
        tree.left.push_back(-1);
        tree.right.push_back(-1);
        tree.value.push_back(0.0);
        const int l = build(std::move(lrows), depth + 1);
        tree.left[node] = l;
        const int r = build(std::move(rrows), depth + 1);
        tree.right[node] = r;
        return node;
    }
};

void check_hyperparams(TabularKind kind, const Hyperparams& hp) {
    static const std::map<TabularKind, std::vector<std::string>> allowed{
        {TabularKind::Linear, {}},
        {TabularKind::RandomForest, {"n_trees", "max_depth", "max_features", "min_samples_leaf", "bootstrap"}},
        {TabularKind::GradientBoosting, {"n_trees", "learning_rate", "max_depth", "min_samples_leaf", "subsample"}},
    };
    std::vector<std::string> problems;
    const auto& names = allowed.at(kind);
    for (const auto& [key, value] : hp) {
        if (std::find(names.begin(), names.end(), key) == names.end()) {
            problems.push_back("unknown hyperparameter '" + key + "' for " + std::string(tabular_kind_name(kind)));
            continue;
        }
        if (!std::isfinite(value)) problems.push_back(key + " must be finite");
        const bool integral = key != "learning_rate" && key != "subsample";
        if (integral && value != std::floor(value)) problems.push_back(key + " must be an integer");
        if (key == "n_trees" && value < 1) problems.push_back("n_trees must be >= 1");
        if ((key == "max_depth" || key == "max_features") && value < 0) problems.push_back(key + " must be >= 0");
        if (key == "min_samples_leaf" && value < 1) problems.push_back("min_samples_leaf must be >= 1");
        if (key == "bootstrap" && value != 0 && value != 1) problems.push_back("bootstrap must be 0 or 1");
        if (key == "learning_rate" && !(value > 0)) problems.push_back("learning_rate must be > 0");
        if (key == "subsample" && !(value > 0 && value <= 1)) problems.push_back("subsample must lie in (0, 1]");
    }
    if (!problems.empty()) {
        std::ostringstream msg;
        msg << "invalid hyperparameters:";
        for (const auto& p : problems) msg << "\n  - " << p;
        throw Error(ErrorCode::InvalidArgument, msg.str());
    }
}

double get(const Hyperparams& hp, const std::string& key, double fallback) {
    const auto it = hp.find(key);
    return it == hp.end() ? fallback : it->second;
}

TabularModel fit_linear(const PixelTable& t) {
    const auto n = static_cast<Eigen::Index>(t.rows());
    const auto p = static_cast<Eigen::Index>(t.n_features);
    Eigen::MatrixXd X(n, p + 1);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) X(i, j) = t.features[static_cast<std::size_t>(i * p + j)];
        X(i, p) = 1.0;
        y(i) = t.target[static_cast<std::size_t>(i)];
    }
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(X);
    const Eigen::VectorXd beta = cod.solve(y);
    TabularModel m;
    m.kind = TabularKind::Linear;
    m.n_features = t.n_features;
    m.coefficients.assign(beta.data(), beta.data() + beta.size());
    m.singular = cod.rank() < p + 1;
    return m;
}

}  // namespace

RegressionTree fit_tree(const PixelTable& table, std::span<const double> target, std::span<const std::size_t> rows,
                        const TreeParams& params, std::uint64_t seed) {
    if (rows.empty()) throw Error(ErrorCode::InsufficientData, "cannot fit a tree on zero rows");
    TreeBuilder b{table, target, params, Rng(seed), {}, {}};
    b.build(std::vector<std::size_t>(rows.begin(), rows.end()), 0);
    return std::move(b.tree);
}

double TabularModel::predict(std::span<const double> x) const {
    if (kind == TabularKind::Linear) {
        double s = coefficients.back();
        for (std::size_t j = 0; j < n_features; ++j) s += coefficients[j] * x[j];
        return s;
    }
    double s = 0.0;
    for (const auto& t : trees) s += t.predict(x);
    if (kind == TabularKind::RandomForest) return s / static_cast<double>(trees.size());
    return base + shrinkage * s;
}

std::vector<double> TabularModel::predict(const PixelTable& table) const {
    std::vector<double> out(table.rows());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = predict(table.row(i));
    return out;
}

TabularModel fit_tabular(TabularKind kind, const Hyperparams& hp, const PixelTable& table, std::uint64_t seed) {
    check_hyperparams(kind, hp);
    const std::size_t n = table.rows();
    const std::size_t p = table.n_features;
    if (n == 0 || p == 0) throw Error(ErrorCode::InsufficientData, "no training rows");
    if (kind == TabularKind::Linear) {
        if (n < p) {
            throw Error(ErrorCode::InsufficientData,
                        "linear fit needs at least " + std::to_string(p) + " rows, got " + std::to_string(n));
        }
        return fit_linear(table);
    }

    TabularModel m;
    m.kind = kind;
    m.hyperparams = hp;
    m.n_features = p;
    const int n_trees = static_cast<int>(get(hp, "n_trees", 100));
    TreeParams tp;
    tp.min_samples_leaf = static_cast<int>(get(hp, "min_samples_leaf", 1));
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});

    if (kind == TabularKind::RandomForest) {
        tp.max_depth = static_cast<int>(get(hp, "max_depth", 0));
        const int mf = static_cast<int>(get(hp, "max_features", 0));
        tp.max_features = mf > 0 ? mf : static_cast<int>((p + 2) / 3);
        const bool bootstrap = get(hp, "bootstrap", 1) != 0;
        for (int k = 0; k < n_trees; ++k) {
            Rng rng(derive_seed(seed, 0xf0, static_cast<std::uint64_t>(k)));
            std::vector<std::size_t> rows = all;
            if (bootstrap) {
                for (auto& r : rows) r = rng.index(n);
                std::sort(rows.begin(), rows.end());
            }
            m.trees.push_back(fit_tree(table, table.target, rows, tp, rng.next_u64()));
        }
        return m;
    }

    tp.max_depth = static_cast<int>(get(hp, "max_depth", 6));
    m.shrinkage = get(hp, "learning_rate", 0.1);
    const double subsample = get(hp, "subsample", 1.0);
    m.base = std::accumulate(table.target.begin(), table.target.end(), 0.0) / static_cast<double>(n);
    std::vector<double> pred(n, m.base), residual(n);
    for (int k = 0; k < n_trees; ++k) {
        for (std::size_t i = 0; i < n; ++i) residual[i] = table.target[i] - pred[i];
        Rng rng(derive_seed(seed, 0xb0, static_cast<std::uint64_t>(k)));
        std::vector<std::size_t> rows;
        if (subsample < 1.0) {
            std::vector<std::size_t> shuffled = all;
            rng.shuffle(std::span<std::size_t>(shuffled));
            const auto keep = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(subsample * static_cast<double>(n))));
            rows.assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(keep));
            std::sort(rows.begin(), rows.end());
        } else {
            rows = all;
        }
        m.trees.push_back(fit_tree(table, residual, rows, tp, rng.next_u64()));
        for (std::size_t i = 0; i < n; ++i) pred[i] += m.shrinkage * m.trees.back().predict(table.row(i));
    }
    return m;
}

}  // namespace agbmap
