#include "agbmap/training.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>
#include <toml.hpp>

#include "agbmap/csv.hpp"
#include "agbmap/error.hpp"
#include "agbmap/parallel.hpp"

namespace agbmap {

void TrainConfig::validate() const {
    std::vector<std::string> problems;
    if (!(learning_rate >= 0) || !std::isfinite(learning_rate)) problems.push_back("learning_rate must be >= 0");
    if (batch_size < 1) problems.push_back("batch_size must be >= 1");
    if (max_epochs < 1) problems.push_back("max_epochs must be >= 1");
    if (patience < 1) problems.push_back("patience must be >= 1");
    if (n_runs < 1) problems.push_back("n_runs must be >= 1");
    if (depth < 1 || depth > 8) problems.push_back("depth must lie in [1, 8]");
    if (base_width < 1) problems.push_back("base_width must be >= 1");
    if (!(hflip_p >= 0 && hflip_p <= 1)) problems.push_back("hflip_p must lie in [0, 1]");
    if (!(vflip_p >= 0 && vflip_p <= 1)) problems.push_back("vflip_p must lie in [0, 1]");
    if (depth >= 1 && depth <= 8) {
        const int m = 1 << depth;
        if (crop_size < m || crop_size % m != 0) {
            problems.push_back("crop_size must be a positive multiple of 2^depth = " + std::to_string(m));
        }
        if (tile_size < m || tile_size % m != 0) {
            problems.push_back("tile_size must be a positive multiple of 2^depth = " + std::to_string(m));
        }
    }
    if (!problems.empty()) {
        std::ostringstream msg;
        msg << "invalid training configuration:";
        for (const auto& p : problems) msg << "\n  - " << p;
        throw Error(ErrorCode::InvalidArgument, msg.str());
    }
}

int TrainConfig::inference_tile() const {
    const int m = 1 << depth;
    const int t = std::max(crop_size, 256);
    return (t + m - 1) / m * m;
}

std::size_t TileSample::supervised() const {
    return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

std::vector<TileSample> make_samples(const Datacube& cube, std::span<const TileView> tiles,
                                     std::span<const std::uint8_t> supervision) {
    std::vector<TileSample> out;
    const auto target = cube.target.plane(0);
    const int W = cube.inputs.width(), H = cube.inputs.height();
    for (const auto& view : tiles) {
        const TileData td = extract_tile(cube.inputs, view);
        TileSample s;
        s.channels = static_cast<int>(td.n_channels);
        s.size = view.size;
        s.input.resize(td.data.size());
        for (std::size_t i = 0; i < td.data.size(); ++i) {
            s.input[i] = std::isfinite(td.data[i]) ? static_cast<float>(td.data[i]) : 0.0f;
        }
        const std::size_t n = static_cast<std::size_t>(view.size) * view.size;
        s.target.assign(n, std::numeric_limits<double>::quiet_NaN());
        s.mask.assign(n, 0);
        for (int i = 0; i < view.size; ++i) {
            const int r = view.row0 + i;
            if (r < 0 || r >= H) continue;
            for (int j = 0; j < view.size; ++j) {
                const int c = view.col0 + j;
                if (c < 0 || c >= W) continue;
                const std::size_t p = static_cast<std::size_t>(r) * W + c;
                const std::size_t q = static_cast<std::size_t>(i) * view.size + j;
                s.target[q] = target[p];
                s.mask[q] = supervision[p] && std::isfinite(target[p]);
            }
        }
        out.push_back(std::move(s));
    }
    return out;
}

namespace {

// Square window of `size` at (r0, c0) with reflected indices outside the tile.
TileSample window(const TileSample& s, int r0, int c0, int size, bool flip_h, bool flip_v) {
    TileSample o;
    o.channels = s.channels;
    o.size = size;
    const std::size_t n = static_cast<std::size_t>(size) * size;
    o.input.resize(n * s.channels);
    o.target.resize(n);
    o.mask.resize(n);
    const std::size_t sn = static_cast<std::size_t>(s.size) * s.size;
    for (int i = 0; i < size; ++i) {
        const int si = reflect_index(r0 + (flip_v ? size - 1 - i : i), s.size);
        for (int j = 0; j < size; ++j) {
            const int sj = reflect_index(c0 + (flip_h ? size - 1 - j : j), s.size);
            const std::size_t src = static_cast<std::size_t>(si) * s.size + sj;
            const std::size_t dst = static_cast<std::size_t>(i) * size + j;
            for (int c = 0; c < s.channels; ++c) o.input[c * n + dst] = s.input[c * sn + src];
            o.target[dst] = s.target[src];
            // Reflected copies outside the real tile carry no supervision.
            const bool real = r0 + i >= 0 && r0 + i < s.size && c0 + j >= 0 && c0 + j < s.size;
            o.mask[dst] = real && s.mask[src];
        }
    }
    return o;
}

}  // namespace

TileSample hflip(const TileSample& s) { return window(s, 0, 0, s.size, true, false); }
TileSample vflip(const TileSample& s) { return window(s, 0, 0, s.size, false, true); }

TileSample augment(const TileSample& sample, int crop_size, double hflip_p, double vflip_p, Rng& rng) {
    const bool fh = rng.bernoulli(hflip_p);
    const bool fv = rng.bernoulli(vflip_p);
    const TileSample* src = &sample;
    TileSample padded;
    if (sample.size < crop_size) {
        // Centre the tile in a reflection-padded square of the crop size.
        const int off = (crop_size - sample.size) / 2;
        padded = window(sample, -off, -off, crop_size, false, false);
        src = &padded;
    }
    const int span = src->size - crop_size;
    int r0 = 0, c0 = 0;
    std::vector<std::size_t> sup;
    for (std::size_t q = 0; q < src->mask.size(); ++q)
        if (src->mask[q]) sup.push_back(q);
    if (span > 0) {
        if (!sup.empty()) {
            const std::size_t q = sup[rng.index(sup.size())];
            const int r = static_cast<int>(q / src->size), c = static_cast<int>(q % src->size);
            const int rlo = std::max(0, r - crop_size + 1), rhi = std::min(r, span);
            const int clo = std::max(0, c - crop_size + 1), chi = std::min(c, span);
            r0 = rlo + static_cast<int>(rng.index(static_cast<std::uint64_t>(rhi - rlo + 1)));
            c0 = clo + static_cast<int>(rng.index(static_cast<std::uint64_t>(chi - clo + 1)));
        } else {
            r0 = static_cast<int>(rng.index(static_cast<std::uint64_t>(span + 1)));
            c0 = static_cast<int>(rng.index(static_cast<std::uint64_t>(span + 1)));
        }
    }
    return window(*src, r0, c0, crop_size, fh, fv);
}

namespace {

struct BatchLoss {
    double sum_sq = 0.0;
    std::size_t count = 0;
};

nn::Tensor stack(const std::vector<const TileSample*>& batch) {
    const int c = batch.front()->channels, s = batch.front()->size;
    nn::Tensor x(static_cast<int>(batch.size()), c, s, s);
    for (std::size_t b = 0; b < batch.size(); ++b) std::copy(batch[b]->input.begin(), batch[b]->input.end(), x.sample(static_cast<int>(b)));
    return x;
}

BatchLoss batch_loss(const nn::Tensor& y, const std::vector<const TileSample*>& batch) {
    BatchLoss l;
    const std::size_t n = y.plane();
    for (std::size_t b = 0; b < batch.size(); ++b) {
        for (std::size_t q = 0; q < n; ++q) {
            if (!batch[b]->mask[q]) continue;
            const double e = static_cast<double>(y.v[b * n + q]) - batch[b]->target[q];
            l.sum_sq += e * e;
            ++l.count;
        }
    }
    return l;
}

BatchLoss evaluate_samples(nn::UNet& net, const std::vector<TileSample>& samples, int batch_size) {
    BatchLoss total;
    for (std::size_t i = 0; i < samples.size(); i += static_cast<std::size_t>(batch_size)) {
        std::vector<const TileSample*> batch;
        for (std::size_t j = i; j < std::min(samples.size(), i + batch_size); ++j)
            if (samples[j].supervised() > 0) batch.push_back(&samples[j]);
        if (batch.empty()) continue;
        const BatchLoss l = batch_loss(net.forward(stack(batch), false), batch);
        total.sum_sq += l.sum_sq;
        total.count += l.count;
    }
    return total;
}

double rmse_of(const BatchLoss& l) {
    return l.count ? std::sqrt(l.sum_sq / static_cast<double>(l.count)) : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

ModelArtifact train_unet(const Datacube& cube, const CubeSplit& split, const TrainConfig& cfg, const EpochCallback& on_epoch) {
    cfg.validate();
    if (!cube.normalized()) throw Error(ErrorCode::StatsMismatch, "UNet training needs a normalised cube");
    auto train = make_samples(cube, split.train_tiles, split.train_mask);
    const auto test = make_samples(cube, split.test_tiles, split.test_mask);
    train.erase(std::remove_if(train.begin(), train.end(), [](const TileSample& s) { return s.supervised() == 0; }),
                train.end());
    if (train.empty()) throw Error(ErrorCode::NoSupervision, "no supervised pixels in the training tiles");

    // Standardise the head's output scale with the training targets.
    double sum = 0.0, sq = 0.0;
    std::size_t n = 0;
    for (const auto& s : train) {
        for (std::size_t q = 0; q < s.mask.size(); ++q) {
            if (!s.mask[q]) continue;
            sum += s.target[q];
            sq += s.target[q] * s.target[q];
            ++n;
        }
    }
    const double mean = sum / static_cast<double>(n);
    const double sd = std::sqrt(std::max(0.0, sq / static_cast<double>(n) - mean * mean));

    nn::UNet net({static_cast<int>(cube.inputs.n_channels()), cfg.depth, cfg.base_width}, derive_seed(cfg.seed, 1));
    net.out_offset = mean;
    net.out_scale = sd > 1e-6 ? sd : 1.0;
    nn::Adam opt(net.params(), cfg.learning_rate);
    Rng order_rng(derive_seed(cfg.seed, 2));
    Rng aug_rng(derive_seed(cfg.seed, 3));

    const bool has_test = std::any_of(test.begin(), test.end(), [](const TileSample& s) { return s.supervised() > 0; });
    ModelArtifact art;
    art.kind = ModelKind::UNet;
    art.subset = cube.subset;
    art.norm_stats = cube.norm_stats;
    art.channels = cube.inputs.channels();
    art.train_seed = cfg.seed;
    art.tile_size = cfg.inference_tile();
    std::vector<float> best_weights = net.flat_weights();
    double best = std::numeric_limits<double>::infinity();
    int since_best = 0;

    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        order_rng.shuffle(std::span<std::size_t>(order));
        BatchLoss epoch_loss;
        for (std::size_t i = 0, b = 0; i < order.size(); i += static_cast<std::size_t>(cfg.batch_size), ++b) {
            std::vector<TileSample> owned;
            for (std::size_t j = i; j < std::min(order.size(), i + cfg.batch_size); ++j) {
                owned.push_back(cfg.augment ? augment(train[order[j]], cfg.crop_size, cfg.hflip_p, cfg.vflip_p, aug_rng)
                                            : train[order[j]]);
            }
            std::vector<const TileSample*> batch;
            for (const auto& s : owned) batch.push_back(&s);
            net.zero_grad();
            const nn::Tensor y = net.forward(stack(batch), true);
            const BatchLoss l = batch_loss(y, batch);
            if (l.count == 0) continue;
            const double loss = std::sqrt(l.sum_sq / static_cast<double>(l.count));
            if (!std::isfinite(loss)) {
                std::ostringstream msg;
                msg << "masked RMSE became non-finite at epoch " << epoch << ", batch " << b
                    << " (learning_rate=" << cfg.learning_rate << ", batch_size=" << cfg.batch_size;
                if (!art.history.empty()) msg << ", last epoch train loss=" << art.history.back().train;
                msg << ")";
                throw Error(ErrorCode::DivergedLoss, msg.str());
            }
            epoch_loss.sum_sq += l.sum_sq;
            epoch_loss.count += l.count;
            nn::Tensor dy(y.n, y.c, y.h, y.w);
            if (loss > 0) {
                const double scale = 1.0 / (static_cast<double>(l.count) * loss);
                const std::size_t plane = y.plane();
                for (std::size_t s = 0; s < batch.size(); ++s) {
                    for (std::size_t q = 0; q < plane; ++q) {
                        if (!batch[s]->mask[q]) continue;
                        const std::size_t k = s * plane + q;
                        dy.v[k] = static_cast<float>((y.v[k] - batch[s]->target[q]) * scale);
                    }
                }
            }
            net.backward(dy);
            opt.step();
        }
        EpochLoss e{epoch, rmse_of(epoch_loss), has_test ? rmse_of(evaluate_samples(net, test, cfg.batch_size))
                                                         : std::numeric_limits<double>::quiet_NaN()};
        if (!std::isfinite(e.train) || (has_test && !std::isfinite(e.test))) {
            throw Error(ErrorCode::DivergedLoss, "loss became non-finite at epoch " + std::to_string(epoch) +
                                                     " (learning_rate=" + std::to_string(cfg.learning_rate) + ")");
        }
        art.history.push_back(e);
        if (on_epoch) on_epoch(e);
        const double metric = has_test ? e.test : e.train;
        if (metric < best) {
            best = metric;
            art.best_epoch = epoch;
            best_weights = net.flat_weights();
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            break;
        }
    }
    net.set_flat_weights(best_weights);
    art.unet = std::make_shared<const nn::UNet>(std::move(net));
    return art;
}

ModelArtifact train_tabular(const Datacube& cube, std::span<const std::uint8_t> train_mask, ModelKind kind,
                            const Hyperparams& hyperparams, std::uint64_t seed) {
    const PixelTable table = extract_pixel_table(cube, train_mask);
    return make_tabular_artifact(kind, fit_tabular(to_tabular(kind), hyperparams, table, seed), cube, seed);
}

TrainConfig apply_unet_hyperparams(TrainConfig cfg, const Hyperparams& hp) {
    std::vector<std::string> unknown;
    for (const auto& [k, v] : hp) {
        if (k == "learning_rate") cfg.learning_rate = v;
        else if (k == "base_width") cfg.base_width = static_cast<int>(v);
        else if (k == "depth") cfg.depth = static_cast<int>(v);
        else if (k == "batch_size") cfg.batch_size = static_cast<int>(v);
        else if (k == "max_epochs") cfg.max_epochs = static_cast<int>(v);
        else if (k == "patience") cfg.patience = static_cast<int>(v);
        else unknown.push_back(k);
    }
    if (!unknown.empty()) {
        std::string msg = "unknown UNet hyperparameters:";
        for (const auto& k : unknown) msg += " " + k;
        throw Error(ErrorCode::InvalidArgument, msg);
    }
    return cfg;
}

ModelArtifact train_model(const Datacube& cube, const CubeSplit& split, const ModelSpec& spec, std::uint64_t seed) {
    if (spec.kind == ModelKind::UNet) {
        TrainConfig cfg = apply_unet_hyperparams(spec.train, spec.hyperparams);
        cfg.seed = seed;
        return train_unet(cube, split, cfg);
    }
    return train_tabular(cube, split.train_mask, spec.kind, spec.hyperparams, seed);
}

std::vector<std::vector<std::size_t>> kfold_partition(std::size_t n_units, int k, std::uint64_t seed) {
    if (k < 2) throw Error(ErrorCode::InvalidArgument, "k must be >= 2");
    if (n_units < static_cast<std::size_t>(k)) {
        throw Error(ErrorCode::TooFewUnits,
                    std::to_string(n_units) + " units cannot fill " + std::to_string(k) + " folds");
    }
    std::vector<std::size_t> ids(n_units);
    std::iota(ids.begin(), ids.end(), std::size_t{0});
    Rng rng(derive_seed(seed, 0xf01d));
    rng.shuffle(std::span<std::size_t>(ids));
    std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < n_units; ++i) folds[i % k].push_back(ids[i]);
    for (auto& f : folds) std::sort(f.begin(), f.end());
    return folds;
}

namespace {

void summarise(KFoldResult& r) {
    const double n = static_cast<double>(r.scores.size());
    r.mean = std::accumulate(r.scores.begin(), r.scores.end(), 0.0) / n;
    double ss = 0.0;
    for (double s : r.scores) ss += (s - r.mean) * (s - r.mean);
    r.std = std::sqrt(ss / n);
}

}  // namespace

KFoldResult kfold_cv(const Datacube& cube, const ModelSpec& spec, int k, std::uint64_t seed, int workers) {
    const std::size_t n = cube.inputs.pixel_count();
    KFoldResult result;
    result.scores.resize(static_cast<std::size_t>(k));
    if (spec.kind == ModelKind::UNet) {
        const TrainConfig cfg = apply_unet_hyperparams(spec.train, spec.hyperparams);
        std::vector<TileView> units;
        for (const auto& t : tile(cube.inputs, cfg.tile_size, cfg.tile_size)) {
            const std::array<TileView, 1> one{t};
            const auto sup = tile_supervision(cube, one);
            if (std::any_of(sup.begin(), sup.end(), [](std::uint8_t v) { return v != 0; })) units.push_back(t);
        }
        const auto folds = kfold_partition(units.size(), k, seed);
        parallel_for(folds.size(), workers, [&](std::size_t f) {
            CubeSplit s;
            s.unit = SplitUnit::Tile;
            for (std::size_t g = 0; g < folds.size(); ++g)
                for (auto u : folds[g]) (g == f ? s.test_tiles : s.train_tiles).push_back(units[u]);
            s.train_mask = tile_supervision(cube, s.train_tiles);
            s.test_mask = tile_supervision(cube, s.test_tiles);
            TrainConfig c = cfg;
            c.seed = derive_seed(seed, 0xcf, f);
            const ModelArtifact a = train_unet(cube, s, c);
            result.scores[f] = a.history[static_cast<std::size_t>(a.best_epoch)].test;
        });
    } else {
        std::vector<std::size_t> units;
        const auto target = cube.target.plane(0);
        for (std::size_t p = 0; p < n; ++p)
            if (cube.target_mask[p] && cube.inputs.valid(p) && std::isfinite(target[p])) units.push_back(p);
        const auto folds = kfold_partition(units.size(), k, seed);
        parallel_for(folds.size(), workers, [&](std::size_t f) {
            std::vector<std::uint8_t> train(n, 0), held(n, 0);
            for (std::size_t g = 0; g < folds.size(); ++g)
                for (auto u : folds[g]) (g == f ? held : train)[units[u]] = 1;
            const ModelArtifact a = train_tabular(cube, train, spec.kind, spec.hyperparams, derive_seed(seed, 0xcf, f));
            const PixelTable t = extract_pixel_table(cube, held);
            const auto pred = a.tabular->predict(t);
            const std::vector<std::uint8_t> all(pred.size(), 1);
            result.scores[f] = masked_rmse(pred, t.target, all).loss;
        });
    }
    summarise(result);
    return result;
}

Hyperparams SearchSpace::draw(Rng& rng) const {
    Hyperparams hp;
    for (const auto& d : dims) {
        switch (d.kind) {
            case SearchDim::Kind::Choice: hp[d.name] = d.choices[rng.index(d.choices.size())]; break;
            case SearchDim::Kind::LogUniform: hp[d.name] = std::exp(rng.uniform(std::log(d.lo), std::log(d.hi))); break;
            case SearchDim::Kind::Uniform: hp[d.name] = rng.uniform(d.lo, d.hi); break;
        }
    }
    return hp;
}

SearchSpace default_search_space(ModelKind kind) {
    using K = SearchDim::Kind;
    SearchSpace s;
    s.model = kind;
    switch (kind) {
        case ModelKind::UNet:
            s.dims = {{"base_width", K::Choice, {16, 32, 64}}, {"learning_rate", K::LogUniform, {}, 1e-4, 1e-1}};
            break;
        case ModelKind::RandomForest:
            s.dims = {{"n_trees", K::Choice, {100, 300, 500}}, {"max_depth", K::Choice, {8, 16, 0}}};
            break;
        case ModelKind::GradientBoosting:
            s.dims = {{"n_trees", K::Choice, {100, 300}},
                      {"learning_rate", K::Choice, {0.05, 0.1, 0.3}},
                      {"max_depth", K::Choice, {4, 6, 8}}};
            break;
        case ModelKind::Linear: break;
    }
    return s;
}

SearchSpace load_search_space(const std::filesystem::path& path, ModelKind kind) {
    toml::table root;
    try {
        root = toml::parse_file(path.string());
    } catch (const toml::parse_error& e) {
        throw Error(ErrorCode::Format, "cannot parse search space " + path.string() + ": " + std::string(e.description()));
    }
    SearchSpace s;
    s.model = kind;
    std::vector<std::string> problems;
    if (auto n = root["n_samples"].value<std::int64_t>()) s.n_samples = static_cast<int>(*n);
    if (s.n_samples < 1) problems.push_back("n_samples must be >= 1");
    const std::string section(model_kind_name(kind));
    const toml::table* t = root[section].as_table();
    if (!t) problems.push_back("missing [" + section + "] table");
    if (t) {
        for (const auto& [key, node] : *t) {
            SearchDim d;
            d.name = std::string(key.str());
            if (const auto* arr = node.as_array()) {
                d.kind = SearchDim::Kind::Choice;
                for (const auto& v : *arr) {
                    if (auto x = v.value<double>()) d.choices.push_back(*x);
                    else if (auto str = v.value<std::string>(); str && *str == "none") d.choices.push_back(0.0);
                    else problems.push_back(d.name + ": choices must be numbers or \"none\"");
                }
                if (d.choices.empty()) problems.push_back(d.name + ": empty choice list");
            } else if (const auto* tab = node.as_table()) {
                const toml::array* range = nullptr;
                if ((range = (*tab)["log_uniform"].as_array())) d.kind = SearchDim::Kind::LogUniform;
                else if ((range = (*tab)["uniform"].as_array())) d.kind = SearchDim::Kind::Uniform;
                if (!range || range->size() != 2) {
                    problems.push_back(d.name + ": expected {log_uniform = [lo, hi]} or {uniform = [lo, hi]}");
                    continue;
                }
                d.lo = range->get(0)->value<double>().value_or(std::nan(""));
                d.hi = range->get(1)->value<double>().value_or(std::nan(""));
                if (!(d.lo <= d.hi) || (d.kind == SearchDim::Kind::LogUniform && !(d.lo > 0))) {
                    problems.push_back(d.name + ": invalid range");
                }
            } else {
                problems.push_back(d.name + ": unsupported value");
                continue;
            }
            s.dims.push_back(std::move(d));
        }
        if (s.dims.empty() && kind != ModelKind::Linear) problems.push_back("[" + section + "] defines no dimensions");
    }
    if (!problems.empty()) {
        std::ostringstream msg;
        msg << "invalid search space " << path.string() << ":";
        for (const auto& p : problems) msg << "\n  - " << p;
        throw Error(ErrorCode::InvalidArgument, msg.str());
    }
    return s;
}

SearchResult random_search(const SearchSpace& space, const Objective& objective, int n, std::uint64_t seed, int workers) {
    if (n < 1) throw Error(ErrorCode::InvalidArgument, "random search needs at least one draw");
    SearchResult r;
    Rng rng(derive_seed(seed, 0x5ea4c));
    for (int i = 0; i < n; ++i) r.trials.push_back({static_cast<std::size_t>(i), space.draw(rng), {}, 0.0, 0.0});
    parallel_for(r.trials.size(), workers, [&](std::size_t i) {
        Trial& t = r.trials[i];
        t.fold_scores = objective(t.hyperparams, i);
        KFoldResult k{t.fold_scores};
        summarise(k);
        t.mean = k.mean;
        t.std = k.std;
    });
    for (std::size_t i = 1; i < r.trials.size(); ++i)
        if (r.trials[i].mean < r.trials[r.best].mean) r.best = i;
    return r;
}

std::string hyperparams_json(const Hyperparams& hp) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, v] : hp) j[k] = v;
    return j.dump();
}

void write_trial_log(const std::filesystem::path& path, const SearchResult& result) {
    CsvTable t;
    t.header = {"trial", "hyperparams", "fold_scores", "mean", "std"};
    for (const auto& tr : result.trials) {
        t.rows.push_back({std::to_string(tr.index), hyperparams_json(tr.hyperparams),
                          nlohmann::json(tr.fold_scores).dump(), format_double(tr.mean), format_double(tr.std)});
    }
    write_csv(path, t);
}

}  // namespace agbmap
