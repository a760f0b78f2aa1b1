#include "agbmap/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "agbmap/error.hpp"

namespace agbmap {

using nlohmann::json;

MaskedLoss masked_rmse(std::span<const double> pred, std::span<const double> target, std::span<const std::uint8_t> mask) {
    if (pred.size() != target.size() || pred.size() != mask.size()) {
        throw Error(ErrorCode::ShapeMismatch, "prediction, target and mask sizes differ (" + std::to_string(pred.size()) +
                                                  ", " + std::to_string(target.size()) + ", " +
                                                  std::to_string(mask.size()) + ")");
    }
    MaskedLoss out;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (!mask[i]) continue;
        const double e = pred[i] - target[i];
        out.sum_sq += e * e;
        ++out.count;
    }
    if (out.count == 0) throw Error(ErrorCode::EmptyMask, "mask selects no pixels");
    out.loss = std::sqrt(out.sum_sq / static_cast<double>(out.count));
    return out;
}

std::vector<double> masked_rmse_grad(std::span<const double> pred, std::span<const double> target,
                                     std::span<const std::uint8_t> mask) {
    const MaskedLoss l = masked_rmse(pred, target, mask);
    std::vector<double> g(pred.size(), 0.0);
    if (l.loss == 0.0) return g;
    const double scale = 1.0 / (static_cast<double>(l.count) * l.loss);
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (mask[i]) g[i] = (pred[i] - target[i]) * scale;
    }
    return g;
}

std::string_view model_kind_name(ModelKind kind) noexcept {
    switch (kind) {
        case ModelKind::UNet: return "unet";
        case ModelKind::Linear: return "linear";
        case ModelKind::RandomForest: return "rf";
        case ModelKind::GradientBoosting: return "gbm";
    }
    return "?";
}

std::string_view model_display_name(ModelKind kind) noexcept {
    switch (kind) {
        case ModelKind::UNet: return "UNet";
        case ModelKind::Linear: return "LR";
        case ModelKind::RandomForest: return "RF";
        case ModelKind::GradientBoosting: return "GBM";
    }
    return "?";
}

ModelKind parse_model_kind(std::string_view text) {
    if (text == "unet" || text == "UNet") return ModelKind::UNet;
    if (text == "LR") return ModelKind::Linear;
    if (text == "RF") return ModelKind::RandomForest;
    if (text == "GBM") return ModelKind::GradientBoosting;
    try {
        switch (parse_tabular_kind(text)) {
            case TabularKind::Linear: return ModelKind::Linear;
            case TabularKind::RandomForest: return ModelKind::RandomForest;
            case TabularKind::GradientBoosting: return ModelKind::GradientBoosting;
        }
    } catch (const Error&) {
    }
    throw Error(ErrorCode::InvalidArgument, "unknown model kind '" + std::string(text) + "' (expected unet, linear, rf or gbm)");
}

const std::vector<ModelKind>& all_model_kinds() {
    static const std::vector<ModelKind> kinds{ModelKind::Linear, ModelKind::RandomForest, ModelKind::GradientBoosting,
                                              ModelKind::UNet};
    return kinds;
}

TabularKind to_tabular(ModelKind kind) {
    switch (kind) {
        case ModelKind::Linear: return TabularKind::Linear;
        case ModelKind::RandomForest: return TabularKind::RandomForest;
        case ModelKind::GradientBoosting: return TabularKind::GradientBoosting;
        case ModelKind::UNet: break;
    }
    throw Error(ErrorCode::InvalidArgument, "UNet is not a tabular model");
}

namespace {

PixelTable build_table(const Datacube& cube, std::span<const std::uint8_t> region, bool supervised_only) {
    const Raster& in = cube.inputs;
    const std::size_t n = in.pixel_count();
    if (!region.empty() && region.size() != n) throw Error(ErrorCode::ShapeMismatch, "region mask size differs from the cube");
    PixelTable t;
    t.n_features = in.n_channels();
    const auto target = cube.target.plane(0);
    for (std::size_t p = 0; p < n; ++p) {
        if (!in.valid(p) || (!region.empty() && !region[p])) continue;
        if (supervised_only && !(cube.target_mask[p] && std::isfinite(target[p]))) continue;
        for (std::size_t c = 0; c < t.n_features; ++c) t.features.push_back(in.plane(c)[p]);
        t.target.push_back(supervised_only ? target[p] : std::numeric_limits<double>::quiet_NaN());
        t.pixel.push_back(p);
    }
    return t;
}

}  // namespace

PixelTable extract_pixel_table(const Datacube& cube, std::span<const std::uint8_t> region) {
    PixelTable t = build_table(cube, region, true);
    if (t.rows() == 0) throw Error(ErrorCode::NoSupervisedPixels, "cube has no supervised input-valid pixels");
    return t;
}

PixelTable extract_input_table(const Datacube& cube, std::span<const std::uint8_t> region) {
    return build_table(cube, region, false);
}

ModelArtifact make_tabular_artifact(ModelKind kind, TabularModel model, const Datacube& cube, std::uint64_t seed) {
    ModelArtifact a;
    a.kind = kind;
    a.subset = cube.subset;
    a.norm_stats = cube.norm_stats;
    a.channels = cube.inputs.channels();
    a.train_seed = seed;
    a.tabular = std::make_shared<const TabularModel>(std::move(model));
    return a;
}

Datacube prepare_cube(const ModelArtifact& artifact, const Datacube& cube) {
    if (cube.subset != artifact.subset || cube.inputs.channels() != artifact.channels) {
        throw Error(ErrorCode::ModalityMismatch, "model was trained on " + std::string(subset_name(artifact.subset)) +
                                                     " inputs, cube holds " + std::string(subset_name(cube.subset)));
    }
    if (!cube.normalized()) {
        if (artifact.norm_stats.empty()) return cube;
        return normalize(cube, artifact.norm_stats);
    }
    if (cube.norm_stats != artifact.norm_stats) {
        throw Error(ErrorCode::StatsMismatch, "cube was normalised with statistics other than the model's");
    }
    return cube;
}

namespace {

void check_ready(const ModelArtifact& artifact, const Datacube& cube) {
    if (cube.subset != artifact.subset || cube.inputs.channels() != artifact.channels) {
        throw Error(ErrorCode::ModalityMismatch, "model was trained on " + std::string(subset_name(artifact.subset)) +
                                                     " inputs, cube holds " + std::string(subset_name(cube.subset)));
    }
    if (cube.norm_stats != artifact.norm_stats) {
        throw Error(ErrorCode::StatsMismatch, "cube is not normalised with the model's statistics");
    }
}

std::vector<int> window_starts(int extent, int window, int stride) {
    if (extent <= window) return {0};
    std::vector<int> out;
    for (int s = 0; s + window < extent; s += stride) out.push_back(s);
    out.push_back(extent - window);
    return out;
}

int round_up(int v, int m) { return (v + m - 1) / m * m; }

Raster unet_dense(const ModelArtifact& artifact, const Datacube& cube, const PredictOptions& opt) {
    nn::UNet net = *artifact.unet;
    const int m = 1 << net.config().depth;
    const Raster& in = cube.inputs;
    const int H = in.height(), W = in.width();
    const int C = static_cast<int>(in.n_channels());
    int tile = opt.tile_size > 0 ? opt.tile_size : (artifact.tile_size > 0 ? artifact.tile_size : 256);
    tile = round_up(std::max(tile, m), m);
    const int th = std::min(tile, round_up(H, m));
    const int tw = std::min(tile, round_up(W, m));
    const int stride_h = std::max(1, th - opt.overlap), stride_w = std::max(1, tw - opt.overlap);

    const std::size_t n = in.pixel_count();
    std::vector<double> sum(n, 0.0);
    std::vector<std::uint32_t> count(n, 0);
    nn::Tensor x(1, C, th, tw);
    for (int r0 : window_starts(H, th, stride_h)) {
        for (int c0 : window_starts(W, tw, stride_w)) {
            for (int c = 0; c < C; ++c) {
                const auto plane = in.plane(static_cast<std::size_t>(c));
                float* dst = x.sample(0) + static_cast<std::size_t>(c) * x.plane();
                for (int i = 0; i < th; ++i) {
                    const int r = reflect_index(r0 + i, H);
                    for (int j = 0; j < tw; ++j) {
                        const double v = plane[static_cast<std::size_t>(r) * W + reflect_index(c0 + j, W)];
                        dst[static_cast<std::size_t>(i) * tw + j] = std::isfinite(v) ? static_cast<float>(v) : 0.0f;
                    }
                }
            }
            const nn::Tensor y = net.forward(x, false);
            for (int i = 0; i < th && r0 + i < H; ++i) {
                for (int j = 0; j < tw && c0 + j < W; ++j) {
                    const std::size_t p = static_cast<std::size_t>(r0 + i) * W + c0 + j;
                    sum[p] += y.v[static_cast<std::size_t>(i) * tw + j];
                    ++count[p];
                }
            }
        }
    }
    std::vector<double> out(n, std::numeric_limits<double>::quiet_NaN());
    std::vector<std::uint8_t> valid(n, 0);
    for (std::size_t p = 0; p < n; ++p) {
        if (in.valid(p) && count[p] > 0) {
            out[p] = sum[p] / count[p];
            valid[p] = 1;
        }
    }
    return make_single_band(in.grid(), agb_channel(), std::move(out), std::move(valid));
}

}  // namespace

std::vector<double> unet_forward(const nn::UNet& net_in, std::span<const double> tile, int channels, int h, int w) {
    nn::UNet net = net_in;
    nn::Tensor x(1, channels, h, w);
    if (tile.size() != x.v.size()) throw Error(ErrorCode::ShapeMismatch, "tile buffer does not match its dimensions");
    for (std::size_t i = 0; i < tile.size(); ++i) x.v[i] = std::isfinite(tile[i]) ? static_cast<float>(tile[i]) : 0.0f;
    const nn::Tensor y = net.forward(x, false);
    return {y.v.begin(), y.v.end()};
}

Raster predict_dense(const ModelArtifact& artifact, const Datacube& cube, const PredictOptions& options) {
    return predict_region(artifact, cube, {}, options);
}

Raster predict_region(const ModelArtifact& artifact, const Datacube& cube, std::span<const std::uint8_t> region,
                      const PredictOptions& options) {
    check_ready(artifact, cube);
    const std::size_t n = cube.inputs.pixel_count();
    if (!region.empty() && region.size() != n) throw Error(ErrorCode::ShapeMismatch, "region mask size differs from the cube");
    if (artifact.kind == ModelKind::UNet) {
        Raster dense = unet_dense(artifact, cube, options);
        if (region.empty()) return dense;
        std::vector<double> v(dense.data().begin(), dense.data().end());
        std::vector<std::uint8_t> valid = dense.valid_mask();
        for (std::size_t p = 0; p < n; ++p) {
            if (!region[p]) {
                valid[p] = 0;
                v[p] = std::numeric_limits<double>::quiet_NaN();
            }
        }
        return make_single_band(dense.grid(), agb_channel(), std::move(v), std::move(valid));
    }
    const PixelTable t = extract_input_table(cube, region);
    std::vector<double> out(n, std::numeric_limits<double>::quiet_NaN());
    std::vector<std::uint8_t> valid(n, 0);
    for (std::size_t i = 0; i < t.rows(); ++i) {
        out[t.pixel[i]] = artifact.tabular->predict(t.row(i));
        valid[t.pixel[i]] = 1;
    }
    return make_single_band(cube.grid(), agb_channel(), std::move(out), std::move(valid));
}

Raster clamp_nonnegative(const Raster& prediction) {
    std::vector<double> v(prediction.data().begin(), prediction.data().end());
    for (auto& x : v)
        if (x < 0) x = 0;
    return Raster(prediction.grid(), prediction.channels(), std::move(v), prediction.valid_mask());
}

// ---- serialisation ----------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'A', 'G', 'B', 'M', 'O', 'D', 'L', '1'};

json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
double from_nullable(const json& j) { return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>(); }

}  // namespace

void save_artifact(const std::filesystem::path& path, const ModelArtifact& a) {
    json h;
    h["format"] = "agbmap-model/1";
    h["version"] = AGBMAP_VERSION;
    h["kind"] = model_kind_name(a.kind);
    h["modality_subset"] = subset_name(a.subset);
    auto& ch = h["channels"] = json::array();
    for (const auto& c : a.channels) ch.push_back(c.str());
    auto& st = h["norm_stats"] = json::array();
    for (const auto& s : a.norm_stats) st.push_back({{"mean", s.mean}, {"std", s.std}});
    h["train_seed"] = a.train_seed;
    auto& hist = h["history"] = json::array();
    for (const auto& e : a.history) hist.push_back({{"epoch", e.epoch}, {"train", nullable(e.train)}, {"test", nullable(e.test)}});
    h["best_epoch"] = a.best_epoch;

    std::vector<char> blob;
    auto append = [&](const void* p, std::size_t bytes) {
        const auto* c = static_cast<const char*>(p);
        blob.insert(blob.end(), c, c + bytes);
    };
    if (a.kind == ModelKind::UNet) {
        nn::UNet net = *a.unet;
        const auto& cfg = net.config();
        h["unet"] = {{"in_channels", cfg.in_channels},
                     {"depth", cfg.depth},
                     {"base_width", cfg.base_width},
                     {"activation", "relu"},
                     {"normalization", "none"},
                     {"dropout", 0.0},
                     {"upsampling", "transposed-conv-2x2"},
                     {"head", "linear-1x1"},
                     {"out_offset", net.out_offset},
                     {"out_scale", net.out_scale},
                     {"tile_size", a.tile_size}};
        const auto w = net.flat_weights();
        h["blob"] = {{"dtype", "float32"}, {"count", w.size()}};
        append(w.data(), w.size() * sizeof(float));
    } else {
        const TabularModel& t = *a.tabular;
        json hp = json::object();
        for (const auto& [k, v] : t.hyperparams) hp[k] = v;
        std::vector<double> values(t.coefficients);
        json sizes = json::array();
        for (const auto& tree : t.trees) {
            sizes.push_back(tree.feature.size());
            for (std::size_t i = 0; i < tree.feature.size(); ++i) {
                values.insert(values.end(), {static_cast<double>(tree.feature[i]), tree.threshold[i],
                                             static_cast<double>(tree.left[i]), static_cast<double>(tree.right[i]),
                                             tree.value[i]});
            }
        }
        h["tabular"] = {{"hyperparams", hp},      {"n_features", t.n_features},
                        {"singular", t.singular}, {"n_coefficients", t.coefficients.size()},
                        {"base", t.base},         {"shrinkage", t.shrinkage},
                        {"tree_nodes", sizes}};
        h["blob"] = {{"dtype", "float64"}, {"count", values.size()}};
        append(values.data(), values.size() * sizeof(double));
    }

    const std::string header = h.dump(2);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::Io, "cannot write " + path.string());
    const std::uint64_t len = header.size();
    f.write(kMagic, sizeof kMagic);
    f.write(reinterpret_cast<const char*>(&len), sizeof len);
    f.write(header.data(), static_cast<std::streamsize>(header.size()));
    f.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    if (!f) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

ModelArtifact load_artifact(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::Io, "cannot open model artifact " + path.string());
    char magic[8];
    std::uint64_t len = 0;
    f.read(magic, sizeof magic);
    f.read(reinterpret_cast<char*>(&len), sizeof len);
    if (!f || std::memcmp(magic, kMagic, sizeof magic) != 0 || len > (1u << 30)) {
        throw Error(ErrorCode::Format, path.string() + " is not a model artifact");
    }
    std::string header(len, '\0');
    f.read(header.data(), static_cast<std::streamsize>(len));
    const std::vector<char> blob((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

    ModelArtifact a;
    try {
        const json h = json::parse(header);
        a.kind = parse_model_kind(h.at("kind").get<std::string>());
        a.subset = parse_subset(h.at("modality_subset").get<std::string>());
        for (const auto& c : h.at("channels")) a.channels.push_back(ChannelId::parse(c.get<std::string>()));
        for (const auto& s : h.at("norm_stats")) a.norm_stats.push_back({s.at("mean").get<double>(), s.at("std").get<double>()});
        a.train_seed = h.at("train_seed").get<std::uint64_t>();
        for (const auto& e : h.at("history")) {
            a.history.push_back({e.at("epoch").get<int>(), from_nullable(e.at("train")), from_nullable(e.at("test"))});
        }
        a.best_epoch = h.at("best_epoch").get<int>();
        const std::size_t count = h.at("blob").at("count").get<std::size_t>();
        if (a.kind == ModelKind::UNet) {
            const auto& u = h.at("unet");
            nn::UNetConfig cfg{u.at("in_channels").get<int>(), u.at("depth").get<int>(), u.at("base_width").get<int>()};
            if (blob.size() != count * sizeof(float)) throw Error(ErrorCode::Format, "weight blob is truncated");
            std::vector<float> w(count);
            std::memcpy(w.data(), blob.data(), blob.size());
            auto net = std::make_shared<nn::UNet>(cfg, 0);
            net->set_flat_weights(w);
            net->out_offset = u.at("out_offset").get<double>();
            net->out_scale = u.at("out_scale").get<double>();
            a.tile_size = u.at("tile_size").get<int>();
            a.unet = std::move(net);
        } else {
            const auto& t = h.at("tabular");
            if (blob.size() != count * sizeof(double)) throw Error(ErrorCode::Format, "parameter blob is truncated");
            std::vector<double> v(count);
            std::memcpy(v.data(), blob.data(), blob.size());
            TabularModel m;
            m.kind = to_tabular(a.kind);
            for (const auto& [k, val] : t.at("hyperparams").items()) m.hyperparams[k] = val.get<double>();
            m.n_features = t.at("n_features").get<std::size_t>();
            m.singular = t.at("singular").get<bool>();
            m.base = t.at("base").get<double>();
            m.shrinkage = t.at("shrinkage").get<double>();
            const auto nc = t.at("n_coefficients").get<std::size_t>();
            std::size_t o = 0;
            m.coefficients.assign(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(nc));
            o = nc;
            for (const auto& s : t.at("tree_nodes")) {
                RegressionTree tree;
                const auto nodes = s.get<std::size_t>();
                if (o + 5 * nodes > v.size()) throw Error(ErrorCode::Format, "tree table is truncated");
                for (std::size_t i = 0; i < nodes; ++i, o += 5) {
                    tree.feature.push_back(static_cast<int>(v[o]));
                    tree.threshold.push_back(v[o + 1]);
                    tree.left.push_back(static_cast<int>(v[o + 2]));
                    tree.right.push_back(static_cast<int>(v[o + 3]));
                    tree.value.push_back(v[o + 4]);
                }
                m.trees.push_back(std::move(tree));
            }
            a.tabular = std::make_shared<const TabularModel>(std::move(m));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Format, "bad artifact header in " + path.string() + ": " + e.what());
    }
    return a;
}

}  // namespace agbmap
