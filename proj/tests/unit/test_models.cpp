#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <numeric>

#include "agbmap/error.hpp"
#include "agbmap/models.hpp"
#include "agbmap/pipeline.hpp"
#include "agbmap/rng.hpp"
#include "oracles.hpp"

using namespace agbmap;

namespace {

struct Instance {
    std::vector<double> pred, target;
    std::vector<std::uint8_t> mask;
};

Instance random_instance(std::size_t n, Rng& rng) {
    Instance in;
    for (std::size_t i = 0; i < n; ++i) {
        in.pred.push_back(rng.normal(100, 40));
        in.target.push_back(rng.normal(100, 40));
        in.mask.push_back(rng.bernoulli(0.3));
    }
    in.mask[rng.index(n)] = 1;
    return in;
}

PixelTable table_from(const std::vector<std::vector<double>>& x, const std::vector<double>& y) {
    PixelTable t;
    t.n_features = x.front().size();
    for (std::size_t i = 0; i < x.size(); ++i) {
        t.features.insert(t.features.end(), x[i].begin(), x[i].end());
        t.target.push_back(y[i]);
        t.pixel.push_back(i);
    }
    return t;
}

Datacube small_cube(std::uint64_t seed, int size = 48, ModalitySubset subset = ModalitySubset::SifS1S2) {
    SceneParams p;
    p.size = size;
    p.seed = seed;
    p.footprint_density = 40;
    const auto scene = generate_scene(p);
    const auto layers = prepare_site(scene, sample_footprints(scene.true_agb, p), summer_window(p.year));
    return site_cube(layers, subset);
}

}  // namespace

TEST_CASE("masked_rmse examples") {
    CHECK(masked_rmse(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 3}, std::vector<std::uint8_t>{1, 1, 1}).loss == 0);
    CHECK(masked_rmse(std::vector<double>{10}, std::vector<double>{14}, std::vector<std::uint8_t>{1}).loss == 4.0);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    CHECK(masked_rmse(std::vector<double>{10, nan}, std::vector<double>{14, nan}, std::vector<std::uint8_t>{1, 0}).loss == 4.0);
    CHECK_THROWS_WITH_AS(masked_rmse(std::vector<double>{1}, std::vector<double>{1}, std::vector<std::uint8_t>{0}),
                         doctest::Contains("EmptyMask"), Error);
    CHECK_THROWS_WITH_AS(masked_rmse(std::vector<double>{1}, std::vector<double>{1, 2}, std::vector<std::uint8_t>{0}),
                         doctest::Contains("ShapeMismatch"), Error);
}

TEST_CASE("masked_rmse matches the loop oracle") {
    Rng rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        const auto in = random_instance(256, rng);
        CHECK(masked_rmse(in.pred, in.target, in.mask).loss ==
              doctest::Approx(oracle::masked_rmse_loop(in.pred, in.target, in.mask)).epsilon(1e-12));
    }
}

TEST_CASE("masked gradient is exactly zero off the mask and matches finite differences on it") {
    Rng rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        auto in = random_instance(64, rng);
        const auto g = masked_rmse_grad(in.pred, in.target, in.mask);
        const double base = masked_rmse(in.pred, in.target, in.mask).loss;
        for (std::size_t i = 0; i < 64; ++i) {
            if (!in.mask[i]) {
                CHECK(g[i] == 0.0);
                auto moved = in.pred;
                moved[i] += 1e3;
                CHECK(std::abs(masked_rmse(moved, in.target, in.mask).loss - base) <= 1e-12);
                continue;
            }
            const double h = 1e-5;
            auto up = in.pred, dn = in.pred;
            up[i] += h;
            dn[i] -= h;
            const double fd = (masked_rmse(up, in.target, in.mask).loss - masked_rmse(dn, in.target, in.mask).loss) / (2 * h);
            CHECK(std::abs(fd - g[i]) <= 1e-4 * std::max(std::abs(fd), 1e-8));
        }
    }
}

TEST_CASE("flipping prediction, target and mask together keeps the loss") {
    Rng rng(10);
    const int n = 8;
    const auto in = random_instance(n * n, rng);
    Instance f;
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            const std::size_t src = static_cast<std::size_t>(r) * n + (n - 1 - c);
            f.pred.push_back(in.pred[src]);
            f.target.push_back(in.target[src]);
            f.mask.push_back(in.mask[src]);
        }
    }
    CHECK(masked_rmse(f.pred, f.target, f.mask).loss == doctest::Approx(masked_rmse(in.pred, in.target, in.mask).loss));
}

TEST_CASE("linear fit recovers an exact relation and flags collinearity") {
    std::vector<std::vector<double>> x;
    std::vector<double> y;
    for (int i = 0; i < 20; ++i) {
        x.push_back({static_cast<double>(i)});
        y.push_back(3.0 * i + 5.0);
    }
    const auto m = fit_tabular(TabularKind::Linear, {}, table_from(x, y), 0);
    CHECK(m.coefficients[0] == doctest::Approx(3).epsilon(1e-9));
    CHECK(m.coefficients[1] == doctest::Approx(5).epsilon(1e-9));
    CHECK_FALSE(m.singular);

    for (auto& row : x) row.push_back(2 * row[0]);
    const auto s = fit_tabular(TabularKind::Linear, {}, table_from(x, y), 0);
    CHECK(s.singular);
    CHECK(s.predict(std::vector<double>{4, 8}) == doctest::Approx(17).epsilon(1e-9));

    CHECK_THROWS_WITH_AS(fit_tabular(TabularKind::Linear, {}, table_from({{1, 2, 3}}, {1}), 0),
                         doctest::Contains("InsufficientData"), Error);
}

TEST_CASE("every kind predicts a constant target exactly") {
    Rng rng(11);
    std::vector<std::vector<double>> x;
    std::vector<double> y;
    for (int i = 0; i < 40; ++i) {
        x.push_back({rng.normal(), rng.normal(), rng.normal()});
        y.push_back(42.5);
    }
    const auto t = table_from(x, y);
    for (auto kind : {TabularKind::Linear, TabularKind::RandomForest, TabularKind::GradientBoosting}) {
        const Hyperparams hp = kind == TabularKind::Linear ? Hyperparams{} : Hyperparams{{"n_trees", 5}};
        const auto m = fit_tabular(kind, hp, t, 1);
        for (double p : m.predict(t)) CHECK(p == doctest::Approx(42.5).epsilon(1e-9));
    }
}

TEST_CASE("single-split forest equals the enumerated best split") {
    Rng rng(12);
    std::vector<std::vector<double>> x;
    std::vector<double> y;
    for (int i = 0; i < 30; ++i) {
        const double v = rng.uniform(0, 10);
        x.push_back({v});
        y.push_back((v < 4.2 ? 10.0 : 50.0) + rng.normal());
    }
    // Oracle: try every midpoint threshold, keep the lowest squared error.
    std::vector<double> vals;
    for (auto& r : x) vals.push_back(r[0]);
    std::sort(vals.begin(), vals.end());
    double best_sse = 1e300, best_t = 0, lmean = 0, rmean = 0;
    for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
        const double t = 0.5 * (vals[i] + vals[i + 1]);
        double ls = 0, rs = 0;
        int ln = 0, rn = 0;
        for (std::size_t k = 0; k < x.size(); ++k) (x[k][0] <= t ? (ls += y[k], ++ln) : (rs += y[k], ++rn));
        double sse = 0;
        for (std::size_t k = 0; k < x.size(); ++k) {
            const double m = x[k][0] <= t ? ls / ln : rs / rn;
            sse += (y[k] - m) * (y[k] - m);
        }
        if (sse < best_sse) {
            best_sse = sse;
            best_t = t;
            lmean = ls / ln;
            rmean = rs / rn;
        }
    }
    const auto m = fit_tabular(TabularKind::RandomForest, {{"n_trees", 1}, {"max_depth", 1}, {"bootstrap", 0}},
                               table_from(x, y), 3);
    REQUIRE(m.trees.size() == 1);
    CHECK(m.trees[0].depth() == 1);
    CHECK(m.trees[0].threshold[0] == doctest::Approx(best_t));
    for (auto& r : x) CHECK(m.predict(r) == doctest::Approx(r[0] <= best_t ? lmean : rmean).epsilon(1e-12));
}

TEST_CASE("ensembles are deterministic and fit a nonlinear signal") {
    Rng rng(13);
    std::vector<std::vector<double>> x;
    std::vector<double> y;
    for (int i = 0; i < 400; ++i) {
        const double a = rng.uniform(-2, 2), b = rng.uniform(-2, 2);
        x.push_back({a, b, rng.normal()});
        y.push_back(std::sin(2 * a) * 10 + b * b);
    }
    const auto t = table_from(x, y);
    for (auto kind : {TabularKind::RandomForest, TabularKind::GradientBoosting}) {
        const auto m1 = fit_tabular(kind, {{"n_trees", 50}}, t, 77);
        const auto m2 = fit_tabular(kind, {{"n_trees", 50}}, t, 77);
        CHECK(m1.predict(t) == m2.predict(t));
        const auto p = m1.predict(t);
        double ss = 0;
        for (std::size_t i = 0; i < p.size(); ++i) ss += (p[i] - y[i]) * (p[i] - y[i]);
        CHECK(std::sqrt(ss / p.size()) < 1.5);
    }
    CHECK_THROWS_WITH_AS(fit_tabular(TabularKind::RandomForest, {{"n_tress", 5}, {"max_depth", -1}}, t, 0),
                         doctest::Contains("n_tress"), Error);
}

TEST_CASE("pixel table extraction") {
    const Datacube cube = small_cube(1);
    const auto t = extract_pixel_table(cube);
    CHECK(t.n_features == 15);
    std::size_t expect = 0;
    for (std::size_t p = 0; p < cube.inputs.pixel_count(); ++p) expect += cube.target_mask[p] && cube.inputs.valid(p);
    CHECK(t.rows() == expect);
    for (std::size_t i = 1; i < t.rows(); ++i) CHECK(t.pixel[i] > t.pixel[i - 1]);
    const std::size_t p0 = t.pixel[0];
    for (std::size_t c = 0; c < 15; ++c) CHECK(t.row(0)[c] == cube.inputs.plane(c)[p0]);

    std::vector<std::uint8_t> one(cube.inputs.pixel_count(), 0);
    one[p0] = 1;
    CHECK(extract_pixel_table(cube, one).rows() == 1);

    Datacube empty = cube;
    std::fill(empty.target_mask.begin(), empty.target_mask.end(), 0);
    CHECK_THROWS_WITH_AS(extract_pixel_table(empty), doctest::Contains("NoSupervisedPixels"), Error);
}

TEST_CASE("tabular dense prediction agrees with row prediction") {
    const Datacube cube = normalize(small_cube(2));
    const auto table = extract_pixel_table(cube);
    const auto art = make_tabular_artifact(ModelKind::RandomForest,
                                           fit_tabular(TabularKind::RandomForest, {{"n_trees", 10}}, table, 4), cube, 4);
    const Raster dense = predict_dense(art, cube);
    CHECK(dense.valid_count() == cube.inputs.valid_count());
    const auto rows = art.tabular->predict(table);
    for (std::size_t i = 0; i < table.rows(); ++i) CHECK(dense.plane(0)[table.pixel[i]] == doctest::Approx(rows[i]).epsilon(1e-9));

    const Datacube raw = small_cube(2);
    CHECK_THROWS_WITH_AS(predict_dense(art, raw), doctest::Contains("StatsMismatch"), Error);
    CHECK(prepare_cube(art, raw).norm_stats == cube.norm_stats);
    CHECK_THROWS_WITH_AS(predict_dense(art, small_cube(2, 48, ModalitySubset::S2Only)), doctest::Contains("ModalityMismatch"),
                         Error);
}

TEST_CASE("UNet prediction on a single tile equals the forward pass") {
    const Datacube cube = normalize(small_cube(3, 64, ModalitySubset::S2Only));
    ModelArtifact art;
    art.kind = ModelKind::UNet;
    art.subset = cube.subset;
    art.channels = cube.inputs.channels();
    art.norm_stats = cube.norm_stats;
    art.tile_size = 64;
    auto net = std::make_shared<nn::UNet>(nn::UNetConfig{12, 3, 4}, 1);
    net->out_offset = 100;
    net->out_scale = 20;
    art.unet = net;
    const Raster dense = predict_dense(art, cube);
    const auto fwd = unet_forward(*net, cube.inputs.data(), 12, 64, 64);
    for (std::size_t p = 0; p < 64 * 64; ++p) {
        if (cube.inputs.valid(p)) CHECK(dense.plane(0)[p] == doctest::Approx(fwd[p]).epsilon(1e-6));
    }
}

TEST_CASE("overlap-averaged tiles track a full-image pass") {
    const Datacube cube = normalize(small_cube(4, 576, ModalitySubset::S2Only));
    ModelArtifact art;
    art.kind = ModelKind::UNet;
    art.subset = cube.subset;
    art.channels = cube.inputs.channels();
    art.norm_stats = cube.norm_stats;
    art.tile_size = 512;
    auto net = std::make_shared<nn::UNet>(nn::UNetConfig{12, 4, 4}, 9);
    art.unet = net;
    const Raster tiled = predict_dense(art, cube);
    const auto full = unet_forward(*net, cube.inputs.data(), 12, 576, 576);
    double diff = 0, mean = 0, sq = 0;
    std::size_t n = 0;
    for (std::size_t p = 0; p < full.size(); ++p) {
        if (!cube.inputs.valid(p)) continue;
        diff += std::abs(tiled.plane(0)[p] - full[p]);
        mean += full[p];
        sq += full[p] * full[p];
        ++n;
    }
    const double sd = std::sqrt(sq / n - (mean / n) * (mean / n));
    CHECK(diff / n < 0.05 * sd);
}

TEST_CASE("artifacts survive a save/load cycle") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "agbmap_test_models";
    fs::create_directories(dir);
    const Datacube cube = normalize(small_cube(5));
    const auto table = extract_pixel_table(cube);
    for (auto kind : {ModelKind::Linear, ModelKind::RandomForest, ModelKind::GradientBoosting}) {
        const auto art = make_tabular_artifact(kind, fit_tabular(to_tabular(kind), {}, table, 6), cube, 6);
        save_artifact(dir / "m.bin", art);
        const auto back = load_artifact(dir / "m.bin");
        CHECK(back.kind == kind);
        CHECK(back.norm_stats == art.norm_stats);
        CHECK(predict_dense(back, cube).plane(0)[table.pixel[3]] == predict_dense(art, cube).plane(0)[table.pixel[3]]);
    }
    ModelArtifact u;
    u.kind = ModelKind::UNet;
    u.subset = cube.subset;
    u.channels = cube.inputs.channels();
    u.norm_stats = cube.norm_stats;
    u.tile_size = 48;
    u.history = {{0, 12.5, std::numeric_limits<double>::quiet_NaN()}, {1, 11.0, 10.0}};
    u.best_epoch = 1;
    auto net = std::make_shared<nn::UNet>(nn::UNetConfig{15, 2, 3}, 2);
    net->out_offset = 80;
    u.unet = net;
    save_artifact(dir / "u.bin", u);
    const auto back = load_artifact(dir / "u.bin");
    CHECK(std::isnan(back.history[0].test));
    CHECK(back.history[1].test == 10.0);
    const Raster a = predict_dense(u, cube), b = predict_dense(back, cube);
    for (std::size_t p = 0; p < a.pixel_count(); ++p) CHECK(((std::isnan(a.plane(0)[p]) && std::isnan(b.plane(0)[p])) || a.plane(0)[p] == b.plane(0)[p]));
    CHECK_THROWS_WITH_AS(load_artifact(dir / "missing.bin"), doctest::Contains("missing.bin"), Error);
}
