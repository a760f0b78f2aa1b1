#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "agbmap/csv.hpp"
#include "agbmap/cube.hpp"
#include "agbmap/error.hpp"
#include "agbmap/rng.hpp"
#include "oracles.hpp"

using namespace agbmap;
namespace fs = std::filesystem;

namespace {

Grid grid30(int w, int h) {
    Grid g;
    g.width = w;
    g.height = h;
    g.crs_id = "EPSG:5070";
    return g;
}

Raster constant_channels(const Grid& g, const std::vector<ChannelId>& ids, Rng& rng) {
    std::vector<double> data(g.pixel_count() * ids.size());
    for (auto& v : data) v = rng.uniform(0, 1);
    return Raster(g, ids, std::move(data), std::vector<std::uint8_t>(g.pixel_count(), 1));
}

struct Inputs {
    Raster s1, s2, gpp;
};

Inputs random_inputs(const Grid& g, Rng& rng) {
    return {constant_channels(g, s1_channels(), rng), constant_channels(g, s2_channels(), rng),
            constant_channels(g, {gpp_channel()}, rng)};
}

Footprint at_cell(const Grid& g, int row, int col, double agb) {
    const auto w = pixel_to_world(g, col, row);
    return {w.x, w.y, agb, true, "t"};
}

}  // namespace

TEST_CASE("match_footprints examples") {
    const Grid g = grid30(10, 10);
    SUBCASE("single footprint at a cell centre") {
        const auto m = match_footprints({{at_cell(g, 3, 5, 120)}, g.crs_id}, g);
        CHECK(m.target.value(0, 3, 5) == 120);
        CHECK(std::count(m.mask.begin(), m.mask.end(), 1) == 1);
        CHECK(m.mask[3 * 10 + 5] == 1);
    }
    SUBCASE("two footprints in one cell are averaged") {
        const auto m = match_footprints({{at_cell(g, 1, 1, 100), at_cell(g, 1, 1, 140)}, g.crs_id}, g);
        CHECK(m.target.value(0, 1, 1) == 120);
    }
    SUBCASE("out-of-bounds and low-quality footprints are counted, not matched") {
        Footprint bad = at_cell(g, 2, 2, 50);
        bad.quality = false;
        const auto m = match_footprints({{at_cell(g, 0, 0, 10), {-100, 15, 5, true, "x"}, bad}, g.crs_id}, g);
        CHECK(m.n_total == 3);
        CHECK(m.n_assigned == 1);
        CHECK(m.n_out_of_bounds == 1);
        CHECK(m.n_rejected_quality == 1);
        CHECK(m.mask[2 * 10 + 2] == 0);
    }
    SUBCASE("crs mismatch") {
        CHECK_THROWS_WITH_AS(match_footprints({{}, "EPSG:4326"}, g), doctest::Contains("CrsMismatch"), Error);
    }
}

TEST_CASE("match_footprints agrees with the cell-loop oracle") {
    Rng rng(2024);
    const Grid g = grid30(50, 50);
    FootprintSet fps{{}, g.crs_id};
    for (int i = 0; i < 1000; ++i) {
        fps.footprints.push_back({rng.uniform(-60, 50 * 30 + 60), rng.uniform(-50 * 30 - 60, 60), rng.uniform(0, 300), true, "r"});
    }
    const auto m = match_footprints(fps, g);
    const auto o = oracle::match_oracle(fps, g);
    CHECK(m.mask == o.mask);
    CHECK(m.n_assigned == o.assigned);
    CHECK(m.n_assigned + m.n_out_of_bounds == fps.footprints.size());
    for (std::size_t p = 0; p < g.pixel_count(); ++p) {
        if (o.mask[p]) CHECK(m.target.plane(0)[p] == o.value[p]);
    }
}

TEST_CASE("footprint CSV round trip") {
    const auto dir = fs::temp_directory_path() / "agbmap_test_cube";
    fs::create_directories(dir);
    FootprintSet fps{{{1.5, -2.25, 100.125, true, "gedi,beam 1"}, {3, 4, 0, false, "plot \"7\""}}, "EPSG:5070"};
    write_footprints_csv(dir / "fp.csv", fps);
    const auto back = read_footprints_csv(dir / "fp.csv", "EPSG:5070");
    CHECK(back.footprints == fps.footprints);
    CHECK(read_csv(dir / "fp.csv").header == std::vector<std::string>{"x", "y", "agb", "quality", "source_id"});
}

TEST_CASE("assemble stacks channels in canonical order") {
    Rng rng(1);
    const Grid g = grid30(6, 6);
    const auto in = random_inputs(g, rng);
    const auto m = match_footprints({{at_cell(g, 1, 1, 50), at_cell(g, 2, 4, 70)}, g.crs_id}, g);

    const std::vector<Raster> forward{in.s1, in.s2, in.gpp};
    const std::vector<Raster> backward{in.gpp, in.s2, in.s1};
    const Datacube full = assemble(forward, m.target, m.mask, ModalitySubset::SifS1S2);
    CHECK(full.inputs.n_channels() == 15);
    CHECK(full.inputs.channels().front() == ChannelId{Modality::S1, "VV"});
    CHECK(full.inputs.channels().back() == gpp_channel());
    const Datacube reordered = assemble(backward, m.target, m.mask, ModalitySubset::SifS1S2);
    CHECK(std::equal(full.inputs.data().begin(), full.inputs.data().end(), reordered.inputs.data().begin()));

    CHECK(assemble(forward, m.target, m.mask, ModalitySubset::S1S2).inputs.n_channels() == 14);
    const Datacube s2 = assemble(forward, m.target, m.mask, ModalitySubset::S2Only);
    CHECK(s2.inputs.n_channels() == 12);
    CHECK(s2.supervised_count() == 2);

    const std::vector<Raster> no_gpp{in.s1, in.s2};
    CHECK_THROWS_WITH_AS(assemble(no_gpp, m.target, m.mask, ModalitySubset::SifS1S2), doctest::Contains("MissingModality"), Error);
    CHECK_NOTHROW(assemble(no_gpp, m.target, m.mask, ModalitySubset::S1S2));

    const std::vector<Raster> off{in.s1, in.s2, constant_channels(grid30(5, 6), {gpp_channel()}, rng)};
    CHECK_THROWS_WITH_AS(assemble(off, m.target, m.mask, ModalitySubset::SifS1S2), doctest::Contains("GridMismatch"), Error);
}

TEST_CASE("a footprint over an invalid GPP pixel is not supervised") {
    Rng rng(2);
    const Grid g = grid30(4, 4);
    auto in = random_inputs(g, rng);
    std::vector<double> gpp(g.pixel_count(), 1.0);
    gpp[5] = NAN;
    gpp[6] = 2.0;
    in.gpp = make_single_band(g, gpp_channel(), gpp);
    const auto m = match_footprints({{at_cell(g, 1, 1, 50)}, g.crs_id}, g);
    const std::vector<Raster> all{in.s1, in.s2, in.gpp};
    CHECK(assemble(all, m.target, m.mask, ModalitySubset::SifS1S2).supervised_count() == 0);
    CHECK(assemble(all, m.target, m.mask, ModalitySubset::S1S2).supervised_count() == 1);
}

TEST_CASE("normalize") {
    const Grid g = grid30(2, 1);
    const Raster target = make_single_band(g, agb_channel(), {NAN, NAN});
    const std::vector<std::uint8_t> mask{0, 0};
    auto cube_with = [&](std::vector<double> values) {
        Datacube c;
        c.subset = ModalitySubset::S2Only;
        c.inputs = make_single_band(g, {Modality::S2, "B01"}, std::move(values));
        c.target = target;
        c.target_mask = mask;
        return c;
    };
    SUBCASE("hand z-score with population std") {
        const Datacube n = normalize(cube_with({0, 10}));
        CHECK(n.inputs.plane(0)[0] == -1.0);
        CHECK(n.inputs.plane(0)[1] == 1.0);
        CHECK(n.norm_stats[0] == ChannelStats{5.0, 5.0});
    }
    SUBCASE("constant channel") {
        CHECK_THROWS_WITH_AS(normalize(cube_with({3, 3})), doctest::Contains("DegenerateChannel"), Error);
    }
    SUBCASE("round trip and double application") {
        const Datacube raw = cube_with({0.25, 7.5});
        const std::vector<ChannelStats> stats{{1.0, 2.0}};
        const Datacube once = normalize(raw, stats);
        const Datacube twice = normalize(once, stats);
        CHECK(twice.inputs.plane(0)[1] != once.inputs.plane(0)[1]);
        const Datacube back = denormalize(once);
        CHECK(std::abs(back.inputs.plane(0)[0] - 0.25) < 1e-9);
        CHECK(std::abs(back.inputs.plane(0)[1] - 7.5) < 1e-9);
        CHECK_FALSE(back.normalized());
    }
    SUBCASE("stats count mismatch") {
        const std::vector<ChannelStats> stats{{0, 1}, {0, 1}};
        CHECK_THROWS_WITH_AS(normalize(cube_with({1, 2}), stats), doctest::Contains("StatsMismatch"), Error);
    }
}

TEST_CASE("normalised channels have zero mean and unit std") {
    Rng rng(8);
    const Grid g = grid30(20, 20);
    const auto in = random_inputs(g, rng);
    const auto m = match_footprints({{at_cell(g, 1, 1, 50)}, g.crs_id}, g);
    const std::vector<Raster> all{in.s1, in.s2, in.gpp};
    const Datacube n = normalize(assemble(all, m.target, m.mask, ModalitySubset::SifS1S2));
    for (std::size_t c = 0; c < n.inputs.n_channels(); ++c) {
        double s = 0, ss = 0;
        for (double v : n.inputs.plane(c)) s += v;
        const double mean = s / 400;
        for (double v : n.inputs.plane(c)) ss += (v - mean) * (v - mean);
        CHECK(std::abs(mean) < 1e-6);
        CHECK(std::abs(std::sqrt(ss / 400) - 1) < 1e-6);
    }
    CHECK(n.target.plane(0)[21] == 50);  // target untouched
}

namespace {

Datacube cube_with_supervision(const Grid& g, const std::vector<std::size_t>& cells, Rng& rng) {
    const auto in = random_inputs(g, rng);
    FootprintSet fps{{}, g.crs_id};
    for (auto p : cells) fps.footprints.push_back(at_cell(g, static_cast<int>(p / g.width), static_cast<int>(p % g.width), 10.0 + p));
    const auto m = match_footprints(fps, g);
    const std::vector<Raster> all{in.s1, in.s2, in.gpp};
    return assemble(all, m.target, m.mask, ModalitySubset::SifS1S2);
}

}  // namespace

TEST_CASE("pixel split proportions, determinism and disjointness") {
    Rng rng(9);
    const Grid g = grid30(20, 20);
    std::vector<std::size_t> cells;
    for (std::size_t i = 0; i < 100; ++i) cells.push_back(i * 4);
    const Datacube cube = cube_with_supervision(g, cells, rng);
    const auto a = split(cube, {0.9, SplitUnit::Pixel, 42, 512});
    CHECK(std::count(a.train_mask.begin(), a.train_mask.end(), 1) == 90);
    CHECK(std::count(a.test_mask.begin(), a.test_mask.end(), 1) == 10);
    for (std::size_t p = 0; p < g.pixel_count(); ++p) {
        CHECK_FALSE((a.train_mask[p] && a.test_mask[p]));
        CHECK((a.train_mask[p] || a.test_mask[p]) == (cube.target_mask[p] == 1));
    }
    const auto again = split(cube, {0.9, SplitUnit::Pixel, 42, 512});
    CHECK(again.test_mask == a.test_mask);
    const auto other = split(cube, {0.9, SplitUnit::Pixel, 43, 512});
    CHECK(other.test_mask != a.test_mask);
}

TEST_CASE("tile split keeps tiles whole") {
    Rng rng(10);
    const Grid g = grid30(40, 20);  // 10 tiles of 8 (5 x 3 windows, bottom row padded)
    std::vector<std::size_t> cells;
    for (int tr = 0; tr < 2; ++tr) {
        for (int tc = 0; tc < 5; ++tc) cells.push_back(static_cast<std::size_t>(tr * 8 + 3) * 40 + tc * 8 + 2);
    }
    const Datacube cube = cube_with_supervision(g, cells, rng);
    const auto s = split(cube, {0.9, SplitUnit::Tile, 1, 8});
    CHECK(s.train_tiles.size() == 9);
    CHECK(s.test_tiles.size() == 1);
    CHECK(std::count(s.test_mask.begin(), s.test_mask.end(), 1) == 1);
    CHECK_THROWS_WITH_AS(split(cube, {0.9, SplitUnit::Tile, 1, 16}), doctest::Contains("TooFewUnits"), Error);
}

TEST_CASE("train_count") {
    CHECK(train_count(100, 0.9) == 90);
    CHECK(train_count(10, 0.9) == 9);
    CHECK(train_count(16, 0.9) == 14);
    CHECK(train_count(11, 0.99) == 10);
}

TEST_CASE("cube file round trip") {
    Rng rng(12);
    const Grid g = grid30(7, 5);
    const Datacube cube = normalize(cube_with_supervision(g, {0, 3, 8, 20}, rng));
    const auto path = fs::temp_directory_path() / "agbmap_test_cube" / "cube.tif";
    fs::create_directories(path.parent_path());
    write_cube(path, cube, 17);
    const Datacube back = read_cube(path);
    CHECK(back.subset == cube.subset);
    CHECK(back.inputs.channels() == cube.inputs.channels());
    CHECK(back.target_mask == cube.target_mask);
    CHECK(back.norm_stats == cube.norm_stats);
    CHECK(std::equal(back.inputs.data().begin(), back.inputs.data().end(), cube.inputs.data().begin()));
}
