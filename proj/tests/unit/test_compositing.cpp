#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "agbmap/compositing.hpp"
#include "agbmap/error.hpp"
#include "agbmap/geotiff.hpp"
#include "agbmap/rng.hpp"
#include "oracles.hpp"

using namespace agbmap;

namespace {

Grid small_grid(int w = 2, int h = 2) {
    Grid g;
    g.width = w;
    g.height = h;
    g.crs_id = "EPSG:5070";
    return g;
}

Raster scl_raster(const Grid& g, std::vector<double> codes) {
    return make_single_band(g, scl_channel(), std::move(codes));
}

Raster band(const Grid& g, std::vector<double> v) { return make_single_band(g, {Modality::S2, "B04"}, std::move(v)); }

Date d(int y, unsigned m, unsigned day) { return std::chrono::year(y) / std::chrono::month(m) / std::chrono::day(day); }

}  // namespace

TEST_CASE("cloud_mask follows the cloudy class set") {
    const Grid g = small_grid();
    CHECK(cloud_mask(scl_raster(g, {4, 4, 4, 4})) == std::vector<std::uint8_t>{1, 1, 1, 1});
    CHECK(cloud_mask(scl_raster(g, {9, 9, 9, 9})) == std::vector<std::uint8_t>{0, 0, 0, 0});
    CHECK(cloud_mask(scl_raster(g, {4, 3, 8, 5})) == std::vector<std::uint8_t>{1, 0, 0, 1});
    CHECK(cloud_mask(scl_raster(g, {4, NAN, 2, 6})) == std::vector<std::uint8_t>{1, 0, 1, 1});
    CHECK_THROWS_WITH_AS(cloud_mask(scl_raster(g, {4, 12, 4, 4})), doctest::Contains("BadClassCode"), Error);
    CHECK_THROWS_WITH_AS(cloud_mask(scl_raster(g, {4, 2.5, 4, 4})), doctest::Contains("BadClassCode"), Error);
    for (int code = 0; code <= 11; ++code) {
        const bool cloudy = code == 0 || code == 1 || code == 3 || code >= 8;
        CHECK(is_cloudy_class(code) == cloudy);
    }
}

TEST_CASE("median_composite examples") {
    const Grid g = small_grid(1, 1);
    SUBCASE("single clear scene is returned unchanged") {
        const SceneSeries s({band(g, {0.3})}, {d(2021, 6, 1)}, {scl_raster(g, {4})});
        CHECK(median_composite(s).plane(0)[0] == 0.3);
    }
    SUBCASE("odd count") {
        const SceneSeries s({band(g, {10}), band(g, {90}), band(g, {20})}, {d(2021, 6, 1), d(2021, 6, 2), d(2021, 6, 3)});
        CHECK(median_composite(s).plane(0)[0] == 20);
    }
    SUBCASE("even count averages the middle pair") {
        const SceneSeries s({band(g, {10}), band(g, {90}), band(g, {20}), band(g, {40})},
                            {d(2021, 6, 1), d(2021, 6, 2), d(2021, 6, 3), d(2021, 6, 4)});
        CHECK(median_composite(s).plane(0)[0] == 30);
    }
    SUBCASE("cloudy observations are ignored; all-cloudy pixels stay invalid") {
        const Grid g2 = small_grid(2, 1);
        const SceneSeries s({band(g2, {10, 1}), band(g2, {500, 2}), band(g2, {30, 3})},
                            {d(2021, 6, 1), d(2021, 6, 2), d(2021, 6, 3)},
                            {scl_raster(g2, {4, 9}), scl_raster(g2, {9, 8}), scl_raster(g2, {5, 3})});
        const Raster out = median_composite(s);
        CHECK(out.plane(0)[0] == 20);
        CHECK_FALSE(out.valid(1));
    }
}

TEST_CASE("median_composite matches the oracle and is permutation invariant") {
    Rng rng(101);
    for (int trial = 0; trial < 20; ++trial) {
        const Grid g = small_grid(6, 5);
        const std::size_t len = 1 + rng.index(7);
        std::vector<Raster> scenes, scl;
        std::vector<Date> dates;
        for (std::size_t s = 0; s < len; ++s) {
            scenes.push_back(oracle::random_raster(g, 2, rng, 0.1));
            std::vector<double> codes(g.pixel_count());
            for (auto& c : codes) c = static_cast<double>(rng.index(12));
            scl.push_back(scl_raster(g, codes));
            dates.push_back(d(2021, 6, 1 + static_cast<unsigned>(s)));
        }
        const SceneSeries series(scenes, dates, scl);
        const Raster out = median_composite(series);
        for (std::size_t p = 0; p < g.pixel_count(); ++p) {
            for (std::size_t c = 0; c < 2; ++c) {
                double expect = 0;
                const bool ok = oracle::median_oracle(series, p, c, expect);
                REQUIRE(out.valid(p) == ok);
                if (ok) CHECK(out.plane(c)[p] == expect);
            }
        }
        // Shuffle scene order (dates follow their scenes' new positions).
        std::vector<std::size_t> order(len);
        for (std::size_t i = 0; i < len; ++i) order[i] = i;
        rng.shuffle(std::span<std::size_t>(order));
        std::vector<Raster> s2, c2;
        for (auto i : order) {
            s2.push_back(scenes[i]);
            c2.push_back(scl[i]);
        }
        const Raster shuffled = median_composite(SceneSeries(s2, dates, c2));
        for (std::size_t i = 0; i < out.data().size(); ++i) {
            const double a = out.data()[i], b = shuffled.data()[i];
            CHECK(((std::isnan(a) && std::isnan(b)) || a == b));
        }
    }
}

TEST_CASE("marking one observation cloudy only changes that pixel") {
    Rng rng(5);
    const Grid g = small_grid(5, 5);
    std::vector<Raster> scenes, scl;
    std::vector<Date> dates;
    for (unsigned s = 0; s < 5; ++s) {
        scenes.push_back(oracle::random_raster(g, 1, rng));
        scl.push_back(scl_raster(g, std::vector<double>(g.pixel_count(), 4)));
        dates.push_back(d(2021, 7, 1 + s));
    }
    const Raster before = median_composite(SceneSeries(scenes, dates, scl));
    std::vector<double> codes(g.pixel_count(), 4);
    codes[12] = 9;
    scl[2] = scl_raster(g, codes);
    const Raster after = median_composite(SceneSeries(scenes, dates, scl));
    for (std::size_t p = 0; p < g.pixel_count(); ++p) {
        if (p != 12) CHECK(after.plane(0)[p] == before.plane(0)[p]);
    }
}

TEST_CASE("temporal_mean examples") {
    const Grid g = small_grid(1, 1);
    const auto summer = summer_window(2021);
    SUBCASE("single in-window scene") {
        const SceneSeries s({band(g, {7.5})}, {d(2021, 7, 1)});
        CHECK(temporal_mean(s, summer).plane(0)[0] == 7.5);
    }
    SUBCASE("constant series") {
        const SceneSeries s({band(g, {3}), band(g, {3}), band(g, {3})}, {d(2021, 6, 1), d(2021, 7, 1), d(2021, 8, 31)});
        CHECK(temporal_mean(s, summer).plane(0)[0] == 3);
    }
    SUBCASE("out-of-window scene is excluded") {
        const SceneSeries s({band(g, {2}), band(g, {4}), band(g, {9})}, {d(2021, 6, 15), d(2021, 8, 1), d(2021, 9, 1)});
        CHECK(temporal_mean(s, summer).plane(0)[0] == 3.0);
    }
    SUBCASE("empty window") {
        const SceneSeries s({band(g, {2})}, {d(2021, 5, 1)});
        CHECK_THROWS_WITH_AS(temporal_mean(s, summer), doctest::Contains("EmptyWindow"), Error);
    }
}

TEST_CASE("temporal_mean matches the oracle") {
    Rng rng(77);
    const DateWindow window{d(2021, 6, 3), d(2021, 6, 6)};
    for (int trial = 0; trial < 20; ++trial) {
        const Grid g = small_grid(4, 4);
        const std::size_t len = 1 + rng.index(7);
        std::vector<Raster> scenes;
        std::vector<Date> dates;
        for (std::size_t s = 0; s < len; ++s) {
            scenes.push_back(oracle::random_raster(g, 1, rng, 0.2));
            dates.push_back(d(2021, 6, 1 + static_cast<unsigned>(s)));
        }
        const SceneSeries series(scenes, dates);
        if (len < 3) {
            CHECK_THROWS_AS(temporal_mean(series, window), Error);
            continue;
        }
        const Raster out = temporal_mean(series, window);
        for (std::size_t p = 0; p < g.pixel_count(); ++p) {
            double expect = 0;
            const bool ok = oracle::mean_oracle(series, p, 0, window, expect);
            REQUIRE(out.valid(p) == ok);
            if (ok) CHECK(out.plane(0)[p] == expect);
        }
    }
}

TEST_CASE("series validation") {
    const Grid g = small_grid();
    CHECK_THROWS_WITH_AS(SceneSeries({}, {}), doctest::Contains("EmptySeries"), Error);
    CHECK_THROWS_AS(SceneSeries({band(g, {1, 2, 3, 4}), band(g, {1, 2, 3, 4})}, {d(2021, 6, 2), d(2021, 6, 1)}), Error);
    CHECK_THROWS_AS(SceneSeries({band(g, {1, 2, 3, 4}), band(small_grid(3, 2), {1, 2, 3, 4, 5, 6})},
                                {d(2021, 6, 1), d(2021, 6, 2)}),
                    Error);
}

TEST_CASE("dates, windows and manifests") {
    CHECK(format_date(parse_date("2021-06-01")) == "2021-06-01");
    CHECK_THROWS_AS(parse_date("2021-02-30"), Error);
    CHECK_THROWS_AS(parse_date("June 1"), Error);
    const auto w = DateWindow::parse("2021-06-01:2021-08-31");
    CHECK(w.first == summer_window(2021).first);
    CHECK(w.last == summer_window(2021).last);
    CHECK(w.str() == "2021-06-01:2021-08-31");

    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "agbmap_test_manifest";
    fs::create_directories(dir);
    const Grid g = small_grid();
    write_raster(dir / "a.tif", band(g, {1, 2, 3, 4}));
    write_raster(dir / "b.tif", band(g, {5, 6, 7, 8}));
    write_raster(dir / "a_scl.tif", scl_raster(g, {4, 4, 9, 4}));
    write_raster(dir / "b_scl.tif", scl_raster(g, {4, 4, 4, 4}));
    write_manifest(dir / "m.txt", {{dir / "b.tif", d(2021, 7, 1), dir / "b_scl.tif"},
                                   {dir / "a.tif", d(2021, 6, 1), dir / "a_scl.tif"}});
    const auto entries = read_manifest(dir / "m.txt");
    REQUIRE(entries.size() == 2);
    CHECK(entries[0].scene == dir / "b.tif");
    const SceneSeries s = load_series(entries);
    CHECK(s.timestamps()[0] == d(2021, 6, 1));
    const Raster c = median_composite(s);
    CHECK(c.plane(0)[0] == 3);
    CHECK(c.plane(0)[2] == 7);
}
