#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "agbmap/error.hpp"
#include "agbmap/geotiff.hpp"
#include "agbmap/rng.hpp"
#include "oracles.hpp"

using namespace agbmap;
namespace fs = std::filesystem;

namespace {

fs::path temp_path(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "agbmap_test_geotiff";
    fs::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST_CASE("multi-band raster survives a write/read cycle") {
    Rng rng(19);
    Grid g;
    g.origin_x = 500000.5;
    g.origin_y = 4200000.25;
    g.pixel_size_x = 30;
    g.pixel_size_y = 30;
    g.width = 13;
    g.height = 9;
    g.crs_id = "EPSG:5070";
    std::vector<double> data(g.pixel_count() * 3);
    for (auto& v : data) v = rng.normal(0, 100);
    std::vector<std::uint8_t> valid(g.pixel_count());
    for (auto& v : valid) v = rng.bernoulli(0.8);
    const Raster r(g, {{Modality::S1, "VV"}, {Modality::S1, "VH"}, {Modality::SIF, "GPP"}}, data, valid);

    const auto path = temp_path("multi.tif");
    write_raster(path, r, {{"NOTE", "a <b> & \"c\""}});
    const Raster back = read_raster(path);
    CHECK(back.grid() == g);
    CHECK(back.channels() == r.channels());
    CHECK(back.valid_mask() == r.valid_mask());
    for (std::size_t i = 0; i < r.data().size(); ++i) {
        const double a = r.data()[i], b = back.data()[i];
        CHECK(((std::isnan(a) && std::isnan(b)) || a == b));
    }
    const auto image = read_geotiff(path);
    CHECK(image.metadata.at("NOTE") == "a <b> & \"c\"");
}

TEST_CASE("files carry the GeoTIFF and GDAL tags") {
    Grid g;
    g.width = 2;
    g.height = 1;
    g.crs_id = "opaque-crs";
    const Raster r(g, {{Modality::S2, "B08"}}, {0.25, 0.5}, {1, 1});
    const auto path = temp_path("tags.tif");
    write_raster(path, r);
    std::ifstream f(path, std::ios::binary);
    const std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    CHECK(bytes.substr(0, 4) == std::string("II*\0", 4));
    CHECK(bytes.find("<GDALMetadata>") != std::string::npos);
    CHECK(bytes.find("S2:B08") != std::string::npos);
    CHECK(bytes.find(std::string("nan\0", 4)) != std::string::npos);
    CHECK(read_raster(path).grid().crs_id == "opaque-crs");
}

TEST_CASE("reader handles chunky uint8 and declared numeric nodata") {
    // Hand-assembled 3x1 chunky 2-sample uint8 TIFF with GDAL_NODATA "7".
    std::vector<std::uint8_t> b{'I', 'I', 42, 0, 8, 0, 0, 0};
    const std::vector<std::uint8_t> pixels{1, 2, 7, 4, 5, 6};
    b.insert(b.end(), pixels.begin(), pixels.end());
    const std::uint32_t ifd = static_cast<std::uint32_t>(b.size());
    auto put16 = [&](std::uint16_t v) { b.push_back(v & 0xff); b.push_back(v >> 8); };
    auto put32 = [&](std::uint32_t v) { for (int i = 0; i < 4; ++i) b.push_back((v >> (8 * i)) & 0xff); };
    struct E { std::uint16_t tag, type; std::uint32_t count, value; };
    const std::vector<E> entries{{256, 3, 1, 3}, {257, 3, 1, 1}, {258, 3, 1, 8}, {259, 3, 1, 1}, {262, 3, 1, 1},
                                 {273, 4, 1, 8}, {277, 3, 1, 2}, {278, 3, 1, 1}, {279, 4, 1, 6}, {284, 3, 1, 1},
                                 {42113, 2, 2, '7'}};
    put16(static_cast<std::uint16_t>(entries.size()));
    for (const auto& e : entries) {
        put16(e.tag);
        put16(e.type);
        put32(e.count);
        put32(e.value);
    }
    put32(0);
    (void)ifd;
    b[4] = static_cast<std::uint8_t>(ifd);

    const auto path = temp_path("chunky.tif");
    {
        std::ofstream f(path, std::ios::binary);
        f.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
    }
    const auto image = read_geotiff(path);
    REQUIRE(image.channels.size() == 2);
    CHECK(image.data[0] == 1);
    CHECK(std::isnan(image.data[1]));  // pixel 1, band 0 equals nodata
    CHECK(image.data[2] == 5);
    CHECK(image.data[3] == 2);
    CHECK(image.data[4] == 4);
    CHECK(image.data[5] == 6);
}

TEST_CASE("reader rejects what it cannot decode") {
    const auto path = temp_path("garbage.tif");
    {
        std::ofstream f(path, std::ios::binary);
        f << "MM\0*garbage";
    }
    CHECK_THROWS_AS(read_geotiff(path), Error);
    CHECK_THROWS_WITH_AS(read_geotiff(temp_path("missing.tif")), doctest::Contains("Io"), Error);
}
