#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "agbmap/raster.hpp"

namespace agbmap {

/// Decoded GeoTIFF contents. Bands are band-sequential; nodata pixels are NaN.
struct GeoTiffImage {
    Grid grid;
    std::vector<ChannelId> channels;
    std::vector<double> data;
    std::map<std::string, std::string> metadata;
};

/// Writes an uncompressed float64 GeoTIFF, one strip per band. Channel ids go
/// into the per-band GDAL metadata descriptions and NaN is declared as nodata.
void write_geotiff(const std::filesystem::path& path, const GeoTiffImage& image);

/// Reads strip-organised, uncompressed little-endian TIFFs of any integer or
/// floating sample type. Values equal to the declared nodata become NaN.
GeoTiffImage read_geotiff(const std::filesystem::path& path);

void write_raster(const std::filesystem::path& path, const Raster& raster,
                  const std::map<std::string, std::string>& metadata = {});
/// A pixel is valid iff every band holds a finite value there.
Raster read_raster(const std::filesystem::path& path);

}  // namespace agbmap
