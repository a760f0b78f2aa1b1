#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "agbmap/raster.hpp"

namespace agbmap {

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;
    friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// 8-bit RGB canvas for plots and map previews.
class Image {
public:
    Image(int width, int height, Rgb background = {255, 255, 255});

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    Rgb at(int x, int y) const;

    void set(int x, int y, Rgb c);  // silently clipped
    void fill_rect(int x0, int y0, int x1, int y1, Rgb c);  // inclusive corners
    void rect(int x0, int y0, int x1, int y1, Rgb c);
    void line(int x0, int y0, int x1, int y1, Rgb c);
    /// 5x7 bitmap text with its top-left corner at (x, y). Lowercase is drawn
    /// as uppercase; glyphs the font lacks render as blanks.
    void text(int x, int y, std::string_view s, Rgb c, int scale = 1);
    static int text_width(std::string_view s, int scale = 1);
    void blit(const Image& src, int x, int y);

    void write_png(const std::filesystem::path& path) const;

private:
    int width_;
    int height_;
    std::vector<std::uint8_t> pixels_;
};

using Colormap = Rgb (*)(double t);
/// Perceptual sequential map, t in [0, 1].
Rgb viridis(double t);
/// Blue-white-red, 0.5 is white.
Rgb diverging(double t);

/// One raster channel mapped through `cmap` between lo and hi; invalid pixels get `nodata`.
Image render_raster(const Raster& raster, std::size_t channel, double lo, double hi, Colormap cmap,
                    Rgb nodata = {200, 200, 200});

/// Vertical colour bar with min/max labels.
Image colorbar(int height, double lo, double hi, Colormap cmap);

}  // namespace agbmap
