#include "agbmap/image.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <memory>

#include "agbmap/error.hpp"

namespace agbmap {

namespace {

struct Glyph {
    char c;
    const char* rows;  // 7 rows of 5 columns, '#' set
};

// clang-format off
constexpr Glyph kFont[] = {
    {'0', " ### #   ##  ### # ###  ##   # ### "},
    {'1', "  #   ##    #    #    #    #   ### "},
    {'2', " ### #   #    #   #   #   #   #####"},
    {'3', "#####   #   #     #     ##   # ### "},
    {'4', "   #   ##  # # #  # #####   #    # "},
    {'5', "######    ####     #    ##   # ### "},
    {'6', "  ##  #   #    #### #   ##   # ### "},
    {'7', "#####    #   #   #   #    #    #   "},
    {'8', " ### #   ##   # ### #   ##   # ### "},
    {'9', " ### #   ##   # ####    #   #  ##  "},
    {'A', " ### #   ##   #######   ##   ##   #"},
    {'B', "#### #   ##   ##### #   ##   ##### "},
    {'C', " ### #   ##    #    #    #   # ### "},
    {'D', "###  #  # #   ##   ##   ##  # ###  "},
    {'E', "######    #    #### #    #    #####"},
    {'F', "######    #    #### #    #    #    "},
    {'G', " ### #   ##    # ####   ##   # ####"},
    {'H', "#   ##   ##   #######   ##   ##   #"},
    {'I', " ###   #    #    #    #    #   ### "},
    {'J', "  ###   #    #    #    # #  #  ##  "},
    {'K', "#   ##  # # #  ##   # #  #  # #   #"},
    {'L', "#    #    #    #    #    #    #####"},
    {'M', "#   ### ### # ## # ##   ##   ##   #"},
    {'N', "#   ##   ###  ## # ##  ###   ##   #"},
    {'O', " ### #   ##   ##   ##   ##   # ### "},
    {'P', "#### #   ##   ##### #    #    #    "},
    {'Q', " ### #   ##   ##   ## # ##  #  ## #"},
    {'R', "#### #   ##   ##### # #  #  # #   #"},
    {'S', " ####    #     ###     #    #####  "},
    {'T', "#####  #    #    #    #    #    #  "},
    {'U', "#   ##   ##   ##   ##   ##   # ### "},
    {'V', "#   ##   ##   ##   ##   # # #   #  "},
    {'W', "#   ##   ##   ## # ## # ## # # # # "},
    {'X', "#   ##   # # #   #   # # #   ##   #"},
    {'Y', "#   ##   # # #   #    #    #    #  "},
    {'Z', "#####    #   #   #   #   #    #####"},
    {'.', "                          ##   ##  "},
    {',', "                     ##    #   #   "},
    {'-', "               #####               "},
    {'+', "       #    #  #####  #    #       "},
    {'/', "    #    #   #   #   #   #    #    "},
    {':', "      ##   ##        ##   ##       "},
    {'(', "   #   #   #    #    #     #     # "},
    {')', " #     #     #    #    #   #   #   "},
    {'%', "##   ##  #   #   #   #   #  ##   ##"},
    {'_', "                              #####"},
    {'=', "          #####     #####          "},
    {'<', "   #   #   #   #     #     #     # "},
    {'>', " #     #     #     #   #   #   #   "},
};
// clang-format on

const Glyph* find_glyph(char c) {
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
    for (const auto& g : kFont)
        if (g.c == c) return &g;
    return nullptr;
}

Rgb lerp(Rgb a, Rgb b, double t) {
    auto mix = [t](std::uint8_t x, std::uint8_t y) {
        return static_cast<std::uint8_t>(std::lround(x + (y - x) * t));
    };
    return {mix(a.r, b.r), mix(a.g, b.g), mix(a.b, b.b)};
}

template <std::size_t N>
Rgb ramp(const std::array<Rgb, N>& stops, double t) {
    if (!std::isfinite(t)) t = 0.0;
    t = std::clamp(t, 0.0, 1.0) * (N - 1);
    const auto i = std::min<std::size_t>(static_cast<std::size_t>(t), N - 2);
    return lerp(stops[i], stops[i + 1], t - static_cast<double>(i));
}

std::string short_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

}  // namespace

Image::Image(int width, int height, Rgb background) : width_(width), height_(height) {
    if (width <= 0 || height <= 0) throw Error(ErrorCode::InvalidArgument, "image dimensions must be positive");
    pixels_.resize(static_cast<std::size_t>(width) * height * 3);
    for (std::size_t i = 0; i < pixels_.size(); i += 3) {
        pixels_[i] = background.r;
        pixels_[i + 1] = background.g;
        pixels_[i + 2] = background.b;
    }
}

Rgb Image::at(int x, int y) const {
    const std::size_t o = (static_cast<std::size_t>(y) * width_ + x) * 3;
    return {pixels_[o], pixels_[o + 1], pixels_[o + 2]};
}

void Image::set(int x, int y, Rgb c) {
    if (x < 0 || y < 0 || x >= width_ || y >= height_) return;
    const std::size_t o = (static_cast<std::size_t>(y) * width_ + x) * 3;
    pixels_[o] = c.r;
    pixels_[o + 1] = c.g;
    pixels_[o + 2] = c.b;
}

void Image::fill_rect(int x0, int y0, int x1, int y1, Rgb c) {
    if (x0 > x1) std::swap(x0, x1);
    if (y0 > y1) std::swap(y0, y1);
    for (int y = std::max(y0, 0); y <= std::min(y1, height_ - 1); ++y)
        for (int x = std::max(x0, 0); x <= std::min(x1, width_ - 1); ++x) set(x, y, c);
}

void Image::rect(int x0, int y0, int x1, int y1, Rgb c) {
    line(x0, y0, x1, y0, c);
    line(x1, y0, x1, y1, c);
    line(x1, y1, x0, y1, c);
    line(x0, y1, x0, y0, c);
}

void Image::line(int x0, int y0, int x1, int y1, Rgb c) {
    const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
    const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    while (true) {
        set(x0, y0, c);
        if (x0 == x1 && y0 == y1) break;
        const int e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            x0 += sx;
        }
        if (e2 <= dx) {
            err += dx;
            y0 += sy;
        }
    }
}

void Image::text(int x, int y, std::string_view s, Rgb c, int scale) {
    for (char ch : s) {
        if (const Glyph* g = find_glyph(ch)) {
            for (int r = 0; r < 7; ++r)
                for (int col = 0; col < 5; ++col)
                    if (g->rows[r * 5 + col] == '#')
                        fill_rect(x + col * scale, y + r * scale, x + (col + 1) * scale - 1, y + (r + 1) * scale - 1, c);
        }
        x += 6 * scale;
    }
}

int Image::text_width(std::string_view s, int scale) {
    return s.empty() ? 0 : static_cast<int>(s.size()) * 6 * scale - scale;
}

void Image::blit(const Image& src, int x, int y) {
    for (int r = 0; r < src.height_; ++r)
        for (int c = 0; c < src.width_; ++c) set(x + c, y + r, src.at(c, r));
}

void Image::write_png(const std::filesystem::path& path) const {
    std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.c_str(), "wb"), &std::fclose);
    if (!fp) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw Error(ErrorCode::Io, "libpng initialisation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw Error(ErrorCode::Io, "failed writing " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(width_), static_cast<png_uint_32>(height_), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < height_; ++y) {
        png_write_row(png, pixels_.data() + static_cast<std::size_t>(y) * width_ * 3);
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

Rgb viridis(double t) {
    static constexpr std::array<Rgb, 9> stops{{{68, 1, 84},
                                              {71, 44, 122},
                                              {59, 81, 139},
                                              {44, 113, 142},
                                              {33, 144, 141},
                                              {39, 173, 129},
                                              {92, 200, 99},
                                              {170, 220, 50},
                                              {253, 231, 37}}};
    return ramp(stops, t);
}

Rgb diverging(double t) {
    static constexpr std::array<Rgb, 5> stops{{{33, 102, 172}, {146, 197, 222}, {247, 247, 247}, {244, 165, 130}, {178, 24, 43}}};
    return ramp(stops, t);
}

Image render_raster(const Raster& raster, std::size_t channel, double lo, double hi, Colormap cmap, Rgb nodata) {
    Image img(raster.width(), raster.height());
    const auto plane = raster.plane(channel);
    const double span = hi > lo ? hi - lo : 1.0;
    for (int r = 0; r < raster.height(); ++r) {
        for (int c = 0; c < raster.width(); ++c) {
            const std::size_t p = static_cast<std::size_t>(r) * raster.width() + c;
            img.set(c, r, raster.valid(p) ? cmap((plane[p] - lo) / span) : nodata);
        }
    }
    return img;
}

Image colorbar(int height, double lo, double hi, Colormap cmap) {
    const std::string top = short_number(hi), bottom = short_number(lo);
    const int label_w = std::max(Image::text_width(top), Image::text_width(bottom));
    Image img(16 + 4 + label_w, height);
    const int bar_top = 4, bar_bottom = height - 5;
    for (int y = bar_top; y <= bar_bottom; ++y) {
        const double t = 1.0 - static_cast<double>(y - bar_top) / std::max(1, bar_bottom - bar_top);
        img.fill_rect(0, y, 15, y, cmap(t));
    }
    img.rect(0, bar_top, 15, bar_bottom, {0, 0, 0});
    img.text(20, bar_top, top, {0, 0, 0});
    img.text(20, bar_bottom - 6, bottom, {0, 0, 0});
    return img;
}

}  // namespace agbmap
