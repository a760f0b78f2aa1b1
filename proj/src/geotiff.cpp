#include "agbmap/geotiff.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "agbmap/error.hpp"

namespace agbmap {

namespace {

static_assert(std::endian::native == std::endian::little, "GeoTIFF codec assumes a little-endian host");

enum TiffType : std::uint16_t { kByte = 1, kAscii = 2, kShort = 3, kLong = 4, kDouble = 12 };

enum Tag : std::uint16_t {
    kImageWidth = 256,
    kImageLength = 257,
    kBitsPerSample = 258,
    kCompression = 259,
    kPhotometric = 262,
    kStripOffsets = 273,
    kSamplesPerPixel = 277,
    kRowsPerStrip = 278,
    kStripByteCounts = 279,
    kPlanarConfig = 284,
    kExtraSamples = 338,
    kSampleFormat = 339,
    kTileWidth = 322,
    kModelPixelScale = 33550,
    kModelTiepoint = 33922,
    kGeoKeyDirectory = 34735,
    kGeoAsciiParams = 34737,
    kGdalMetadata = 42112,
    kGdalNodata = 42113,
};

constexpr std::uint16_t kGTModelTypeKey = 1024;
constexpr std::uint16_t kGTRasterTypeKey = 1025;
constexpr std::uint16_t kGTCitationKey = 1026;
constexpr std::uint16_t kProjectedCSTypeKey = 3072;

std::size_t type_size(std::uint16_t type) {
    switch (type) {
        case 1: case 2: case 6: case 7: return 1;
        case 3: case 8: return 2;
        case 4: case 9: case 11: return 4;
        case 5: case 10: case 12: case 16: case 17: return 8;
        default: return 0;
    }
}

struct Entry {
    std::uint16_t tag = 0;
    std::uint16_t type = 0;
    std::uint32_t count = 0;
    std::vector<std::uint8_t> payload;
};

template <class T>
Entry make_entry(std::uint16_t tag, std::uint16_t type, const std::vector<T>& values) {
    Entry e{tag, type, static_cast<std::uint32_t>(values.size()), {}};
    e.payload.resize(values.size() * sizeof(T));
    std::memcpy(e.payload.data(), values.data(), e.payload.size());
    return e;
}

Entry make_ascii(std::uint16_t tag, const std::string& text) {
    Entry e{tag, kAscii, static_cast<std::uint32_t>(text.size() + 1), {}};
    e.payload.assign(text.begin(), text.end());
    e.payload.push_back(0);
    return e;
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string xml_unescape(const std::string& s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '&') {
            for (auto [from, to] : {std::pair{"&amp;", '&'}, {"&lt;", '<'}, {"&gt;", '>'}, {"&quot;", '"'}}) {
                const std::string f(from);
                if (s.compare(i, f.size(), f) == 0) {
                    out += to;
                    i += f.size() - 1;
                    goto next;
                }
            }
        }
        out += s[i];
    next:;
    }
    return out;
}

std::string gdal_metadata_xml(const GeoTiffImage& image) {
    std::ostringstream xml;
    xml << "<GDALMetadata>\n";
    for (const auto& [k, v] : image.metadata) {
        xml << "  <Item name=\"" << xml_escape(k) << "\">" << xml_escape(v) << "</Item>\n";
    }
    for (std::size_t b = 0; b < image.channels.size(); ++b) {
        xml << "  <Item name=\"DESCRIPTION\" sample=\"" << b << "\" role=\"description\">"
            << xml_escape(image.channels[b].str()) << "</Item>\n";
    }
    xml << "</GDALMetadata>";
    return xml.str();
}

std::string attribute(const std::string& tag_text, const std::string& name) {
    const std::string key = name + "=\"";
    const auto p = tag_text.find(key);
    if (p == std::string::npos) return {};
    const auto start = p + key.size();
    const auto end = tag_text.find('"', start);
    return tag_text.substr(start, end - start);
}

void parse_gdal_metadata(const std::string& xml, std::map<std::string, std::string>& metadata,
                         std::map<std::size_t, std::string>& descriptions) {
    std::size_t pos = 0;
    while ((pos = xml.find("<Item", pos)) != std::string::npos) {
        const auto close = xml.find('>', pos);
        const auto end = xml.find("</Item>", close);
        if (close == std::string::npos || end == std::string::npos) break;
        const std::string head = xml.substr(pos, close - pos);
        const std::string value = xml_unescape(xml.substr(close + 1, end - close - 1));
        const std::string name = xml_unescape(attribute(head, "name"));
        const std::string sample = attribute(head, "sample");
        if (!sample.empty()) {
            if (attribute(head, "role") == "description" || name == "DESCRIPTION") {
                descriptions[static_cast<std::size_t>(std::stoul(sample))] = value;
            }
        } else {
            metadata[name] = value;
        }
        pos = end;
    }
}

class Reader {
public:
    explicit Reader(std::vector<std::uint8_t> bytes) : bytes_(std::move(bytes)) {}

    template <class T>
    T read(std::size_t offset) const {
        if (offset + sizeof(T) > bytes_.size()) throw Error(ErrorCode::Format, "TIFF read past end of file");
        T v;
        std::memcpy(&v, bytes_.data() + offset, sizeof(T));
        return v;
    }

    const std::uint8_t* at(std::size_t offset, std::size_t n) const {
        if (offset + n > bytes_.size()) throw Error(ErrorCode::Format, "TIFF data runs past end of file");
        return bytes_.data() + offset;
    }

private:
    std::vector<std::uint8_t> bytes_;
};

struct RawEntry {
    std::uint16_t type = 0;
    std::uint32_t count = 0;
    std::size_t data_offset = 0;
};

std::vector<double> entry_numbers(const Reader& r, const RawEntry& e) {
    std::vector<double> out;
    out.reserve(e.count);
    for (std::uint32_t i = 0; i < e.count; ++i) {
        const std::size_t off = e.data_offset + i * type_size(e.type);
        switch (e.type) {
            case 1: out.push_back(r.read<std::uint8_t>(off)); break;
            case 3: out.push_back(r.read<std::uint16_t>(off)); break;
            case 4: out.push_back(r.read<std::uint32_t>(off)); break;
            case 8: out.push_back(r.read<std::int16_t>(off)); break;
            case 9: out.push_back(r.read<std::int32_t>(off)); break;
            case 11: out.push_back(r.read<float>(off)); break;
            case 12: out.push_back(r.read<double>(off)); break;
            case 16: out.push_back(static_cast<double>(r.read<std::uint64_t>(off))); break;
            default: throw Error(ErrorCode::Format, "unsupported TIFF field type " + std::to_string(e.type));
        }
    }
    return out;
}

std::string entry_text(const Reader& r, const RawEntry& e) {
    const auto* p = r.at(e.data_offset, e.count);
    std::string s(reinterpret_cast<const char*>(p), e.count);
    while (!s.empty() && s.back() == '\0') s.pop_back();
    return s;
}

double decode_sample(const std::uint8_t* p, int bits, int format) {
    switch (format) {
        case 3:
            if (bits == 32) { float f; std::memcpy(&f, p, 4); return f; }
            if (bits == 64) { double d; std::memcpy(&d, p, 8); return d; }
            break;
        case 2:
            if (bits == 8) return static_cast<std::int8_t>(*p);
            if (bits == 16) { std::int16_t v; std::memcpy(&v, p, 2); return v; }
            if (bits == 32) { std::int32_t v; std::memcpy(&v, p, 4); return v; }
            break;
        default:
            if (bits == 8) return *p;
            if (bits == 16) { std::uint16_t v; std::memcpy(&v, p, 2); return v; }
            if (bits == 32) { std::uint32_t v; std::memcpy(&v, p, 4); return v; }
            break;
    }
    throw Error(ErrorCode::Format, "unsupported sample type: " + std::to_string(bits) + " bits, format " + std::to_string(format));
}

}  // namespace

void write_geotiff(const std::filesystem::path& path, const GeoTiffImage& image) {
    const Grid& g = image.grid;
    g.validate();
    const std::size_t n = g.pixel_count();
    const std::size_t spp = image.channels.size();
    if (spp == 0) throw Error(ErrorCode::InvalidArgument, "GeoTIFF needs at least one band");
    if (image.data.size() != n * spp) throw Error(ErrorCode::ShapeMismatch, "GeoTIFF data does not match grid x bands");
    if (n * spp * 8 > 0xF0000000ULL) throw Error(ErrorCode::InvalidArgument, "image too large for classic TIFF");

    const std::uint32_t strip_bytes = static_cast<std::uint32_t>(n * 8);
    std::vector<std::uint32_t> offsets(spp), counts(spp, strip_bytes);
    for (std::size_t b = 0; b < spp; ++b) offsets[b] = static_cast<std::uint32_t>(8 + b * strip_bytes);

    std::vector<Entry> entries;
    entries.push_back(make_entry<std::uint32_t>(kImageWidth, kLong, {static_cast<std::uint32_t>(g.width)}));
    entries.push_back(make_entry<std::uint32_t>(kImageLength, kLong, {static_cast<std::uint32_t>(g.height)}));
    entries.push_back(make_entry(kBitsPerSample, kShort, std::vector<std::uint16_t>(spp, 64)));
    entries.push_back(make_entry<std::uint16_t>(kCompression, kShort, {1}));
    entries.push_back(make_entry<std::uint16_t>(kPhotometric, kShort, {1}));
    entries.push_back(make_entry(kStripOffsets, kLong, offsets));
    entries.push_back(make_entry<std::uint16_t>(kSamplesPerPixel, kShort, {static_cast<std::uint16_t>(spp)}));
    entries.push_back(make_entry<std::uint32_t>(kRowsPerStrip, kLong, {static_cast<std::uint32_t>(g.height)}));
    entries.push_back(make_entry(kStripByteCounts, kLong, counts));
    entries.push_back(make_entry<std::uint16_t>(kPlanarConfig, kShort, {2}));
    if (spp > 1) entries.push_back(make_entry(kExtraSamples, kShort, std::vector<std::uint16_t>(spp - 1, 0)));
    entries.push_back(make_entry(kSampleFormat, kShort, std::vector<std::uint16_t>(spp, 3)));
    const double sy = g.north_up ? g.pixel_size_y : -g.pixel_size_y;
    entries.push_back(make_entry<double>(kModelPixelScale, kDouble, {g.pixel_size_x, sy, 0.0}));
    entries.push_back(make_entry<double>(kModelTiepoint, kDouble, {0.0, 0.0, 0.0, g.origin_x, g.origin_y, 0.0}));

    const std::string citation = g.crs_id + "|";
    std::vector<std::uint16_t> keys{1, 1, 0, 0};
    keys.insert(keys.end(), {kGTModelTypeKey, 0, 1, 1});
    keys.insert(keys.end(), {kGTRasterTypeKey, 0, 1, 1});
    keys.insert(keys.end(), {kGTCitationKey, kGeoAsciiParams, static_cast<std::uint16_t>(citation.size()), 0});
    if (g.crs_id.rfind("EPSG:", 0) == 0) {
        try {
            const auto code = std::stoul(g.crs_id.substr(5));
            if (code < 65535) keys.insert(keys.end(), {kProjectedCSTypeKey, 0, 1, static_cast<std::uint16_t>(code)});
        } catch (const std::exception&) {
        }
    }
    keys[3] = static_cast<std::uint16_t>((keys.size() - 4) / 4);
    entries.push_back(make_entry(kGeoKeyDirectory, kShort, keys));
    entries.push_back(make_ascii(kGeoAsciiParams, citation));
    entries.push_back(make_ascii(kGdalMetadata, gdal_metadata_xml(image)));
    entries.push_back(make_ascii(kGdalNodata, "nan"));
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) { return a.tag < b.tag; });

    std::vector<std::uint8_t> out;
    auto put = [&out](const void* p, std::size_t bytes) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        out.insert(out.end(), b, b + bytes);
    };
    auto put16 = [&](std::uint16_t v) { put(&v, 2); };
    auto put32 = [&](std::uint32_t v) { put(&v, 4); };

    out.reserve(8 + n * spp * 8 + 4096);
    out.insert(out.end(), {'I', 'I', 42, 0});
    const std::uint32_t ifd_offset = static_cast<std::uint32_t>(8 + n * spp * 8);
    put32(ifd_offset);
    put(image.data.data(), n * spp * 8);

    std::uint32_t extra_offset = ifd_offset + 2 + 12 * static_cast<std::uint32_t>(entries.size()) + 4;
    std::vector<std::uint8_t> extra;
    put16(static_cast<std::uint16_t>(entries.size()));
    for (const auto& e : entries) {
        put16(e.tag);
        put16(e.type);
        put32(e.count);
        if (e.payload.size() <= 4) {
            std::uint8_t inline_bytes[4] = {0, 0, 0, 0};
            std::memcpy(inline_bytes, e.payload.data(), e.payload.size());
            put(inline_bytes, 4);
        } else {
            if (extra.size() % 2) extra.push_back(0);
            put32(extra_offset + static_cast<std::uint32_t>(extra.size()));
            extra.insert(extra.end(), e.payload.begin(), e.payload.end());
        }
    }
    put32(0);
    out.insert(out.end(), extra.begin(), extra.end());

    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "' for writing");
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f) throw Error(ErrorCode::Io, "failed writing '" + path.string() + "'");
}

GeoTiffImage read_geotiff(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (bytes.size() < 8) throw Error(ErrorCode::Format, "'" + path.string() + "' is too short to be a TIFF");
    if (bytes[0] != 'I' || bytes[1] != 'I') throw Error(ErrorCode::Format, "only little-endian TIFF is supported");
    Reader r(std::move(bytes));
    if (r.read<std::uint16_t>(2) != 42) throw Error(ErrorCode::Format, "not a classic TIFF (BigTIFF unsupported)");

    const std::size_t ifd = r.read<std::uint32_t>(4);
    const std::uint16_t n_entries = r.read<std::uint16_t>(ifd);
    std::map<std::uint16_t, RawEntry> tags;
    for (std::uint16_t i = 0; i < n_entries; ++i) {
        const std::size_t base = ifd + 2 + 12 * static_cast<std::size_t>(i);
        RawEntry e;
        const auto tag = r.read<std::uint16_t>(base);
        e.type = r.read<std::uint16_t>(base + 2);
        e.count = r.read<std::uint32_t>(base + 4);
        const std::size_t bytes_needed = type_size(e.type) * e.count;
        e.data_offset = bytes_needed <= 4 ? base + 8 : r.read<std::uint32_t>(base + 8);
        tags[tag] = e;
    }
    auto required = [&](std::uint16_t tag, const char* name) -> const RawEntry& {
        const auto it = tags.find(tag);
        if (it == tags.end()) throw Error(ErrorCode::Format, std::string("TIFF is missing required tag ") + name);
        return it->second;
    };
    auto number = [&](std::uint16_t tag, double fallback) {
        const auto it = tags.find(tag);
        return it == tags.end() ? fallback : entry_numbers(r, it->second).at(0);
    };

    if (tags.count(kTileWidth)) throw Error(ErrorCode::Format, "tiled TIFF layout is not supported");
    if (number(kCompression, 1) != 1) throw Error(ErrorCode::Format, "compressed TIFF is not supported");

    GeoTiffImage image;
    Grid& g = image.grid;
    g.width = static_cast<int>(entry_numbers(r, required(kImageWidth, "ImageWidth"))[0]);
    g.height = static_cast<int>(entry_numbers(r, required(kImageLength, "ImageLength"))[0]);
    const auto spp = static_cast<std::size_t>(number(kSamplesPerPixel, 1));
    const auto rows_per_strip = static_cast<std::size_t>(std::min<double>(number(kRowsPerStrip, g.height), g.height));
    const int planar = static_cast<int>(number(kPlanarConfig, 1));
    const auto bits_all = entry_numbers(r, required(kBitsPerSample, "BitsPerSample"));
    const int bits = static_cast<int>(bits_all.at(0));
    const int format = static_cast<int>(number(kSampleFormat, 1));
    const auto strip_offsets = entry_numbers(r, required(kStripOffsets, "StripOffsets"));
    const std::size_t bps = static_cast<std::size_t>(bits) / 8;

    if (tags.count(kModelPixelScale) && tags.count(kModelTiepoint)) {
        const auto scale = entry_numbers(r, tags[kModelPixelScale]);
        const auto tie = entry_numbers(r, tags[kModelTiepoint]);
        g.pixel_size_x = scale.at(0);
        g.pixel_size_y = std::abs(scale.at(1));
        g.north_up = scale.at(1) >= 0;
        g.origin_x = tie.at(3) - tie.at(0) * g.pixel_size_x;
        g.origin_y = g.north_up ? tie.at(4) + tie.at(1) * g.pixel_size_y : tie.at(4) - tie.at(1) * g.pixel_size_y;
    } else {
        g.pixel_size_x = g.pixel_size_y = 1.0;
    }
    if (tags.count(kGeoKeyDirectory)) {
        const auto keys = entry_numbers(r, tags[kGeoKeyDirectory]);
        const std::string ascii = tags.count(kGeoAsciiParams) ? entry_text(r, tags[kGeoAsciiParams]) : std::string();
        for (std::size_t k = 4; k + 3 < keys.size(); k += 4) {
            const auto id = static_cast<std::uint16_t>(keys[k]);
            const auto loc = static_cast<std::uint16_t>(keys[k + 1]);
            const auto count = static_cast<std::size_t>(keys[k + 2]);
            const auto value = static_cast<std::size_t>(keys[k + 3]);
            if (id == kGTCitationKey && loc == kGeoAsciiParams && value + count <= ascii.size()) {
                std::string c = ascii.substr(value, count);
                if (!c.empty() && c.back() == '|') c.pop_back();
                g.crs_id = c;
            } else if (id == kProjectedCSTypeKey && loc == 0 && g.crs_id.empty()) {
                g.crs_id = "EPSG:" + std::to_string(value);
            }
        }
    }

    std::map<std::size_t, std::string> descriptions;
    if (tags.count(kGdalMetadata)) parse_gdal_metadata(entry_text(r, tags[kGdalMetadata]), image.metadata, descriptions);
    for (std::size_t b = 0; b < spp; ++b) {
        const auto it = descriptions.find(b);
        if (it != descriptions.end() && it->second.find(':') != std::string::npos) {
            image.channels.push_back(ChannelId::parse(it->second));
        } else {
            image.channels.push_back({Modality::S2, "BAND" + std::to_string(b + 1)});
        }
    }

    std::optional<double> nodata;
    if (tags.count(kGdalNodata)) {
        const std::string text = entry_text(r, tags[kGdalNodata]);
        if (text != "nan" && text != "NaN" && !text.empty()) nodata = std::stod(text);
    }

    const std::size_t n = g.pixel_count();
    image.data.assign(n * spp, std::numeric_limits<double>::quiet_NaN());
    const std::size_t strips_per_plane = (static_cast<std::size_t>(g.height) + rows_per_strip - 1) / rows_per_strip;
    for (std::size_t row = 0; row < static_cast<std::size_t>(g.height); ++row) {
        const std::size_t strip = row / rows_per_strip;
        const std::size_t row_in_strip = row % rows_per_strip;
        for (std::size_t b = 0; b < spp; ++b) {
            std::size_t offset = 0;
            std::size_t stride = 0;
            if (planar == 2) {
                offset = static_cast<std::size_t>(strip_offsets.at(b * strips_per_plane + strip)) +
                         row_in_strip * g.width * bps;
                stride = bps;
            } else {
                offset = static_cast<std::size_t>(strip_offsets.at(strip)) + row_in_strip * g.width * bps * spp + b * bps;
                stride = bps * spp;
            }
            const auto* p = r.at(offset, (g.width - 1) * stride + bps);
            for (std::size_t c = 0; c < static_cast<std::size_t>(g.width); ++c) {
                double v = decode_sample(p + c * stride, bits, format);
                if (nodata && v == *nodata) v = std::numeric_limits<double>::quiet_NaN();
                image.data[b * n + row * g.width + c] = v;
            }
        }
    }
    return image;
}

void write_raster(const std::filesystem::path& path, const Raster& raster,
                  const std::map<std::string, std::string>& metadata) {
    GeoTiffImage image{raster.grid(), raster.channels(), {raster.data().begin(), raster.data().end()}, metadata};
    write_geotiff(path, image);
}

Raster read_raster(const std::filesystem::path& path) {
    GeoTiffImage image = read_geotiff(path);
    const std::size_t n = image.grid.pixel_count();
    std::vector<std::uint8_t> valid(n, 1);
    for (std::size_t b = 0; b < image.channels.size(); ++b) {
        for (std::size_t p = 0; p < n; ++p) {
            if (!std::isfinite(image.data[b * n + p])) valid[p] = 0;
        }
    }
    return Raster(image.grid, std::move(image.channels), std::move(image.data), std::move(valid));
}

}  // namespace agbmap
