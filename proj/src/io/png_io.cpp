#include "madiff/io/png_io.hpp"

#include "madiff/errors.hpp"

#include "json.hpp"

#include <png.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace madiff::io {

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write(content.data(), std::streamsize(content.size()));
    out.flush();
    if (!out) throw IoError("failed writing '" + path + "'");
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("failed reading '" + path + "'");
    return buf.str();
}

namespace {

struct FileCloser {
    std::FILE* f = nullptr;
    ~FileCloser() {
        if (f) std::fclose(f);
    }
};

uint8_t quantize8(double v, double lo, double hi) {
    double t = (v - lo) / (hi - lo);
    double q = std::lround(std::min(std::max(t, 0.0), 1.0) * 255.0);
    return uint8_t(q);
}

// Writes one 8- or 16-bit PNG. `bytes` holds packed rows (16-bit values
// big-endian, as PNG expects). Optional palette makes it color-type-3.
void write_png_impl(const std::string& path, int width, int height, int color_type,
                    int bit_depth, int channels, const std::vector<uint8_t>& bytes,
                    const png_color* palette, int palette_size) {
    FileCloser fc{std::fopen(path.c_str(), "wb")};
    if (!fc.f) throw IoError("cannot open '" + path + "' for writing");

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("libpng: write struct allocation failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("libpng: info struct allocation failed");
    }

    size_t stride = size_t(width) * size_t(channels) * size_t(bit_depth / 8);
    std::vector<png_bytep> rows(size_t(height), nullptr);
    for (int y = 0; y < height; ++y)
        rows[size_t(y)] = const_cast<png_bytep>(bytes.data() + size_t(y) * stride);

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("libpng: failed writing '" + path + "'");
    }

    png_init_io(png, fc.f);
    png_set_IHDR(png, info, png_uint_32(width), png_uint_32(height), bit_depth, color_type,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    if (palette != nullptr) png_set_PLTE(png, info, palette, palette_size);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

struct RawPng {
    int width = 0;
    int height = 0;
    int bit_depth = 0;
    int color_type = 0;
    int channels = 0;
    std::vector<uint8_t> bytes;
    std::vector<std::array<uint8_t, 3>> palette;
};

// Reads any PNG into packed 8/16-bit rows. Alpha is stripped, sub-byte
// depths are expanded, palette indices are kept as indices.
RawPng read_png_impl(const std::string& path) {
    FileCloser fc{std::fopen(path.c_str(), "rb")};
    if (!fc.f) throw IoError("cannot open '" + path + "' for reading");

    uint8_t sig[8];
    if (std::fread(sig, 1, 8, fc.f) != 8 || png_sig_cmp(sig, 0, 8) != 0)
        throw FormatError("'" + path + "' is not a PNG file");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("libpng: read struct allocation failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("libpng: info struct allocation failed");
    }

    RawPng out;
    std::vector<png_bytep> rows;

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError("libpng: failed reading '" + path + "'");
    }

    png_init_io(png, fc.f);
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    out.color_type = png_get_color_type(png, info);
    int depth = png_get_bit_depth(png, info);
    if (out.color_type == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (out.color_type == PNG_COLOR_TYPE_PALETTE && depth < 8) png_set_packing(png);
    if ((out.color_type & PNG_COLOR_MASK_ALPHA) != 0) png_set_strip_alpha(png);

    png_read_update_info(png, info);
    out.width = int(png_get_image_width(png, info));
    out.height = int(png_get_image_height(png, info));
    out.bit_depth = png_get_bit_depth(png, info);
    out.channels = png_get_channels(png, info);

    size_t stride = png_get_rowbytes(png, info);
    out.bytes.resize(stride * size_t(out.height));
    rows.resize(size_t(out.height));
    for (int y = 0; y < out.height; ++y) rows[size_t(y)] = out.bytes.data() + size_t(y) * stride;
    png_read_image(png, rows.data());

    if (out.color_type == PNG_COLOR_TYPE_PALETTE) {
        png_colorp plte = nullptr;
        int n = 0;
        if (png_get_PLTE(png, info, &plte, &n) == PNG_INFO_PLTE) {
            for (int i = 0; i < n; ++i)
                out.palette.push_back({plte[i].red, plte[i].green, plte[i].blue});
        }
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return out;
}

} // namespace

void write_rgb_png(const LatentImage& img, const std::string& path) {
    if (img.channels != 3) throw ParameterError("write_rgb_png: expected a 3-channel image");
    std::vector<uint8_t> bytes(size_t(img.height) * size_t(img.width) * 3);
    size_t p = 0;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c) bytes[p++] = quantize8(img.at(c, y, x), -1.0, 1.0);
    write_png_impl(path, img.width, img.height, PNG_COLOR_TYPE_RGB, 8, 3, bytes, nullptr, 0);
}

LatentImage read_rgb_png(const std::string& path) {
    RawPng raw = read_png_impl(path);
    if (raw.color_type == PNG_COLOR_TYPE_PALETTE || raw.channels != 3 || raw.bit_depth != 8)
        throw FormatError("read_rgb_png: '" + path + "' is not an 8-bit RGB PNG");
    LatentImage img(3, raw.height, raw.width);
    size_t p = 0;
    for (int y = 0; y < raw.height; ++y)
        for (int x = 0; x < raw.width; ++x)
            for (int c = 0; c < 3; ++c) img.at(c, y, x) = double(raw.bytes[p++]) / 127.5 - 1.0;
    return img;
}

void write_mask_png(const EditMask& mask, const std::string& path) {
    std::vector<uint8_t> bytes(size_t(mask.height) * size_t(mask.width));
    for (size_t i = 0; i < mask.data.size(); ++i) bytes[i] = mask.data[i] != 0 ? 255 : 0;
    write_png_impl(path, mask.width, mask.height, PNG_COLOR_TYPE_GRAY, 8, 1, bytes, nullptr, 0);
}

EditMask read_mask_png(const std::string& path) {
    RawPng raw = read_png_impl(path);
    if (raw.color_type != PNG_COLOR_TYPE_GRAY || raw.bit_depth != 8)
        throw FormatError("read_mask_png: '" + path + "' is not an 8-bit grayscale PNG");
    EditMask mask(raw.height, raw.width);
    for (size_t i = 0; i < mask.data.size(); ++i) mask.data[i] = raw.bytes[i] >= 128 ? 1 : 0;
    return mask;
}

void write_gray_png(const LatentImage& channel, const std::string& path) {
    if (channel.channels != 1) throw ParameterError("write_gray_png: expected a 1-channel image");
    std::vector<uint8_t> bytes(size_t(channel.height) * size_t(channel.width));
    size_t p = 0;
    for (int y = 0; y < channel.height; ++y)
        for (int x = 0; x < channel.width; ++x) bytes[p++] = quantize8(channel.at(0, y, x), 0.0, 1.0);
    write_png_impl(path, channel.width, channel.height, PNG_COLOR_TYPE_GRAY, 8, 1, bytes, nullptr,
                   0);
}

LatentImage read_gray_png(const std::string& path) {
    RawPng raw = read_png_impl(path);
    if (raw.color_type != PNG_COLOR_TYPE_GRAY || raw.bit_depth != 8)
        throw FormatError("read_gray_png: '" + path + "' is not an 8-bit grayscale PNG");
    LatentImage img(1, raw.height, raw.width);
    size_t p = 0;
    for (int y = 0; y < raw.height; ++y)
        for (int x = 0; x < raw.width; ++x) img.at(0, y, x) = double(raw.bytes[p++]) / 255.0;
    return img;
}

void write_attention_png(const AttentionMap& map, const std::string& png_path,
                         const std::string& json_path) {
    if (map.height <= 0 || map.width <= 0)
        throw ParameterError("write_attention_png: empty attention map");
    double lo = map.data[0];
    double hi = map.data[0];
    for (double v : map.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    double span = hi - lo;
    std::vector<uint8_t> bytes(map.data.size() * 2);
    for (size_t i = 0; i < map.data.size(); ++i) {
        uint16_t q = 0;
        if (span > 0.0) {
            double t = (map.data[i] - lo) / span;
            q = uint16_t(std::lround(std::min(std::max(t, 0.0), 1.0) * 65535.0));
        }
        bytes[2 * i] = uint8_t(q >> 8);
        bytes[2 * i + 1] = uint8_t(q & 0xff);
    }
    write_png_impl(png_path, map.width, map.height, PNG_COLOR_TYPE_GRAY, 16, 1, bytes, nullptr, 0);
    nlohmann::json side{{"format", "attention-map"},
                        {"version", 1},
                        {"height", map.height},
                        {"width", map.width},
                        {"min", lo},
                        {"max", hi}};
    write_text_file(json_path, side.dump(2) + "\n");
}

AttentionMap read_attention_png(const std::string& png_path, const std::string& json_path) {
    nlohmann::json side;
    try {
        side = nlohmann::json::parse(read_text_file(json_path));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("read_attention_png: bad sidecar '" + json_path + "': " + e.what());
    }
    if (side.value("format", "") != "attention-map")
        throw FormatError("read_attention_png: '" + json_path + "' is not an attention sidecar");
    double lo = side.at("min").get<double>();
    double hi = side.at("max").get<double>();

    RawPng raw = read_png_impl(png_path);
    if (raw.color_type != PNG_COLOR_TYPE_GRAY || raw.bit_depth != 16)
        throw FormatError("read_attention_png: '" + png_path +
                          "' is not a 16-bit grayscale PNG");
    if (raw.height != side.at("height").get<int>() || raw.width != side.at("width").get<int>())
        throw FormatError("read_attention_png: sidecar and PNG resolution differ");

    AttentionMap map(raw.height, raw.width);
    double span = hi - lo;
    for (size_t i = 0; i < map.data.size(); ++i) {
        uint16_t q = uint16_t((uint16_t(raw.bytes[2 * i]) << 8) | raw.bytes[2 * i + 1]);
        map.data[i] = lo + (span > 0.0 ? double(q) / 65535.0 * span : 0.0);
    }
    return map;
}

namespace {

// Display palette for part masks: background plus one color per part.
constexpr std::array<std::array<uint8_t, 3>, 7> kPartPalette = {{
    {217, 217, 217}, // background
    {240, 200, 160}, // head
    {220, 80, 80},   // torso
    {90, 200, 90},   // left arm
    {80, 120, 220},  // right arm
    {230, 220, 90},  // left leg
    {170, 90, 200},  // right leg
}};

} // namespace

void write_parts_png(const std::vector<EditMask>& parts, const std::string& path) {
    if (parts.empty()) throw ParameterError("write_parts_png: no part masks given");
    if (parts.size() + 1 > kPartPalette.size())
        throw ParameterError("write_parts_png: more parts than palette entries");
    int h = parts[0].height;
    int w = parts[0].width;
    for (const auto& p : parts)
        if (p.height != h || p.width != w)
            throw ParameterError("write_parts_png: part masks differ in resolution");

    std::vector<uint8_t> bytes(size_t(h) * size_t(w), 0);
    for (size_t k = 0; k < parts.size(); ++k) {
        for (size_t i = 0; i < bytes.size(); ++i) {
            if (parts[k].data[i] == 0) continue;
            if (bytes[i] != 0)
                throw ParameterError("write_parts_png: part masks overlap");
            bytes[i] = uint8_t(k + 1);
        }
    }

    std::array<png_color, 7> palette;
    int n = int(parts.size()) + 1;
    for (int i = 0; i < n; ++i) {
        palette[size_t(i)].red = kPartPalette[size_t(i)][0];
        palette[size_t(i)].green = kPartPalette[size_t(i)][1];
        palette[size_t(i)].blue = kPartPalette[size_t(i)][2];
    }
    write_png_impl(path, w, h, PNG_COLOR_TYPE_PALETTE, 8, 1, bytes, palette.data(), n);
}

std::vector<EditMask> read_parts_png(const std::string& path, int expected_parts) {
    RawPng raw = read_png_impl(path);
    if (raw.color_type != PNG_COLOR_TYPE_PALETTE || raw.bit_depth != 8)
        throw FormatError("read_parts_png: '" + path + "' is not an 8-bit palette PNG");
    int n_parts = int(raw.palette.size()) - 1;
    if (n_parts < 1)
        throw FormatError("read_parts_png: '" + path + "' has no part palette entries");
    if (expected_parts >= 0 && n_parts != expected_parts)
        throw FormatError("read_parts_png: expected " + std::to_string(expected_parts) +
                          " parts, found " + std::to_string(n_parts));

    std::vector<EditMask> parts(size_t(n_parts), EditMask(raw.height, raw.width));
    for (size_t i = 0; i < raw.bytes.size(); ++i) {
        uint8_t idx = raw.bytes[i];
        if (idx == 0) continue;
        if (int(idx) > n_parts)
            throw FormatError("read_parts_png: pixel index outside the palette");
        parts[size_t(idx - 1)].data[i] = 1;
    }
    return parts;
}

} // namespace madiff::io
