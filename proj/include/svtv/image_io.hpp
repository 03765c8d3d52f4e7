#pragma once

#include "svtv/raster.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cctype>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace svtv {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline FilePtr open_file(const std::filesystem::path& path, const char* mode)
{
    FilePtr f(std::fopen(path.c_str(), mode));
    if (!f) throw IoError("cannot open '" + path.string() + "'");
    return f;
}

/// Clamp to [0,1] and scale to [0, max_value], rounding half away from zero.
inline std::uint32_t quantize(double x, std::uint32_t max_value)
{
    const double clamped = std::clamp(std::isnan(x) ? 0.0 : x, 0.0, 1.0);
    return static_cast<std::uint32_t>(std::round(clamped * max_value));
}

inline ImageGrid read_png(const std::filesystem::path& path)
{
    FilePtr f = open_file(path, "rb");
    unsigned char sig[8];
    if (std::fread(sig, 1, 8, f.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
        throw IoError("'" + path.string() + "' is not a PNG file");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("libpng initialisation failed");
    }
    std::vector<unsigned char> buffer;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("failed to decode PNG '" + path.string() + "'");
    }
    png_init_io(png, f.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    const png_uint_32 width = png_get_image_width(png, info);
    const png_uint_32 height = png_get_image_height(png, info);
    const int color = png_get_color_type(png, info);
    int depth = png_get_bit_depth(png, info);
    if (color != PNG_COLOR_TYPE_GRAY && color != PNG_COLOR_TYPE_GRAY_ALPHA) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("'" + path.string() + "' is not a grayscale PNG");
    }
    if (depth < 8) {
        png_set_expand_gray_1_2_4_to_8(png);
        depth = 8;
    }
    if (color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_strip_alpha(png);
    if (depth == 16 && std::endian::native == std::endian::little) png_set_swap(png);
    png_read_update_info(png, info);

    const std::size_t stride = png_get_rowbytes(png, info);
    buffer.resize(stride * height);
    rows.resize(height);
    for (png_uint_32 r = 0; r < height; ++r) rows[r] = buffer.data() + r * stride;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    ImageGrid img(height, width);
    const double scale = depth == 16 ? 65535.0 : 255.0;
    for (std::size_t r = 0; r < height; ++r)
        for (std::size_t c = 0; c < width; ++c) {
            double v;
            if (depth == 16) {
                std::uint16_t s;
                std::memcpy(&s, rows[r] + 2 * c, 2);
                v = s;
            } else {
                v = rows[r][c];
            }
            img(r, c) = v / scale;
        }
    return img;
}

inline void write_png(const std::filesystem::path& path, const ImageGrid& img, int bit_depth)
{
    if (bit_depth != 8 && bit_depth != 16) throw std::invalid_argument("write_png: bit depth must be 8 or 16");
    FilePtr f = open_file(path, "wb");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("libpng initialisation failed");
    }
    const std::size_t bytes = static_cast<std::size_t>(bit_depth / 8);
    std::vector<unsigned char> buffer(img.size() * bytes);
    const std::uint32_t max_value = bit_depth == 16 ? 65535u : 255u;
    for (std::size_t i = 0; i < img.size(); ++i) {
        const std::uint32_t q = quantize(img[i], max_value);
        if (bytes == 2) {
            buffer[2 * i] = static_cast<unsigned char>(q >> 8); // PNG is big-endian
            buffer[2 * i + 1] = static_cast<unsigned char>(q & 0xFF);
        } else {
            buffer[i] = static_cast<unsigned char>(q);
        }
    }
    std::vector<png_bytep> rows(img.height());
    for (std::size_t r = 0; r < img.height(); ++r) rows[r] = buffer.data() + r * img.width() * bytes;

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("failed to encode PNG '" + path.string() + "'");
    }
    png_init_io(png, f.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()), static_cast<png_uint_32>(img.height()), bit_depth,
                 PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

inline std::string next_pnm_token(std::istream& in)
{
    std::string tok;
    char ch;
    while (in.get(ch)) {
        if (ch == '#') {
            std::string comment;
            std::getline(in, comment);
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(ch))) {
            if (!tok.empty()) break;
            continue;
        }
        tok.push_back(ch);
    }
    return tok;
}

inline ImageGrid read_pgm(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    if (next_pnm_token(in) != "P5") throw IoError("'" + path.string() + "' is not a binary PGM");
    std::size_t width = 0, height = 0;
    unsigned long max_value = 0;
    try {
        width = std::stoul(next_pnm_token(in));
        height = std::stoul(next_pnm_token(in));
        max_value = std::stoul(next_pnm_token(in));
    } catch (const std::exception&) {
        throw IoError("malformed PGM header in '" + path.string() + "'");
    }
    if (width == 0 || height == 0 || max_value == 0 || max_value > 65535)
        throw IoError("unsupported PGM header in '" + path.string() + "'");

    const std::size_t bytes = max_value > 255 ? 2 : 1;
    std::vector<unsigned char> raw(width * height * bytes);
    if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size())))
        throw IoError("truncated PGM data in '" + path.string() + "'");
    ImageGrid img(height, width);
    for (std::size_t i = 0; i < img.size(); ++i) {
        const unsigned v = bytes == 2 ? (static_cast<unsigned>(raw[2 * i]) << 8) | raw[2 * i + 1] : raw[i];
        img[i] = static_cast<double>(v) / static_cast<double>(max_value);
    }
    return img;
}

inline void write_pgm(const std::filesystem::path& path, const ImageGrid& img, int bit_depth)
{
    if (bit_depth != 8 && bit_depth != 16) throw std::invalid_argument("write_pgm: bit depth must be 8 or 16");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    const std::uint32_t max_value = bit_depth == 16 ? 65535u : 255u;
    out << "P5\n" << img.width() << ' ' << img.height() << '\n' << max_value << '\n';
    std::vector<unsigned char> raw;
    raw.reserve(img.size() * (bit_depth / 8));
    for (double x : img.pixels()) {
        const std::uint32_t q = quantize(x, max_value);
        if (bit_depth == 16) raw.push_back(static_cast<unsigned char>(q >> 8));
        raw.push_back(static_cast<unsigned char>(q & 0xFF));
    }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

inline std::string lower_extension(const std::filesystem::path& path)
{
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
    return ext;
}

} // namespace detail

/// Grayscale PNG (8/16 bit) or binary PGM, normalized to [0,1].
inline ImageGrid read_image(const std::filesystem::path& path)
{
    const std::string ext = detail::lower_extension(path);
    if (ext == ".png") return detail::read_png(path);
    if (ext == ".pgm") return detail::read_pgm(path);
    throw IoError("unsupported image format '" + path.string() + "'");
}

/// Values are clamped to [0,1] for storage; this is the display path only.
inline void write_image(const std::filesystem::path& path, const ImageGrid& img, int bit_depth = 8)
{
    const std::string ext = detail::lower_extension(path);
    if (ext == ".png") return detail::write_png(path, img, bit_depth);
    if (ext == ".pgm") return detail::write_pgm(path, img, bit_depth);
    throw IoError("unsupported image format '" + path.string() + "'");
}

/// Linear rescale of [min,max] to [0,1] for visualizing unbounded rasters.
inline ImageGrid rescale_for_display(const ImageGrid& img)
{
    const auto [lo, hi] = std::minmax_element(img.pixels().begin(), img.pixels().end());
    ImageGrid out(img.height(), img.width());
    const double span = *hi - *lo;
    for (std::size_t i = 0; i < img.size(); ++i) out[i] = span > 0.0 ? (img[i] - *lo) / span : 0.0;
    return out;
}

inline ImageGrid mask_to_image(const Mask& mask)
{
    ImageGrid img(mask.height(), mask.width());
    for (std::size_t i = 0; i < mask.size(); ++i) img[i] = mask[i] ? 1.0 : 0.0;
    return img;
}

inline Mask image_to_mask(const ImageGrid& img)
{
    Mask mask(img.height(), img.width());
    for (std::size_t i = 0; i < img.size(); ++i) mask.set(i, img[i] >= 0.5);
    return mask;
}

// Raster file: ASCII line "GGMAP <d1> <d2> <field>\n" then d1*d2 little-endian
// IEEE-754 doubles, row-major. Parameter maps use field "p" or "alpha".

inline void write_raster(const std::filesystem::path& path, const ImageGrid& img, const std::string& field)
{
    if (field.empty() || field.find_first_of(" \t\n") != std::string::npos)
        throw std::invalid_argument("write_raster: field tag must be a single word");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << "GGMAP " << img.height() << ' ' << img.width() << ' ' << field << '\n';
    for (double x : img.pixels()) {
        auto bits = std::bit_cast<std::uint64_t>(x);
        if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
        out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
    }
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

struct RasterFile {
    ImageGrid raster;
    std::string field;
};

inline RasterFile read_raster(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::string header;
    if (!std::getline(in, header)) throw IoError("empty raster file '" + path.string() + "'");
    std::istringstream hs(header);
    std::string magic, field;
    std::size_t rows = 0, cols = 0;
    if (!(hs >> magic >> rows >> cols >> field) || magic != "GGMAP" || rows == 0 || cols == 0)
        throw IoError("malformed raster header in '" + path.string() + "'");
    std::vector<double> values(rows * cols);
    for (double& x : values) {
        std::uint64_t bits;
        if (!in.read(reinterpret_cast<char*>(&bits), sizeof bits))
            throw IoError("truncated raster data in '" + path.string() + "'");
        if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
        x = std::bit_cast<double>(bits);
    }
    return {ImageGrid(rows, cols, std::move(values)), field};
}

inline ImageGrid read_raster(const std::filesystem::path& path, const std::string& expected_field)
{
    RasterFile f = read_raster(path);
    if (f.field != expected_field)
        throw IoError("'" + path.string() + "' holds field '" + f.field + "', expected '" + expected_field + "'");
    return std::move(f.raster);
}

} // namespace svtv
