#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <png.h>

#include "pebble/color.hpp"
#include "pebble/error.hpp"
#include "pebble/image.hpp"

namespace pebble {

namespace detail {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// libpng reports errors through longjmp; wrap each call site with setjmp.
struct PngReader {
    png_structp png = nullptr;
    png_infop info = nullptr;

    PngReader() {
        png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
        if (png) info = png_create_info_struct(png);
    }
    ~PngReader() { png_destroy_read_struct(&png, &info, nullptr); }
    PngReader(const PngReader&) = delete;
    PngReader& operator=(const PngReader&) = delete;
};

struct PngWriter {
    png_structp png = nullptr;
    png_infop info = nullptr;

    PngWriter() {
        png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
        if (png) info = png_create_info_struct(png);
    }
    ~PngWriter() { png_destroy_write_struct(&png, &info); }
    PngWriter(const PngWriter&) = delete;
    PngWriter& operator=(const PngWriter&) = delete;
};

inline RasterImage loadPng(const std::string& path) {
    FilePtr file(std::fopen(path.c_str(), "rb"));
    if (!file) throw IoError(IoError::Kind::MissingFile, "cannot open " + path);

    PngReader reader;
    if (!reader.png || !reader.info)
        throw IoError(IoError::Kind::CorruptData, "libpng init failed for " + path);

    std::vector<png_bytep> rowPtrs;
    std::vector<png_byte> pixels;
    int width = 0;
    int height = 0;

    if (setjmp(png_jmpbuf(reader.png)))
        throw IoError(IoError::Kind::CorruptData, "corrupt PNG data in " + path);

    png_init_io(reader.png, file.get());
    png_read_info(reader.png, reader.info);

    width = static_cast<int>(png_get_image_width(reader.png, reader.info));
    height = static_cast<int>(png_get_image_height(reader.png, reader.info));
    int bitDepth = png_get_bit_depth(reader.png, reader.info);
    int colorType = png_get_color_type(reader.png, reader.info);

    // Normalize every supported layout to 8-bit RGB.
    if (colorType == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(reader.png);
    if (colorType == PNG_COLOR_TYPE_GRAY && bitDepth < 8) png_set_expand_gray_1_2_4_to_8(reader.png);
    if (png_get_valid(reader.png, reader.info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(reader.png);
    if (bitDepth == 16) png_set_strip_16(reader.png);
    if (colorType == PNG_COLOR_TYPE_GRAY || colorType == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(reader.png);
    png_set_strip_alpha(reader.png);
    png_read_update_info(reader.png, reader.info);

    size_t rowBytes = png_get_rowbytes(reader.png, reader.info);
    if (rowBytes < static_cast<size_t>(width) * 3)
        throw IoError(IoError::Kind::UnsupportedFormat, "unsupported PNG layout in " + path);

    pixels.resize(rowBytes * height);
    rowPtrs.resize(height);
    for (int y = 0; y < height; ++y) rowPtrs[y] = pixels.data() + rowBytes * y;
    png_read_image(reader.png, rowPtrs.data());
    png_read_end(reader.png, nullptr);

    RasterImage img(width, height);
    for (int y = 0; y < height; ++y) {
        const png_byte* row = rowPtrs[y];
        for (int x = 0; x < width; ++x) {
            Rgb& out = img.at(x, y);
            out.r = static_cast<float>(srgbToLinear(row[3 * x + 0] / 255.0));
            out.g = static_cast<float>(srgbToLinear(row[3 * x + 1] / 255.0));
            out.b = static_cast<float>(srgbToLinear(row[3 * x + 2] / 255.0));
        }
    }
    return img;
}

// Binary PPM (P6), maxval 255.
inline RasterImage loadPpm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(IoError::Kind::MissingFile, "cannot open " + path);

    auto nextToken = [&]() -> std::string {
        std::string tok;
        int c;
        while ((c = in.get()) != EOF) {
            if (c == '#') {
                while ((c = in.get()) != EOF && c != '\n') {}
                continue;
            }
            if (std::isspace(c)) {
                if (!tok.empty()) break;
                continue;
            }
            tok.push_back(static_cast<char>(c));
        }
        return tok;
    };

    std::string magic = nextToken();
    if (magic != "P6") throw IoError(IoError::Kind::UnsupportedFormat, "not a P6 PPM: " + path);
    int width = 0, height = 0, maxval = 0;
    try {
        width = std::stoi(nextToken());
        height = std::stoi(nextToken());
        maxval = std::stoi(nextToken());
    } catch (const std::exception&) {
        throw IoError(IoError::Kind::CorruptData, "bad PPM header in " + path);
    }
    if (width < 1 || height < 1)
        throw IoError(IoError::Kind::CorruptData, "bad PPM dimensions in " + path);
    if (maxval != 255)
        throw IoError(IoError::Kind::UnsupportedFormat, "only maxval 255 PPM supported: " + path);

    std::vector<unsigned char> raw(static_cast<size_t>(width) * height * 3);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size()))
        throw IoError(IoError::Kind::CorruptData, "truncated PPM data in " + path);

    RasterImage img(width, height);
    for (size_t i = 0; i < img.data().size(); ++i) {
        Rgb& out = img.data()[i];
        out.r = static_cast<float>(srgbToLinear(raw[3 * i + 0] / 255.0));
        out.g = static_cast<float>(srgbToLinear(raw[3 * i + 1] / 255.0));
        out.b = static_cast<float>(srgbToLinear(raw[3 * i + 2] / 255.0));
    }
    return img;
}

}  // namespace detail

/// Loads a PNG or binary PPM image, sRGB-decoded to linear light in [0,1].
inline RasterImage loadImage(const std::string& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw IoError(IoError::Kind::MissingFile, "cannot open " + path);
    unsigned char magic[8] = {};
    probe.read(reinterpret_cast<char*>(magic), 8);
    std::streamsize got = probe.gcount();
    probe.close();

    static const unsigned char pngMagic[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
    if (got >= 8 && std::memcmp(magic, pngMagic, 8) == 0) return detail::loadPng(path);
    if (got >= 2 && magic[0] == 'P' && magic[1] == '6') return detail::loadPpm(path);
    throw IoError(IoError::Kind::UnsupportedFormat, "unrecognized image format: " + path);
}

/// Writes an 8-bit RGB PNG, linear light encoded to sRGB. Deterministic bytes.
inline void writeImage(const RasterImage& img, const std::string& path) {
    detail::FilePtr file(std::fopen(path.c_str(), "wb"));
    if (!file) throw IoError(IoError::Kind::WriteFailed, "cannot write " + path);

    detail::PngWriter writer;
    if (!writer.png || !writer.info)
        throw IoError(IoError::Kind::WriteFailed, "libpng init failed for " + path);

    std::vector<png_byte> row(static_cast<size_t>(img.width()) * 3);
    if (setjmp(png_jmpbuf(writer.png)))
        throw IoError(IoError::Kind::WriteFailed, "PNG encode failed for " + path);

    png_init_io(writer.png, file.get());
    png_set_compression_level(writer.png, 6);
    png_set_IHDR(writer.png, writer.info, img.width(), img.height(), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(writer.png, writer.info);

    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            const Rgb& c = img.at(x, y);
            row[3 * x + 0] = static_cast<png_byte>(std::lround(linearToSrgb(c.r) * 255.0));
            row[3 * x + 1] = static_cast<png_byte>(std::lround(linearToSrgb(c.g) * 255.0));
            row[3 * x + 2] = static_cast<png_byte>(std::lround(linearToSrgb(c.b) * 255.0));
        }
        png_write_row(writer.png, row.data());
    }
    png_write_end(writer.png, nullptr);
    if (std::fflush(file.get()) != 0)
        throw IoError(IoError::Kind::WriteFailed, "flush failed for " + path);
}

inline std::string heightfieldSidecarPath(const std::string& path) { return path + ".minmax.txt"; }

/// Writes a 16-bit grayscale PNG with heights linearly mapped from [min,max];
/// the range is recorded in a sidecar text file next to the image.
inline void exportHeightfield(const ScalarField& field, const std::string& path) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (double v : field.data()) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (field.data().empty()) lo = hi = 0.0;
    double range = hi - lo;

    detail::FilePtr file(std::fopen(path.c_str(), "wb"));
    if (!file) throw IoError(IoError::Kind::WriteFailed, "cannot write " + path);

    detail::PngWriter writer;
    if (!writer.png || !writer.info)
        throw IoError(IoError::Kind::WriteFailed, "libpng init failed for " + path);

    std::vector<png_byte> row(static_cast<size_t>(field.width()) * 2);
    if (setjmp(png_jmpbuf(writer.png)))
        throw IoError(IoError::Kind::WriteFailed, "PNG encode failed for " + path);

    png_init_io(writer.png, file.get());
    png_set_compression_level(writer.png, 6);
    png_set_IHDR(writer.png, writer.info, field.width(), field.height(), 16, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(writer.png, writer.info);

    for (int y = 0; y < field.height(); ++y) {
        for (int x = 0; x < field.width(); ++x) {
            double t = range > 0.0 ? (field.at(x, y) - lo) / range : 0.0;
            auto q = static_cast<uint16_t>(std::lround(std::clamp(t, 0.0, 1.0) * 65535.0));
            row[2 * x + 0] = static_cast<png_byte>(q >> 8);  // PNG is big-endian
            row[2 * x + 1] = static_cast<png_byte>(q & 0xff);
        }
        png_write_row(writer.png, row.data());
    }
    png_write_end(writer.png, nullptr);

    std::ofstream sidecar(heightfieldSidecarPath(path));
    if (!sidecar) throw IoError(IoError::Kind::WriteFailed, "cannot write sidecar for " + path);
    char buf[80];
    std::snprintf(buf, sizeof(buf), "%.17g %.17g\n", lo, hi);
    sidecar << buf;
    if (!sidecar) throw IoError(IoError::Kind::WriteFailed, "sidecar write failed for " + path);
}

/// Test helper: reads back a heightfield written by exportHeightfield.
inline ScalarField importHeightfield(const std::string& path) {
    detail::FilePtr file(std::fopen(path.c_str(), "rb"));
    if (!file) throw IoError(IoError::Kind::MissingFile, "cannot open " + path);

    detail::PngReader reader;
    if (!reader.png || !reader.info)
        throw IoError(IoError::Kind::CorruptData, "libpng init failed for " + path);

    std::vector<png_bytep> rowPtrs;
    std::vector<png_byte> pixels;
    if (setjmp(png_jmpbuf(reader.png)))
        throw IoError(IoError::Kind::CorruptData, "corrupt PNG data in " + path);

    png_init_io(reader.png, file.get());
    png_read_info(reader.png, reader.info);
    if (png_get_bit_depth(reader.png, reader.info) != 16 ||
        png_get_color_type(reader.png, reader.info) != PNG_COLOR_TYPE_GRAY)
        throw IoError(IoError::Kind::UnsupportedFormat, "not a 16-bit gray PNG: " + path);

    int width = static_cast<int>(png_get_image_width(reader.png, reader.info));
    int height = static_cast<int>(png_get_image_height(reader.png, reader.info));
    size_t rowBytes = png_get_rowbytes(reader.png, reader.info);
    pixels.resize(rowBytes * height);
    rowPtrs.resize(height);
    for (int y = 0; y < height; ++y) rowPtrs[y] = pixels.data() + rowBytes * y;
    png_read_image(reader.png, rowPtrs.data());
    png_read_end(reader.png, nullptr);

    double lo = 0.0, hi = 0.0;
    std::ifstream sidecar(heightfieldSidecarPath(path));
    if (!(sidecar >> lo >> hi))
        throw IoError(IoError::Kind::CorruptData, "bad sidecar for " + path);

    ScalarField field(width, height);
    for (int y = 0; y < height; ++y) {
        const png_byte* row = rowPtrs[y];
        for (int x = 0; x < width; ++x) {
            uint16_t q = static_cast<uint16_t>((row[2 * x] << 8) | row[2 * x + 1]);
            field.at(x, y) = lo + (hi - lo) * (q / 65535.0);
        }
    }
    return field;
}

}  // namespace pebble
