#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "pebble/color.hpp"
#include "pebble/geometry.hpp"
#include "pebble/heightfield.hpp"
#include "pebble/image.hpp"
#include "pebble/parallel.hpp"
#include "pebble/rng.hpp"

namespace pebble {

struct LightingParams {
    Vec3 lightDir{-0.4, -0.4, 1.0};  // normalized on use; upper-left key light
    double ambient = 0.25;
    double diffuse = 0.65;
    double specular = 0.25;
    double shininess = 16.0;
    double heightScale = 12.0;  // pixels of elevation for a plateau of 1
    Rgb groutColor{0.15f, 0.15f, 0.15f};
};

// Rock texture with a deterministic per-pebble offset; the luminosity
// channel is normalized to mean 1 so the multiply blend preserves brightness.
class TextureSource {
public:
    TextureSource(RasterImage image, uint64_t seed) : image_(std::move(image)), seed_(seed) {
        double sum = 0.0;
        for (const Rgb& c : image_.data()) sum += linearLuminance(c);
        meanLuminance_ = image_.data().empty() ? 1.0 : sum / image_.data().size();
        if (meanLuminance_ <= 0.0) meanLuminance_ = 1.0;
    }

    const RasterImage& image() const { return image_; }

    std::pair<int, int> offsetFor(int32_t pebbleId) const {
        Substream rng(seed_, RngStream::TextureOffset, static_cast<uint64_t>(pebbleId));
        int ox = static_cast<int>(rng.next() % static_cast<uint64_t>(image_.width()));
        int oy = static_cast<int>(rng.next() % static_cast<uint64_t>(image_.height()));
        return {ox, oy};
    }

    // Mean-1 luminosity at a canvas pixel under wrap-around addressing.
    double luminanceAt(int x, int y, std::pair<int, int> offset) const {
        int tx = (x + offset.first) % image_.width();
        int ty = (y + offset.second) % image_.height();
        return linearLuminance(image_.at(tx, ty)) / meanLuminance_;
    }

private:
    RasterImage image_;
    uint64_t seed_;
    double meanLuminance_ = 1.0;
};

/// Surface normals of the heightfield: central differences scaled by
/// heightScale, clamp-to-edge borders.
inline std::vector<Vec3> computeNormals(const ScalarField& h, double heightScale,
                                        int threads = 1) {
    int w = h.width();
    int hh = h.height();
    std::vector<Vec3> normals(static_cast<size_t>(w) * hh);
    parallelChunks(hh, 64, threads, [&](int y0, int y1) {
        for (int y = y0; y < y1; ++y)
            for (int x = 0; x < w; ++x) {
                int xm = std::max(0, x - 1), xp = std::min(w - 1, x + 1);
                int ym = std::max(0, y - 1), yp = std::min(hh - 1, y + 1);
                double gx = (h.at(xp, y) - h.at(xm, y)) / (xp - xm);
                double gy = (h.at(x, yp) - h.at(x, ym)) / (yp - ym);
                normals[static_cast<size_t>(y) * w + x] =
                    Vec3{-heightScale * gx, -heightScale * gy, 1.0}.normalized();
            }
    });
    return normals;
}

/// Mean linear RGB of the source image under one pebble. The source is
/// sampled at canvas scale with nearest-pixel lookup.
inline Rgb pebbleBaseColor(const RasterImage& src, const HeightField& field, int32_t id,
                           double scale) {
    double r = 0.0, g = 0.0, b = 0.0;
    int64_t count = 0;
    for (int y = 0; y < field.height(); ++y)
        for (int x = 0; x < field.width(); ++x) {
            if (field.ownerAt(x, y) != id) continue;
            int sx = std::clamp(static_cast<int>((x + 0.5) / scale), 0, src.width() - 1);
            int sy = std::clamp(static_cast<int>((y + 0.5) / scale), 0, src.height() - 1);
            const Rgb& c = src.at(sx, sy);
            r += c.r;
            g += c.g;
            b += c.b;
            ++count;
        }
    if (count == 0) return {};
    return {static_cast<float>(r / count), static_cast<float>(g / count),
            static_cast<float>(b / count)};
}

/// Base colors for all pebbles in one pass over the canvas.
inline std::vector<Rgb> pebbleBaseColors(const RasterImage& src, const HeightField& field,
                                         int32_t idCount, double scale) {
    std::vector<double> r(idCount, 0.0), g(idCount, 0.0), b(idCount, 0.0);
    std::vector<int64_t> count(idCount, 0);
    for (int y = 0; y < field.height(); ++y)
        for (int x = 0; x < field.width(); ++x) {
            int32_t id = field.ownerAt(x, y);
            if (id < 0 || id >= idCount) continue;
            int sx = std::clamp(static_cast<int>((x + 0.5) / scale), 0, src.width() - 1);
            int sy = std::clamp(static_cast<int>((y + 0.5) / scale), 0, src.height() - 1);
            const Rgb& c = src.at(sx, sy);
            r[id] += c.r;
            g[id] += c.g;
            b[id] += c.b;
            ++count[id];
        }
    std::vector<Rgb> colors(idCount);
    for (int32_t i = 0; i < idCount; ++i)
        if (count[i] > 0)
            colors[i] = {static_cast<float>(r[i] / count[i]), static_cast<float>(g[i] / count[i]),
                         static_cast<float>(b[i] / count[i])};
    return colors;
}

/// Multiply blend of the pebble base color with the texture's mean-1
/// luminosity at this pixel.
inline Rgb applyTexture(const Rgb& base, const TextureSource& tex, int32_t id, int x, int y) {
    double lum = tex.luminanceAt(x, y, tex.offsetFor(id));
    return {static_cast<float>(base.r * lum), static_cast<float>(base.g * lum),
            static_cast<float>(base.b * lum)};
}

/// Phong-shades the composite heightfield. Unowned pixels get the grout
/// color bit-exactly; owned pixels combine the (optionally textured) pebble
/// albedo with ambient, diffuse, and specular terms, clamped to [0,1].
inline RasterImage shade(const HeightField& field, const std::vector<Vec3>& normals,
                         const std::vector<Rgb>& colors, const LightingParams& params,
                         const TextureSource* texture = nullptr, int threads = 1) {
    int w = field.width();
    int h = field.height();
    RasterImage out(w, h);
    Vec3 light = params.lightDir.normalized();
    const Vec3 view{0.0, 0.0, 1.0};

    // Texture offsets are per pebble; resolve them once.
    std::vector<std::pair<int, int>> offsets;
    if (texture) {
        offsets.resize(colors.size());
        for (size_t i = 0; i < colors.size(); ++i)
            offsets[i] = texture->offsetFor(static_cast<int32_t>(i));
    }

    parallelChunks(h, 64, threads, [&](int y0, int y1) {
        for (int y = y0; y < y1; ++y)
            for (int x = 0; x < w; ++x) {
                int32_t id = field.ownerAt(x, y);
                if (id < 0) {
                    out.at(x, y) = params.groutColor;
                    continue;
                }
                Rgb albedo = id < static_cast<int32_t>(colors.size()) ? colors[id] : Rgb{};
                if (texture) {
                    double lum = texture->luminanceAt(x, y, offsets[id]);
                    albedo = {static_cast<float>(albedo.r * lum),
                              static_cast<float>(albedo.g * lum),
                              static_cast<float>(albedo.b * lum)};
                }
                const Vec3& n = normals[static_cast<size_t>(y) * w + x];
                double ndl = std::max(0.0, n.dot(light));
                Vec3 reflect = n * (2.0 * n.dot(light)) - light;
                double rdv = std::max(0.0, reflect.dot(view));
                double spec = params.specular * std::pow(rdv, params.shininess);
                double shadeScale = params.ambient + params.diffuse * ndl;
                Rgb& px = out.at(x, y);
                px.r = static_cast<float>(std::clamp(albedo.r * shadeScale + spec, 0.0, 1.0));
                px.g = static_cast<float>(std::clamp(albedo.g * shadeScale + spec, 0.0, 1.0));
                px.b = static_cast<float>(std::clamp(albedo.b * shadeScale + spec, 0.0, 1.0));
            }
    });
    return out;
}

}  // namespace pebble
