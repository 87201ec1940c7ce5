#pragma once

#include <algorithm>
#include <cmath>

#include "pebble/image.hpp"

namespace pebble {

// sRGB transfer curve (IEC 61966-2-1).
inline double srgbToLinear(double c) {
    return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

inline double linearToSrgb(double c) {
    c = std::clamp(c, 0.0, 1.0);
    return c <= 0.0031308 ? 12.92 * c : 1.055 * std::pow(c, 1.0 / 2.4) - 0.055;
}

// CIE Y of a linear-light RGB triple (Rec. 709 primaries).
inline double linearLuminance(const Rgb& c) {
    return 0.2126729 * c.r + 0.7151522 * c.g + 0.0721750 * c.b;
}

namespace detail {

// D65 reference white for the sRGB <-> XYZ matrices below.
constexpr double kWhiteX = 0.95047;
constexpr double kWhiteY = 1.0;
constexpr double kWhiteZ = 1.08883;

inline double labF(double t) {
    constexpr double d = 6.0 / 29.0;
    return t > d * d * d ? std::cbrt(t) : t / (3.0 * d * d) + 4.0 / 29.0;
}

inline double labFInv(double t) {
    constexpr double d = 6.0 / 29.0;
    return t > d ? t * t * t : 3.0 * d * d * (t - 4.0 / 29.0);
}

}  // namespace detail

inline Lab linearRgbToLab(const Rgb& c) {
    double X = 0.4124564 * c.r + 0.3575761 * c.g + 0.1804375 * c.b;
    double Y = 0.2126729 * c.r + 0.7151522 * c.g + 0.0721750 * c.b;
    double Z = 0.0193339 * c.r + 0.1191920 * c.g + 0.9503041 * c.b;
    double fx = detail::labF(X / detail::kWhiteX);
    double fy = detail::labF(Y / detail::kWhiteY);
    double fz = detail::labF(Z / detail::kWhiteZ);
    Lab out;
    out.L = static_cast<float>(116.0 * fy - 16.0);
    out.a = static_cast<float>(500.0 * (fx - fy));
    out.b = static_cast<float>(200.0 * (fy - fz));
    return out;
}

inline Rgb labToLinearRgb(const Lab& c) {
    double fy = (c.L + 16.0) / 116.0;
    double fx = fy + c.a / 500.0;
    double fz = fy - c.b / 200.0;
    double X = detail::kWhiteX * detail::labFInv(fx);
    double Y = detail::kWhiteY * detail::labFInv(fy);
    double Z = detail::kWhiteZ * detail::labFInv(fz);
    Rgb out;
    out.r = static_cast<float>(3.2404542 * X - 1.5371385 * Y - 0.4985314 * Z);
    out.g = static_cast<float>(-0.9692660 * X + 1.8760108 * Y + 0.0415560 * Z);
    out.b = static_cast<float>(0.0556434 * X - 0.2040259 * Y + 1.0572252 * Z);
    return out;
}

/// Converts a whole image to CIELAB (D65), dimensions preserved.
inline LabImage rgbToLab(const RasterImage& img) {
    LabImage out(img.width(), img.height());
    for (size_t i = 0; i < img.data().size(); ++i) out.data()[i] = linearRgbToLab(img.data()[i]);
    return out;
}

}  // namespace pebble
