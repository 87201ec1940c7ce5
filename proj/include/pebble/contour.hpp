#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "pebble/error.hpp"
#include "pebble/geometry.hpp"
#include "pebble/image.hpp"
#include "pebble/slic.hpp"

namespace pebble {

// Closed polyline; point k connects to (k+1) mod K. Points live at pixel
// centers ((px + 0.5, py + 0.5) for a traced pixel). Orientation is
// normalized to counter-clockwise as seen on screen, which with y pointing
// down means a negative shoelace signed area.
struct Contour {
    std::vector<Vec2> points;

    size_t size() const { return points.size(); }
};

inline double signedArea(const Contour& c) {
    double acc = 0.0;
    size_t k = c.points.size();
    for (size_t i = 0; i < k; ++i) {
        const Vec2& p = c.points[i];
        const Vec2& q = c.points[(i + 1) % k];
        acc += p.x * q.y - q.x * p.y;
    }
    return 0.5 * acc;
}

inline double perimeter(const Contour& c) {
    double acc = 0.0;
    size_t k = c.points.size();
    for (size_t i = 0; i < k; ++i) acc += (c.points[(i + 1) % k] - c.points[i]).norm();
    return acc;
}

// Complex Fourier coefficients of a closed contour, stored in standard DFT
// bin order; bin j holds signed frequency j <= (K-1)/2 ? j : j - K. The
// forward transform carries the 1/K factor, so coefficient 0 is the centroid.
struct FourierDescriptor {
    std::vector<std::complex<double>> coeffs;
    int K = 0;  // original sample count

    int freqOf(int bin) const { return bin <= (K - 1) / 2 ? bin : bin - K; }
};

/// Moore boundary trace of a label's region (outer boundary only; interior
/// holes are ignored). The region must be 4-connected and large enough to
/// yield at least 3 boundary samples.
inline Contour traceBoundary(const LabelMap& labels, int32_t id) {
    int w = labels.width();
    int h = labels.height();

    // Start pixel: first in row-major order.
    int sx = -1, sy = -1;
    for (int y = 0; y < h && sy < 0; ++y)
        for (int x = 0; x < w; ++x)
            if (labels.at(x, y) == id) {
                sx = x;
                sy = y;
                break;
            }
    if (sy < 0) throw ShapeError(ShapeError::Kind::EmptyRegion, "label has no pixels");

    auto isRegion = [&](int x, int y) {
        return x >= 0 && x < w && y >= 0 && y < h && labels.at(x, y) == id;
    };

    // 8-neighborhood in clockwise order starting east (y grows downward).
    const int nbx[8] = {1, 1, 0, -1, -1, -1, 0, 1};
    const int nby[8] = {0, 1, 1, 1, 0, -1, -1, -1};

    std::vector<Vec2> points;
    int cx = sx, cy = sy;
    // Backtrack starts one step west of the start pixel (scan order guarantees
    // it lies outside the region).
    int backDir = 4;
    int startDir = -1;
    size_t guard = static_cast<size_t>(w) * h * 8 + 16;
    do {
        points.emplace_back(cx + 0.5, cy + 0.5);
        int from = (backDir + 1) % 8;  // first candidate clockwise from the backtrack
        int found = -1;
        for (int i = 0; i < 8; ++i) {
            int dir = (from + i) % 8;
            if (isRegion(cx + nbx[dir], cy + nby[dir])) {
                found = dir;
                break;
            }
        }
        if (found < 0) break;  // isolated pixel
        if (cx == sx && cy == sy) {
            if (startDir < 0)
                startDir = found;
            else if (found == startDir)
                break;  // Jacob's stopping criterion
        }
        cx += nbx[found];
        cy += nby[found];
        backDir = (found + 4) % 8;
        if (points.size() > guard)
            throw ShapeError(ShapeError::Kind::EmptyRegion, "boundary trace did not close");
    } while (cx != sx || cy != sy || points.size() < 2);

    if (points.size() < 3)
        throw ShapeError(ShapeError::Kind::RegionTooSmall,
                         "region yields fewer than 3 boundary samples");

    Contour contour{std::move(points)};
    if (signedArea(contour) > 0.0)
        std::reverse(contour.points.begin(), contour.points.end());
    return contour;
}

/// Resamples a closed contour to `count` points uniformly spaced by
/// arclength, so the low-pass cutoff L means the same thing for every
/// pebble regardless of its traced perimeter.
inline Contour resampleUniform(const Contour& c, int count) {
    size_t k = c.points.size();
    std::vector<double> cumulative(k + 1, 0.0);
    for (size_t i = 0; i < k; ++i)
        cumulative[i + 1] = cumulative[i] + (c.points[(i + 1) % k] - c.points[i]).norm();
    double total = cumulative[k];
    if (total <= 0.0)
        throw ShapeError(ShapeError::Kind::ZeroArea, "contour has zero length");

    Contour out;
    out.points.reserve(count);
    size_t seg = 0;
    for (int i = 0; i < count; ++i) {
        double target = total * i / count;
        while (seg + 1 < k + 1 && cumulative[seg + 1] < target) ++seg;
        double span = cumulative[seg + 1] - cumulative[seg];
        double t = span > 0.0 ? (target - cumulative[seg]) / span : 0.0;
        const Vec2& p = c.points[seg % k];
        const Vec2& q = c.points[(seg + 1) % k];
        out.points.push_back(p + (q - p) * t);
    }
    return out;
}

/// Discrete Fourier transform of the contour encoded as x + i*y.
inline FourierDescriptor toDescriptor(const Contour& c) {
    int K = static_cast<int>(c.points.size());
    FourierDescriptor d;
    d.K = K;
    d.coeffs.assign(K, {0.0, 0.0});
    for (int n = 0; n < K; ++n) {
        std::complex<double> acc{0.0, 0.0};
        for (int k = 0; k < K; ++k) {
            double angle = -2.0 * std::numbers::pi * (static_cast<double>(n) * k) / K;
            std::complex<double> z{c.points[k].x, c.points[k].y};
            acc += z * std::complex<double>{std::cos(angle), std::sin(angle)};
        }
        d.coeffs[n] = acc / static_cast<double>(K);
    }
    return d;
}

/// Low-pass filter: keeps the DC term plus (L-1)/2 conjugate frequency
/// pairs, zeroing every |n| > (L-1)/2. L must be odd.
inline FourierDescriptor smooth(const FourierDescriptor& d, int L) {
    if (L % 2 == 0)
        throw ShapeError(ShapeError::Kind::DegenerateDescriptor,
                         "L must be odd (DC plus conjugate pairs)");
    int keep = (std::min(L, d.K) - 1) / 2;
    FourierDescriptor out = d;
    for (int bin = 0; bin < d.K; ++bin)
        if (std::abs(d.freqOf(bin)) > keep) out.coeffs[bin] = {0.0, 0.0};
    return out;
}

/// Evaluates the (possibly truncated) Fourier series at `samples` uniform
/// parameter values, all coefficients multiplied by `scale`.
inline Contour reconstruct(const FourierDescriptor& d, double scale, int samples) {
    // Only the surviving coefficients contribute; after smoothing this is
    // O(samples * L) rather than O(samples * K).
    std::vector<std::pair<int, std::complex<double>>> active;
    for (int bin = 0; bin < d.K; ++bin)
        if (d.coeffs[bin] != std::complex<double>{0.0, 0.0})
            active.emplace_back(d.freqOf(bin), d.coeffs[bin] * scale);

    Contour out;
    out.points.reserve(samples);
    for (int s = 0; s < samples; ++s) {
        double t = static_cast<double>(s) / samples;
        std::complex<double> z{0.0, 0.0};
        for (const auto& [n, a] : active) {
            double angle = 2.0 * std::numbers::pi * n * t;
            z += a * std::complex<double>{std::cos(angle), std::sin(angle)};
        }
        out.points.emplace_back(z.real(), z.imag());
    }
    return out;
}

/// Inward unit normals at `samples` uniform parameter values: the Fourier
/// derivative gives tangents, rotated 90 degrees with the sign fixed so
/// normals point toward the interior reference point on average.
inline std::vector<Vec2> boundaryNormals(const FourierDescriptor& d, double scale, int samples,
                                         Vec2 interiorPoint) {
    double firstHarmonic = 0.0;
    for (int bin = 0; bin < d.K; ++bin)
        if (std::abs(d.freqOf(bin)) == 1) firstHarmonic += std::abs(d.coeffs[bin]);
    if (firstHarmonic <= 0.0)
        throw ShapeError(ShapeError::Kind::DegenerateDescriptor, "no first-harmonic energy");

    std::vector<std::pair<int, std::complex<double>>> active;
    double magnitude = 0.0;
    for (int bin = 0; bin < d.K; ++bin) {
        if (d.coeffs[bin] == std::complex<double>{0.0, 0.0}) continue;
        int n = d.freqOf(bin);
        // d/dk of a_n exp(2*pi*i*n*k/K) — the 2*pi/K factor cancels in the
        // normalization but keeps magnitudes meaningful for the zero check.
        std::complex<double> c =
            d.coeffs[bin] * scale * std::complex<double>{0.0, 2.0 * std::numbers::pi * n / d.K};
        active.emplace_back(n, c);
        magnitude += std::abs(c);
    }

    Contour pts = reconstruct(d, scale, samples);
    std::vector<Vec2> normals(samples);
    double inwardVote = 0.0;
    for (int s = 0; s < samples; ++s) {
        double t = static_cast<double>(s) / samples;
        std::complex<double> z{0.0, 0.0};
        for (const auto& [n, a] : active) {
            double angle = 2.0 * std::numbers::pi * n * t;
            z += a * std::complex<double>{std::cos(angle), std::sin(angle)};
        }
        Vec2 tangent{z.real(), z.imag()};
        if (tangent.norm() < 1e-12 * std::max(1.0, magnitude))
            throw ShapeError(ShapeError::Kind::DegenerateDescriptor,
                             "zero-length tangent on contour");
        Vec2 normal = perp(tangent).normalized();
        normals[s] = normal;
        inwardVote += normal.dot(interiorPoint - pts.points[s]);
    }
    if (inwardVote < 0.0)
        for (Vec2& n : normals) n = n * -1.0;
    return normals;
}

/// Scanline even-odd polygon fill at pixel centers; the contour is clipped
/// to the canvas. Throws if no pixel center falls inside.
inline Mask rasterizeFill(const Contour& c, int width, int height) {
    Mask mask(width, height, 0);
    size_t k = c.points.size();
    if (k < 3) throw ShapeError(ShapeError::Kind::ZeroArea, "contour has fewer than 3 points");

    double yLo = c.points[0].y, yHi = c.points[0].y;
    for (const Vec2& p : c.points) {
        yLo = std::min(yLo, p.y);
        yHi = std::max(yHi, p.y);
    }
    int y0 = std::max(0, static_cast<int>(std::floor(yLo - 0.5)));
    int y1 = std::min(height - 1, static_cast<int>(std::ceil(yHi)));

    size_t filled = 0;
    std::vector<double> xs;
    for (int y = y0; y <= y1; ++y) {
        double Y = y + 0.5;
        xs.clear();
        for (size_t i = 0; i < k; ++i) {
            const Vec2& p = c.points[i];
            const Vec2& q = c.points[(i + 1) % k];
            // Half-open span rule keeps vertex hits unambiguous.
            if ((p.y <= Y && q.y > Y) || (q.y <= Y && p.y > Y))
                xs.push_back(p.x + (Y - p.y) / (q.y - p.y) * (q.x - p.x));
        }
        std::sort(xs.begin(), xs.end());
        for (size_t i = 0; i + 1 < xs.size(); i += 2) {
            int xa = std::max(0, static_cast<int>(std::ceil(xs[i] - 0.5)));
            int xb = std::min(width - 1, static_cast<int>(std::ceil(xs[i + 1] - 0.5)) - 1);
            for (int x = xa; x <= xb; ++x) {
                mask.at(x, y) = 1;
                ++filled;
            }
        }
    }
    if (filled == 0) throw ShapeError(ShapeError::Kind::ZeroArea, "contour rasterizes to nothing");
    return mask;
}

// A pebble ready for geometry synthesis: smoothed outer contour in canvas
// coordinates, its filled mask stored as a patch, and inward boundary
// normals at the contour samples.
struct PebbleShape {
    int32_t id = 0;
    Contour outer;
    BBox bbox;   // patch placement on the canvas
    Mask mask;   // patch-local, dims = bbox size
    std::vector<Vec2> normals;
    Rgb avgColor;
};

namespace detail {

// Keeps only the largest 4-connected component of a patch mask.
inline void keepLargestComponent(Mask& mask) {
    int w = mask.width();
    int h = mask.height();
    std::vector<int32_t> comp(static_cast<size_t>(w) * h, -1);
    std::vector<int32_t> stack;
    int32_t nComp = 0;
    size_t bestSize = 0;
    int32_t bestComp = -1;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (!mask.at(x, y) || comp[static_cast<size_t>(y) * w + x] >= 0) continue;
            int32_t id = nComp++;
            size_t size = 0;
            stack.assign(1, y * w + x);
            comp[static_cast<size_t>(y) * w + x] = id;
            while (!stack.empty()) {
                int32_t cur = stack.back();
                stack.pop_back();
                ++size;
                int cx = cur % w, cy = cur / w;
                const int dx[4] = {1, -1, 0, 0};
                const int dy[4] = {0, 0, 1, -1};
                for (int i = 0; i < 4; ++i) {
                    int nx = cx + dx[i], ny = cy + dy[i];
                    if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
                    if (!mask.at(nx, ny) || comp[static_cast<size_t>(ny) * w + nx] >= 0) continue;
                    comp[static_cast<size_t>(ny) * w + nx] = id;
                    stack.push_back(ny * w + nx);
                }
            }
            if (size > bestSize) {
                bestSize = size;
                bestComp = id;
            }
        }
    if (nComp <= 1) return;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (mask.at(x, y) && comp[static_cast<size_t>(y) * w + x] != bestComp)
                mask.at(x, y) = 0;
}

}  // namespace detail

/// Rasterizes a smoothed contour into a patch mask clipped to the canvas;
/// the mask is reduced to its largest 4-connected component.
inline PebbleShape rasterizePatch(int32_t id, const Contour& outer, int canvasW, int canvasH) {
    double xLo = outer.points[0].x, xHi = xLo, yLo = outer.points[0].y, yHi = yLo;
    for (const Vec2& p : outer.points) {
        xLo = std::min(xLo, p.x);
        xHi = std::max(xHi, p.x);
        yLo = std::min(yLo, p.y);
        yHi = std::max(yHi, p.y);
    }
    BBox box;
    box.x0 = std::max(0, static_cast<int>(std::floor(xLo)) - 1);
    box.y0 = std::max(0, static_cast<int>(std::floor(yLo)) - 1);
    box.x1 = std::min(canvasW, static_cast<int>(std::ceil(xHi)) + 2);
    box.y1 = std::min(canvasH, static_cast<int>(std::ceil(yHi)) + 2);
    if (box.empty()) throw ShapeError(ShapeError::Kind::ZeroArea, "contour outside canvas");

    Contour local = outer;
    for (Vec2& p : local.points) p = {p.x - box.x0, p.y - box.y0};
    PebbleShape shape;
    shape.id = id;
    shape.outer = outer;
    shape.bbox = box;
    shape.mask = rasterizeFill(local, box.width(), box.height());
    detail::keepLargestComponent(shape.mask);
    return shape;
}

}  // namespace pebble
