#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "pebble/geometry.hpp"
#include "pebble/image.hpp"
#include "pebble/parallel.hpp"

namespace pebble {

// Symmetric 2x2 matrix [[a, b], [b, c]]; positive semidefinite for any image.
struct StructureTensor {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
};

struct TensorEigen {
    double lambda1 = 0.0;  // lambda1 >= lambda2 >= 0
    double lambda2 = 0.0;
    Vec2 e1;  // parallel to the smoothed gradient
    Vec2 e2;  // perpendicular (edge tangent)
};

struct OrientedBasis {
    Vec2 b1{1.0, 0.0};
    Vec2 b2{0.0, 1.0};
    bool fromTensor = false;  // true when the coherence gate picked eigenvectors
};

class TensorField {
public:
    TensorField() = default;
    TensorField(int width, int height)
        : width_(width), height_(height), data_(static_cast<size_t>(width) * height) {}

    int width() const { return width_; }
    int height() const { return height_; }

    StructureTensor& at(int x, int y) { return data_[static_cast<size_t>(y) * width_ + x]; }
    const StructureTensor& at(int x, int y) const {
        return data_[static_cast<size_t>(y) * width_ + x];
    }

    // Bilinear sample at a continuous position (pixel centers at integers),
    // clamped to the field extent. Used to refresh cluster bases as centers move.
    StructureTensor sample(double x, double y) const {
        x = std::clamp(x, 0.0, static_cast<double>(width_ - 1));
        y = std::clamp(y, 0.0, static_cast<double>(height_ - 1));
        int x0 = std::min(static_cast<int>(x), width_ - 1);
        int y0 = std::min(static_cast<int>(y), height_ - 1);
        int x1 = std::min(x0 + 1, width_ - 1);
        int y1 = std::min(y0 + 1, height_ - 1);
        double fx = x - x0;
        double fy = y - y0;
        const StructureTensor& t00 = at(x0, y0);
        const StructureTensor& t10 = at(x1, y0);
        const StructureTensor& t01 = at(x0, y1);
        const StructureTensor& t11 = at(x1, y1);
        auto lerp2 = [&](double v00, double v10, double v01, double v11) {
            double top = v00 + (v10 - v00) * fx;
            double bot = v01 + (v11 - v01) * fx;
            return top + (bot - top) * fy;
        };
        return {lerp2(t00.a, t10.a, t01.a, t11.a), lerp2(t00.b, t10.b, t01.b, t11.b),
                lerp2(t00.c, t10.c, t01.c, t11.c)};
    }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<StructureTensor> data_;
};

namespace detail {

inline std::vector<double> gaussianKernel(double sigma) {
    int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
        k[i + radius] = v;
        sum += v;
    }
    for (double& v : k) v /= sum;
    return k;
}

// Derivative-of-Gaussian, normalized so a unit ramp maps to slope 1.
inline std::vector<double> gaussianDerivKernel(double sigma) {
    int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> k(2 * radius + 1);
    double norm = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        double v = -i * std::exp(-0.5 * (i * i) / (sigma * sigma));
        k[i + radius] = v;
        norm += -i * v;  // response of the kernel to f(x) = -x
    }
    for (double& v : k) v /= norm;
    return k;
}

// Separable convolution with clamp-to-edge borders, rows then columns.
inline void convolveSeparable(const std::vector<double>& src, int width, int height,
                              const std::vector<double>& kx, const std::vector<double>& ky,
                              std::vector<double>& dst, std::vector<double>& scratch,
                              int threads) {
    int rx = static_cast<int>(kx.size() / 2);
    int ry = static_cast<int>(ky.size() / 2);
    scratch.resize(src.size());
    dst.resize(src.size());
    parallelChunks(height, 64, threads, [&](int y0, int y1) {
        for (int y = y0; y < y1; ++y) {
            const double* row = src.data() + static_cast<size_t>(y) * width;
            double* out = scratch.data() + static_cast<size_t>(y) * width;
            for (int x = 0; x < width; ++x) {
                double acc = 0.0;
                for (int i = -rx; i <= rx; ++i) {
                    int xi = std::clamp(x + i, 0, width - 1);
                    acc += row[xi] * kx[i + rx];
                }
                out[x] = acc;
            }
        }
    });
    parallelChunks(height, 64, threads, [&](int y0, int y1) {
        for (int y = y0; y < y1; ++y) {
            double* out = dst.data() + static_cast<size_t>(y) * width;
            for (int x = 0; x < width; ++x) {
                double acc = 0.0;
                for (int i = -ry; i <= ry; ++i) {
                    int yi = std::clamp(y + i, 0, height - 1);
                    acc += scratch[static_cast<size_t>(yi) * width + x] * ky[i + ry];
                }
                out[x] = acc;
            }
        }
    });
}

}  // namespace detail

/// Per-pixel structure tensor: Gaussian(sigmaInt) * sum over channels of the
/// gradient outer product, gradients from Gaussian-derivative filters at
/// sigmaGrad. Channel sum is taken over linear RGB.
inline TensorField computeTensorField(const RasterImage& img, double sigmaGrad, double sigmaInt,
                                      int threads = 1) {
    int w = img.width();
    int h = img.height();
    size_t n = static_cast<size_t>(w) * h;

    std::vector<double> channel(n), gx(n), gy(n), scratch(n);
    std::vector<double> ta(n, 0.0), tb(n, 0.0), tc(n, 0.0);
    auto smoothK = detail::gaussianKernel(sigmaGrad);
    auto derivK = detail::gaussianDerivKernel(sigmaGrad);

    for (int ch = 0; ch < 3; ++ch) {
        for (size_t i = 0; i < n; ++i) {
            const Rgb& c = img.data()[i];
            channel[i] = ch == 0 ? c.r : ch == 1 ? c.g : c.b;
        }
        detail::convolveSeparable(channel, w, h, derivK, smoothK, gx, scratch, threads);
        detail::convolveSeparable(channel, w, h, smoothK, derivK, gy, scratch, threads);
        for (size_t i = 0; i < n; ++i) {
            ta[i] += gx[i] * gx[i];
            tb[i] += gx[i] * gy[i];
            tc[i] += gy[i] * gy[i];
        }
    }

    std::vector<double> sa, sb, sc;
    auto intK = detail::gaussianKernel(sigmaInt);
    detail::convolveSeparable(ta, w, h, intK, intK, sa, scratch, threads);
    detail::convolveSeparable(tb, w, h, intK, intK, sb, scratch, threads);
    detail::convolveSeparable(tc, w, h, intK, intK, sc, scratch, threads);

    TensorField field(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            size_t i = static_cast<size_t>(y) * w + x;
            // Smoothing of PSD matrices stays PSD up to rounding; clamp the
            // diagonal so downstream eigen math never sees a negative trace.
            field.at(x, y) = {std::max(0.0, sa[i]), sb[i], std::max(0.0, sc[i])};
        }
    return field;
}

/// Closed-form eigen-decomposition of a symmetric 2x2 tensor. Eigenvector
/// sign is normalized so e1.y >= 0 (e1.x >= 0 when e1.y == 0).
inline TensorEigen eigenDecompose(const StructureTensor& t) {
    double half = 0.5 * (t.a + t.c);
    double diff = 0.5 * (t.a - t.c);
    double disc = std::sqrt(diff * diff + t.b * t.b);
    TensorEigen out;
    out.lambda1 = half + disc;
    out.lambda2 = half - disc;

    Vec2 v;
    // Pick the numerically stronger column of (T - lambda2 I).
    Vec2 c1{t.a - out.lambda2, t.b};
    Vec2 c2{t.b, t.c - out.lambda2};
    v = c1.dot(c1) >= c2.dot(c2) ? c1 : c2;
    if (v.norm() == 0.0) v = {1.0, 0.0};  // isotropic tensor, any direction works
    v = v.normalized();
    if (v.y < 0.0 || (v.y == 0.0 && v.x < 0.0)) v = v * -1.0;
    out.e1 = v;
    out.e2 = perp(v);
    return out;
}

/// Orientation coherence in [0,1); K de-emphasizes weak tensors.
inline double coherence(double lambda1, double lambda2, double K) {
    return std::sqrt(std::max(0.0, lambda1 - lambda2) / (lambda1 + lambda2 + K));
}

/// Picks the eigenvector basis when coherence exceeds the threshold, the
/// default basis otherwise (strict inequality: C == Tcoh takes the default).
inline OrientedBasis selectBasis(const TensorEigen& eig, double C, double Tcoh, Vec2 defaultDir) {
    OrientedBasis basis;
    if (C > Tcoh) {
        basis.b1 = eig.e1;
        basis.b2 = eig.e2;
        basis.fromTensor = true;
    } else {
        basis.b1 = defaultDir;
        basis.b2 = perp(defaultDir);
        basis.fromTensor = false;
    }
    return basis;
}

}  // namespace pebble
