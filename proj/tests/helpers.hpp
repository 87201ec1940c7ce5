#pragma once

// Shared fixtures and independent oracles for the test suites. Oracles here
// deliberately avoid the library's own computation paths.

#include <complex>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "pebble/contour.hpp"
#include "pebble/heightfield.hpp"
#include "pebble/image.hpp"
#include "pebble/slic.hpp"

namespace testutil {

inline pebble::RasterImage solidImage(int w, int h, pebble::Rgb c) {
    return pebble::RasterImage(w, h, c);
}

// Left half `a`, right half `b`, split at column `split`.
inline pebble::RasterImage twoToneImage(int w, int h, int split, pebble::Rgb a, pebble::Rgb b) {
    pebble::RasterImage img(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) img.at(x, y) = x < split ? a : b;
    return img;
}

// Smooth multi-blob image for pipeline-scale tests; deterministic.
inline pebble::RasterImage blobImage(int w, int h, uint64_t seed = 7) {
    pebble::RasterImage img(w, h);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    struct Blob {
        double x, y, r, cr, cg, cb;
    };
    std::vector<Blob> blobs;
    int count = std::max(4, w * h / 20000);
    for (int i = 0; i < count; ++i)
        blobs.push_back({uni(rng) * w, uni(rng) * h, (0.1 + 0.3 * uni(rng)) * std::min(w, h),
                         uni(rng), uni(rng), uni(rng)});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double r = 0.1 + 0.3 * (static_cast<double>(x) / w);
            double g = 0.1 + 0.3 * (static_cast<double>(y) / h);
            double b = 0.2;
            for (const Blob& blob : blobs) {
                double dx = x - blob.x, dy = y - blob.y;
                double fall = std::exp(-(dx * dx + dy * dy) / (blob.r * blob.r));
                r += 0.6 * blob.cr * fall;
                g += 0.6 * blob.cg * fall;
                b += 0.6 * blob.cb * fall;
            }
            img.at(x, y) = {static_cast<float>(std::clamp(r, 0.0, 1.0)),
                            static_cast<float>(std::clamp(g, 0.0, 1.0)),
                            static_cast<float>(std::clamp(b, 0.0, 1.0))};
        }
    return img;
}

class TempDir {
public:
    TempDir() {
        path_ = std::filesystem::temp_directory_path() /
                ("pebble_test_" + std::to_string(counter()++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    std::string file(const std::string& name) const { return (path_ / name).string(); }
    const std::filesystem::path& path() const { return path_; }

private:
    static int& counter() {
        static int c = 0;
        return c;
    }
    std::filesystem::path path_;
};

inline std::vector<unsigned char> readFileBytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::vector<unsigned char>((std::istreambuf_iterator<char>(in)),
                                      std::istreambuf_iterator<char>());
}

inline uint64_t fnv1a(const std::vector<unsigned char>& bytes) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 1099511628211ULL;
    }
    return h;
}

inline uint64_t hashFile(const std::string& path) { return fnv1a(readFileBytes(path)); }

// ---- independent oracles -------------------------------------------------

// O(K^2) DFT with the same 1/K normalization the library claims.
inline std::vector<std::complex<double>> naiveDft(const std::vector<std::complex<double>>& z) {
    size_t K = z.size();
    std::vector<std::complex<double>> out(K);
    for (size_t n = 0; n < K; ++n) {
        std::complex<double> acc{0.0, 0.0};
        for (size_t k = 0; k < K; ++k) {
            double angle = -2.0 * std::numbers::pi * static_cast<double>(n * k % K) / K;
            acc += z[k] * std::polar(1.0, angle);
        }
        out[n] = acc / static_cast<double>(K);
    }
    return out;
}

// Brute-force Euclidean distance transform: nearest background pixel center,
// with everything beyond the mask bounds counting as background.
inline pebble::ScalarField bruteForceDistance(const pebble::Mask& mask) {
    int w = mask.width();
    int h = mask.height();
    pebble::ScalarField out(w, h, 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (!mask.at(x, y)) continue;
            double best = 1e30;
            for (int by = -1; by <= h; ++by)
                for (int bx = -1; bx <= w; ++bx) {
                    bool background =
                        bx < 0 || bx >= w || by < 0 || by >= h || !mask.at(bx, by);
                    if (!background) continue;
                    double dx = x - bx, dy = y - by;
                    best = std::min(best, dx * dx + dy * dy);
                }
            out.at(x, y) = std::sqrt(best);
        }
    return out;
}

// Dense least-squares solve of a LaplaceSystem via normal equations and
// Cholesky factorization. Independent of the CG path.
inline std::vector<double> denseSolve(const pebble::LaplaceSystem& sys) {
    int n = sys.unknowns();
    std::vector<double> ata(static_cast<size_t>(n) * n, 0.0);
    std::vector<double> atb(n, 0.0);
    const auto& rowStart = sys.rowStart();
    const auto& cols = sys.cols();
    const auto& vals = sys.vals();
    const auto& rhs = sys.rhs();
    for (int r = 0; r < sys.rows(); ++r) {
        for (int i = rowStart[r]; i < rowStart[r + 1]; ++i) {
            atb[cols[i]] += vals[i] * rhs[r];
            for (int j = rowStart[r]; j < rowStart[r + 1]; ++j)
                ata[static_cast<size_t>(cols[i]) * n + cols[j]] += vals[i] * vals[j];
        }
    }
    // Cholesky: ata = L L^T.
    std::vector<double> L(static_cast<size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            double sum = ata[static_cast<size_t>(i) * n + j];
            for (int k = 0; k < j; ++k)
                sum -= L[static_cast<size_t>(i) * n + k] * L[static_cast<size_t>(j) * n + k];
            if (i == j)
                L[static_cast<size_t>(i) * n + j] = std::sqrt(std::max(sum, 1e-300));
            else
                L[static_cast<size_t>(i) * n + j] = sum / L[static_cast<size_t>(j) * n + j];
        }
    }
    std::vector<double> y(n, 0.0), x(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double sum = atb[i];
        for (int k = 0; k < i; ++k) sum -= L[static_cast<size_t>(i) * n + k] * y[k];
        y[i] = sum / L[static_cast<size_t>(i) * n + i];
    }
    for (int i = n - 1; i >= 0; --i) {
        double sum = y[i];
        for (int k = i + 1; k < n; ++k) sum -= L[static_cast<size_t>(k) * n + i] * x[k];
        x[i] = sum / L[static_cast<size_t>(i) * n + i];
    }
    return x;
}

// Disk mask with a 2-pixel background margin.
inline pebble::Mask diskMask(int radius) {
    int size = 2 * radius + 5;
    pebble::Mask mask(size, size, 0);
    double c = size / 2.0 - 0.5;
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            double dx = x - c, dy = y - c;
            if (dx * dx + dy * dy <= static_cast<double>(radius) * radius) mask.at(x, y) = 1;
        }
    return mask;
}

// Circle contour with `n` samples; pure first harmonic z0 + r*exp(2*pi*i*k/n).
inline pebble::Contour circleContour(double cx, double cy, double r, int n) {
    pebble::Contour c;
    for (int i = 0; i < n; ++i) {
        double t = 2.0 * std::numbers::pi * i / n;
        c.points.push_back({cx + r * std::cos(t), cy + r * std::sin(t)});
    }
    return c;
}

inline pebble::Contour squareContour(double x0, double y0, double side, int perSide) {
    pebble::Contour c;
    for (int i = 0; i < perSide; ++i)
        c.points.push_back({x0 + side * i / perSide, y0});
    for (int i = 0; i < perSide; ++i)
        c.points.push_back({x0 + side, y0 + side * i / perSide});
    for (int i = 0; i < perSide; ++i)
        c.points.push_back({x0 + side - side * i / perSide, y0 + side});
    for (int i = 0; i < perSide; ++i)
        c.points.push_back({x0, y0 + side - side * i / perSide});
    return c;
}

}  // namespace testutil
