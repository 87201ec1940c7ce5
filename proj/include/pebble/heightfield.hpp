#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "pebble/contour.hpp"
#include "pebble/error.hpp"
#include "pebble/geometry.hpp"
#include "pebble/image.hpp"

namespace pebble {

namespace detail {

// 1D squared-distance transform (lower envelope of parabolas).
inline void distanceTransform1d(const std::vector<double>& f, int n, std::vector<double>& d,
                                std::vector<int>& v, std::vector<double>& z) {
    v[0] = 0;
    z[0] = -std::numeric_limits<double>::infinity();
    z[1] = std::numeric_limits<double>::infinity();
    int k = 0;
    for (int q = 1; q < n; ++q) {
        double s;
        for (;;) {
            int p = v[k];
            s = ((f[q] + q * q) - (f[p] + p * p)) / (2.0 * q - 2.0 * p);
            if (s <= z[k]) {
                --k;
                continue;
            }
            break;
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = std::numeric_limits<double>::infinity();
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[k + 1] < q) ++k;
        int p = v[k];
        d[q] = (q - p) * (q - p) + f[p];
    }
}

}  // namespace detail

struct DistanceResult {
    ScalarField dist;  // Euclidean distance to the nearest outside pixel; 0 off-mask
    double dmax = 0.0;
};

/// Exact Euclidean distance transform of a patch mask. Pixels beyond the
/// patch count as background, so a mask touching the patch border still gets
/// distance 1 there.
inline DistanceResult distanceTransform(const Mask& mask) {
    int w = mask.width();
    int h = mask.height();
    if (mask.countSet() == 0) throw ShapeError(ShapeError::Kind::EmptyRegion, "empty mask");

    // Work on a grid padded by one background ring.
    int pw = w + 2, ph = h + 2;
    const double inf = 1e18;
    std::vector<double> grid(static_cast<size_t>(pw) * ph, 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (mask.at(x, y)) grid[static_cast<size_t>(y + 1) * pw + (x + 1)] = inf;

    int n = std::max(pw, ph);
    std::vector<double> f(n), d(n), z(n + 1);
    std::vector<int> v(n);

    for (int x = 0; x < pw; ++x) {
        for (int y = 0; y < ph; ++y) f[y] = grid[static_cast<size_t>(y) * pw + x];
        detail::distanceTransform1d(f, ph, d, v, z);
        for (int y = 0; y < ph; ++y) grid[static_cast<size_t>(y) * pw + x] = d[y];
    }
    for (int y = 0; y < ph; ++y) {
        for (int x = 0; x < pw; ++x) f[x] = grid[static_cast<size_t>(y) * pw + x];
        detail::distanceTransform1d(f, pw, d, v, z);
        for (int x = 0; x < pw; ++x) grid[static_cast<size_t>(y) * pw + x] = d[x];
    }

    DistanceResult out;
    out.dist = ScalarField(w, h, 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (mask.at(x, y)) {
                double dv = std::sqrt(grid[static_cast<size_t>(y + 1) * pw + (x + 1)]);
                out.dist.at(x, y) = dv;
                out.dmax = std::max(out.dmax, dv);
            }
    return out;
}

/// Inner contour mask: pixels whose normalized distance reaches Tdist. A
/// result smaller than 4 pixels falls back to the distance argmax plus its
/// in-mask 4-neighbors, so every pebble gets a plateau.
inline Mask innerContour(const Mask& mask, const ScalarField& dist, double dmax, double tdist) {
    int w = mask.width();
    int h = mask.height();
    Mask inner(w, h, 0);
    size_t count = 0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (mask.at(x, y) && dist.at(x, y) / dmax >= tdist) {
                inner.at(x, y) = 1;
                ++count;
            }
    if (count >= 4) return inner;

    inner = Mask(w, h, 0);
    int bx = -1, by = -1;
    double best = -1.0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (mask.at(x, y) && dist.at(x, y) > best) {
                best = dist.at(x, y);
                bx = x;
                by = y;
            }
    inner.at(bx, by) = 1;
    const int dx[4] = {1, -1, 0, 0};
    const int dy[4] = {0, 0, 1, -1};
    for (int k = 0; k < 4; ++k) {
        int nx = bx + dx[k], ny = by + dy[k];
        if (nx >= 0 && nx < w && ny >= 0 && ny < h && mask.at(nx, ny)) inner.at(nx, ny) = 1;
    }
    return inner;
}

/// Boundary gradient magnitude: beta / (Tdist * Dmax).
inline double outerGradientMagnitude(double beta, double tdist, double dmax) {
    return beta / (tdist * dmax);
}

// Pebble solve domain. Omega = mask minus innerMask; innerMask is clamped to
// height 1, everything off-mask is height 0.
struct PebbleDomain {
    Mask mask;
    ScalarField dist;
    double dmax = 0.0;
    Mask innerMask;
    double tdist = 0.85;
};

inline PebbleDomain buildPebbleDomain(Mask mask, double tdist) {
    PebbleDomain dom;
    dom.mask = std::move(mask);
    DistanceResult dt = distanceTransform(dom.mask);
    dom.dist = std::move(dt.dist);
    dom.dmax = dt.dmax;
    dom.tdist = tdist;
    dom.innerMask = innerContour(dom.mask, dom.dist, dom.dmax, tdist);
    return dom;
}

struct SolveWeights {
    double laplace = 1.0;
    double dirichlet = 10.0;
    double gradient = 1.0;  // <= 0 disables the gradient rows
};

// Sparse weighted least-squares system in CSR form. Unknowns are the Omega
// pixels in patch row-major order; pixelOfUnknown maps back to flat patch
// indices when the system was produced by assembleSystem.
class LaplaceSystem {
public:
    explicit LaplaceSystem(int unknowns) : unknowns_(unknowns) { rowStart_.push_back(0); }

    int unknowns() const { return unknowns_; }
    int rows() const { return static_cast<int>(rhs_.size()); }

    // Row and right-hand side are scaled by the weight as they are added.
    void addRow(std::span<const int> cols, std::span<const double> coefs, double rhs,
                double weight) {
        for (size_t i = 0; i < cols.size(); ++i) {
            cols_.push_back(cols[i]);
            vals_.push_back(coefs[i] * weight);
        }
        rhs_.push_back(rhs * weight);
        rowStart_.push_back(static_cast<int>(cols_.size()));
    }

    void applyA(const std::vector<double>& x, std::vector<double>& y) const {
        y.assign(rhs_.size(), 0.0);
        for (size_t r = 0; r < rhs_.size(); ++r) {
            double acc = 0.0;
            for (int i = rowStart_[r]; i < rowStart_[r + 1]; ++i) acc += vals_[i] * x[cols_[i]];
            y[r] = acc;
        }
    }

    void applyAT(const std::vector<double>& r, std::vector<double>& y) const {
        y.assign(unknowns_, 0.0);
        for (size_t row = 0; row < rhs_.size(); ++row) {
            double rv = r[row];
            for (int i = rowStart_[row]; i < rowStart_[row + 1]; ++i) y[cols_[i]] += vals_[i] * rv;
        }
    }

    const std::vector<double>& rhs() const { return rhs_; }
    const std::vector<int>& rowStart() const { return rowStart_; }
    const std::vector<int>& cols() const { return cols_; }
    const std::vector<double>& vals() const { return vals_; }

    std::vector<int32_t> pixelOfUnknown;  // filled by assembleSystem

private:
    int unknowns_;
    std::vector<int> rowStart_;
    std::vector<int> cols_;
    std::vector<double> vals_;
    std::vector<double> rhs_;
};

/// Assembles the weighted least-squares system for one pebble: a 5-point
/// Laplacian row per Omega pixel, Dirichlet anchors (outer ring 0, inner
/// ring 1), a forward difference along the inward normal equal to gradMag at
/// each outer-ring pixel, and zero axis differences at each inner-ring
/// pixel. Normals are taken from the nearest contour sample; `samples`
/// holds the sample positions in patch-local coordinates.
inline LaplaceSystem assembleSystem(const PebbleDomain& dom, const Contour& samples,
                                    const std::vector<Vec2>& normals, double gradMag,
                                    const SolveWeights& weights) {
    int w = dom.mask.width();
    int h = dom.mask.height();

    // Unknown indexing over Omega.
    std::vector<int32_t> unknownAt(static_cast<size_t>(w) * h, -1);
    std::vector<int32_t> pixels;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (dom.mask.at(x, y) && !dom.innerMask.at(x, y)) {
                unknownAt[static_cast<size_t>(y) * w + x] = static_cast<int32_t>(pixels.size());
                pixels.push_back(y * w + x);
            }
    if (pixels.empty())
        throw ShapeError(ShapeError::Kind::EmptyRegion, "pebble interior is empty");

    LaplaceSystem sys(static_cast<int>(pixels.size()));
    sys.pixelOfUnknown = pixels;

    // Known value at a neighbor: 0 off-mask (or off-patch), 1 on the plateau.
    auto known = [&](int x, int y, double& value) {
        if (x < 0 || x >= w || y < 0 || y >= h || !dom.mask.at(x, y)) {
            value = 0.0;
            return true;
        }
        if (dom.innerMask.at(x, y)) {
            value = 1.0;
            return true;
        }
        return false;
    };

    const int dx[4] = {1, -1, 0, 0};
    const int dy[4] = {0, 0, 1, -1};
    int colBuf[5];
    double coefBuf[5];

    for (size_t u = 0; u < pixels.size(); ++u) {
        int x = pixels[u] % w;
        int y = pixels[u] / w;

        // (a) interior Laplacian.
        int nCols = 0;
        double rhs = 0.0;
        colBuf[nCols] = static_cast<int>(u);
        coefBuf[nCols++] = 4.0;
        for (int k = 0; k < 4; ++k) {
            int nx = x + dx[k], ny = y + dy[k];
            double value;
            if (known(nx, ny, value)) {
                rhs += value;
            } else {
                colBuf[nCols] = unknownAt[static_cast<size_t>(ny) * w + nx];
                coefBuf[nCols++] = -1.0;
            }
        }
        sys.addRow(std::span<const int>(colBuf, nCols), std::span<const double>(coefBuf, nCols),
                   rhs, weights.laplace);

        bool onOuter = false, onInner = false;
        for (int k = 0; k < 4; ++k) {
            int nx = x + dx[k], ny = y + dy[k];
            if (nx < 0 || nx >= w || ny < 0 || ny >= h || !dom.mask.at(nx, ny))
                onOuter = true;
            else if (dom.innerMask.at(nx, ny))
                onInner = true;
        }

        // (b) Dirichlet anchors.
        int col = static_cast<int>(u);
        double one = 1.0;
        if (onOuter)
            sys.addRow(std::span<const int>(&col, 1), std::span<const double>(&one, 1), 0.0,
                       weights.dirichlet);
        if (onInner)
            sys.addRow(std::span<const int>(&col, 1), std::span<const double>(&one, 1), 1.0,
                       weights.dirichlet);

        // (c) gradient constraints.
        if (weights.gradient <= 0.0) continue;
        if (onOuter) {
            // Inward normal from the nearest contour sample.
            Vec2 pos{x + 0.5, y + 0.5};
            double bestD = std::numeric_limits<double>::infinity();
            size_t bestI = 0;
            for (size_t i = 0; i < samples.points.size(); ++i) {
                Vec2 diff = samples.points[i] - pos;
                double d = diff.dot(diff);
                if (d < bestD) {
                    bestD = d;
                    bestI = i;
                }
            }
            Vec2 normal = normals[bestI];
            double comps[2] = {normal.x, normal.y};
            for (int axis = 0; axis < 2; ++axis) {
                double na = comps[axis];
                if (std::abs(na) < 1e-12) continue;
                int step = na > 0.0 ? 1 : -1;
                int nx = axis == 0 ? x + step : x;
                int ny = axis == 1 ? y + step : y;
                double value;
                int cols2[2];
                double coefs2[2];
                int n2 = 0;
                double rowRhs = gradMag * std::abs(na);
                cols2[n2] = static_cast<int>(u);
                coefs2[n2++] = -1.0;
                if (known(nx, ny, value)) {
                    rowRhs -= value;
                } else {
                    cols2[n2] = unknownAt[static_cast<size_t>(ny) * w + nx];
                    coefs2[n2++] = 1.0;
                }
                sys.addRow(std::span<const int>(cols2, n2), std::span<const double>(coefs2, n2),
                           rowRhs, weights.gradient * std::abs(na));
            }
        }
        if (onInner) {
            // Flat plateau rim: both forward differences vanish.
            for (int axis = 0; axis < 2; ++axis) {
                int nx = axis == 0 ? x + 1 : x;
                int ny = axis == 1 ? y + 1 : y;
                double value;
                int cols2[2];
                double coefs2[2];
                int n2 = 0;
                double rowRhs = 0.0;
                cols2[n2] = static_cast<int>(u);
                coefs2[n2++] = -1.0;
                if (known(nx, ny, value)) {
                    rowRhs -= value;
                } else {
                    cols2[n2] = unknownAt[static_cast<size_t>(ny) * w + nx];
                    coefs2[n2++] = 1.0;
                }
                sys.addRow(std::span<const int>(cols2, n2), std::span<const double>(coefs2, n2),
                           rowRhs, weights.gradient);
            }
        }
    }
    return sys;
}

struct SolveStats {
    int32_t pebbleId = 0;
    int unknowns = 0;
    int iterations = 0;
    double residual = 0.0;  // relative normal-equation residual
    bool converged = false;
    bool fellBack = false;
    double millis = 0.0;
};

struct CgOptions {
    double tolerance = 1e-10;      // tighter than the 1e-8 contract bound
    double acceptResidual = 1e-8;  // above this at the cap counts as failure
    int iterationFactor = 10;      // cap = factor * unknowns
};

/// Jacobi-preconditioned conjugate gradient on the normal equations
/// (min ||Ax - b||). Deterministic: fixed iteration order, no parallelism.
inline std::vector<double> solveLeastSquares(const LaplaceSystem& sys,
                                             const std::vector<double>& x0, const CgOptions& opt,
                                             SolveStats& stats) {
    int n = sys.unknowns();
    std::vector<double> x = x0;
    x.resize(n, 0.0);

    // diag(A^T A) for the Jacobi preconditioner.
    std::vector<double> diag(n, 0.0);
    {
        const auto& vals = sys.vals();
        const auto& cols = sys.cols();
        for (size_t i = 0; i < vals.size(); ++i) diag[cols[i]] += vals[i] * vals[i];
        for (double& d : diag)
            if (d <= 0.0) d = 1.0;
    }

    std::vector<double> r, s(n), z(n), p(n), q;
    sys.applyA(x, r);
    for (size_t i = 0; i < r.size(); ++i) r[i] = sys.rhs()[i] - r[i];
    sys.applyAT(r, s);

    std::vector<double> sRef(n);
    {
        sys.applyAT(sys.rhs(), sRef);
    }
    double refNorm = 0.0;
    for (double v : sRef) refNorm += v * v;
    refNorm = std::sqrt(refNorm);
    if (refNorm == 0.0) refNorm = 1.0;

    for (int i = 0; i < n; ++i) z[i] = s[i] / diag[i];
    p = z;
    double gamma = 0.0;
    for (int i = 0; i < n; ++i) gamma += s[i] * z[i];

    int maxIter = std::max(8, opt.iterationFactor * n);
    double relRes = 0.0;
    int it = 0;
    for (; it < maxIter; ++it) {
        double sNorm = 0.0;
        for (double v : s) sNorm += v * v;
        relRes = std::sqrt(sNorm) / refNorm;
        if (relRes <= opt.tolerance) break;

        sys.applyA(p, q);
        double qq = 0.0;
        for (double v : q) qq += v * v;
        if (qq == 0.0) break;
        double alpha = gamma / qq;
        for (int i = 0; i < n; ++i) x[i] += alpha * p[i];
        for (size_t i = 0; i < r.size(); ++i) r[i] -= alpha * q[i];
        sys.applyAT(r, s);
        for (int i = 0; i < n; ++i) z[i] = s[i] / diag[i];
        double gammaNew = 0.0;
        for (int i = 0; i < n; ++i) gammaNew += s[i] * z[i];
        double beta = gammaNew / gamma;
        gamma = gammaNew;
        for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }

    stats.unknowns = n;
    stats.iterations = it;
    stats.residual = relRes;
    stats.converged = relRes <= opt.acceptResidual;
    return x;
}

/// Solves one pebble and returns its local height patch: the least-squares
/// solution over Omega, exactly 1 on the plateau, 0 off the mask. A solver
/// failure falls back to the clamped distance-cone profile.
inline ScalarField solvePebble(const LaplaceSystem& sys, const PebbleDomain& dom,
                               SolveStats& stats, const CgOptions& opt = {}) {
    auto t0 = std::chrono::steady_clock::now();
    int w = dom.mask.width();
    int h = dom.mask.height();

    // Warm start from the distance cone; the exact solution is nearby.
    std::vector<double> x0(sys.unknowns(), 0.0);
    for (int u = 0; u < sys.unknowns(); ++u) {
        int px = sys.pixelOfUnknown[u] % w;
        int py = sys.pixelOfUnknown[u] / w;
        x0[u] = std::min(1.0, dom.dist.at(px, py) / (dom.tdist * dom.dmax));
    }
    std::vector<double> solution = solveLeastSquares(sys, x0, opt, stats);

    ScalarField heights(w, h, 0.0);
    if (stats.converged) {
        for (int u = 0; u < sys.unknowns(); ++u) {
            int px = sys.pixelOfUnknown[u] % w;
            int py = sys.pixelOfUnknown[u] / w;
            heights.at(px, py) = solution[u];
        }
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                if (dom.innerMask.at(x, y)) heights.at(x, y) = 1.0;
    } else {
        stats.fellBack = true;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                if (dom.mask.at(x, y))
                    heights.at(x, y) = std::min(1.0, dom.dist.at(x, y) / (dom.tdist * dom.dmax));
    }
    stats.millis = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                       .count();
    return heights;
}

/// Flat-plateau profile for degenerate pebbles (empty Omega).
inline ScalarField flatPlateau(const PebbleDomain& dom) {
    ScalarField heights(dom.mask.width(), dom.mask.height(), 0.0);
    for (int y = 0; y < dom.mask.height(); ++y)
        for (int x = 0; x < dom.mask.width(); ++x)
            if (dom.mask.at(x, y))
                heights.at(x, y) = std::min(1.0, dom.dist.at(x, y) / (dom.tdist * dom.dmax));
    return heights;
}

struct PebblePatch {
    int32_t id = 0;
    BBox bbox;
    ScalarField heights;  // patch-local, 0 outside the pebble mask
};

// Composite heightfield plus the per-pixel owning pebble (-1 = grout).
struct HeightField {
    ScalarField heights;
    std::vector<int32_t> owner;

    int width() const { return heights.width(); }
    int height() const { return heights.height(); }
    int32_t ownerAt(int x, int y) const { return owner[static_cast<size_t>(y) * width() + x]; }
};

/// Max-composites pebble patches onto the canvas. Ties keep the earlier
/// (lower-id) pebble; iteration order is by patch list order, so the result
/// is schedule-independent.
inline HeightField compositeHeights(const std::vector<PebblePatch>& patches, int width,
                                    int height) {
    HeightField out;
    out.heights = ScalarField(width, height, 0.0);
    out.owner.assign(static_cast<size_t>(width) * height, -1);
    for (const PebblePatch& patch : patches) {
        for (int y = patch.bbox.y0; y < patch.bbox.y1; ++y)
            for (int x = patch.bbox.x0; x < patch.bbox.x1; ++x) {
                double hv = patch.heights.at(x - patch.bbox.x0, y - patch.bbox.y0);
                if (hv <= 0.0) continue;
                if (hv > out.heights.at(x, y)) {
                    out.heights.at(x, y) = hv;
                    out.owner[static_cast<size_t>(y) * width + x] = patch.id;
                }
            }
    }
    return out;
}

}  // namespace pebble
