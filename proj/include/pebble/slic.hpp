#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "pebble/geometry.hpp"
#include "pebble/image.hpp"
#include "pebble/parallel.hpp"
#include "pebble/rng.hpp"
#include "pebble/tensor.hpp"

namespace pebble {

struct SegParams {
    int pebbleCount = 2000;
    double phiA1 = 3.0;            // aspect compression perpendicular to edges
    double Tcoh = 0.5;             // coherence gate for the oriented basis
    Vec2 defaultDir{0.0, 1.0};     // d1 when the tensor is too weak
    double compactness = 10.0;     // SLIC m, in Lab units
    int iterations = 10;
    uint64_t seed = 0;
    double coherenceK = 1e-4;
    const ScalarField* importanceMap = nullptr;  // >= 0.5 marks dense regions
    double importanceFactor = 4.0;
};

// One SLIC cluster / pebble seed. r1, r2 are recorded so the scale factors
// can be recomputed: phiA2 = (phiA1-1)*r1^2 + 1, phiS = r2^2 + 1, and
// alpha_i = phi_i * phiS * importanceScale.
struct Cluster {
    int id = 0;
    Vec2 center;
    Lab meanLab;
    OrientedBasis basis;
    double alpha1 = 1.0;
    double alpha2 = 1.0;
    double r1 = 0.0;
    double r2 = 0.0;
    double phiS = 1.0;             // before the importance division
    double importanceScale = 1.0;  // 1 / importanceFactor inside the mask
    bool alive = true;

    double phiSEffective() const { return phiS * importanceScale; }
};

class LabelMap {
public:
    static constexpr int32_t kNone = -1;

    LabelMap() = default;
    LabelMap(int width, int height)
        : width_(width), height_(height), labels_(static_cast<size_t>(width) * height, kNone) {}

    int width() const { return width_; }
    int height() const { return height_; }

    int32_t& at(int x, int y) { return labels_[static_cast<size_t>(y) * width_ + x]; }
    int32_t at(int x, int y) const { return labels_[static_cast<size_t>(y) * width_ + x]; }

    std::vector<int32_t>& data() { return labels_; }
    const std::vector<int32_t>& data() const { return labels_; }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<int32_t> labels_;
};

/// SLIC grid interval for a requested cluster count.
inline double gridInterval(int width, int height, int count) {
    return std::sqrt(static_cast<double>(width) * height / std::max(1, count));
}

struct ScaleFactors {
    double alpha1;
    double alpha2;
    double phiS;
};

/// Random pebble dimensions from two uniform draws: phiA2 interpolates
/// between 1 and phiA1 with r1^2, the shared scale is r2^2 + 1.
inline ScaleFactors clusterScaleFactors(double phiA1, double r1, double r2) {
    double phiA2 = (phiA1 - 1.0) * r1 * r1 + 1.0;
    double phiS = r2 * r2 + 1.0;
    return {phiA1 * phiS, phiA2 * phiS, phiS};
}

/// Oriented spatial distance: sqrt(alpha1*(v.b1)^2 + alpha2*(v.b2)^2).
/// With an axis basis and unit alphas this is the plain Euclidean norm.
inline double spatialDistance(Vec2 v, const OrientedBasis& basis, double alpha1, double alpha2) {
    double p1 = v.dot(basis.b1);
    double p2 = v.dot(basis.b2);
    return std::sqrt(alpha1 * p1 * p1 + alpha2 * p2 * p2);
}

/// Standard SLIC joint metric: sqrt(dLab^2 + (dS/S)^2 * m^2).
inline double combinedDistance(double dLab, double dS, double m, double S) {
    double spatial = dS / S * m;
    return std::sqrt(dLab * dLab + spatial * spatial);
}

namespace detail {

// Squared Lab gradient used for seed perturbation.
inline double labGradient(const LabImage& lab, int x, int y) {
    int xm = std::max(0, x - 1), xp = std::min(lab.width() - 1, x + 1);
    int ym = std::max(0, y - 1), yp = std::min(lab.height() - 1, y + 1);
    const Lab& l = lab.at(xm, y);
    const Lab& r = lab.at(xp, y);
    const Lab& u = lab.at(x, ym);
    const Lab& d = lab.at(x, yp);
    auto sq = [](double v) { return v * v; };
    return sq(r.L - l.L) + sq(r.a - l.a) + sq(r.b - l.b) + sq(d.L - u.L) + sq(d.a - u.a) +
           sq(d.b - u.b);
}

inline bool importanceAt(const ScalarField* map, double x, double y) {
    if (!map) return false;
    int px = std::clamp(static_cast<int>(x), 0, map->width() - 1);
    int py = std::clamp(static_cast<int>(y), 0, map->height() - 1);
    return map->at(px, py) >= 0.5;
}

// Hexagonally jittered grid: alternating rows are offset by a quarter
// interval in opposite directions, giving half-interval stagger between
// neighboring rows while keeping the per-row count fixed.
template <typename Emit>
void hexGrid(int width, int height, double interval, Emit&& emit) {
    int nx = std::max(1, static_cast<int>(std::lround(width / interval)));
    int ny = std::max(1, static_cast<int>(std::lround(height / interval)));
    double sx = static_cast<double>(width) / nx;
    double sy = static_cast<double>(height) / ny;
    for (int i = 0; i < ny; ++i) {
        double jitter = (i % 2 == 1 ? 0.25 : -0.25) * sx;
        for (int j = 0; j < nx; ++j) {
            double x = (j + 0.5) * sx + jitter;
            double y = (i + 0.5) * sy;
            emit(std::clamp(x, 0.5, width - 0.5), std::clamp(y, 0.5, height - 0.5));
        }
    }
}

}  // namespace detail

/// Seeds clusters on a hexagonally jittered grid (denser inside the
/// importance mask), perturbs each to the lowest-gradient pixel in its 3x3
/// neighborhood, and draws the per-cluster scale factors.
inline std::vector<Cluster> initClusters(const LabImage& lab, const SegParams& params) {
    int w = lab.width();
    int h = lab.height();
    double S = gridInterval(w, h, params.pebbleCount);

    std::vector<Vec2> seeds;
    std::vector<bool> dense;
    detail::hexGrid(w, h, S, [&](double x, double y) {
        if (!detail::importanceAt(params.importanceMap, x, y)) {
            seeds.emplace_back(x, y);
            dense.push_back(false);
        }
    });
    if (params.importanceMap) {
        double fine = S / std::sqrt(params.importanceFactor);
        detail::hexGrid(w, h, fine, [&](double x, double y) {
            if (detail::importanceAt(params.importanceMap, x, y)) {
                seeds.emplace_back(x, y);
                dense.push_back(true);
            }
        });
    }

    std::vector<Cluster> clusters(seeds.size());
    for (size_t i = 0; i < seeds.size(); ++i) {
        Cluster& c = clusters[i];
        c.id = static_cast<int>(i);

        // Move the seed to the lowest-gradient pixel in its 3x3 neighborhood;
        // the center pixel wins ties so uniform regions keep the grid layout.
        int px = std::clamp(static_cast<int>(seeds[i].x), 0, w - 1);
        int py = std::clamp(static_cast<int>(seeds[i].y), 0, h - 1);
        int bestX = px, bestY = py;
        double bestG = detail::labGradient(lab, px, py);
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                int nx = px + dx, ny = py + dy;
                if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
                double g = detail::labGradient(lab, nx, ny);
                if (g < bestG) {
                    bestG = g;
                    bestX = nx;
                    bestY = ny;
                }
            }
        c.center = {bestX + 0.5, bestY + 0.5};
        c.meanLab = lab.at(bestX, bestY);

        Substream rng(params.seed, RngStream::ClusterScale, i);
        c.r1 = rng.uniform01();
        c.r2 = rng.uniform01();
        ScaleFactors factors = clusterScaleFactors(params.phiA1, c.r1, c.r2);
        c.phiS = factors.phiS;
        c.importanceScale = dense[i] ? 1.0 / params.importanceFactor : 1.0;
        c.alpha1 = factors.alpha1 * c.importanceScale;
        c.alpha2 = factors.alpha2 * c.importanceScale;
    }
    return clusters;
}

struct SlicResult {
    LabelMap labels;
    std::vector<Cluster> clusters;
    int dropped = 0;  // clusters starved of pixels during iteration
};

namespace detail {

struct ClusterScratch {
    int64_t count = 0;
    int64_t sumX = 0;
    int64_t sumY = 0;
    double sumL = 0.0;
    double sumA = 0.0;
    double sumB = 0.0;
};

inline void refreshBases(std::vector<Cluster>& clusters, const TensorField& tensors,
                         const SegParams& params) {
    for (Cluster& c : clusters) {
        if (!c.alive) continue;
        StructureTensor t = tensors.sample(c.center.x - 0.5, c.center.y - 0.5);
        TensorEigen eig = eigenDecompose(t);
        double C = coherence(eig.lambda1, eig.lambda2, params.coherenceK);
        c.basis = selectBasis(eig, C, params.Tcoh, params.defaultDir);
    }
}

// One assignment sweep. Pixel-centric: every pixel scans the clusters whose
// search window covers it (via a coarse bin grid) and keeps the argmin of the
// squared combined distance, ties to the lowest cluster id. Independent per
// pixel, so the result does not depend on the thread count.
inline void assignPixels(const LabImage& lab, const std::vector<Cluster>& clusters, double S,
                         double m, LabelMap& labels, int threads) {
    int w = lab.width();
    int h = lab.height();
    int binSize = std::max(4, static_cast<int>(std::ceil(S)));
    int binsX = (w + binSize - 1) / binSize;
    int binsY = (h + binSize - 1) / binSize;

    struct Window {
        int x0, x1, y0, y1;  // inclusive pixel rect
    };
    std::vector<Window> windows(clusters.size());
    std::vector<std::vector<int32_t>> bins(static_cast<size_t>(binsX) * binsY);
    for (size_t ci = 0; ci < clusters.size(); ++ci) {
        const Cluster& c = clusters[ci];
        if (!c.alive) continue;
        double half = 2.0 * S * c.phiSEffective();
        Window win;
        win.x0 = std::max(0, static_cast<int>(std::floor(c.center.x - half)));
        win.x1 = std::min(w - 1, static_cast<int>(std::ceil(c.center.x + half)));
        win.y0 = std::max(0, static_cast<int>(std::floor(c.center.y - half)));
        win.y1 = std::min(h - 1, static_cast<int>(std::ceil(c.center.y + half)));
        windows[ci] = win;
        if (win.x0 > win.x1 || win.y0 > win.y1) continue;
        for (int by = win.y0 / binSize; by <= win.y1 / binSize; ++by)
            for (int bx = win.x0 / binSize; bx <= win.x1 / binSize; ++bx)
                bins[static_cast<size_t>(by) * binsX + bx].push_back(static_cast<int32_t>(ci));
    }

    double mOverS = m / S;
    parallelChunks(h, 32, threads, [&](int y0, int y1) {
        for (int y = y0; y < y1; ++y) {
            int by = y / binSize;
            for (int x = 0; x < w; ++x) {
                const auto& candidates = bins[static_cast<size_t>(by) * binsX + x / binSize];
                const Lab& px = lab.at(x, y);
                double bestD2 = std::numeric_limits<double>::infinity();
                int32_t bestId = LabelMap::kNone;
                for (int32_t ci : candidates) {
                    const Window& win = windows[ci];
                    if (x < win.x0 || x > win.x1 || y < win.y0 || y > win.y1) continue;
                    const Cluster& c = clusters[ci];
                    double dL = px.L - c.meanLab.L;
                    double da = px.a - c.meanLab.a;
                    double db = px.b - c.meanLab.b;
                    double dLab2 = dL * dL + da * da + db * db;
                    Vec2 v{x + 0.5 - c.center.x, y + 0.5 - c.center.y};
                    double p1 = v.dot(c.basis.b1);
                    double p2 = v.dot(c.basis.b2);
                    double dS2 = c.alpha1 * p1 * p1 + c.alpha2 * p2 * p2;
                    double d2 = dLab2 + dS2 * mOverS * mOverS;
                    if (d2 < bestD2) {
                        bestD2 = d2;
                        bestId = c.id;
                    }
                }
                labels.at(x, y) = bestId;
            }
        }
    });
}

// Mean position / mean Lab update. Accumulation runs over fixed 64-row
// blocks merged in block order, so floating-point sums are identical for
// every thread count.
inline void updateClusters(const LabImage& lab, const LabelMap& labels,
                           std::vector<Cluster>& clusters, int& dropped, int threads) {
    int w = lab.width();
    int h = lab.height();
    constexpr int kRows = 64;
    int blocks = (h + kRows - 1) / kRows;
    std::vector<std::vector<ClusterScratch>> partial(blocks);

    parallelBlocks(blocks, threads, [&](int b) {
        auto& acc = partial[b];
        acc.assign(clusters.size(), ClusterScratch{});
        int y1 = std::min(h, (b + 1) * kRows);
        for (int y = b * kRows; y < y1; ++y)
            for (int x = 0; x < w; ++x) {
                int32_t id = labels.at(x, y);
                if (id < 0) continue;
                ClusterScratch& s = acc[id];
                ++s.count;
                s.sumX += x;
                s.sumY += y;
                const Lab& px = lab.at(x, y);
                s.sumL += px.L;
                s.sumA += px.a;
                s.sumB += px.b;
            }
    });

    std::vector<ClusterScratch> total(clusters.size());
    for (int b = 0; b < blocks; ++b)
        for (size_t ci = 0; ci < clusters.size(); ++ci) {
            const ClusterScratch& s = partial[b][ci];
            ClusterScratch& t = total[ci];
            t.count += s.count;
            t.sumX += s.sumX;
            t.sumY += s.sumY;
            t.sumL += s.sumL;
            t.sumA += s.sumA;
            t.sumB += s.sumB;
        }

    for (size_t ci = 0; ci < clusters.size(); ++ci) {
        Cluster& c = clusters[ci];
        if (!c.alive) continue;
        const ClusterScratch& t = total[ci];
        if (t.count == 0) {
            c.alive = false;
            ++dropped;
            continue;
        }
        double inv = 1.0 / static_cast<double>(t.count);
        c.center = {t.sumX * inv + 0.5, t.sumY * inv + 0.5};
        c.meanLab.L = static_cast<float>(t.sumL * inv);
        c.meanLab.a = static_cast<float>(t.sumA * inv);
        c.meanLab.b = static_cast<float>(t.sumB * inv);
    }
}

}  // namespace detail

/// Oriented SLIC. Iterates assignment and update params.iterations times,
/// refreshing each cluster's basis from the tensor field as its center
/// moves, then runs one final claim pass so the returned label map is the
/// argmin for the returned cluster state. Labels may still contain
/// unassigned or fragmented pixels; enforceConnectivity resolves those.
inline SlicResult runSlic(const LabImage& lab, const TensorField& tensors, const SegParams& params,
                          std::vector<Cluster> clusters = {}, int threads = 1) {
    if (clusters.empty()) clusters = initClusters(lab, params);
    double S = gridInterval(lab.width(), lab.height(), params.pebbleCount);

    SlicResult result;
    result.labels = LabelMap(lab.width(), lab.height());
    for (int it = 0; it < params.iterations; ++it) {
        detail::refreshBases(clusters, tensors, params);
        detail::assignPixels(lab, clusters, S, params.compactness, result.labels, threads);
        detail::updateClusters(lab, result.labels, clusters, result.dropped, threads);
    }
    detail::refreshBases(clusters, tensors, params);
    detail::assignPixels(lab, clusters, S, params.compactness, result.labels, threads);
    result.clusters = std::move(clusters);
    return result;
}

namespace detail {

struct Component {
    int32_t label;
    std::vector<int32_t> pixels;  // flat indices
};

// 4-connected components in row-major discovery order.
inline std::vector<Component> connectedComponents(const LabelMap& map,
                                                  std::vector<int32_t>& compOf) {
    int w = map.width();
    int h = map.height();
    std::vector<Component> comps;
    compOf.assign(static_cast<size_t>(w) * h, -1);
    std::vector<int32_t> stack;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            int32_t idx = y * w + x;
            if (compOf[idx] >= 0) continue;
            int32_t label = map.data()[idx];
            int32_t compId = static_cast<int32_t>(comps.size());
            comps.push_back({label, {}});
            stack.assign(1, idx);
            compOf[idx] = compId;
            while (!stack.empty()) {
                int32_t cur = stack.back();
                stack.pop_back();
                comps[compId].pixels.push_back(cur);
                int cx = cur % w, cy = cur / w;
                const int dx[4] = {1, -1, 0, 0};
                const int dy[4] = {0, 0, 1, -1};
                for (int k = 0; k < 4; ++k) {
                    int nx = cx + dx[k], ny = cy + dy[k];
                    if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
                    int32_t nidx = ny * w + nx;
                    if (compOf[nidx] >= 0 || map.data()[nidx] != label) continue;
                    compOf[nidx] = compId;
                    stack.push_back(nidx);
                }
            }
        }
    return comps;
}

// Labels bordering the component in the current map, with border lengths.
inline std::map<int32_t, int> adjacentLabels(const LabelMap& map, const Component& comp,
                                             const std::vector<int32_t>& compOf, int32_t compId) {
    int w = map.width();
    int h = map.height();
    std::map<int32_t, int> neighbors;
    for (int32_t p : comp.pixels) {
        int cx = p % w, cy = p / w;
        const int dx[4] = {1, -1, 0, 0};
        const int dy[4] = {0, 0, 1, -1};
        for (int k = 0; k < 4; ++k) {
            int nx = cx + dx[k], ny = cy + dy[k];
            if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
            if (compOf[static_cast<size_t>(ny) * w + nx] == compId) continue;
            int32_t nl = map.data()[static_cast<size_t>(ny) * w + nx];
            if (nl >= 0 && nl != comp.label) ++neighbors[nl];
        }
    }
    return neighbors;
}

}  // namespace detail

/// Rewrites the label map so every label is one 4-connected region covering
/// every pixel. Fragments smaller than 1/4 of their label's largest
/// component (and all unassigned pixels) merge into the neighboring label
/// with the nearest meanLab; larger detached fragments become new pebbles
/// with fresh ids appended to `clusters`.
inline LabelMap enforceConnectivity(const LabelMap& labels, std::vector<Cluster>& clusters) {
    int w = labels.width();
    int h = labels.height();
    LabelMap out = labels;

    std::vector<int32_t> compOf;
    std::vector<detail::Component> comps = detail::connectedComponents(out, compOf);

    // Largest component per label keeps the id (earliest discovery wins ties).
    std::map<int32_t, size_t> largest;
    for (size_t i = 0; i < comps.size(); ++i) {
        if (comps[i].label < 0) continue;
        auto it = largest.find(comps[i].label);
        if (it == largest.end() || comps[it->second].pixels.size() < comps[i].pixels.size())
            largest[comps[i].label] = i;
    }

    for (size_t i = 0; i < comps.size(); ++i) {
        detail::Component& comp = comps[i];
        bool isLargest = comp.label >= 0 && largest[comp.label] == i;
        if (isLargest) continue;

        size_t largestSize = comp.label >= 0 ? comps[largest[comp.label]].pixels.size() : 0;
        bool merge = comp.label < 0 || comp.pixels.size() * 4 < largestSize;

        if (!merge) {
            // Detached but substantial: becomes its own pebble.
            int32_t freshId = static_cast<int32_t>(clusters.size());
            Cluster fresh = clusters[comp.label];
            fresh.id = freshId;
            int64_t sx = 0, sy = 0;
            for (int32_t p : comp.pixels) {
                sx += p % w;
                sy += p / w;
            }
            fresh.center = {static_cast<double>(sx) / comp.pixels.size() + 0.5,
                            static_cast<double>(sy) / comp.pixels.size() + 0.5};
            clusters.push_back(fresh);
            for (int32_t p : comp.pixels) out.data()[p] = freshId;
            continue;
        }

        auto neighbors = detail::adjacentLabels(out, comp, compOf, static_cast<int32_t>(i));
        if (neighbors.empty()) continue;  // isolated label spanning its whole area

        int32_t target;
        if (comp.label >= 0) {
            // Nearest meanLab to this fragment's own label.
            const Lab& own = clusters[comp.label].meanLab;
            double bestD = std::numeric_limits<double>::infinity();
            target = neighbors.begin()->first;
            for (const auto& [nl, border] : neighbors) {
                const Lab& other = clusters[nl].meanLab;
                double dL = own.L - other.L, da = own.a - other.a, db = own.b - other.b;
                double d = dL * dL + da * da + db * db;
                if (d < bestD) {
                    bestD = d;
                    target = nl;
                }
            }
        } else {
            // Unassigned pixels join the neighbor with the longest shared border.
            target = neighbors.begin()->first;
            int bestBorder = -1;
            for (const auto& [nl, border] : neighbors)
                if (border > bestBorder) {
                    bestBorder = border;
                    target = nl;
                }
        }
        for (int32_t p : comp.pixels) out.data()[p] = target;
    }

    // Cascaded merges can re-split a label (a fragment can attach to another
    // fragment of its target). Sweep until every label is one component;
    // each merge strictly reduces the component count, so this terminates.
    for (;;) {
        comps = detail::connectedComponents(out, compOf);
        std::map<int32_t, size_t> best;
        for (size_t i = 0; i < comps.size(); ++i) {
            if (comps[i].label < 0) continue;
            auto it = best.find(comps[i].label);
            if (it == best.end() || comps[it->second].pixels.size() < comps[i].pixels.size())
                best[comps[i].label] = i;
        }
        bool dirty = false;
        for (size_t i = 0; i < comps.size(); ++i) {
            if (comps[i].label >= 0 && best[comps[i].label] == i) continue;
            auto neighbors = detail::adjacentLabels(out, comps[i], compOf, static_cast<int32_t>(i));
            if (neighbors.empty()) continue;
            int32_t target = neighbors.begin()->first;
            int bestBorder = -1;
            for (const auto& [nl, border] : neighbors)
                if (border > bestBorder) {
                    bestBorder = border;
                    target = nl;
                }
            for (int32_t p : comps[i].pixels) out.data()[p] = target;
            dirty = true;
            break;  // recompute components before the next merge
        }
        if (!dirty) break;
    }
    return out;
}

}  // namespace pebble
