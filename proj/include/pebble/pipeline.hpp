#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pebble/color.hpp"
#include "pebble/contour.hpp"
#include "pebble/error.hpp"
#include "pebble/heightfield.hpp"
#include "pebble/image_io.hpp"
#include "pebble/parallel.hpp"
#include "pebble/render.hpp"
#include "pebble/rng.hpp"
#include "pebble/slic.hpp"
#include "pebble/tensor.hpp"

namespace pebble {

enum class RenderMode { Full, Untextured, LayoutOnly };

enum class DumpKind { Labels, Contours, Heightfield, Stats };

struct JobConfig {
    std::string inputPath;
    std::string outputPath;
    int pebbleCount = 2000;
    uint64_t seed = 0;
    double scale = 1.0;  // output = scale * input dims
    int L = 7;           // retained Fourier coefficients (odd)
    double phiA1 = 3.0;
    double Tcoh = 0.5;
    double Tdist = 0.85;
    double beta = 2.0;
    double compactness = 10.0;
    std::string texturePath;
    std::string importancePath;
    double importanceFactor = 4.0;
    RenderMode mode = RenderMode::Full;
    std::set<DumpKind> dumps;
    int threads = 0;  // 0 = hardware concurrency
    std::string exportHeightfieldPath;

    // Lighting overrides; heightScale <= 0 means 0.6 * grid interval at
    // output resolution.
    Vec3 lightDir{-0.4, -0.4, 1.0};
    double ambient = 0.25;
    double diffuse = 0.65;
    double specular = 0.25;
    double shininess = 16.0;
    Rgb groutColor{0.15f, 0.15f, 0.15f};
    double heightScale = 0.0;
};

inline void validateConfig(const JobConfig& cfg) {
    if (cfg.inputPath.empty()) throw ConfigError("--input is required");
    if (cfg.outputPath.empty()) throw ConfigError("--output is required");
    if (!std::filesystem::exists(cfg.inputPath))
        throw ConfigError("input file does not exist: " + cfg.inputPath);
    if (cfg.pebbleCount < 1) throw ConfigError("--pebbles must be >= 1");
    if (cfg.scale < 0.1) throw ConfigError("--scale must be >= 0.1");
    if (cfg.L < 3 || cfg.L % 2 == 0)
        throw ConfigError("--L must be an odd integer >= 3 (DC plus conjugate pairs)");
    if (cfg.phiA1 < 1.0) throw ConfigError("--phi-a1 must be >= 1");
    if (cfg.Tcoh <= 0.0 || cfg.Tcoh >= 1.0) throw ConfigError("--t-coh must be in (0,1)");
    if (cfg.Tdist <= 0.0 || cfg.Tdist >= 1.0) throw ConfigError("--t-dist must be in (0,1)");
    if (cfg.beta <= 0.0) throw ConfigError("--beta must be > 0");
    if (cfg.compactness <= 0.0) throw ConfigError("--compactness must be > 0");
    if (cfg.importanceFactor <= 1.0) throw ConfigError("--importance-factor must be > 1");
    if (cfg.threads < 0) throw ConfigError("--threads must be >= 0");
    if (cfg.ambient < 0.0 || cfg.ambient > 1.0) throw ConfigError("--ambient must be in [0,1]");
    if (cfg.diffuse < 0.0 || cfg.diffuse > 1.0) throw ConfigError("--diffuse must be in [0,1]");
    if (cfg.specular < 0.0 || cfg.specular > 1.0) throw ConfigError("--specular must be in [0,1]");
    if (cfg.shininess <= 0.0) throw ConfigError("--shininess must be > 0");
    if (!cfg.texturePath.empty() && !std::filesystem::exists(cfg.texturePath))
        throw ConfigError("texture file does not exist: " + cfg.texturePath);
    if (!cfg.importancePath.empty() && !std::filesystem::exists(cfg.importancePath))
        throw ConfigError("importance file does not exist: " + cfg.importancePath);
}

struct StageReport {
    double loadMs = 0.0;
    double tensorMs = 0.0;
    double segmentationMs = 0.0;
    double contourMs = 0.0;
    double solveMs = 0.0;
    double compositeMs = 0.0;
    double renderMs = 0.0;
    double writeMs = 0.0;
    double totalMs = 0.0;

    int pebblesRequested = 0;
    int clustersSeeded = 0;
    int clustersStarved = 0;
    int pebblesFinal = 0;      // distinct labels after connectivity
    int pebblesDroppedGeometry = 0;  // untraceable / zero-area at canvas scale
    int pebblesDegenerate = 0;       // flat-plateau fallback (empty interior)
    int solverFallbacks = 0;

    int64_t solverIterations = 0;
    double solverMaxResidual = 0.0;
    std::vector<SolveStats> perPebble;

    int threadsUsed = 1;
    int canvasWidth = 0;
    int canvasHeight = 0;
};

namespace detail {

class StageTimer {
public:
    StageTimer() : start_(std::chrono::steady_clock::now()) {}
    double restartMs() {
        auto now = std::chrono::steady_clock::now();
        double ms = std::chrono::duration<double, std::milli>(now - start_).count();
        start_ = now;
        return ms;
    }

private:
    std::chrono::steady_clock::time_point start_;
};

// Files created by this run, removed again if a later stage fails.
class OutputGuard {
public:
    void track(const std::string& path) { paths_.push_back(path); }
    void release() { paths_.clear(); }
    ~OutputGuard() {
        for (const auto& p : paths_) {
            std::error_code ec;
            std::filesystem::remove(p, ec);
        }
    }

private:
    std::vector<std::string> paths_;
};

inline std::string dumpPath(const std::string& outputPath, const std::string& suffix,
                            const std::string& ext) {
    std::filesystem::path p(outputPath);
    std::filesystem::path dir = p.parent_path();
    std::string stem = p.stem().string();
    return (dir / (stem + "_" + suffix + ext)).string();
}

inline RasterImage renderLabelDump(const LabelMap& labels, uint64_t seed) {
    int32_t maxId = -1;
    for (int32_t v : labels.data()) maxId = std::max(maxId, v);
    std::vector<Rgb> palette(static_cast<size_t>(maxId + 1));
    for (int32_t i = 0; i <= maxId; ++i) {
        Substream rng(seed, RngStream::LabelColor, static_cast<uint64_t>(i));
        palette[i] = {static_cast<float>(0.1 + 0.85 * rng.uniform01()),
                      static_cast<float>(0.1 + 0.85 * rng.uniform01()),
                      static_cast<float>(0.1 + 0.85 * rng.uniform01())};
    }
    RasterImage out(labels.width(), labels.height());
    for (int y = 0; y < labels.height(); ++y)
        for (int x = 0; x < labels.width(); ++x) {
            int32_t id = labels.at(x, y);
            out.at(x, y) = id >= 0 ? palette[id] : Rgb{0.0f, 0.0f, 0.0f};
        }
    return out;
}

inline void writeClusterCsv(const std::vector<Cluster>& clusters, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError(IoError::Kind::WriteFailed, "cannot write " + path);
    out << "id,center_x,center_y,alpha1,alpha2,r1,r2,from_tensor,alive\n";
    char line[256];
    for (const Cluster& c : clusters) {
        std::snprintf(line, sizeof(line), "%d,%.6f,%.6f,%.6f,%.6f,%.9f,%.9f,%d,%d\n", c.id,
                      c.center.x, c.center.y, c.alpha1, c.alpha2, c.r1, c.r2,
                      c.basis.fromTensor ? 1 : 0, c.alive ? 1 : 0);
        out << line;
    }
}

inline void writeStatsCsv(const std::vector<SolveStats>& stats, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError(IoError::Kind::WriteFailed, "cannot write " + path);
    out << "id,unknowns,iterations,residual,milliseconds\n";
    char line[160];
    for (const SolveStats& s : stats) {
        std::snprintf(line, sizeof(line), "%d,%d,%d,%.3e,%.3f\n", s.pebbleId, s.unknowns,
                      s.iterations, s.residual, s.millis);
        out << line;
    }
}

inline void drawPolyline(RasterImage& img, const Contour& c, Rgb color) {
    size_t k = c.points.size();
    for (size_t i = 0; i < k; ++i) {
        Vec2 p = c.points[i];
        Vec2 q = c.points[(i + 1) % k];
        int steps = std::max(1, static_cast<int>(std::ceil((q - p).norm() * 2.0)));
        for (int s = 0; s <= steps; ++s) {
            double t = static_cast<double>(s) / steps;
            int x = static_cast<int>(p.x + (q.x - p.x) * t);
            int y = static_cast<int>(p.y + (q.y - p.y) * t);
            if (x >= 0 && x < img.width() && y >= 0 && y < img.height()) img.at(x, y) = color;
        }
    }
}

// Nearest-neighbor upscale of the input for the contour overlay dump.
inline RasterImage scaleNearest(const RasterImage& src, int w, int h, double scale) {
    RasterImage out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            int sx = std::clamp(static_cast<int>((x + 0.5) / scale), 0, src.width() - 1);
            int sy = std::clamp(static_cast<int>((y + 0.5) / scale), 0, src.height() - 1);
            out.at(x, y) = src.at(sx, sy);
        }
    return out;
}

}  // namespace detail

/// Runs the whole pipeline: load, tensor field, oriented SLIC, contour
/// smoothing at the output scale, per-pebble Laplace solves, composite,
/// shading, and file writes. Deterministic for a fixed (input, config);
/// independent of the thread count.
inline StageReport runPipeline(const JobConfig& cfg) {
    validateConfig(cfg);
    StageReport report;
    detail::OutputGuard guard;
    int threads = cfg.threads > 0 ? cfg.threads : hardwareThreads();
    report.threadsUsed = threads;
    report.pebblesRequested = cfg.pebbleCount;
    auto wholeStart = std::chrono::steady_clock::now();

    // ---- load ----------------------------------------------------------
    detail::StageTimer timer;
    RasterImage input;
    std::optional<ScalarField> importance;
    std::optional<RasterImage> textureImage;
    try {
        input = loadImage(cfg.inputPath);
        if (!cfg.importancePath.empty()) {
            RasterImage imap = loadImage(cfg.importancePath);
            ScalarField field(imap.width(), imap.height());
            for (size_t i = 0; i < imap.data().size(); ++i)
                field.data()[i] = linearLuminance(imap.data()[i]);
            importance = std::move(field);
        }
        if (cfg.mode == RenderMode::Full && !cfg.texturePath.empty())
            textureImage = loadImage(cfg.texturePath);
    } catch (const IoError& e) {
        throw PipelineError("load", e.what());
    }
    if (static_cast<int64_t>(cfg.pebbleCount) >
        static_cast<int64_t>(input.width()) * input.height())
        throw PipelineError("load", "pebble count exceeds pixel count");
    report.loadMs = timer.restartMs();

    // ---- tensor field ---------------------------------------------------
    double S = gridInterval(input.width(), input.height(), cfg.pebbleCount);
    TensorField tensors;
    try {
        tensors = computeTensorField(input, 1.0, std::max(0.5, 0.4 * S), threads);
    } catch (const std::exception& e) {
        throw PipelineError("tensor", e.what());
    }
    report.tensorMs = timer.restartMs();

    // ---- segmentation ---------------------------------------------------
    LabImage lab = rgbToLab(input);
    SegParams seg;
    seg.pebbleCount = cfg.pebbleCount;
    seg.phiA1 = cfg.phiA1;
    seg.Tcoh = cfg.Tcoh;
    seg.compactness = cfg.compactness;
    seg.seed = cfg.seed;
    seg.importanceMap = importance ? &*importance : nullptr;
    seg.importanceFactor = cfg.importanceFactor;
    LabelMap labels;
    std::vector<Cluster> clusters;
    try {
        SlicResult slic = runSlic(lab, tensors, seg, {}, threads);
        report.clustersSeeded = static_cast<int>(slic.clusters.size());
        report.clustersStarved = slic.dropped;
        clusters = std::move(slic.clusters);
        labels = enforceConnectivity(slic.labels, clusters);
    } catch (const std::exception& e) {
        throw PipelineError("segmentation", e.what());
    }
    report.segmentationMs = timer.restartMs();

    // ---- contours at output scale --------------------------------------
    int canvasW = std::max(1, static_cast<int>(std::lround(input.width() * cfg.scale)));
    int canvasH = std::max(1, static_cast<int>(std::lround(input.height() * cfg.scale)));
    report.canvasWidth = canvasW;
    report.canvasHeight = canvasH;

    std::vector<int32_t> presentIds;
    {
        std::vector<uint8_t> seen(clusters.size(), 0);
        for (int32_t v : labels.data())
            if (v >= 0 && v < static_cast<int32_t>(seen.size())) seen[v] = 1;
        for (size_t i = 0; i < seen.size(); ++i)
            if (seen[i]) presentIds.push_back(static_cast<int32_t>(i));
    }
    report.pebblesFinal = static_cast<int>(presentIds.size());

    struct PebbleWork {
        PebbleShape shape;
        FourierDescriptor descriptor;
        int samples = 0;
        bool ok = false;
    };
    std::vector<PebbleWork> work(presentIds.size());
    std::vector<Contour> debugContours;
    try {
        constexpr int kResample = 128;
        parallelBlocks(static_cast<int>(presentIds.size()), threads, [&](int i) {
            PebbleWork& pw = work[i];
            int32_t id = presentIds[i];
            Contour traced;
            try {
                traced = traceBoundary(labels, id);
            } catch (const ShapeError&) {
                return;  // too small to trace; counted below
            }
            double tracedPerimeter = perimeter(traced);
            Contour uniform = resampleUniform(traced, kResample);
            FourierDescriptor smoothDesc = smooth(toDescriptor(uniform), cfg.L);
            int samples =
                std::max(kResample, static_cast<int>(std::ceil(tracedPerimeter * cfg.scale * 1.5)));
            Contour outer = reconstruct(smoothDesc, cfg.scale, samples);
            try {
                pw.shape = rasterizePatch(id, outer, canvasW, canvasH);
            } catch (const ShapeError&) {
                return;  // rasterizes to nothing at this scale
            }
            pw.descriptor = std::move(smoothDesc);
            pw.samples = samples;
            pw.ok = true;
        });
    } catch (const std::exception& e) {
        throw PipelineError("contour", e.what());
    }
    for (const PebbleWork& pw : work)
        if (!pw.ok) ++report.pebblesDroppedGeometry;
    report.contourMs = timer.restartMs();

    // ---- per-pebble heightfields ----------------------------------------
    std::vector<PebblePatch> patches(work.size());
    std::vector<SolveStats> stats(work.size());
    std::vector<uint8_t> degenerate(work.size(), 0);
    try {
        parallelBlocks(static_cast<int>(work.size()), threads, [&](int i) {
            PebbleWork& pw = work[i];
            if (!pw.ok) return;
            PebblePatch& patch = patches[i];
            patch.id = pw.shape.id;
            patch.bbox = pw.shape.bbox;
            stats[i].pebbleId = pw.shape.id;

            PebbleDomain dom = buildPebbleDomain(pw.shape.mask, cfg.Tdist);
            bool interiorEmpty = true;
            for (int y = 0; y < dom.mask.height() && interiorEmpty; ++y)
                for (int x = 0; x < dom.mask.width(); ++x)
                    if (dom.mask.at(x, y) && !dom.innerMask.at(x, y)) {
                        interiorEmpty = false;
                        break;
                    }
            if (interiorEmpty) {
                patch.heights = flatPlateau(dom);
                degenerate[i] = 1;
                return;
            }

            // Contour samples and inward normals in patch-local coordinates.
            Vec2 origin{static_cast<double>(pw.shape.bbox.x0),
                        static_cast<double>(pw.shape.bbox.y0)};
            Contour local = pw.shape.outer;
            for (Vec2& p : local.points) p = p - origin;
            std::complex<double> centroid = pw.descriptor.coeffs[0] * cfg.scale;
            Vec2 interior = Vec2{centroid.real(), centroid.imag()} - origin;
            std::vector<Vec2> normals;
            try {
                normals = boundaryNormals(pw.descriptor, cfg.scale, pw.samples, interior);
            } catch (const ShapeError&) {
                patch.heights = flatPlateau(dom);
                degenerate[i] = 1;
                return;
            }

            double gradMag = outerGradientMagnitude(cfg.beta, cfg.Tdist, dom.dmax);
            LaplaceSystem sys = assembleSystem(dom, local, normals, gradMag, SolveWeights{});
            patch.heights = solvePebble(sys, dom, stats[i]);
        });
    } catch (const std::exception& e) {
        throw PipelineError("solve", e.what());
    }
    for (size_t i = 0; i < work.size(); ++i) {
        if (!work[i].ok) continue;
        if (degenerate[i]) {
            ++report.pebblesDegenerate;
            continue;
        }
        report.solverIterations += stats[i].iterations;
        report.solverMaxResidual = std::max(report.solverMaxResidual, stats[i].residual);
        if (stats[i].fellBack) ++report.solverFallbacks;
        report.perPebble.push_back(stats[i]);
    }
    report.solveMs = timer.restartMs();

    // ---- composite -------------------------------------------------------
    std::vector<PebblePatch> livePatches;
    livePatches.reserve(patches.size());
    for (size_t i = 0; i < patches.size(); ++i)
        if (work[i].ok) livePatches.push_back(std::move(patches[i]));
    HeightField field = compositeHeights(livePatches, canvasW, canvasH);
    report.compositeMs = timer.restartMs();

    // ---- render -----------------------------------------------------------
    RasterImage rendered;
    try {
        double heightScale = cfg.heightScale > 0.0
                                 ? cfg.heightScale
                                 : 0.6 * gridInterval(canvasW, canvasH, cfg.pebbleCount);
        std::vector<Vec3> normals = computeNormals(field.heights, heightScale, threads);
        int32_t idCount = static_cast<int32_t>(clusters.size());
        std::vector<Rgb> colors;
        if (cfg.mode == RenderMode::LayoutOnly) {
            colors.assign(idCount, Rgb{0.75f, 0.75f, 0.75f});
        } else {
            colors = pebbleBaseColors(input, field, idCount, cfg.scale);
        }
        LightingParams lighting;
        lighting.lightDir = cfg.lightDir;
        lighting.ambient = cfg.ambient;
        lighting.diffuse = cfg.diffuse;
        lighting.specular = cfg.specular;
        lighting.shininess = cfg.shininess;
        lighting.heightScale = heightScale;
        lighting.groutColor = cfg.groutColor;

        std::optional<TextureSource> texture;
        if (textureImage) texture.emplace(std::move(*textureImage), cfg.seed);
        rendered = shade(field, normals, colors, lighting, texture ? &*texture : nullptr, threads);
    } catch (const std::exception& e) {
        throw PipelineError("render", e.what());
    }
    report.renderMs = timer.restartMs();

    // ---- write ------------------------------------------------------------
    try {
        guard.track(cfg.outputPath);
        writeImage(rendered, cfg.outputPath);

        if (cfg.dumps.count(DumpKind::Labels)) {
            std::string labelPath = detail::dumpPath(cfg.outputPath, "labels", ".png");
            std::string csvPath = detail::dumpPath(cfg.outputPath, "clusters", ".csv");
            guard.track(labelPath);
            guard.track(csvPath);
            writeImage(detail::renderLabelDump(labels, cfg.seed), labelPath);
            detail::writeClusterCsv(clusters, csvPath);
        }
        if (cfg.dumps.count(DumpKind::Contours)) {
            std::string path = detail::dumpPath(cfg.outputPath, "contours", ".png");
            guard.track(path);
            RasterImage overlay = detail::scaleNearest(input, canvasW, canvasH, cfg.scale);
            for (const PebbleWork& pw : work)
                if (pw.ok) detail::drawPolyline(overlay, pw.shape.outer, Rgb{1.0f, 1.0f, 1.0f});
            writeImage(overlay, path);
        }
        if (cfg.dumps.count(DumpKind::Heightfield)) {
            std::string path = detail::dumpPath(cfg.outputPath, "heightfield", ".png");
            guard.track(path);
            guard.track(heightfieldSidecarPath(path));
            exportHeightfield(field.heights, path);
        }
        if (cfg.dumps.count(DumpKind::Stats)) {
            std::string path = detail::dumpPath(cfg.outputPath, "stats", ".csv");
            guard.track(path);
            detail::writeStatsCsv(report.perPebble, path);
        }
        if (!cfg.exportHeightfieldPath.empty()) {
            guard.track(cfg.exportHeightfieldPath);
            guard.track(heightfieldSidecarPath(cfg.exportHeightfieldPath));
            exportHeightfield(field.heights, cfg.exportHeightfieldPath);
        }
    } catch (const IoError& e) {
        throw PipelineError("write", e.what());
    }
    report.writeMs = timer.restartMs();
    report.totalMs =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - wholeStart)
            .count();
    guard.release();
    return report;
}

}  // namespace pebble
