// Command-line driver for the pebble mosaic pipeline.
//
// Exit codes: 0 success, 2 configuration error, 3 pipeline error.

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pebble/pipeline.hpp"

namespace {

struct RawOptions {
    pebble::JobConfig cfg;
    std::vector<double> lightDir{-0.4, -0.4, 1.0};
    std::vector<double> grout{0.15};
    std::vector<std::string> dumps;
    std::string mode = "full";
    bool verbose = false;
};

pebble::JobConfig resolve(RawOptions& raw) {
    pebble::JobConfig cfg = raw.cfg;

    if (raw.mode == "full")
        cfg.mode = pebble::RenderMode::Full;
    else if (raw.mode == "untextured")
        cfg.mode = pebble::RenderMode::Untextured;
    else if (raw.mode == "layout-only")
        cfg.mode = pebble::RenderMode::LayoutOnly;
    else
        throw pebble::ConfigError("--mode must be one of: full, untextured, layout-only");

    for (const std::string& d : raw.dumps) {
        if (d == "labels")
            cfg.dumps.insert(pebble::DumpKind::Labels);
        else if (d == "contours")
            cfg.dumps.insert(pebble::DumpKind::Contours);
        else if (d == "heightfield")
            cfg.dumps.insert(pebble::DumpKind::Heightfield);
        else if (d == "stats")
            cfg.dumps.insert(pebble::DumpKind::Stats);
        else
            throw pebble::ConfigError(
                "--dump accepts: labels, contours, heightfield, stats (got '" + d + "')");
    }

    if (raw.lightDir.size() != 3)
        throw pebble::ConfigError("--light-dir needs three comma-separated components");
    cfg.lightDir = {raw.lightDir[0], raw.lightDir[1], raw.lightDir[2]};

    if (raw.grout.size() == 1) {
        float v = static_cast<float>(raw.grout[0]);
        cfg.groutColor = {v, v, v};
    } else if (raw.grout.size() == 3) {
        cfg.groutColor = {static_cast<float>(raw.grout[0]), static_cast<float>(raw.grout[1]),
                          static_cast<float>(raw.grout[2])};
    } else {
        throw pebble::ConfigError("--grout takes one gray value or r,g,b");
    }

    pebble::validateConfig(cfg);
    return cfg;
}

void echoConfig(const pebble::JobConfig& cfg) {
    std::fprintf(stderr, "input=%s\n", cfg.inputPath.c_str());
    std::fprintf(stderr, "output=%s\n", cfg.outputPath.c_str());
    std::fprintf(stderr, "pebbles=%d\n", cfg.pebbleCount);
    std::fprintf(stderr, "seed=%llu\n", static_cast<unsigned long long>(cfg.seed));
    std::fprintf(stderr, "scale=%g\n", cfg.scale);
    std::fprintf(stderr, "L=%d\n", cfg.L);
    std::fprintf(stderr, "phi-a1=%g\n", cfg.phiA1);
    std::fprintf(stderr, "t-coh=%g\n", cfg.Tcoh);
    std::fprintf(stderr, "t-dist=%g\n", cfg.Tdist);
    std::fprintf(stderr, "beta=%g\n", cfg.beta);
    std::fprintf(stderr, "compactness=%g\n", cfg.compactness);
    std::fprintf(stderr, "texture=%s\n", cfg.texturePath.c_str());
    std::fprintf(stderr, "importance=%s\n", cfg.importancePath.c_str());
    std::fprintf(stderr, "importance-factor=%g\n", cfg.importanceFactor);
    std::fprintf(stderr, "threads=%d\n", cfg.threads);
    std::fprintf(stderr, "light-dir=%g,%g,%g\n", cfg.lightDir.x, cfg.lightDir.y, cfg.lightDir.z);
    std::fprintf(stderr, "ambient=%g diffuse=%g specular=%g shininess=%g\n", cfg.ambient,
                 cfg.diffuse, cfg.specular, cfg.shininess);
    std::fprintf(stderr, "grout=%g,%g,%g\n", cfg.groutColor.r, cfg.groutColor.g, cfg.groutColor.b);
    std::fprintf(stderr, "height-scale=%g (0 = auto)\n", cfg.heightScale);
}

void printReport(const pebble::StageReport& r) {
    std::fprintf(stderr, "canvas: %dx%d, threads: %d\n", r.canvasWidth, r.canvasHeight,
                 r.threadsUsed);
    std::fprintf(stderr,
                 "pebbles: requested %d, seeded %d, starved %d, final %d, dropped %d, "
                 "degenerate %d, solver fallbacks %d\n",
                 r.pebblesRequested, r.clustersSeeded, r.clustersStarved, r.pebblesFinal,
                 r.pebblesDroppedGeometry, r.pebblesDegenerate, r.solverFallbacks);
    std::fprintf(stderr,
                 "stage ms: load %.0f, tensor %.0f, segmentation %.0f, contour %.0f, "
                 "solve %.0f, composite %.0f, render %.0f, write %.0f, total %.0f\n",
                 r.loadMs, r.tensorMs, r.segmentationMs, r.contourMs, r.solveMs, r.compositeMs,
                 r.renderMs, r.writeMs, r.totalMs);
    std::fprintf(stderr, "solver: %lld iterations total, max residual %.3e\n",
                 static_cast<long long>(r.solverIterations), r.solverMaxResidual);
}

}  // namespace

int main(int argc, char** argv) {
    RawOptions raw;
    CLI::App app{"Renders an image as a 3D pebble mosaic"};
    app.set_config("--config", "", "key=value file; command-line flags take precedence");

    app.add_option("--input", raw.cfg.inputPath, "input image (PNG or binary PPM)");
    app.add_option("--output", raw.cfg.outputPath, "output PNG path");
    app.add_option("--pebbles", raw.cfg.pebbleCount, "requested pebble count (default 2000)");
    app.add_option("--seed", raw.cfg.seed, "random seed (default 0)");
    app.add_option("--scale", raw.cfg.scale, "output scale factor (default 1)");
    app.add_option("--L", raw.cfg.L, "retained Fourier coefficients, odd (default 7)");
    app.add_option("--phi-a1", raw.cfg.phiA1, "aspect compression across edges (default 3)");
    app.add_option("--t-coh", raw.cfg.Tcoh, "coherence threshold (default 0.5)");
    app.add_option("--t-dist", raw.cfg.Tdist, "inner contour threshold (default 0.85)");
    app.add_option("--beta", raw.cfg.beta, "boundary gradient scale (default 2)");
    app.add_option("--compactness", raw.cfg.compactness, "SLIC compactness m (default 10)");
    app.add_option("--texture", raw.cfg.texturePath, "rock texture image");
    app.add_option("--importance", raw.cfg.importancePath, "importance map image");
    app.add_option("--importance-factor", raw.cfg.importanceFactor,
                   "seed density factor inside the importance mask (default 4)");
    app.add_option("--mode", raw.mode, "full | untextured | layout-only");
    app.add_option("--dump", raw.dumps, "debug dumps: labels, contours, heightfield, stats")
        ->delimiter(',');
    app.add_option("--threads", raw.cfg.threads, "worker cap, 0 = hardware (default 0)");
    app.add_option("--light-dir", raw.lightDir, "light direction x,y,z")
        ->delimiter(',')
        ->expected(1, 3);
    app.add_option("--ambient", raw.cfg.ambient, "ambient coefficient (default 0.25)");
    app.add_option("--diffuse", raw.cfg.diffuse, "diffuse coefficient (default 0.65)");
    app.add_option("--specular", raw.cfg.specular, "specular coefficient (default 0.25)");
    app.add_option("--shininess", raw.cfg.shininess, "Phong exponent (default 16)");
    app.add_option("--grout", raw.grout, "grout color, gray or r,g,b (default 0.15)")
        ->delimiter(',')
        ->expected(1, 3);
    app.add_option("--height-scale", raw.cfg.heightScale,
                   "pixels of elevation per unit height (default 0.6 * grid interval)");
    app.add_option("--export-heightfield", raw.cfg.exportHeightfieldPath,
                   "write the composite heightfield as 16-bit PNG + min/max sidecar");
    bool verbose = false;
    app.add_flag("--verbose", verbose, "echo the resolved configuration to stderr");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    }

    pebble::JobConfig cfg;
    try {
        cfg = resolve(raw);
    } catch (const pebble::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    }
    if (verbose) echoConfig(cfg);

    try {
        pebble::StageReport report = pebble::runPipeline(cfg);
        printReport(report);
    } catch (const pebble::PipelineError& e) {
        std::fprintf(stderr, "pipeline error in stage '%s': %s\n", e.stage().c_str(), e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "pipeline error: %s\n", e.what());
        return 3;
    }
    return 0;
}
