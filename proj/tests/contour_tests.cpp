#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>
#include <set>

#include "pebble/contour.hpp"

#include "helpers.hpp"

using namespace pebble;

namespace {

Contour randomContour(int k, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-10.0, 10.0);
    Contour c;
    for (int i = 0; i < k; ++i) c.points.push_back({uni(rng), uni(rng)});
    return c;
}

double maxPointError(const Contour& a, const Contour& b) {
    double worst = 0.0;
    for (size_t i = 0; i < a.points.size(); ++i)
        worst = std::max(worst, (a.points[i] - b.points[i]).norm());
    return worst;
}

double reconstructionError(const Contour& original, const FourierDescriptor& d, int L) {
    Contour rec = reconstruct(smooth(d, L), 1.0, static_cast<int>(original.points.size()));
    double acc = 0.0;
    for (size_t i = 0; i < original.points.size(); ++i) {
        Vec2 diff = original.points[i] - rec.points[i];
        acc += diff.dot(diff);
    }
    return std::sqrt(acc / original.points.size());
}

}  // namespace

TEST_CASE("traceBoundary on a 3x3 square region", "[contour]") {
    LabelMap labels(5, 5);
    for (int y = 1; y <= 3; ++y)
        for (int x = 1; x <= 3; ++x) labels.at(x, y) = 7;

    Contour c = traceBoundary(labels, 7);
    REQUIRE(c.points.size() == 8);
    // All eight border pixel centers appear exactly once.
    std::set<std::pair<int, int>> seen;
    for (const Vec2& p : c.points) seen.insert({static_cast<int>(p.x * 2), static_cast<int>(p.y * 2)});
    CHECK(seen.size() == 8);
    for (const Vec2& p : c.points) {
        bool border = (p.x != 2.5 || p.y != 2.5);
        CHECK(border);
    }
    // Normalized orientation: negative signed area with y down.
    CHECK(signedArea(c) < 0.0);
}

TEST_CASE("traceBoundary rejects degenerate regions", "[contour]") {
    LabelMap labels(4, 4);
    labels.at(1, 1) = 3;
    try {
        traceBoundary(labels, 3);
        FAIL("expected ShapeError");
    } catch (const ShapeError& e) {
        CHECK(e.kind() == ShapeError::Kind::RegionTooSmall);
    }
    CHECK_THROWS_AS(traceBoundary(labels, 99), ShapeError);
}

TEST_CASE("traceBoundary ignores interior holes", "[contour]") {
    LabelMap labels(7, 7);
    for (int y = 1; y <= 5; ++y)
        for (int x = 1; x <= 5; ++x) labels.at(x, y) = 1;
    labels.at(3, 3) = LabelMap::kNone;  // hole

    Contour c = traceBoundary(labels, 1);
    for (const Vec2& p : c.points) {
        // Outer border pixels only; the hole ring is never visited.
        bool onOuterRing = p.x == 1.5 || p.x == 5.5 || p.y == 1.5 || p.y == 5.5;
        CHECK(onOuterRing);
    }
}

TEST_CASE("descriptor of a circle is a pure first harmonic", "[contour]") {
    Contour c = testutil::circleContour(10.0, 7.0, 5.0, 32);
    FourierDescriptor d = toDescriptor(c);
    REQUIRE(d.K == 32);
    for (int bin = 0; bin < d.K; ++bin) {
        int n = d.freqOf(bin);
        double mag = std::abs(d.coeffs[bin]);
        if (n == 0) {
            CHECK(std::abs(d.coeffs[bin] - std::complex<double>{10.0, 7.0}) < 1e-9);
        } else if (n == 1) {
            CHECK(mag == Catch::Approx(5.0).margin(1e-9));
        } else {
            CHECK(mag < 1e-9 * 5.0);
        }
    }
}

TEST_CASE("descriptor of a constant contour is DC only", "[contour]") {
    Contour c;
    for (int i = 0; i < 16; ++i) c.points.push_back({3.0, -2.0});
    FourierDescriptor d = toDescriptor(c);
    CHECK(std::abs(d.coeffs[0] - std::complex<double>{3.0, -2.0}) < 1e-12);
    for (int bin = 1; bin < d.K; ++bin) CHECK(std::abs(d.coeffs[bin]) < 1e-12);
}

TEST_CASE("descriptor matches the naive DFT oracle", "[contour]") {
    Contour c = randomContour(16, 123);
    FourierDescriptor d = toDescriptor(c);
    std::vector<std::complex<double>> z;
    for (const Vec2& p : c.points) z.emplace_back(p.x, p.y);
    auto oracle = testutil::naiveDft(z);
    for (int bin = 0; bin < d.K; ++bin) CHECK(std::abs(d.coeffs[bin] - oracle[bin]) < 1e-9);
}

TEST_CASE("smoothing", "[contour]") {
    SECTION("L=K is the identity for odd K") {
        Contour c = randomContour(15, 9);
        FourierDescriptor d = toDescriptor(c);
        FourierDescriptor s = smooth(d, 15);
        for (int bin = 0; bin < d.K; ++bin) CHECK(d.coeffs[bin] == s.coeffs[bin]);
    }
    SECTION("circle survives L=3") {
        Contour c = testutil::circleContour(4.0, 4.0, 2.5, 64);
        Contour rec = reconstruct(smooth(toDescriptor(c), 3), 1.0, 64);
        CHECK(maxPointError(c, rec) < 1e-9);
    }
    SECTION("square smooths monotonically better with larger L") {
        Contour square = testutil::squareContour(0.0, 0.0, 16.0, 32);  // K = 128
        FourierDescriptor d = toDescriptor(square);
        double e7 = reconstructionError(square, d, 7);
        double e17 = reconstructionError(square, d, 17);
        double e37 = reconstructionError(square, d, 37);
        CHECK(e7 > 0.0);
        CHECK(e17 < e7);
        CHECK(e37 < e17);
    }
    SECTION("even L is rejected") {
        FourierDescriptor d = toDescriptor(randomContour(16, 2));
        CHECK_THROWS_AS(smooth(d, 8), ShapeError);
    }
}

TEST_CASE("reconstruct", "[contour]") {
    SECTION("identity round trip") {
        Contour c = randomContour(24, 77);
        Contour rec = reconstruct(toDescriptor(c), 1.0, 24);
        CHECK(maxPointError(c, rec) < 1e-9);
    }
    SECTION("scale is linear about the origin") {
        Contour c = randomContour(12, 5);
        FourierDescriptor d = toDescriptor(c);
        Contour one = reconstruct(d, 1.0, 12);
        Contour five = reconstruct(d, 5.0, 12);
        for (size_t i = 0; i < one.points.size(); ++i) {
            CHECK(five.points[i].x == Catch::Approx(5.0 * one.points[i].x).margin(1e-9));
            CHECK(five.points[i].y == Catch::Approx(5.0 * one.points[i].y).margin(1e-9));
        }
    }
    SECTION("circle doubles its radius") {
        Contour c = testutil::circleContour(0.0, 0.0, 3.0, 48);
        Contour rec = reconstruct(toDescriptor(c), 2.0, 48);
        for (const Vec2& p : rec.points) CHECK(p.norm() == Catch::Approx(6.0).margin(1e-6));
    }
}

TEST_CASE("transform invariants", "[contour][property]") {
    Contour c = randomContour(32, 2024);
    FourierDescriptor d = toDescriptor(c);

    SECTION("Parseval") {
        double pointEnergy = 0.0;
        for (const Vec2& p : c.points) pointEnergy += p.dot(p);
        double coeffEnergy = 0.0;
        for (const auto& a : d.coeffs) coeffEnergy += std::norm(a);
        CHECK(pointEnergy == Catch::Approx(d.K * coeffEnergy).epsilon(1e-6));
    }
    SECTION("smoothing is idempotent") {
        FourierDescriptor once = smooth(d, 9);
        FourierDescriptor twice = smooth(once, 9);
        for (int bin = 0; bin < d.K; ++bin) CHECK(once.coeffs[bin] == twice.coeffs[bin]);
    }
    SECTION("scaling commutes with reconstruction") {
        FourierDescriptor s = smooth(d, 9);
        Contour at2 = reconstruct(s, 2.0, 32);
        Contour at1 = reconstruct(s, 1.0, 32);
        for (size_t i = 0; i < at1.points.size(); ++i)
            CHECK((at2.points[i] - at1.points[i] * 2.0).norm() < 1e-9);
    }
}

TEST_CASE("boundary normals", "[contour]") {
    SECTION("circle normals point at the center") {
        Contour c = testutil::circleContour(5.0, 5.0, 3.0, 64);
        FourierDescriptor d = toDescriptor(c);
        Contour pts = reconstruct(d, 1.0, 64);
        std::vector<Vec2> normals = boundaryNormals(d, 1.0, 64, {5.0, 5.0});
        for (size_t i = 0; i < normals.size(); ++i) {
            Vec2 toCenter = (Vec2{5.0, 5.0} - pts.points[i]).normalized();
            CHECK(normals[i].dot(toCenter) == Catch::Approx(1.0).margin(1e-6));
        }
    }
    SECTION("ellipse normal at the major axis end points inward") {
        Contour c;
        for (int i = 0; i < 64; ++i) {
            double t = 2.0 * std::numbers::pi * i / 64;
            c.points.push_back({8.0 * std::cos(t), 4.0 * std::sin(t)});
        }
        FourierDescriptor d = toDescriptor(c);
        std::vector<Vec2> normals = boundaryNormals(d, 1.0, 64, {0.0, 0.0});
        // Sample 0 sits at (8, 0); the inward normal is (-1, 0).
        CHECK(normals[0].x == Catch::Approx(-1.0).margin(1e-9));
        CHECK(normals[0].y == Catch::Approx(0.0).margin(1e-9));
    }
    SECTION("normals agree with finite-difference tangents") {
        Contour c = randomContour(32, 31);
        FourierDescriptor d = smooth(toDescriptor(c), 7);
        int samples = 256;
        Contour pts = reconstruct(d, 1.0, samples);
        std::complex<double> centroid = d.coeffs[0];
        std::vector<Vec2> normals =
            boundaryNormals(d, 1.0, samples, {centroid.real(), centroid.imag()});
        for (int i = 0; i < samples; ++i) {
            Vec2 prev = pts.points[(i + samples - 1) % samples];
            Vec2 next = pts.points[(i + 1) % samples];
            Vec2 tangent = (next - prev).normalized();
            // Normal is perpendicular to the central-difference tangent.
            CHECK(std::abs(normals[i].dot(tangent)) < 1e-3);
        }
    }
    SECTION("convex contour normals point inward everywhere") {
        Contour c = testutil::circleContour(0.0, 0.0, 5.0, 48);
        FourierDescriptor d = toDescriptor(c);
        Contour pts = reconstruct(d, 1.0, 48);
        std::vector<Vec2> normals = boundaryNormals(d, 1.0, 48, {0.0, 0.0});
        for (int i = 0; i < 48; ++i)
            CHECK(normals[i].dot(Vec2{0.0, 0.0} - pts.points[i]) > 0.0);
    }
}

TEST_CASE("rasterizeFill", "[contour]") {
    SECTION("axis-aligned square") {
        Contour square;
        square.points = {{0.0, 0.0}, {10.0, 0.0}, {10.0, 10.0}, {0.0, 10.0}};
        Mask mask = rasterizeFill(square, 16, 16);
        CHECK(mask.countSet() == 100);
    }
    SECTION("circle area within 5%") {
        Contour c = testutil::circleContour(16.0, 16.0, 10.0, 256);
        Mask mask = rasterizeFill(c, 32, 32);
        double area = static_cast<double>(mask.countSet());
        CHECK(area > 0.95 * std::numbers::pi * 100.0);
        CHECK(area < 1.05 * std::numbers::pi * 100.0);
    }
    SECTION("figure eight uses the even-odd rule") {
        Contour eight;
        eight.points = {{2.0, 2.0}, {14.0, 14.0}, {2.0, 14.0}, {14.0, 2.0}};
        Mask mask = rasterizeFill(eight, 16, 16);
        CHECK(mask.countSet() > 0);
        // The crossing point column splits two filled lobes.
        CHECK(mask.at(8, 4) == 1);
        CHECK(mask.at(8, 12) == 1);
        CHECK(mask.at(2, 8) == 0);
        CHECK(mask.at(14, 8) == 0);
    }
    SECTION("degenerate contour") {
        Contour line;
        line.points = {{1.0, 1.0}, {9.0, 1.0}, {5.0, 1.0}};
        CHECK_THROWS_AS(rasterizeFill(line, 16, 16), ShapeError);
    }
}

TEST_CASE("resampleUniform spaces points by arclength", "[contour]") {
    Contour square = testutil::squareContour(0.0, 0.0, 8.0, 5);  // uneven 20 points
    Contour uniform = resampleUniform(square, 64);
    REQUIRE(uniform.points.size() == 64);
    double total = perimeter(uniform);
    for (size_t i = 0; i < 64; ++i) {
        // Chords across corners are shorter than the arclength step.
        double seg = (uniform.points[(i + 1) % 64] - uniform.points[i]).norm();
        CHECK(seg >= 0.65 * total / 64);
        CHECK(seg <= 1.35 * total / 64);
    }
}
