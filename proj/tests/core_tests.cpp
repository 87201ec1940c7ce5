#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <random>

#include "pebble/color.hpp"
#include "pebble/image_io.hpp"

#include "helpers.hpp"

using namespace pebble;

TEST_CASE("load 1x1 white PNG", "[core]") {
    testutil::TempDir dir;
    std::string path = dir.file("white.png");
    writeImage(testutil::solidImage(1, 1, {1.0f, 1.0f, 1.0f}), path);

    RasterImage img = loadImage(path);
    REQUIRE(img.width() == 1);
    REQUIRE(img.height() == 1);
    CHECK(img.at(0, 0).r == Catch::Approx(1.0).margin(1e-6));
    CHECK(img.at(0, 0).g == Catch::Approx(1.0).margin(1e-6));
    CHECK(img.at(0, 0).b == Catch::Approx(1.0).margin(1e-6));
}

TEST_CASE("load 2x1 PPM with linearized channels", "[core]") {
    testutil::TempDir dir;
    std::string path = dir.file("pix.ppm");
    {
        std::ofstream out(path, std::ios::binary);
        out << "P6\n2 1\n255\n";
        const unsigned char bytes[6] = {255, 0, 0, 0, 0, 255};
        out.write(reinterpret_cast<const char*>(bytes), 6);
    }
    RasterImage img = loadImage(path);
    REQUIRE(img.width() == 2);
    // sRGB EOTF maps 1.0 -> 1.0 and 0.0 -> 0.0 exactly.
    CHECK(img.at(0, 0).r == Catch::Approx(1.0).margin(1e-9));
    CHECK(img.at(0, 0).g == Catch::Approx(0.0).margin(1e-9));
    CHECK(img.at(0, 0).b == Catch::Approx(0.0).margin(1e-9));
    CHECK(img.at(1, 0).r == Catch::Approx(0.0).margin(1e-9));
    CHECK(img.at(1, 0).b == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("load errors are distinct", "[core]") {
    testutil::TempDir dir;

    SECTION("missing file") {
        try {
            loadImage(dir.file("nope.png"));
            FAIL("expected IoError");
        } catch (const IoError& e) {
            CHECK(e.kind() == IoError::Kind::MissingFile);
        }
    }
    SECTION("unsupported format") {
        std::string path = dir.file("junk.bin");
        std::ofstream(path) << "definitely not an image";
        try {
            loadImage(path);
            FAIL("expected IoError");
        } catch (const IoError& e) {
            CHECK(e.kind() == IoError::Kind::UnsupportedFormat);
        }
    }
    SECTION("truncated PNG") {
        std::string good = dir.file("good.png");
        writeImage(testutil::blobImage(16, 16), good);
        auto bytes = testutil::readFileBytes(good);
        std::string bad = dir.file("bad.png");
        std::ofstream out(bad, std::ios::binary);
        out.write(reinterpret_cast<const char*>(bytes.data()),
                  static_cast<std::streamsize>(bytes.size() / 2));
        out.close();
        try {
            loadImage(bad);
            FAIL("expected IoError");
        } catch (const IoError& e) {
            CHECK(e.kind() == IoError::Kind::CorruptData);
        }
    }
}

TEST_CASE("rgbToLab reference values", "[core]") {
    LabImage white = rgbToLab(testutil::solidImage(1, 1, {1.0f, 1.0f, 1.0f}));
    CHECK(white.at(0, 0).L == Catch::Approx(100.0).margin(1e-3));
    CHECK(white.at(0, 0).a == Catch::Approx(0.0).margin(1e-3));
    CHECK(white.at(0, 0).b == Catch::Approx(0.0).margin(1e-3));

    LabImage black = rgbToLab(testutil::solidImage(1, 1, {0.0f, 0.0f, 0.0f}));
    CHECK(black.at(0, 0).L == Catch::Approx(0.0).margin(1e-6));
    CHECK(black.at(0, 0).a == Catch::Approx(0.0).margin(1e-6));
    CHECK(black.at(0, 0).b == Catch::Approx(0.0).margin(1e-6));

    // Linear red against independently computed CIE reference (D65).
    LabImage red = rgbToLab(testutil::solidImage(1, 1, {1.0f, 0.0f, 0.0f}));
    CHECK(red.at(0, 0).L == Catch::Approx(53.2408).margin(1e-3));
    CHECK(red.at(0, 0).a == Catch::Approx(80.0925).margin(1e-3));
    CHECK(red.at(0, 0).b == Catch::Approx(67.2032).margin(1e-3));
}

TEST_CASE("Lab round trip under 1e-3", "[core][property]") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<float> uni(0.0f, 1.0f);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        Rgb c{uni(rng), uni(rng), uni(rng)};
        Rgb back = labToLinearRgb(linearRgbToLab(c));
        worst = std::max({worst, static_cast<double>(std::abs(back.r - c.r)),
                          static_cast<double>(std::abs(back.g - c.g)),
                          static_cast<double>(std::abs(back.b - c.b))});
    }
    CHECK(worst < 1e-3);
}

TEST_CASE("write/load round trip within quantization", "[core]") {
    testutil::TempDir dir;
    RasterImage img = testutil::blobImage(23, 17);
    std::string path = dir.file("rt.png");
    writeImage(img, path);
    RasterImage back = loadImage(path);
    REQUIRE(back.width() == img.width());
    REQUIRE(back.height() == img.height());

    // 8-bit quantization in sRGB space: compare after one more encode step.
    double worst = 0.0;
    for (size_t i = 0; i < img.data().size(); ++i) {
        worst = std::max(worst, std::abs(linearToSrgb(img.data()[i].r) -
                                         linearToSrgb(back.data()[i].r)));
        worst = std::max(worst, std::abs(linearToSrgb(img.data()[i].g) -
                                         linearToSrgb(back.data()[i].g)));
        worst = std::max(worst, std::abs(linearToSrgb(img.data()[i].b) -
                                         linearToSrgb(back.data()[i].b)));
    }
    CHECK(worst <= 1.0 / 255.0);
}

TEST_CASE("writeImage is byte-stable and idempotent through a round trip", "[core]") {
    testutil::TempDir dir;
    RasterImage img = testutil::blobImage(31, 19);
    std::string a = dir.file("a.png");
    std::string b = dir.file("b.png");
    writeImage(img, a);
    writeImage(img, b);
    CHECK(testutil::readFileBytes(a) == testutil::readFileBytes(b));

    // write(load(write(x))) reproduces the file exactly: quantization is
    // idempotent once applied.
    RasterImage once = loadImage(a);
    std::string c = dir.file("c.png");
    writeImage(once, c);
    CHECK(testutil::readFileBytes(a) == testutil::readFileBytes(c));
}

TEST_CASE("writeImage to unwritable path fails", "[core]") {
    RasterImage img = testutil::solidImage(2, 2, {0.5f, 0.5f, 0.5f});
    try {
        writeImage(img, "/nonexistent-dir-xyz/out.png");
        FAIL("expected IoError");
    } catch (const IoError& e) {
        CHECK(e.kind() == IoError::Kind::WriteFailed);
    }
}

TEST_CASE("heightfield export", "[core]") {
    testutil::TempDir dir;

    SECTION("constant zero field") {
        ScalarField field(4, 3, 0.0);
        std::string path = dir.file("zero.png");
        exportHeightfield(field, path);
        ScalarField back = importHeightfield(path);
        for (double v : back.data()) CHECK(v == 0.0);
        std::ifstream sidecar(heightfieldSidecarPath(path));
        double lo = -1, hi = -1;
        sidecar >> lo >> hi;
        CHECK(lo == 0.0);
        CHECK(hi == 0.0);
    }

    SECTION("midpoint of a [0,2] span stores 32768 +- 1") {
        ScalarField field(3, 1, 0.0);
        field.at(0, 0) = 0.0;
        field.at(1, 0) = 1.0;
        field.at(2, 0) = 2.0;
        std::string path = dir.file("span.png");
        exportHeightfield(field, path);
        ScalarField back = importHeightfield(path);
        // Recover the stored quantized level for the middle pixel.
        long q = std::lround(back.at(1, 0) / 2.0 * 65535.0);
        CHECK(std::abs(q - 32768) <= 1);
    }

    SECTION("round trip within 2/65535 of range") {
        ScalarField field(9, 7, 0.0);
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> uni(-1.5, 3.0);
        for (double& v : field.data()) v = uni(rng);
        std::string path = dir.file("rand.png");
        exportHeightfield(field, path);
        ScalarField back = importHeightfield(path);
        double range = 4.5;
        for (size_t i = 0; i < field.data().size(); ++i)
            CHECK(std::abs(back.data()[i] - field.data()[i]) <= 2.0 / 65535.0 * range);
    }

    SECTION("unwritable path") {
        ScalarField field(2, 2, 0.0);
        CHECK_THROWS_AS(exportHeightfield(field, "/nonexistent-dir-xyz/h.png"), IoError);
    }
}
