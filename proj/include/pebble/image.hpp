#pragma once

#include <cstdint>
#include <cstddef>
#include <vector>

namespace pebble {

struct Rgb {
    float r = 0.0f;
    float g = 0.0f;
    float b = 0.0f;
};

// Row-major grid of linear-light RGB triples, channels in [0,1].
// sRGB encoding/decoding happens only at file boundaries (image_io.hpp).
class RasterImage {
public:
    RasterImage() = default;
    RasterImage(int width, int height, Rgb fill = {})
        : width_(width), height_(height), data_(static_cast<size_t>(width) * height, fill) {}

    int width() const { return width_; }
    int height() const { return height_; }
    size_t size() const { return data_.size(); }

    Rgb& at(int x, int y) { return data_[static_cast<size_t>(y) * width_ + x]; }
    const Rgb& at(int x, int y) const { return data_[static_cast<size_t>(y) * width_ + x]; }

    std::vector<Rgb>& data() { return data_; }
    const std::vector<Rgb>& data() const { return data_; }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<Rgb> data_;
};

struct Lab {
    float L = 0.0f;  // [0,100]
    float a = 0.0f;
    float b = 0.0f;
};

class LabImage {
public:
    LabImage() = default;
    LabImage(int width, int height)
        : width_(width), height_(height), data_(static_cast<size_t>(width) * height) {}

    int width() const { return width_; }
    int height() const { return height_; }

    Lab& at(int x, int y) { return data_[static_cast<size_t>(y) * width_ + x]; }
    const Lab& at(int x, int y) const { return data_[static_cast<size_t>(y) * width_ + x]; }

    std::vector<Lab>& data() { return data_; }
    const std::vector<Lab>& data() const { return data_; }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<Lab> data_;
};

// Scalar per pixel: luminosity, distance transforms, importance maps, heights.
class ScalarField {
public:
    ScalarField() = default;
    ScalarField(int width, int height, double fill = 0.0)
        : width_(width), height_(height), data_(static_cast<size_t>(width) * height, fill) {}

    int width() const { return width_; }
    int height() const { return height_; }
    size_t size() const { return data_.size(); }

    double& at(int x, int y) { return data_[static_cast<size_t>(y) * width_ + x]; }
    double at(int x, int y) const { return data_[static_cast<size_t>(y) * width_ + x]; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<double> data_;
};

// Binary raster used for pebble masks. Stored per byte, 1 = inside.
class Mask {
public:
    Mask() = default;
    Mask(int width, int height, uint8_t fill = 0)
        : width_(width), height_(height), data_(static_cast<size_t>(width) * height, fill) {}

    int width() const { return width_; }
    int height() const { return height_; }

    uint8_t& at(int x, int y) { return data_[static_cast<size_t>(y) * width_ + x]; }
    uint8_t at(int x, int y) const { return data_[static_cast<size_t>(y) * width_ + x]; }

    bool inside(int x, int y) const {
        return x >= 0 && x < width_ && y >= 0 && y < height_ && at(x, y) != 0;
    }

    size_t countSet() const {
        size_t n = 0;
        for (uint8_t v : data_) n += (v != 0);
        return n;
    }

    std::vector<uint8_t>& data() { return data_; }
    const std::vector<uint8_t>& data() const { return data_; }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<uint8_t> data_;
};

}  // namespace pebble
