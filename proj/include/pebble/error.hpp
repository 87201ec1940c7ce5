#pragma once

#include <stdexcept>
#include <string>

namespace pebble {

// File I/O failures, one kind per distinct contract error.
class IoError : public std::runtime_error {
public:
    enum class Kind { MissingFile, UnsupportedFormat, CorruptData, WriteFailed };

    IoError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

// Degenerate geometry (regions too small to trace, zero-area contours, ...).
class ShapeError : public std::runtime_error {
public:
    enum class Kind { EmptyRegion, RegionTooSmall, DegenerateDescriptor, ZeroArea };

    ShapeError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

// Invalid job configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A pipeline stage failed (CLI exit code 3). Carries the stage name.
class PipelineError : public std::runtime_error {
public:
    PipelineError(const std::string& stage, const std::string& what)
        : std::runtime_error(stage + ": " + what), stage_(stage) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

}  // namespace pebble
