#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace pasc {

// Error taxonomy shared by all modules.
struct ArgumentError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UnsupportedScenario : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Ordered bits, one per element, each 0 or 1.
using BitVector = std::vector<std::uint8_t>;

/// Camera position (world meters) and heading (radians, normalized to [0, 2pi)).
struct Pose {
    double x = 0.0;
    double y = 0.0;
    double heading = 0.0;

    Pose() = default;
    Pose(double x_, double y_, double heading_);

    bool operator==(const Pose&) const = default;
};

/// Row-major H x W x 3 array of reals. Images proper live in [-1, 1];
/// difference images reuse the storage with components in [-2, 2].
class Image {
public:
    Image() = default;
    Image(int height, int width, double fill = 0.0);

    int height() const { return height_; }
    int width() const { return width_; }
    std::size_t pixel_count() const { return static_cast<std::size_t>(height_) * width_; }
    std::size_t size() const { return data_.size(); }

    double& at(int row, int col, int ch) { return data_[index(row, col, ch)]; }
    double at(int row, int col, int ch) const { return data_[index(row, col, ch)]; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool same_shape(const Image& other) const {
        return height_ == other.height_ && width_ == other.width_;
    }
    /// True iff every component lies in [lo, hi].
    bool in_range(double lo = -1.0, double hi = 1.0) const;

    bool operator==(const Image&) const = default;

private:
    std::size_t index(int row, int col, int ch) const {
        return (static_cast<std::size_t>(row) * width_ + col) * 3 + ch;
    }

    int height_ = 0;
    int width_ = 0;
    std::vector<double> data_;
};

/// Masked difference p - p_syn with the threshold that produced it.
struct DiffImage {
    Image values;
    double eps = 0.0;
    /// Rounding error of each kept subtraction, so that combine() can undo
    /// mask_diff() exactly. Empty for differences that came off a decoder.
    std::vector<double> residual;
};

/// Throws ArgumentError unless a and b have the same shape.
void require_same_shape(const Image& a, const Image& b, const char* what);

}  // namespace pasc
