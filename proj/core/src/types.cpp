#include "pasc/types.hpp"

#include "pasc/hash.hpp"

#include <bit>
#include <cmath>
#include <numbers>

namespace pasc {

Pose::Pose(double x_, double y_, double heading_) : x(x_), y(y_) {
    if (!std::isfinite(x_) || !std::isfinite(y_) || !std::isfinite(heading_))
        throw ArgumentError("pose components must be finite");
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double h = std::fmod(heading_, two_pi);
    if (h < 0.0) h += two_pi;
    if (h >= two_pi) h = 0.0;
    heading = h;
}

Image::Image(int height, int width, double fill)
    : height_(height), width_(width) {
    if (height < 0 || width < 0) throw ArgumentError("negative image size");
    data_.assign(static_cast<std::size_t>(height) * width * 3, fill);
}

bool Image::in_range(double lo, double hi) const {
    for (double v : data_)
        if (!(v >= lo && v <= hi)) return false;
    return true;
}

void require_same_shape(const Image& a, const Image& b, const char* what) {
    if (!a.same_shape(b))
        throw ArgumentError(std::string(what) + ": image shape mismatch (" +
                            std::to_string(a.height()) + "x" + std::to_string(a.width()) + " vs " +
                            std::to_string(b.height()) + "x" + std::to_string(b.width()) + ")");
}

std::uint64_t double_bits(double v) { return std::bit_cast<std::uint64_t>(v); }

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes, std::uint64_t h) {
    for (auto b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace pasc
