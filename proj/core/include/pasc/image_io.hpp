#pragma once

// 8-bit RGB raster files (binary PPM) with an optional JSON sidecar that
// records the pose and scenario the image was rendered for.

#include "pasc/scene.hpp"
#include "pasc/types.hpp"

#include <filesystem>
#include <optional>

namespace pasc {

/// [-1, 1] -> [0, 255], rounded; out-of-range values are clamped.
void write_ppm(const Image& img, const std::filesystem::path& path);
/// Throws ConfigError on unreadable or malformed files.
Image read_ppm(const std::filesystem::path& path);

struct ImageMeta {
    Pose pose;
    Scenario scenario = Scenario::OutdoorMatch;
    std::uint64_t world_seed = 0;
    std::uint64_t dynamics_seed = 0;
};

/// `<image>.json` next to the image file.
std::filesystem::path sidecar_path(const std::filesystem::path& image_path);
void write_sidecar(const ImageMeta& meta, const std::filesystem::path& image_path);
/// nullopt when no sidecar exists; ConfigError when it exists but is invalid.
std::optional<ImageMeta> read_sidecar(const std::filesystem::path& image_path);

}  // namespace pasc
