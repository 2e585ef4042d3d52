#pragma once

#include "pasc/types.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace pasc {

enum class Scenario { OutdoorMatch, OutdoorMismatch, Indoor };

std::string_view to_string(Scenario s);
/// Accepts the canonical names ("OutdoorMatch", ...); throws ArgumentError otherwise.
Scenario parse_scenario(std::string_view name);

/// Fidelity of synthesized views unless configured otherwise.
inline constexpr double kDefaultFidelity = 0.5;

struct WorldConfig {
    std::uint64_t world_seed = 1;
    std::uint64_t dynamics_seed = 1;
    int height = 32;
    int width = 64;
    Scenario scenario = Scenario::OutdoorMatch;
    /// Fidelity of the synthesized view used by make_scenario.
    double fidelity = kDefaultFidelity;
    /// Pose displacement for OutdoorMismatch, in world cells.
    int mismatch_cells = 3;
    /// Upper bound on vehicles/signs in the dynamic layer; 0 disables it.
    int max_dynamic_objects = 4;

    void validate() const;
};

/// World grid cell edge, meters.
inline constexpr double kCellSize = 12.0;

/// Axis-aligned building block owned by one world cell.
struct Building {
    std::int64_t cell_x = 0;
    std::int64_t cell_y = 0;
    double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
    double height = 0;
    std::array<double, 3> color{};

    bool contains(double x, double y) const { return x > x0 && x < x1 && y > y0 && y < y1; }
    bool operator==(const Building&) const = default;
};

/// Buildings of every cell within `radius_cells` of the pose's cell, in
/// cell-scan order. Both renderers consult exactly this list.
std::vector<Building> layout_near(const Pose& pose, std::uint64_t world_seed, int radius_cells = 7);

/// Cell radius the renderers pass to layout_near for this world.
int view_radius(const WorldConfig& cfg);

/// Everything the camera renderer produced for one view.
struct CameraLayers {
    Image static_layer;
    Image composite;
    /// One entry per pixel, true where a dynamic object was drawn.
    std::vector<bool> dynamic_mask;
    std::vector<Building> layout;
    /// Indices into `layout` of buildings visible in at least one column.
    std::vector<std::size_t> visible;
};

CameraLayers render_camera_layers(const Pose& pose, const WorldConfig& cfg);

Image render_camera_view(const Pose& pose, const WorldConfig& cfg);

/// Top-down map centered on the pose, heading pointing up. 1 meter per pixel.
Image render_birdseye(const Pose& pose, const WorldConfig& cfg);

/// Synthesis error at fidelity 0: Gaussian blur sigma (pixels), bound of a
/// per-image color offset, and per-component noise standard deviation. All
/// scale with (1 - fidelity).
inline constexpr double kSynthBlur = 1.2;
inline constexpr double kSynthOffset = 0.1;
inline constexpr double kSynthNoise = 0.28;

/// Static layer only; fidelity < 1 adds seeded blur and color perturbation.
Image synthesize_view(const Pose& pose, const WorldConfig& cfg, double fidelity);

/// High-frequency procedural clutter unrelated to any pose.
Image render_indoor(const WorldConfig& cfg);

struct ScenarioSample {
    Image target;
    Image synth;
    Scenario label = Scenario::OutdoorMatch;
    Pose pose;
};

/// Pose drawn from (world_seed, dynamics_seed), placed on a street line.
Pose scenario_pose(const WorldConfig& cfg);

ScenarioSample make_scenario(const WorldConfig& cfg);

}  // namespace pasc
