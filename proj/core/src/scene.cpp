#include "pasc/scene.hpp"

#include "pasc/hash.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <random>

namespace pasc {
namespace {

using Rgb = std::array<double, 3>;

constexpr double kEyeHeight = 1.6;
constexpr double kMaxRange = 90.0;
constexpr double kStreetHalfWidth = 2.5;

double u01(std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

double clamp1(double v) { return std::clamp(v, -1.0, 1.0); }

Rgb lerp(const Rgb& a, const Rgb& b, double t) {
    return {a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t, a[2] + (b[2] - a[2]) * t};
}

Rgb darken(const Rgb& c, double factor) {
    return {-1.0 + (c[0] + 1.0) * factor, -1.0 + (c[1] + 1.0) * factor, -1.0 + (c[2] + 1.0) * factor};
}

void put(Image& img, int r, int c, const Rgb& col) {
    for (int k = 0; k < 3; ++k) img.at(r, c, k) = clamp1(col[k]);
}

constexpr std::array<Rgb, 6> kFacadePalette{{
    {0.55, 0.35, 0.20},    // sandstone
    {0.10, -0.25, -0.40},  // brick
    {0.30, 0.30, 0.32},    // concrete
    {-0.20, -0.10, 0.05},  // slate
    {0.70, 0.62, 0.45},    // stucco
    {-0.05, 0.15, 0.10},   // green glass
}};

struct Palette {
    Rgb horizon;
    Rgb zenith;
    Rgb ground_near;
    Rgb ground_far;
};

Palette world_palette(std::uint64_t world_seed) {
    auto jitter = [&](std::uint64_t tag, int k) {
        return 0.08 * (2.0 * u01(hash64({world_seed, tag, static_cast<std::uint64_t>(k)})) - 1.0);
    };
    Palette p{{0.55, 0.65, 0.80}, {-0.05, 0.25, 0.70}, {-0.45, -0.45, -0.42}, {-0.10, -0.10, -0.05}};
    for (int k = 0; k < 3; ++k) {
        p.horizon[k] += jitter(11, k);
        p.zenith[k] += jitter(12, k);
        p.ground_near[k] += jitter(13, k);
        p.ground_far[k] += jitter(14, k);
    }
    return p;
}

std::optional<Building> building_in_cell(std::uint64_t world_seed, std::int64_t cx, std::int64_t cy) {
    auto h = [&](std::uint64_t tag) {
        return u01(hash64({world_seed, static_cast<std::uint64_t>(cx), static_cast<std::uint64_t>(cy), tag}));
    };
    if (h(0) >= 0.55) return std::nullopt;
    Building b;
    b.cell_x = cx;
    b.cell_y = cy;
    const double bx = static_cast<double>(cx) * kCellSize;
    const double by = static_cast<double>(cy) * kCellSize;
    b.x0 = bx + kStreetHalfWidth + 1.5 * h(1);
    b.x1 = bx + kCellSize - kStreetHalfWidth - 1.5 * h(2);
    b.y0 = by + kStreetHalfWidth + 1.5 * h(3);
    b.y1 = by + kCellSize - kStreetHalfWidth - 1.5 * h(4);
    b.height = 5.0 + 19.0 * h(5);
    const auto& base = kFacadePalette[static_cast<std::size_t>(h(6) * kFacadePalette.size()) % kFacadePalette.size()];
    for (int k = 0; k < 3; ++k) b.color[k] = std::clamp(base[k] + 0.12 * (2.0 * h(7 + k) - 1.0), -0.95, 0.95);
    return b;
}

struct Hit {
    double t = std::numeric_limits<double>::infinity();
    std::size_t building = 0;
    bool x_face = false;
    double hx = 0, hy = 0;
};

// Slab test against the footprint, reporting the entry face.
bool intersect(const Building& b, double ox, double oy, double dx, double dy, double& t_out, bool& x_face) {
    double tmin = -std::numeric_limits<double>::infinity();
    double tmax = std::numeric_limits<double>::infinity();
    bool entry_x = false;
    auto slab = [&](double o, double d, double lo, double hi, bool is_x) {
        if (std::abs(d) < 1e-15) return o > lo && o < hi;
        double t0 = (lo - o) / d;
        double t1 = (hi - o) / d;
        if (t0 > t1) std::swap(t0, t1);
        if (t0 > tmin) {
            tmin = t0;
            entry_x = is_x;
        }
        tmax = std::min(tmax, t1);
        return true;
    };
    if (!slab(ox, dx, b.x0, b.x1, true)) return false;
    if (!slab(oy, dy, b.y0, b.y1, false)) return false;
    if (tmax < tmin || tmin <= 0.0) return false;
    t_out = tmin;
    x_face = entry_x;
    return true;
}

void render_static(const Pose& pose, const WorldConfig& cfg, const std::vector<Building>& layout, Image& img,
                   std::vector<std::size_t>& visible) {
    const int H = cfg.height;
    const int W = cfg.width;
    const double focal = 0.5 * W;  // 90 degree horizontal field of view
    const double horizon = 0.5 * H;
    const Palette pal = world_palette(cfg.world_seed);
    std::vector<bool> seen(layout.size(), false);

    for (int c = 0; c < W; ++c) {
        const double a = std::atan2(c + 0.5 - 0.5 * W, focal);
        const double theta = pose.heading - a;
        const double dx = std::cos(theta);
        const double dy = std::sin(theta);
        const double cos_a = std::cos(a);

        Hit hit;
        for (std::size_t i = 0; i < layout.size(); ++i) {
            const auto& b = layout[i];
            if (b.contains(pose.x, pose.y)) continue;
            double t;
            bool xf;
            if (intersect(b, pose.x, pose.y, dx, dy, t, xf) && t < hit.t && t < kMaxRange) {
                hit.t = t;
                hit.building = i;
                hit.x_face = xf;
            }
        }
        const bool has_hit = std::isfinite(hit.t);
        double z = 0, top = 0, bottom = 0;
        if (has_hit) {
            hit.hx = pose.x + hit.t * dx;
            hit.hy = pose.y + hit.t * dy;
            z = hit.t * cos_a;
            top = horizon - (layout[hit.building].height - kEyeHeight) * focal / z;
            bottom = horizon + kEyeHeight * focal / z;
        }

        for (int r = 0; r < H; ++r) {
            const double yc = r + 0.5;
            Rgb col;
            if (has_hit && yc >= top && yc <= bottom) {
                const auto& b = layout[hit.building];
                seen[hit.building] = true;
                col = darken(b.color, hit.x_face ? 0.82 : 1.0);
                const double along = hit.x_face ? hit.hy : hit.hx;
                const double hz = kEyeHeight + (horizon - yc) * z / focal;
                const double fs = along / 3.0 - std::floor(along / 3.0);
                const double fh = hz / 3.2 - std::floor(hz / 3.2);
                if (fs > 0.35 && fs < 0.75 && fh > 0.35 && fh < 0.75 && hz > 1.5 && hz < b.height - 1.0)
                    col = {-0.65, -0.55, -0.30};
                col = lerp(col, pal.horizon, 0.5 * std::min(1.0, z / 120.0));
            } else if (yc < horizon) {
                col = lerp(pal.horizon, pal.zenith, (horizon - yc) / horizon);
            } else {
                const double dg = kEyeHeight * focal / (yc - horizon);
                col = lerp(pal.ground_near, pal.ground_far, std::min(1.0, dg / 60.0));
                const double gx = pose.x + dg / cos_a * dx;
                const double gy = pose.y + dg / cos_a * dy;
                const auto parity = (static_cast<std::int64_t>(std::floor(gx / 2.0)) +
                                     static_cast<std::int64_t>(std::floor(gy / 2.0))) & 1;
                const double shade = parity ? 0.04 : -0.04;
                for (auto& v : col) v += shade;
            }
            put(img, r, c, col);
        }
    }
    visible.clear();
    for (std::size_t i = 0; i < seen.size(); ++i)
        if (seen[i]) visible.push_back(i);
}

constexpr std::array<Rgb, 6> kVehiclePalette{{
    {0.90, -0.80, -0.80},
    {-0.80, -0.60, 0.90},
    {0.90, 0.80, -0.90},
    {0.95, 0.95, 0.95},
    {-0.95, -0.95, -0.95},
    {-0.70, 0.75, -0.60},
}};

void render_dynamic(const WorldConfig& cfg, Image& img, std::vector<bool>& mask) {
    const int H = cfg.height;
    const int W = cfg.width;
    mask.assign(static_cast<std::size_t>(H) * W, false);
    if (cfg.max_dynamic_objects <= 0) return;

    std::mt19937_64 rng(hash64({cfg.dynamics_seed, 0xd7a11c0ULL}));
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const int count = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(cfg.max_dynamic_objects));

    auto paint = [&](int r, int c, const Rgb& col) {
        if (r < 0 || r >= H || c < 0 || c >= W) return;
        put(img, r, c, col);
        mask[static_cast<std::size_t>(r) * W + c] = true;
    };

    for (int i = 0; i < count; ++i) {
        const Rgb col = kVehiclePalette[rng() % kVehiclePalette.size()];
        if (uni(rng) < 0.7) {
            // vehicle: body with a darker cabin band, standing on the ground plane
            const double w = W * (0.12 + 0.2 * uni(rng));
            const double h = H * (0.12 + 0.14 * uni(rng));
            const double bottom = H * (0.56 + 0.44 * uni(rng));
            const double left = (W - w) * uni(rng);
            const Rgb cabin = darken(col, 0.45);
            for (int r = 0; r < H; ++r) {
                const double yc = r + 0.5;
                if (yc < bottom - h || yc > bottom) continue;
                for (int c = 0; c < W; ++c) {
                    const double xc = c + 0.5;
                    if (xc < left || xc > left + w) continue;
                    paint(r, c, (yc < bottom - 0.6 * h && xc > left + 0.2 * w && xc < left + 0.8 * w) ? cabin : col);
                }
            }
        } else {
            // sign: disc on a pole
            const double radius = std::max(1.5, H * (0.05 + 0.07 * uni(rng)));
            const double cy = H * (0.2 + 0.3 * uni(rng));
            const double cx = radius + (W - 2 * radius) * uni(rng);
            const Rgb pole{0.2, 0.2, 0.2};
            for (int r = 0; r < H; ++r) {
                for (int c = 0; c < W; ++c) {
                    const double dx = c + 0.5 - cx;
                    const double dy = r + 0.5 - cy;
                    if (dx * dx + dy * dy <= radius * radius)
                        paint(r, c, col);
                    else if (std::abs(dx) <= 0.5 && r + 0.5 > cy && r + 0.5 < 0.5 * H + radius * 2.5)
                        paint(r, c, pole);
                }
            }
        }
    }
}

void require_outdoor(const WorldConfig& cfg, const char* op) {
    if (cfg.scenario == Scenario::Indoor)
        throw UnsupportedScenario(std::string(op) + ": Indoor scenario has no position-derived view");
}

Image gaussian_blur(const Image& src, double sigma) {
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(2 * radius + 1);
    double sum = 0;
    for (int i = -radius; i <= radius; ++i) sum += kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    for (auto& k : kernel) k /= sum;

    const int H = src.height();
    const int W = src.width();
    Image tmp(H, W), out(H, W);
    for (int r = 0; r < H; ++r)
        for (int c = 0; c < W; ++c)
            for (int k = 0; k < 3; ++k) {
                double acc = 0;
                for (int i = -radius; i <= radius; ++i) acc += kernel[i + radius] * src.at(r, std::clamp(c + i, 0, W - 1), k);
                tmp.at(r, c, k) = acc;
            }
    for (int r = 0; r < H; ++r)
        for (int c = 0; c < W; ++c)
            for (int k = 0; k < 3; ++k) {
                double acc = 0;
                for (int i = -radius; i <= radius; ++i) acc += kernel[i + radius] * tmp.at(std::clamp(r + i, 0, H - 1), c, k);
                out.at(r, c, k) = acc;
            }
    return out;
}

}  // namespace

int view_radius(const WorldConfig& cfg) {
    const double half_diag = 0.5 * std::hypot(cfg.height, cfg.width);  // 1 m per bird's-eye pixel
    const int needed = static_cast<int>(std::ceil(std::max(half_diag, kMaxRange) / kCellSize)) + 1;
    return std::max(7, needed);
}


std::string_view to_string(Scenario s) {
    switch (s) {
        case Scenario::OutdoorMatch: return "OutdoorMatch";
        case Scenario::OutdoorMismatch: return "OutdoorMismatch";
        case Scenario::Indoor: return "Indoor";
    }
    return "?";
}

Scenario parse_scenario(std::string_view name) {
    if (name == "OutdoorMatch") return Scenario::OutdoorMatch;
    if (name == "OutdoorMismatch") return Scenario::OutdoorMismatch;
    if (name == "Indoor") return Scenario::Indoor;
    throw ArgumentError("unknown scenario '" + std::string(name) + "'");
}

void WorldConfig::validate() const {
    auto ok = [](int d) { return d >= 8 && d % 2 == 0 && d <= 4096; };
    if (!ok(height) || !ok(width))
        throw ConfigError("image size must be even and at least 8 (got " + std::to_string(height) + "x" +
                          std::to_string(width) + ")");
    if (!(fidelity >= 0.0 && fidelity <= 1.0)) throw ConfigError("fidelity must lie in [0, 1]");
    if (mismatch_cells < 0) throw ConfigError("mismatch displacement must be nonnegative");
    if (max_dynamic_objects < 0) throw ConfigError("max_dynamic_objects must be nonnegative");
}

std::vector<Building> layout_near(const Pose& pose, std::uint64_t world_seed, int radius_cells) {
    const auto cx0 = static_cast<std::int64_t>(std::floor(pose.x / kCellSize));
    const auto cy0 = static_cast<std::int64_t>(std::floor(pose.y / kCellSize));
    std::vector<Building> out;
    for (std::int64_t cy = cy0 - radius_cells; cy <= cy0 + radius_cells; ++cy)
        for (std::int64_t cx = cx0 - radius_cells; cx <= cx0 + radius_cells; ++cx)
            if (auto b = building_in_cell(world_seed, cx, cy)) out.push_back(*b);
    return out;
}

CameraLayers render_camera_layers(const Pose& pose, const WorldConfig& cfg) {
    cfg.validate();
    require_outdoor(cfg, "render_camera_view");
    CameraLayers layers;
    layers.layout = layout_near(pose, cfg.world_seed, view_radius(cfg));
    layers.static_layer = Image(cfg.height, cfg.width);
    render_static(pose, cfg, layers.layout, layers.static_layer, layers.visible);
    layers.composite = layers.static_layer;
    render_dynamic(cfg, layers.composite, layers.dynamic_mask);
    return layers;
}

Image render_camera_view(const Pose& pose, const WorldConfig& cfg) {
    return render_camera_layers(pose, cfg).composite;
}

Image render_birdseye(const Pose& pose, const WorldConfig& cfg) {
    cfg.validate();
    require_outdoor(cfg, "render_birdseye");
    const auto layout = layout_near(pose, cfg.world_seed, view_radius(cfg));
    const int H = cfg.height;
    const int W = cfg.width;
    const double fx = std::cos(pose.heading), fy = std::sin(pose.heading);
    const double rx = std::sin(pose.heading), ry = -std::cos(pose.heading);
    const Rgb ground{-0.35, -0.35, -0.30};
    const Rgb road{-0.10, -0.10, -0.10};

    Image img(H, W);
    for (int r = 0; r < H; ++r) {
        for (int c = 0; c < W; ++c) {
            const double u = c + 0.5 - 0.5 * W;
            const double v = 0.5 * H - r - 0.5;
            const double wx = pose.x + v * fx + u * rx;
            const double wy = pose.y + v * fy + u * ry;
            Rgb col = ground;
            const double mx = wx - kCellSize * std::round(wx / kCellSize);
            const double my = wy - kCellSize * std::round(wy / kCellSize);
            if (std::abs(mx) < 1.0 || std::abs(my) < 1.0) col = road;
            for (const auto& b : layout) {
                if (b.contains(wx, wy)) {
                    const double lift = 0.2 * b.height / 24.0;
                    col = {b.color[0] + lift, b.color[1] + lift, b.color[2] + lift};
                    break;
                }
            }
            put(img, r, c, col);
        }
    }
    return img;
}

Image synthesize_view(const Pose& pose, const WorldConfig& cfg, double fidelity) {
    cfg.validate();
    require_outdoor(cfg, "synthesize_view");
    if (!(fidelity >= 0.0 && fidelity <= 1.0)) throw ArgumentError("fidelity must lie in [0, 1]");
    const auto layout = layout_near(pose, cfg.world_seed, view_radius(cfg));
    Image img(cfg.height, cfg.width);
    std::vector<std::size_t> visible;
    render_static(pose, cfg, layout, img, visible);
    if (fidelity >= 1.0) return img;

    const double loss = 1.0 - fidelity;
    const double sigma = kSynthBlur * loss;
    if (sigma > 1e-3) img = gaussian_blur(img, sigma);

    std::mt19937_64 rng(hash64({cfg.world_seed, double_bits(pose.x), double_bits(pose.y),
                                double_bits(pose.heading), 0x5e17ULL}));
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Rgb offset;
    for (auto& o : offset) o = kSynthOffset * loss * uni(rng);
    for (int r = 0; r < img.height(); ++r)
        for (int c = 0; c < img.width(); ++c)
            for (int k = 0; k < 3; ++k)
                img.at(r, c, k) = clamp1(img.at(r, c, k) + offset[k] + kSynthNoise * loss * gauss(rng));
    return img;
}

Image render_indoor(const WorldConfig& cfg) {
    cfg.validate();
    const int H = cfg.height;
    const int W = cfg.width;
    std::mt19937_64 rng(hash64({cfg.world_seed, cfg.dynamics_seed, 0x1d00ULL}));
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    auto color = [&] { return Rgb{2 * uni(rng) - 1, 2 * uni(rng) - 1, 2 * uni(rng) - 1}; };

    Image img(H, W);
    const Rgb wall = color();
    for (int r = 0; r < H; ++r)
        for (int c = 0; c < W; ++c) put(img, r, c, wall);

    const double area_scale = static_cast<double>(H) * W / (32.0 * 64.0);
    const int shapes = static_cast<int>((50 + rng() % 40) * std::sqrt(area_scale));
    for (int s = 0; s < shapes; ++s) {
        const Rgb a = color();
        const Rgb b = color();
        const int kind = static_cast<int>(rng() % 3);
        const double cx = W * uni(rng);
        const double cy = H * uni(rng);
        const double sx = 1.0 + W * 0.15 * uni(rng);
        const double sy = 1.0 + H * 0.25 * uni(rng);
        const int period = 1 + static_cast<int>(rng() % 3);
        for (int r = 0; r < H; ++r) {
            for (int c = 0; c < W; ++c) {
                const double dx = (c + 0.5 - cx) / sx;
                const double dy = (r + 0.5 - cy) / sy;
                bool inside = false;
                bool alt = false;
                switch (kind) {
                    case 0:  // checkered box
                        inside = std::abs(dx) <= 1 && std::abs(dy) <= 1;
                        alt = ((r / period) + (c / period)) & 1;
                        break;
                    case 1:  // disc
                        inside = dx * dx + dy * dy <= 1;
                        break;
                    default:  // striped panel
                        inside = std::abs(dx) <= 1 && std::abs(dy) <= 1;
                        alt = (c / period) & 1;
                        break;
                }
                if (inside) put(img, r, c, alt ? b : a);
            }
        }
    }
    std::normal_distribution<double> gauss(0.0, 0.08);
    for (auto& v : img.data()) v = clamp1(v + gauss(rng));
    return img;
}

Pose scenario_pose(const WorldConfig& cfg) {
    const auto h = [&](std::uint64_t tag) { return u01(hash64({cfg.world_seed, cfg.dynamics_seed, tag})); };
    const double kx = std::floor(81.0 * h(1)) - 40.0;
    const double ky = std::floor(81.0 * h(2)) - 40.0;
    // On a north-south street line, looking roughly along or across it.
    return Pose(kx * kCellSize, (ky + h(3)) * kCellSize, 2.0 * std::numbers::pi * h(4));
}

ScenarioSample make_scenario(const WorldConfig& cfg) {
    cfg.validate();
    ScenarioSample out;
    out.label = cfg.scenario;
    out.pose = scenario_pose(cfg);

    WorldConfig outdoor = cfg;
    outdoor.scenario = Scenario::OutdoorMatch;

    switch (cfg.scenario) {
        case Scenario::OutdoorMatch:
            out.target = render_camera_view(out.pose, outdoor);
            out.synth = synthesize_view(out.pose, outdoor, cfg.fidelity);
            break;
        case Scenario::OutdoorMismatch: {
            out.target = render_camera_view(out.pose, outdoor);
            const Pose stale(out.pose.x + cfg.mismatch_cells * kCellSize, out.pose.y, out.pose.heading);
            out.synth = synthesize_view(stale, outdoor, cfg.fidelity);
            break;
        }
        case Scenario::Indoor:
            out.target = render_indoor(cfg);
            out.synth = synthesize_view(out.pose, outdoor, cfg.fidelity);
            break;
    }
    return out;
}

}  // namespace pasc
