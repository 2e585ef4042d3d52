#include "pasc/diffmask.hpp"
#include "pasc/scene.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace pasc;

namespace {

WorldConfig outdoor(std::uint64_t world, std::uint64_t dyn) {
    WorldConfig w;
    w.world_seed = world;
    w.dynamics_seed = dyn;
    return w;
}

}  // namespace

TEST_SUITE("scene") {

TEST_CASE("scenario names round trip") {
    for (auto s : {Scenario::OutdoorMatch, Scenario::OutdoorMismatch, Scenario::Indoor})
        CHECK(parse_scenario(to_string(s)) == s);
    CHECK_THROWS_AS(parse_scenario("outdoor"), ArgumentError);
}

TEST_CASE("pose heading is normalized") {
    const Pose p(1.0, 2.0, -std::numbers::pi / 2);
    CHECK(p.heading == doctest::Approx(1.5 * std::numbers::pi));
    CHECK(Pose(0, 0, 4 * std::numbers::pi).heading == doctest::Approx(0.0));
}

TEST_CASE("invalid sizes are configuration errors") {
    auto w = outdoor(1, 1);
    w.height = 7;
    CHECK_THROWS_AS(render_camera_view(Pose(0, 0, 0), w), ConfigError);
    w.height = 32;
    w.width = 9;
    CHECK_THROWS_AS(render_camera_view(Pose(0, 0, 0), w), ConfigError);
}

TEST_CASE("camera view is deterministic and in range") {
    const auto w = outdoor(11, 12);
    const Pose pose(30.0, -5.0, 0.7);
    const auto a = render_camera_view(pose, w);
    const auto b = render_camera_view(pose, w);
    CHECK(a == b);
    CHECK(a.in_range());
    CHECK(a.height() == 32);
    CHECK(a.width() == 64);
}

TEST_CASE("dynamics seed only touches the dynamic layer") {
    int differing = 0;
    for (std::uint64_t s = 1; s <= 20; ++s) {
        const auto w1 = outdoor(s, 100);
        const auto w2 = outdoor(s, 200);
        const auto pose = scenario_pose(w1);
        const auto l1 = render_camera_layers(pose, w1);
        const auto l2 = render_camera_layers(pose, w2);
        CHECK(l1.static_layer == l2.static_layer);
        // Outside both dynamic footprints the composite is the static layer.
        for (int r = 0; r < w1.height; ++r)
            for (int c = 0; c < w1.width; ++c) {
                const std::size_t i = static_cast<std::size_t>(r) * w1.width + c;
                if (l1.dynamic_mask[i] || l2.dynamic_mask[i]) continue;
                for (int k = 0; k < 3; ++k) REQUIRE(l1.composite.at(r, c, k) == l2.composite.at(r, c, k));
            }
        if (!(l1.composite == l2.composite)) ++differing;
    }
    CHECK(differing > 0);
}

TEST_CASE("shifting the pose by a world cell changes the layout") {
    const auto w = outdoor(5, 5);
    const Pose a(0.0, 0.0, 0.3);
    const Pose b(kCellSize, 0.0, 0.3);
    CHECK(layout_near(a, w.world_seed) != layout_near(b, w.world_seed));
    CHECK(render_camera_layers(a, w).static_layer != render_camera_layers(b, w).static_layer);
}

TEST_CASE("bird's-eye view") {
    const auto w = outdoor(3, 4);
    const Pose pose(10.0, 20.0, 0.0);
    const auto a = render_birdseye(pose, w);
    CHECK(a == render_birdseye(pose, w));
    CHECK(a.in_range());

    SUBCASE("a quarter turn rotates the map about its center") {
        WorldConfig sq = w;
        sq.height = 64;
        sq.width = 64;
        const auto m0 = render_birdseye(Pose(10.0, 20.0, 0.0), sq);
        const auto m1 = render_birdseye(Pose(10.0, 20.0, std::numbers::pi / 2), sq);
        // Compare away from the center row/column where sampling ties can fall either way.
        int same = 0, total = 0;
        for (int r = 0; r < 64; ++r)
            for (int c = 0; c < 64; ++c) {
                // Either rotation sense is accepted; count agreement with the better one below.
                ++total;
                if (m1.at(r, c, 0) == m0.at(c, 63 - r, 0)) ++same;
            }
        int same_ccw = 0;
        for (int r = 0; r < 64; ++r)
            for (int c = 0; c < 64; ++c)
                if (m1.at(r, c, 0) == m0.at(63 - c, r, 0)) ++same_ccw;
        CHECK(std::max(same, same_ccw) >= total * 9 / 10);
        CHECK(m0 != m1);
    }

    SUBCASE("both renderers consult the same layout") {
        const auto layers = render_camera_layers(pose, w);
        CHECK(layers.layout == layout_near(pose, w.world_seed, view_radius(w)));
    }

    SUBCASE("indoor is unsupported") {
        WorldConfig in = w;
        in.scenario = Scenario::Indoor;
        CHECK_THROWS_AS(render_birdseye(pose, in), UnsupportedScenario);
        CHECK_THROWS_AS(synthesize_view(pose, in, 1.0), UnsupportedScenario);
    }
}

TEST_CASE("synthesis") {
    SUBCASE("fidelity 1 without dynamic objects equals the camera view") {
        auto w = outdoor(21, 22);
        w.max_dynamic_objects = 0;
        const auto pose = scenario_pose(w);
        CHECK(synthesize_view(pose, w, 1.0) == render_camera_view(pose, w));
    }
    SUBCASE("fidelity 1 differs from the camera view only inside dynamic footprints") {
        int with_objects = 0;
        for (std::uint64_t s = 1; s <= 20; ++s) {
            const auto w = outdoor(s, s + 1000);
            const auto pose = scenario_pose(w);
            const auto layers = render_camera_layers(pose, w);
            const auto syn = synthesize_view(pose, w, 1.0);
            bool any = false;
            for (int r = 0; r < w.height; ++r)
                for (int c = 0; c < w.width; ++c) {
                    const std::size_t i = static_cast<std::size_t>(r) * w.width + c;
                    any = any || layers.dynamic_mask[i];
                    if (layers.dynamic_mask[i]) continue;
                    for (int k = 0; k < 3; ++k) REQUIRE(syn.at(r, c, k) == layers.composite.at(r, c, k));
                }
            with_objects += any ? 1 : 0;
        }
        CHECK(with_objects > 0);
    }
    SUBCASE("reduced fidelity is deterministic, in range and imperfect") {
        const auto w = outdoor(8, 9);
        const auto pose = scenario_pose(w);
        const auto a = synthesize_view(pose, w, 0.5);
        CHECK(a == synthesize_view(pose, w, 0.5));
        CHECK(a.in_range());
        CHECK(a != synthesize_view(pose, w, 1.0));
    }
    SUBCASE("fidelity outside [0, 1] is rejected") {
        const auto w = outdoor(8, 9);
        CHECK_THROWS_AS(synthesize_view(Pose(), w, 1.5), ArgumentError);
    }
}

TEST_CASE("make_scenario") {
    SUBCASE("deterministic") {
        for (auto s : {Scenario::OutdoorMatch, Scenario::OutdoorMismatch, Scenario::Indoor}) {
            auto w = outdoor(31, 32);
            w.scenario = s;
            const auto a = make_scenario(w);
            const auto b = make_scenario(w);
            CHECK(a.target == b.target);
            CHECK(a.synth == b.synth);
            CHECK(a.label == s);
            CHECK(a.target.in_range());
            CHECK(a.synth.in_range());
        }
    }
    SUBCASE("zero ratio ordering over 50 seeds") {
        double sum[3] = {0, 0, 0};
        const Scenario order[3] = {Scenario::OutdoorMatch, Scenario::OutdoorMismatch, Scenario::Indoor};
        for (std::uint64_t s = 0; s < 50; ++s)
            for (int k = 0; k < 3; ++k) {
                auto w = outdoor(1000 + s, 2000 + s);
                w.scenario = order[k];
                const auto sample = make_scenario(w);
                sum[k] += zero_ratio(mask_diff(sample.target, sample.synth, 0.4));
            }
        CHECK(sum[0] > sum[1]);
        CHECK(sum[1] > sum[2]);
    }
}

}  // TEST_SUITE
