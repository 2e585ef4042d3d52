#include "pasc/image_io.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace pasc;

namespace {

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("pasc_io_" + name);
}

}  // namespace

TEST_SUITE("image_io") {

TEST_CASE("ppm round trip quantizes to 8 bits") {
    const auto img = test::random_image(8, 12, 1);
    const auto path = temp_file("a.ppm");
    write_ppm(img, path);
    const auto back = read_ppm(path);
    CHECK(back.height() == 8);
    CHECK(back.width() == 12);
    for (std::size_t i = 0; i < img.size(); ++i) CHECK(std::abs(back.data()[i] - img.data()[i]) <= 1.0 / 255.0 + 1e-12);
    // Already-quantized images survive exactly.
    write_ppm(back, path);
    CHECK(read_ppm(path) == back);
    std::filesystem::remove(path);
}

TEST_CASE("ppm endpoints and comments") {
    const auto path = temp_file("b.ppm");
    {
        std::ofstream f(path, std::ios::binary);
        f << "P6\n# a comment\n2 1\n255\n";
        const unsigned char px[6] = {0, 255, 128, 255, 0, 0};
        f.write(reinterpret_cast<const char*>(px), 6);
    }
    const auto img = read_ppm(path);
    CHECK(img.at(0, 0, 0) == -1.0);
    CHECK(img.at(0, 0, 1) == 1.0);
    CHECK(img.at(0, 1, 0) == 1.0);
    std::filesystem::remove(path);
}

TEST_CASE("malformed files") {
    const auto path = temp_file("c.ppm");
    std::ofstream(path, std::ios::binary) << "P3\n2 2\n255\n0 0 0";
    CHECK_THROWS_AS(read_ppm(path), ConfigError);
    std::ofstream(path, std::ios::binary) << "P6\n4 4\n255\nabc";
    CHECK_THROWS_AS(read_ppm(path), ConfigError);
    CHECK_THROWS_AS(read_ppm(temp_file("missing.ppm")), ConfigError);
    std::filesystem::remove(path);
}

TEST_CASE("sidecars") {
    const auto path = temp_file("d.ppm");
    std::filesystem::remove(sidecar_path(path));
    CHECK_FALSE(read_sidecar(path).has_value());
    const ImageMeta meta{Pose(1.5, -2.25, 0.75), Scenario::OutdoorMismatch, 12345678901234ULL, 42};
    write_sidecar(meta, path);
    const auto back = read_sidecar(path);
    REQUIRE(back.has_value());
    CHECK(back->pose == meta.pose);
    CHECK(back->scenario == meta.scenario);
    CHECK(back->world_seed == meta.world_seed);
    CHECK(back->dynamics_seed == meta.dynamics_seed);
    std::ofstream(sidecar_path(path)) << "{\"pose\": 3}";
    CHECK_THROWS_AS(read_sidecar(path), ConfigError);
    std::filesystem::remove(sidecar_path(path));
}

}  // TEST_SUITE
