#include "pasc/image_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

namespace pasc {
namespace {

// Next header token, skipping whitespace and '#' comments.
std::string next_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) break;
            continue;
        }
        tok.push_back(static_cast<char>(c));
    }
    return tok;
}

int header_int(std::istream& in, const std::filesystem::path& path) {
    const std::string tok = next_token(in);
    try {
        std::size_t used = 0;
        const int v = std::stoi(tok, &used);
        if (used == tok.size() && v > 0) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError("malformed PPM header in " + path.string());
}

}  // namespace

void write_ppm(const Image& img, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << "P6\n" << img.width() << ' ' << img.height() << "\n255\n";
    std::vector<char> bytes(img.size());
    for (std::size_t i = 0; i < img.size(); ++i) {
        const double v = std::clamp((img.data()[i] + 1.0) * 127.5, 0.0, 255.0);
        bytes[i] = static_cast<char>(static_cast<unsigned char>(std::lround(v)));
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ConfigError("failed writing " + path.string());
}

Image read_ppm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path.string());
    if (next_token(in) != "P6") throw ConfigError(path.string() + " is not a binary PPM (P6)");
    const int width = header_int(in, path);
    const int height = header_int(in, path);
    if (header_int(in, path) != 255) throw ConfigError(path.string() + ": only 8-bit PPM is supported");
    Image img(height, width);
    std::vector<char> bytes(img.size());
    in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (in.gcount() != static_cast<std::streamsize>(bytes.size())) throw ConfigError(path.string() + " is truncated");
    for (std::size_t i = 0; i < img.size(); ++i)
        img.data()[i] = static_cast<unsigned char>(bytes[i]) / 127.5 - 1.0;
    return img;
}

std::filesystem::path sidecar_path(const std::filesystem::path& image_path) {
    auto p = image_path;
    p += ".json";
    return p;
}

void write_sidecar(const ImageMeta& meta, const std::filesystem::path& image_path) {
    nlohmann::json j;
    j["pose"] = {{"x", meta.pose.x}, {"y", meta.pose.y}, {"heading", meta.pose.heading}};
    j["scenario"] = std::string(to_string(meta.scenario));
    j["world_seed"] = meta.world_seed;
    j["dynamics_seed"] = meta.dynamics_seed;
    std::ofstream out(sidecar_path(image_path));
    if (!out) throw ConfigError("cannot write " + sidecar_path(image_path).string());
    out << j.dump(2) << '\n';
}

std::optional<ImageMeta> read_sidecar(const std::filesystem::path& image_path) {
    const auto path = sidecar_path(image_path);
    if (!std::filesystem::exists(path)) return std::nullopt;
    std::ifstream in(path);
    try {
        const auto j = nlohmann::json::parse(in);
        ImageMeta meta;
        const auto& pose = j.at("pose");
        meta.pose = Pose(pose.at("x").get<double>(), pose.at("y").get<double>(), pose.at("heading").get<double>());
        meta.scenario = parse_scenario(j.at("scenario").get<std::string>());
        meta.world_seed = j.value("world_seed", std::uint64_t{0});
        meta.dynamics_seed = j.value("dynamics_seed", std::uint64_t{0});
        return meta;
    } catch (const std::exception& e) {
        throw ConfigError("invalid sidecar " + path.string() + ": " + e.what());
    }
}

}  // namespace pasc
