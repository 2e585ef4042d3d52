#pragma once

// End-to-end pipelines and the seeded sweep runner that tabulates them.

#include "pasc/codec.hpp"
#include "pasc/diffmask.hpp"
#include "pasc/phy.hpp"
#include "pasc/scene.hpp"
#include "pasc/types.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace pasc {

enum class Pipeline { PASC, JSCC, Baseline };

std::string_view to_string(Pipeline p);
Pipeline parse_pipeline(std::string_view name);

struct ResultRow {
    Pipeline pipeline = Pipeline::PASC;
    double snr_db = 0.0;
    /// Bits put on the channel.
    int bits = 0;
    std::optional<double> eps;
    Scenario scenario = Scenario::OutdoorMatch;
    int trial = 0;
    double mse = 0.0;
    double psnr_db = 0.0;
    double ssim = 0.0;
    std::optional<double> zero_ratio;
    double ber = 0.0;
    bool decode_failure = false;

    bool operator==(const ResultRow&) const = default;
};

struct PipelineOutput {
    /// nullopt when the receiver could not reconstruct anything.
    std::optional<Image> estimate;
    ResultRow row;
};

struct LinkSetup {
    OfdmConfig ofdm;
    ChannelProfile channel;
};

struct PascOptions {
    double eps = 0.4;
    CombineOptions combine;
};

/// Mask the difference against the shared image, halve it into codec range,
/// encode, send over the link, decode, double, and add back to the shared
/// image. A KB without a codec sends nothing and returns the shared image.
/// `pose` is the pose the transmitter reports and must equal kb.pose.
PipelineOutput run_pasc(const Image& p, const Pose& pose, const SharedKB& kb, const PascOptions& opts,
                        const LinkSetup& link, double snr_db, std::uint64_t seed);

/// Whole-image learned codec over the same link.
PipelineOutput run_jscc(const Image& p, const Codec& codec, const LinkSetup& link, double snr_db, std::uint64_t seed);

/// Block-DCT source code + interleaved convolutional channel code. A failed decode is
/// recorded in the row; the metrics are then those of a mid-gray frame.
PipelineOutput run_baseline(const Image& p, int quality, const LinkSetup& link, double snr_db, std::uint64_t seed);

struct SweepConfig {
    std::vector<Pipeline> pipelines;
    std::vector<double> snr_db;
    std::vector<Scenario> scenarios{Scenario::OutdoorMatch};
    int trials = 1;
    std::uint64_t master_seed = 1;
    int height = 32;
    int width = 64;
    double fidelity = kDefaultFidelity;
    double eps = 0.4;
    int baseline_quality = 75;
    LinkSetup link;
    /// Weight files keyed by "PASC" / "JSCC"; the PASC entry "none" means the zero-bit KB.
    std::map<std::string, std::string> weights;
    /// Resolved relative to this directory.
    std::filesystem::path base_dir;

    void validate() const;
};

/// JSON document; errors carry the line of the offending text.
SweepConfig parse_sweep_config(const std::string& text, const std::filesystem::path& base_dir = {});
SweepConfig load_sweep_config(const std::filesystem::path& path);

/// Seeds of one sweep point.
std::uint64_t scene_seed(std::uint64_t master, Scenario scenario, int trial);
std::uint64_t dynamics_seed(std::uint64_t master, Scenario scenario, int trial);
std::uint64_t channel_seed(std::uint64_t master, Pipeline pipeline, double snr_db, int trial);

/// Scene for (scenario, trial) as the sweep renders it.
ScenarioSample sweep_scene(const SweepConfig& cfg, Scenario scenario, int trial);

/// Every (pipeline, snr, scenario, trial) point in canonical order, run on
/// `workers` threads.
std::vector<ResultRow> run_sweep(const SweepConfig& cfg, int workers = 1);

inline constexpr const char* kCsvSchemaLine = "# pasc results schema v1";

void write_csv_header(std::ostream& out);
void write_csv_row(std::ostream& out, const ResultRow& row);
void write_csv(std::ostream& out, const std::vector<ResultRow>& rows);

/// Training images for a codec variant: halved masked differences of
/// matched outdoor scenes (PASC) or the camera views themselves (JSCC).
std::vector<Image> make_training_set(CodecVariant variant, int count, std::uint64_t seed, int height, int width,
                                     double eps = 0.4, double fidelity = kDefaultFidelity);

}  // namespace pasc
