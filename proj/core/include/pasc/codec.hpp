#pragma once

#include "pasc/types.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace pasc {

enum class CodecVariant { PASC, JSCC };

std::string_view to_string(CodecVariant v);
CodecVariant parse_codec_variant(std::string_view name);

/// Kernel sizes and down/upsampling factors of the four convolutional blocks.
inline constexpr std::array<int, 4> kKernelSizes{13, 7, 5, 3};
inline constexpr std::array<int, 4> kResample{4, 2, 2, 2};
/// Overall spatial reduction between the input and the bottleneck.
inline constexpr int kTotalDownsample = 32;

/// "PASC(1k, ε=0.4)", "JSCC(16k)", "PASC(512, ε=1)".
std::string make_codec_label(CodecVariant variant, int bits, double eps);

struct CodecConfig {
    CodecVariant variant = CodecVariant::PASC;
    int height = 32;
    int width = 64;
    std::array<int, 4> widths{8, 16, 32, 64};
    int bits_out = 512;
    /// Mask threshold the codec was trained for (PASC only).
    double eps_trained = 0.4;
    std::string label;

    void validate() const;
    /// Spatial size of the bottleneck feature map.
    int bottleneck_height() const { return height / kTotalDownsample; }
    int bottleneck_width() const { return width / kTotalDownsample; }
    /// Number of features entering the quantizer dense layer.
    int bottleneck_size() const { return widths[3] * bottleneck_height() * bottleneck_width(); }
    /// Label, or the generated one when `label` is empty.
    std::string display_label() const;
};

struct NamedTensor {
    std::string name;
    std::vector<int> shape;
    std::vector<double> values;
};

/// Ordered parameter tensors: four encoder conv blocks, the quantizer dense
/// layer, the decoder dense layer, four decoder conv blocks, and the output
/// conv. Values are always exactly representable as 32-bit floats.
struct CodecWeights {
    std::vector<NamedTensor> tensors;

    const NamedTensor& get(std::string_view name) const;
    std::size_t parameter_count() const;
    std::uint64_t content_hash() const;
    bool operator==(const CodecWeights& other) const;
};

/// Parameter names and shapes implied by a config, in storage order.
std::vector<std::pair<std::string, std::vector<int>>> expected_layout(const CodecConfig& cfg);

/// Throws ArgumentError if `w` does not match `cfg`'s layout or holds non-finite values.
void check_weights(const CodecWeights& w, const CodecConfig& cfg);

/// Seeded initialization: He-uniform for rectified layers, Glorot-uniform
/// for the two tanh layers, zero biases.
CodecWeights init_weights(const CodecConfig& cfg, std::uint64_t seed);

/// Encoder and hard-decision quantizer. Bit 1 iff the tanh output is positive.
BitVector encode(const Image& x, const CodecWeights& w, const CodecConfig& cfg);

/// Decoder; every output component lies in (-1, 1).
Image decode(const BitVector& b, const CodecWeights& w, const CodecConfig& cfg);

/// Binary symmetric channel: flips each bit independently with probability ber.
BitVector bsc(const BitVector& b, double ber, std::uint64_t rng_seed);

struct OptimizerParams {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    int batch_size = 8;
    int epochs = 30;
};

struct TrainResult {
    CodecWeights weights;
    /// Mean loss of the initial weights over the dataset (same BSC model).
    double initial_loss = 0.0;
    /// Mean training loss of each epoch.
    std::vector<double> epoch_loss;
};

/// Thrown when a training loss stops being finite.
struct TrainingDivergence : std::runtime_error {
    TrainingDivergence(const std::string& what, CodecWeights last_good, int epoch_)
        : std::runtime_error(what), checkpoint(std::move(last_good)), epoch(epoch_) {}
    CodecWeights checkpoint;
    int epoch;
};

/// Called after each epoch with the 1-based epoch number and its mean loss.
using EpochCallback = std::function<void(int epoch, double loss)>;

/// Minimizes mean squared reconstruction error through encode -> BSC ->
/// decode with a straight-through quantizer. Deterministic given the seed.
TrainResult train(const std::vector<Image>& dataset, const CodecConfig& cfg, double ber,
                  const OptimizerParams& opt, std::uint64_t rng_seed, const EpochCallback& on_epoch = {});

/// Same, starting from given weights.
TrainResult train_from(const std::vector<Image>& dataset, const CodecConfig& cfg, CodecWeights start, double ber,
                       const OptimizerParams& opt, std::uint64_t rng_seed, const EpochCallback& on_epoch = {});

/// Trained parameters together with the configuration they belong to.
struct Codec {
    CodecConfig config;
    CodecWeights weights;
};

void save_weights(const CodecWeights& w, const CodecConfig& cfg, const std::filesystem::path& path);
/// Throws ConfigError on a missing, truncated, or corrupt file.
Codec load_weights(const std::filesystem::path& path);

/// Agreed state shared by transmitter and receiver.
struct SharedKB {
    /// Null for the zero-bit configuration ("PASC(0k)").
    std::shared_ptr<const Codec> codec;
    Image shared_image;
    Pose pose;
    std::uint64_t freshness = 0;

    /// Hash over the weights, shared image, and pose; equal on both ends when in sync.
    std::uint64_t content_hash() const;
};

}  // namespace pasc
