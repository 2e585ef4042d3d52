#include "pasc/codec.hpp"

#include "pasc/hash.hpp"
#include "pasc/nn.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace pasc {

std::string_view to_string(CodecVariant v) { return v == CodecVariant::PASC ? "PASC" : "JSCC"; }

CodecVariant parse_codec_variant(std::string_view name) {
    if (name == "PASC") return CodecVariant::PASC;
    if (name == "JSCC") return CodecVariant::JSCC;
    throw ArgumentError("unknown codec variant '" + std::string(name) + "'");
}

namespace {

std::string format_bits(int bits) {
    if (bits > 0 && bits % 1000 == 0) return std::to_string(bits / 1000) + "k";
    return std::to_string(bits);
}

std::string format_real(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

}  // namespace

std::string make_codec_label(CodecVariant variant, int bits, double eps) {
    if (variant == CodecVariant::JSCC) return "JSCC(" + format_bits(bits) + ")";
    return "PASC(" + format_bits(bits) + ", \xCE\xB5=" + format_real(eps) + ")";
}

void CodecConfig::validate() const {
    if (bits_out <= 0) throw ConfigError("codec bits_out must be positive");
    for (int w : widths)
        if (w <= 0) throw ConfigError("codec channel widths must be positive");
    if (height <= 0 || width <= 0 || height % kTotalDownsample != 0 || width % kTotalDownsample != 0)
        throw ConfigError("codec input size must be divisible by 32 (got " + std::to_string(height) + "x" +
                          std::to_string(width) + ")");
    if (variant == CodecVariant::PASC && !(eps_trained >= 0.0)) throw ConfigError("eps_trained must be nonnegative");
}

std::string CodecConfig::display_label() const {
    return label.empty() ? make_codec_label(variant, bits_out, eps_trained) : label;
}

const NamedTensor& CodecWeights::get(std::string_view name) const {
    for (const auto& t : tensors)
        if (t.name == name) return t;
    throw ArgumentError("no weight tensor named '" + std::string(name) + "'");
}

std::size_t CodecWeights::parameter_count() const {
    std::size_t n = 0;
    for (const auto& t : tensors) n += t.values.size();
    return n;
}

std::uint64_t CodecWeights::content_hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& t : tensors) {
        h = fnv1a64({reinterpret_cast<const std::uint8_t*>(t.name.data()), t.name.size()}, h);
        for (int d : t.shape) h = hash64({h, static_cast<std::uint64_t>(d)});
        for (double v : t.values) {
            const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
            h = fnv1a64({reinterpret_cast<const std::uint8_t*>(&bits), sizeof bits}, h);
        }
    }
    return h;
}

bool CodecWeights::operator==(const CodecWeights& other) const {
    if (tensors.size() != other.tensors.size()) return false;
    for (std::size_t i = 0; i < tensors.size(); ++i) {
        const auto& a = tensors[i];
        const auto& b = other.tensors[i];
        if (a.name != b.name || a.shape != b.shape || a.values != b.values) return false;
    }
    return true;
}

std::vector<std::pair<std::string, std::vector<int>>> expected_layout(const CodecConfig& cfg) {
    std::vector<std::pair<std::string, std::vector<int>>> out;
    int cin = 3;
    for (int i = 0; i < 4; ++i) {
        const std::string p = "enc.conv" + std::to_string(i + 1);
        out.push_back({p + ".weight", {cfg.widths[i], cin, kKernelSizes[i], kKernelSizes[i]}});
        out.push_back({p + ".bias", {cfg.widths[i]}});
        cin = cfg.widths[i];
    }
    const int flat = cfg.bottleneck_size();
    out.push_back({"enc.quant.weight", {cfg.bits_out, flat}});
    out.push_back({"enc.quant.bias", {cfg.bits_out}});
    out.push_back({"dec.dense.weight", {flat, cfg.bits_out}});
    out.push_back({"dec.dense.bias", {flat}});
    // Decoder blocks mirror the encoder: widths and kernels in reverse order.
    const std::array<int, 4> dec_out{cfg.widths[2], cfg.widths[1], cfg.widths[0], cfg.widths[0]};
    cin = cfg.widths[3];
    for (int i = 0; i < 4; ++i) {
        const std::string p = "dec.conv" + std::to_string(i + 1);
        const int k = kKernelSizes[3 - i];
        out.push_back({p + ".weight", {dec_out[i], cin, k, k}});
        out.push_back({p + ".bias", {dec_out[i]}});
        cin = dec_out[i];
    }
    out.push_back({"dec.out.weight", {3, cin, 3, 3}});
    out.push_back({"dec.out.bias", {3}});
    return out;
}

namespace {

std::size_t element_count(const std::vector<int>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                           [](std::size_t a, int d) { return a * static_cast<std::size_t>(d); });
}

void check_shapes(const CodecWeights& w, const CodecConfig& cfg) {
    const auto layout = expected_layout(cfg);
    if (w.tensors.size() != layout.size())
        throw ArgumentError("weights hold " + std::to_string(w.tensors.size()) + " tensors, config expects " +
                            std::to_string(layout.size()));
    for (std::size_t i = 0; i < layout.size(); ++i) {
        const auto& t = w.tensors[i];
        if (t.name != layout[i].first || t.shape != layout[i].second || t.values.size() != element_count(t.shape))
            throw ArgumentError("weight tensor '" + t.name + "' does not match the codec config (expected '" +
                                layout[i].first + "')");
    }
}

}  // namespace

void check_weights(const CodecWeights& w, const CodecConfig& cfg) {
    check_shapes(w, cfg);
    for (const auto& t : w.tensors)
        for (double v : t.values)
            if (!std::isfinite(v)) throw ArgumentError("weight tensor '" + t.name + "' holds a non-finite value");
}

CodecWeights init_weights(const CodecConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    std::mt19937_64 rng(hash64({seed, 0x1417ULL}));
    CodecWeights w;
    for (const auto& [name, shape] : expected_layout(cfg)) {
        NamedTensor t{name, shape, std::vector<double>(element_count(shape), 0.0)};
        if (shape.size() > 1) {
            const double fan_in = static_cast<double>(element_count(shape)) / shape[0];
            const double fan_out = static_cast<double>(element_count(shape)) / shape[1];
            const bool tanh_layer = name == "enc.quant.weight" || name == "dec.out.weight";
            const double limit = tanh_layer ? std::sqrt(6.0 / (fan_in + fan_out)) : std::sqrt(6.0 / fan_in);
            std::uniform_real_distribution<double> dist(-limit, limit);
            for (auto& v : t.values) v = dist(rng);
            nn::round_to_float(t.values);
        }
        w.tensors.push_back(std::move(t));
    }
    return w;
}

namespace {

void require_input(const Image& x, const CodecConfig& cfg) {
    if (x.height() != cfg.height || x.width() != cfg.width)
        throw ArgumentError("codec input is " + std::to_string(x.height()) + "x" + std::to_string(x.width()) +
                            ", config expects " + std::to_string(cfg.height) + "x" + std::to_string(cfg.width));
}

}  // namespace

BitVector encode(const Image& x, const CodecWeights& w, const CodecConfig& cfg) {
    cfg.validate();
    require_input(x, cfg);
    check_shapes(w, cfg);
    const auto t = nn::encoder_soft(w, cfg, x);
    BitVector bits(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) bits[i] = t[i] > 0.0 ? 1 : 0;
    return bits;
}

Image decode(const BitVector& b, const CodecWeights& w, const CodecConfig& cfg) {
    cfg.validate();
    check_shapes(w, cfg);
    if (b.size() != static_cast<std::size_t>(cfg.bits_out))
        throw ArgumentError("decode: expected " + std::to_string(cfg.bits_out) + " bits, got " + std::to_string(b.size()));
    std::vector<double> symbols(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) symbols[i] = b[i] ? 1.0 : -1.0;
    const auto y = nn::decoder_soft(w, cfg, symbols);
    return nn::from_chw(y, cfg.height, cfg.width);
}

BitVector bsc(const BitVector& b, double ber, std::uint64_t rng_seed) {
    if (!(ber >= 0.0 && ber <= 1.0)) throw ArgumentError("bsc: ber must lie in [0, 1]");
    BitVector out = b;
    if (ber == 0.0) return out;
    std::mt19937_64 rng(rng_seed);
    std::bernoulli_distribution flip(ber);
    for (auto& bit : out)
        if (flip(rng)) bit ^= 1;
    return out;
}

namespace {

std::vector<std::uint8_t> draw_flips(int bits, double ber, std::uint64_t seed) {
    std::vector<std::uint8_t> flips;
    if (ber <= 0.0) return flips;
    flips.resize(bits);
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution flip(ber);
    for (auto& f : flips) f = flip(rng) ? 1 : 0;
    return flips;
}

void check_dataset(const std::vector<Image>& dataset, const CodecConfig& cfg) {
    if (dataset.empty()) throw ArgumentError("train: dataset is empty");
    for (const auto& x : dataset) require_input(x, cfg);
}

}  // namespace

TrainResult train(const std::vector<Image>& dataset, const CodecConfig& cfg, double ber, const OptimizerParams& opt,
                  std::uint64_t rng_seed, const EpochCallback& on_epoch) {
    return train_from(dataset, cfg, init_weights(cfg, rng_seed), ber, opt, rng_seed, on_epoch);
}

TrainResult train_from(const std::vector<Image>& dataset, const CodecConfig& cfg, CodecWeights start, double ber,
                       const OptimizerParams& opt, std::uint64_t rng_seed, const EpochCallback& on_epoch) {
    cfg.validate();
    check_weights(start, cfg);
    check_dataset(dataset, cfg);
    if (!(ber >= 0.0 && ber <= 1.0)) throw ArgumentError("train: ber must lie in [0, 1]");
    if (opt.batch_size <= 0 || opt.epochs < 0) throw ArgumentError("train: batch size and epochs must be positive");

    TrainResult result;
    result.weights = std::move(start);
    auto& w = result.weights;

    double init = 0.0;
    for (std::size_t i = 0; i < dataset.size(); ++i)
        init += nn::autoencoder_step(w, cfg, dataset[i], draw_flips(cfg.bits_out, ber, hash64({rng_seed, 0x1a17ULL, i})),
                                     nullptr);
    result.initial_loss = init / static_cast<double>(dataset.size());

    // Adam moments
    nn::Gradients m = nn::zero_gradients(w);
    nn::Gradients v = nn::zero_gradients(w);
    nn::Gradients g = nn::zero_gradients(w);
    long step = 0;
    CodecWeights checkpoint = w;

    std::vector<std::size_t> order(dataset.size());
    nn::DenseFactors dense;
    for (int epoch = 0; epoch < opt.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::mt19937_64 shuffler(hash64({rng_seed, 0x5f1eULL, static_cast<std::uint64_t>(epoch)}));
        std::shuffle(order.begin(), order.end(), shuffler);

        double epoch_loss = 0.0;
        for (std::size_t start_idx = 0; start_idx < order.size(); start_idx += opt.batch_size) {
            const std::size_t end_idx = std::min(order.size(), start_idx + static_cast<std::size_t>(opt.batch_size));
            for (auto& t : g) std::fill(t.begin(), t.end(), 0.0);
            for (std::size_t j = start_idx; j < end_idx; ++j) {
                const auto flips =
                    draw_flips(cfg.bits_out, ber, hash64({rng_seed, static_cast<std::uint64_t>(epoch), j}));
                const double loss = nn::autoencoder_step(w, cfg, dataset[order[j]], flips, &g, &dense);
                if (!std::isfinite(loss))
                    throw TrainingDivergence("training loss became non-finite in epoch " + std::to_string(epoch + 1),
                                             checkpoint, epoch);
                epoch_loss += loss;
            }
            nn::flush_dense(dense, g);
            const double inv_batch = 1.0 / static_cast<double>(end_idx - start_idx);
            ++step;
            const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(step));
            const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(step));
            for (std::size_t t = 0; t < w.tensors.size(); ++t) {
                auto& p = w.tensors[t].values;
                for (std::size_t i = 0; i < p.size(); ++i) {
                    const double gi = g[t][i] * inv_batch;
                    m[t][i] = opt.beta1 * m[t][i] + (1.0 - opt.beta1) * gi;
                    v[t][i] = opt.beta2 * v[t][i] + (1.0 - opt.beta2) * gi * gi;
                    p[i] -= opt.learning_rate * (m[t][i] / c1) / (std::sqrt(v[t][i] / c2) + opt.epsilon);
                }
                nn::round_to_float(p);
            }
        }
        epoch_loss /= static_cast<double>(dataset.size());
        if (!std::isfinite(epoch_loss))
            throw TrainingDivergence("training loss became non-finite in epoch " + std::to_string(epoch + 1), checkpoint,
                                     epoch);
        checkpoint = w;
        result.epoch_loss.push_back(epoch_loss);
        if (on_epoch) on_epoch(epoch + 1, epoch_loss);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Weight file: "PASCW1", u32 config length, config JSON, u32 tensor count,
// per tensor (u32 name length, name, u32 rank, u32 dims..., f32 values),
// then u64 FNV-1a of everything between the magic and the checksum.
// All integers and floats little-endian.

namespace {

constexpr char kMagic[] = "PASCW1";
constexpr std::size_t kMagicLen = 6;

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

struct Reader {
    const std::string& buf;
    std::size_t pos;
    std::size_t end;

    void need(std::size_t n) const {
        if (end - pos < n) throw ConfigError("weight file is truncated");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
        pos += 4;
        return v;
    }
    std::string bytes(std::size_t n) {
        need(n);
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
};

nlohmann::json config_to_json(const CodecConfig& cfg) {
    return {{"variant", std::string(to_string(cfg.variant))},
            {"height", cfg.height},
            {"width", cfg.width},
            {"widths", cfg.widths},
            {"bits_out", cfg.bits_out},
            {"eps_trained", cfg.eps_trained},
            {"label", cfg.display_label()}};
}

CodecConfig config_from_json(const nlohmann::json& j) {
    CodecConfig cfg;
    cfg.variant = parse_codec_variant(j.at("variant").get<std::string>());
    cfg.height = j.at("height").get<int>();
    cfg.width = j.at("width").get<int>();
    cfg.widths = j.at("widths").get<std::array<int, 4>>();
    cfg.bits_out = j.at("bits_out").get<int>();
    cfg.eps_trained = j.at("eps_trained").get<double>();
    cfg.label = j.at("label").get<std::string>();
    return cfg;
}

}  // namespace

void save_weights(const CodecWeights& w, const CodecConfig& cfg, const std::filesystem::path& path) {
    cfg.validate();
    check_weights(w, cfg);
    std::string payload;
    const std::string config_text = config_to_json(cfg).dump();
    put_u32(payload, static_cast<std::uint32_t>(config_text.size()));
    payload += config_text;
    put_u32(payload, static_cast<std::uint32_t>(w.tensors.size()));
    for (const auto& t : w.tensors) {
        put_u32(payload, static_cast<std::uint32_t>(t.name.size()));
        payload += t.name;
        put_u32(payload, static_cast<std::uint32_t>(t.shape.size()));
        for (int d : t.shape) put_u32(payload, static_cast<std::uint32_t>(d));
        for (double v : t.values) put_u32(payload, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
    const auto checksum = fnv1a64({reinterpret_cast<const std::uint8_t*>(payload.data()), payload.size()});

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot open '" + path.string() + "' for writing");
    out.write(kMagic, kMagicLen);
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    std::string tail;
    put_u64(tail, checksum);
    out.write(tail.data(), static_cast<std::streamsize>(tail.size()));
    if (!out) throw ConfigError("failed writing '" + path.string() + "'");
}

Codec load_weights(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open weight file '" + path.string() + "'");
    const std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (buf.size() < kMagicLen + 8 || buf.compare(0, kMagicLen, kMagic) != 0)
        throw ConfigError("'" + path.string() + "' is not a codec weight file");

    const std::size_t payload_end = buf.size() - 8;
    std::uint64_t stored = 0;
    for (int i = 0; i < 8; ++i)
        stored |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[payload_end + i])) << (8 * i);
    const auto actual = fnv1a64({reinterpret_cast<const std::uint8_t*>(buf.data()) + kMagicLen, payload_end - kMagicLen});
    if (stored != actual) throw ConfigError("weight file '" + path.string() + "' fails its checksum");

    Reader r{buf, kMagicLen, payload_end};
    Codec codec;
    try {
        codec.config = config_from_json(nlohmann::json::parse(r.bytes(r.u32())));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("weight file config record is invalid: ") + e.what());
    }
    codec.config.validate();

    const std::uint32_t count = r.u32();
    const auto layout = expected_layout(codec.config);
    if (count != layout.size()) throw ConfigError("weight file tensor count does not match its config");
    for (std::uint32_t i = 0; i < count; ++i) {
        NamedTensor t;
        t.name = r.bytes(r.u32());
        const std::uint32_t rank = r.u32();
        if (rank > 8) throw ConfigError("weight file tensor rank is implausible");
        for (std::uint32_t d = 0; d < rank; ++d) t.shape.push_back(static_cast<int>(r.u32()));
        if (t.name != layout[i].first || t.shape != layout[i].second)
            throw ConfigError("weight file tensor '" + t.name + "' does not match its config");
        const std::size_t n = element_count(t.shape);
        r.need(4 * n);
        t.values.resize(n);
        for (auto& v : t.values) v = static_cast<double>(std::bit_cast<float>(r.u32()));
        codec.weights.tensors.push_back(std::move(t));
    }
    if (r.pos != payload_end) throw ConfigError("weight file has trailing bytes");
    try {
        check_weights(codec.weights, codec.config);
    } catch (const ArgumentError& e) {
        throw ConfigError(e.what());
    }
    return codec;
}

std::uint64_t SharedKB::content_hash() const {
    std::uint64_t h = codec ? codec->weights.content_hash() : 0;
    h = hash64({h, static_cast<std::uint64_t>(shared_image.height()), static_cast<std::uint64_t>(shared_image.width())});
    for (double v : shared_image.data()) h = hash64({h, double_bits(v)});
    return hash64({h, double_bits(pose.x), double_bits(pose.y), double_bits(pose.heading)});
}

}  // namespace pasc
