#include "pasc/harness.hpp"

#include "pasc/baseline.hpp"
#include "pasc/hash.hpp"
#include "pasc/metrics.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace pasc {

std::string_view to_string(Pipeline p) {
    switch (p) {
        case Pipeline::PASC: return "PASC";
        case Pipeline::JSCC: return "JSCC";
        case Pipeline::Baseline: return "Baseline";
    }
    return "?";
}

Pipeline parse_pipeline(std::string_view name) {
    for (Pipeline p : {Pipeline::PASC, Pipeline::JSCC, Pipeline::Baseline})
        if (name == to_string(p)) return p;
    throw ArgumentError("unknown pipeline '" + std::string(name) + "'");
}

namespace {

void fill_metrics(ResultRow& row, const Image& reference, const Image& estimate) {
    const auto r = image_report(reference, estimate);
    row.mse = r.mse;
    row.psnr_db = r.psnr_db;
    row.ssim = r.ssim;
}

}  // namespace

PipelineOutput run_pasc(const Image& p, const Pose& pose, const SharedKB& kb, const PascOptions& opts,
                        const LinkSetup& link, double snr_db, std::uint64_t seed) {
    require_same_shape(p, kb.shared_image, "run_pasc");
    if (!(pose == kb.pose)) throw ArgumentError("run_pasc: pose does not match the shared knowledge base");

    PipelineOutput out;
    out.row.pipeline = Pipeline::PASC;
    out.row.snr_db = snr_db;
    out.row.eps = opts.eps;

    const DiffImage d = mask_diff(p, kb.shared_image, opts.eps);
    out.row.zero_ratio = zero_ratio(d);

    Image estimate;
    if (!kb.codec) {
        estimate = kb.shared_image;
    } else {
        const auto& codec = *kb.codec;
        const BitVector bits = encode(scaled(d.values, 0.5), codec.weights, codec.config);
        const LinkResult rx = transmit_bits(bits, link.ofdm, link.channel, snr_db, seed);
        const DiffImage d_hat{scaled(decode(rx.bits, codec.weights, codec.config), 2.0), opts.eps, {}};
        estimate = combine(kb.shared_image, d_hat, opts.combine);
        out.row.bits = static_cast<int>(bits.size());
        out.row.ber = rx.stats.ber;
    }
    fill_metrics(out.row, p, estimate);
    out.estimate = std::move(estimate);
    return out;
}

PipelineOutput run_jscc(const Image& p, const Codec& codec, const LinkSetup& link, double snr_db,
                        std::uint64_t seed) {
    PipelineOutput out;
    out.row.pipeline = Pipeline::JSCC;
    out.row.snr_db = snr_db;
    const BitVector bits = encode(p, codec.weights, codec.config);
    const LinkResult rx = transmit_bits(bits, link.ofdm, link.channel, snr_db, seed);
    Image estimate = decode(rx.bits, codec.weights, codec.config);
    out.row.bits = static_cast<int>(bits.size());
    out.row.ber = rx.stats.ber;
    fill_metrics(out.row, p, estimate);
    out.estimate = std::move(estimate);
    return out;
}

PipelineOutput run_baseline(const Image& p, int quality, const LinkSetup& link, double snr_db,
                            std::uint64_t seed) {
    PipelineOutput out;
    out.row.pipeline = Pipeline::Baseline;
    out.row.snr_db = snr_db;
    const BitVector coded = interleave(chan_encode(source_encode(p, quality)));
    const LinkResult rx = transmit_bits(coded, link.ofdm, link.channel, snr_db, seed);
    out.estimate = source_decode(chan_decode(deinterleave(rx.bits)));
    out.row.bits = static_cast<int>(coded.size());
    out.row.ber = rx.stats.ber;
    out.row.decode_failure = !out.estimate.has_value();
    fill_metrics(out.row, p, out.estimate ? *out.estimate : Image(p.height(), p.width(), 0.0));
    return out;
}

// ---------------------------------------------------------------------------
// Sweep configuration

namespace {

using nlohmann::json;

int line_of(const std::string& text, std::size_t byte) {
    byte = std::min(byte, text.size());
    return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

void reject_unknown(const json& obj, std::initializer_list<const char*> known, const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (std::none_of(known.begin(), known.end(), [&](const char* k) { return it.key() == k; }))
            throw ConfigError(where + ": unknown key '" + it.key() + "'");
    }
}

// Line on which a top-level key appears, for diagnostics after parsing.
int key_line(const std::string& text, const std::string& key) {
    const auto pos = text.find("\"" + key + "\"");
    return pos == std::string::npos ? 0 : line_of(text, pos);
}

OfdmConfig parse_ofdm(const json& j) {
    reject_unknown(j,
                   {"n_subcarriers", "n_pilot", "n_data", "n_guard", "cp_len", "symbols_per_frame", "pilot_seed"},
                   "ofdm");
    OfdmConfig c;
    c.n_subcarriers = j.value("n_subcarriers", c.n_subcarriers);
    c.n_pilot = j.value("n_pilot", c.n_pilot);
    c.n_data = j.value("n_data", c.n_data);
    c.n_guard = j.value("n_guard", c.n_guard);
    c.cp_len = j.value("cp_len", c.cp_len);
    c.symbols_per_frame = j.value("symbols_per_frame", c.symbols_per_frame);
    c.pilot_seed = j.value("pilot_seed", c.pilot_seed);
    return c;
}

ChannelProfile parse_channel(const json& j) {
    if (j.is_string()) {
        const auto name = j.get<std::string>();
        if (name == "sui5") return ChannelProfile::sui5();
        if (name == "awgn") return ChannelProfile::awgn();
        throw ConfigError("channel: unknown profile '" + name + "'");
    }
    reject_unknown(j, {"delays", "powers_db", "rayleigh"}, "channel");
    ChannelProfile c;
    c.delays = j.value("delays", c.delays);
    c.powers_db = j.value("powers_db", c.powers_db);
    c.rayleigh = j.value("rayleigh", c.rayleigh);
    return c;
}

}  // namespace

void SweepConfig::validate() const {
    if (pipelines.empty()) throw ConfigError("sweep: no pipelines");
    if (snr_db.empty()) throw ConfigError("sweep: no SNR points");
    if (scenarios.empty()) throw ConfigError("sweep: no scenarios");
    if (trials < 1) throw ConfigError("sweep: trials must be at least 1");
    if (height <= 0 || width <= 0 || height % 32 != 0 || width % 32 != 0)
        throw ConfigError("sweep: image size must be a positive multiple of 32");
    if (!(eps >= 0.0)) throw ConfigError("sweep: eps must be nonnegative");
    if (baseline_quality < 1 || baseline_quality > 100) throw ConfigError("sweep: baseline_quality must lie in 1..100");
    for (double s : snr_db)
        if (std::isnan(s)) throw ConfigError("sweep: SNR must not be NaN");
    link.ofdm.validate();
    link.channel.validate();
    for (Pipeline p : pipelines) {
        if (p == Pipeline::Baseline) continue;
        const std::string key(to_string(p));
        const auto it = weights.find(key);
        if (it == weights.end()) throw ConfigError("sweep: pipeline " + key + " needs a weights entry");
        if (p == Pipeline::PASC && it->second == "none") continue;
        const auto path = base_dir / it->second;
        if (!std::filesystem::exists(path)) throw ConfigError("sweep: weight file not found: " + path.string());
    }
}

SweepConfig parse_sweep_config(const std::string& text, const std::filesystem::path& base_dir) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("sweep config line " + std::to_string(line_of(text, e.byte ? e.byte - 1 : 0)) + ": " +
                          e.what());
    }
    if (!j.is_object()) throw ConfigError("sweep config line 1: top level must be an object");

    SweepConfig c;
    c.base_dir = base_dir;
    std::string current;
    try {
        reject_unknown(j,
                       {"pipelines", "snr_db", "scenarios", "trials", "master_seed", "image", "weights", "eps",
                        "baseline_quality", "ofdm", "channel", "fidelity"},
                       "sweep config");
        current = "pipelines";
        for (const auto& p : j.at("pipelines")) c.pipelines.push_back(parse_pipeline(p.get<std::string>()));
        current = "snr_db";
        c.snr_db = j.at("snr_db").get<std::vector<double>>();
        current = "scenarios";
        if (j.contains("scenarios")) {
            c.scenarios.clear();
            for (const auto& s : j.at("scenarios")) c.scenarios.push_back(parse_scenario(s.get<std::string>()));
        }
        current = "trials";
        c.trials = j.value("trials", c.trials);
        current = "master_seed";
        c.master_seed = j.value("master_seed", c.master_seed);
        current = "image";
        if (j.contains("image")) {
            reject_unknown(j.at("image"), {"height", "width"}, "image");
            c.height = j.at("image").value("height", c.height);
            c.width = j.at("image").value("width", c.width);
        }
        current = "weights";
        if (j.contains("weights")) c.weights = j.at("weights").get<std::map<std::string, std::string>>();
        current = "eps";
        c.eps = j.value("eps", c.eps);
        current = "baseline_quality";
        c.baseline_quality = j.value("baseline_quality", c.baseline_quality);
        current = "fidelity";
        c.fidelity = j.value("fidelity", c.fidelity);
        current = "ofdm";
        if (j.contains("ofdm")) c.link.ofdm = parse_ofdm(j.at("ofdm"));
        current = "channel";
        if (j.contains("channel")) c.link.channel = parse_channel(j.at("channel"));
    } catch (const ConfigError& e) {
        const int line = current.empty() ? 0 : key_line(text, current);
        throw ConfigError("sweep config line " + std::to_string(line) + ": " + e.what());
    } catch (const std::exception& e) {
        throw ConfigError("sweep config line " + std::to_string(key_line(text, current)) + " ('" + current +
                          "'): " + e.what());
    }
    c.validate();
    return c;
}

SweepConfig load_sweep_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open sweep config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_sweep_config(ss.str(), path.parent_path());
}

// ---------------------------------------------------------------------------
// Sweep execution

std::uint64_t scene_seed(std::uint64_t master, Scenario scenario, int trial) {
    return hash64({master, hash_string("scene"), static_cast<std::uint64_t>(scenario),
                   static_cast<std::uint64_t>(trial)});
}

std::uint64_t dynamics_seed(std::uint64_t master, Scenario scenario, int trial) {
    return hash64({master, hash_string("dynamics"), static_cast<std::uint64_t>(scenario),
                   static_cast<std::uint64_t>(trial)});
}

std::uint64_t channel_seed(std::uint64_t master, Pipeline pipeline, double snr_db, int trial) {
    return hash64({master, hash_string(to_string(pipeline)), double_bits(snr_db), static_cast<std::uint64_t>(trial)});
}

ScenarioSample sweep_scene(const SweepConfig& cfg, Scenario scenario, int trial) {
    WorldConfig w;
    w.world_seed = scene_seed(cfg.master_seed, scenario, trial);
    w.dynamics_seed = dynamics_seed(cfg.master_seed, scenario, trial);
    w.height = cfg.height;
    w.width = cfg.width;
    w.scenario = scenario;
    w.fidelity = cfg.fidelity;
    return make_scenario(w);
}

namespace {

std::shared_ptr<const Codec> load_codec_for(const SweepConfig& cfg, Pipeline p, CodecVariant expected) {
    const auto& entry = cfg.weights.at(std::string(to_string(p)));
    if (p == Pipeline::PASC && entry == "none") return nullptr;
    auto codec = std::make_shared<Codec>(load_weights(cfg.base_dir / entry));
    if (codec->config.variant != expected)
        throw ConfigError("weights " + entry + " hold a " + std::string(to_string(codec->config.variant)) +
                          " codec, expected " + std::string(to_string(expected)));
    if (codec->config.height != cfg.height || codec->config.width != cfg.width)
        throw ConfigError("weights " + entry + " were trained for a different image size");
    return codec;
}

}  // namespace

std::vector<ResultRow> run_sweep(const SweepConfig& cfg, int workers) {
    cfg.validate();
    if (workers < 1) throw ArgumentError("run_sweep: workers must be at least 1");

    std::map<Pipeline, std::shared_ptr<const Codec>> codecs;
    for (Pipeline p : cfg.pipelines) {
        if (p == Pipeline::PASC) codecs[p] = load_codec_for(cfg, p, CodecVariant::PASC);
        if (p == Pipeline::JSCC) codecs[p] = load_codec_for(cfg, p, CodecVariant::JSCC);
    }

    struct Point {
        Pipeline pipeline;
        double snr;
        Scenario scenario;
        int trial;
    };
    std::vector<Point> points;
    for (Pipeline p : cfg.pipelines)
        for (double snr : cfg.snr_db)
            for (Scenario s : cfg.scenarios)
                for (int t = 0; t < cfg.trials; ++t) points.push_back({p, snr, s, t});

    std::vector<ResultRow> rows(points.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= points.size()) return;
            try {
                const Point& pt = points[i];
                const auto sample = sweep_scene(cfg, pt.scenario, pt.trial);
                const auto seed = channel_seed(cfg.master_seed, pt.pipeline, pt.snr, pt.trial);
                PipelineOutput out;
                switch (pt.pipeline) {
                    case Pipeline::PASC: {
                        SharedKB kb{codecs.at(Pipeline::PASC), sample.synth, sample.pose, 0};
                        out = run_pasc(sample.target, sample.pose, kb, {cfg.eps, {}}, cfg.link, pt.snr, seed);
                        break;
                    }
                    case Pipeline::JSCC:
                        out = run_jscc(sample.target, *codecs.at(Pipeline::JSCC), cfg.link, pt.snr, seed);
                        break;
                    case Pipeline::Baseline:
                        out = run_baseline(sample.target, cfg.baseline_quality, cfg.link, pt.snr, seed);
                        break;
                }
                out.row.scenario = pt.scenario;
                out.row.trial = pt.trial;
                rows[i] = out.row;
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(points.size());
                return;
            }
        }
    };

    const int n = std::min<int>(workers, static_cast<int>(std::max<std::size_t>(points.size(), 1)));
    if (n == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int k = 0; k < n; ++k) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);
    return rows;
}

namespace {

std::string fmt(double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

}  // namespace

void write_csv_header(std::ostream& out) {
    out << kCsvSchemaLine << '\n'
        << "pipeline,snr_db,bits,eps,scenario,trial,mse,psnr_db,ssim,zero_ratio,ber,decode_failure\n";
}

void write_csv_row(std::ostream& out, const ResultRow& r) {
    out << to_string(r.pipeline) << ',' << fmt(r.snr_db) << ',' << r.bits << ',' << (r.eps ? fmt(*r.eps) : "")
        << ',' << to_string(r.scenario) << ',' << r.trial << ',' << fmt(r.mse) << ',' << fmt(r.psnr_db) << ','
        << fmt(r.ssim) << ',' << (r.zero_ratio ? fmt(*r.zero_ratio) : "") << ',' << fmt(r.ber) << ','
        << (r.decode_failure ? 1 : 0) << '\n';
}

void write_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
    write_csv_header(out);
    for (const auto& r : rows) write_csv_row(out, r);
}

std::vector<Image> make_training_set(CodecVariant variant, int count, std::uint64_t seed, int height, int width,
                                     double eps, double fidelity) {
    if (count < 1) throw ArgumentError("make_training_set: count must be positive");
    std::vector<Image> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        WorldConfig w;
        w.world_seed = hash64({seed, static_cast<std::uint64_t>(i), 1});
        w.dynamics_seed = hash64({seed, static_cast<std::uint64_t>(i), 2});
        w.height = height;
        w.width = width;
        w.fidelity = fidelity;
        const auto sample = make_scenario(w);
        if (variant == CodecVariant::PASC)
            out.push_back(scaled(mask_diff(sample.target, sample.synth, eps).values, 0.5));
        else
            out.push_back(sample.target);
    }
    return out;
}

}  // namespace pasc
