// pasc: command-line front end for scene generation, codec training,
// single runs, sweeps, and the selection/mismatch rules.

#include "pasc/adapt.hpp"
#include "pasc/codec.hpp"
#include "pasc/harness.hpp"
#include "pasc/image_io.hpp"
#include "pasc/scene.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <thread>

using namespace pasc;

namespace {

WorldConfig world_for(std::uint64_t seed, const std::string& scenario, int height, int width, double fidelity) {
    WorldConfig w;
    w.world_seed = seed;
    w.dynamics_seed = seed ^ 0x5eedULL;
    w.height = height;
    w.width = width;
    w.scenario = parse_scenario(scenario);
    w.fidelity = fidelity;
    w.validate();
    return w;
}

void save_with_meta(const Image& img, const std::string& path, const ScenarioSample& s, const WorldConfig& w) {
    write_ppm(img, path);
    write_sidecar({s.pose, s.label, w.world_seed, w.dynamics_seed}, path);
    std::cout << "wrote " << path << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Position-aided semantic communication link simulator"};
    app.require_subcommand(1);

    // Shared option values.
    std::uint64_t seed = 1;
    std::string out_path;
    std::string scenario = "OutdoorMatch";
    int height = 32, width = 64;
    double fidelity = kDefaultFidelity;
    double eps = 0.4;

    // gen-scene
    auto* gen = app.add_subcommand("gen-scene", "Render a target/synthesized image pair");
    gen->add_option("--seed", seed, "World seed")->capture_default_str();
    gen->add_option("--scenario", scenario, "OutdoorMatch, OutdoorMismatch or Indoor")->capture_default_str();
    gen->add_option("--out", out_path, "Output prefix (writes <out>_target.ppm, <out>_synth.ppm)")->required();
    gen->add_option("--height", height)->capture_default_str();
    gen->add_option("--width", width)->capture_default_str();
    gen->add_option("--fidelity", fidelity)->capture_default_str();

    // train-codec
    std::string variant = "PASC";
    int bits = 512, samples = 200, epochs = 30;
    double train_ber = 0.01;
    double lr = 1e-3;
    auto* train_cmd = app.add_subcommand("train-codec", "Train an encoder/decoder pair through a BSC");
    train_cmd->add_option("--variant", variant, "PASC or JSCC")->capture_default_str();
    train_cmd->add_option("--bits", bits, "Bits per image")->capture_default_str();
    train_cmd->add_option("--eps", eps, "Mask threshold (PASC)")->capture_default_str();
    train_cmd->add_option("--seed", seed)->capture_default_str();
    train_cmd->add_option("--samples", samples, "Procedural training images")->capture_default_str();
    train_cmd->add_option("--epochs", epochs)->capture_default_str();
    train_cmd->add_option("--lr", lr, "Adam step size")->capture_default_str();
    train_cmd->add_option("--ber", train_ber, "BSC flip probability during training")->capture_default_str();
    train_cmd->add_option("--height", height)->capture_default_str();
    train_cmd->add_option("--width", width)->capture_default_str();
    train_cmd->add_option("--out", out_path, "Weight file")->required();

    // run
    std::string pipeline = "PASC";
    std::string weights_path;
    double snr = 10.0;
    int quality = 75;
    auto* run = app.add_subcommand("run", "Send one scene through one pipeline and print the result row");
    run->add_option("--pipeline", pipeline, "PASC, JSCC or Baseline")->capture_default_str();
    run->add_option("--weights", weights_path, "Codec weight file (PASC/JSCC; omit for PASC(0k))");
    run->add_option("--snr", snr, "SNR in dB")->capture_default_str();
    run->add_option("--eps", eps)->capture_default_str();
    run->add_option("--scenario", scenario)->capture_default_str();
    run->add_option("--seed", seed)->capture_default_str();
    run->add_option("--quality", quality, "Baseline source quality")->capture_default_str();
    run->add_option("--out", out_path, "Write the reconstruction to this PPM");

    // sweep
    std::string config_path;
    int workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    std::optional<std::uint64_t> seed_override;
    auto* sweep = app.add_subcommand("sweep", "Run a configured sweep and write a CSV table");
    sweep->add_option("--config", config_path, "Sweep config (JSON)")->required()->check(CLI::ExistingFile);
    sweep->add_option("--out", out_path, "CSV output (stdout when omitted)");
    sweep->add_option("--workers", workers)->capture_default_str();
    sweep->add_option("--seed", seed_override, "Override master_seed");

    // select
    double target = 0.23;
    std::string mode = "complexity-first";
    auto* sel = app.add_subcommand("select", "Pick a configuration from a performance table");
    sel->add_option("--config", config_path, "Record table (CSV)")->required()->check(CLI::ExistingFile);
    sel->add_option("--snr", snr)->required();
    sel->add_option("--target", target, "Largest acceptable metric")->capture_default_str();
    sel->add_option("--mode", mode, "complexity-first or bandwidth-first")->capture_default_str();

    // detect
    std::string target_img, synth_img;
    auto* detect = app.add_subcommand("detect", "Apply the mismatch rule to an image pair");
    detect->add_option("target", target_img, "Captured image (PPM)")->required()->check(CLI::ExistingFile);
    detect->add_option("synth", synth_img, "Synthesized image (PPM)")->required()->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            const auto w = world_for(seed, scenario, height, width, fidelity);
            const auto s = make_scenario(w);
            save_with_meta(s.target, out_path + "_target.ppm", s, w);
            save_with_meta(s.synth, out_path + "_synth.ppm", s, w);
            if (s.label != Scenario::Indoor) save_with_meta(render_birdseye(s.pose, w), out_path + "_map.ppm", s, w);
        } else if (*train_cmd) {
            CodecConfig cfg;
            cfg.variant = parse_codec_variant(variant);
            cfg.height = height;
            cfg.width = width;
            cfg.bits_out = bits;
            cfg.eps_trained = eps;
            cfg.validate();
            const auto data = make_training_set(cfg.variant, samples, seed, height, width, eps);
            OptimizerParams opt;
            opt.epochs = epochs;
            opt.learning_rate = lr;
            const auto t0 = std::chrono::steady_clock::now();
            const auto result = train(data, cfg, train_ber, opt, seed, [&](int epoch, double loss) {
                std::fprintf(stderr, "epoch %3d  loss %.6f\n", epoch, loss);
            });
            const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            save_weights(result.weights, cfg, out_path);
            std::fprintf(stderr, "initial loss %.6f, final %.6f, %.1f s -> %s\n", result.initial_loss,
                         result.epoch_loss.back(), secs, out_path.c_str());
        } else if (*run) {
            const auto w = world_for(seed, scenario, height, width, fidelity);
            const auto s = make_scenario(w);
            LinkSetup link;
            const auto p = parse_pipeline(pipeline);
            PipelineOutput out;
            if (p == Pipeline::Baseline) {
                out = run_baseline(s.target, quality, link, snr, seed);
            } else if (p == Pipeline::JSCC) {
                if (weights_path.empty()) throw ConfigError("JSCC needs --weights");
                out = run_jscc(s.target, load_weights(weights_path), link, snr, seed);
            } else {
                SharedKB kb{nullptr, s.synth, s.pose, 0};
                if (!weights_path.empty()) kb.codec = std::make_shared<Codec>(load_weights(weights_path));
                out = run_pasc(s.target, s.pose, kb, {eps, {}}, link, snr, seed);
            }
            out.row.scenario = s.label;
            write_csv(std::cout, {out.row});
            if (!out_path.empty() && out.estimate) write_ppm(*out.estimate, out_path);
        } else if (*sweep) {
            auto cfg = load_sweep_config(config_path);
            if (seed_override) cfg.master_seed = *seed_override;
            const auto rows = run_sweep(cfg, workers);
            if (out_path.empty()) {
                write_csv(std::cout, rows);
            } else {
                std::ofstream f(out_path, std::ios::binary);
                if (!f) throw ConfigError("cannot write " + out_path);
                write_csv(f, rows);
                std::cerr << rows.size() << " rows -> " << out_path << '\n';
            }
        } else if (*sel) {
            const auto records = load_records(config_path);
            const PolicyObjective obj{parse_policy_mode(mode), target};
            const auto d = select(records, snr, obj);
            std::cout << "choose: " << d.chosen.label() << "  metric " << d.chosen.metric
                      << (d.satisfied ? "  (meets target)" : "  (target missed)") << '\n'
                      << "why: " << d.rationale << '\n';
            if (const auto rec = recommend_new(records, snr, obj))
                std::cout << "recommend: " << rec->config.label << "\nwhy: " << rec->rationale << '\n';
            else
                std::cout << "recommend: none\n";
        } else if (*detect) {
            const auto m = detect_mismatch(read_ppm(target_img), read_ppm(synth_img));
            std::cout << "zero ratio " << m.zero_ratio << " -> " << (m.mismatch ? "mismatch (JSCC)" : "match (PASC)")
                      << '\n';
        }
    } catch (const std::exception& e) {
        std::cerr << "pasc: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
