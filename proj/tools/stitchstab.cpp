#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "stitchstab/pipeline.hpp"

using namespace stitchstab;

namespace {

struct Overrides {
    std::string config, input, output, sidecar, dump_seams, report, ground_truth, preset;
    std::optional<double> crop_ratio, focal, sensor_height_factor, eta, epsilon, seam_factor;
    std::optional<int> skip, window, horizon, beam, turns, frames, width, height;
    std::optional<std::uint64_t> seed;
    bool no_stitch = false;
};

void add_common(CLI::App* app, Overrides& o) {
    app->add_option("--config", o.config, "JSON config file (flags override it)");
    app->add_option("--input", o.input, "input .y4m file or image directory");
    app->add_option("--output", o.output, "output .y4m file or directory");
    app->add_option("--report", o.report, "write the evaluation report as JSON");
    app->add_option("--focal", o.focal, "focal length in pixels (default: frame width)");
    app->add_option("--sensor-height-factor", o.sensor_height_factor, "effective sensor height / frame height");
}

void add_stab(CLI::App* app, Overrides& o) {
    app->add_option("--crop-ratio", o.crop_ratio, "fraction of the input kept in the output");
    app->add_flag("--no-stitch", o.no_stitch, "conventional stabilization without stitching");
    app->add_option("--window", o.window, "mid-range filter window");
    app->add_option("--eta", o.eta, "distortion decay rate");
    app->add_option("--epsilon", o.epsilon, "ensure-inside step");
    app->add_option("--seam-factor", o.seam_factor, "seam search band width factor [2,4]");
}

void add_hyper(CLI::App* app, Overrides& o) {
    app->add_option("--skip", o.skip, "frame skip");
    app->add_option("--preset", o.preset, "standard or lite");
    app->add_option("--sidecar", o.sidecar, "motion sidecar (read if present, else written)");
    app->add_option("--horizon", o.horizon, "search horizon N");
    app->add_option("--beam", o.beam, "beam width S");
    app->add_option("--turns", o.turns, "turn candidates T");
}

PipelineConfig resolve(const Overrides& o) {
    PipelineConfig cfg;
    if (!o.config.empty()) apply_config_file(cfg, o.config);
    auto set = [](auto& dst, const auto& src) {
        if (src) dst = *src;
    };
    auto set_str = [](std::string& dst, const std::string& src) {
        if (!src.empty()) dst = src;
    };
    set_str(cfg.input, o.input);
    set_str(cfg.output, o.output);
    set_str(cfg.sidecar, o.sidecar);
    set_str(cfg.dump_seams, o.dump_seams);
    set_str(cfg.report, o.report);
    set_str(cfg.ground_truth, o.ground_truth);
    if (!o.preset.empty()) {
        cfg.preset = o.preset;
        cfg.hyperlapse.beam = HyperlapseParams::preset(o.preset).beam;
    }
    if (o.no_stitch) cfg.stitching = false;
    set(cfg.filter.crop_ratio, o.crop_ratio);
    set(cfg.focal, o.focal);
    set(cfg.sensor_height_factor, o.sensor_height_factor);
    set(cfg.filter.eta, o.eta);
    set(cfg.filter.epsilon, o.epsilon);
    set(cfg.filter.window, o.window);
    set(cfg.seam.factor, o.seam_factor);
    set(cfg.hyperlapse.skip, o.skip);
    set(cfg.hyperlapse.horizon, o.horizon);
    set(cfg.hyperlapse.beam, o.beam);
    set(cfg.hyperlapse.turns, o.turns);
    set(cfg.synth.seed, o.seed);
    set(cfg.synth.frames, o.frames);
    set(cfg.synth.dims.width, o.width);
    set(cfg.synth.dims.height, o.height);
    cfg.validate();
    return cfg;
}

void need(const std::string& value, const char* flag) {
    if (value.empty()) throw std::invalid_argument(std::string(flag) + " is required");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Video stabilization with stitching-based crop recovery"};
    app.require_subcommand(1);
    Overrides o;

    auto* analyze = app.add_subcommand("analyze", "estimate inter-frame motion into a sidecar");
    add_common(analyze, o);
    analyze->add_option("--sidecar", o.sidecar, "sidecar output path");

    auto* stabilize = app.add_subcommand("stabilize", "stabilize a clip");
    add_common(stabilize, o);
    add_stab(stabilize, o);
    stabilize->add_option("--dump-seams", o.dump_seams, "write seam overlays into this directory");

    auto* hyper = app.add_subcommand("hyperlapse", "plan and render a hyperlapse");
    add_common(hyper, o);
    add_stab(hyper, o);
    add_hyper(hyper, o);
    hyper->add_option("--dump-seams", o.dump_seams, "write seam overlays into this directory");

    auto* synth = app.add_subcommand("synth", "generate a shaky synthetic clip with ground truth");
    add_common(synth, o);
    synth->add_option("--seed", o.seed, "random seed");
    synth->add_option("--frames", o.frames, "frame count");
    synth->add_option("--width", o.width, "frame width");
    synth->add_option("--height", o.height, "frame height");
    synth->add_option("--ground-truth", o.ground_truth, "ground-truth path");

    auto* eval = app.add_subcommand("eval", "compare conventional and stitching modes on a clip");
    add_common(eval, o);
    add_stab(eval, o);
    add_hyper(eval, o);

    CLI11_PARSE(app, argc, argv);

    try {
        const PipelineConfig cfg = resolve(o);
        EvalReport rep;
        if (analyze->parsed()) {
            need(cfg.input, "--input");
            rep = run_analyze(cfg);
        } else if (stabilize->parsed()) {
            need(cfg.input, "--input");
            rep = run_stabilize(cfg);
        } else if (hyper->parsed()) {
            rep = run_hyperlapse(cfg);
        } else if (synth->parsed()) {
            rep = run_synth(cfg);
        } else {
            need(cfg.input, "--input");
            rep = run_eval(cfg);
        }
        if (!cfg.report.empty()) {
            std::ofstream f(cfg.report);
            if (!f) throw std::runtime_error("cannot write report " + cfg.report);
            f << rep.to_json() << "\n";
        }
        if (hyper->parsed()) {
            std::printf("%.17g\n", rep.final_cost.value_or(0.0));
        } else if (eval->parsed()) {
            std::cout << rep.to_json() << "\n";
        } else {
            std::fprintf(stderr, "%s: %d frames in, %d out, n_f %d, %.3f s\n", rep.mode.c_str(), rep.total_frames,
                         rep.output_frames, rep.n_f, rep.end_to_end_seconds);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
