#include "stitchstab/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "stitchstab/rolling_shutter.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace stitchstab {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

}  // namespace

CameraParams PipelineConfig::camera_for(FrameDims dims) const {
    return CameraParams::for_frame(dims, focal > 0 ? focal : dims.width, sensor_height_factor);
}

void PipelineConfig::validate() const {
    filter.validate();
    hyperlapse.validate();
    seam.validate();
    if (!(sensor_height_factor >= 1.0)) throw std::invalid_argument("config: sensor height factor must be >= 1");
    if (focal < 0) throw std::invalid_argument("config: focal length must be positive");
    if (queue_capacity < 1) throw std::invalid_argument("config: queue capacity must be >= 1");
    if (motion.levels < 1 || motion.block < 4 || motion.radius < 1 || motion.max_features < 4) {
        throw std::invalid_argument("config: invalid motion parameters");
    }
}

void apply_config_json(PipelineConfig& cfg, const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
    if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");
    if (j.contains("preset")) {
        cfg.preset = j["preset"].get<std::string>();
        cfg.hyperlapse.beam = HyperlapseParams::preset(cfg.preset).beam;
    }
    for (const auto& [key, v] : j.items()) {
        if (key == "preset") continue;
        else if (key == "input") cfg.input = v.get<std::string>();
        else if (key == "output") cfg.output = v.get<std::string>();
        else if (key == "sidecar") cfg.sidecar = v.get<std::string>();
        else if (key == "dump_seams") cfg.dump_seams = v.get<std::string>();
        else if (key == "report") cfg.report = v.get<std::string>();
        else if (key == "ground_truth") cfg.ground_truth = v.get<std::string>();
        else if (key == "stitch") cfg.stitching = v.get<bool>();
        else if (key == "no_stitch") cfg.stitching = !v.get<bool>();
        else if (key == "crop_ratio") cfg.filter.crop_ratio = v.get<double>();
        else if (key == "window") cfg.filter.window = v.get<int>();
        else if (key == "eta") cfg.filter.eta = v.get<double>();
        else if (key == "epsilon") cfg.filter.epsilon = v.get<double>();
        else if (key == "max_iterations") cfg.filter.max_iterations = v.get<int>();
        else if (key == "focal") cfg.focal = v.get<double>();
        else if (key == "sensor_height_factor") cfg.sensor_height_factor = v.get<double>();
        else if (key == "seam_factor") cfg.seam.factor = v.get<double>();
        else if (key == "skip") cfg.hyperlapse.skip = v.get<int>();
        else if (key == "horizon") cfg.hyperlapse.horizon = v.get<int>();
        else if (key == "beam") cfg.hyperlapse.beam = v.get<int>();
        else if (key == "turns") cfg.hyperlapse.turns = v.get<int>();
        else if (key == "period_base") cfg.hyperlapse.period_base = v.get<int>();
        else if (key == "eps_turn") cfg.hyperlapse.eps_turn = v.get<double>();
        else if (key == "eps_outside") cfg.hyperlapse.eps_outside = v.get<double>();
        else if (key == "eps_angle") cfg.hyperlapse.eps_angle = v.get<double>();
        else if (key == "levels") cfg.motion.levels = v.get<int>();
        else if (key == "block") cfg.motion.block = v.get<int>();
        else if (key == "radius") cfg.motion.radius = v.get<int>();
        else if (key == "max_features") cfg.motion.max_features = v.get<int>();
        else if (key == "seed") cfg.synth.seed = v.get<std::uint64_t>();
        else if (key == "frames") cfg.synth.frames = v.get<int>();
        else if (key == "width") cfg.synth.dims.width = v.get<int>();
        else if (key == "height") cfg.synth.dims.height = v.get<int>();
        else if (key == "queue_capacity") cfg.queue_capacity = v.get<int>();
        else throw std::invalid_argument("config: unknown key '" + key + "'");
    }
}

void apply_config_file(PipelineConfig& cfg, const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::invalid_argument("cannot read config file " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    apply_config_json(cfg, ss.str());
}

std::string EvalReport::to_json() const {
    json j;
    j["mode"] = mode;
    j["total_frames"] = total_frames;
    j["output_frames"] = output_frames;
    j["output_width"] = output_dims.width;
    j["output_height"] = output_dims.height;
    j["stitching"] = stitching;
    j["n_f"] = n_f;
    if (n_f_conventional) j["n_f_conventional"] = *n_f_conventional;
    if (n_f_stitching) j["n_f_stitching"] = *n_f_stitching;
    j["jitter"] = jitter;
    if (jitter_conventional) j["jitter_conventional"] = *jitter_conventional;
    if (jitter_stitching) j["jitter_stitching"] = *jitter_stitching;
    if (final_cost) j["final_cost"] = *final_cost;
    if (final_cost_conventional) j["final_cost_conventional"] = *final_cost_conventional;
    if (final_cost_stitching) j["final_cost_stitching"] = *final_cost_stitching;
    if (first_emission_searches) j["first_emission_searches"] = *first_emission_searches;
    j["stitched_prev"] = stitched_prev;
    j["stitched_next"] = stitched_next;
    j["seam_fallbacks"] = seam_fallbacks;
    j["hole_frames"] = hole_frames;
    j["hole_pixels"] = hole_pixels;
    j["stitch_hole_frames"] = stitch_hole_frames;
    j["low_confidence_motion"] = low_confidence_motion;
    j["rs_identity_max_error"] = rs_identity_max_error;
    json st = json::object();
    for (const auto& [name, t] : stages) st[name] = {{"seconds", t.seconds}, {"frames", t.frames}, {"fps", t.fps()}};
    j["stages"] = st;
    j["end_to_end_seconds"] = end_to_end_seconds;
    j["end_to_end_fps"] = end_to_end_seconds > 0 ? output_frames / end_to_end_seconds : 0.0;
    return j.dump(2);
}

std::optional<Frame> VectorReader::next() {
    if (pos_ >= frames_.size()) return std::nullopt;
    Frame f = frames_[pos_];
    f.index = static_cast<int>(pos_++);
    return f;
}

StreamInfo VectorReader::info() const {
    StreamInfo i;
    if (!frames_.empty()) i.dims = frames_.front().dims();
    return i;
}

double jitter_metric(const std::vector<Homography>& p, const std::vector<Homography>& m, const CameraParams& cam) {
    double ss = 0.0;
    long n = 0;
    for (size_t k = 1; k < p.size() && k < m.size(); ++k) {
        const Homography o = normalize(multiply(multiply(invert(p[k]), m[k]), p[k - 1]));
        const EulerAngles a = estimate_angles(o, cam);
        ss += a.yaw * a.yaw + a.pitch * a.pitch + a.roll * a.roll;
        n += 3;
    }
    return n ? std::sqrt(ss / n) : 0.0;
}

namespace {

struct Slot {
    Frame frame;
    LumaPlane quarter;
    Pyramid pyramid;
};

struct RenderJob {
    int index = 0;
    std::shared_ptr<const Slot> main, sub;
    Homography p;
    Homography sub_from_main;  // main-frame coordinates -> sub-frame coordinates
    StitchChoice choice = StitchChoice::NoStitch;
};

struct RenderOut {
    int index = 0;
    long invalid = 0;
    DeficitType type = DeficitType::None;
    bool fallback = false;
};

LumaPlane quarter_from(const Slot& s) {
    if (s.pyramid.levels.size() > 2) return s.pyramid.levels[2];
    return quarter_plane(s.frame.luma);
}

RenderOut render_one(const RenderJob& job, FrameDims in, FrameDims out_dims, const PipelineConfig& cfg, Frame& frame) {
    RenderOut r;
    r.index = job.index;
    const Homography main_h = output_to_input(job.p, in, out_dims);
    if (job.choice == StitchChoice::NoStitch || job.choice == StitchChoice::Fail || !job.sub) {
        MergeResult m = crop_only(warp(job.main->frame, main_h, out_dims));
        frame = std::move(m.frame);
        r.invalid = m.invalid_pixels;
    } else {
        const Homography sub_h = normalize(multiply(job.sub_from_main, main_h));
        StitchResult s = stitch(job.main->frame, job.main->quarter, main_h, job.sub->frame, job.sub->quarter, sub_h,
                                out_dims, cfg.seam);
        frame = std::move(s.merged.frame);
        r.invalid = s.merged.invalid_pixels;
        r.type = s.type;
        r.fallback = s.fallback;
        if (!cfg.dump_seams.empty()) {
            fs::create_directories(cfg.dump_seams);
            char name[48];
            std::snprintf(name, sizeof name, "seam_%06d.ppm", job.index);
            write_seam_overlay((fs::path(cfg.dump_seams) / name).string(), s.debug);
        }
    }
    frame.index = job.index;
    return r;
}

void tally(EvalReport& rep, StitchChoice choice, const RenderOut& r) {
    if (choice == StitchChoice::StitchPrev) ++rep.stitched_prev;
    if (choice == StitchChoice::StitchNext) ++rep.stitched_next;
    if (r.fallback) ++rep.seam_fallbacks;
    if (r.invalid > 0) {
        ++rep.hole_frames;
        rep.hole_pixels += r.invalid;
        if (choice == StitchChoice::StitchPrev || choice == StitchChoice::StitchNext) ++rep.stitch_hole_frames;
    }
}

}  // namespace

StabilizeResult stabilize_stream(FrameReader& in, FrameWriter* out, const PipelineConfig& cfg) {
    cfg.validate();
    const auto t_start = Clock::now();
    StabilizeResult res;
    EvalReport& rep = res.report;
    rep.mode = "stabilize";
    rep.stitching = cfg.stitching;

    BoundedQueue<std::shared_ptr<Slot>> frames_q(cfg.queue_capacity);
    BoundedQueue<RenderJob> jobs_q(cfg.queue_capacity);
    std::exception_ptr reader_err, render_err;
    StageTime decode_t, analyze_t, render_t;

    std::thread reader([&] {
        try {
            for (;;) {
                const auto t = Clock::now();
                auto f = in.next();
                if (!f) break;
                auto slot = std::make_shared<Slot>();
                slot->frame = std::move(*f);
                slot->frame.validate();
                slot->pyramid = build_pyramid(slot->frame.luma, cfg.motion.levels);
                slot->quarter = quarter_from(*slot);
                decode_t.seconds += seconds_since(t);
                ++decode_t.frames;
                if (!frames_q.push(std::move(slot))) break;
            }
        } catch (...) {
            reader_err = std::current_exception();
        }
        frames_q.close();
    });

    FrameDims in_dims, out_dims;
    std::vector<RenderOut> rendered;
    std::thread renderer;
    auto start_renderer = [&] {
        renderer = std::thread([&] {
            try {
                while (auto job = jobs_q.pop()) {
                    const auto t = Clock::now();
                    Frame f;
                    rendered.push_back(render_one(*job, in_dims, out_dims, cfg, f));
                    if (out) out->write(f);
                    render_t.seconds += seconds_since(t);
                    ++render_t.frames;
                }
            } catch (...) {
                render_err = std::current_exception();
                jobs_q.close();
            }
        });
    };

    std::exception_ptr main_err;
    try {
        std::shared_ptr<const Slot> prev2, prev, cur;
        std::optional<Stabilizer> stab;
        CameraParams cam;
        Homography d_prev = Homography::identity();
        std::optional<Homography> m_pending;  // motion into the frame awaiting its decision

        auto decide = [&](int index, const Homography& m, const std::optional<Homography>& m_next,
                          std::shared_ptr<const Slot> main, std::shared_ptr<const Slot> before,
                          std::shared_ptr<const Slot> after) {
            const FrameDecision d = stab->next(m, m_next);
            rep.rs_identity_max_error = std::max(
                rep.rs_identity_max_error, max_abs_diff(multiply(multiply(d.d, d.n), invert(d_prev)), m));
            d_prev = d.d;
            FrameRecord rec;
            rec.index = index;
            rec.m = m;
            rec.p = d.p;
            rec.choice = d.choice;
            rec.iterations = d.iterations;
            res.records.push_back(rec);
            RenderJob job;
            job.index = index;
            job.main = std::move(main);
            job.p = d.p;
            job.choice = d.choice;
            if (d.choice == StitchChoice::StitchPrev) {
                job.sub = std::move(before);
                job.sub_from_main = invert(m);
            } else if (d.choice == StitchChoice::StitchNext) {
                job.sub = std::move(after);
                job.sub_from_main = *m_next;
            }
            if (!jobs_q.push(std::move(job))) throw std::runtime_error("render stage stopped");
        };

        while (auto slot = frames_q.pop()) {
            const auto t = Clock::now();
            prev2 = prev;
            prev = cur;
            cur = *slot;
            if (!prev) {
                in_dims = cur->frame.dims();
                cam = cfg.camera_for(in_dims);
                out_dims = output_dims(in_dims, cfg.filter.crop_ratio);
                rep.output_dims = out_dims;
                stab.emplace(cam, cfg.filter, cfg.stitching);
                start_renderer();
                const FrameDecision d = stab->first();
                FrameRecord rec;
                rec.p = d.p;
                res.records.push_back(rec);
                RenderJob job;
                job.index = 0;
                job.main = cur;
                job.p = d.p;
                if (!jobs_q.push(std::move(job))) throw std::runtime_error("render stage stopped");
            } else {
                if (!(cur->frame.dims() == in_dims)) throw FrameIoError("frame size changed mid-stream");
                const MotionEstimate est = calc_motion(prev->pyramid, cur->pyramid, cfg.motion);
                if (!est.confident) ++rep.low_confidence_motion;
                const int index = static_cast<int>(res.records.size());
                if (!cfg.stitching) {
                    decide(index, est.m, std::nullopt, cur, prev, nullptr);
                } else {
                    if (m_pending) decide(index, *m_pending, est.m, prev, prev2, cur);
                    m_pending = est.m;
                }
            }
            analyze_t.seconds += seconds_since(t);
            ++analyze_t.frames;
        }
        if (cfg.stitching && m_pending) {
            const auto t = Clock::now();
            decide(static_cast<int>(res.records.size()), *m_pending, std::nullopt, cur, prev, nullptr);
            analyze_t.seconds += seconds_since(t);
        }
        if (reader_err) std::rethrow_exception(reader_err);
        if (!stab) throw FrameIoError("empty input stream");
    } catch (...) {
        main_err = std::current_exception();
        frames_q.close();
    }
    jobs_q.close();
    reader.join();
    if (renderer.joinable()) renderer.join();
    if (main_err) std::rethrow_exception(main_err);
    if (render_err) std::rethrow_exception(render_err);
    if (out) out->close();

    for (const auto& r : rendered) {
        FrameRecord& rec = res.records.at(r.index);
        rec.invalid_pixels = r.invalid;
        rec.deficit = r.type;
        rec.seam_fallback = r.fallback;
        tally(rep, rec.choice, r);
    }
    rep.total_frames = static_cast<int>(res.records.size());
    rep.output_frames = static_cast<int>(rendered.size());
    for (const auto& rec : res.records)
        if (rec.iterations > 0) ++rep.n_f;
    std::vector<Homography> ps, ms;
    for (const auto& rec : res.records) {
        ps.push_back(rec.p);
        ms.push_back(rec.m);
    }
    rep.jitter = jitter_metric(ps, ms, cfg.camera_for(in_dims));
    rep.stages["decode"] = decode_t;
    rep.stages["analyze"] = analyze_t;
    rep.stages["render"] = render_t;
    rep.end_to_end_seconds = seconds_since(t_start);
    return res;
}

MotionSidecar analyze_stream(FrameReader& in, const PipelineConfig& cfg, EvalReport* report) {
    cfg.validate();
    const auto t0 = Clock::now();
    MotionSidecar sc;
    std::optional<Pyramid> prev;
    int low = 0;
    while (auto f = in.next()) {
        f->validate();
        Pyramid pyr = build_pyramid(f->luma, cfg.motion.levels);
        if (!prev) {
            sc.dims = f->dims();
            const CameraParams cam = cfg.camera_for(sc.dims);
            sc.focal = cam.focal;
            sc.sensor_height = cam.sensor_height;
            sc.motions.push_back(Homography::identity());
        } else {
            if (!(f->dims() == sc.dims)) throw FrameIoError("frame size changed mid-stream");
            const MotionEstimate est = calc_motion(*prev, pyr, cfg.motion);
            if (!est.confident) ++low;
            sc.motions.push_back(est.m);
        }
        prev = std::move(pyr);
    }
    if (report) {
        report->mode = "analyze";
        report->total_frames = sc.frames();
        report->low_confidence_motion = low;
        StageTime t{seconds_since(t0), sc.frames()};
        report->stages["analyze"] = t;
        report->end_to_end_seconds = t.seconds;
    }
    return sc;
}

HyperlapseResult plan_hyperlapse(const MotionSidecar& sc, const PipelineConfig& cfg) {
    cfg.validate();
    const auto t0 = Clock::now();
    HyperlapseResult res;
    HyperlapsePlanner planner(sc, cfg.filter, cfg.hyperlapse, cfg.stitching);
    res.plan = planner.run();
    EvalReport& rep = res.report;
    rep.mode = "hyperlapse";
    rep.stitching = cfg.stitching;
    rep.total_frames = sc.frames();
    rep.output_dims = output_dims(sc.dims, cfg.filter.crop_ratio);
    rep.final_cost = res.plan.back().cost;
    rep.first_emission_searches = planner.searches_before_first();
    std::vector<Homography> ps, ms;
    for (const auto& f : res.plan) {
        if (f.iterations > 0) ++rep.n_f;
        if (f.choice == StitchChoice::StitchPrev) ++rep.stitched_prev;
        if (f.choice == StitchChoice::StitchNext) ++rep.stitched_next;
        ps.push_back(f.p);
        ms.push_back(f.output_index == 0 ? Homography::identity()
                                         : accumulate_skip(sc, (f.output_index - 1) * cfg.hyperlapse.skip, cfg.hyperlapse.skip));
    }
    rep.jitter = jitter_metric(ps, ms, sc.camera());
    StageTime t{seconds_since(t0), static_cast<int>(res.plan.size())};
    rep.stages["plan"] = t;
    rep.end_to_end_seconds = t.seconds;
    return res;
}

void render_hyperlapse(FrameReader& in, FrameWriter& out, const std::vector<PlannedFrame>& plan,
                       const MotionSidecar& sc, const PipelineConfig& cfg, EvalReport& report) {
    const auto t0 = Clock::now();
    const int skip = cfg.hyperlapse.skip;
    const FrameDims out_dims = output_dims(sc.dims, cfg.filter.crop_ratio);
    std::vector<std::shared_ptr<const Slot>> keys;  // keyframes j - 1, j, j + 1 (sliding)
    std::map<int, std::shared_ptr<const Slot>> window;
    int next_render = 0;
    int rendered = 0;

    auto render = [&](int j) {
        const PlannedFrame& pf = plan[j];
        RenderJob job;
        job.index = j;
        job.main = window.at(j);
        job.p = pf.p;
        job.choice = pf.choice;
        if (pf.choice == StitchChoice::StitchPrev && window.count(j - 1)) {
            job.sub = window.at(j - 1);
            job.sub_from_main = invert(accumulate_skip(sc, (j - 1) * skip, skip));
        } else if (pf.choice == StitchChoice::StitchNext && window.count(j + 1)) {
            job.sub = window.at(j + 1);
            job.sub_from_main = accumulate_skip(sc, j * skip, skip);
        }
        Frame f;
        const RenderOut r = render_one(job, sc.dims, out_dims, cfg, f);
        tally(report, pf.choice, r);
        out.write(f);
        ++rendered;
        window.erase(j - 1);
    };

    const int outputs = static_cast<int>(plan.size());
    while (auto f = in.next()) {
        const int k = f->index;
        if (k % skip != 0) continue;
        const int j = k / skip;
        if (j >= outputs + 1) break;
        auto slot = std::make_shared<Slot>();
        slot->frame = std::move(*f);
        slot->quarter = quarter_plane(slot->frame.luma);
        window[j] = slot;
        while (next_render < outputs && next_render + 1 <= j) render(next_render++);
    }
    while (next_render < outputs && window.count(next_render)) render(next_render++);
    if (next_render < outputs) throw FrameIoError("input ended before the planned hyperlapse frames");
    out.close();
    report.output_frames = rendered;
    report.stages["render"] = StageTime{seconds_since(t0), rendered};
}

EvalReport run_stabilize(const PipelineConfig& cfg) {
    auto reader = open_reader(cfg.input);
    std::unique_ptr<FrameWriter> writer;
    if (!cfg.output.empty()) writer = open_writer(cfg.output, reader->info());
    StabilizeResult res = stabilize_stream(*reader, writer.get(), cfg);
    return res.report;
}

EvalReport run_analyze(const PipelineConfig& cfg) {
    const std::string path = !cfg.sidecar.empty() ? cfg.sidecar : cfg.output;
    if (path.empty()) throw std::invalid_argument("analyze: --sidecar or --output is required");
    auto reader = open_reader(cfg.input);
    EvalReport rep;
    write_sidecar(path, analyze_stream(*reader, cfg, &rep));
    return rep;
}

namespace {

MotionSidecar load_or_analyze(const PipelineConfig& cfg, EvalReport* analyze_report) {
    if (!cfg.sidecar.empty() && fs::exists(cfg.sidecar)) return read_sidecar(cfg.sidecar);
    if (cfg.input.empty()) throw std::invalid_argument("hyperlapse: need --input or an existing --sidecar");
    auto reader = open_reader(cfg.input);
    MotionSidecar sc = analyze_stream(*reader, cfg, analyze_report);
    if (!cfg.sidecar.empty()) write_sidecar(cfg.sidecar, sc);
    return sc;
}

}  // namespace

EvalReport run_hyperlapse(const PipelineConfig& cfg) {
    const auto t0 = Clock::now();
    EvalReport analyze_rep;
    const MotionSidecar sc = load_or_analyze(cfg, &analyze_rep);
    HyperlapseResult res = plan_hyperlapse(sc, cfg);
    if (analyze_rep.stages.count("analyze")) res.report.stages["analyze"] = analyze_rep.stages["analyze"];
    if (!cfg.output.empty()) {
        if (cfg.input.empty()) throw std::invalid_argument("hyperlapse: rendering needs --input");
        auto reader = open_reader(cfg.input);
        auto writer = open_writer(cfg.output, reader->info());
        render_hyperlapse(*reader, *writer, res.plan, sc, cfg, res.report);
    } else {
        res.report.output_frames = static_cast<int>(res.plan.size());
    }
    res.report.end_to_end_seconds = seconds_since(t0);
    return res.report;
}

EvalReport run_synth(const PipelineConfig& cfg) {
    if (cfg.output.empty()) throw std::invalid_argument("synth: --output is required");
    SynthSpec spec = cfg.synth;
    if (cfg.focal > 0) spec.focal = cfg.focal;
    const auto t0 = Clock::now();
    const SynthSequence seq = synth_generate(spec);
    write_frames(seq.frames, cfg.output);
    std::string truth = cfg.ground_truth;
    if (truth.empty()) {
        truth = is_y4m_path(cfg.output) ? (fs::path(cfg.output).replace_extension(".truth.txt")).string()
                                        : (fs::path(cfg.output) / "ground_truth.txt").string();
    }
    write_ground_truth(truth, seq.truth);
    EvalReport rep;
    rep.mode = "synth";
    rep.total_frames = rep.output_frames = static_cast<int>(seq.frames.size());
    rep.output_dims = spec.dims;
    rep.end_to_end_seconds = seconds_since(t0);
    rep.stages["synth"] = StageTime{rep.end_to_end_seconds, rep.output_frames};
    return rep;
}

EvalReport run_eval(const PipelineConfig& cfg) {
    const auto t0 = Clock::now();
    const std::vector<Frame> frames = read_frames(cfg.input);
    EvalReport rep;
    rep.mode = "eval";
    rep.total_frames = static_cast<int>(frames.size());

    PipelineConfig conv = cfg;
    conv.stitching = false;
    PipelineConfig stit = cfg;
    stit.stitching = true;
    VectorReader rc(frames), rs(frames);
    const StabilizeResult a = stabilize_stream(rc, nullptr, conv);
    const StabilizeResult b = stabilize_stream(rs, nullptr, stit);
    rep.n_f_conventional = a.report.n_f;
    rep.n_f_stitching = b.report.n_f;
    rep.jitter_conventional = a.report.jitter;
    rep.jitter_stitching = b.report.jitter;
    rep.stitching = cfg.stitching;
    const EvalReport& chosen = cfg.stitching ? b.report : a.report;
    rep.n_f = chosen.n_f;
    rep.jitter = chosen.jitter;
    rep.output_frames = chosen.output_frames;
    rep.output_dims = chosen.output_dims;
    rep.stitched_prev = chosen.stitched_prev;
    rep.stitched_next = chosen.stitched_next;
    rep.seam_fallbacks = chosen.seam_fallbacks;
    rep.hole_frames = chosen.hole_frames;
    rep.hole_pixels = chosen.hole_pixels;
    rep.stitch_hole_frames = a.report.stitch_hole_frames + b.report.stitch_hole_frames;
    rep.low_confidence_motion = chosen.low_confidence_motion;
    rep.rs_identity_max_error = std::max(a.report.rs_identity_max_error, b.report.rs_identity_max_error);
    for (const auto& [k, v] : chosen.stages) rep.stages[k] = v;

    MotionSidecar sc;
    if (!cfg.sidecar.empty() && fs::exists(cfg.sidecar)) {
        sc = read_sidecar(cfg.sidecar);
    } else {
        VectorReader ra(frames);
        sc = analyze_stream(ra, cfg);
    }
    if ((sc.frames() - 1) / cfg.hyperlapse.skip >= 1) {
        const HyperlapseResult hc = plan_hyperlapse(sc, conv);
        const HyperlapseResult hs = plan_hyperlapse(sc, stit);
        rep.final_cost_conventional = hc.report.final_cost;
        rep.final_cost_stitching = hs.report.final_cost;
        rep.final_cost = cfg.stitching ? hs.report.final_cost : hc.report.final_cost;
        rep.first_emission_searches = hs.report.first_emission_searches;
        rep.stages["plan"] = hs.report.stages.at("plan");
    }
    rep.end_to_end_seconds = seconds_since(t0);
    return rep;
}

}  // namespace stitchstab
