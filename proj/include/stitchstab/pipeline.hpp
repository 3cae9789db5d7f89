#pragma once

#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "stitchstab/filter.hpp"
#include "stitchstab/frame_io.hpp"
#include "stitchstab/hyperlapse.hpp"
#include "stitchstab/motion.hpp"
#include "stitchstab/seam.hpp"
#include "stitchstab/synth.hpp"

namespace stitchstab {

struct PipelineConfig {
    std::string input;
    std::string output;
    std::string sidecar;
    std::string dump_seams;
    std::string report;
    std::string ground_truth;
    bool stitching = true;
    std::string preset = "standard";
    double focal = 0.0;  // 0 = frame width
    double sensor_height_factor = 2.0;
    FilterParams filter;
    HyperlapseParams hyperlapse;
    MotionConfig motion;
    SeamParams seam;
    SynthSpec synth;
    int queue_capacity = 4;

    CameraParams camera_for(FrameDims dims) const;
    void validate() const;
};

/// Applies a JSON config document (flat keys, same names as the CLI flags with
/// underscores). Unknown keys are rejected.
void apply_config_json(PipelineConfig& cfg, const std::string& json_text);
void apply_config_file(PipelineConfig& cfg, const std::string& path);

struct StageTime {
    double seconds = 0.0;
    int frames = 0;
    double fps() const { return seconds > 0 ? frames / seconds : 0.0; }
};

struct EvalReport {
    std::string mode;
    int total_frames = 0;
    int output_frames = 0;
    FrameDims output_dims;
    bool stitching = false;
    int n_f = 0;
    std::optional<int> n_f_conventional, n_f_stitching;
    double jitter = 0.0;
    std::optional<double> jitter_conventional, jitter_stitching;
    std::optional<double> final_cost;
    std::optional<double> final_cost_conventional, final_cost_stitching;
    std::optional<int> first_emission_searches;
    int stitched_prev = 0;
    int stitched_next = 0;
    int seam_fallbacks = 0;
    int hole_frames = 0;        // frames with invalid output pixels
    long hole_pixels = 0;
    int stitch_hole_frames = 0; // of those, frames the stitching predicate accepted
    int low_confidence_motion = 0;
    double rs_identity_max_error = 0.0;
    std::map<std::string, StageTime> stages;
    double end_to_end_seconds = 0.0;

    std::string to_json() const;
};

/// Fixed-capacity blocking queue used between pipeline stages.
template <typename T>
class BoundedQueue {
public:
    explicit BoundedQueue(size_t capacity) : capacity_(capacity ? capacity : 1) {}

    bool push(T v) {
        std::unique_lock lk(mu_);
        not_full_.wait(lk, [&] { return closed_ || q_.size() < capacity_; });
        if (closed_) return false;
        q_.push(std::move(v));
        not_empty_.notify_one();
        return true;
    }

    std::optional<T> pop() {
        std::unique_lock lk(mu_);
        not_empty_.wait(lk, [&] { return closed_ || !q_.empty(); });
        if (q_.empty()) return std::nullopt;
        T v = std::move(q_.front());
        q_.pop();
        not_full_.notify_one();
        return v;
    }

    void close() {
        std::lock_guard lk(mu_);
        closed_ = true;
        not_empty_.notify_all();
        not_full_.notify_all();
    }

private:
    size_t capacity_;
    std::queue<T> q_;
    std::mutex mu_;
    std::condition_variable not_empty_, not_full_;
    bool closed_ = false;
};

/// In-memory frame source / sink.
class VectorReader : public FrameReader {
public:
    explicit VectorReader(const std::vector<Frame>& frames) : frames_(frames) {}
    std::optional<Frame> next() override;
    StreamInfo info() const override;

private:
    const std::vector<Frame>& frames_;
    size_t pos_ = 0;
};

class VectorWriter : public FrameWriter {
public:
    void write(const Frame& f) override { frames.push_back(f); }
    void close() override {}
    int count() const override { return static_cast<int>(frames.size()); }
    std::vector<Frame> frames;
};

struct FrameRecord {
    int index = 0;
    Homography m;  // motion from the previous frame (identity for frame 0)
    Homography p;
    StitchChoice choice = StitchChoice::NoStitch;
    int iterations = 0;
    long invalid_pixels = 0;
    DeficitType deficit = DeficitType::None;
    bool seam_fallback = false;
};

struct StabilizeResult {
    EvalReport report;
    std::vector<FrameRecord> records;
};

/// Three-stage stabilizer: reader thread, analysis on the calling thread, render thread.
/// In stitching mode frame n is decided once frame n + 1 has been analyzed.
StabilizeResult stabilize_stream(FrameReader& in, FrameWriter* out, const PipelineConfig& cfg);

/// Global motion for every frame transition.
MotionSidecar analyze_stream(FrameReader& in, const PipelineConfig& cfg, EvalReport* report = nullptr);

struct HyperlapseResult {
    EvalReport report;
    std::vector<PlannedFrame> plan;
};

HyperlapseResult plan_hyperlapse(const MotionSidecar& sc, const PipelineConfig& cfg);

/// Renders a hyperlapse plan from the input stream (keyframes every `skip` frames).
void render_hyperlapse(FrameReader& in, FrameWriter& out, const std::vector<PlannedFrame>& plan,
                       const MotionSidecar& sc, const PipelineConfig& cfg, EvalReport& report);

/// Root-mean-square output camera velocity: angles of P_n^-1 M_n P_{n-1}.
double jitter_metric(const std::vector<Homography>& p, const std::vector<Homography>& m, const CameraParams& cam);

EvalReport run_stabilize(const PipelineConfig& cfg);
EvalReport run_analyze(const PipelineConfig& cfg);
EvalReport run_hyperlapse(const PipelineConfig& cfg);
EvalReport run_synth(const PipelineConfig& cfg);
EvalReport run_eval(const PipelineConfig& cfg);

}  // namespace stitchstab
