#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "stitchstab/filter.hpp"
#include "stitchstab/geometry.hpp"

namespace stitchstab {

class SidecarError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Per-frame motion metadata written by `analyze`. motions[k] maps frame k-1 into frame k
/// for k >= 1; motions[0] is the identity placeholder for the first frame.
struct MotionSidecar {
    static constexpr int kVersion = 1;

    FrameDims dims;
    double focal = 0.0;
    double sensor_height = 0.0;
    std::vector<Homography> motions;

    int frames() const { return static_cast<int>(motions.size()); }
    CameraParams camera() const;
};

void write_sidecar(const std::string& path, const MotionSidecar& sc);
MotionSidecar read_sidecar(const std::string& path);
std::string sidecar_to_string(const MotionSidecar& sc);
MotionSidecar sidecar_from_string(const std::string& text);

/// M_{start+skip} * ... * M_{start+1}: maps frame `start` into frame `start + skip`.
Homography accumulate_skip(const MotionSidecar& sc, int start, int skip);

struct HyperlapseParams {
    int skip = 4;
    double eps_turn = 1.0;
    double eps_outside = 16.0;
    double eps_angle = 18.0 / 3.14159265358979323846;  // 1 per 10 degrees, per radian
    int horizon = 64;  // N
    int beam = 1024;   // S
    int turns = 6;     // T
    int period_base = 2;

    static HyperlapseParams preset(const std::string& name);
    void validate() const;
};

double hl_frame_cost(const EulerAngles& a, bool outside_attempt, const HyperlapseParams& params);

/// Mean of the last p entries (all entries when fewer exist).
EulerAngles average_motion(const std::vector<EulerAngles>& history, int p);

struct PlannedFrame {
    int output_index = 0;
    int input_index = 0;
    Homography p;
    StitchChoice choice = StitchChoice::NoStitch;
    int iterations = 0;
    EulerAngles velocities;
    double cost = 0.0;
    std::uint64_t node_id = 0;
    std::uint64_t parent_id = 0;
};

struct SearchNode {
    int parent = -1;  // index into the previous level
    std::uint64_t id = 0;
    std::uint64_t parent_id = 0;
    Homography q;
    Homography p;
    EulerAngles velocities;
    double cost = 0.0;
    int iterations = 0;
    StitchChoice choice = StitchChoice::NoStitch;
};

/// Bounded tree search over camera velocities for skip-accumulated motion.
class HyperlapsePlanner {
public:
    HyperlapsePlanner(const MotionSidecar& sc, const FilterParams& filter, const HyperlapseParams& params,
                      bool stitching);

    /// Number of planned output frames after frame 0.
    int output_steps() const { return static_cast<int>(steps_.size()); }

    /// Expands every max-depth leaf for the next output step and keeps the best S children.
    void search_each_frame();
    /// Emits the depth-1 node on the path to the best max-depth leaf and re-roots there.
    PlannedFrame fix_state();

    std::optional<PlannedFrame> get_first();
    std::optional<PlannedFrame> get_others();

    /// Runs the whole plan; result[0] is the identity output for input frame 0.
    std::vector<PlannedFrame> run();

    int searches() const { return searches_; }
    int searches_before_first() const { return searches_before_first_; }
    int height() const { return static_cast<int>(levels_.size()) - 1; }
    const std::vector<SearchNode>& level(int depth) const { return levels_.at(depth); }
    int next_step() const { return next_step_; }

private:
    struct Step {
        Homography m;                  // accumulated motion previous output -> this output
        std::optional<Homography> m_next;
        Homography d, n;
        EulerAngles angles;            // read from N^-1
    };

    SearchNode process(const SearchNode& parent, int parent_index, const EulerAngles& veloc, double eps,
                       const Step& step);

    CameraParams cam_;
    FilterParams filter_;
    HyperlapseParams params_;
    bool stitching_;
    std::vector<Step> steps_;
    std::vector<EulerAngles> history_;  // angles of steps already searched
    std::deque<std::vector<SearchNode>> levels_;
    int next_step_ = 0;     // index into steps_ of the next search
    int emitted_ = 0;
    int searches_ = 0;
    int searches_before_first_ = -1;
    std::uint64_t next_id_ = 1;
    bool first_done_ = false;
};

}  // namespace stitchstab
