#pragma once

#include <deque>
#include <functional>
#include <optional>
#include <stdexcept>

#include "stitchstab/geometry.hpp"
#include "stitchstab/rolling_shutter.hpp"

namespace stitchstab {

class FilterError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct FilterParams {
    int window = 8;
    double eta = 0.25;      // residual blend toward identity
    double epsilon = 0.01;  // to-identity blend per EnsureInside iteration
    double crop_ratio = 0.9;
    int max_iterations = 2000;

    void validate() const;
};

/// Sliding window returning (max + min) / 2 of its contents.
class MidrangeWindow {
public:
    explicit MidrangeWindow(int capacity = 8);

    double push(double value);
    double value() const;
    int size() const { return static_cast<int>(values_.size()); }
    int capacity() const { return capacity_; }
    bool empty() const { return values_.empty(); }

private:
    int capacity_;
    std::deque<double> values_;
};

struct FilterState {
    explicit FilterState(int window = 8) : yaw(window), pitch(window), roll(window) {}

    Homography q;  // distortion-free cropping matrix
    MidrangeWindow yaw, pitch, roll;
    AngleDecomposition last;
};

/// One step of Q_n ~ R(g(a), g(b), g(c)) * N * Q_{n-1} with angles read from N^-1 and
/// g the mid-range filter, followed by residual suppression. Returns the new Q.
Homography filter_update(FilterState& state, const Homography& n, const CameraParams& cam,
                         const FilterParams& params);

/// Same update with g replaced by fixed angles (hyperlapse planning). Windows are untouched.
Homography filter_update_forced(FilterState& state, const Homography& n, const EulerAngles& g,
                                const CameraParams& cam, const FilterParams& params);

/// Stateless core of the forced update: R(g) * N * q_prev, then residual suppression.
Homography forced_update(const Homography& q_prev, const Homography& n, const EulerAngles& g, const CameraParams& cam,
                         const FilterParams& params, AngleDecomposition* decomposition = nullptr);

/// Output size for a crop ratio: round(ratio * input).
FrameDims output_dims(FrameDims input, double crop_ratio);

/// Input-frame offset of the centered output rectangle.
Point2 crop_offset(FrameDims input, FrameDims output);

/// Homography from output pixel coordinates to input pixel coordinates for a given P.
Homography output_to_input(const Homography& p, FrameDims input, FrameDims output);

/// The centered crop rectangle mapped through p into input coordinates.
Quad crop_boundary(const Homography& p, double crop_ratio, FrameDims input);

Quad frame_rect(FrameDims dims);

bool is_inside_conventional(const Quad& crop, FrameDims dims);

enum class StitchChoice { NoStitch, StitchPrev, StitchNext, Fail };

const char* to_string(StitchChoice c);

/// m_prev_to_curr maps previous-frame coordinates into the current frame; m_curr_to_next
/// maps current-frame coordinates into the next frame. Either may be absent at stream ends.
StitchChoice is_inside_stitching(const Quad& crop, const std::optional<Homography>& m_prev_to_curr,
                                 const std::optional<Homography>& m_curr_to_next, FrameDims dims);

Homography to_identity(const Homography& p, double epsilon);

struct EnsureResult {
    Homography p;
    int iterations = 0;
};

/// Blends p toward I until inside(p) holds. A predicate that throws GeometryError
/// counts as outside.
EnsureResult ensure_inside(const Homography& p, const std::function<bool(const Homography&)>& inside,
                           const FilterParams& params);

struct FrameDecision {
    Homography p;  // emitted cropping matrix
    Homography q;
    Homography d;
    Homography n;
    int iterations = 0;
    StitchChoice choice = StitchChoice::NoStitch;
};

/// Per-stream stabilizer: RS factorization, filtering, EnsureInside and Q resync.
class Stabilizer {
public:
    Stabilizer(const CameraParams& cam, const FilterParams& params, bool stitching);

    /// Frame 0: P = I.
    FrameDecision first();

    /// m maps frame n-1 into frame n. In stitching mode m_next maps frame n into n+1
    /// (absent for the last frame).
    FrameDecision next(const Homography& m, const std::optional<Homography>& m_next);

    const FilterState& state() const { return state_; }
    const CameraParams& camera() const { return cam_; }
    const FilterParams& params() const { return params_; }
    bool stitching() const { return stitching_; }

private:
    CameraParams cam_;
    FilterParams params_;
    bool stitching_;
    FilterState state_;
    RsState rs_;
};

}  // namespace stitchstab
