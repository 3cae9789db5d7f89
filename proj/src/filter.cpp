#include "stitchstab/filter.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace stitchstab {

void FilterParams::validate() const {
    if (window < 1) throw std::invalid_argument("filter: window must be >= 1");
    if (!(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("filter: eta must lie in (0, 1)");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("filter: epsilon must lie in (0, 1)");
    if (!(crop_ratio > 0.0 && crop_ratio <= 1.0)) throw std::invalid_argument("filter: crop ratio must lie in (0, 1]");
    if (max_iterations < 1) throw std::invalid_argument("filter: max iterations must be >= 1");
}

MidrangeWindow::MidrangeWindow(int capacity) : capacity_(capacity) {
    if (capacity < 1) throw std::invalid_argument("midrange window: capacity must be >= 1");
}

double MidrangeWindow::push(double v) {
    values_.push_back(v);
    if (static_cast<int>(values_.size()) > capacity_) values_.pop_front();
    return value();
}

double MidrangeWindow::value() const {
    if (values_.empty()) return 0.0;
    const auto [lo, hi] = std::minmax_element(values_.begin(), values_.end());
    return (*hi + *lo) / 2;
}

Homography forced_update(const Homography& q_prev, const Homography& n, const EulerAngles& g, const CameraParams& cam,
                         const FilterParams& params, AngleDecomposition* decomposition) {
    const Homography q = normalize(multiply(multiply(rotation_homography(g, cam), n), q_prev));
    AngleDecomposition dec = decompose(q, cam);
    Homography lam;
    for (int i = 0; i < 9; ++i) {
        lam.m[i] = (1.0 - params.eta) * dec.residual.m[i] + params.eta * Homography::identity().m[i];
    }
    dec.residual = normalize(lam);
    if (decomposition) *decomposition = dec;
    return normalize(multiply(rotation_homography(dec.angles, cam), dec.residual));
}

Homography filter_update(FilterState& state, const Homography& n, const CameraParams& cam,
                         const FilterParams& params) {
    const EulerAngles a = estimate_angles(invert(n), cam);
    const EulerAngles g{state.yaw.push(a.yaw), state.pitch.push(a.pitch), state.roll.push(a.roll)};
    return filter_update_forced(state, n, g, cam, params);
}

Homography filter_update_forced(FilterState& state, const Homography& n, const EulerAngles& g,
                                const CameraParams& cam, const FilterParams& params) {
    state.q = forced_update(state.q, n, g, cam, params, &state.last);
    return state.q;
}

FrameDims output_dims(FrameDims input, double crop_ratio) {
    return {static_cast<int>(std::lround(crop_ratio * input.width)),
            static_cast<int>(std::lround(crop_ratio * input.height))};
}

Point2 crop_offset(FrameDims input, FrameDims output) {
    return {0.5 * (input.width - output.width), 0.5 * (input.height - output.height)};
}

Homography output_to_input(const Homography& p, FrameDims input, FrameDims output) {
    const Point2 o = crop_offset(input, output);
    return normalize(multiply(p, Homography::translation(o.x, o.y)));
}

Quad crop_boundary(const Homography& p, double crop_ratio, FrameDims input) {
    const FrameDims out = output_dims(input, crop_ratio);
    if (out.width < 1 || out.height < 1) throw GeometryError("crop_boundary: empty output frame");
    const Quad q = transform_quad(frame_rect(out), output_to_input(p, input, out));
    if (std::abs(q.signed_area()) < 1e-9) throw GeometryError("crop_boundary: degenerate quad");
    return q;
}

Quad frame_rect(FrameDims dims) { return Quad::rect(0, 0, dims.width - 1, dims.height - 1); }

namespace {

constexpr double kInsideTol = 1e-9;

bool vertices_inside(const Quad& crop, FrameDims dims) {
    const double tx = kInsideTol * std::max(1, dims.width);
    const double ty = kInsideTol * std::max(1, dims.height);
    for (const auto& p : crop.v) {
        if (!(p.x >= -tx && p.x <= dims.width - 1 + tx && p.y >= -ty && p.y <= dims.height - 1 + ty)) return false;
    }
    return true;
}

}  // namespace

bool is_inside_conventional(const Quad& crop, FrameDims dims) { return vertices_inside(crop, dims); }

const char* to_string(StitchChoice c) {
    switch (c) {
        case StitchChoice::NoStitch: return "none";
        case StitchChoice::StitchPrev: return "prev";
        case StitchChoice::StitchNext: return "next";
        case StitchChoice::Fail: return "fail";
    }
    return "?";
}

StitchChoice is_inside_stitching(const Quad& crop, const std::optional<Homography>& m_prev_to_curr,
                                 const std::optional<Homography>& m_curr_to_next, FrameDims dims) {
    if (vertices_inside(crop, dims)) return StitchChoice::NoStitch;

    // A crop reaching past two opposite edges leaves a ring-like deficit; no seam for that.
    double x0 = crop.v[0].x, x1 = x0, y0 = crop.v[0].y, y1 = y0;
    for (const auto& p : crop.v) {
        x0 = std::min(x0, p.x);
        x1 = std::max(x1, p.x);
        y0 = std::min(y0, p.y);
        y1 = std::max(y1, p.y);
    }
    if ((x0 < 0 && x1 > dims.width - 1) || (y0 < 0 && y1 > dims.height - 1)) return StitchChoice::Fail;

    const Quad main = frame_rect(dims);
    auto covered = [&](const Homography& sub_to_main) {
        try {
            return quad_edges_inside_union(crop, main, transform_quad(main, sub_to_main));
        } catch (const GeometryError&) {
            return false;
        }
    };
    if (m_prev_to_curr && covered(*m_prev_to_curr)) return StitchChoice::StitchPrev;
    if (m_curr_to_next) {
        try {
            if (covered(invert(*m_curr_to_next))) return StitchChoice::StitchNext;
        } catch (const GeometryError&) {
        }
    }
    return StitchChoice::Fail;
}

Homography to_identity(const Homography& p, double epsilon) {
    const Homography pn = normalize(p);
    const Homography id = Homography::identity();
    Homography out;
    for (int i = 0; i < 9; ++i) out.m[i] = epsilon * id.m[i] + (1.0 - epsilon) * pn.m[i];
    return normalize(out);
}

EnsureResult ensure_inside(const Homography& p, const std::function<bool(const Homography&)>& inside,
                           const FilterParams& params) {
    auto test = [&](const Homography& h) {
        try {
            return inside(h);
        } catch (const GeometryError&) {
            return false;
        }
    };
    EnsureResult r{normalize(p), 0};
    while (!test(r.p)) {
        if (r.iterations >= params.max_iterations) {
            throw FilterError("ensure_inside: iteration cap reached (" + std::to_string(params.max_iterations) + ")");
        }
        r.p = to_identity(r.p, params.epsilon);
        ++r.iterations;
    }
    return r;
}

Stabilizer::Stabilizer(const CameraParams& cam, const FilterParams& params, bool stitching)
    : cam_(cam), params_(params), stitching_(stitching), state_(params.window) {
    cam_.validate();
    params_.validate();
}

FrameDecision Stabilizer::first() {
    state_ = FilterState(params_.window);
    rs_.reset();
    return FrameDecision{};
}

FrameDecision Stabilizer::next(const Homography& m, const std::optional<Homography>& m_next) {
    FrameDecision out;
    const RsStep rs = rs_.advance(m, cam_);
    out.d = rs.d;
    out.n = rs.n;
    const Homography q = filter_update(state_, rs.n, cam_, params_);
    const Homography p = normalize(multiply(rs.d, q));

    const std::optional<Homography> prev = m;
    auto choice_for = [&](const Homography& h) {
        const Quad crop = crop_boundary(h, params_.crop_ratio, cam_.dims);
        if (!stitching_) {
            return is_inside_conventional(crop, cam_.dims) ? StitchChoice::NoStitch : StitchChoice::Fail;
        }
        return is_inside_stitching(crop, prev, m_next, cam_.dims);
    };
    const EnsureResult er = ensure_inside(
        p, [&](const Homography& h) { return choice_for(h) != StitchChoice::Fail; }, params_);
    out.p = er.p;
    out.iterations = er.iterations;
    out.choice = choice_for(er.p);
    if (er.iterations > 0) state_.q = normalize(multiply(invert(rs.d), er.p));
    out.q = state_.q;
    return out;
}

}  // namespace stitchstab
