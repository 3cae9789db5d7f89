#include "stitchstab/hyperlapse.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "stitchstab/rolling_shutter.hpp"

namespace stitchstab {

CameraParams MotionSidecar::camera() const {
    CameraParams cam = CameraParams::for_frame(dims, focal);
    cam.sensor_height = sensor_height;
    return cam;
}

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::string sidecar_to_string(const MotionSidecar& sc) {
    std::ostringstream os;
    os << "{\"format\":\"stitchstab-motion\",\"version\":" << MotionSidecar::kVersion << ",\"width\":" << sc.dims.width
       << ",\"height\":" << sc.dims.height << ",\"focal\":" << fmt17(sc.focal)
       << ",\"sensor_height\":" << fmt17(sc.sensor_height) << ",\"frames\":" << sc.frames() << "}\n";
    for (int k = 1; k < sc.frames(); ++k) {
        os << "{\"index\":" << k << ",\"m\":[";
        for (int i = 0; i < 9; ++i) os << (i ? "," : "") << fmt17(sc.motions[k].m[i]);
        os << "]}\n";
    }
    return os.str();
}

MotionSidecar sidecar_from_string(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line)) throw SidecarError("sidecar: missing header");
    MotionSidecar sc;
    int frames = 0;
    try {
        const auto h = nlohmann::json::parse(line);
        if (h.value("format", "") != "stitchstab-motion") throw SidecarError("sidecar: unknown format");
        if (h.at("version").get<int>() != MotionSidecar::kVersion) throw SidecarError("sidecar: unsupported version");
        sc.dims = {h.at("width").get<int>(), h.at("height").get<int>()};
        sc.focal = h.at("focal").get<double>();
        sc.sensor_height = h.at("sensor_height").get<double>();
        frames = h.at("frames").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw SidecarError(std::string("sidecar: bad header: ") + e.what());
    }
    if (frames < 0) throw SidecarError("sidecar: negative frame count");
    sc.motions.assign(frames > 0 ? 1 : 0, Homography::identity());
    int expected = 1;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        try {
            const auto rec = nlohmann::json::parse(line);
            if (rec.at("index").get<int>() != expected) throw SidecarError("sidecar: records out of order");
            const auto& arr = rec.at("m");
            if (!arr.is_array() || arr.size() != 9) throw SidecarError("sidecar: matrix must have 9 entries");
            Homography m;
            for (int i = 0; i < 9; ++i) m.m[i] = arr[i].get<double>();
            sc.motions.push_back(m);
        } catch (const nlohmann::json::exception& e) {
            throw SidecarError(std::string("sidecar: bad record: ") + e.what());
        }
        ++expected;
    }
    if (sc.frames() != frames) throw SidecarError("sidecar: frame count does not match header");
    return sc;
}

void write_sidecar(const std::string& path, const MotionSidecar& sc) {
    std::ofstream f(path);
    if (!f) throw SidecarError("cannot write sidecar " + path);
    f << sidecar_to_string(sc);
    if (!f) throw SidecarError("write failed: " + path);
}

MotionSidecar read_sidecar(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw SidecarError("cannot read sidecar " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return sidecar_from_string(ss.str());
}

Homography accumulate_skip(const MotionSidecar& sc, int start, int skip) {
    if (start < 0 || skip < 1 || start + skip >= sc.frames()) throw std::out_of_range("accumulate_skip: range outside sidecar");
    Homography m = Homography::identity();
    for (int k = start + 1; k <= start + skip; ++k) m = normalize(multiply(sc.motions[k], m));
    return m;
}

HyperlapseParams HyperlapseParams::preset(const std::string& name) {
    HyperlapseParams p;
    if (name == "standard") {
        p.beam = 1024;
    } else if (name == "lite") {
        p.beam = 256;
    } else {
        throw std::invalid_argument("unknown hyperlapse preset: " + name);
    }
    return p;
}

void HyperlapseParams::validate() const {
    if (skip < 1) throw std::invalid_argument("hyperlapse: skip must be >= 1");
    if (!(eps_turn > 0 && eps_outside > 0 && eps_angle > 0)) throw std::invalid_argument("hyperlapse: costs must be positive");
    if (horizon < 1) throw std::invalid_argument("hyperlapse: horizon N must be >= 1");
    if (turns < 1) throw std::invalid_argument("hyperlapse: turn count T must be >= 1");
    if (beam < turns + 1) throw std::invalid_argument("hyperlapse: beam S must be >= T + 1");
    if (period_base < 1) throw std::invalid_argument("hyperlapse: period base must be >= 1");
}

double hl_frame_cost(const EulerAngles& a, bool outside_attempt, const HyperlapseParams& params) {
    return params.eps_angle * (std::abs(a.yaw) + std::abs(a.pitch) + std::abs(a.roll)) +
           (outside_attempt ? params.eps_outside : 0.0);
}

EulerAngles average_motion(const std::vector<EulerAngles>& history, int p) {
    if (history.empty() || p < 1) return {};
    const int n = std::min<int>(p, static_cast<int>(history.size()));
    EulerAngles s;
    for (int i = static_cast<int>(history.size()) - n; i < static_cast<int>(history.size()); ++i) {
        s.yaw += history[i].yaw;
        s.pitch += history[i].pitch;
        s.roll += history[i].roll;
    }
    return {s.yaw / n, s.pitch / n, s.roll / n};
}

HyperlapsePlanner::HyperlapsePlanner(const MotionSidecar& sc, const FilterParams& filter,
                                     const HyperlapseParams& params, bool stitching)
    : cam_(sc.camera()), filter_(filter), params_(params), stitching_(stitching) {
    cam_.validate();
    filter_.validate();
    params_.validate();
    const int skip = params_.skip;
    const int k = sc.frames() > 0 ? (sc.frames() - 1) / skip : 0;
    Homography d_prev = Homography::identity();
    for (int j = 1; j <= k; ++j) {
        Step s;
        s.m = accumulate_skip(sc, (j - 1) * skip, skip);
        if (j < k) s.m_next = accumulate_skip(sc, j * skip, skip);
        s.d = distortion_matrix(s.m, cam_);
        s.n = undistorted_motion(s.m, s.d, d_prev);
        s.angles = estimate_angles(invert(s.n), cam_);
        d_prev = s.d;
        steps_.push_back(s);
    }

    // Seeds: frame-0 state with zero velocity and the averaged earliest motion per period.
    std::vector<EulerAngles> earliest;
    std::vector<SearchNode> seeds;
    SearchNode zero;
    zero.id = next_id_++;
    seeds.push_back(zero);
    int period = 1;
    for (int t = 1; t <= params_.turns; ++t) {
        period *= params_.period_base;
        earliest.clear();
        for (int j = 0; j < std::min<int>(period, k); ++j) earliest.push_back(steps_[j].angles);
        SearchNode s;
        s.id = next_id_++;
        s.velocities = average_motion(earliest, period);
        seeds.push_back(s);
    }
    levels_.push_back(std::move(seeds));
}

SearchNode HyperlapsePlanner::process(const SearchNode& parent, int parent_index, const EulerAngles& veloc,
                                      double eps, const Step& step) {
    SearchNode node;
    node.parent = parent_index;
    node.parent_id = parent.id;
    node.velocities = veloc;
    AngleDecomposition dec;
    const Homography q = forced_update(parent.q, step.n, veloc, cam_, filter_, &dec);
    const Homography p = normalize(multiply(step.d, q));

    StitchChoice last = StitchChoice::Fail;
    auto inside = [&](const Homography& h) {
        last = StitchChoice::Fail;
        const Quad crop = crop_boundary(h, filter_.crop_ratio, cam_.dims);
        if (!stitching_) {
            last = is_inside_conventional(crop, cam_.dims) ? StitchChoice::NoStitch : StitchChoice::Fail;
        } else {
            last = is_inside_stitching(crop, step.m, step.m_next, cam_.dims);
        }
        return last != StitchChoice::Fail;
    };
    const EnsureResult er = ensure_inside(p, inside, filter_);
    node.p = er.p;
    node.iterations = er.iterations;
    node.choice = last;
    if (er.iterations > 0) {
        node.q = normalize(multiply(invert(step.d), er.p));
        dec = decompose(node.q, cam_);
    } else {
        node.q = q;
    }
    node.cost = parent.cost + eps + hl_frame_cost(dec.angles, er.iterations > 0, params_);
    return node;
}

void HyperlapsePlanner::search_each_frame() {
    if (next_step_ >= output_steps()) return;
    const Step& step = steps_[next_step_];
    history_.push_back(step.angles);

    std::vector<EulerAngles> turn_veloc;
    int period = 1;
    for (int t = 1; t <= params_.turns; ++t) {
        period *= params_.period_base;
        turn_veloc.push_back(average_motion(history_, period));
    }

    const auto& leaves = levels_.back();
    std::vector<SearchNode> list;
    list.reserve(leaves.size() * (1 + turn_veloc.size()));
    for (int i = 0; i < static_cast<int>(leaves.size()); ++i) {
        const SearchNode& leaf = leaves[i];
        list.push_back(process(leaf, i, leaf.velocities, 0.0, step));
        for (const auto& v : turn_veloc) list.push_back(process(leaf, i, v, params_.eps_turn, step));
    }
    std::stable_sort(list.begin(), list.end(), [](const SearchNode& a, const SearchNode& b) { return a.cost < b.cost; });
    if (static_cast<int>(list.size()) > params_.beam) list.resize(params_.beam);
    for (auto& n : list) n.id = next_id_++;
    levels_.push_back(std::move(list));
    ++next_step_;
    ++searches_;
}

PlannedFrame HyperlapsePlanner::fix_state() {
    if (height() < 1) throw std::logic_error("fix_state: tree has no levels below the root");
    const auto& last = levels_.back();
    int best = 0;
    for (int i = 1; i < static_cast<int>(last.size()); ++i)
        if (last[i].cost < last[best].cost) best = i;
    int idx = best;
    for (int depth = height(); depth > 1; --depth) idx = levels_[depth][idx].parent;

    const SearchNode& chosen = levels_[1][idx];
    PlannedFrame out;
    out.output_index = ++emitted_;
    out.input_index = emitted_ * params_.skip;
    out.p = chosen.p;
    out.choice = chosen.choice;
    out.iterations = chosen.iterations;
    out.velocities = chosen.velocities;
    out.cost = chosen.cost;
    out.node_id = chosen.id;
    out.parent_id = chosen.parent_id;

    // Re-root at the chosen node, keeping only its descendants.
    std::vector<int> remap(levels_[1].size(), -1);
    SearchNode root = chosen;
    root.parent = -1;
    remap[idx] = 0;
    std::deque<std::vector<SearchNode>> kept;
    kept.push_back({root});
    for (int depth = 2; depth <= height(); ++depth) {
        std::vector<SearchNode> next;
        std::vector<int> next_map(levels_[depth].size(), -1);
        for (int i = 0; i < static_cast<int>(levels_[depth].size()); ++i) {
            const SearchNode& n = levels_[depth][i];
            if (remap[n.parent] < 0) continue;
            SearchNode c = n;
            c.parent = remap[n.parent];
            next_map[i] = static_cast<int>(next.size());
            next.push_back(c);
        }
        kept.push_back(std::move(next));
        remap = std::move(next_map);
    }
    levels_ = std::move(kept);
    return out;
}

std::optional<PlannedFrame> HyperlapsePlanner::get_first() {
    if (first_done_) return get_others();
    while (searches_ < params_.horizon && next_step_ < output_steps()) search_each_frame();
    searches_before_first_ = searches_;
    first_done_ = true;
    if (height() < 1) return std::nullopt;
    return fix_state();
}

std::optional<PlannedFrame> HyperlapsePlanner::get_others() {
    if (!first_done_) return get_first();
    if (next_step_ < output_steps()) search_each_frame();
    if (height() < 1) return std::nullopt;
    return fix_state();
}

std::vector<PlannedFrame> HyperlapsePlanner::run() {
    std::vector<PlannedFrame> out;
    out.push_back(PlannedFrame{});
    for (auto f = get_first(); f; f = get_others()) out.push_back(*f);
    return out;
}

}  // namespace stitchstab
