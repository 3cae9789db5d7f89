#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "stitchstab/geometry.hpp"
#include "stitchstab/image.hpp"

namespace stitchstab {

class SeamError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class WarpScale { Full, Quarter };

/// Output-space raster with per-pixel validity. Invalid pixels hold luma 0 (chroma 128).
struct WarpedImage {
    LumaPlane luma;
    Mask valid;
    WarpScale scale = WarpScale::Full;
    std::optional<LumaPlane> cb, cr;

    FrameDims dims() const { return luma.dims(); }
};

FrameDims quarter_dims(FrameDims full);

/// Inverse-mapped bilinear warp. h maps output pixel coordinates to source pixel
/// coordinates; validity means the source coordinate lies in [0, W-1] x [0, H-1].
/// At quarter scale each output pixel stands for a 4x4 block of the full output:
/// luma comes from the source's 2x-downsampled-twice plane at the block center and the
/// block is valid only when all four of its corner pixels are valid.
WarpedImage warp(const Frame& src, const Homography& h, FrameDims out_dims, WarpScale scale = WarpScale::Full);
WarpedImage warp_quarter(const LumaPlane& src_quarter, FrameDims src_dims, const Homography& h, FrameDims out_full);

/// Source plane for quarter-scale warps (two 2x2 box downsamples).
LumaPlane quarter_plane(const LumaPlane& luma);

Mask deficit_mask(const WarpedImage& img);

/// 8-neighborhood dilation.
Mask dilate8(const Mask& m);

long count_set(const Mask& m);

enum class DeficitType { None, I, L, C, O };
const char* to_string(DeficitType t);

enum Edge : int { kTop = 0, kRight = 1, kBottom = 2, kLeft = 3 };

/// Expanded deficit region. Either a union of edge bands (bands[e] = depth in pixels,
/// 0 = unused) or, for the L corner step, a rectangle anchored at a corner.
struct DeficitShape {
    DeficitType type = DeficitType::None;
    FrameDims dims;
    std::array<int, 4> bands{};
    bool corner_rect = false;
    int corner = 0;            // 0 top-left, 1 top-right, 2 bottom-right, 3 bottom-left
    int rect_w = 0, rect_h = 0;
    long area = 0;
    int touched = 0;           // bitset over Edge of edges the classified mask touches

    bool contains(int x, int y) const;
    Mask region() const;
};

/// Every candidate expansion the classifier evaluates (exposed for minimality checks).
std::vector<DeficitShape> deficit_candidates(const Mask& mask);

/// Minimum-area candidate; ties go to I, L, C, O in that order, then edge order
/// top, right, bottom, left. Returns type None for an empty mask.
DeficitShape classify_deficit(const Mask& mask);

constexpr std::int64_t kInfCost = std::numeric_limits<std::int64_t>::max();
constexpr std::int64_t kInvalidLumaCost = 4 * 255 + 1;

/// Node grid of pixel corners: node (x, y), 0 <= x <= w, 0 <= y <= h, index y * (w + 1) + x.
/// Horizontal edge (x, y)-(x+1, y) separates pixels (x, y-1) and (x, y).
/// Vertical edge (x, y)-(x, y+1) separates pixels (x-1, y) and (x, y).
struct SeamGraph {
    int w = 0, h = 0;
    Mask region;                      // pixels inside the search region
    std::vector<std::int64_t> hcost;  // w * (h + 1), index y * w + x
    std::vector<std::int64_t> vcost;  // (w + 1) * h, index y * (w + 1) + x
    std::vector<int> starts, ends;

    SeamGraph() = default;
    SeamGraph(int w, int h);

    int node(int x, int y) const { return y * (w + 1) + x; }
    int node_count() const { return (w + 1) * (h + 1); }
    std::int64_t& hedge(int x, int y) { return hcost[static_cast<size_t>(y) * w + x]; }
    std::int64_t hedge(int x, int y) const { return hcost[static_cast<size_t>(y) * w + x]; }
    std::int64_t& vedge(int x, int y) { return vcost[static_cast<size_t>(y) * (w + 1) + x]; }
    std::int64_t vedge(int x, int y) const { return vcost[static_cast<size_t>(y) * (w + 1) + x]; }

    /// Cost of the edge between adjacent nodes a and b (kInfCost if not adjacent).
    std::int64_t edge_cost(int a, int b) const;
};

/// Search band around the expanded region (factor in [2, 4]) plus the start/end node
/// sets on the output border. Edge costs are left at kInfCost.
SeamGraph build_search_region(const DeficitShape& shape, double factor);

/// Fills in costs for edges inside the search region from quarter-scale main/sub images.
void edge_costs(const WarpedImage& main, const WarpedImage& sub, const Mask& vicinity, SeamGraph& graph);

struct SeamPath {
    std::vector<int> nodes;
    std::int64_t cost = 0;
};

/// Multi-source Dijkstra from any start node to any end node. Ties resolve by node index.
SeamPath dijkstra_seam(const SeamGraph& graph);

/// Pixels (quarter scale) on the deficit side of the seam: 4-connected flood fill from
/// the deficit pixels that never crosses a seam edge.
Mask label_sub_side(const Mask& deficit, const SeamPath& seam, int w, int h);

struct MergeResult {
    Frame frame;
    long invalid_pixels = 0;
};

/// Hard-cut composite at full scale. label is quarter scale and marks pixels that take the
/// sub frame; a pixel whose preferred source is invalid falls back to the other source.
MergeResult merge(const WarpedImage& main, const WarpedImage& sub, const Mask& label, FrameDims out_dims);

MergeResult crop_only(const WarpedImage& main);

struct SeamParams {
    double factor = 3.0;
    void validate() const;
};

struct StitchDebug {
    LumaPlane main_luma;          // quarter-scale warped main frame
    Mask deficit, search, label;  // quarter scale
    SeamPath seam;
};

struct StitchResult {
    MergeResult merged;
    DeficitType type = DeficitType::None;
    bool fallback = false;       // no seam (type O, degenerate band or no finite path)
    std::string fallback_reason;
    std::int64_t seam_cost = 0;
    StitchDebug debug;
};

/// Full stitching crop: main_h / sub_h map output pixels into the main / sub source frames.
StitchResult stitch(const Frame& main_src, const LumaPlane& main_quarter, const Homography& main_h,
                    const Frame& sub_src, const LumaPlane& sub_quarter, const Homography& sub_h,
                    FrameDims out_dims, const SeamParams& params);

/// Quarter-scale debug overlay: gray main luma, yellow search band, pink sub side,
/// blue deficit. Written as binary PPM.
void write_seam_overlay(const std::string& path, const StitchDebug& dbg);

}  // namespace stitchstab
