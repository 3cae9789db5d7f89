#include "stitchstab/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace stitchstab {

FrameDims chroma_dims(FrameDims luma) { return {(luma.width + 1) / 2, (luma.height + 1) / 2}; }

void Frame::validate() const {
    if (luma.empty()) throw std::invalid_argument("frame: missing luma plane");
    if (cb.has_value() != cr.has_value()) throw std::invalid_argument("frame: chroma planes must come in pairs");
    if (has_chroma()) {
        const FrameDims c = chroma_dims(dims());
        if (!(cb->dims() == c) || !(cr->dims() == c)) {
            throw std::invalid_argument("frame: chroma plane size inconsistent with 4:2:0 layout");
        }
    }
}

LumaPlane downsample_box(const LumaPlane& src) {
    const int w = src.width() / 2;
    const int h = src.height() / 2;
    LumaPlane out(w, h);
    for (int y = 0; y < h; ++y) {
        const auto r0 = src.row(2 * y);
        const auto r1 = src.row(2 * y + 1);
        auto dst = out.row(y);
        for (int x = 0; x < w; ++x) {
            const int s = r0[2 * x] + r0[2 * x + 1] + r1[2 * x] + r1[2 * x + 1];
            dst[x] = static_cast<std::uint8_t>((s + 2) >> 2);
        }
    }
    return out;
}

double sample_bilinear(const LumaPlane& plane, double x, double y) {
    const int w = plane.width();
    const int h = plane.height();
    x = std::clamp(x, 0.0, static_cast<double>(w - 1));
    y = std::clamp(y, 0.0, static_cast<double>(h - 1));
    const int x0 = std::min(static_cast<int>(x), w - 1);
    const int y0 = std::min(static_cast<int>(y), h - 1);
    const int x1 = std::min(x0 + 1, w - 1);
    const int y1 = std::min(y0 + 1, h - 1);
    const double fx = x - x0;
    const double fy = y - y0;
    const double top = plane.at(x0, y0) + fx * (plane.at(x1, y0) - plane.at(x0, y0));
    const double bot = plane.at(x0, y1) + fx * (plane.at(x1, y1) - plane.at(x0, y1));
    return top + fy * (bot - top);
}

}  // namespace stitchstab
