#include "ccmatch/geometry.hpp"

namespace ccm {

double box_iou(const BoundingBox& a, const BoundingBox& b) {
    double iw = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
    double ih = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
    if (iw <= 0.0 || ih <= 0.0) return 0.0;
    double inter = iw * ih;
    double uni = a.area() + b.area() - inter;
    if (uni <= 0.0) return 0.0;
    return inter / uni;
}

BoundingBox crop_region(const BoundingBox& bbox, double scale, double image_w, double image_h) {
    double cx = 0.5 * (bbox.x_min + bbox.x_max);
    double cy = 0.5 * (bbox.y_min + bbox.y_max);
    double hw = 0.5 * bbox.width() * scale;
    double hh = 0.5 * bbox.height() * scale;
    BoundingBox out{cx - hw, cy - hh, cx + hw, cy + hh};
    out.x_min = std::clamp(out.x_min, 0.0, image_w);
    out.x_max = std::clamp(out.x_max, 0.0, image_w);
    out.y_min = std::clamp(out.y_min, 0.0, image_h);
    out.y_max = std::clamp(out.y_max, 0.0, image_h);
    return out;
}

}  // namespace ccm
