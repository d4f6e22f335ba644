#pragma once

#include <algorithm>

namespace ccm {

// Axis-aligned box in continuous image coordinates, origin top-left.
// Area uses the half-open convention: (x_max - x_min) * (y_max - y_min).
struct BoundingBox {
    double x_min = 0.0;
    double y_min = 0.0;
    double x_max = 0.0;
    double y_max = 0.0;

    double width() const { return x_max - x_min; }
    double height() const { return y_max - y_min; }
    double area() const { return width() * height(); }

    bool valid() const { return x_min <= x_max && y_min <= y_max; }

    bool operator==(const BoundingBox&) const = default;
};

// Intersection-over-union. Degenerate boxes (zero area) yield 0.
double box_iou(const BoundingBox& a, const BoundingBox& b);

// Scale a box by `scale` about its center, then clamp to [0,w] x [0,h].
BoundingBox crop_region(const BoundingBox& bbox, double scale, double image_w, double image_h);

}  // namespace ccm
