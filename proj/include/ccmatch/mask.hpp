#pragma once

#include <cstdint>
#include <vector>

#include "ccmatch/geometry.hpp"

namespace ccm {

// Binary mask stored as uncompressed RLE: alternating background/foreground
// run lengths over column-major pixel order (COCO convention). The first run
// counts background pixels and may be zero.
struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint64_t> runs;

    std::uint64_t pixel_count() const { return static_cast<std::uint64_t>(width) * height; }

    // Throws Error(Input) if the run lengths do not sum to width*height.
    void validate() const;
};

// Encode a row-major boolean grid. Grid size must be width*height.
BinaryMask rle_encode(const std::vector<std::uint8_t>& grid_row_major, int width, int height);

// Decode back to a row-major boolean grid.
std::vector<std::uint8_t> rle_decode(const BinaryMask& mask);

std::uint64_t foreground_area(const BinaryMask& mask);

// Intersection-over-union of two same-sized masks; 0 when the union is empty.
double mask_iou(const BinaryMask& a, const BinaryMask& b);

// Tight box of the foreground pixels, half-open pixel coordinates.
// Throws Error(Input) when the mask is empty.
BoundingBox tight_bbox(const BinaryMask& mask);

// Foreground intervals [begin, end) in column-major linear pixel order.
std::vector<std::pair<std::uint64_t, std::uint64_t>> foreground_intervals(const BinaryMask& mask);

}  // namespace ccm
