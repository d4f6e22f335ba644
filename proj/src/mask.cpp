#include "ccmatch/mask.hpp"

#include <numeric>

#include "ccmatch/errors.hpp"

namespace ccm {

void BinaryMask::validate() const {
    if (width <= 0 || height <= 0)
        throw input_error("mask dimensions must be positive");
    std::uint64_t total = std::accumulate(runs.begin(), runs.end(), std::uint64_t{0});
    if (total != pixel_count())
        throw input_error("RLE run lengths sum to " + std::to_string(total) +
                          ", expected " + std::to_string(pixel_count()));
}

BinaryMask rle_encode(const std::vector<std::uint8_t>& grid, int width, int height) {
    if (width <= 0 || height <= 0)
        throw input_error("rle_encode: grid dimensions must be positive");
    if (grid.size() != static_cast<std::size_t>(width) * height)
        throw input_error("rle_encode: grid size does not match dimensions");

    BinaryMask mask;
    mask.width = width;
    mask.height = height;
    bool current = false;  // runs start with background
    std::uint64_t run = 0;
    for (int x = 0; x < width; ++x) {
        for (int y = 0; y < height; ++y) {
            bool v = grid[static_cast<std::size_t>(y) * width + x] != 0;
            if (v == current) {
                ++run;
            } else {
                mask.runs.push_back(run);
                current = v;
                run = 1;
            }
        }
    }
    mask.runs.push_back(run);
    return mask;
}

std::vector<std::uint8_t> rle_decode(const BinaryMask& mask) {
    mask.validate();
    std::vector<std::uint8_t> grid(mask.pixel_count(), 0);
    std::uint64_t pos = 0;
    bool fg = false;
    for (std::uint64_t run : mask.runs) {
        if (fg) {
            for (std::uint64_t p = pos; p < pos + run; ++p) {
                std::uint64_t x = p / mask.height;
                std::uint64_t y = p % mask.height;
                grid[y * mask.width + x] = 1;
            }
        }
        pos += run;
        fg = !fg;
    }
    return grid;
}

std::uint64_t foreground_area(const BinaryMask& mask) {
    std::uint64_t area = 0;
    for (std::size_t i = 1; i < mask.runs.size(); i += 2) area += mask.runs[i];
    return area;
}

std::vector<std::pair<std::uint64_t, std::uint64_t>> foreground_intervals(const BinaryMask& mask) {
    std::vector<std::pair<std::uint64_t, std::uint64_t>> out;
    std::uint64_t pos = 0;
    bool fg = false;
    for (std::uint64_t run : mask.runs) {
        if (fg && run > 0) out.emplace_back(pos, pos + run);
        pos += run;
        fg = !fg;
    }
    return out;
}

double mask_iou(const BinaryMask& a, const BinaryMask& b) {
    if (a.width != b.width || a.height != b.height)
        throw input_error("mask_iou: shape mismatch");
    auto ia = foreground_intervals(a);
    auto ib = foreground_intervals(b);
    std::uint64_t inter = 0;
    std::size_t i = 0, j = 0;
    while (i < ia.size() && j < ib.size()) {
        std::uint64_t lo = std::max(ia[i].first, ib[j].first);
        std::uint64_t hi = std::min(ia[i].second, ib[j].second);
        if (hi > lo) inter += hi - lo;
        if (ia[i].second < ib[j].second) ++i; else ++j;
    }
    std::uint64_t uni = foreground_area(a) + foreground_area(b) - inter;
    if (uni == 0) return 0.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

BoundingBox tight_bbox(const BinaryMask& mask) {
    std::uint64_t xmin = mask.width, xmax = 0, ymin = mask.height, ymax = 0;
    bool any = false;
    for (const auto& [lo, hi] : foreground_intervals(mask)) {
        for (std::uint64_t p = lo; p < hi; ++p) {
            std::uint64_t x = p / mask.height;
            std::uint64_t y = p % mask.height;
            any = true;
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    }
    if (!any) throw input_error("tight_bbox: mask has no foreground pixels");
    return BoundingBox{static_cast<double>(xmin), static_cast<double>(ymin),
                       static_cast<double>(xmax + 1), static_cast<double>(ymax + 1)};
}

}  // namespace ccm
