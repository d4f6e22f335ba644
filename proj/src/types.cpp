#include "ccmatch/types.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "ccmatch/errors.hpp"

namespace ccm {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

}  // namespace

MaskProposal make_proposal(std::int64_t id, std::string image_id, BinaryMask mask,
                           std::optional<BoundingBox> declared_bbox) {
    mask.validate();
    if (foreground_area(mask) == 0)
        throw input_error("proposal " + std::to_string(id) + " in image " + image_id +
                          " has an empty mask");
    BoundingBox box = tight_bbox(mask);
    if (declared_bbox) {
        auto close = [](double a, double b) { return std::abs(a - b) <= 1e-6; };
        if (!close(declared_bbox->x_min, box.x_min) || !close(declared_bbox->y_min, box.y_min) ||
            !close(declared_bbox->x_max, box.x_max) || !close(declared_bbox->y_max, box.y_max))
            throw input_error("proposal " + std::to_string(id) + " in image " + image_id +
                              ": declared bbox does not match mask foreground");
    }
    return MaskProposal{id, std::move(image_id), std::move(mask), box};
}

const std::int64_t* CountPrediction::find(const std::string& category) const {
    for (const auto& [name, count] : counts)
        if (name == category) return &count;
    return nullptr;
}

void CountPrediction::validate() const {
    std::set<std::string> seen;
    for (const auto& [name, count] : counts) {
        if (name.empty() || name.find_first_not_of(" \t\r\n") == std::string::npos)
            throw input_error("count prediction for image " + image_id + " has an empty category name");
        if (count < 0)
            throw input_error("negative count for category \"" + name + "\" in image " + image_id);
        if (!seen.insert(lower(name)).second)
            throw input_error("duplicate category \"" + name + "\" in image " + image_id);
    }
}

}  // namespace ccm
