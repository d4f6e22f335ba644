#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ccmatch/geometry.hpp"
#include "ccmatch/mask.hpp"

namespace ccm {

// One class-agnostic region proposed by the external segmenter.
struct MaskProposal {
    std::int64_t id = 0;
    std::string image_id;
    BinaryMask mask;
    BoundingBox bbox;  // tight box of the foreground pixels
};

// Builds a proposal from a mask, recomputing and verifying the tight box.
// Throws Error(Input) for an empty mask or a box that disagrees with the mask.
MaskProposal make_proposal(std::int64_t id, std::string image_id, BinaryMask mask,
                           std::optional<BoundingBox> declared_bbox = std::nullopt);

// Per-image category -> count map, insertion-ordered as parsed from the counter.
struct CountPrediction {
    std::string image_id;
    std::vector<std::pair<std::string, std::int64_t>> counts;

    const std::int64_t* find(const std::string& category) const;
    // Throws Error(Input) on negative counts, empty names, or
    // case-insensitive duplicates.
    void validate() const;
};

struct EmbeddingVector {
    std::vector<double> values;

    std::size_t dim() const { return values.size(); }
};

// Dense row-major n_masks x n_categories cosine similarity matrix.
struct SimilarityMatrix {
    int n_masks = 0;
    int n_categories = 0;
    std::vector<double> entries;

    double at(int i, int j) const { return entries[static_cast<std::size_t>(i) * n_categories + j]; }
    double& at(int i, int j) { return entries[static_cast<std::size_t>(i) * n_categories + j]; }

    static SimilarityMatrix zeros(int n, int m) {
        return SimilarityMatrix{n, m, std::vector<double>(static_cast<std::size_t>(n) * m, 0.0)};
    }
};

// A recognized object. `score` stays absent for confidence-free producers.
struct Detection {
    std::string image_id;
    std::string category;
    BoundingBox bbox;
    std::optional<BinaryMask> mask;
    std::optional<double> score;
};

}  // namespace ccm
