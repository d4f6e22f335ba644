#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ccmatch/types.hpp"

namespace ccm {

inline constexpr const char* kDefaultCategoryTemplate = "a satellite image of a {category}";
inline constexpr double kDefaultEquivalenceThreshold = 0.95;

struct CategoryPrompt {
    std::string category;
    std::string rendered;
};

// Maps generated category names to ground-truth names (or nothing) under a
// cosine-similarity threshold.
struct EquivalenceMap {
    std::map<std::string, std::optional<std::string>> entries;
    double threshold = kDefaultEquivalenceThreshold;

    // The mapped name, or nullopt when unmatched / unknown.
    std::optional<std::string> lookup(const std::string& generated) const;
};

// Embeddings are consumed from external providers, never computed here.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;

    // Throws Error(Input/Remote) naming the failing entry.
    virtual EmbeddingVector get(const std::string& name) = 0;
    virtual bool has(const std::string& name) = 0;

    // Providers that cannot tolerate concurrent requests declare
    // single-flight; the pipeline serializes calls to them.
    virtual bool single_flight() const { return false; }
};

// Throws Error(Input) on a zero vector.
EmbeddingVector normalize(const EmbeddingVector& v);

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

// Entry (i,j) = cosine of mask embedding i against category embedding j.
// Inputs need not be pre-normalized.
SimilarityMatrix cosine_matrix(const std::vector<EmbeddingVector>& mask_embs,
                               const std::vector<EmbeddingVector>& cat_embs);

// Throws Error(Input) unless the template contains exactly one "{category}".
std::vector<CategoryPrompt> render_prompts(const std::vector<std::string>& categories,
                                           const std::string& templ = kDefaultCategoryTemplate);

// Each generated name maps to the ground-truth name of highest cosine
// similarity among those strictly above `threshold` (ties broken by
// ground-truth input order), or to nothing. Exact case-insensitive string
// equality short-circuits to a match.
EquivalenceMap match_generated_categories(const std::vector<std::string>& generated,
                                          const std::vector<std::string>& ground_truth,
                                          EmbeddingProvider& text_embs,
                                          double threshold = kDefaultEquivalenceThreshold,
                                          const std::string& templ = kDefaultCategoryTemplate);

}  // namespace ccm
