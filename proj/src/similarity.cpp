#include "ccmatch/similarity.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "ccmatch/errors.hpp"

namespace ccm {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

}  // namespace

std::optional<std::string> EquivalenceMap::lookup(const std::string& generated) const {
    auto it = entries.find(generated);
    if (it == entries.end()) return std::nullopt;
    return it->second;
}

EmbeddingVector normalize(const EmbeddingVector& v) {
    double norm2 = 0.0;
    for (double x : v.values) {
        if (!std::isfinite(x)) throw input_error("embedding contains a non-finite value");
        norm2 += x * x;
    }
    double norm = std::sqrt(norm2);
    if (norm == 0.0) throw input_error("cannot normalize a zero embedding vector");
    EmbeddingVector out;
    out.values.reserve(v.values.size());
    for (double x : v.values) out.values.push_back(x / norm);
    return out;
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dim() != b.dim())
        throw input_error("cosine: embedding dimension mismatch (" + std::to_string(a.dim()) +
                          " vs " + std::to_string(b.dim()) + ")");
    EmbeddingVector na = normalize(a);
    EmbeddingVector nb = normalize(b);
    double dot = 0.0;
    for (std::size_t k = 0; k < na.dim(); ++k) dot += na.values[k] * nb.values[k];
    return std::clamp(dot, -1.0, 1.0);
}

SimilarityMatrix cosine_matrix(const std::vector<EmbeddingVector>& mask_embs,
                               const std::vector<EmbeddingVector>& cat_embs) {
    if (mask_embs.empty() || cat_embs.empty())
        throw input_error("cosine_matrix: both embedding sequences must be non-empty");
    std::size_t dim = mask_embs.front().dim();
    std::vector<EmbeddingVector> rows, cols;
    rows.reserve(mask_embs.size());
    cols.reserve(cat_embs.size());
    for (const auto& v : mask_embs) {
        if (v.dim() != dim) throw input_error("cosine_matrix: embedding dimension mismatch");
        rows.push_back(normalize(v));
    }
    for (const auto& v : cat_embs) {
        if (v.dim() != dim) throw input_error("cosine_matrix: embedding dimension mismatch");
        cols.push_back(normalize(v));
    }
    SimilarityMatrix s = SimilarityMatrix::zeros(static_cast<int>(rows.size()),
                                                 static_cast<int>(cols.size()));
    for (int i = 0; i < s.n_masks; ++i)
        for (int j = 0; j < s.n_categories; ++j) {
            double dot = 0.0;
            for (std::size_t k = 0; k < dim; ++k) dot += rows[i].values[k] * cols[j].values[k];
            s.at(i, j) = std::clamp(dot, -1.0, 1.0);
        }
    return s;
}

std::vector<CategoryPrompt> render_prompts(const std::vector<std::string>& categories,
                                           const std::string& templ) {
    const std::string placeholder = "{category}";
    std::size_t pos = templ.find(placeholder);
    if (pos == std::string::npos ||
        templ.find(placeholder, pos + 1) != std::string::npos)
        throw input_error("prompt template must contain exactly one {category} placeholder");
    std::vector<CategoryPrompt> out;
    out.reserve(categories.size());
    for (const auto& cat : categories) {
        std::string rendered = templ;
        rendered.replace(pos, placeholder.size(), cat);
        out.push_back({cat, rendered});
    }
    return out;
}

EquivalenceMap match_generated_categories(const std::vector<std::string>& generated,
                                          const std::vector<std::string>& ground_truth,
                                          EmbeddingProvider& text_embs, double threshold,
                                          const std::string& templ) {
    EquivalenceMap map;
    map.threshold = threshold;

    auto prompt_for = [&](const std::string& name) {
        return render_prompts({name}, templ).front().rendered;
    };
    auto embed = [&](const std::string& name) {
        std::string key = prompt_for(name);
        // Stores may be keyed by the rendered prompt or by the bare name.
        if (!text_embs.has(key) && text_embs.has(name)) key = name;
        return text_embs.get(key);
    };

    std::vector<EmbeddingVector> gt_embs;
    bool gt_embedded = false;

    for (const auto& gen : generated) {
        std::optional<std::string> matched;
        for (const auto& gt : ground_truth) {
            if (lower(gen) == lower(gt)) {
                matched = gt;
                break;
            }
        }
        if (!matched) {
            if (!gt_embedded) {
                gt_embs.reserve(ground_truth.size());
                for (const auto& gt : ground_truth) gt_embs.push_back(embed(gt));
                gt_embedded = true;
            }
            EmbeddingVector gen_emb = embed(gen);
            double best = threshold;  // strict: must exceed the threshold
            for (std::size_t k = 0; k < ground_truth.size(); ++k) {
                double sim = cosine_similarity(gen_emb, gt_embs[k]);
                if (sim > best) {
                    best = sim;
                    matched = ground_truth[k];
                }
            }
        }
        map.entries[gen] = matched;
    }
    return map;
}

}  // namespace ccm
