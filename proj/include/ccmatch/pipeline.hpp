#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ccmatch/coco.hpp"
#include "ccmatch/counter.hpp"
#include "ccmatch/similarity.hpp"
#include "ccmatch/types.hpp"

namespace ccm {

struct ManifestImage {
    std::string id;
    std::filesystem::path file;             // image file (counter stage only)
    std::filesystem::path proposals;        // proposal JSON
    std::filesystem::path mask_embeddings;  // embedding store directory
    int width = 0;
    int height = 0;
};

struct Manifest {
    std::vector<ManifestImage> images;
    std::filesystem::path category_embeddings;
    std::optional<std::filesystem::path> ground_truth;

    // Relative paths inside the manifest resolve against its directory.
    static Manifest load(const std::filesystem::path& path);
};

struct StageTiming {
    std::string image_id;
    double counter_ms = 0.0;
    double proposal_ingest_ms = 0.0;
    double embedding_ms = 0.0;
    double matching_ms = 0.0;
    double total_ms = 0.0;
    std::optional<std::int64_t> prompt_tokens;
    std::optional<std::int64_t> completion_tokens;
    std::int64_t box_count = 0;  // emitted detections
};

std::string timings_to_json(const std::vector<StageTiming>& timings);
std::vector<StageTiming> timings_from_json_file(const std::filesystem::path& path);

struct ImageResult {
    std::vector<Detection> detections;
    StageTiming timing;
    std::vector<std::string> warnings;
};

// Builds the similarity matrix from provider embeddings (mask rows keyed
// "imageId#proposalId", category columns keyed by the rendered template),
// solves the counting-constrained matching, and emits one score-free
// Detection per assigned pair.
ImageResult run_image(const CountPrediction& counts, const std::vector<MaskProposal>& proposals,
                      EmbeddingProvider& mask_embs, EmbeddingProvider& cat_embs,
                      const std::string& category_template = kDefaultCategoryTemplate);

struct PipelineOptions {
    std::string category_template = kDefaultCategoryTemplate;
    int workers = 1;
    bool keep_going = false;
};

using CountsLoader = std::function<CountPrediction(const ManifestImage&)>;

struct DatasetResult {
    std::vector<ImageInfo> images;
    std::vector<std::string> categories;  // sorted union over detections
    std::vector<Detection> detections;    // manifest order
    std::vector<StageTiming> timings;
    std::vector<std::string> warnings;
    std::vector<std::string> errors;  // per-image failures under keep-going
};

// Fans images out over `workers` threads; results are collected in manifest
// order regardless of completion order, so output is deterministic.
DatasetResult run_dataset(const Manifest& manifest, const CountsLoader& load_counts,
                          EmbeddingProvider& cat_embs, const PipelineOptions& options);

}  // namespace ccm
