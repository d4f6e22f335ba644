#include "ccmatch/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include <json.hpp>

#include "ccmatch/embedding_store.hpp"
#include "ccmatch/errors.hpp"
#include "ccmatch/matcher.hpp"

namespace ccm {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    if (path.is_absolute() || p.empty()) return path;
    return base / path;
}

}  // namespace

Manifest Manifest::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open manifest " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw input_error("malformed manifest " + path.string() + ": " + e.what());
    }
    std::filesystem::path base = path.parent_path();

    Manifest m;
    if (!doc.contains("images") || !doc["images"].is_array())
        throw input_error("manifest " + path.string() + " lacks an images array");
    for (const auto& img : doc["images"]) {
        ManifestImage mi;
        mi.id = img.at("id").get<std::string>();
        mi.file = resolve(base, img.value("file", ""));
        mi.proposals = resolve(base, img.value("proposals", ""));
        mi.mask_embeddings = resolve(base, img.value("mask_embeddings", ""));
        mi.width = img.value("width", 0);
        mi.height = img.value("height", 0);
        m.images.push_back(std::move(mi));
    }
    if (doc.contains("category_embeddings"))
        m.category_embeddings = resolve(base, doc["category_embeddings"].get<std::string>());
    if (doc.contains("ground_truth"))
        m.ground_truth = resolve(base, doc["ground_truth"].get<std::string>());
    return m;
}

std::string timings_to_json(const std::vector<StageTiming>& timings) {
    json arr = json::array();
    for (const auto& t : timings) {
        json j;
        j["image_id"] = t.image_id;
        j["counter_ms"] = t.counter_ms;
        j["proposal_ingest_ms"] = t.proposal_ingest_ms;
        j["embedding_ms"] = t.embedding_ms;
        j["matching_ms"] = t.matching_ms;
        j["total_ms"] = t.total_ms;
        if (t.prompt_tokens) j["prompt_tokens"] = *t.prompt_tokens;
        if (t.completion_tokens) j["completion_tokens"] = *t.completion_tokens;
        j["box_count"] = t.box_count;
        arr.push_back(j);
    }
    return arr.dump(2) + "\n";
}

std::vector<StageTiming> timings_from_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open timing file " + path.string());
    json arr;
    try {
        in >> arr;
    } catch (const json::exception& e) {
        throw input_error("malformed timing file " + path.string() + ": " + e.what());
    }
    if (!arr.is_array()) throw input_error("timing file " + path.string() + " must be an array");
    std::vector<StageTiming> out;
    for (const auto& j : arr) {
        StageTiming t;
        t.image_id = j.value("image_id", "");
        t.counter_ms = j.value("counter_ms", 0.0);
        t.proposal_ingest_ms = j.value("proposal_ingest_ms", 0.0);
        t.embedding_ms = j.value("embedding_ms", 0.0);
        t.matching_ms = j.value("matching_ms", 0.0);
        t.total_ms = j.value("total_ms", 0.0);
        if (j.contains("prompt_tokens")) t.prompt_tokens = j["prompt_tokens"].get<std::int64_t>();
        if (j.contains("completion_tokens"))
            t.completion_tokens = j["completion_tokens"].get<std::int64_t>();
        t.box_count = j.value("box_count", std::int64_t{0});
        out.push_back(std::move(t));
    }
    return out;
}

ImageResult run_image(const CountPrediction& counts, const std::vector<MaskProposal>& proposals,
                      EmbeddingProvider& mask_embs, EmbeddingProvider& cat_embs,
                      const std::string& category_template) {
    counts.validate();
    ImageResult result;
    result.timing.image_id = counts.image_id;
    auto start = Clock::now();

    std::vector<std::string> categories;
    std::vector<std::int64_t> target_counts;
    for (const auto& [name, count] : counts.counts) {
        if (count > 0) {  // zero-count columns are inert; keep them out
            categories.push_back(name);
            target_counts.push_back(count);
        }
    }

    if (categories.empty()) {
        result.timing.total_ms = ms_since(start);
        return result;
    }
    if (proposals.empty()) {
        result.warnings.push_back("image " + counts.image_id +
                                  ": no mask proposals for nonzero counts; emitting nothing");
        result.timing.total_ms = ms_since(start);
        return result;
    }

    auto embed_start = Clock::now();
    std::vector<EmbeddingVector> mask_vectors;
    mask_vectors.reserve(proposals.size());
    for (const auto& p : proposals) {
        std::string key = p.image_id + "#" + std::to_string(p.id);
        if (!mask_embs.has(key))
            throw input_error("no mask embedding named \"" + key + "\"");
        mask_vectors.push_back(mask_embs.get(key));
    }
    std::vector<EmbeddingVector> cat_vectors;
    cat_vectors.reserve(categories.size());
    for (const auto& prompt : render_prompts(categories, category_template)) {
        std::string key = prompt.rendered;
        if (!cat_embs.has(key) && cat_embs.has(prompt.category)) key = prompt.category;
        if (!cat_embs.has(key))
            throw input_error("no category embedding for \"" + prompt.category +
                              "\" (looked up \"" + prompt.rendered + "\")");
        cat_vectors.push_back(cat_embs.get(key));
    }
    result.timing.embedding_ms = ms_since(embed_start);

    auto match_start = Clock::now();
    MatchingProblem problem{cosine_matrix(mask_vectors, cat_vectors), target_counts};
    Assignment assignment = solve_matching(problem);
    result.timing.matching_ms = ms_since(match_start);

    for (const auto& [mask_idx, cat_idx] : assignment.pairs) {
        const MaskProposal& p = proposals[mask_idx];
        Detection d;
        d.image_id = counts.image_id;
        d.category = categories[cat_idx];
        d.bbox = p.bbox;
        d.mask = p.mask;
        result.detections.push_back(std::move(d));
    }
    result.timing.box_count = static_cast<std::int64_t>(result.detections.size());
    result.timing.total_ms = ms_since(start);
    return result;
}

DatasetResult run_dataset(const Manifest& manifest, const CountsLoader& load_counts,
                          EmbeddingProvider& cat_embs, const PipelineOptions& options) {
    struct Slot {
        ImageResult result;
        std::string error;
        bool failed = false;
    };
    std::vector<Slot> slots(manifest.images.size());

    std::atomic<std::size_t> next{0};
    std::mutex provider_mutex;
    bool serialize = cat_embs.single_flight();

    auto worker = [&]() {
        for (;;) {
            std::size_t idx = next.fetch_add(1);
            if (idx >= manifest.images.size()) return;
            const ManifestImage& img = manifest.images[idx];
            try {
                CountPrediction counts = load_counts(img);
                auto ingest_start = Clock::now();
                std::vector<MaskProposal> proposals =
                    load_proposals(img.proposals, img.id, img.width, img.height);
                double ingest_ms = std::chrono::duration<double, std::milli>(
                                       Clock::now() - ingest_start)
                                       .count();
                FileEmbeddingStore mask_embs(img.mask_embeddings);
                ImageResult r;
                if (serialize) {
                    std::lock_guard<std::mutex> lock(provider_mutex);
                    r = run_image(counts, proposals, mask_embs, cat_embs,
                                  options.category_template);
                } else {
                    r = run_image(counts, proposals, mask_embs, cat_embs,
                                  options.category_template);
                }
                r.timing.proposal_ingest_ms = ingest_ms;
                r.timing.total_ms += ingest_ms;
                slots[idx].result = std::move(r);
            } catch (const std::exception& e) {
                slots[idx].failed = true;
                slots[idx].error = "image " + img.id + ": " + e.what();
            }
        }
    };

    int workers = std::max(1, options.workers);
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int k = 0; k < workers; ++k) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    DatasetResult out;
    std::set<std::string> cats;
    for (std::size_t idx = 0; idx < manifest.images.size(); ++idx) {
        const ManifestImage& img = manifest.images[idx];
        Slot& slot = slots[idx];
        if (slot.failed) {
            if (!options.keep_going) throw input_error(slot.error);
            out.errors.push_back(slot.error);
            continue;
        }
        out.images.push_back(ImageInfo{img.id, img.file.filename().string(), img.width,
                                       img.height});
        for (auto& d : slot.result.detections) {
            cats.insert(d.category);
            out.detections.push_back(std::move(d));
        }
        out.timings.push_back(slot.result.timing);
        for (auto& w : slot.result.warnings) out.warnings.push_back(std::move(w));
    }
    out.categories.assign(cats.begin(), cats.end());
    return out;
}

}  // namespace ccm
