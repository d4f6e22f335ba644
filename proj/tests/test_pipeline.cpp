#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>

#include "ccmatch/coco.hpp"
#include "ccmatch/counter.hpp"
#include "ccmatch/embedding_store.hpp"
#include "ccmatch/errors.hpp"
#include "ccmatch/metrics.hpp"
#include "ccmatch/pipeline.hpp"
#include "fixture.hpp"

using namespace ccm;
namespace fs = std::filesystem;

namespace {

class MapProvider : public EmbeddingProvider {
public:
    std::map<std::string, EmbeddingVector> entries;

    EmbeddingVector get(const std::string& name) override {
        auto it = entries.find(name);
        if (it == entries.end()) throw input_error("no embedding for \"" + name + "\"");
        return it->second;
    }
    bool has(const std::string& name) override { return entries.count(name) != 0; }
};

MaskProposal square_proposal(std::int64_t id, const std::string& image, int x0, int y0) {
    std::vector<std::uint8_t> grid(8 * 8, 0);
    for (int y = y0; y < y0 + 2; ++y)
        for (int x = x0; x < x0 + 2; ++x) grid[y * 8 + x] = 1;
    return make_proposal(id, image, rle_encode(grid, 8, 8));
}

CountsLoader audit_loader(const fs::path& audit_dir) {
    return [audit_dir](const ManifestImage& img) {
        auto rec = CounterAuditRecord::from_json_file(audit_dir / (img.id + ".json"));
        CountPrediction counts;
        counts.image_id = img.id;
        for (const auto& [name, n] : rec.parsed)
            if (n > 0) counts.counts.emplace_back(name, n);
        return counts;
    };
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("run_image assigns proposals to counted categories") {
    MapProvider masks, cats;
    masks.entries["imgA#0"] = EmbeddingVector{{1, 0, 0}};
    masks.entries["imgA#1"] = EmbeddingVector{{0, 1, 0}};
    masks.entries["imgA#7"] = EmbeddingVector{{0.9, 0.1, 0}};
    cats.entries["a satellite image of a airplane"] = EmbeddingVector{{1, 0, 0}};
    cats.entries["a satellite image of a ship"] = EmbeddingVector{{0, 1, 0}};

    std::vector<MaskProposal> proposals = {square_proposal(0, "imgA", 0, 0),
                                           square_proposal(1, "imgA", 3, 0),
                                           square_proposal(7, "imgA", 0, 3)};
    CountPrediction counts{"imgA", {{"airplane", 2}, {"ship", 1}}};

    ImageResult r = run_image(counts, proposals, masks, cats);
    REQUIRE(r.detections.size() == 3);
    CHECK(r.detections[0].category == "airplane");
    CHECK(r.detections[1].category == "ship");
    CHECK(r.detections[2].category == "airplane");
    CHECK(!r.detections[0].score.has_value());
    CHECK(r.detections[0].bbox == proposals[0].bbox);
    REQUIRE(r.detections[0].mask.has_value());
    CHECK(r.detections[0].mask->runs == proposals[0].mask.runs);
    CHECK(r.timing.box_count == 3);
    CHECK(r.warnings.empty());
}

TEST_CASE("run_image falls back to bare category names") {
    MapProvider masks, cats;
    masks.entries["imgA#0"] = EmbeddingVector{{1, 0}};
    cats.entries["ship"] = EmbeddingVector{{1, 0}};  // no rendered-prompt key
    std::vector<MaskProposal> proposals = {square_proposal(0, "imgA", 0, 0)};
    ImageResult r = run_image(CountPrediction{"imgA", {{"ship", 1}}}, proposals, masks, cats);
    REQUIRE(r.detections.size() == 1);
    CHECK(r.detections[0].category == "ship");
}

TEST_CASE("run_image edge cases") {
    MapProvider masks, cats;
    cats.entries["a satellite image of a ship"] = EmbeddingVector{{1, 0}};
    masks.entries["imgA#0"] = EmbeddingVector{{1, 0}};
    std::vector<MaskProposal> proposals = {square_proposal(0, "imgA", 0, 0)};

    SUBCASE("zero and missing counts give an empty result") {
        ImageResult r = run_image(CountPrediction{"imgA", {{"ship", 0}}}, proposals, masks, cats);
        CHECK(r.detections.empty());
        ImageResult r2 = run_image(CountPrediction{"imgA", {}}, proposals, masks, cats);
        CHECK(r2.detections.empty());
    }
    SUBCASE("counts without proposals warn instead of failing") {
        ImageResult r = run_image(CountPrediction{"imgA", {{"ship", 2}}}, {}, masks, cats);
        CHECK(r.detections.empty());
        REQUIRE(!r.warnings.empty());
    }
    SUBCASE("missing mask embedding is an input error") {
        std::vector<MaskProposal> two = {square_proposal(0, "imgA", 0, 0),
                                         square_proposal(9, "imgA", 3, 3)};
        CHECK_THROWS_AS(
            run_image(CountPrediction{"imgA", {{"ship", 1}}}, two, masks, cats), Error);
    }
    SUBCASE("missing category embedding names the category") {
        CHECK_THROWS_WITH_AS(
            run_image(CountPrediction{"imgA", {{"zeppelin", 1}}}, proposals, masks, cats),
            doctest::Contains("zeppelin"), Error);
    }
}

TEST_CASE("manifest loading resolves relative paths") {
    TempDir tmp("ccm_manifest_test");
    fixture::write_dataset(tmp.path);
    Manifest m = Manifest::load(tmp.path / "manifest.json");
    REQUIRE(m.images.size() == 5);
    CHECK(m.images[0].id == "img1");
    CHECK(m.images[0].proposals == tmp.path / "proposals" / "img1.json");
    CHECK(m.images[0].width == 64);
    CHECK(m.category_embeddings == tmp.path / "cat_emb");
    REQUIRE(m.ground_truth.has_value());
    CHECK(*m.ground_truth == tmp.path / "gt.json");
}

TEST_CASE("run_dataset reproduces the golden labels") {
    TempDir tmp("ccm_dataset_test");
    fixture::write_dataset(tmp.path);
    Manifest manifest = Manifest::load(tmp.path / "manifest.json");
    FileEmbeddingStore cats(manifest.category_embeddings);

    PipelineOptions options;
    DatasetResult result = run_dataset(manifest, audit_loader(tmp.path / "audit"), cats, options);

    CHECK(result.errors.empty());
    CHECK(result.categories == fixture::classes());
    REQUIRE(result.detections.size() == fixture::objects().size());
    auto expected = fixture::golden_detections();
    for (std::size_t k = 0; k < expected.size(); ++k) {
        CHECK(result.detections[k].image_id == expected[k].image_id);
        CHECK(result.detections[k].category == expected[k].category);
        CHECK(result.detections[k].bbox == expected[k].bbox);
    }
    REQUIRE(result.timings.size() == 5);
    CHECK(result.timings[0].image_id == "img1");
    CHECK(result.timings[0].box_count == 3);

    // perfect scores against the ground truth
    CocoDataset gt = load_coco(*manifest.ground_truth);
    EvalReport report = evaluate(result.detections, gt.items, fixture::classes(), 0.5);
    CHECK(report.cnt_f1 == doctest::Approx(1.0));
    CHECK(report.box_f1 == doctest::Approx(1.0));
}

TEST_CASE("run_dataset output is identical across worker counts") {
    TempDir tmp("ccm_workers_test");
    fixture::write_dataset(tmp.path);
    Manifest manifest = Manifest::load(tmp.path / "manifest.json");
    FileEmbeddingStore cats(manifest.category_embeddings);
    auto loader = audit_loader(tmp.path / "audit");

    PipelineOptions one;
    one.workers = 1;
    DatasetResult base = run_dataset(manifest, loader, cats, one);
    for (int workers : {2, 4, 8}) {
        PipelineOptions options;
        options.workers = workers;
        DatasetResult r = run_dataset(manifest, loader, cats, options);
        REQUIRE(r.detections.size() == base.detections.size());
        for (std::size_t k = 0; k < base.detections.size(); ++k) {
            CHECK(r.detections[k].image_id == base.detections[k].image_id);
            CHECK(r.detections[k].category == base.detections[k].category);
            CHECK(r.detections[k].bbox == base.detections[k].bbox);
            CHECK(r.detections[k].mask->runs == base.detections[k].mask->runs);
        }
        CHECK(coco_json_string(fixture::image_infos(), r.categories, r.detections) ==
              coco_json_string(fixture::image_infos(), base.categories, base.detections));
    }
}

TEST_CASE("run_dataset keep_going collects per-image errors") {
    TempDir tmp("ccm_keepgoing_test");
    fixture::write_dataset(tmp.path);
    // corrupt one proposal file
    std::ofstream(tmp.path / "proposals" / "img3.json") << "not json";
    Manifest manifest = Manifest::load(tmp.path / "manifest.json");
    FileEmbeddingStore cats(manifest.category_embeddings);
    auto loader = audit_loader(tmp.path / "audit");

    PipelineOptions strict;
    CHECK_THROWS_AS(run_dataset(manifest, loader, cats, strict), Error);

    PipelineOptions lenient;
    lenient.keep_going = true;
    DatasetResult r = run_dataset(manifest, loader, cats, lenient);
    REQUIRE(r.errors.size() == 1);
    CHECK(r.errors[0].find("img3") != std::string::npos);
    // the other four images still produce their detections
    CHECK(r.detections.size() == fixture::objects().size() - 3);
}

TEST_CASE("timing serialization round trip") {
    StageTiming t;
    t.image_id = "img1";
    t.counter_ms = 1.5;
    t.matching_ms = 0.25;
    t.total_ms = 2.0;
    t.prompt_tokens = 120;
    t.box_count = 4;
    StageTiming u;
    u.image_id = "img2";

    fs::path path = fs::temp_directory_path() / "ccm_timing_rt.json";
    std::ofstream(path) << timings_to_json({t, u});
    auto loaded = timings_from_json_file(path);
    REQUIRE(loaded.size() == 2);
    CHECK(loaded[0].image_id == "img1");
    CHECK(loaded[0].counter_ms == doctest::Approx(1.5));
    CHECK(loaded[0].prompt_tokens == 120);
    CHECK(!loaded[0].completion_tokens.has_value());
    CHECK(loaded[1].image_id == "img2");
    CHECK(loaded[1].box_count == 0);
    fs::remove(path);
}
