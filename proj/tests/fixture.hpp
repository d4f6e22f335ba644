// Synthetic golden dataset: 5 images, 4 classes, rectangle objects on a
// 64x64 canvas. Embeddings are class-indicator vectors, so the matcher's
// unique optimum reproduces the ground truth exactly.
#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ccmatch/coco.hpp"
#include "ccmatch/counter.hpp"
#include "ccmatch/embedding_store.hpp"
#include "ccmatch/mask.hpp"
#include "ccmatch/types.hpp"

namespace fixture {

inline const std::vector<std::string>& classes() {
    static const std::vector<std::string> kClasses = {"airplane", "ship", "storage tank",
                                                      "vehicle"};
    return kClasses;
}

constexpr int kImageSize = 64;

struct Object {
    const char* image;
    int cls;   // index into classes()
    int slot;  // 4x4 grid cell; objects never overlap
};

// Class totals: airplane 4, ship 4, storage tank 4, vehicle 5.
inline const std::vector<Object>& objects() {
    static const std::vector<Object> kObjects = {
        {"img1", 0, 0}, {"img1", 0, 1}, {"img1", 1, 2},
        {"img2", 1, 0}, {"img2", 1, 1}, {"img2", 2, 2},
        {"img3", 3, 0}, {"img3", 3, 1}, {"img3", 3, 2},
        {"img4", 0, 0}, {"img4", 2, 1}, {"img4", 2, 2}, {"img4", 3, 3},
        {"img5", 1, 0}, {"img5", 3, 1}, {"img5", 0, 2}, {"img5", 2, 3},
    };
    return kObjects;
}

inline const std::vector<std::string>& image_ids() {
    static const std::vector<std::string> kIds = {"img1", "img2", "img3", "img4", "img5"};
    return kIds;
}

inline ccm::BinaryMask slot_mask(int slot) {
    int x0 = 2 + 15 * (slot % 4);
    int y0 = 2 + 15 * (slot / 4);
    std::vector<std::uint8_t> grid(kImageSize * kImageSize, 0);
    for (int y = y0; y < y0 + 10; ++y)
        for (int x = x0; x < x0 + 10; ++x) grid[y * kImageSize + x] = 1;
    return ccm::rle_encode(grid, kImageSize, kImageSize);
}

inline ccm::Detection object_detection(const Object& obj) {
    ccm::Detection d;
    d.image_id = obj.image;
    d.category = classes()[obj.cls];
    d.mask = slot_mask(obj.slot);
    d.bbox = ccm::tight_bbox(*d.mask);
    return d;
}

inline std::vector<ccm::Detection> golden_detections() {
    std::vector<ccm::Detection> out;
    for (const auto& obj : objects()) out.push_back(object_detection(obj));
    return out;
}

// One dropped and one duplicated prediction per class, drop and duplicate in
// different images. Hand-computed per-class outcome (counting, box, mask):
// P = R = F1 = (G-1)/G with G the class's instance total, so 0.75 for the
// three 4-instance classes and 0.8 for vehicle; AP_nc = ((G-1)/G)^2.
inline std::vector<ccm::Detection> perturbed_detections() {
    struct Edit {
        const char* drop_image;
        int drop_slot;
        const char* dup_image;
        int dup_slot;
    };
    static const std::vector<Edit> kEdits = {
        {"img1", 0, "img4", 0},  // airplane
        {"img2", 0, "img5", 0},  // ship
        {"img4", 1, "img2", 2},  // storage tank
        {"img3", 0, "img4", 3},  // vehicle
    };
    std::vector<ccm::Detection> out;
    for (const auto& obj : objects()) {
        const Edit& e = kEdits[obj.cls];
        if (obj.image == std::string(e.drop_image) && obj.slot == e.drop_slot) continue;
        out.push_back(object_detection(obj));
        if (obj.image == std::string(e.dup_image) && obj.slot == e.dup_slot)
            out.push_back(object_detection(obj));
    }
    return out;
}

inline std::vector<ccm::ImageInfo> image_infos() {
    std::vector<ccm::ImageInfo> out;
    for (const auto& id : image_ids())
        out.push_back(ccm::ImageInfo{id, id + ".png", kImageSize, kImageSize});
    return out;
}

inline std::vector<float> class_embedding(int cls) {
    std::vector<float> v(4, 0.f);
    v[cls] = 1.f;
    return v;
}

// Writes ground truth, proposals, embedding stores, counter audit records,
// and a manifest under `root`.
inline void write_dataset(const std::filesystem::path& root) {
    namespace fs = std::filesystem;
    using nlohmann::json;
    using nlohmann::ordered_json;
    fs::create_directories(root / "proposals");
    fs::create_directories(root / "audit");

    ccm::write_coco(root / "gt.json", image_infos(), classes(), golden_detections());

    // proposals + mask embeddings per image, ordered as in objects()
    for (const auto& id : image_ids()) {
        json props = json::array();
        std::vector<std::string> emb_names;
        std::vector<std::vector<float>> emb_vectors;
        int next_id = 0;
        ordered_json counts = ordered_json::object();
        for (const auto& obj : objects()) {
            if (obj.image != id) continue;
            ccm::BinaryMask mask = slot_mask(obj.slot);
            json p;
            p["id"] = next_id;
            p["segmentation"] = {{"size", {kImageSize, kImageSize}}, {"counts", mask.runs}};
            props.push_back(p);
            emb_names.push_back(id + "#" + std::to_string(next_id));
            emb_vectors.push_back(class_embedding(obj.cls));
            ++next_id;
            std::string name = classes()[obj.cls];
            counts[name] = counts.contains(name) ? counts[name].get<int>() + 1 : 1;
        }
        std::ofstream(root / "proposals" / (id + ".json")) << props.dump(2) << "\n";
        ccm::FileEmbeddingStore::write(root / ("emb_" + id), 4, emb_names, emb_vectors);

        ccm::CounterAuditRecord rec;
        rec.image_id = id;
        rec.prompt = "(fixture)";
        rec.raw_response = "```json\n" + counts.dump() + "\n```";
        for (const auto& [k, v] : counts.items())
            rec.parsed.emplace_back(k, v.get<std::int64_t>());
        rec.usage.prompt_tokens = 100;
        rec.usage.completion_tokens = 20;
        rec.save(root / "audit" / (id + ".json"));
    }

    std::vector<std::string> cat_names;
    std::vector<std::vector<float>> cat_vectors;
    for (std::size_t k = 0; k < classes().size(); ++k) {
        cat_names.push_back("a satellite image of a " + classes()[k]);
        cat_vectors.push_back(class_embedding(static_cast<int>(k)));
    }
    ccm::FileEmbeddingStore::write(root / "cat_emb", 4, cat_names, cat_vectors);

    json manifest;
    manifest["images"] = json::array();
    for (const auto& id : image_ids()) {
        json img;
        img["id"] = id;
        img["file"] = id + ".png";
        img["proposals"] = "proposals/" + id + ".json";
        img["mask_embeddings"] = "emb_" + id;
        img["width"] = kImageSize;
        img["height"] = kImageSize;
        manifest["images"].push_back(img);
    }
    manifest["category_embeddings"] = "cat_emb";
    manifest["ground_truth"] = "gt.json";
    std::ofstream(root / "manifest.json") << manifest.dump(2) << "\n";
}

}  // namespace fixture
