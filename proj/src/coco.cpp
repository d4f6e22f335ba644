#include "ccmatch/coco.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include <json.hpp>

#include "ccmatch/errors.hpp"

namespace ccm {

using nlohmann::json;

namespace {

std::string id_to_string(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
    throw input_error("id field must be a string or integer");
}

json load_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open " + path.string());
    try {
        json doc;
        in >> doc;
        return doc;
    } catch (const json::exception& e) {
        throw input_error("malformed JSON in " + path.string() + ": " + e.what());
    }
}

BoundingBox bbox_from_xywh(const json& arr, const std::string& ctx) {
    if (!arr.is_array() || arr.size() != 4)
        throw input_error(ctx + ": bbox must be [x, y, w, h]");
    double x = arr[0].get<double>(), y = arr[1].get<double>();
    double w = arr[2].get<double>(), h = arr[3].get<double>();
    if (w < 0 || h < 0) throw input_error(ctx + ": bbox has negative extent");
    return BoundingBox{x, y, x + w, y + h};
}

BinaryMask mask_from_segmentation(const json& seg, int img_h, int img_w, const std::string& ctx) {
    if (seg.is_object()) {
        if (!seg.contains("size") || !seg["size"].is_array() || seg["size"].size() != 2)
            throw input_error(ctx + ": RLE segmentation lacks size [h, w]");
        int h = seg["size"][0].get<int>();
        int w = seg["size"][1].get<int>();
        if (!seg.contains("counts")) throw input_error(ctx + ": RLE segmentation lacks counts");
        const json& counts = seg["counts"];
        if (counts.is_string()) return decode_compressed_rle(counts.get<std::string>(), h, w);
        if (counts.is_array()) {
            BinaryMask mask;
            mask.width = w;
            mask.height = h;
            for (const auto& c : counts) {
                std::int64_t run = c.get<std::int64_t>();
                if (run < 0) throw input_error(ctx + ": negative RLE run");
                mask.runs.push_back(static_cast<std::uint64_t>(run));
            }
            mask.validate();
            return mask;
        }
        throw input_error(ctx + ": RLE counts must be a string or array");
    }
    if (seg.is_array()) {
        if (img_h <= 0 || img_w <= 0)
            throw input_error(ctx + ": polygon segmentation needs image width/height");
        std::vector<std::vector<double>> polys;
        for (const auto& poly : seg) polys.push_back(poly.get<std::vector<double>>());
        return rasterize_polygons(polys, img_h, img_w);
    }
    throw input_error(ctx + ": unsupported segmentation value");
}

}  // namespace

BinaryMask decode_compressed_rle(const std::string& s, int height, int width) {
    std::vector<std::int64_t> cnts;
    std::size_t p = 0;
    while (p < s.size()) {
        std::int64_t x = 0;
        int k = 0, c = 0;
        bool more = true;
        while (more) {
            if (p >= s.size()) throw input_error("truncated compressed RLE string");
            c = s[p] - 48;
            x |= static_cast<std::int64_t>(c & 0x1f) << (5 * k);
            more = (c & 0x20) != 0;
            ++p;
            ++k;
        }
        if (c & 0x10) x |= ~std::int64_t{0} << (5 * k);
        if (cnts.size() > 2) x += cnts[cnts.size() - 2];
        cnts.push_back(x);
    }
    BinaryMask mask;
    mask.width = width;
    mask.height = height;
    for (std::int64_t v : cnts) {
        if (v < 0) throw input_error("compressed RLE decoded to a negative run");
        mask.runs.push_back(static_cast<std::uint64_t>(v));
    }
    mask.validate();
    return mask;
}

BinaryMask rasterize_polygons(const std::vector<std::vector<double>>& polygons, int height,
                              int width) {
    if (height <= 0 || width <= 0)
        throw input_error("rasterize_polygons: dimensions must be positive");
    std::vector<std::uint8_t> grid(static_cast<std::size_t>(width) * height, 0);
    for (const auto& poly : polygons) {
        if (poly.size() < 6 || poly.size() % 2 != 0)
            throw input_error("polygon must hold at least 3 (x, y) vertex pairs");
        std::size_t n = poly.size() / 2;
        for (int y = 0; y < height; ++y) {
            double yc = y + 0.5;
            std::vector<double> xs;
            for (std::size_t v = 0; v < n; ++v) {
                double x1 = poly[2 * v], y1 = poly[2 * v + 1];
                double x2 = poly[2 * ((v + 1) % n)], y2 = poly[2 * ((v + 1) % n) + 1];
                if ((y1 <= yc && yc < y2) || (y2 <= yc && yc < y1))
                    xs.push_back(x1 + (yc - y1) * (x2 - x1) / (y2 - y1));
            }
            std::sort(xs.begin(), xs.end());
            for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
                int x_begin = std::max(0, static_cast<int>(std::ceil(xs[k] - 0.5)));
                for (int x = x_begin; x < width && x + 0.5 < xs[k + 1]; ++x)
                    grid[static_cast<std::size_t>(y) * width + x] = 1;
            }
        }
    }
    return rle_encode(grid, width, height);
}

CocoDataset load_coco(const std::filesystem::path& path) {
    json doc = load_json_file(path);
    CocoDataset ds;

    std::map<std::string, std::string> cat_names;  // id -> name
    if (doc.contains("categories"))
        for (const auto& cat : doc["categories"]) {
            std::string name = cat.at("name").get<std::string>();
            cat_names[id_to_string(cat.at("id"))] = name;
            ds.categories.push_back(name);
        }

    std::map<std::string, ImageInfo> image_index;
    if (doc.contains("images"))
        for (const auto& img : doc["images"]) {
            ImageInfo info;
            info.id = id_to_string(img.at("id"));
            info.file_name = img.value("file_name", "");
            info.width = img.value("width", 0);
            info.height = img.value("height", 0);
            image_index[info.id] = info;
            ds.images.push_back(info);
        }

    if (doc.contains("annotations"))
        for (const auto& ann : doc["annotations"]) {
            Detection d;
            d.image_id = id_to_string(ann.at("image_id"));
            std::string cat_id = id_to_string(ann.at("category_id"));
            auto cit = cat_names.find(cat_id);
            if (cit == cat_names.end())
                throw input_error(path.string() + ": annotation references unknown category id " +
                                  cat_id);
            d.category = cit->second;
            std::string ctx = path.string() + " annotation in image " + d.image_id;
            d.bbox = bbox_from_xywh(ann.at("bbox"), ctx);
            if (ann.contains("segmentation") && !ann["segmentation"].is_null()) {
                int w = 0, h = 0;
                if (auto it = image_index.find(d.image_id); it != image_index.end()) {
                    w = it->second.width;
                    h = it->second.height;
                }
                d.mask = mask_from_segmentation(ann["segmentation"], h, w, ctx);
            }
            if (ann.contains("score") && !ann["score"].is_null()) {
                double s = ann["score"].get<double>();
                if (s < 0.0 || s > 1.0) throw input_error(ctx + ": score outside [0, 1]");
                d.score = s;
            }
            ds.items.push_back(std::move(d));
        }
    return ds;
}

std::string coco_json_string(const std::vector<ImageInfo>& images,
                             const std::vector<std::string>& categories,
                             const std::vector<Detection>& detections) {
    json doc;
    doc["images"] = json::array();
    for (const auto& img : images) {
        json j;
        j["id"] = img.id;
        j["file_name"] = img.file_name;
        j["width"] = img.width;
        j["height"] = img.height;
        doc["images"].push_back(j);
    }
    std::map<std::string, int> cat_ids;
    doc["categories"] = json::array();
    for (std::size_t k = 0; k < categories.size(); ++k) {
        cat_ids[categories[k]] = static_cast<int>(k) + 1;
        json j;
        j["id"] = static_cast<int>(k) + 1;
        j["name"] = categories[k];
        doc["categories"].push_back(j);
    }
    doc["annotations"] = json::array();
    int next_id = 1;
    for (const auto& d : detections) {
        auto cit = cat_ids.find(d.category);
        if (cit == cat_ids.end())
            throw internal_error("detection category \"" + d.category +
                                 "\" missing from category list");
        json j;
        j["id"] = next_id++;
        j["image_id"] = d.image_id;
        j["category_id"] = cit->second;
        j["bbox"] = {d.bbox.x_min, d.bbox.y_min, d.bbox.width(), d.bbox.height()};
        if (d.mask) {
            json seg;
            seg["size"] = {d.mask->height, d.mask->width};
            seg["counts"] = d.mask->runs;
            j["segmentation"] = seg;
        }
        if (d.score) j["score"] = *d.score;
        doc["annotations"].push_back(j);
    }
    return doc.dump(2) + "\n";
}

void write_coco(const std::filesystem::path& path, const std::vector<ImageInfo>& images,
                const std::vector<std::string>& categories,
                const std::vector<Detection>& detections) {
    std::ofstream out(path);
    if (!out) throw input_error("cannot write " + path.string());
    out << coco_json_string(images, categories, detections);
}

std::vector<MaskProposal> load_proposals(const std::filesystem::path& path,
                                         const std::string& image_id, int width, int height) {
    json doc = load_json_file(path);
    if (!doc.is_array())
        throw input_error("proposal file " + path.string() + " must be a JSON array");
    std::vector<MaskProposal> out;
    std::int64_t fallback_id = 0;
    for (const auto& item : doc) {
        std::int64_t id = item.contains("id") ? item["id"].get<std::int64_t>() : fallback_id;
        ++fallback_id;
        std::string ctx = path.string() + " proposal " + std::to_string(id);
        if (!item.contains("segmentation")) throw input_error(ctx + ": missing segmentation");
        BinaryMask mask = mask_from_segmentation(item["segmentation"], height, width, ctx);
        std::optional<BoundingBox> declared;
        if (item.contains("bbox")) declared = bbox_from_xywh(item["bbox"], ctx);
        out.push_back(make_proposal(id, image_id, std::move(mask), declared));
    }
    return out;
}

}  // namespace ccm
