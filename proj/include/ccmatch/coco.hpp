#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ccmatch/types.hpp"

namespace ccm {

struct ImageInfo {
    std::string id;
    std::string file_name;
    int width = 0;
    int height = 0;
};

struct CocoDataset {
    std::vector<ImageInfo> images;
    std::vector<std::string> categories;  // in file order
    std::vector<Detection> items;         // category ids resolved to names
};

// COCO-style JSON: images / annotations (bbox [x,y,w,h], segmentation as
// uncompressed RLE, compressed RLE string, or polygons) / categories.
// Polygons are rasterized on ingestion; compressed RLE is decoded, never
// emitted.
CocoDataset load_coco(const std::filesystem::path& path);

// Emits the same schema. Masks go out as uncompressed column-major RLE;
// `score` is written only when present.
void write_coco(const std::filesystem::path& path, const std::vector<ImageInfo>& images,
                const std::vector<std::string>& categories,
                const std::vector<Detection>& detections);

std::string coco_json_string(const std::vector<ImageInfo>& images,
                             const std::vector<std::string>& categories,
                             const std::vector<Detection>& detections);

// Proposal file: JSON array of {"id", "segmentation", "bbox"?}. The tight
// bbox is recomputed from the mask and checked against any declared one.
std::vector<MaskProposal> load_proposals(const std::filesystem::path& path,
                                         const std::string& image_id, int width, int height);

// COCO compressed RLE ("counts" string) decoder.
BinaryMask decode_compressed_rle(const std::string& counts, int height, int width);

// Even-odd scanline rasterization at pixel centers.
BinaryMask rasterize_polygons(const std::vector<std::vector<double>>& polygons, int height,
                              int width);

}  // namespace ccm
