#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "ccmatch/coco.hpp"
#include "ccmatch/errors.hpp"

using namespace ccm;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name, const std::string& content) {
    fs::path path = fs::temp_directory_path() / name;
    std::ofstream out(path);
    out << content;
    return path;
}

}  // namespace

TEST_CASE("decode_compressed_rle") {
    // "414" encodes runs [4, 1, 4] (no delta below index 3)
    BinaryMask m = decode_compressed_rle("414", 3, 3);
    CHECK(m.runs == std::vector<std::uint64_t>{4, 1, 4});

    // "2320" encodes [2, 3, 2, 3]: the fourth count is delta-coded
    BinaryMask d = decode_compressed_rle("2320", 5, 2);
    CHECK(d.runs == std::vector<std::uint64_t>{2, 3, 2, 3});

    // negative delta uses the sign-extension path: [1, 5, 1, 1]
    BinaryMask n = decode_compressed_rle("151L", 4, 2);
    CHECK(n.runs == std::vector<std::uint64_t>{1, 5, 1, 1});

    CHECK_THROWS_AS(decode_compressed_rle("414", 2, 2), Error);  // wrong pixel total
}

TEST_CASE("rasterize_polygons square") {
    BinaryMask m = rasterize_polygons({{1, 1, 5, 1, 5, 5, 1, 5}}, 8, 8);
    CHECK(foreground_area(m) == 16);
    BoundingBox box = tight_bbox(m);
    CHECK(box == BoundingBox{1, 1, 5, 5});
}

TEST_CASE("coco round trip") {
    std::vector<ImageInfo> images = {{"img1", "img1.png", 16, 12}};
    std::vector<std::string> categories = {"airplane", "ship"};
    std::vector<std::uint8_t> grid(16 * 12, 0);
    for (int y = 2; y < 6; ++y)
        for (int x = 3; x < 9; ++x) grid[y * 16 + x] = 1;
    Detection d;
    d.image_id = "img1";
    d.category = "ship";
    d.mask = rle_encode(grid, 16, 12);
    d.bbox = tight_bbox(*d.mask);

    fs::path path = fs::temp_directory_path() / "ccm_coco_rt.json";
    write_coco(path, images, categories, {d});
    CocoDataset ds = load_coco(path);

    REQUIRE(ds.items.size() == 1);
    CHECK(ds.categories == categories);
    CHECK(ds.items[0].image_id == "img1");
    CHECK(ds.items[0].category == "ship");
    CHECK(ds.items[0].bbox == d.bbox);
    REQUIRE(ds.items[0].mask.has_value());
    CHECK(ds.items[0].mask->runs == d.mask->runs);
    CHECK(!ds.items[0].score.has_value());
    fs::remove(path);
}

TEST_CASE("load_coco with polygons and scores") {
    std::string doc = R"({
      "images": [{"id": 1, "file_name": "a.png", "width": 8, "height": 8}],
      "categories": [{"id": 7, "name": "tank"}],
      "annotations": [
        {"image_id": 1, "category_id": 7, "bbox": [1, 1, 4, 4],
         "segmentation": [[1, 1, 5, 1, 5, 5, 1, 5]], "score": 0.75}
      ]
    })";
    fs::path path = temp_file("ccm_coco_poly.json", doc);
    CocoDataset ds = load_coco(path);
    REQUIRE(ds.items.size() == 1);
    CHECK(ds.items[0].image_id == "1");
    CHECK(ds.items[0].category == "tank");
    CHECK(ds.items[0].score == doctest::Approx(0.75));
    REQUIRE(ds.items[0].mask.has_value());
    CHECK(foreground_area(*ds.items[0].mask) == 16);
    fs::remove(path);
}

TEST_CASE("load_coco rejects unknown category ids") {
    std::string doc = R"({
      "images": [], "categories": [],
      "annotations": [{"image_id": 1, "category_id": 9, "bbox": [0, 0, 1, 1]}]
    })";
    fs::path path = temp_file("ccm_coco_badcat.json", doc);
    CHECK_THROWS_AS(load_coco(path), Error);
    fs::remove(path);
}

TEST_CASE("load_proposals recomputes and verifies tight boxes") {
    std::string doc = R"([
      {"id": 3, "segmentation": {"size": [3, 3], "counts": [4, 1, 4]}, "bbox": [1, 1, 1, 1]}
    ])";
    fs::path path = temp_file("ccm_props.json", doc);
    auto props = load_proposals(path, "imgX", 3, 3);
    REQUIRE(props.size() == 1);
    CHECK(props[0].id == 3);
    CHECK(props[0].image_id == "imgX");
    CHECK(props[0].bbox == BoundingBox{1, 1, 2, 2});
    fs::remove(path);

    std::string bad = R"([
      {"id": 3, "segmentation": {"size": [3, 3], "counts": [4, 1, 4]}, "bbox": [0, 0, 3, 3]}
    ])";
    path = temp_file("ccm_props_bad.json", bad);
    CHECK_THROWS_AS(load_proposals(path, "imgX", 3, 3), Error);
    fs::remove(path);
}
