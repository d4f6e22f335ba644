#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ccmatch/types.hpp"

namespace ccm {

struct Tally {
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t fn = 0;

    Tally& operator+=(const Tally& o) {
        tp += o.tp;
        fp += o.fp;
        fn += o.fn;
        return *this;
    }
};

struct PrfValues {
    double precision = 1.0;
    double recall = 1.0;
    double f1 = 1.0;
};

// Zero-denominator convention: precision (recall) is 1 when there are no
// predictions (no ground truth); F1 is 0 when p + r == 0.
PrfValues compute_prf(const Tally& t);

// tp = min(gt, pred); fp = over-count; fn = under-count.
Tally counting_tally(std::int64_t gt_count, std::int64_t pred_count);

// image id -> category -> instance count. Missing entries mean zero.
using CountTable = std::map<std::string, std::map<std::string, std::int64_t>>;

struct ClassPrfResult {
    std::map<std::string, Tally> tallies;        // over the evaluation class set
    std::map<std::string, PrfValues> prf;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
    std::int64_t unmapped_predictions = 0;       // predictions outside the class set
};

ClassPrfResult counting_prf(const CountTable& gt, const CountTable& pred,
                            const std::vector<std::string>& classes);

using IouFn = std::function<double(const Detection&, const Detection&)>;

// IoU between bounding boxes; usable for every detection.
double detection_box_iou(const Detection& a, const Detection& b);
// IoU between masks; throws Error(Input) if either detection lacks a mask.
double detection_mask_iou(const Detection& a, const Detection& b);

struct MatchResult {
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t fn = 0;
    std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (pred idx, gt idx)
};

// Greedy matching of same-class, same-image detections: candidate pairs with
// IoU >= threshold taken in descending IoU order (ties by pred index, then gt
// index), each side used at most once.
MatchResult match_detections(const std::vector<Detection>& preds,
                             const std::vector<Detection>& gts, const IouFn& iou,
                             double iou_thresh);

struct DetectionEvalResult {
    ClassPrfResult prf;
    std::map<std::string, double> ap_nc;  // per-class single-point P*R
    double map_nc = 0.0;
};

// Accumulates match_detections per class over all images and derives the
// confidence-free metrics: per-class P/R/F1 (macro mean is mF1) and the
// single-point AP_nc = P*R (macro mean is mAP_nc). Scores are ignored.
DetectionEvalResult detection_eval(const std::vector<Detection>& preds,
                                   const std::vector<Detection>& gts,
                                   const std::vector<std::string>& classes, const IouFn& iou,
                                   double iou_thresh = 0.5);

// Macro F1 only, for callers that do not need the AP side.
double detection_mf1(const std::vector<Detection>& preds, const std::vector<Detection>& gts,
                     const std::vector<std::string>& classes, const IouFn& iou,
                     double iou_thresh = 0.5);

struct SweepPoint {
    double threshold = 0.0;
    double mf1 = 0.0;
};

struct SweepResult {
    double best_threshold = 0.0;
    double best_mf1 = 0.0;
    std::vector<SweepPoint> curve;
};

// Confidence sweep over {0, step, 2*step, ..., 1}: keep predictions with
// score >= t, compute mF1, return the argmax (smallest threshold on ties).
// Throws Error(Input) if any prediction lacks a score.
SweepResult sweep_thresholds(const std::vector<Detection>& scored_preds,
                             const std::vector<Detection>& gts,
                             const std::vector<std::string>& classes, const IouFn& iou,
                             double iou_thresh = 0.5, double step = 0.02);

// Full report combining counting, box, optional mask, and AP_nc metrics.
struct EvalReport {
    struct PerClass {
        Tally counting_tally;
        PrfValues counting;
        Tally box_tally;
        PrfValues box;
        std::optional<Tally> mask_tally;
        std::optional<PrfValues> mask;
        double box_ap_nc = 0.0;
        std::optional<double> mask_ap_nc;
    };

    std::map<std::string, PerClass> per_class;
    double cnt_f1 = 0.0;
    double box_f1 = 0.0;
    std::optional<double> mask_f1;
    double box_map_nc = 0.0;
    std::optional<double> mask_map_nc;
    std::int64_t unmapped_predictions = 0;
    double iou_threshold = 0.5;
    std::string setting;
    std::vector<std::string> classes;

    std::string to_json() const;  // stable key order
    std::string to_csv() const;   // one row per class plus a "mean" row
};

// Counting metrics are derived from per-image instance counts of the same
// detections. Mask metrics are computed only when `with_masks` and every
// detection on both sides carries a mask.
EvalReport evaluate(const std::vector<Detection>& preds, const std::vector<Detection>& gts,
                    const std::vector<std::string>& classes, double iou_thresh = 0.5,
                    const std::string& setting = "open-vocabulary", bool with_masks = true);

}  // namespace ccm
