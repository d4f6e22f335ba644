#include "ccmatch/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ccmatch/errors.hpp"

namespace ccm {

using nlohmann::json;

PrfValues compute_prf(const Tally& t) {
    PrfValues v;
    v.precision = (t.tp + t.fp == 0) ? 1.0 : static_cast<double>(t.tp) / (t.tp + t.fp);
    v.recall = (t.tp + t.fn == 0) ? 1.0 : static_cast<double>(t.tp) / (t.tp + t.fn);
    v.f1 = (v.precision + v.recall == 0.0)
               ? 0.0
               : 2.0 * v.precision * v.recall / (v.precision + v.recall);
    return v;
}

Tally counting_tally(std::int64_t gt_count, std::int64_t pred_count) {
    if (gt_count < 0 || pred_count < 0)
        throw input_error("counting_tally: counts must be non-negative");
    Tally t;
    t.tp = std::min(gt_count, pred_count);
    t.fp = std::max<std::int64_t>(0, pred_count - gt_count);
    t.fn = std::max<std::int64_t>(0, gt_count - pred_count);
    return t;
}

namespace {

void finalize_macro(ClassPrfResult& r, const std::vector<std::string>& classes) {
    for (const auto& cls : classes) {
        PrfValues v = compute_prf(r.tallies[cls]);
        r.prf[cls] = v;
        r.macro_precision += v.precision;
        r.macro_recall += v.recall;
        r.macro_f1 += v.f1;
    }
    if (!classes.empty()) {
        r.macro_precision /= static_cast<double>(classes.size());
        r.macro_recall /= static_cast<double>(classes.size());
        r.macro_f1 /= static_cast<double>(classes.size());
    }
}

}  // namespace

ClassPrfResult counting_prf(const CountTable& gt, const CountTable& pred,
                            const std::vector<std::string>& classes) {
    ClassPrfResult r;
    std::set<std::string> class_set(classes.begin(), classes.end());
    for (const auto& cls : classes) r.tallies[cls];  // ensure entries exist

    std::set<std::string> images;
    for (const auto& [img, _] : gt) images.insert(img);
    for (const auto& [img, _] : pred) images.insert(img);

    for (const auto& img : images) {
        auto git = gt.find(img);
        auto pit = pred.find(img);
        std::set<std::string> cats;
        if (git != gt.end())
            for (const auto& [c, _] : git->second) cats.insert(c);
        if (pit != pred.end())
            for (const auto& [c, _] : pit->second) cats.insert(c);
        for (const auto& cls : cats) {
            std::int64_t g = 0, p = 0;
            if (git != gt.end())
                if (auto it = git->second.find(cls); it != git->second.end()) g = it->second;
            if (pit != pred.end())
                if (auto it = pit->second.find(cls); it != pit->second.end()) p = it->second;
            if (!class_set.count(cls)) {
                r.unmapped_predictions += p;
                continue;
            }
            r.tallies[cls] += counting_tally(g, p);
        }
    }
    finalize_macro(r, classes);
    return r;
}

double detection_box_iou(const Detection& a, const Detection& b) {
    return box_iou(a.bbox, b.bbox);
}

double detection_mask_iou(const Detection& a, const Detection& b) {
    if (!a.mask || !b.mask)
        throw input_error("mask IoU requested but a detection has no mask (image " + a.image_id +
                          ")");
    return mask_iou(*a.mask, *b.mask);
}

MatchResult match_detections(const std::vector<Detection>& preds,
                             const std::vector<Detection>& gts, const IouFn& iou,
                             double iou_thresh) {
    struct Candidate {
        double iou;
        std::size_t pred, gt;
    };
    std::vector<Candidate> candidates;
    for (std::size_t p = 0; p < preds.size(); ++p)
        for (std::size_t g = 0; g < gts.size(); ++g) {
            double v = iou(preds[p], gts[g]);
            if (v >= iou_thresh) candidates.push_back({v, p, g});
        }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        if (a.iou != b.iou) return a.iou > b.iou;
        if (a.pred != b.pred) return a.pred < b.pred;
        return a.gt < b.gt;
    });

    MatchResult r;
    std::vector<bool> pred_used(preds.size(), false), gt_used(gts.size(), false);
    for (const auto& c : candidates) {
        if (pred_used[c.pred] || gt_used[c.gt]) continue;
        pred_used[c.pred] = true;
        gt_used[c.gt] = true;
        r.pairs.emplace_back(c.pred, c.gt);
    }
    r.tp = static_cast<std::int64_t>(r.pairs.size());
    r.fp = static_cast<std::int64_t>(preds.size()) - r.tp;
    r.fn = static_cast<std::int64_t>(gts.size()) - r.tp;
    return r;
}

namespace {

using GroupKey = std::pair<std::string, std::string>;  // (category, image)

std::map<GroupKey, std::vector<Detection>> group_by_class_image(
    const std::vector<Detection>& dets) {
    std::map<GroupKey, std::vector<Detection>> out;
    for (const auto& d : dets) out[{d.category, d.image_id}].push_back(d);
    return out;
}

}  // namespace

DetectionEvalResult detection_eval(const std::vector<Detection>& preds,
                                   const std::vector<Detection>& gts,
                                   const std::vector<std::string>& classes, const IouFn& iou,
                                   double iou_thresh) {
    DetectionEvalResult r;
    std::set<std::string> class_set(classes.begin(), classes.end());
    for (const auto& cls : classes) r.prf.tallies[cls];

    auto pred_groups = group_by_class_image(preds);
    auto gt_groups = group_by_class_image(gts);

    std::set<GroupKey> keys;
    for (const auto& [k, _] : pred_groups) keys.insert(k);
    for (const auto& [k, _] : gt_groups) keys.insert(k);

    static const std::vector<Detection> kEmpty;
    for (const auto& key : keys) {
        const auto& [cls, img] = key;
        auto pit = pred_groups.find(key);
        auto git = gt_groups.find(key);
        const auto& p = pit == pred_groups.end() ? kEmpty : pit->second;
        const auto& g = git == gt_groups.end() ? kEmpty : git->second;
        if (!class_set.count(cls)) {
            r.prf.unmapped_predictions += static_cast<std::int64_t>(p.size());
            continue;
        }
        MatchResult m = match_detections(p, g, iou, iou_thresh);
        r.prf.tallies[cls] += Tally{m.tp, m.fp, m.fn};
    }
    finalize_macro(r.prf, classes);

    for (const auto& cls : classes) {
        PrfValues v = r.prf.prf[cls];
        double ap = v.precision * v.recall;
        r.ap_nc[cls] = ap;
        r.map_nc += ap;
    }
    if (!classes.empty()) r.map_nc /= static_cast<double>(classes.size());
    return r;
}

double detection_mf1(const std::vector<Detection>& preds, const std::vector<Detection>& gts,
                     const std::vector<std::string>& classes, const IouFn& iou,
                     double iou_thresh) {
    return detection_eval(preds, gts, classes, iou, iou_thresh).prf.macro_f1;
}

SweepResult sweep_thresholds(const std::vector<Detection>& scored_preds,
                             const std::vector<Detection>& gts,
                             const std::vector<std::string>& classes, const IouFn& iou,
                             double iou_thresh, double step) {
    if (step <= 0.0 || step > 1.0) throw usage_error("sweep step must be in (0, 1]");
    for (const auto& d : scored_preds)
        if (!d.score)
            throw input_error("sweep requires a score on every prediction (image " + d.image_id +
                              ", category " + d.category + ")");

    SweepResult r;
    r.best_mf1 = -1.0;
    for (int k = 0;; ++k) {
        double t = k * step;
        if (t > 1.0 + 1e-9) break;
        if (std::abs(t - 1.0) < 1e-9) t = 1.0;
        std::vector<Detection> kept;
        for (const auto& d : scored_preds)
            if (*d.score >= t) kept.push_back(d);
        double mf1 = detection_mf1(kept, gts, classes, iou, iou_thresh);
        r.curve.push_back({t, mf1});
        if (mf1 > r.best_mf1) {  // strict: smallest threshold wins ties
            r.best_mf1 = mf1;
            r.best_threshold = t;
        }
        if (t >= 1.0) break;
    }
    return r;
}

EvalReport evaluate(const std::vector<Detection>& preds, const std::vector<Detection>& gts,
                    const std::vector<std::string>& classes, double iou_thresh,
                    const std::string& setting, bool with_masks) {
    EvalReport report;
    report.iou_threshold = iou_thresh;
    report.setting = setting;
    report.classes = classes;

    CountTable gt_counts, pred_counts;
    for (const auto& d : gts) ++gt_counts[d.image_id][d.category];
    for (const auto& d : preds) ++pred_counts[d.image_id][d.category];
    ClassPrfResult counting = counting_prf(gt_counts, pred_counts, classes);

    DetectionEvalResult box = detection_eval(preds, gts, classes, detection_box_iou, iou_thresh);

    bool all_masks = with_masks;
    for (const auto& d : preds)
        if (!d.mask) all_masks = false;
    for (const auto& d : gts)
        if (!d.mask) all_masks = false;
    std::optional<DetectionEvalResult> mask;
    if (all_masks)
        mask = detection_eval(preds, gts, classes, detection_mask_iou, iou_thresh);

    for (const auto& cls : classes) {
        EvalReport::PerClass pc;
        pc.counting_tally = counting.tallies[cls];
        pc.counting = counting.prf[cls];
        pc.box_tally = box.prf.tallies[cls];
        pc.box = box.prf.prf[cls];
        pc.box_ap_nc = box.ap_nc[cls];
        if (mask) {
            pc.mask_tally = mask->prf.tallies[cls];
            pc.mask = mask->prf.prf[cls];
            pc.mask_ap_nc = mask->ap_nc[cls];
        }
        report.per_class[cls] = pc;
    }
    report.cnt_f1 = counting.macro_f1;
    report.box_f1 = box.prf.macro_f1;
    report.box_map_nc = box.map_nc;
    if (mask) {
        report.mask_f1 = mask->prf.macro_f1;
        report.mask_map_nc = mask->map_nc;
    }
    report.unmapped_predictions = counting.unmapped_predictions + box.prf.unmapped_predictions;
    return report;
}

namespace {

json tally_json(const Tally& t, const PrfValues& v) {
    json j;
    j["tp"] = t.tp;
    j["fp"] = t.fp;
    j["fn"] = t.fn;
    j["precision"] = v.precision;
    j["recall"] = v.recall;
    j["f1"] = v.f1;
    return j;
}

}  // namespace

std::string EvalReport::to_json() const {
    json j;
    j["setting"] = setting;
    j["iou_threshold"] = iou_threshold;
    j["classes"] = classes;
    json pc = json::object();
    for (const auto& [cls, m] : per_class) {
        json c;
        c["counting"] = tally_json(m.counting_tally, m.counting);
        c["box"] = tally_json(m.box_tally, m.box);
        c["box_ap_nc"] = m.box_ap_nc;
        if (m.mask) {
            c["mask"] = tally_json(*m.mask_tally, *m.mask);
            c["mask_ap_nc"] = *m.mask_ap_nc;
        }
        pc[cls] = c;
    }
    j["per_class"] = pc;
    json macro;
    macro["cnt_f1"] = cnt_f1;
    macro["box_f1"] = box_f1;
    macro["box_map_nc"] = box_map_nc;
    if (mask_f1) macro["mask_f1"] = *mask_f1;
    if (mask_map_nc) macro["mask_map_nc"] = *mask_map_nc;
    j["macro"] = macro;
    j["diagnostics"]["unmapped_predictions"] = unmapped_predictions;
    return j.dump(2) + "\n";
}

std::string EvalReport::to_csv() const {
    std::ostringstream out;
    out << "class,cnt_precision,cnt_recall,cnt_f1,box_precision,box_recall,box_f1,"
           "mask_precision,mask_recall,mask_f1,box_ap_nc,mask_ap_nc\n";
    auto cell = [](std::optional<double> v) {
        return v ? std::to_string(*v) : std::string();
    };
    for (const auto& [cls, m] : per_class) {
        out << cls << ',' << m.counting.precision << ',' << m.counting.recall << ','
            << m.counting.f1 << ',' << m.box.precision << ',' << m.box.recall << ',' << m.box.f1
            << ',' << cell(m.mask ? std::optional<double>(m.mask->precision) : std::nullopt) << ','
            << cell(m.mask ? std::optional<double>(m.mask->recall) : std::nullopt) << ','
            << cell(m.mask ? std::optional<double>(m.mask->f1) : std::nullopt) << ','
            << m.box_ap_nc << ',' << cell(m.mask_ap_nc) << "\n";
    }
    out << "mean,,," << cnt_f1 << ",,," << box_f1 << ",,," << cell(mask_f1) << ','
        << box_map_nc << ',' << cell(mask_map_nc) << "\n";
    return out.str();
}

}  // namespace ccm
