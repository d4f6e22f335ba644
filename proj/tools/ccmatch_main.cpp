#include <chrono>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ccmatch/coco.hpp"
#include "ccmatch/counter.hpp"
#include "ccmatch/embedding_store.hpp"
#include "ccmatch/errors.hpp"
#include "ccmatch/metrics.hpp"
#include "ccmatch/pipeline.hpp"
#include "ccmatch/prompt.hpp"
#include "ccmatch/similarity.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw ccm::input_error("cannot write " + path.string());
    out << text;
}

// Resolved configuration echo; the timestamp lives here and nowhere else, so
// payload outputs stay byte-identical across reruns.
void write_run_metadata(const fs::path& dir, const std::string& command, const json& config) {
    json meta;
    meta["command"] = command;
    meta["config"] = config;
    auto now = std::chrono::system_clock::now().time_since_epoch();
    meta["timestamp_unix_ms"] =
        std::chrono::duration_cast<std::chrono::milliseconds>(now).count();
    write_text(dir / "run_metadata.json", meta.dump(2) + "\n");
}

std::vector<std::string> split_csv_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto b = item.find_first_not_of(" \t");
        auto e = item.find_last_not_of(" \t");
        if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
    }
    return out;
}

ccm::CountPrediction load_counts_file(const fs::path& path, const std::string& image_id) {
    std::ifstream in(path);
    if (!in) throw ccm::input_error("cannot open counts file " + path.string());
    ordered_json obj;
    try {
        in >> obj;
    } catch (const json::exception& e) {
        throw ccm::input_error("malformed counts file " + path.string() + ": " + e.what());
    }
    if (!obj.is_object())
        throw ccm::input_error("counts file " + path.string() + " must be a JSON object");
    ccm::CountPrediction counts;
    counts.image_id = image_id;
    for (const auto& [name, value] : obj.items()) {
        std::int64_t c = value.get<std::int64_t>();
        if (c > 0) counts.counts.emplace_back(name, c);
    }
    counts.validate();
    return counts;
}

struct CountArgs {
    std::string manifest_path;
    std::string prompt_path;
    std::string out_dir;
    std::string replay_dir;
    std::string format;
    ccm::CounterClientConfig client;
    bool keep_going = false;
};

int cmd_count(const CountArgs& args) {
    ccm::Manifest manifest = ccm::Manifest::load(args.manifest_path);
    ccm::PromptSpec spec = ccm::PromptSpec::from_json_file(args.prompt_path);
    if (args.format == "markdown") spec.format = ccm::PromptFormat::Markdown;
    else if (args.format == "json") spec.format = ccm::PromptFormat::Json;
    else if (!args.format.empty()) throw ccm::usage_error("unknown --format " + args.format);
    std::string prompt = ccm::build_count_prompt(spec);

    std::unique_ptr<ccm::CounterClient> client;
    if (!args.replay_dir.empty()) {
        client = std::make_unique<ccm::ReplayCounterClient>(args.replay_dir);
    } else {
        if (args.client.endpoint.empty())
            throw ccm::usage_error("--endpoint is required unless --replay is given");
        client = std::make_unique<ccm::HttpCounterClient>(args.client);
    }

    fs::path out(args.out_dir);
    fs::create_directories(out / "counts");
    fs::create_directories(out / "audit");

    int failures = 0;
    for (const auto& img : manifest.images) {
        try {
            ccm::CounterResult result = client->count(img.id, img.file, prompt);
            ordered_json counts_obj;
            for (const auto& [name, count] : result.audit.parsed) counts_obj[name] = count;
            write_text(out / "counts" / (img.id + ".json"), counts_obj.dump(2) + "\n");
            result.audit.save(out / "audit" / (img.id + ".json"));
            std::cerr << "count " << img.id << ": " << result.counts.counts.size()
                      << " categories\n";
        } catch (const ccm::Error& e) {
            if (!args.keep_going) throw;
            ++failures;
            std::cerr << "count " << img.id << " FAILED: " << e.what() << "\n";
            write_text(out / "audit" / (img.id + ".error.txt"), std::string(e.what()) + "\n");
        }
    }
    json config{{"manifest", args.manifest_path},
                {"prompt", args.prompt_path},
                {"replay", args.replay_dir},
                {"endpoint", args.client.endpoint},
                {"model", args.client.model},
                {"temperature", args.client.temperature},
                {"top_p", args.client.top_p},
                {"keep_going", args.keep_going}};
    write_run_metadata(out, "count", config);
    return failures == 0 ? 0 : 2;
}

struct MatchArgs {
    std::string manifest_path;
    std::string counts_dir;
    std::string out_file;
    std::string timing_file;
    std::string category_template = ccm::kDefaultCategoryTemplate;
    int workers = 1;
    bool keep_going = false;
};

int cmd_match(const MatchArgs& args) {
    ccm::Manifest manifest = ccm::Manifest::load(args.manifest_path);
    if (manifest.category_embeddings.empty())
        throw ccm::input_error("manifest lacks category_embeddings");
    ccm::FileEmbeddingStore cat_embs(manifest.category_embeddings);

    ccm::PipelineOptions options;
    options.category_template = args.category_template;
    options.workers = args.workers;
    options.keep_going = args.keep_going;

    fs::path counts_dir(args.counts_dir);
    auto loader = [&](const ccm::ManifestImage& img) {
        return load_counts_file(counts_dir / (img.id + ".json"), img.id);
    };

    ccm::DatasetResult result = ccm::run_dataset(manifest, loader, cat_embs, options);
    for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
    for (const auto& e : result.errors) std::cerr << "error (skipped): " << e << "\n";
    for (const auto& t : result.timings)
        std::cerr << "match " << t.image_id << ": " << t.box_count << " detections\n";

    fs::path out_file(args.out_file);
    if (out_file.has_parent_path()) fs::create_directories(out_file.parent_path());
    ccm::write_coco(out_file, result.images, result.categories, result.detections);
    if (!args.timing_file.empty())
        write_text(args.timing_file, ccm::timings_to_json(result.timings));
    return result.errors.empty() ? 0 : 2;
}

struct EvalArgs {
    std::string detections_path;
    std::string ground_truth_path;
    std::string setting = "open-vocabulary";
    std::string classes_csv;
    std::string out_prefix;
    std::string text_embeddings;
    double iou = 0.5;
    double threshold = ccm::kDefaultEquivalenceThreshold;
    bool want_mask = true;
};

int cmd_eval(const EvalArgs& args) {
    ccm::InstructionSetting setting = ccm::parse_setting(args.setting);
    ccm::CocoDataset gt = ccm::load_coco(args.ground_truth_path);
    ccm::CocoDataset det = ccm::load_coco(args.detections_path);

    std::vector<std::string> classes = args.classes_csv.empty()
                                           ? gt.categories
                                           : split_csv_list(args.classes_csv);
    if (classes.empty())
        throw ccm::input_error("no evaluation classes: ground truth lists no categories and "
                               "--classes was not given");

    std::vector<ccm::Detection> preds = det.items;
    std::int64_t unmatched_dropped = 0;
    if (setting != ccm::InstructionSetting::OpenVocabulary) {
        std::set<std::string> class_set(classes.begin(), classes.end());
        std::set<std::string> generated_set;
        for (const auto& d : preds)
            if (!class_set.count(d.category)) generated_set.insert(d.category);
        if (!generated_set.empty()) {
            if (args.text_embeddings.empty())
                throw ccm::usage_error(
                    "open-ended/open-subclass evaluation with novel category names requires "
                    "--text-embeddings");
            ccm::FileEmbeddingStore text_embs(args.text_embeddings);
            std::vector<std::string> generated(generated_set.begin(), generated_set.end());
            ccm::EquivalenceMap eq = ccm::match_generated_categories(
                generated, classes, text_embs, args.threshold);
            std::vector<ccm::Detection> mapped;
            for (auto& d : preds) {
                if (class_set.count(d.category)) {
                    mapped.push_back(std::move(d));
                    continue;
                }
                auto target = eq.lookup(d.category);
                if (target) {
                    d.category = *target;
                    mapped.push_back(std::move(d));
                } else {
                    ++unmatched_dropped;
                }
            }
            preds = std::move(mapped);
        }
    }

    bool have_masks = !preds.empty() || !gt.items.empty();
    for (const auto& d : preds)
        if (!d.mask) have_masks = false;
    for (const auto& d : gt.items)
        if (!d.mask) have_masks = false;
    if (args.want_mask && !have_masks)
        std::cerr << "warning: mask metrics requested but not every detection carries a mask; "
                     "reporting box metrics only\n";

    ccm::EvalReport report =
        ccm::evaluate(preds, gt.items, classes, args.iou, args.setting, args.want_mask);
    report.unmapped_predictions += unmatched_dropped;

    write_text(args.out_prefix + ".json", report.to_json());
    write_text(args.out_prefix + ".csv", report.to_csv());
    std::cerr << "eval: cnt_f1=" << report.cnt_f1 << " box_f1=" << report.box_f1;
    if (report.mask_f1) std::cerr << " mask_f1=" << *report.mask_f1;
    std::cerr << " box_map_nc=" << report.box_map_nc << "\n";
    return 0;
}

struct SweepArgs {
    std::string detections_path;
    std::string ground_truth_path;
    std::string classes_csv;
    std::string out_file;
    double iou = 0.5;
    double step = 0.02;
};

int cmd_sweep(const SweepArgs& args) {
    ccm::CocoDataset gt = ccm::load_coco(args.ground_truth_path);
    ccm::CocoDataset det = ccm::load_coco(args.detections_path);
    for (const auto& d : det.items)
        if (!d.score)
            throw ccm::input_error(
                "sweep requires scored detections; for confidence-free detections use `ccmatch "
                "eval`");
    std::vector<std::string> classes = args.classes_csv.empty()
                                           ? gt.categories
                                           : split_csv_list(args.classes_csv);
    ccm::SweepResult r = ccm::sweep_thresholds(det.items, gt.items, classes,
                                               ccm::detection_box_iou, args.iou, args.step);
    std::ostringstream csv;
    csv << "threshold,mf1,best\n";
    for (const auto& p : r.curve)
        csv << p.threshold << ',' << p.mf1 << ','
            << (p.threshold == r.best_threshold ? 1 : 0) << "\n";
    write_text(args.out_file, csv.str());
    std::cout << "best_threshold=" << r.best_threshold << " mf1=" << r.best_mf1 << "\n";
    return 0;
}

struct BenchArgs {
    std::string timing_path;
    std::string out_prefix;
};

int cmd_bench(const BenchArgs& args) {
    std::vector<ccm::StageTiming> timings = ccm::timings_from_json_file(args.timing_path);

    std::ostringstream scatter;
    scatter << "image_id,box_count,counter_ms,proposal_ingest_ms,embedding_ms,matching_ms,"
               "total_ms,prompt_tokens,completion_tokens\n";
    double sums[5] = {0, 0, 0, 0, 0};
    for (const auto& t : timings) {
        scatter << t.image_id << ',' << t.box_count << ',' << t.counter_ms << ','
                << t.proposal_ingest_ms << ',' << t.embedding_ms << ',' << t.matching_ms << ','
                << t.total_ms << ',';
        if (t.prompt_tokens) scatter << *t.prompt_tokens;
        scatter << ',';
        if (t.completion_tokens) scatter << *t.completion_tokens;
        scatter << "\n";
        sums[0] += t.counter_ms;
        sums[1] += t.proposal_ingest_ms;
        sums[2] += t.embedding_ms;
        sums[3] += t.matching_ms;
        sums[4] += t.total_ms;
    }
    std::ostringstream summary;
    summary << "stage,mean_ms\n";
    const char* names[5] = {"counter", "proposal_ingest", "embedding", "matching", "total"};
    double n = timings.empty() ? 1.0 : static_cast<double>(timings.size());
    for (int k = 0; k < 5; ++k) summary << names[k] << ',' << sums[k] / n << "\n";

    write_text(args.out_prefix + "_summary.csv", summary.str());
    write_text(args.out_prefix + "_per_image.csv", scatter.str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Counting-constrained mask-label matching and confidence-free evaluation"};
    app.require_subcommand(1);
    app.set_config("--config");

    CountArgs count_args;
    auto* count = app.add_subcommand("count", "Query the counter endpoint over a manifest");
    count->add_option("--manifest", count_args.manifest_path)->required();
    count->add_option("--prompt", count_args.prompt_path, "Prompt spec JSON")->required();
    count->add_option("--out", count_args.out_dir)->required();
    count->add_option("--replay", count_args.replay_dir, "Replay from an audit directory");
    count->add_option("--endpoint", count_args.client.endpoint);
    count->add_option("--model", count_args.client.model);
    count->add_option("--temperature", count_args.client.temperature);
    count->add_option("--top-p", count_args.client.top_p);
    count->add_option("--timeout", count_args.client.timeout_seconds);
    count->add_option("--retries", count_args.client.max_retries);
    count->add_option("--api-key-env", count_args.client.api_key_env);
    count->add_option("--format", count_args.format, "json|markdown");
    count->add_flag("--keep-going", count_args.keep_going);

    MatchArgs match_args;
    auto* match = app.add_subcommand("match", "Assign categories to mask proposals");
    match->add_option("--manifest", match_args.manifest_path)->required();
    match->add_option("--counts", match_args.counts_dir)->required();
    match->add_option("--out", match_args.out_file)->required();
    match->add_option("--timing", match_args.timing_file);
    match->add_option("--template", match_args.category_template);
    match->add_option("--workers", match_args.workers);
    match->add_flag("--keep-going", match_args.keep_going);

    EvalArgs eval_args;
    auto* eval = app.add_subcommand("eval", "Counting/detection/segmentation metrics");
    eval->add_option("--detections", eval_args.detections_path)->required();
    eval->add_option("--ground-truth", eval_args.ground_truth_path)->required();
    eval->add_option("--setting", eval_args.setting);
    eval->add_option("--classes", eval_args.classes_csv, "Comma-separated class list");
    eval->add_option("--out", eval_args.out_prefix, "Output prefix for .json/.csv")->required();
    eval->add_option("--text-embeddings", eval_args.text_embeddings);
    eval->add_option("--iou", eval_args.iou);
    eval->add_option("--threshold", eval_args.threshold, "Semantic equivalence threshold");
    eval->add_flag("--mask,!--no-mask", eval_args.want_mask);

    SweepArgs sweep_args;
    auto* sweep = app.add_subcommand("sweep", "Confidence threshold sweep for scored baselines");
    sweep->add_option("--detections", sweep_args.detections_path)->required();
    sweep->add_option("--ground-truth", sweep_args.ground_truth_path)->required();
    sweep->add_option("--classes", sweep_args.classes_csv);
    sweep->add_option("--out", sweep_args.out_file)->required();
    sweep->add_option("--iou", sweep_args.iou);
    sweep->add_option("--step", sweep_args.step);

    BenchArgs bench_args;
    auto* bench = app.add_subcommand("bench", "Summarize per-stage timing records");
    bench->add_option("--timing", bench_args.timing_path)->required();
    bench->add_option("--out", bench_args.out_prefix)->required();

    try {
        app.parse(argc, argv);
        if (*count) return cmd_count(count_args);
        if (*match) return cmd_match(match_args);
        if (*eval) return cmd_eval(eval_args);
        if (*sweep) return cmd_sweep(sweep_args);
        if (*bench) return cmd_bench(bench_args);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const ccm::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 4;
    }
    return 1;
}
