#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "metaforge/pipeline.hpp"

namespace {

using namespace metaforge;

struct CommonArgs {
    std::string config_path;
    std::string strategy;
    std::size_t budget = 0;
    std::string mode;
    bool tool_use = false;
    std::size_t max_retries = 0;
    bool grading = false;
    std::uint64_t seed = 0;
    std::string out;
    std::size_t workers = 0;
    std::string client;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "run config JSON file")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--strategy", args.strategy,
                    "baseline, ner_borda, reranker, or oracle");
    cmd->add_option("--budget", args.budget, "context token budget");
    cmd->add_option("--mode", args.mode, "plain or cot");
    cmd->add_flag("--tool-use", args.tool_use, "ask for a tool call instead of free text");
    cmd->add_option("--max-retries", args.max_retries, "re-ask budget for null fields");
    cmd->add_flag("--grading", args.grading, "grade each extraction with the judge");
    cmd->add_option("--seed", args.seed, "run seed");
    cmd->add_option("--out", args.out, "output directory");
    cmd->add_option("--workers", args.workers, "documents processed in parallel");
    cmd->add_option("--client", args.client, "mock, http, or replay:<dir>");
}

RunConfig resolve_config(const CLI::App* cmd, const CommonArgs& args) {
    RunConfig config = load_run_config(args.config_path);
    if (cmd->count("--strategy")) config.strategy = parse_strategy(args.strategy);
    if (cmd->count("--budget")) config.budget_tokens = args.budget;
    if (cmd->count("--mode")) config.mode = parse_prompt_mode(args.mode);
    if (cmd->count("--tool-use")) config.tool_use = true;
    if (cmd->count("--max-retries")) config.max_retries = args.max_retries;
    if (cmd->count("--grading")) config.grading = true;
    if (cmd->count("--seed")) config.seed = args.seed;
    if (cmd->count("--out")) {
        config.out_dir = std::filesystem::absolute(args.out).lexically_normal().string();
    }
    if (cmd->count("--workers")) config.workers = args.workers;
    if (cmd->count("--client")) config.client = args.client;
    return config;
}

void print_extract_summary(const ExtractRunSummary& summary) {
    std::printf("documents: %zu\n", summary.documents);
    if (summary.failures > 0) std::printf("failures: %zu\n", summary.failures);
    std::printf("field success rate: %.3f\n", summary.success_rate);
    std::printf("run dir: %s\n", summary.run_dir.c_str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"contract metadata extraction pipeline"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string run_dir;
    std::string truth_path;
    std::string cuad_path;
    std::string cuad_out;
    std::vector<std::string> categories;
    bool emit_corpus = false;

    CLI::App* chunk = app.add_subcommand("chunk", "split the corpus into token windows");
    add_common(chunk, args);

    CLI::App* select =
        app.add_subcommand("select", "rank chunks and pack a context per document");
    add_common(select, args);

    CLI::App* extract =
        app.add_subcommand("extract", "select context and extract metadata per document");
    add_common(extract, args);

    CLI::App* grade_cmd =
        app.add_subcommand("grade", "grade the extractions already in the run directory");
    add_common(grade_cmd, args);

    CLI::App* train = app.add_subcommand("train", "train the chunk relevance model");
    add_common(train, args);

    CLI::App* eval_cmd = app.add_subcommand("eval", "score a run against ground truth");
    eval_cmd->add_option("--run", run_dir, "run directory")
        ->required()
        ->check(CLI::ExistingDirectory);
    eval_cmd->add_option("--truth", truth_path,
                         "ground truth JSON (defaults to the run config's)");

    CLI::App* report =
        app.add_subcommand("report", "summarize a run for monitoring");
    report->add_option("--run", run_dir, "run directory")
        ->required()
        ->check(CLI::ExistingDirectory);

    CLI::App* convert =
        app.add_subcommand("convert-cuad", "convert a CUAD export to corpus inputs");
    convert->add_option("cuad", cuad_path, "CUAD JSON file")
        ->required()
        ->check(CLI::ExistingFile);
    convert->add_option("--out", cuad_out, "output directory")->required();
    convert->add_option("--categories", categories, "category names to keep");
    convert->add_flag("--emit-corpus", emit_corpus,
                      "also write per-document text files and a manifest");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(chunk)) {
            const RunConfig config = resolve_config(chunk, args);
            const ExtractRunSummary summary = run_chunk(config);
            std::printf("documents: %zu\nrun dir: %s\n", summary.documents,
                        summary.run_dir.c_str());
        } else if (app.got_subcommand(select)) {
            const RunConfig config = resolve_config(select, args);
            const ExtractRunSummary summary = run_select(config, default_deps(config));
            std::printf("documents: %zu\nrun dir: %s\n", summary.documents,
                        summary.run_dir.c_str());
        } else if (app.got_subcommand(extract)) {
            const RunConfig config = resolve_config(extract, args);
            const ExtractRunSummary summary = run_extract(config, default_deps(config));
            print_extract_summary(summary);
            if (summary.failures > 0) return 1;
        } else if (app.got_subcommand(grade_cmd)) {
            const RunConfig config = resolve_config(grade_cmd, args);
            const ExtractRunSummary summary = run_grade(config, default_deps(config));
            std::printf("graded: %zu\n", summary.documents);
            if (summary.failures > 0) {
                std::printf("grading failures: %zu\n", summary.failures);
                return 1;
            }
        } else if (app.got_subcommand(train)) {
            const RunConfig config = resolve_config(train, args);
            const TrainRunSummary summary = run_train(config, default_deps(config));
            std::printf("train pairs: %zu\ntest pairs: %zu\n", summary.train_pairs,
                        summary.test_pairs);
            std::printf("held-out auc: %.4f\naccuracy: %.4f\n", summary.auc,
                        summary.accuracy);
            for (const std::string& warning : summary.warnings) {
                std::fprintf(stderr, "warning: %s\n", warning.c_str());
            }
            std::printf("model: %s\n", summary.model_path.c_str());
        } else if (app.got_subcommand(eval_cmd)) {
            std::string path = truth_path;
            if (path.empty()) {
                const RunConfig config =
                    load_run_config(run_dir + "/config.resolved.json");
                path = config.ground_truth_path;
            }
            if (path.empty()) {
                throw std::runtime_error(
                    "no ground truth: pass --truth or set it in the run config");
            }
            const GroundTruth truth = load_ground_truth(path);
            const EvalRunSummary summary = run_eval(run_dir, truth);
            std::printf("%s\n", summary.table_row.c_str());
            std::printf("pairs: %zu\n", summary.fields.size());
            if (!summary.missing.empty()) {
                std::printf("missing truth for %zu pairs\n", summary.missing.size());
            }
        } else if (app.got_subcommand(report)) {
            const MonitoringReport rpt = run_report(run_dir);
            std::printf("success rate: %.3f\n", rpt.success_rate);
            for (const auto& [bucket, share] : rpt.field_type_distribution) {
                std::printf("share %s: %.3f\n", bucket.c_str(), share);
            }
            for (const auto& [bucket, quality] : rpt.quality_by_type) {
                std::printf("quality %s: %.3f\n", bucket.c_str(), quality);
            }
        } else if (app.got_subcommand(convert)) {
            CuadConvertOptions options;
            options.categories = categories;
            options.emit_corpus = emit_corpus;
            const CuadConvertSummary summary = convert_cuad(cuad_path, cuad_out, options);
            std::printf("documents: %zu\ntruth: %s\ntemplate: %s\n", summary.documents,
                        summary.truth_path.c_str(), summary.template_path.c_str());
            if (!summary.manifest_path.empty()) {
                std::printf("manifest: %s\n", summary.manifest_path.c_str());
            }
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
