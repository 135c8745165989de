#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "metaforge/corpus.hpp"
#include "metaforge/embed.hpp"
#include "metaforge/eval.hpp"
#include "metaforge/judge.hpp"
#include "metaforge/llm.hpp"
#include "metaforge/ner.hpp"
#include "metaforge/reranker.hpp"
#include "metaforge/select.hpp"
#include "metaforge/template.hpp"

namespace metaforge {

enum class Strategy { baseline, ner_borda, reranker, oracle };

std::string to_string(Strategy strategy);
Strategy parse_strategy(const std::string& text);

struct RunConfig {
    std::string manifest_path;
    std::string template_path;
    std::string ground_truth_path;  // required for oracle selection
    std::string model_path;         // required for reranker selection
    Strategy strategy = Strategy::ner_borda;
    std::size_t budget_tokens = 2048;
    ChunkingConfig chunking;
    BordaWeights borda;
    CoverageParams coverage;
    Bm25Params bm25;
    std::string client = "mock";  // "mock", "http", or "replay:<dir>"
    std::string model_name = "default";
    PromptMode mode = PromptMode::plain;
    bool tool_use = false;
    std::size_t max_retries = 0;
    bool grading = false;
    std::string out_dir = "run";
    std::uint64_t seed = 0;
    std::size_t workers = 1;
};

// JSON config; relative paths resolve against base_dir
RunConfig parse_run_config(const std::string& json_text, const std::string& base_dir);
RunConfig load_run_config(const std::string& path);
void validate_run_config(const RunConfig& config);
std::string serialize_run_config(const RunConfig& config);

// Everything injectable for tests; defaults cover production use.
struct PipelineDeps {
    std::shared_ptr<Embedder> embedder;
    std::shared_ptr<Recognizer> recognizer;
    std::shared_ptr<LLMClient> client;
    std::shared_ptr<LLMClient> judge_client;  // falls back to client
};

PipelineDeps default_deps(const RunConfig& config);

struct DocumentSelection {
    std::vector<Chunk> chunks;
    std::vector<std::vector<std::size_t>> field_rankings;
    std::vector<std::size_t> global_ranking;
    SelectedContext context;
};

DocumentSelection select_for_document(const Document& doc, const Template& tmpl,
                                      const Embedder& embedder,
                                      const Recognizer& recognizer,
                                      const RunConfig& config,
                                      const GroundTruth* truth = nullptr,
                                      const RerankerModel* model = nullptr);

struct ExtractRunSummary {
    std::size_t documents = 0;
    std::size_t failures = 0;
    double success_rate = 0.0;  // non-null (doc, field) fraction
    std::string run_dir;
};

ExtractRunSummary run_chunk(const RunConfig& config);
ExtractRunSummary run_select(const RunConfig& config, const PipelineDeps& deps);
ExtractRunSummary run_extract(const RunConfig& config, const PipelineDeps& deps);

// Grades the results already sitting in config.out_dir.
ExtractRunSummary run_grade(const RunConfig& config, const PipelineDeps& deps);

struct EvalRunSummary {
    std::vector<FieldEval> fields;
    double aggregate = 0.0;
    std::vector<std::string> missing;  // (doc, field) pairs without ground truth
    std::string table_row;
};

EvalRunSummary run_eval(const std::string& run_dir, const GroundTruth& truth);

struct TrainRunSummary {
    std::string model_path;
    double auc = 0.0;
    double accuracy = 0.0;
    std::size_t train_pairs = 0;
    std::size_t test_pairs = 0;
    std::vector<std::string> warnings;
};

TrainRunSummary run_train(const RunConfig& config, const PipelineDeps& deps,
                          const TrainConfig& train_config = {},
                          const SplitConfig& split_config = {});

MonitoringReport run_report(const std::string& run_dir);

struct CuadConvertOptions {
    std::vector<std::string> categories;  // defaults to the standard contract set
    bool emit_corpus = false;             // also write per-document text + manifest
};

struct CuadConvertSummary {
    std::size_t documents = 0;
    std::string truth_path;
    std::string manifest_path;  // empty unless emit_corpus
    std::string template_path;
};

CuadConvertSummary convert_cuad(const std::string& cuad_json_path,
                                const std::string& out_dir,
                                const CuadConvertOptions& options = {});

// filesystem-safe document file stem, stable across runs
std::string sanitize_doc_id(const std::string& doc_id);

}  // namespace metaforge
