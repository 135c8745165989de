#include "metaforge/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace metaforge {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_file(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path.string());
    out << content;
}

// Everything becomes absolute so the copy written into the run directory
// still points at the same files when reloaded from elsewhere.
std::string resolve_path(const std::string& raw, const std::string& base_dir) {
    if (raw.empty()) return raw;
    fs::path p(raw);
    if (!p.is_absolute()) {
        p = base_dir.empty() ? fs::absolute(p) : fs::path(base_dir) / p;
        if (!p.is_absolute()) p = fs::absolute(p);
    }
    return p.lexically_normal().string();
}

// descending by score, ties by index
std::vector<std::size_t> rank_desc(const std::vector<double>& scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores[a] > scores[b];
    });
    return order;
}

// Borda aggregation of already-ranked lists: position p earns n-1-p points.
std::vector<std::size_t> aggregate_rankings(
    const std::vector<std::vector<std::size_t>>& rankings, std::size_t n) {
    std::vector<double> points(n, 0.0);
    for (const auto& ranking : rankings) {
        for (std::size_t pos = 0; pos < ranking.size(); ++pos) {
            points[ranking[pos]] += static_cast<double>(n - 1 - pos);
        }
    }
    return rank_desc(points);
}

json chunk_to_json(const Chunk& chunk) {
    return json{{"index", chunk.index},
                {"start", chunk.char_span.start},
                {"end", chunk.char_span.end},
                {"token_count", chunk.token_count},
                {"text", chunk.text}};
}

Chunk chunk_from_json(const json& j, const std::string& doc_id) {
    Chunk chunk;
    chunk.doc_id = doc_id;
    chunk.index = j.at("index").get<std::size_t>();
    chunk.char_span.start = j.at("start").get<std::size_t>();
    chunk.char_span.end = j.at("end").get<std::size_t>();
    chunk.token_count = j.at("token_count").get<std::size_t>();
    chunk.text = j.at("text").get<std::string>();
    return chunk;
}

json context_to_json(const std::string& doc_id, const DocumentSelection& selection,
                     const Template& tmpl) {
    json coverage = json::object();
    for (std::size_t j = 0; j < selection.context.per_field_coverage.size(); ++j) {
        coverage[tmpl.fields[j].key] = selection.context.per_field_coverage[j];
    }
    json chunks = json::array();
    for (const Chunk& chunk : selection.context.chunks) {
        chunks.push_back(chunk_to_json(chunk));
    }
    return json{{"doc_id", doc_id},
                {"total_tokens", selection.context.total_tokens},
                {"budget_warning", selection.context.budget_warning},
                {"per_field_coverage", std::move(coverage)},
                {"chunks", std::move(chunks)}};
}

SelectedContext context_from_json(const json& j) {
    SelectedContext ctx;
    const std::string doc_id = j.at("doc_id").get<std::string>();
    for (const json& chunk : j.at("chunks")) {
        ctx.chunks.push_back(chunk_from_json(chunk, doc_id));
    }
    ctx.total_tokens = j.at("total_tokens").get<std::size_t>();
    ctx.budget_warning = j.at("budget_warning").get<bool>();
    return ctx;
}

json result_to_json(const std::string& doc_id, const ExtractionResult& result,
                    const RunConfig& config) {
    return json{{"doc_id", doc_id},
                {"strategy", to_string(config.strategy)},
                {"mode", to_string(config.mode)},
                {"tool_use", config.tool_use},
                {"attempt", result.attempt},
                {"values", result.values},
                {"thinking_trace", result.thinking_trace},
                {"diagnostics", result.diagnostics}};
}

json failure_to_json(const std::string& doc_id, const RunConfig& config,
                     const std::string& message,
                     const std::vector<std::string>& raw_responses) {
    return json{{"doc_id", doc_id},
                {"strategy", to_string(config.strategy)},
                {"error", message},
                {"raw_responses", raw_responses}};
}

struct LoadedRun {
    RunConfig config;
    Template tmpl;
    std::vector<Document> corpus;
    GroundTruth truth;
    bool has_truth = false;
    RerankerModel model;
    bool has_model = false;
    std::vector<std::string> stems;  // per document, collision-free
};

std::vector<std::string> make_stems(const std::vector<Document>& corpus) {
    std::vector<std::string> stems;
    std::set<std::string> used;
    for (const Document& doc : corpus) {
        std::string stem = sanitize_doc_id(doc.id);
        std::string candidate = stem;
        std::size_t bump = 2;
        while (!used.insert(candidate).second) {
            candidate = stem + "-" + std::to_string(bump++);
        }
        stems.push_back(candidate);
    }
    return stems;
}

LoadedRun load_run(const RunConfig& config, const Embedder& embedder,
                   bool need_template = true) {
    validate_run_config(config);
    LoadedRun run;
    run.config = config;
    run.corpus = load_corpus(config.manifest_path);
    run.stems = make_stems(run.corpus);
    if (need_template) {
        run.tmpl = load_template(config.template_path);
        run.tmpl = assign_missing_labels(run.tmpl, builtin_label_definitions(), embedder);
    }
    if (!config.ground_truth_path.empty()) {
        run.truth = load_ground_truth(config.ground_truth_path);
        run.has_truth = true;
    }
    if (config.strategy == Strategy::reranker) {
        run.model = load_model(config.model_path);
        run.has_model = true;
    }
    return run;
}

void write_run_preamble(const LoadedRun& run, bool with_template = true) {
    const fs::path out(run.config.out_dir);
    fs::create_directories(out);
    write_file(out / "config.resolved.json", serialize_run_config(run.config));
    if (with_template) {
        write_file(out / "template.resolved.json", serialize_template(run.tmpl));
    }
}

// applies fn to every document index, optionally across workers
void for_each_document(std::size_t count, std::size_t workers,
                       const std::function<void(std::size_t)>& fn) {
    const std::size_t n =
        std::max<std::size_t>(1, std::min<std::size_t>(workers, count));
    if (n <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr first_error;
    std::mutex error_mutex;
    for (std::size_t w = 0; w < n; ++w) {
        pool.emplace_back([&]() {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (std::thread& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

std::vector<fs::path> sorted_files(const fs::path& dir) {
    std::vector<fs::path> files;
    if (!fs::exists(dir)) return files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    return files;
}

void write_grade_lines(const fs::path& run_dir, const Template& tmpl) {
    std::ostringstream lines;
    for (const fs::path& path : sorted_files(run_dir / "grades")) {
        if (path.extension() != ".json") continue;
        const json doc = json::parse(read_file(path));
        if (!doc.contains("fields")) continue;  // grading failure record
        for (const FieldSpec& field : tmpl.fields) {
            if (!doc.at("fields").contains(field.key)) continue;
            const json& cell = doc.at("fields").at(field.key);
            lines << json{{"doc_id", doc.at("doc_id")},
                          {"field", field.key},
                          {"score", cell.at("score")},
                          {"corrected", cell.at("corrected")},
                          {"agent", doc.at("agent").at(field.key)}}
                         .dump()
                  << "\n";
        }
    }
    write_file(run_dir / "grades.jsonl", lines.str());
}

}  // namespace

std::string to_string(Strategy strategy) {
    switch (strategy) {
        case Strategy::baseline: return "baseline";
        case Strategy::ner_borda: return "ner_borda";
        case Strategy::reranker: return "reranker";
        case Strategy::oracle: return "oracle";
    }
    throw std::invalid_argument("unknown strategy value");
}

Strategy parse_strategy(const std::string& text) {
    if (text == "baseline") return Strategy::baseline;
    if (text == "ner_borda") return Strategy::ner_borda;
    if (text == "reranker") return Strategy::reranker;
    if (text == "oracle") return Strategy::oracle;
    throw std::invalid_argument("unknown strategy: \"" + text + "\"");
}

std::string sanitize_doc_id(const std::string& doc_id) {
    std::string out;
    for (char c : doc_id) {
        const bool safe = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                          (c >= '0' && c <= '9') || c == '.' || c == '_' || c == '-';
        out.push_back(safe ? c : '_');
    }
    if (out.empty()) out = "doc";
    return out;
}

RunConfig parse_run_config(const std::string& json_text, const std::string& base_dir) {
    json root = json::parse(json_text, nullptr, false);
    if (root.is_discarded() || !root.is_object()) {
        throw std::runtime_error("run config must be a JSON object");
    }
    RunConfig config;
    config.manifest_path = resolve_path(root.value("manifest", ""), base_dir);
    config.template_path = resolve_path(root.value("template", ""), base_dir);
    config.ground_truth_path = resolve_path(root.value("ground_truth", ""), base_dir);
    config.model_path = resolve_path(root.value("model_file", ""), base_dir);
    if (root.contains("strategy")) {
        config.strategy = parse_strategy(root.at("strategy").get<std::string>());
    }
    config.budget_tokens = root.value("budget_tokens", config.budget_tokens);
    config.chunking.chunk_tokens = root.value("chunk_tokens", config.chunking.chunk_tokens);
    config.chunking.overlap_tokens =
        root.value("overlap_tokens", config.chunking.overlap_tokens);
    if (root.contains("borda_weights")) {
        const json& w = root.at("borda_weights");
        config.borda.pf_cos = w.value("pf_cos", config.borda.pf_cos);
        config.borda.pf_ner = w.value("pf_ner", config.borda.pf_ner);
        config.borda.total_cos = w.value("total_cos", config.borda.total_cos);
        config.borda.total_ner = w.value("total_ner", config.borda.total_ner);
    }
    config.coverage.coverage_fraction =
        root.value("coverage_fraction", config.coverage.coverage_fraction);
    config.coverage.top_m = root.value("top_m", config.coverage.top_m);
    if (root.contains("bm25")) {
        config.bm25.k1 = root.at("bm25").value("k1", config.bm25.k1);
        config.bm25.b = root.at("bm25").value("b", config.bm25.b);
    }
    config.client = root.value("client", config.client);
    config.model_name = root.value("model_name", config.model_name);
    if (root.contains("mode")) {
        config.mode = parse_prompt_mode(root.at("mode").get<std::string>());
    }
    config.tool_use = root.value("tool_use", config.tool_use);
    config.max_retries = root.value("max_retries", config.max_retries);
    config.grading = root.value("grading", config.grading);
    config.out_dir = resolve_path(root.value("out_dir", config.out_dir), base_dir);
    config.seed = root.value("seed", config.seed);
    config.workers = root.value("workers", config.workers);
    return config;
}

RunConfig load_run_config(const std::string& path) {
    const fs::path p(path);
    return parse_run_config(read_file(p), p.parent_path().string());
}

void validate_run_config(const RunConfig& config) {
    if (config.manifest_path.empty()) {
        throw std::invalid_argument("run config needs a corpus manifest");
    }
    if (config.template_path.empty()) {
        throw std::invalid_argument("run config needs a template");
    }
    if (config.chunking.chunk_tokens == 0) {
        throw std::invalid_argument("chunk_tokens must be positive");
    }
    if (config.chunking.overlap_tokens >= config.chunking.chunk_tokens) {
        throw std::invalid_argument("overlap_tokens must be smaller than chunk_tokens");
    }
    if (config.budget_tokens < config.chunking.chunk_tokens) {
        throw std::invalid_argument(
            "context budget must hold at least one chunk window");
    }
    if (config.strategy == Strategy::oracle && config.ground_truth_path.empty()) {
        throw std::invalid_argument("oracle selection requires ground truth");
    }
    if (config.strategy == Strategy::reranker && config.model_path.empty()) {
        throw std::invalid_argument("reranker selection requires a model file");
    }
    if (config.coverage.coverage_fraction <= 0.0 ||
        config.coverage.coverage_fraction > 1.0) {
        throw std::invalid_argument("coverage_fraction must be in (0, 1]");
    }
    if (config.coverage.top_m == 0) {
        throw std::invalid_argument("top_m must be positive");
    }
    if (config.workers == 0) {
        throw std::invalid_argument("workers must be positive");
    }
    if (config.out_dir.empty()) {
        throw std::invalid_argument("run config needs an output directory");
    }
}

std::string serialize_run_config(const RunConfig& config) {
    json root;
    root["manifest"] = config.manifest_path;
    root["template"] = config.template_path;
    root["ground_truth"] = config.ground_truth_path;
    root["model_file"] = config.model_path;
    root["strategy"] = to_string(config.strategy);
    root["budget_tokens"] = config.budget_tokens;
    root["chunk_tokens"] = config.chunking.chunk_tokens;
    root["overlap_tokens"] = config.chunking.overlap_tokens;
    root["borda_weights"] = {{"pf_cos", config.borda.pf_cos},
                             {"pf_ner", config.borda.pf_ner},
                             {"total_cos", config.borda.total_cos},
                             {"total_ner", config.borda.total_ner}};
    root["coverage_fraction"] = config.coverage.coverage_fraction;
    root["top_m"] = config.coverage.top_m;
    root["bm25"] = {{"k1", config.bm25.k1}, {"b", config.bm25.b}};
    root["client"] = config.client;
    root["model_name"] = config.model_name;
    root["mode"] = to_string(config.mode);
    root["tool_use"] = config.tool_use;
    root["max_retries"] = config.max_retries;
    root["grading"] = config.grading;
    root["out_dir"] = config.out_dir;
    root["seed"] = config.seed;
    root["workers"] = config.workers;
    return root.dump(2);
}

PipelineDeps default_deps(const RunConfig& config) {
    PipelineDeps deps;
    deps.embedder = std::make_shared<HashedNgramEmbedder>();
    deps.recognizer = std::make_shared<Recognizer>();

    if (config.client == "mock") {
        // deterministic stand-in: answers with an empty payload, so every
        // field comes back null
        deps.client = std::make_shared<MockClient>(
            [](const ChatRequest&) { return ChatResponse{"{}", std::nullopt}; });
    } else if (config.client == "http") {
        const char* endpoint = std::getenv("METAFORGE_LLM_ENDPOINT");
        if (endpoint == nullptr || *endpoint == '\0') {
            throw std::runtime_error(
                "client \"http\" needs METAFORGE_LLM_ENDPOINT in the environment");
        }
        HttpLLMConfig http;
        http.endpoint = endpoint;
        if (const char* key = std::getenv("METAFORGE_LLM_KEY")) http.api_key = key;
        deps.client = std::shared_ptr<LLMClient>(make_http_llm_client(http));
    } else if (config.client.rfind("replay:", 0) == 0) {
        deps.client = std::make_shared<ReplayClient>(config.client.substr(7));
    } else {
        throw std::invalid_argument("unknown client \"" + config.client +
                                    "\" (expected mock, http, or replay:<dir>)");
    }
    deps.judge_client = deps.client;
    return deps;
}

DocumentSelection select_for_document(const Document& doc, const Template& tmpl,
                                      const Embedder& embedder,
                                      const Recognizer& recognizer,
                                      const RunConfig& config, const GroundTruth* truth,
                                      const RerankerModel* model) {
    DocumentSelection selection;
    selection.chunks = chunk_document(doc, config.chunking);
    const std::size_t n = selection.chunks.size();
    const std::size_t f = tmpl.fields.size();

    if (n == 0) {
        selection.context = pack_context({}, {}, selection.chunks, config.budget_tokens,
                                         config.coverage);
        return selection;
    }

    switch (config.strategy) {
        case Strategy::baseline: {
            const ScoreMatrix scores =
                compute_scores(selection.chunks, tmpl, embedder, recognizer, config.bm25);
            std::vector<double> mean_cos(n, 0.0);
            for (std::size_t j = 0; j < f; ++j) {
                std::vector<double> column(n);
                for (std::size_t i = 0; i < n; ++i) {
                    column[i] = scores.per_field_cos[i][j];
                    mean_cos[i] += column[i] / static_cast<double>(f);
                }
                selection.field_rankings.push_back(rank_desc(column));
            }
            selection.global_ranking = rank_desc(mean_cos);
            // plain similarity packing: no per-field coverage pass
            selection.context = pack_context({}, selection.global_ranking,
                                             selection.chunks, config.budget_tokens,
                                             config.coverage);
            return selection;
        }
        case Strategy::ner_borda: {
            const ScoreMatrix scores =
                compute_scores(selection.chunks, tmpl, embedder, recognizer, config.bm25);
            for (std::size_t j = 0; j < f; ++j) {
                selection.field_rankings.push_back(borda_rank(scores, config.borda, j));
            }
            // consensus over the whole-template families only
            ScoreMatrix totals;
            totals.per_field_cos.assign(n, std::vector<double>(1, 0.0));
            totals.per_field_ner.assign(n, std::vector<double>(1, 0.0));
            totals.bm25.assign(n, std::vector<double>(1, 0.0));
            totals.total_cos = scores.total_cos;
            totals.total_ner = scores.total_ner;
            BordaWeights total_weights;
            total_weights.pf_cos = 0.0;
            total_weights.pf_ner = 0.0;
            total_weights.total_cos = config.borda.total_cos;
            total_weights.total_ner = config.borda.total_ner;
            if (total_weights.total_cos + total_weights.total_ner <= 0.0) {
                total_weights.total_cos = 1.0;
                total_weights.total_ner = 1.0;
            }
            selection.global_ranking = borda_rank(totals, total_weights, 0);
            break;
        }
        case Strategy::reranker: {
            if (model == nullptr) {
                throw std::invalid_argument("reranker strategy needs a trained model");
            }
            const auto features = compute_features(selection.chunks, tmpl, embedder,
                                                   recognizer, config.chunking);
            std::vector<double> mean_score(n, 0.0);
            for (std::size_t j = 0; j < f; ++j) {
                std::vector<double> column(n);
                for (std::size_t i = 0; i < n; ++i) {
                    column[i] = predict(*model, features[i][j]);
                    mean_score[i] += column[i] / static_cast<double>(f);
                }
                selection.field_rankings.push_back(rank_desc(column));
            }
            selection.global_ranking = rank_desc(mean_score);
            break;
        }
        case Strategy::oracle: {
            if (truth == nullptr) {
                throw std::invalid_argument("oracle strategy needs ground truth");
            }
            const ScoreMatrix scores =
                compute_scores(selection.chunks, tmpl, embedder, recognizer, config.bm25);
            for (std::size_t j = 0; j < f; ++j) {
                const std::vector<std::string>* values =
                    truth->find(doc.id, tmpl.fields[j].key);
                if (values != nullptr && !values->empty()) {
                    selection.field_rankings.push_back(
                        oracle_rank(selection.chunks, tmpl.fields[j], *values, embedder));
                } else {
                    // nothing to peek at; fall back to similarity
                    std::vector<double> column(n);
                    for (std::size_t i = 0; i < n; ++i) {
                        column[i] = scores.per_field_cos[i][j];
                    }
                    selection.field_rankings.push_back(rank_desc(column));
                }
            }
            selection.global_ranking = aggregate_rankings(selection.field_rankings, n);
            break;
        }
    }

    selection.context =
        pack_context(selection.field_rankings, selection.global_ranking, selection.chunks,
                     config.budget_tokens, config.coverage);
    return selection;
}

ExtractRunSummary run_chunk(const RunConfig& config) {
    if (config.manifest_path.empty()) {
        throw std::invalid_argument("run config needs a corpus manifest");
    }
    const std::vector<Document> corpus = load_corpus(config.manifest_path);
    const std::vector<std::string> stems = make_stems(corpus);
    const fs::path out(config.out_dir);
    fs::create_directories(out);
    write_file(out / "config.resolved.json", serialize_run_config(config));

    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const std::vector<Chunk> chunks = chunk_document(corpus[i], config.chunking);
        json doc;
        doc["doc_id"] = corpus[i].id;
        doc["chunks"] = json::array();
        for (const Chunk& chunk : chunks) doc["chunks"].push_back(chunk_to_json(chunk));
        write_file(out / "chunks" / (stems[i] + ".json"), doc.dump(2) + "\n");
    }

    ExtractRunSummary summary;
    summary.documents = corpus.size();
    summary.run_dir = config.out_dir;
    return summary;
}

ExtractRunSummary run_select(const RunConfig& config, const PipelineDeps& deps) {
    const LoadedRun run = load_run(config, *deps.embedder);
    write_run_preamble(run);
    const fs::path out(config.out_dir);

    for_each_document(run.corpus.size(), config.workers, [&](std::size_t i) {
        const DocumentSelection selection = select_for_document(
            run.corpus[i], run.tmpl, *deps.embedder, *deps.recognizer, config,
            run.has_truth ? &run.truth : nullptr, run.has_model ? &run.model : nullptr);
        write_file(out / "context" / (run.stems[i] + ".json"),
                   context_to_json(run.corpus[i].id, selection, run.tmpl).dump(2) + "\n");
    });

    ExtractRunSummary summary;
    summary.documents = run.corpus.size();
    summary.run_dir = config.out_dir;
    return summary;
}

ExtractRunSummary run_extract(const RunConfig& config, const PipelineDeps& deps) {
    if (!deps.client) throw std::invalid_argument("run_extract needs an LLM client");
    const LoadedRun run = load_run(config, *deps.embedder);
    write_run_preamble(run);
    const fs::path out(config.out_dir);

    ExtractOptions opts;
    opts.mode = config.mode;
    opts.tool_use = config.tool_use;
    opts.max_retries = config.max_retries;
    opts.model = config.model_name;
    opts.strategy_tag = to_string(config.strategy);

    LLMClient& judge_client = deps.judge_client ? *deps.judge_client : *deps.client;

    std::mutex accounting;
    std::vector<std::string> failed_docs;
    std::size_t non_null_fields = 0;

    for_each_document(run.corpus.size(), config.workers, [&](std::size_t i) {
        const Document& doc = run.corpus[i];
        const DocumentSelection selection = select_for_document(
            doc, run.tmpl, *deps.embedder, *deps.recognizer, config,
            run.has_truth ? &run.truth : nullptr, run.has_model ? &run.model : nullptr);
        write_file(out / "context" / (run.stems[i] + ".json"),
                   context_to_json(doc.id, selection, run.tmpl).dump(2) + "\n");

        ExtractionResult result;
        try {
            result = extract_with_retry(*deps.client, selection.context, run.tmpl, opts);
        } catch (const ParseError& e) {
            write_file(out / "results" / (run.stems[i] + ".json"),
                       failure_to_json(doc.id, config, e.what(), e.raw_responses).dump(2) +
                           "\n");
            std::lock_guard<std::mutex> lock(accounting);
            failed_docs.push_back(doc.id);
            return;
        } catch (const std::exception& e) {
            write_file(out / "results" / (run.stems[i] + ".json"),
                       failure_to_json(doc.id, config, e.what(), {}).dump(2) + "\n");
            std::lock_guard<std::mutex> lock(accounting);
            failed_docs.push_back(doc.id);
            return;
        }
        write_file(out / "results" / (run.stems[i] + ".json"),
                   result_to_json(doc.id, result, config).dump(2) + "\n");

        if (config.grading) {
            json grade_doc;
            try {
                const GradeReport report =
                    grade(judge_client, selection.context, run.tmpl, result);
                grade_doc = grade_report_to_json(report);
                grade_doc["doc_id"] = doc.id;
            } catch (const std::exception& e) {
                grade_doc = json{{"doc_id", doc.id}, {"error", e.what()}};
            }
            write_file(out / "grades" / (run.stems[i] + ".json"),
                       grade_doc.dump(2) + "\n");
        }

        std::lock_guard<std::mutex> lock(accounting);
        non_null_fields += count_non_null(result);
    });

    if (config.grading) write_grade_lines(out, run.tmpl);

    std::sort(failed_docs.begin(), failed_docs.end());
    const std::size_t total_fields = run.corpus.size() * run.tmpl.fields.size();

    ExtractRunSummary summary;
    summary.documents = run.corpus.size();
    summary.failures = failed_docs.size();
    summary.success_rate =
        total_fields == 0
            ? 0.0
            : static_cast<double>(non_null_fields) / static_cast<double>(total_fields);
    summary.run_dir = config.out_dir;

    json summary_doc;
    summary_doc["documents"] = summary.documents;
    summary_doc["failures"] = summary.failures;
    summary_doc["failed_docs"] = failed_docs;
    summary_doc["success_rate"] = summary.success_rate;
    summary_doc["strategy"] = to_string(config.strategy);
    summary_doc["budget_tokens"] = config.budget_tokens;
    summary_doc["client"] = config.client;
    write_file(out / "summary.json", summary_doc.dump(2) + "\n");
    return summary;
}

ExtractRunSummary run_grade(const RunConfig& config, const PipelineDeps& deps) {
    if (!deps.client) throw std::invalid_argument("run_grade needs an LLM client");
    const fs::path out(config.out_dir);
    const Template tmpl = parse_template(read_file(out / "template.resolved.json"));
    LLMClient& judge_client = deps.judge_client ? *deps.judge_client : *deps.client;

    ExtractRunSummary summary;
    summary.run_dir = config.out_dir;

    for (const fs::path& path : sorted_files(out / "results")) {
        if (path.extension() != ".json") continue;
        const json doc = json::parse(read_file(path));
        if (!doc.contains("values")) continue;  // hard failure, nothing to grade
        const std::string stem = path.stem().string();

        const json ctx_doc = json::parse(read_file(out / "context" / (stem + ".json")));
        const SelectedContext ctx = context_from_json(ctx_doc);
        ExtractionResult agent;
        agent.values = doc.at("values");

        json grade_doc;
        try {
            const GradeReport report = grade(judge_client, ctx, tmpl, agent);
            grade_doc = grade_report_to_json(report);
            grade_doc["doc_id"] = doc.at("doc_id");
        } catch (const std::exception& e) {
            grade_doc = json{{"doc_id", doc.at("doc_id")}, {"error", e.what()}};
            ++summary.failures;
        }
        write_file(out / "grades" / (stem + ".json"), grade_doc.dump(2) + "\n");
        ++summary.documents;
    }
    write_grade_lines(out, tmpl);
    return summary;
}

EvalRunSummary run_eval(const std::string& run_dir, const GroundTruth& truth) {
    const fs::path dir(run_dir);
    const RunConfig config = load_run_config((dir / "config.resolved.json").string());
    const Template tmpl = parse_template(read_file(dir / "template.resolved.json"));

    EvalRunSummary summary;
    for (const fs::path& path : sorted_files(dir / "results")) {
        if (path.extension() != ".json") continue;
        const json doc = json::parse(read_file(path));
        const std::string doc_id = doc.at("doc_id").get<std::string>();
        // hard-failed documents count as all-null extractions
        const json values = doc.contains("values") ? doc.at("values") : json::object();
        for (const FieldSpec& field : tmpl.fields) {
            const std::vector<std::string>* expected = truth.find(doc_id, field.key);
            if (expected == nullptr) {
                summary.missing.push_back(doc_id + "/" + field.key);
                continue;
            }
            const json value = values.contains(field.key) ? values.at(field.key)
                                                          : json(nullptr);
            FieldEval ev = field_f1(value, *expected, field.type);
            ev.doc_id = doc_id;
            ev.field_key = field.key;
            summary.fields.push_back(std::move(ev));
        }
    }
    if (summary.fields.empty()) throw std::runtime_error("no evaluable pairs");
    summary.aggregate = aggregate_f1(summary.fields);

    char row[160];
    std::snprintf(row, sizeof(row), "strategy=%s budget=%zu client=%s f1=%.3f",
                  to_string(config.strategy).c_str(), config.budget_tokens,
                  config.client.c_str(), summary.aggregate);
    summary.table_row = row;

    std::ostringstream lines;
    for (const FieldEval& ev : summary.fields) lines << field_eval_to_json(ev).dump() << "\n";
    write_file(dir / "eval" / "field_evals.jsonl", lines.str());

    json eval_summary;
    eval_summary["aggregate_f1"] = summary.aggregate;
    eval_summary["pairs"] = summary.fields.size();
    eval_summary["missing"] = summary.missing;
    eval_summary["strategy"] = to_string(config.strategy);
    eval_summary["budget_tokens"] = config.budget_tokens;
    eval_summary["client"] = config.client;
    eval_summary["table_row"] = summary.table_row;
    write_file(dir / "eval" / "summary.json", eval_summary.dump(2) + "\n");
    return summary;
}

TrainRunSummary run_train(const RunConfig& config, const PipelineDeps& deps,
                          const TrainConfig& train_config,
                          const SplitConfig& split_config) {
    if (config.ground_truth_path.empty()) {
        throw std::invalid_argument("training requires ground truth");
    }
    RunConfig effective = config;
    if (effective.strategy == Strategy::reranker) {
        effective.strategy = Strategy::ner_borda;  // model file not needed to train one
    }
    const LoadedRun run = load_run(effective, *deps.embedder);
    write_run_preamble(run);
    const fs::path out(config.out_dir);

    std::vector<std::string> ids;
    for (const Document& doc : run.corpus) ids.push_back(doc.id);
    const DocSplit split = split_documents(ids, split_config);

    const auto subset = [&](const std::vector<std::string>& wanted) {
        std::vector<Document> docs;
        for (const Document& doc : run.corpus) {
            if (std::find(wanted.begin(), wanted.end(), doc.id) != wanted.end()) {
                docs.push_back(doc);
            }
        }
        return docs;
    };

    TrainingSetResult train_set =
        build_training_set(subset(split.train_docs), run.tmpl, run.truth, *deps.embedder,
                           *deps.recognizer, config.chunking);
    TrainingSetResult test_set =
        build_training_set(subset(split.test_docs), run.tmpl, run.truth, *deps.embedder,
                           *deps.recognizer, config.chunking);

    TrainRunSummary summary;
    summary.warnings = train_set.warnings;
    summary.warnings.insert(summary.warnings.end(), test_set.warnings.begin(),
                            test_set.warnings.end());
    summary.train_pairs = train_set.pairs.size();
    summary.test_pairs = test_set.pairs.size();

    TrainConfig effective_train = train_config;
    effective_train.seed = train_config.seed ^ config.seed;
    const RerankerModel model = train(train_set.pairs, effective_train);

    if (!test_set.pairs.empty()) {
        std::vector<double> scores;
        std::vector<int> labels;
        std::size_t correct = 0;
        for (const LabeledPair& pair : test_set.pairs) {
            const double score = predict(model, pair.features);
            scores.push_back(score);
            labels.push_back(pair.label);
            if ((score >= 0.5) == (pair.label == 1)) ++correct;
        }
        summary.accuracy = static_cast<double>(correct) / test_set.pairs.size();
        try {
            summary.auc = rank_auc(scores, labels);
        } catch (const std::invalid_argument&) {
            summary.warnings.push_back("held-out set contains a single class; AUC omitted");
        }
    } else {
        summary.warnings.push_back("held-out set is empty");
    }

    summary.model_path = (out / "model.json").string();
    save_model(model, summary.model_path);

    json metrics;
    metrics["auc"] = summary.auc;
    metrics["accuracy"] = summary.accuracy;
    metrics["train_pairs"] = summary.train_pairs;
    metrics["test_pairs"] = summary.test_pairs;
    metrics["train_documents"] = split.train_docs;
    metrics["test_documents"] = split.test_docs;
    metrics["final_loss"] = model.final_loss;
    metrics["warnings"] = summary.warnings;
    write_file(out / "metrics.json", metrics.dump(2) + "\n");
    return summary;
}

MonitoringReport run_report(const std::string& run_dir) {
    const fs::path dir(run_dir);
    const Template tmpl = parse_template(read_file(dir / "template.resolved.json"));

    std::map<std::string, std::vector<EntityLabel>> labels_by_field;
    for (const FieldSpec& field : tmpl.fields) {
        labels_by_field[field.key] = field.ner_labels;
    }

    std::vector<RunRecord> records;
    for (const fs::path& path : sorted_files(dir / "results")) {
        if (path.extension() != ".json") continue;
        const json doc = json::parse(read_file(path));
        const std::string doc_id = doc.at("doc_id").get<std::string>();
        const json values = doc.contains("values") ? doc.at("values") : json::object();

        json grades = json::object();
        const fs::path grade_path = dir / "grades" / path.filename();
        if (fs::exists(grade_path)) {
            const json grade_doc = json::parse(read_file(grade_path));
            if (grade_doc.contains("fields")) grades = grade_doc.at("fields");
        }

        for (const FieldSpec& field : tmpl.fields) {
            RunRecord record;
            record.doc_id = doc_id;
            record.field_key = field.key;
            record.non_null =
                values.contains(field.key) && !values.at(field.key).is_null();
            record.labels = labels_by_field.at(field.key);
            if (grades.contains(field.key)) {
                record.judge_score = grades.at(field.key).at("score").get<double>();
            }
            records.push_back(std::move(record));
        }
    }

    const MonitoringReport report = monitoring_report(records);
    write_file(dir / "report.json", report_to_json(report) + "\n");
    write_file(dir / "report.csv", report_to_csv(report));
    return report;
}

CuadConvertSummary convert_cuad(const std::string& cuad_json_path,
                                const std::string& out_dir,
                                const CuadConvertOptions& options) {
    static const std::vector<std::string> kDefaultCategories = {
        "Document Name",   "Parties",        "Agreement Date",
        "Effective Date",  "Expiration Date", "Notice Period To Terminate Renewal",
        "Governing Law"};
    const std::vector<std::string>& categories =
        options.categories.empty() ? kDefaultCategories : options.categories;

    const json root = json::parse(read_file(cuad_json_path), nullptr, false);
    if (root.is_discarded() || !root.contains("data") || !root.at("data").is_array()) {
        throw std::runtime_error("unrecognized CUAD file: expected a SQuAD-style "
                                 "{\"data\": [...]} document");
    }

    const auto fold = [](std::string s) {
        for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        return s;
    };
    std::map<std::string, std::string> wanted;  // folded -> canonical
    for (const std::string& category : categories) wanted[fold(category)] = category;

    GroundTruth truth;
    std::vector<std::pair<std::string, std::string>> corpus_texts;  // id, text

    for (const json& entry : root.at("data")) {
        const std::string title = entry.value("title", "");
        if (title.empty()) continue;
        std::string text;
        auto& doc_truth = truth.docs[title];
        for (const std::string& category : categories) doc_truth[category];

        for (const json& paragraph : entry.value("paragraphs", json::array())) {
            if (paragraph.contains("context")) {
                if (!text.empty()) text += "\n";
                text += paragraph.at("context").get<std::string>();
            }
            for (const json& qa : paragraph.value("qas", json::array())) {
                const std::string id = qa.value("id", "");
                const std::size_t sep = id.rfind("__");
                if (sep == std::string::npos) continue;
                const auto hit = wanted.find(fold(id.substr(sep + 2)));
                if (hit == wanted.end()) continue;
                auto& values = doc_truth[hit->second];
                for (const json& answer : qa.value("answers", json::array())) {
                    const std::string value = answer.value("text", "");
                    if (value.empty()) continue;
                    if (std::find(values.begin(), values.end(), value) == values.end()) {
                        values.push_back(value);
                    }
                }
            }
        }
        corpus_texts.emplace_back(title, std::move(text));
    }

    const fs::path out(out_dir);
    fs::create_directories(out);

    CuadConvertSummary summary;
    summary.documents = corpus_texts.size();
    summary.truth_path = (out / "ground_truth.json").string();
    write_file(summary.truth_path, serialize_ground_truth(truth) + "\n");

    // a template covering the chosen categories, with sensible types
    Template tmpl;
    for (const std::string& category : categories) {
        FieldSpec field;
        field.key = category;
        const std::string folded = fold(category);
        if (folded == "parties") {
            field.prompt = "The names of all parties that sign the contract.";
            field.type = FieldType::array;
            field.ner_labels = {EntityLabel::PERSON, EntityLabel::ORG};
        } else if (folded.find("date") != std::string::npos) {
            field.prompt = "The " + fold(category) + " of the contract.";
            field.type = FieldType::date;
            field.ner_labels = {EntityLabel::DATE};
        } else if (folded == "governing law") {
            field.prompt = "The jurisdiction whose law governs the contract.";
            field.type = FieldType::string;
            field.ner_labels = {EntityLabel::GPE, EntityLabel::LAW};
        } else if (folded == "document name") {
            field.prompt = "The name or title of the contract document.";
            field.type = FieldType::string;
        } else {
            field.prompt = "The " + fold(category) + " stated in the contract.";
            field.type = FieldType::string;
        }
        tmpl.fields.push_back(std::move(field));
    }
    summary.template_path = (out / "template.json").string();
    write_file(summary.template_path, serialize_template(tmpl) + "\n");

    if (options.emit_corpus) {
        json manifest = json::array();
        std::set<std::string> used;
        for (const auto& [id, text] : corpus_texts) {
            std::string stem = sanitize_doc_id(id);
            std::string candidate = stem;
            std::size_t bump = 2;
            while (!used.insert(candidate).second) {
                candidate = stem + "-" + std::to_string(bump++);
            }
            const std::string rel = "corpus/" + candidate + ".txt";
            write_file(out / rel, text);
            manifest.push_back(json{{"id", id},
                                    {"path", rel},
                                    {"format", "plain"},
                                    {"conversion_tag", "cuad-v1"}});
        }
        summary.manifest_path = (out / "manifest.json").string();
        write_file(summary.manifest_path, manifest.dump(2) + "\n");
    }
    return summary;
}

}  // namespace metaforge
