#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include "metaforge/corpus.hpp"
#include "metaforge/embed.hpp"
#include "metaforge/ner.hpp"
#include "metaforge/template.hpp"

namespace metaforge {

/// Chunk-by-field score grid for one document. Row = chunk, column = field.
struct ScoreMatrix {
    std::vector<std::vector<double>> per_field_cos;
    std::vector<std::vector<double>> per_field_ner;
    std::vector<std::vector<double>> bm25;
    std::vector<double> total_cos;
    std::vector<double> total_ner;

    std::size_t num_chunks() const { return total_cos.size(); }
    std::size_t num_fields() const {
        return per_field_cos.empty() ? 0 : per_field_cos.front().size();
    }
};

struct BordaWeights {
    double pf_cos = 1.0;
    double pf_ner = 1.0;
    double total_cos = 1.0;
    double total_ner = 1.0;
};

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

/// Document-frequency table over one document's chunks; term frequency and
/// length statistics come from the shared tokenizer, case-folded.
class Bm25Stats {
public:
    explicit Bm25Stats(const std::vector<Chunk>& chunks);

    std::size_t num_chunks() const { return num_chunks_; }
    double avg_length() const { return avg_length_; }
    std::size_t doc_frequency(const std::string& folded_term) const;

private:
    std::size_t num_chunks_ = 0;
    double avg_length_ = 0.0;
    std::unordered_map<std::string, std::size_t> df_;
};

/// Okapi BM25 with idf = ln(1 + (N - df + 0.5)/(df + 0.5)), summed over the
/// distinct query terms.
double bm25_score(const std::vector<std::string>& query_tokens, const Chunk& chunk,
                  const Bm25Stats& stats, const Bm25Params& params = {});

/// "key: prompt" string embedded for per-field scoring and used as the BM25
/// query.
std::string field_query_text(const FieldSpec& field);

ScoreMatrix compute_scores(const std::vector<Chunk>& chunks, const Template& tmpl,
                           const Embedder& embedder, const Recognizer& recognizer,
                           const Bm25Params& bm25_params = {});

/// Weighted Borda aggregation of the four score families for one field.
/// Each family ranks chunks descending; a chunk at 0-based position p earns
/// N-1-p points, tied scores share the average of their positions' points.
/// Final order sorts the weighted point sum descending, ties by chunk index.
/// Weights must be nonnegative with at least one positive.
std::vector<std::size_t> borda_rank(const ScoreMatrix& scores, const BordaWeights& weights,
                                    std::size_t field_index);

struct SelectedContext {
    std::vector<Chunk> chunks;  // document order
    std::size_t total_tokens = 0;
    std::vector<double> per_field_coverage;
    bool budget_warning = false;  // set when nothing fit the budget
};

struct CoverageParams {
    double coverage_fraction = 0.5;
    std::size_t top_m = 5;
};

/// Two-phase greedy packing. Phase 1 round-robins over fields, each taking its
/// highest-ranked unselected chunk from its top-m list that still fits, until
/// every field holds ceil(coverage_fraction * min(top_m, N)) of its top-m
/// chunks. Phase 2 walks the global ranking admitting whatever fits. Coverage
/// for a field = selected fraction of its top-min(top_m, N) chunks.
SelectedContext pack_context(const std::vector<std::vector<std::size_t>>& field_rankings,
                             const std::vector<std::size_t>& global_ranking,
                             const std::vector<Chunk>& chunks, std::size_t budget_tokens,
                             const CoverageParams& coverage = {});

/// Ranking with the ground truth appended to the field prompt; the selection
/// quality upper bound used by the "oracle" strategy.
std::vector<std::size_t> oracle_rank(const std::vector<Chunk>& chunks,
                                     const FieldSpec& field,
                                     const std::vector<std::string>& truth_values,
                                     const Embedder& embedder);

}  // namespace metaforge
