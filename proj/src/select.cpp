#include "metaforge/select.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>
#include <unordered_set>

namespace metaforge {

namespace {

std::string fold(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::vector<std::string> folded_tokens(std::string_view text) {
    std::vector<std::string> toks = tokenize(text);
    for (std::string& t : toks) t = fold(std::move(t));
    return toks;
}

// Positions sharing a score all receive the average of their points.
std::vector<double> borda_points(const std::vector<double>& scores) {
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&scores](std::size_t a, std::size_t b) {
        return scores[a] > scores[b];
    });

    std::vector<double> points(n, 0.0);
    std::size_t pos = 0;
    while (pos < n) {
        std::size_t group_end = pos;
        while (group_end + 1 < n && scores[order[group_end + 1]] == scores[order[pos]]) {
            ++group_end;
        }
        // points for position p are n-1-p; average over the tied block
        const double first = static_cast<double>(n - 1 - pos);
        const double last = static_cast<double>(n - 1 - group_end);
        const double avg = (first + last) / 2.0;
        for (std::size_t i = pos; i <= group_end; ++i) points[order[i]] = avg;
        pos = group_end + 1;
    }
    return points;
}

void check_ranking(const std::vector<std::size_t>& ranking, std::size_t n,
                   const char* what) {
    if (ranking.size() != n) {
        throw std::invalid_argument(std::string(what) + " must rank every chunk");
    }
    std::vector<bool> seen(n, false);
    for (std::size_t idx : ranking) {
        if (idx >= n || seen[idx]) {
            throw std::invalid_argument(std::string(what) + " is not a permutation");
        }
        seen[idx] = true;
    }
}

std::vector<std::size_t> rank_by_score(const std::vector<double>& scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&scores](std::size_t a, std::size_t b) {
        return scores[a] > scores[b];
    });
    return order;
}

}  // namespace

Bm25Stats::Bm25Stats(const std::vector<Chunk>& chunks) : num_chunks_(chunks.size()) {
    std::size_t total_len = 0;
    for (const Chunk& chunk : chunks) {
        total_len += chunk.token_count;
        std::unordered_set<std::string> distinct;
        for (std::string& tok : folded_tokens(chunk.text)) {
            distinct.insert(std::move(tok));
        }
        for (const std::string& tok : distinct) ++df_[tok];
    }
    avg_length_ = chunks.empty()
                      ? 0.0
                      : static_cast<double>(total_len) / static_cast<double>(chunks.size());
}

std::size_t Bm25Stats::doc_frequency(const std::string& folded_term) const {
    const auto it = df_.find(folded_term);
    return it == df_.end() ? 0 : it->second;
}

double bm25_score(const std::vector<std::string>& query_tokens, const Chunk& chunk,
                  const Bm25Stats& stats, const Bm25Params& params) {
    std::unordered_map<std::string, std::size_t> tf;
    for (std::string& tok : folded_tokens(chunk.text)) ++tf[std::move(tok)];

    const double n = static_cast<double>(stats.num_chunks());
    const double len = static_cast<double>(chunk.token_count);
    const double len_norm =
        stats.avg_length() > 0.0
            ? 1.0 - params.b + params.b * len / stats.avg_length()
            : 1.0;

    std::set<std::string> distinct;
    for (const std::string& tok : query_tokens) distinct.insert(fold(tok));

    double score = 0.0;
    for (const std::string& term : distinct) {
        const auto it = tf.find(term);
        if (it == tf.end()) continue;
        const double f = static_cast<double>(it->second);
        const double df = static_cast<double>(stats.doc_frequency(term));
        const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
        score += idf * f * (params.k1 + 1.0) / (f + params.k1 * len_norm);
    }
    return score;
}

std::string field_query_text(const FieldSpec& field) {
    return field.key + ": " + field.prompt;
}

ScoreMatrix compute_scores(const std::vector<Chunk>& chunks, const Template& tmpl,
                           const Embedder& embedder, const Recognizer& recognizer,
                           const Bm25Params& bm25_params) {
    const std::size_t n = chunks.size();
    const std::size_t f = tmpl.fields.size();

    // One embedding batch: F field queries, the aggregate query, N chunks.
    std::vector<std::string> texts;
    texts.reserve(f + 1 + n);
    std::string aggregate;
    for (const FieldSpec& field : tmpl.fields) {
        texts.push_back(field_query_text(field));
        if (!aggregate.empty()) aggregate += "\n";
        aggregate += texts.back();
    }
    texts.push_back(aggregate);
    for (const Chunk& chunk : chunks) texts.push_back(chunk.text);
    const std::vector<EmbeddingVector> vecs = embedder.embed(texts);

    std::vector<std::set<EntityLabel>> field_labels(f);
    std::set<EntityLabel> all_labels;
    for (std::size_t j = 0; j < f; ++j) {
        field_labels[j] = {tmpl.fields[j].ner_labels.begin(),
                           tmpl.fields[j].ner_labels.end()};
        all_labels.insert(field_labels[j].begin(), field_labels[j].end());
    }

    const Bm25Stats stats(chunks);
    std::vector<std::vector<std::string>> queries(f);
    for (std::size_t j = 0; j < f; ++j) queries[j] = tokenize(texts[j]);

    ScoreMatrix m;
    m.per_field_cos.assign(n, std::vector<double>(f, 0.0));
    m.per_field_ner.assign(n, std::vector<double>(f, 0.0));
    m.bm25.assign(n, std::vector<double>(f, 0.0));
    m.total_cos.assign(n, 0.0);
    m.total_ner.assign(n, 0.0);

    for (std::size_t i = 0; i < n; ++i) {
        const EmbeddingVector& chunk_vec = vecs[f + 1 + i];
        m.total_cos[i] = cosine(vecs[f], chunk_vec);

        // Recognize once per chunk; count per label set.
        const auto spans = recognizer.recognize(chunks[i].text);
        const double denom =
            static_cast<double>(std::max<std::size_t>(1, chunks[i].token_count));
        std::size_t total_hits = 0;
        for (const EntitySpan& span : spans) {
            if (all_labels.count(span.label)) ++total_hits;
        }
        m.total_ner[i] = static_cast<double>(total_hits) / denom;

        for (std::size_t j = 0; j < f; ++j) {
            m.per_field_cos[i][j] = cosine(vecs[j], chunk_vec);
            std::size_t hits = 0;
            for (const EntitySpan& span : spans) {
                if (field_labels[j].count(span.label)) ++hits;
            }
            m.per_field_ner[i][j] = static_cast<double>(hits) / denom;
            m.bm25[i][j] = bm25_score(queries[j], chunks[i], stats, bm25_params);
        }
    }
    return m;
}

std::vector<std::size_t> borda_rank(const ScoreMatrix& scores, const BordaWeights& weights,
                                    std::size_t field_index) {
    if (weights.pf_cos < 0 || weights.pf_ner < 0 || weights.total_cos < 0 ||
        weights.total_ner < 0) {
        throw std::invalid_argument("Borda weights must be nonnegative");
    }
    if (weights.pf_cos + weights.pf_ner + weights.total_cos + weights.total_ner <= 0.0) {
        throw std::invalid_argument("at least one Borda weight must be positive");
    }
    const std::size_t n = scores.num_chunks();
    if (field_index >= scores.num_fields()) {
        throw std::invalid_argument("field index out of range");
    }

    std::vector<double> pf_cos(n), pf_ner(n);
    for (std::size_t i = 0; i < n; ++i) {
        pf_cos[i] = scores.per_field_cos[i][field_index];
        pf_ner[i] = scores.per_field_ner[i][field_index];
    }

    std::vector<double> key(n, 0.0);
    const auto accumulate = [&key](const std::vector<double>& family, double w) {
        if (w <= 0.0) return;
        const std::vector<double> pts = borda_points(family);
        for (std::size_t i = 0; i < pts.size(); ++i) key[i] += w * pts[i];
    };
    accumulate(pf_cos, weights.pf_cos);
    accumulate(pf_ner, weights.pf_ner);
    accumulate(scores.total_cos, weights.total_cos);
    accumulate(scores.total_ner, weights.total_ner);

    return rank_by_score(key);
}

SelectedContext pack_context(const std::vector<std::vector<std::size_t>>& field_rankings,
                             const std::vector<std::size_t>& global_ranking,
                             const std::vector<Chunk>& chunks, std::size_t budget_tokens,
                             const CoverageParams& coverage) {
    if (budget_tokens == 0) throw std::invalid_argument("budget must be positive");
    if (coverage.coverage_fraction <= 0.0 || coverage.coverage_fraction > 1.0) {
        throw std::invalid_argument("coverage_fraction must be in (0, 1]");
    }
    if (coverage.top_m == 0) throw std::invalid_argument("top_m must be positive");

    const std::size_t n = chunks.size();
    check_ranking(global_ranking, n, "global ranking");
    for (const auto& r : field_rankings) check_ranking(r, n, "field ranking");

    const std::size_t num_fields = field_rankings.size();
    SelectedContext out;
    out.per_field_coverage.assign(num_fields, 1.0);
    if (n == 0) return out;

    const std::size_t m = std::min(coverage.top_m, n);
    const std::size_t need = static_cast<std::size_t>(
        std::ceil(coverage.coverage_fraction * static_cast<double>(m)));

    std::vector<bool> selected(n, false);
    std::size_t used = 0;
    std::vector<std::size_t> have(num_fields, 0);  // selected chunks within top-m

    const auto admit = [&](std::size_t idx) {
        selected[idx] = true;
        used += chunks[idx].token_count;
        for (std::size_t f = 0; f < num_fields; ++f) {
            const auto& rank = field_rankings[f];
            for (std::size_t p = 0; p < m; ++p) {
                if (rank[p] == idx) {
                    ++have[f];
                    break;
                }
            }
        }
    };

    // Phase 1: coverage round-robin. Each unsatisfied field takes its best
    // unselected top-m chunk that still fits.
    std::vector<bool> stalled(num_fields, false);
    while (true) {
        bool progressed = false;
        bool any_unsatisfied = false;
        for (std::size_t f = 0; f < num_fields; ++f) {
            if (have[f] >= need || stalled[f]) continue;
            any_unsatisfied = true;
            bool took = false;
            for (std::size_t p = 0; p < m; ++p) {
                const std::size_t idx = field_rankings[f][p];
                if (selected[idx]) continue;
                if (used + chunks[idx].token_count > budget_tokens) continue;
                admit(idx);
                took = true;
                progressed = true;
                break;
            }
            if (!took) stalled[f] = true;
        }
        if (!any_unsatisfied || !progressed) break;
    }

    // Phase 2: spend what remains following the global ranking.
    for (std::size_t idx : global_ranking) {
        if (selected[idx]) continue;
        if (used + chunks[idx].token_count > budget_tokens) continue;
        admit(idx);
    }

    for (std::size_t idx = 0; idx < n; ++idx) {
        if (selected[idx]) out.chunks.push_back(chunks[idx]);
    }
    std::sort(out.chunks.begin(), out.chunks.end(),
              [](const Chunk& a, const Chunk& b) { return a.index < b.index; });
    out.total_tokens = used;
    for (std::size_t f = 0; f < num_fields; ++f) {
        out.per_field_coverage[f] =
            static_cast<double>(have[f]) / static_cast<double>(m);
    }
    out.budget_warning = out.chunks.empty();
    return out;
}

std::vector<std::size_t> oracle_rank(const std::vector<Chunk>& chunks,
                                     const FieldSpec& field,
                                     const std::vector<std::string>& truth_values,
                                     const Embedder& embedder) {
    if (truth_values.empty()) {
        throw std::invalid_argument("oracle ranking requires ground-truth values");
    }
    std::string query = field_query_text(field);
    for (const std::string& value : truth_values) {
        query += " ";
        query += value;
    }

    std::vector<std::string> texts;
    texts.reserve(chunks.size() + 1);
    texts.push_back(query);
    for (const Chunk& chunk : chunks) texts.push_back(chunk.text);
    const std::vector<EmbeddingVector> vecs = embedder.embed(texts);

    std::vector<double> scores(chunks.size());
    for (std::size_t i = 0; i < chunks.size(); ++i) {
        scores[i] = cosine(vecs[0], vecs[i + 1]);
    }
    return rank_by_score(scores);
}

}  // namespace metaforge
