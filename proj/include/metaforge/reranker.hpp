#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "metaforge/corpus.hpp"
#include "metaforge/embed.hpp"
#include "metaforge/eval.hpp"
#include "metaforge/ner.hpp"
#include "metaforge/template.hpp"

namespace metaforge {

// Scalar features, in order, ahead of the field and chunk embedding blocks:
// per_field_cos, total_cos, bm25, per_field_ner, total_ner,
// chunk_position_fraction, chunk_length_fraction,
// frac_numeric, frac_titlecase, frac_allcaps, frac_punct.
inline constexpr std::size_t kScalarFeatureCount = 11;

std::vector<std::string> feature_names(std::size_t embedding_dim);

struct FeatureVector {
    std::vector<double> values;
};

// features for every (chunk, field) pair of one document, [chunk][field]
std::vector<std::vector<FeatureVector>> compute_features(
    const std::vector<Chunk>& chunks,
    const Template& tmpl,
    const Embedder& embedder,
    const Recognizer& recognizer,
    const ChunkingConfig& chunking = {});

struct LabeledPair {
    std::string doc_id;
    std::size_t chunk_index = 0;
    std::string field_key;
    FeatureVector features;
    int label = 0;
};

nlohmann::json labeled_pair_to_json(const LabeledPair& pair);
LabeledPair labeled_pair_from_json(const nlohmann::json& j);

struct TrainingSetResult {
    std::vector<LabeledPair> pairs;
    std::vector<std::string> warnings;
};

// Cartesian product of chunks and fields; label 1 when a normalized truth
// value occurs inside the normalized chunk text. Documents without ground
// truth are skipped with a warning.
TrainingSetResult build_training_set(const std::vector<Document>& corpus,
                                     const Template& tmpl,
                                     const GroundTruth& truth,
                                     const Embedder& embedder,
                                     const Recognizer& recognizer,
                                     const ChunkingConfig& chunking = {});

struct RerankerModel {
    std::size_t input_dim = 0;
    // row-major weight matrices
    std::vector<double> w1, b1;  // 64 x input
    std::vector<double> w2, b2;  // 16 x 64
    std::vector<double> w3, b3;  // 1 x 16
    std::vector<double> feature_mean;  // scalar block statistics
    std::vector<double> feature_var;
    std::uint64_t seed = 0;
    double final_loss = 0.0;
    std::vector<std::string> feature_order;
};

inline constexpr std::size_t kHidden1 = 64;
inline constexpr std::size_t kHidden2 = 16;

struct TrainConfig {
    double learning_rate = 0.05;
    std::size_t epochs = 30;
    std::size_t batch_size = 32;
    std::uint64_t seed = 17;
    // weight applied to positive samples; computed as negatives/positives
    // (capped at 50) when unset
    std::optional<double> class_weight;
    double class_weight_cap = 50.0;
};

RerankerModel train(const std::vector<LabeledPair>& pairs, const TrainConfig& config = {});

double predict(const RerankerModel& model, const FeatureVector& features);

// Max relative error between analytic and central-difference gradients,
// |a - n| / max(|a| + |n|, 1e-6), over every parameter.
double gradient_check(const RerankerModel& model,
                      const std::vector<LabeledPair>& pairs,
                      double epsilon,
                      double positive_weight = 1.0);

// Mann-Whitney AUC with tie correction. Needs both classes present.
double rank_auc(const std::vector<double>& scores, const std::vector<int>& labels);

void save_model(const RerankerModel& model, const std::string& path);
RerankerModel load_model(const std::string& path);

struct SplitConfig {
    double train_fraction = 0.10;
    double test_fraction = 0.05;
    std::uint64_t seed = 1;
};

struct DocSplit {
    std::vector<std::string> train_docs;
    std::vector<std::string> test_docs;
};

// seeded shuffle, then disjoint train/test prefixes (at least one doc each)
DocSplit split_documents(const std::vector<std::string>& doc_ids,
                         const SplitConfig& config = {});

}  // namespace metaforge
