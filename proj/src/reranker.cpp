#include "metaforge/reranker.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "metaforge/select.hpp"

namespace metaforge {

namespace {

using nlohmann::json;

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }
bool is_lower(char c) { return c >= 'a' && c <= 'z'; }

struct TokenStats {
    double numeric = 0.0;
    double titlecase = 0.0;
    double allcaps = 0.0;
    double punct = 0.0;
};

TokenStats orthographic_stats(const std::string& text) {
    const std::vector<CharSpan> spans = token_spans(text);
    TokenStats stats;
    if (spans.empty()) return stats;
    std::size_t numeric = 0, title = 0, caps = 0, punct = 0;
    for (const CharSpan& span : spans) {
        const std::string_view tok(text.data() + span.start, span.end - span.start);
        bool any_digit = false, all_numeric = true;
        for (char c : tok) {
            if (is_digit(c)) {
                any_digit = true;
            } else if (c != '.' && c != ',') {
                all_numeric = false;
            }
        }
        if (any_digit && all_numeric) {
            ++numeric;
            continue;
        }
        if (tok.size() == 1 && !std::isalnum(static_cast<unsigned char>(tok[0])) &&
            static_cast<unsigned char>(tok[0]) < 0x80) {
            ++punct;
            continue;
        }
        if (tok.size() >= 2 && is_upper(tok[0])) {
            bool rest_upper = true, rest_lower = true;
            for (std::size_t i = 1; i < tok.size(); ++i) {
                if (!is_upper(tok[i])) rest_upper = false;
                if (!is_lower(tok[i])) rest_lower = false;
            }
            if (rest_upper) {
                ++caps;
                continue;
            }
            if (rest_lower) ++title;
        }
    }
    const double denom = static_cast<double>(spans.size());
    stats.numeric = numeric / denom;
    stats.titlecase = title / denom;
    stats.allcaps = caps / denom;
    stats.punct = punct / denom;
    return stats;
}

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

void init_layer(std::vector<double>& w, std::size_t rows, std::size_t cols,
                std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    w.resize(rows * cols);
    for (double& v : w) v = (2.0 * uniform01(rng) - 1.0) * limit;
}

struct Forward {
    std::vector<double> x;   // standardized input
    std::vector<double> a1;  // pre-activation, hidden 1
    std::vector<double> z1;
    std::vector<double> a2;  // pre-activation, hidden 2
    std::vector<double> z2;
    double logit = 0.0;
};

std::vector<double> standardize(const RerankerModel& model, const std::vector<double>& raw) {
    if (raw.size() != model.input_dim) {
        throw std::invalid_argument("feature dimension mismatch: expected " +
                                    std::to_string(model.input_dim) + ", got " +
                                    std::to_string(raw.size()));
    }
    std::vector<double> x = raw;
    const std::size_t prefix = std::min(model.feature_mean.size(), x.size());
    for (std::size_t i = 0; i < prefix; ++i) {
        x[i] = (x[i] - model.feature_mean[i]) / std::sqrt(model.feature_var[i] + 1e-8);
    }
    return x;
}

Forward forward_pass(const RerankerModel& model, const std::vector<double>& raw) {
    Forward f;
    f.x = standardize(model, raw);
    f.a1.assign(kHidden1, 0.0);
    f.z1.assign(kHidden1, 0.0);
    for (std::size_t i = 0; i < kHidden1; ++i) {
        double a = model.b1[i];
        const double* row = model.w1.data() + i * model.input_dim;
        for (std::size_t j = 0; j < model.input_dim; ++j) a += row[j] * f.x[j];
        f.a1[i] = a;
        f.z1[i] = a > 0.0 ? a : 0.0;
    }
    f.a2.assign(kHidden2, 0.0);
    f.z2.assign(kHidden2, 0.0);
    for (std::size_t i = 0; i < kHidden2; ++i) {
        double a = model.b2[i];
        const double* row = model.w2.data() + i * kHidden1;
        for (std::size_t j = 0; j < kHidden1; ++j) a += row[j] * f.z1[j];
        f.a2[i] = a;
        f.z2[i] = a > 0.0 ? a : 0.0;
    }
    double logit = model.b3[0];
    for (std::size_t j = 0; j < kHidden2; ++j) logit += model.w3[j] * f.z2[j];
    f.logit = logit;
    return f;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// numerically stable weighted BCE on the logit
double sample_loss(double logit, int label, double weight) {
    const double softplus =
        logit > 30.0 ? logit : (logit < -30.0 ? std::exp(logit) : std::log1p(std::exp(logit)));
    return weight * (softplus - static_cast<double>(label) * logit);
}

struct Gradients {
    std::vector<double> w1, b1, w2, b2, w3, b3;

    explicit Gradients(const RerankerModel& model)
        : w1(model.w1.size(), 0.0),
          b1(model.b1.size(), 0.0),
          w2(model.w2.size(), 0.0),
          b2(model.b2.size(), 0.0),
          w3(model.w3.size(), 0.0),
          b3(model.b3.size(), 0.0) {}
};

void accumulate_sample(const RerankerModel& model, const Forward& f, int label,
                       double weight, Gradients& grads) {
    const double dlogit = weight * (sigmoid(f.logit) - static_cast<double>(label));
    grads.b3[0] += dlogit;
    std::vector<double> dz2(kHidden2);
    for (std::size_t j = 0; j < kHidden2; ++j) {
        grads.w3[j] += dlogit * f.z2[j];
        dz2[j] = f.a2[j] > 0.0 ? dlogit * model.w3[j] : 0.0;
    }
    std::vector<double> dz1(kHidden1, 0.0);
    for (std::size_t i = 0; i < kHidden2; ++i) {
        if (dz2[i] == 0.0) continue;
        grads.b2[i] += dz2[i];
        double* wrow = grads.w2.data() + i * kHidden1;
        const double* mrow = model.w2.data() + i * kHidden1;
        for (std::size_t j = 0; j < kHidden1; ++j) {
            wrow[j] += dz2[i] * f.z1[j];
            dz1[j] += dz2[i] * mrow[j];
        }
    }
    for (std::size_t i = 0; i < kHidden1; ++i) {
        if (f.a1[i] <= 0.0 || dz1[i] == 0.0) continue;
        grads.b1[i] += dz1[i];
        double* wrow = grads.w1.data() + i * model.input_dim;
        for (std::size_t j = 0; j < model.input_dim; ++j) wrow[j] += dz1[i] * f.x[j];
    }
}

double pair_weight(const LabeledPair& pair, double positive_weight) {
    return pair.label == 1 ? positive_weight : 1.0;
}

double mean_loss(const RerankerModel& model, const std::vector<LabeledPair>& pairs,
                 double positive_weight) {
    double total = 0.0;
    for (const LabeledPair& pair : pairs) {
        const Forward f = forward_pass(model, pair.features.values);
        total += sample_loss(f.logit, pair.label, pair_weight(pair, positive_weight));
    }
    return total / static_cast<double>(pairs.size());
}

Gradients mean_gradients(const RerankerModel& model, const std::vector<LabeledPair>& pairs,
                         double positive_weight) {
    Gradients grads(model);
    for (const LabeledPair& pair : pairs) {
        const Forward f = forward_pass(model, pair.features.values);
        accumulate_sample(model, f, pair.label, pair_weight(pair, positive_weight), grads);
    }
    const double inv = 1.0 / static_cast<double>(pairs.size());
    for (auto* block : {&grads.w1, &grads.b1, &grads.w2, &grads.b2, &grads.w3, &grads.b3}) {
        for (double& v : *block) v *= inv;
    }
    return grads;
}

std::vector<double*> parameter_view(RerankerModel& model) {
    std::vector<double*> params;
    for (auto* block : {&model.w1, &model.b1, &model.w2, &model.b2, &model.w3, &model.b3}) {
        for (double& v : *block) params.push_back(&v);
    }
    return params;
}

std::vector<double> flatten_gradients(const Gradients& grads) {
    std::vector<double> flat;
    for (const auto* block :
         {&grads.w1, &grads.b1, &grads.w2, &grads.b2, &grads.w3, &grads.b3}) {
        flat.insert(flat.end(), block->begin(), block->end());
    }
    return flat;
}

RerankerModel init_model(std::size_t input_dim, std::uint64_t seed) {
    RerankerModel model;
    model.input_dim = input_dim;
    model.seed = seed;
    std::mt19937_64 rng(seed);
    init_layer(model.w1, kHidden1, input_dim, rng);
    // small positive biases keep units off the ReLU kink for degenerate inputs
    model.b1.assign(kHidden1, 0.01);
    init_layer(model.w2, kHidden2, kHidden1, rng);
    model.b2.assign(kHidden2, 0.01);
    init_layer(model.w3, 1, kHidden2, rng);
    model.b3.assign(1, 0.0);
    model.feature_mean.assign(std::min<std::size_t>(kScalarFeatureCount, input_dim), 0.0);
    model.feature_var.assign(model.feature_mean.size(), 1.0);
    return model;
}

}  // namespace

std::vector<std::string> feature_names(std::size_t embedding_dim) {
    std::vector<std::string> names = {
        "per_field_cos",  "total_cos",      "bm25",
        "per_field_ner",  "total_ner",      "chunk_position_fraction",
        "chunk_length_fraction", "frac_numeric", "frac_titlecase",
        "frac_allcaps",   "frac_punct"};
    for (std::size_t i = 0; i < embedding_dim; ++i) {
        names.push_back("field_emb_" + std::to_string(i));
    }
    for (std::size_t i = 0; i < embedding_dim; ++i) {
        names.push_back("chunk_emb_" + std::to_string(i));
    }
    return names;
}

std::vector<std::vector<FeatureVector>> compute_features(
    const std::vector<Chunk>& chunks, const Template& tmpl, const Embedder& embedder,
    const Recognizer& recognizer, const ChunkingConfig& chunking) {
    const std::size_t n = chunks.size();
    const std::size_t f = tmpl.fields.size();
    if (n == 0) return {};
    if (chunking.chunk_tokens == 0) {
        throw std::invalid_argument("chunk_tokens must be positive");
    }

    const ScoreMatrix scores = compute_scores(chunks, tmpl, embedder, recognizer);

    std::vector<std::string> texts;
    texts.reserve(f + n);
    for (const FieldSpec& field : tmpl.fields) texts.push_back(field_query_text(field));
    for (const Chunk& chunk : chunks) texts.push_back(chunk.text);
    const std::vector<EmbeddingVector> vecs = embedder.embed(texts);
    const std::size_t dim = embedder.dimension();

    std::vector<std::vector<FeatureVector>> out(n, std::vector<FeatureVector>(f));
    for (std::size_t i = 0; i < n; ++i) {
        const TokenStats stats = orthographic_stats(chunks[i].text);
        const double position =
            n > 1 ? static_cast<double>(chunks[i].index) / static_cast<double>(n - 1) : 0.0;
        const double length = static_cast<double>(chunks[i].token_count) /
                              static_cast<double>(chunking.chunk_tokens);
        for (std::size_t j = 0; j < f; ++j) {
            std::vector<double>& v = out[i][j].values;
            v.reserve(kScalarFeatureCount + 2 * dim);
            v.push_back(scores.per_field_cos[i][j]);
            v.push_back(scores.total_cos[i]);
            v.push_back(scores.bm25[i][j]);
            v.push_back(scores.per_field_ner[i][j]);
            v.push_back(scores.total_ner[i]);
            v.push_back(position);
            v.push_back(length);
            v.push_back(stats.numeric);
            v.push_back(stats.titlecase);
            v.push_back(stats.allcaps);
            v.push_back(stats.punct);
            v.insert(v.end(), vecs[j].values.begin(), vecs[j].values.end());
            v.insert(v.end(), vecs[f + i].values.begin(), vecs[f + i].values.end());
        }
    }
    return out;
}

nlohmann::json labeled_pair_to_json(const LabeledPair& pair) {
    return json{{"doc_id", pair.doc_id},
                {"chunk", pair.chunk_index},
                {"field", pair.field_key},
                {"label", pair.label},
                {"features", pair.features.values}};
}

LabeledPair labeled_pair_from_json(const nlohmann::json& j) {
    LabeledPair pair;
    pair.doc_id = j.at("doc_id").get<std::string>();
    pair.chunk_index = j.at("chunk").get<std::size_t>();
    pair.field_key = j.at("field").get<std::string>();
    pair.label = j.at("label").get<int>();
    pair.features.values = j.at("features").get<std::vector<double>>();
    if (pair.label != 0 && pair.label != 1) {
        throw std::runtime_error("labeled pair label must be 0 or 1");
    }
    return pair;
}

TrainingSetResult build_training_set(const std::vector<Document>& corpus,
                                     const Template& tmpl, const GroundTruth& truth,
                                     const Embedder& embedder, const Recognizer& recognizer,
                                     const ChunkingConfig& chunking) {
    TrainingSetResult result;
    for (const Document& doc : corpus) {
        auto doc_truth = truth.docs.find(doc.id);
        if (doc_truth == truth.docs.end()) {
            result.warnings.push_back("document \"" + doc.id +
                                      "\" missing from ground truth; skipped");
            continue;
        }
        const std::vector<Chunk> chunks = chunk_document(doc, chunking);
        if (chunks.empty()) continue;
        const auto features = compute_features(chunks, tmpl, embedder, recognizer, chunking);

        // normalized truth values per field, empty strings dropped
        std::vector<std::vector<std::string>> needles(tmpl.fields.size());
        for (std::size_t j = 0; j < tmpl.fields.size(); ++j) {
            auto field_truth = doc_truth->second.find(tmpl.fields[j].key);
            if (field_truth == doc_truth->second.end()) continue;
            for (const std::string& value : field_truth->second) {
                std::string norm = normalize_value(value, FieldType::string);
                if (!norm.empty()) needles[j].push_back(std::move(norm));
            }
        }

        for (std::size_t i = 0; i < chunks.size(); ++i) {
            const std::string haystack =
                normalize_value(chunks[i].text, FieldType::string);
            for (std::size_t j = 0; j < tmpl.fields.size(); ++j) {
                LabeledPair pair;
                pair.doc_id = doc.id;
                pair.chunk_index = chunks[i].index;
                pair.field_key = tmpl.fields[j].key;
                pair.features = features[i][j];
                pair.label = 0;
                for (const std::string& needle : needles[j]) {
                    if (haystack.find(needle) != std::string::npos) {
                        pair.label = 1;
                        break;
                    }
                }
                result.pairs.push_back(std::move(pair));
            }
        }
    }
    return result;
}

RerankerModel train(const std::vector<LabeledPair>& pairs, const TrainConfig& config) {
    if (pairs.empty()) throw std::invalid_argument("training set is empty");
    const std::size_t input_dim = pairs.front().features.values.size();
    std::size_t positives = 0;
    for (const LabeledPair& pair : pairs) {
        if (pair.features.values.size() != input_dim) {
            throw std::invalid_argument("inconsistent feature dimensions in training set");
        }
        if (pair.label == 1) ++positives;
    }
    const std::size_t negatives = pairs.size() - positives;
    if (positives == 0 || negatives == 0) {
        throw std::invalid_argument("training set must contain both classes");
    }
    if (config.batch_size == 0) throw std::invalid_argument("batch_size must be positive");

    RerankerModel model = init_model(input_dim, config.seed);

    const std::size_t prefix = model.feature_mean.size();
    for (std::size_t i = 0; i < prefix; ++i) {
        double mean = 0.0;
        for (const LabeledPair& pair : pairs) mean += pair.features.values[i];
        mean /= static_cast<double>(pairs.size());
        double var = 0.0;
        for (const LabeledPair& pair : pairs) {
            const double d = pair.features.values[i] - mean;
            var += d * d;
        }
        model.feature_mean[i] = mean;
        model.feature_var[i] = var / static_cast<double>(pairs.size());
    }
    if (input_dim > kScalarFeatureCount &&
        (input_dim - kScalarFeatureCount) % 2 == 0) {
        model.feature_order = feature_names((input_dim - kScalarFeatureCount) / 2);
    } else {
        for (std::size_t i = 0; i < input_dim; ++i) {
            model.feature_order.push_back("f_" + std::to_string(i));
        }
    }

    const double pos_weight =
        config.class_weight
            ? *config.class_weight
            : std::min(config.class_weight_cap,
                       static_cast<double>(negatives) / static_cast<double>(positives));

    std::mt19937_64 rng(config.seed ^ 0x5bf0f3154c27ad6bULL);
    std::vector<std::size_t> order(pairs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(rng() % i);
            std::swap(order[i - 1], order[j]);
        }
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t stop = std::min(order.size(), start + config.batch_size);
            Gradients grads(model);
            for (std::size_t k = start; k < stop; ++k) {
                const LabeledPair& pair = pairs[order[k]];
                const Forward f = forward_pass(model, pair.features.values);
                accumulate_sample(model, f, pair.label, pair_weight(pair, pos_weight),
                                  grads);
            }
            const double scale = config.learning_rate / static_cast<double>(stop - start);
            auto step = [&](std::vector<double>& w, const std::vector<double>& g) {
                for (std::size_t k = 0; k < w.size(); ++k) w[k] -= scale * g[k];
            };
            step(model.w1, grads.w1);
            step(model.b1, grads.b1);
            step(model.w2, grads.w2);
            step(model.b2, grads.b2);
            step(model.w3, grads.w3);
            step(model.b3, grads.b3);
        }
    }

    model.final_loss = mean_loss(model, pairs, pos_weight);
    return model;
}

double predict(const RerankerModel& model, const FeatureVector& features) {
    return sigmoid(forward_pass(model, features.values).logit);
}

double gradient_check(const RerankerModel& model, const std::vector<LabeledPair>& pairs,
                      double epsilon, double positive_weight) {
    if (pairs.empty()) throw std::invalid_argument("gradient check needs at least one pair");
    if (epsilon <= 0.0) throw std::invalid_argument("epsilon must be positive");

    const Gradients analytic = mean_gradients(model, pairs, positive_weight);
    const std::vector<double> flat = flatten_gradients(analytic);

    RerankerModel probe = model;
    const std::vector<double*> params = parameter_view(probe);
    double worst = 0.0;
    for (std::size_t p = 0; p < params.size(); ++p) {
        const double saved = *params[p];
        *params[p] = saved + epsilon;
        const double up = mean_loss(probe, pairs, positive_weight);
        *params[p] = saved - epsilon;
        const double down = mean_loss(probe, pairs, positive_weight);
        *params[p] = saved;
        const double numeric = (up - down) / (2.0 * epsilon);
        const double denom = std::max(std::abs(flat[p]) + std::abs(numeric), 1e-6);
        worst = std::max(worst, std::abs(flat[p] - numeric) / denom);
    }
    return worst;
}

double rank_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size()) {
        throw std::invalid_argument("scores and labels must align");
    }
    std::vector<std::size_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // average ranks across ties, then the Mann-Whitney statistic
    std::vector<double> ranks(scores.size(), 0.0);
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }

    double pos_rank_sum = 0.0;
    std::size_t positives = 0;
    for (std::size_t k = 0; k < labels.size(); ++k) {
        if (labels[k] == 1) {
            pos_rank_sum += ranks[k];
            ++positives;
        }
    }
    const std::size_t negatives = labels.size() - positives;
    if (positives == 0 || negatives == 0) {
        throw std::invalid_argument("AUC needs both classes");
    }
    const double u = pos_rank_sum - static_cast<double>(positives) *
                                        (static_cast<double>(positives) + 1.0) / 2.0;
    return u / (static_cast<double>(positives) * static_cast<double>(negatives));
}

void save_model(const RerankerModel& model, const std::string& path) {
    json root;
    root["version"] = 1;
    root["input_dim"] = model.input_dim;
    root["w1"] = model.w1;
    root["b1"] = model.b1;
    root["w2"] = model.w2;
    root["b2"] = model.b2;
    root["w3"] = model.w3;
    root["b3"] = model.b3;
    root["feature_mean"] = model.feature_mean;
    root["feature_var"] = model.feature_var;
    root["seed"] = model.seed;
    root["final_loss"] = model.final_loss;
    root["feature_order"] = model.feature_order;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write model file: " + path);
    out << root.dump(2) << "\n";
}

RerankerModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open model file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    json root = json::parse(buffer.str(), nullptr, false);
    if (root.is_discarded()) throw std::runtime_error("model file is not valid JSON: " + path);
    if (root.value("version", 0) != 1) {
        throw std::runtime_error("unsupported model file version in " + path);
    }
    RerankerModel model;
    model.input_dim = root.at("input_dim").get<std::size_t>();
    model.w1 = root.at("w1").get<std::vector<double>>();
    model.b1 = root.at("b1").get<std::vector<double>>();
    model.w2 = root.at("w2").get<std::vector<double>>();
    model.b2 = root.at("b2").get<std::vector<double>>();
    model.w3 = root.at("w3").get<std::vector<double>>();
    model.b3 = root.at("b3").get<std::vector<double>>();
    model.feature_mean = root.at("feature_mean").get<std::vector<double>>();
    model.feature_var = root.at("feature_var").get<std::vector<double>>();
    model.seed = root.at("seed").get<std::uint64_t>();
    model.final_loss = root.at("final_loss").get<double>();
    model.feature_order = root.at("feature_order").get<std::vector<std::string>>();

    if (model.w1.size() != kHidden1 * model.input_dim || model.b1.size() != kHidden1 ||
        model.w2.size() != kHidden2 * kHidden1 || model.b2.size() != kHidden2 ||
        model.w3.size() != kHidden2 || model.b3.size() != 1) {
        throw std::runtime_error("model file has inconsistent layer shapes: " + path);
    }
    return model;
}

DocSplit split_documents(const std::vector<std::string>& doc_ids, const SplitConfig& config) {
    if (doc_ids.size() < 2) {
        throw std::invalid_argument("need at least two documents to split");
    }
    if (config.train_fraction <= 0.0 || config.test_fraction <= 0.0 ||
        config.train_fraction + config.test_fraction > 1.0) {
        throw std::invalid_argument("invalid split fractions");
    }
    std::vector<std::string> shuffled = doc_ids;
    std::mt19937_64 rng(config.seed);
    for (std::size_t i = shuffled.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(shuffled[i - 1], shuffled[j]);
    }
    const auto count = [&](double fraction) {
        return std::max<std::size_t>(
            1, static_cast<std::size_t>(std::llround(fraction * shuffled.size())));
    };
    std::size_t n_train = count(config.train_fraction);
    std::size_t n_test = count(config.test_fraction);
    if (n_train + n_test > shuffled.size()) n_train = shuffled.size() - n_test;

    DocSplit split;
    split.train_docs.assign(shuffled.begin(), shuffled.begin() + n_train);
    split.test_docs.assign(shuffled.begin() + n_train, shuffled.begin() + n_train + n_test);
    return split;
}

}  // namespace metaforge
