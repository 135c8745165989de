#include "metaforge/reranker.hpp"

#include <filesystem>
#include <random>

#include "doctest.h"
#include "metaforge/select.hpp"

using namespace metaforge;

namespace {

Document make_doc(std::string id, std::string text) {
    Document doc;
    doc.id = std::move(id);
    doc.text = std::move(text);
    return doc;
}

LabeledPair make_pair(std::vector<double> features, int label) {
    LabeledPair pair;
    pair.doc_id = "d";
    pair.field_key = "f";
    pair.features.values = std::move(features);
    pair.label = label;
    return pair;
}

// separable on coordinate 0, noise elsewhere
std::vector<LabeledPair> separable_pairs(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto noise = [&]() { return (rng() % 2000) / 1000.0 - 1.0; };
    std::vector<LabeledPair> pairs;
    for (std::size_t i = 0; i < n; ++i) {
        const int label = i % 2 == 0 ? 1 : 0;
        const double x0 = label == 1 ? 1.0 : -1.0;
        pairs.push_back(make_pair({x0, noise(), noise()}, label));
    }
    return pairs;
}

std::vector<LabeledPair> random_pairs(std::size_t n, std::size_t dim, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<LabeledPair> pairs;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> f(dim);
        for (double& v : f) v = (rng() % 2000) / 1000.0 - 1.0;
        pairs.push_back(make_pair(std::move(f), static_cast<int>(i % 2)));
    }
    return pairs;
}

RerankerModel manual_model(std::size_t input_dim) {
    RerankerModel m;
    m.input_dim = input_dim;
    m.w1.assign(kHidden1 * input_dim, 0.0);
    m.b1.assign(kHidden1, 0.0);
    m.w2.assign(kHidden2 * kHidden1, 0.0);
    m.b2.assign(kHidden2, 0.0);
    m.w3.assign(kHidden2, 0.0);
    m.b3.assign(1, 0.0);
    m.feature_mean.assign(std::min<std::size_t>(kScalarFeatureCount, input_dim), 0.0);
    m.feature_var.assign(m.feature_mean.size(), 1.0);
    return m;
}

const Template kTemplate = parse_template(R"({
  "fields": [
    {"key": "Effective Date", "prompt": "when it begins", "type": "date",
     "ner_labels": ["DATE"]},
    {"key": "Governing Law", "prompt": "which state law governs", "type": "string",
     "ner_labels": ["GPE", "LAW"]}
  ]})");

}  // namespace

TEST_CASE("feature vectors carry the documented layout") {
    HashedNgramEmbedder embedder;
    Recognizer recognizer;
    const Document doc = make_doc(
        "d1",
        "This Agreement is effective as of March 24, 2024 and shall be governed by the "
        "laws of the State of Delaware. The parties have executed this Agreement as of "
        "the day and year first above written. Further boilerplate follows here.");
    ChunkingConfig chunking;
    chunking.chunk_tokens = 16;
    chunking.overlap_tokens = 4;
    const std::vector<Chunk> chunks = chunk_document(doc, chunking);
    REQUIRE(chunks.size() >= 3);

    const auto features = compute_features(chunks, kTemplate, embedder, recognizer, chunking);
    REQUIRE(features.size() == chunks.size());
    REQUIRE(features[0].size() == kTemplate.fields.size());

    const std::size_t expect_dim = kScalarFeatureCount + 2 * embedder.dimension();
    CHECK(features[0][0].values.size() == expect_dim);
    CHECK(feature_names(embedder.dimension()).size() == expect_dim);

    const ScoreMatrix scores = compute_scores(chunks, kTemplate, embedder, recognizer);
    for (std::size_t i = 0; i < chunks.size(); ++i) {
        for (std::size_t j = 0; j < kTemplate.fields.size(); ++j) {
            const auto& v = features[i][j].values;
            CHECK(v[0] == doctest::Approx(scores.per_field_cos[i][j]));
            CHECK(v[1] == doctest::Approx(scores.total_cos[i]));
            CHECK(v[2] == doctest::Approx(scores.bm25[i][j]));
            CHECK(v[3] == doctest::Approx(scores.per_field_ner[i][j]));
            CHECK(v[4] == doctest::Approx(scores.total_ner[i]));
            for (double x : v) CHECK(std::isfinite(x));
        }
    }
    // position fraction spans [0, 1] across the document
    CHECK(features.front()[0].values[5] == 0.0);
    CHECK(features.back()[0].values[5] == 1.0);
    // chunks nearly fill the window
    CHECK(features[0][0].values[6] > 0.5);
    CHECK(features[0][0].values[6] <= 1.0);
}

TEST_CASE("training pairs are the chunk-field product with substring labels") {
    HashedNgramEmbedder embedder;
    Recognizer recognizer;
    ChunkingConfig chunking;
    chunking.chunk_tokens = 12;
    chunking.overlap_tokens = 2;

    GroundTruth truth;
    truth.docs["d1"]["Effective Date"] = {"March 24, 2024"};
    truth.docs["d1"]["Governing Law"] = {"Delaware"};

    const std::vector<Document> corpus = {
        make_doc("d1",
                 "Section one covers notices and assignment and other routine matters. "
                 "This Agreement shall be governed by the laws of the State of Delaware "
                 "without regard to conflict provisions.")};

    const TrainingSetResult result =
        build_training_set(corpus, kTemplate, truth, embedder, recognizer, chunking);
    const std::vector<Chunk> chunks = chunk_document(corpus[0], chunking);
    CHECK(result.warnings.empty());
    CHECK(result.pairs.size() == chunks.size() * kTemplate.fields.size());

    std::size_t law_positives = 0;
    for (const LabeledPair& pair : result.pairs) {
        if (pair.field_key == "Effective Date") {
            // the date never appears in this document
            CHECK(pair.label == 0);
        } else if (pair.label == 1) {
            ++law_positives;
            const std::string text = chunks[pair.chunk_index].text;
            CHECK(text.find("Delaware") != std::string::npos);
        }
    }
    CHECK(law_positives >= 1);
}

TEST_CASE("documents absent from ground truth are skipped with a warning") {
    HashedNgramEmbedder embedder;
    Recognizer recognizer;
    GroundTruth truth;
    truth.docs["known"]["Effective Date"] = {"2024-01-01"};
    truth.docs["known"]["Governing Law"] = {};

    const std::vector<Document> corpus = {make_doc("known", "short text here"),
                                          make_doc("mystery", "another text body")};
    const TrainingSetResult result =
        build_training_set(corpus, kTemplate, truth, embedder, recognizer);
    REQUIRE(result.warnings.size() == 1);
    CHECK(result.warnings[0].find("mystery") != std::string::npos);
    for (const LabeledPair& pair : result.pairs) CHECK(pair.doc_id == "known");
}

TEST_CASE("training separates a linearly separable set") {
    const std::vector<LabeledPair> pairs = separable_pairs(120, 5);
    const RerankerModel model = train(pairs);
    std::size_t correct = 0;
    for (const LabeledPair& pair : pairs) {
        const double score = predict(model, pair.features);
        CHECK(score > 0.0);
        CHECK(score < 1.0);
        if ((score >= 0.5) == (pair.label == 1)) ++correct;
    }
    CHECK(static_cast<double>(correct) / pairs.size() >= 0.99);

    double pos_mean = 0.0, neg_mean = 0.0;
    std::size_t pos_n = 0, neg_n = 0;
    for (const LabeledPair& pair : pairs) {
        const double score = predict(model, pair.features);
        if (pair.label == 1) {
            pos_mean += score;
            ++pos_n;
        } else {
            neg_mean += score;
            ++neg_n;
        }
    }
    CHECK(pos_mean / pos_n > neg_mean / neg_n);
}

TEST_CASE("training is deterministic and zero epochs means seeded initialization") {
    const std::vector<LabeledPair> pairs = separable_pairs(40, 9);

    TrainConfig cfg;
    cfg.epochs = 5;
    const RerankerModel a = train(pairs, cfg);
    const RerankerModel b = train(pairs, cfg);
    CHECK(a.w1 == b.w1);
    CHECK(a.b1 == b.b1);
    CHECK(a.w2 == b.w2);
    CHECK(a.w3 == b.w3);
    CHECK(a.final_loss == b.final_loss);

    TrainConfig zero = cfg;
    zero.epochs = 0;
    const RerankerModel init = train(pairs, zero);
    CHECK(init.w1 != a.w1);  // training moved the weights

    // initialization depends only on the seed, not the data
    std::vector<LabeledPair> flipped = pairs;
    for (LabeledPair& pair : flipped) pair.label = 1 - pair.label;
    CHECK(train(flipped, zero).w1 == init.w1);

    TrainConfig other_seed = cfg;
    other_seed.seed = cfg.seed + 1;
    CHECK(train(pairs, other_seed).w1 != a.w1);
}

TEST_CASE("training rejects degenerate inputs") {
    std::vector<LabeledPair> one_class;
    for (int i = 0; i < 10; ++i) one_class.push_back(make_pair({1.0, 0.0}, 1));
    CHECK_THROWS_AS((void)train(one_class), std::invalid_argument);
    CHECK_THROWS_AS((void)train({}), std::invalid_argument);

    std::vector<LabeledPair> ragged = separable_pairs(10, 3);
    ragged.push_back(make_pair({1.0}, 0));
    CHECK_THROWS_AS((void)train(ragged), std::invalid_argument);
}

TEST_CASE("prediction basics") {
    SUBCASE("all-zero weights score one half") {
        const RerankerModel m = manual_model(4);
        CHECK(predict(m, FeatureVector{{0.5, -2.0, 7.0, 0.0}}) == doctest::Approx(0.5));
    }
    SUBCASE("a positive path is monotone in its feature") {
        RerankerModel m = manual_model(2);
        m.w1[0] = 1.0;       // hidden1 unit 0 reads feature 0
        m.w2[0] = 1.0;       // hidden2 unit 0 reads hidden1 unit 0
        m.w3[0] = 1.0;       // output reads hidden2 unit 0
        const double lo = predict(m, FeatureVector{{0.0, 9.9}});
        const double mid = predict(m, FeatureVector{{1.0, -3.4}});
        const double hi = predict(m, FeatureVector{{2.0, 0.1}});
        CHECK(lo == doctest::Approx(0.5));
        CHECK(mid > lo);
        CHECK(hi > mid);
    }
    SUBCASE("dimension mismatch throws") {
        const RerankerModel m = manual_model(3);
        CHECK_THROWS_AS((void)predict(m, FeatureVector{{1.0}}), std::invalid_argument);
    }
}

TEST_CASE("analytic gradients agree with central differences") {
    TrainConfig init_only;
    init_only.epochs = 0;

    SUBCASE("random pairs across seeds") {
        for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
            const std::vector<LabeledPair> pairs = random_pairs(8, 10, seed);
            init_only.seed = seed * 101 + 7;
            const RerankerModel model = train(pairs, init_only);
            CHECK(gradient_check(model, pairs, 1e-5) < 1e-4);
        }
    }
    SUBCASE("constant features stay within the gate") {
        std::vector<LabeledPair> pairs;
        for (int i = 0; i < 8; ++i) pairs.push_back(make_pair({1.0, 1.0, 1.0}, i % 2));
        const RerankerModel model = train(pairs, init_only);
        CHECK(gradient_check(model, pairs, 1e-5) < 1e-4);
    }
    SUBCASE("epsilon choice does not flip the verdict") {
        const std::vector<LabeledPair> pairs = random_pairs(8, 10, 44);
        const RerankerModel model = train(pairs, init_only);
        CHECK(gradient_check(model, pairs, 1e-5) < 1e-4);
        CHECK(gradient_check(model, pairs, 2e-5) < 1e-4);
    }
    SUBCASE("class weighting is part of the checked loss") {
        const std::vector<LabeledPair> pairs = random_pairs(8, 6, 91);
        const RerankerModel model = train(pairs, init_only);
        CHECK(gradient_check(model, pairs, 1e-5, 3.0) < 1e-4);
    }
}

TEST_CASE("rank AUC statistic") {
    CHECK(rank_auc({0.9, 0.8, 0.3, 0.2}, {1, 1, 0, 0}) == doctest::Approx(1.0));
    CHECK(rank_auc({0.1, 0.2, 0.8, 0.9}, {1, 1, 0, 0}) == doctest::Approx(0.0));
    CHECK(rank_auc({0.5, 0.5, 0.5, 0.5}, {1, 0, 1, 0}) == doctest::Approx(0.5));
    CHECK(rank_auc({0.9, 0.5, 0.5, 0.1}, {1, 1, 0, 0}) == doctest::Approx(0.875));
    CHECK_THROWS_AS((void)rank_auc({0.1, 0.2}, {1, 1}), std::invalid_argument);
    CHECK_THROWS_AS((void)rank_auc({0.1}, {1, 0}), std::invalid_argument);

    // pairwise-count oracle on random data with deliberate ties
    std::mt19937_64 rng(1234);
    for (int iter = 0; iter < 50; ++iter) {
        const std::size_t n = 3 + rng() % 20;
        std::vector<double> scores(n);
        std::vector<int> labels(n);
        bool has_pos = false, has_neg = false;
        for (std::size_t i = 0; i < n; ++i) {
            scores[i] = static_cast<double>(rng() % 5) / 4.0;
            labels[i] = static_cast<int>(rng() % 2);
            (labels[i] == 1 ? has_pos : has_neg) = true;
        }
        if (!has_pos || !has_neg) continue;
        double wins = 0.0;
        std::size_t pairs = 0;
        for (std::size_t p = 0; p < n; ++p) {
            if (labels[p] != 1) continue;
            for (std::size_t q = 0; q < n; ++q) {
                if (labels[q] != 0) continue;
                ++pairs;
                if (scores[p] > scores[q]) wins += 1.0;
                else if (scores[p] == scores[q]) wins += 0.5;
            }
        }
        CHECK(rank_auc(scores, labels) == doctest::Approx(wins / pairs).epsilon(1e-12));
    }
}

TEST_CASE("model files round trip") {
    namespace fs = std::filesystem;
    const fs::path path = fs::temp_directory_path() / "metaforge_model_test.json";

    const std::vector<LabeledPair> pairs = separable_pairs(60, 21);
    TrainConfig cfg;
    cfg.epochs = 3;
    const RerankerModel model = train(pairs, cfg);
    save_model(model, path.string());
    const RerankerModel loaded = load_model(path.string());

    CHECK(loaded.input_dim == model.input_dim);
    CHECK(loaded.w1 == model.w1);
    CHECK(loaded.b1 == model.b1);
    CHECK(loaded.w2 == model.w2);
    CHECK(loaded.b2 == model.b2);
    CHECK(loaded.w3 == model.w3);
    CHECK(loaded.b3 == model.b3);
    CHECK(loaded.feature_mean == model.feature_mean);
    CHECK(loaded.feature_var == model.feature_var);
    CHECK(loaded.seed == model.seed);
    CHECK(loaded.feature_order == model.feature_order);
    CHECK(predict(loaded, pairs[0].features) == predict(model, pairs[0].features));

    fs::remove(path);
    CHECK_THROWS_AS((void)load_model(path.string()), std::runtime_error);
}

TEST_CASE("document level split") {
    std::vector<std::string> ids;
    for (int i = 0; i < 40; ++i) ids.push_back("doc-" + std::to_string(i));

    const DocSplit split = split_documents(ids);
    CHECK(split.train_docs.size() == 4);
    CHECK(split.test_docs.size() == 2);
    for (const std::string& t : split.test_docs) {
        CHECK(std::find(split.train_docs.begin(), split.train_docs.end(), t) ==
              split.train_docs.end());
    }

    const DocSplit again = split_documents(ids);
    CHECK(again.train_docs == split.train_docs);
    CHECK(again.test_docs == split.test_docs);

    SplitConfig other;
    other.seed = 99;
    CHECK(split_documents(ids, other).train_docs != split.train_docs);

    SplitConfig bad;
    bad.train_fraction = 0.9;
    bad.test_fraction = 0.2;
    CHECK_THROWS_AS((void)split_documents(ids, bad), std::invalid_argument);
    CHECK_THROWS_AS((void)split_documents({"solo"}, SplitConfig{}), std::invalid_argument);

    // tiny corpora still get at least one document on each side
    const DocSplit tiny = split_documents({"a", "b", "c"});
    CHECK(tiny.train_docs.size() == 1);
    CHECK(tiny.test_docs.size() == 1);
}
