#include "metaforge/select.hpp"

#include <cmath>
#include <random>

#include "doctest.h"
#include "support/oracles.hpp"

using namespace metaforge;

namespace {

Chunk make_chunk(std::string text, std::size_t index = 0) {
    Chunk c;
    c.doc_id = "doc";
    c.index = index;
    c.text = std::move(text);
    c.token_count = count_tokens(c.text);
    c.char_span = {0, c.text.size()};
    return c;
}

ScoreMatrix random_matrix(std::size_t n, std::size_t f, std::mt19937& rng) {
    auto real = [&rng] { return static_cast<double>(rng() % 1000) / 999.0; };
    ScoreMatrix m;
    m.per_field_cos.assign(n, std::vector<double>(f, 0.0));
    m.per_field_ner.assign(n, std::vector<double>(f, 0.0));
    m.bm25.assign(n, std::vector<double>(f, 0.0));
    m.total_cos.assign(n, 0.0);
    m.total_ner.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        m.total_cos[i] = real();
        m.total_ner[i] = real();
        for (std::size_t j = 0; j < f; ++j) {
            m.per_field_cos[i][j] = real();
            m.per_field_ner[i][j] = real();
            m.bm25[i][j] = real();
        }
    }
    return m;
}

}  // namespace

TEST_CASE("bm25 single-chunk hand value") {
    // One chunk, query term present once, len == avglen by construction:
    // idf = ln(4/3), tf factor = 2.2/2.2, so the score is exactly ln(4/3).
    const std::vector<Chunk> chunks = {make_chunk("alpha beta")};
    const Bm25Stats stats(chunks);
    const double got = bm25_score({"alpha"}, chunks[0], stats);
    CHECK(got == doctest::Approx(std::log(4.0 / 3.0)).epsilon(1e-12));
    CHECK(std::abs(got - 0.2877) < 5e-5);

    CHECK(bm25_score({"missing"}, chunks[0], stats) == 0.0);
}

TEST_CASE("bm25 repeated terms and case folding") {
    const std::vector<Chunk> chunks = {make_chunk("Alpha alpha beta"),
                                       make_chunk("beta gamma delta")};
    const Bm25Stats stats(chunks);
    CHECK(stats.num_chunks() == 2);
    CHECK(stats.avg_length() == doctest::Approx(3.0));
    CHECK(stats.doc_frequency("alpha") == 1);
    CHECK(stats.doc_frequency("beta") == 2);

    // tf=2 for "alpha" in chunk 0; duplicates in the query do not double-count.
    const double once = bm25_score({"ALPHA"}, chunks[0], stats);
    const double twice = bm25_score({"alpha", "Alpha"}, chunks[0], stats);
    CHECK(once == doctest::Approx(twice));
    CHECK(once > 0.0);

    // higher tf gives a higher score at equal length
    const std::vector<Chunk> pair = {make_chunk("word word filler"),
                                     make_chunk("word other filler")};
    const Bm25Stats pstats(pair);
    CHECK(bm25_score({"word"}, pair[0], pstats) > bm25_score({"word"}, pair[1], pstats));
}

TEST_CASE("score matrix shape and aggregate collapse") {
    HashedNgramEmbedder emb;
    Recognizer rec;

    const Template single = parse_template(
        R"({"fields": [{"key": "Effective Date",
                        "prompt": "Specify the date when the contract becomes effective.",
                        "type": "date", "ner_labels": ["DATE"]}]})");
    const std::vector<Chunk> chunks = {
        make_chunk("This Agreement is effective as of March 24, 2024.", 0),
        make_chunk("plain filler with no entities whatsoever", 1),
    };
    const ScoreMatrix m = compute_scores(chunks, single, emb, rec);
    REQUIRE(m.num_chunks() == 2);
    REQUIRE(m.num_fields() == 1);
    for (std::size_t i = 0; i < 2; ++i) {
        // single-field template: the aggregate query string equals the field query
        CHECK(m.total_cos[i] == doctest::Approx(m.per_field_cos[i][0]).epsilon(1e-12));
        CHECK(m.total_ner[i] == doctest::Approx(m.per_field_ner[i][0]).epsilon(1e-12));
        CHECK(m.per_field_ner[i][0] >= 0.0);
        CHECK(std::isfinite(m.bm25[i][0]));
    }
    CHECK(m.per_field_ner[0][0] > 0.0);
    CHECK(m.per_field_ner[1][0] == 0.0);
}

TEST_CASE("chunks rich in matching entities outscore entity-free ones") {
    HashedNgramEmbedder emb;
    Recognizer rec;
    const Template tmpl = parse_template(
        R"({"fields": [{"key": "Effective Date", "prompt": "effective date",
                        "type": "date", "ner_labels": ["DATE"]}]})");
    const std::vector<Chunk> chunks = {
        make_chunk("starts on March 24, 2024 and ends on June 1, 2025 period", 0),
        make_chunk("this text, which has equal token length, contains no dates at all", 1),
    };
    REQUIRE(chunks[0].token_count == chunks[1].token_count);
    const ScoreMatrix m = compute_scores(chunks, tmpl, emb, rec);
    CHECK(m.per_field_ner[0][0] > m.per_field_ner[1][0]);
}

TEST_CASE("borda basics") {
    std::mt19937 rng(5);

    SUBCASE("singleton") {
        const ScoreMatrix m = random_matrix(1, 1, rng);
        CHECK(borda_rank(m, {}, 0) == std::vector<std::size_t>{0});
    }

    SUBCASE("single family reduces to score order") {
        ScoreMatrix m = random_matrix(4, 1, rng);
        m.per_field_cos = {{0.2}, {0.9}, {0.5}, {0.7}};
        const BordaWeights w{1.0, 0.0, 0.0, 0.0};
        CHECK(borda_rank(m, w, 0) == std::vector<std::size_t>{1, 3, 2, 0});
    }

    SUBCASE("two families with opposing views") {
        ScoreMatrix m = random_matrix(3, 1, rng);
        m.per_field_cos = {{0.9}, {0.5}, {0.1}};  // c0 > c1 > c2
        m.per_field_ner = {{0.5}, {0.1}, {0.9}};  // c2 > c0 > c1
        const BordaWeights w{1.0, 1.0, 0.0, 0.0};
        // points: c0 = 2+1, c1 = 1+0, c2 = 0+2
        CHECK(borda_rank(m, w, 0) == std::vector<std::size_t>{0, 2, 1});
    }

    SUBCASE("weight validation") {
        const ScoreMatrix m = random_matrix(2, 1, rng);
        CHECK_THROWS_AS((void)borda_rank(m, BordaWeights{0, 0, 0, 0}, 0),
                        std::invalid_argument);
        CHECK_THROWS_AS((void)borda_rank(m, BordaWeights{-1, 1, 1, 1}, 0),
                        std::invalid_argument);
        CHECK_THROWS_AS((void)borda_rank(m, BordaWeights{}, 3), std::invalid_argument);
    }
}

TEST_CASE("borda matches pairwise-count recomputation on random inputs") {
    std::mt19937 rng(11);
    for (int iter = 0; iter < 300; ++iter) {
        const std::size_t n = 1 + rng() % 6;
        ScoreMatrix m = random_matrix(n, 2, rng);
        // inject ties now and then
        if (n > 1 && rng() % 2 == 0) {
            m.total_cos[rng() % n] = m.total_cos[rng() % n];
            m.per_field_cos[rng() % n][0] = m.per_field_cos[rng() % n][0];
        }
        const BordaWeights w{static_cast<double>(rng() % 4),
                             static_cast<double>(rng() % 4),
                             static_cast<double>(rng() % 4), 1.0};
        const std::size_t field = rng() % 2;
        CHECK(borda_rank(m, w, field) == testsupport::borda_rank_oracle(m, w, field));
    }
}

TEST_CASE("borda order survives strictly increasing transforms of one family") {
    std::mt19937 rng(13);
    for (int iter = 0; iter < 100; ++iter) {
        const std::size_t n = 2 + rng() % 5;
        ScoreMatrix m = random_matrix(n, 1, rng);
        const BordaWeights w{1.0, 2.0, 0.5, 1.5};
        const auto before = borda_rank(m, w, 0);
        for (std::size_t i = 0; i < n; ++i) {
            m.total_ner[i] = std::exp(3.0 * m.total_ner[i]) + 7.0;  // monotone map
        }
        CHECK(borda_rank(m, w, 0) == before);
    }
}

TEST_CASE("packing basics") {
    // chunks with known token counts: 3 tokens each
    std::vector<Chunk> chunks;
    for (std::size_t i = 0; i < 4; ++i) {
        chunks.push_back(make_chunk("tok tok tok", i));
    }

    SUBCASE("unconstrained budget takes everything") {
        const std::vector<std::vector<std::size_t>> fr = {{0, 1, 2, 3}, {3, 2, 1, 0}};
        const auto ctx = pack_context(fr, {0, 1, 2, 3}, chunks, 1000);
        CHECK(ctx.chunks.size() == 4);
        CHECK(ctx.total_tokens == 12);
        CHECK(ctx.per_field_coverage == std::vector<double>{1.0, 1.0});
        CHECK(!ctx.budget_warning);
    }

    SUBCASE("single field takes exactly its top-3") {
        const std::vector<std::vector<std::size_t>> fr = {{2, 0, 3, 1}};
        CoverageParams cov;
        cov.coverage_fraction = 1.0;
        cov.top_m = 3;
        const auto ctx = pack_context(fr, {1, 3, 0, 2}, chunks, 9, cov);
        REQUIRE(ctx.chunks.size() == 3);
        CHECK(ctx.chunks[0].index == 0);
        CHECK(ctx.chunks[1].index == 2);
        CHECK(ctx.chunks[2].index == 3);
        CHECK(ctx.per_field_coverage[0] == 1.0);
    }

    SUBCASE("two fields with distinct favourites both get served") {
        const std::vector<std::vector<std::size_t>> fr = {{0, 1, 2, 3}, {3, 2, 1, 0}};
        CoverageParams cov;
        cov.coverage_fraction = 1.0;
        cov.top_m = 1;
        // global ranking favours chunk 1, but it must not be consulted
        const auto ctx = pack_context(fr, {1, 2, 0, 3}, chunks, 6, cov);
        REQUIRE(ctx.chunks.size() == 2);
        CHECK(ctx.chunks[0].index == 0);
        CHECK(ctx.chunks[1].index == 3);
    }

    SUBCASE("budget below the smallest chunk flags a warning") {
        const std::vector<std::vector<std::size_t>> fr = {{0, 1, 2, 3}};
        const auto ctx = pack_context(fr, {0, 1, 2, 3}, chunks, 2);
        CHECK(ctx.chunks.empty());
        CHECK(ctx.total_tokens == 0);
        CHECK(ctx.budget_warning);
    }

    SUBCASE("argument validation") {
        const std::vector<std::vector<std::size_t>> fr = {{0, 1, 2, 3}};
        CHECK_THROWS_AS((void)pack_context(fr, {0, 1, 2, 3}, chunks, 0),
                        std::invalid_argument);
        CoverageParams bad;
        bad.coverage_fraction = 0.0;
        CHECK_THROWS_AS((void)pack_context(fr, {0, 1, 2, 3}, chunks, 5, bad),
                        std::invalid_argument);
        bad.coverage_fraction = 1.5;
        CHECK_THROWS_AS((void)pack_context(fr, {0, 1, 2, 3}, chunks, 5, bad),
                        std::invalid_argument);
        CHECK_THROWS_AS((void)pack_context({{0, 0, 1, 2}}, {0, 1, 2, 3}, chunks, 5),
                        std::invalid_argument);
        CHECK_THROWS_AS((void)pack_context(fr, {0, 1}, chunks, 5), std::invalid_argument);
    }
}

TEST_CASE("packing respects the coverage guarantee whenever it is feasible") {
    std::mt19937 rng(2025);
    int feasible_seen = 0;
    for (int iter = 0; iter < 400; ++iter) {
        const std::size_t n = 1 + rng() % 10;
        std::vector<Chunk> chunks;
        std::size_t total = 0;
        for (std::size_t i = 0; i < n; ++i) {
            std::string text;
            const std::size_t len = 1 + rng() % 20;
            for (std::size_t k = 0; k < len; ++k) text += "w ";
            chunks.push_back(make_chunk(text, i));
            total += chunks.back().token_count;
        }
        const std::size_t fields = 1 + rng() % 4;
        std::vector<std::vector<std::size_t>> fr;
        for (std::size_t f = 0; f < fields; ++f) {
            fr.push_back(testsupport::random_permutation(n, rng));
        }
        const auto global = testsupport::random_permutation(n, rng);
        CoverageParams cov;
        cov.coverage_fraction = static_cast<double>(1 + rng() % 100) / 100.0;
        cov.top_m = 1 + rng() % 6;
        const std::size_t budget = 1 + rng() % (total + 4);

        const auto ctx = pack_context(fr, global, chunks, budget, cov);

        CHECK(ctx.total_tokens <= budget);
        std::set<std::size_t> seen;
        std::size_t recount = 0;
        for (const Chunk& c : ctx.chunks) {
            CHECK(seen.insert(c.index).second);  // duplicate-free
            recount += c.token_count;
        }
        CHECK(recount == ctx.total_tokens);
        for (std::size_t i = 1; i < ctx.chunks.size(); ++i) {
            CHECK(ctx.chunks[i - 1].index < ctx.chunks[i].index);
        }

        if (testsupport::coverage_feasible(fr, chunks, budget, cov.coverage_fraction,
                                           cov.top_m)) {
            ++feasible_seen;
            for (double c : ctx.per_field_coverage) {
                CHECK(c >= cov.coverage_fraction - 1e-12);
            }
        }
    }
    CHECK(feasible_seen > 50);  // the generator must actually exercise the property
}

TEST_CASE("oracle ranking puts the truth-bearing chunk first") {
    HashedNgramEmbedder emb;
    FieldSpec field;
    field.key = "Governing Law";
    field.prompt = "Which state's laws govern the agreement?";

    std::vector<Chunk> chunks = {
        make_chunk("the deliverables are due within thirty days of signature", 0),
        make_chunk("this agreement is governed by the laws of the State of Delaware", 1),
        make_chunk("invoices are payable net sixty in euros", 2),
    };
    const auto ranking = oracle_rank(chunks, field, {"Delaware"}, emb);
    CHECK(ranking[0] == 1);

    // identical chunks tie and fall back to index order
    std::vector<Chunk> same = {make_chunk("same text", 0), make_chunk("same text", 1),
                               make_chunk("same text", 2)};
    CHECK(oracle_rank(same, field, {"x"}, emb) == std::vector<std::size_t>{0, 1, 2});

    CHECK_THROWS_AS((void)oracle_rank(chunks, field, {}, emb), std::invalid_argument);
}

TEST_CASE("a chunk equal to the oracle query ranks first") {
    HashedNgramEmbedder emb;
    FieldSpec field;
    field.key = "K";
    field.prompt = "find the value";
    const std::string query = field_query_text(field) + " v1";
    std::vector<Chunk> chunks = {make_chunk("unrelated text", 0), make_chunk(query, 1)};
    CHECK(oracle_rank(chunks, field, {"v1"}, emb)[0] == 1);
}
