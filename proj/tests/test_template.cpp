#include "metaforge/template.hpp"

#include <algorithm>
#include <random>
#include <set>

#include "doctest.h"
#include "metaforge/embed.hpp"

using namespace metaforge;

namespace {

const char* kContractTemplate = R"({
  "fields": [
    {
      "key": "Parties",
      "prompt": "List the parties who signed the contract.",
      "type": "array",
      "ner_labels": ["PERSON", "ORG"]
    },
    {
      "key": "Effective Date",
      "prompt": "Specify the date when the contract becomes effective.",
      "type": "date",
      "ner_labels": ["DATE"]
    },
    {
      "key": "Most Favored Nation",
      "prompt": "Does the contract contain a most favored nation clause?",
      "type": "enum",
      "options": [{"key": "Yes"}, {"key": "No"}]
    }
  ]
})";

}  // namespace

TEST_CASE("three-field contract template parses") {
    const Template t = parse_template(kContractTemplate);
    REQUIRE(t.fields.size() == 3);

    CHECK(t.fields[0].key == "Parties");
    CHECK(t.fields[0].type == FieldType::array);
    CHECK(t.fields[0].ner_labels ==
          std::vector<EntityLabel>{EntityLabel::PERSON, EntityLabel::ORG});

    CHECK(t.fields[1].type == FieldType::date);
    CHECK(t.fields[1].ner_labels == std::vector<EntityLabel>{EntityLabel::DATE});

    CHECK(t.fields[2].type == FieldType::enumeration);
    CHECK(t.fields[2].options == std::vector<std::string>{"Yes", "No"});
    CHECK(t.fields[2].ner_labels.empty());

    REQUIRE(t.find("Parties") != nullptr);
    CHECK(t.find("missing") == nullptr);
}

TEST_CASE("missing type defaults to string and unknown keys are ignored") {
    const Template t = parse_template(
        R"({"fields": [{"key": "Governing Law", "prompt": "p", "comment": "ignored"}],
            "extra": 1})");
    REQUIRE(t.fields.size() == 1);
    CHECK(t.fields[0].type == FieldType::string);
}

TEST_CASE("template validation failures name the offender") {
    CHECK_THROWS_WITH_AS((void)parse_template(R"({"fields": []})"),
                         "template must contain at least one field", std::runtime_error);
    CHECK_THROWS_AS((void)parse_template("not json"), std::runtime_error);

    // duplicate keys
    CHECK_THROWS_WITH_AS(
        (void)parse_template(
            R"({"fields": [{"key": "A"}, {"key": "A"}]})"),
        "duplicate field key \"A\"", std::runtime_error);

    // enum without options
    CHECK_THROWS_AS(
        (void)parse_template(R"({"fields": [{"key": "Status", "type": "enum"}]})"),
        std::runtime_error);

    // options on a plain string field
    CHECK_THROWS_AS((void)parse_template(
                        R"({"fields": [{"key": "A", "options": ["x", "y"]}]})"),
                    std::runtime_error);

    // unknown label
    CHECK_THROWS_AS((void)parse_template(
                        R"({"fields": [{"key": "A", "ner_labels": ["WIZARD"]}]})"),
                    std::runtime_error);

    // unknown type
    CHECK_THROWS_AS((void)parse_template(
                        R"({"fields": [{"key": "A", "type": "blob"}]})"),
                    std::runtime_error);
}

TEST_CASE("serialize then parse is the identity") {
    const Template original = parse_template(kContractTemplate);
    CHECK(parse_template(serialize_template(original)) == original);

    std::mt19937 rng(99);
    const std::vector<FieldType> types = {FieldType::string,       FieldType::integer,
                                          FieldType::number,       FieldType::date,
                                          FieldType::enumeration,  FieldType::multi_select,
                                          FieldType::array};
    for (int iter = 0; iter < 50; ++iter) {
        Template t;
        const std::size_t n = 1 + rng() % 6;
        for (std::size_t i = 0; i < n; ++i) {
            FieldSpec f;
            f.key = "field_" + std::to_string(i);
            f.prompt = "prompt " + std::to_string(rng() % 1000);
            f.type = types[rng() % types.size()];
            if (f.type == FieldType::enumeration || f.type == FieldType::multi_select) {
                const std::size_t opts = 2 + rng() % 3;
                for (std::size_t k = 0; k < opts; ++k) {
                    f.options.push_back("opt" + std::to_string(k));
                }
            }
            const std::size_t labels = rng() % 3;
            const auto& all = all_entity_labels();
            for (std::size_t k = 0; k < labels; ++k) {
                EntityLabel candidate = all[rng() % all.size()];
                if (std::find(f.ner_labels.begin(), f.ner_labels.end(), candidate) ==
                    f.ner_labels.end()) {
                    f.ner_labels.push_back(candidate);
                }
            }
            t.fields.push_back(std::move(f));
        }
        CHECK(parse_template(serialize_template(t)) == t);
    }
}

TEST_CASE("built-in label definitions cover the whole scheme") {
    const auto& defs = builtin_label_definitions();
    REQUIRE(defs.size() == kEntityLabelCount);
    std::set<EntityLabel> seen;
    for (const auto& def : defs) {
        CHECK(!def.definition.empty());
        CHECK(seen.insert(def.label).second);
    }
}

TEST_CASE("a date field prompt maps to the DATE label") {
    HashedNgramEmbedder emb;
    FieldSpec field;
    field.key = "Effective Date";
    field.prompt = "Specify the date when the contract becomes effective.";
    const auto labels =
        assign_field_labels(field, builtin_label_definitions(), emb);
    REQUIRE(!labels.empty());
    CHECK(labels.size() <= kLabelTopK);
    CHECK(std::find(labels.begin(), labels.end(), EntityLabel::DATE) != labels.end());
}

TEST_CASE("a prompt equal to a gloss ranks that label first") {
    HashedNgramEmbedder emb;
    for (const auto& def : builtin_label_definitions()) {
        FieldSpec field;
        field.key = "probe";
        field.prompt = def.definition;
        const auto labels = assign_field_labels(field, builtin_label_definitions(), emb);
        REQUIRE(!labels.empty());
        CHECK(labels.front() == def.label);
    }
}

TEST_CASE("unreachable threshold yields no labels") {
    HashedNgramEmbedder emb;
    FieldSpec field;
    field.key = "x";
    field.prompt = "Anything at all.";
    CHECK(assign_field_labels(field, builtin_label_definitions(), emb, 1.1).empty());
}

TEST_CASE("explicit labels are never overwritten") {
    HashedNgramEmbedder emb;
    FieldSpec field;
    field.key = "Parties";
    field.prompt = "Specify the date when the contract becomes effective.";
    field.ner_labels = {EntityLabel::PERSON, EntityLabel::ORG};
    const auto labels = assign_field_labels(field, builtin_label_definitions(), emb);
    CHECK(labels == field.ner_labels);

    Template t = parse_template(kContractTemplate);
    const Template assigned =
        assign_missing_labels(t, builtin_label_definitions(), emb, 0.0);
    CHECK(assigned.fields[0].ner_labels == t.fields[0].ner_labels);
    CHECK(assigned.fields[1].ner_labels == t.fields[1].ner_labels);
    CHECK(!assigned.fields[2].ner_labels.empty());  // enum field gets auto labels
    CHECK(assigned.fields[2].ner_labels.size() <= kLabelTopK);
}
