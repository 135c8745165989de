#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "metaforge/embed.hpp"
#include "metaforge/ner.hpp"

namespace metaforge {

enum class FieldType {
    string,
    integer,
    number,
    date,
    enumeration,  // serialized as "enum"
    multi_select,
    array,
};

std::string_view to_string(FieldType type);
FieldType parse_field_type(std::string_view name);

/// One extraction target: a key, a natural-language prompt describing what to
/// extract, a value type, and the entity labels used to boost chunks for it.
struct FieldSpec {
    std::string key;
    std::string prompt;
    FieldType type = FieldType::string;
    std::vector<std::string> options;  // enum / multiSelect only, >= 2 entries
    std::vector<EntityLabel> ner_labels;

    bool operator==(const FieldSpec&) const = default;
};

struct Template {
    std::vector<FieldSpec> fields;

    bool operator==(const Template&) const = default;

    const FieldSpec* find(std::string_view key) const;
};

/// Parses and validates template JSON:
///   {"fields": [{"key", "prompt", "type", "options": [{"key": ...}],
///                "ner_labels": [...]}]}
/// Unknown keys are ignored, a missing type means string, and options accept
/// either bare strings or {"key": ...} objects. Validation failures throw
/// std::runtime_error naming the offending field.
Template parse_template(const std::string& json_text);
Template load_template(const std::string& path);

/// Inverse of parse_template: parse_template(serialize_template(t)) == t.
std::string serialize_template(const Template& t);

struct LabelDefinition {
    EntityLabel label;
    std::string definition;
};

/// One gloss per entity label, shipped as data so deployments can re-tune the
/// prompt-to-label mapping without code changes.
const std::vector<LabelDefinition>& builtin_label_definitions();

/// JSON object mapping label name to gloss; must cover all 18 labels.
std::vector<LabelDefinition> load_label_definitions(const std::string& path);

inline constexpr double kLabelSimilarityThreshold = 0.3;
inline constexpr std::size_t kLabelTopK = 2;

/// Labels whose gloss embeds within `threshold` cosine similarity of the
/// field prompt, best first (ties by label name), at most `top_k`. A field
/// that already carries explicit labels is returned unchanged: auto
/// assignment only fills gaps.
std::vector<EntityLabel> assign_field_labels(const FieldSpec& field,
                                             const std::vector<LabelDefinition>& defs,
                                             const Embedder& embedder,
                                             double threshold = kLabelSimilarityThreshold,
                                             std::size_t top_k = kLabelTopK);

/// Applies assign_field_labels to every field with empty ner_labels.
Template assign_missing_labels(Template t, const std::vector<LabelDefinition>& defs,
                               const Embedder& embedder,
                               double threshold = kLabelSimilarityThreshold,
                               std::size_t top_k = kLabelTopK);

}  // namespace metaforge
