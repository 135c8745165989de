#include "metaforge/template.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace metaforge {

namespace {

using nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

void validate_field(const FieldSpec& field) {
    if (field.key.empty()) fail("template field with empty key");
    const bool needs_options =
        field.type == FieldType::enumeration || field.type == FieldType::multi_select;
    if (needs_options && field.options.size() < 2) {
        fail("field \"" + field.key + "\": " + std::string(to_string(field.type)) +
             " type requires at least 2 options");
    }
    if (!needs_options && !field.options.empty()) {
        fail("field \"" + field.key + "\": options are only valid for enum/multiSelect");
    }
    std::set<std::string> seen;
    for (const std::string& opt : field.options) {
        if (!seen.insert(opt).second) {
            fail("field \"" + field.key + "\": duplicate option \"" + opt + "\"");
        }
    }
}

}  // namespace

std::string_view to_string(FieldType type) {
    switch (type) {
        case FieldType::string: return "string";
        case FieldType::integer: return "integer";
        case FieldType::number: return "number";
        case FieldType::date: return "date";
        case FieldType::enumeration: return "enum";
        case FieldType::multi_select: return "multiSelect";
        case FieldType::array: return "array";
    }
    return "string";
}

FieldType parse_field_type(std::string_view name) {
    if (name == "string") return FieldType::string;
    if (name == "integer") return FieldType::integer;
    if (name == "number") return FieldType::number;
    if (name == "date") return FieldType::date;
    if (name == "enum") return FieldType::enumeration;
    if (name == "multiSelect") return FieldType::multi_select;
    if (name == "array") return FieldType::array;
    throw std::invalid_argument("unknown field type: " + std::string(name));
}

const FieldSpec* Template::find(std::string_view key) const {
    for (const FieldSpec& f : fields) {
        if (f.key == key) return &f;
    }
    return nullptr;
}

Template parse_template(const std::string& json_text) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        fail(std::string("malformed template JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("fields") || !doc["fields"].is_array()) {
        fail("template JSON must be an object with a \"fields\" array");
    }

    Template tmpl;
    std::set<std::string> keys;
    for (const auto& entry : doc["fields"]) {
        FieldSpec field;
        if (!entry.contains("key") || !entry["key"].is_string()) {
            fail("template field missing string \"key\"");
        }
        field.key = entry["key"].get<std::string>();
        field.prompt = entry.value("prompt", std::string());
        if (entry.contains("type")) {
            try {
                field.type = parse_field_type(entry["type"].get<std::string>());
            } catch (const std::invalid_argument& e) {
                fail("field \"" + field.key + "\": " + e.what());
            }
        }
        if (entry.contains("options")) {
            for (const auto& opt : entry["options"]) {
                if (opt.is_string()) {
                    field.options.push_back(opt.get<std::string>());
                } else if (opt.is_object() && opt.contains("key")) {
                    field.options.push_back(opt["key"].get<std::string>());
                } else {
                    fail("field \"" + field.key + "\": option must be a string or {\"key\"}");
                }
            }
        }
        if (entry.contains("ner_labels")) {
            for (const auto& name : entry["ner_labels"]) {
                const auto label = parse_entity_label(name.get<std::string>());
                if (!label) {
                    fail("field \"" + field.key + "\": unknown entity label \"" +
                         name.get<std::string>() + "\"");
                }
                field.ner_labels.push_back(*label);
            }
        }
        validate_field(field);
        if (!keys.insert(field.key).second) {
            fail("duplicate field key \"" + field.key + "\"");
        }
        tmpl.fields.push_back(std::move(field));
    }
    if (tmpl.fields.empty()) fail("template must contain at least one field");
    return tmpl;
}

Template load_template(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open template file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_template(buf.str());
}

std::string serialize_template(const Template& t) {
    ordered_json doc;
    doc["fields"] = ordered_json::array();
    for (const FieldSpec& field : t.fields) {
        ordered_json f;
        f["key"] = field.key;
        f["prompt"] = field.prompt;
        f["type"] = std::string(to_string(field.type));
        if (!field.options.empty()) {
            ordered_json opts = ordered_json::array();
            for (const std::string& opt : field.options) {
                opts.push_back(ordered_json{{"key", opt}});
            }
            f["options"] = std::move(opts);
        }
        if (!field.ner_labels.empty()) {
            ordered_json labels = ordered_json::array();
            for (EntityLabel label : field.ner_labels) {
                labels.push_back(std::string(to_string(label)));
            }
            f["ner_labels"] = std::move(labels);
        }
        doc["fields"].push_back(std::move(f));
    }
    return doc.dump(2);
}

const std::vector<LabelDefinition>& builtin_label_definitions() {
    static const std::vector<LabelDefinition> defs = {
        {EntityLabel::PERSON,
         "The name of a person, such as an individual signatory, employee, or agent."},
        {EntityLabel::NORP,
         "A nationality, religious group, or political affiliation, such as American or "
         "Republican."},
        {EntityLabel::FAC,
         "A named facility or man-made structure, such as a building, airport, or bridge."},
        {EntityLabel::ORG,
         "The name of an organization, such as a company, corporation, institution, or "
         "government agency."},
        {EntityLabel::GPE,
         "A geopolitical entity, such as a country, state, province, or city that acts as "
         "a jurisdiction."},
        {EntityLabel::LOC,
         "A non-political location, such as a mountain range, body of water, region, or "
         "continent."},
        {EntityLabel::PRODUCT,
         "A named product, such as a vehicle, device, or software application."},
        {EntityLabel::EVENT,
         "A named event, such as a war, sports competition, storm, or festival."},
        {EntityLabel::WORK_OF_ART,
         "The title of a creative work, such as a book, song, film, or painting."},
        {EntityLabel::LAW,
         "A named law, statute, act, code, or regulation cited as a governing rule."},
        {EntityLabel::LANGUAGE, "A named natural language, such as English or Spanish."},
        {EntityLabel::DATE,
         "A calendar date or period specifying when something happens, such as the date "
         "when an agreement becomes effective, starts, ends, or renews."},
        {EntityLabel::TIME,
         "A time of day, such as an hour and minute, noon, or midnight."},
        {EntityLabel::PERCENT,
         "A percentage value, a number followed by percent or the percent sign."},
        {EntityLabel::MONEY,
         "A monetary amount, such as a payment, price, fee, or penalty expressed in a "
         "currency."},
        {EntityLabel::QUANTITY,
         "A measured quantity with units, such as a weight, distance, area, or volume."},
        {EntityLabel::ORDINAL,
         "An ordinal position in a sequence, such as first, second, or third."},
        {EntityLabel::CARDINAL,
         "A plain counting number that is not money, a percentage, a date, or a measured "
         "quantity."},
    };
    return defs;
}

std::vector<LabelDefinition> load_label_definitions(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open label definitions file: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        fail(std::string("malformed label definitions JSON: ") + e.what());
    }
    if (!doc.is_object()) fail("label definitions must be a JSON object");

    std::vector<LabelDefinition> defs;
    std::set<EntityLabel> seen;
    for (const auto& [name, gloss] : doc.items()) {
        const auto label = parse_entity_label(name);
        if (!label) fail("unknown entity label in definitions: " + name);
        if (!seen.insert(*label).second) fail("duplicate label in definitions: " + name);
        defs.push_back({*label, gloss.get<std::string>()});
    }
    if (defs.size() != kEntityLabelCount) {
        fail("label definitions must cover all " + std::to_string(kEntityLabelCount) +
             " labels, got " + std::to_string(defs.size()));
    }
    return defs;
}

std::vector<EntityLabel> assign_field_labels(const FieldSpec& field,
                                             const std::vector<LabelDefinition>& defs,
                                             const Embedder& embedder, double threshold,
                                             std::size_t top_k) {
    if (!field.ner_labels.empty()) return field.ner_labels;

    const EmbeddingVector prompt_vec = embedder.embed_one(field.prompt);
    struct Scored {
        EntityLabel label;
        double similarity;
    };
    std::vector<Scored> scored;
    for (const LabelDefinition& def : defs) {
        const double sim = cosine(prompt_vec, embedder.embed_one(def.definition));
        if (sim >= threshold) scored.push_back({def.label, sim});
    }
    std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
        if (a.similarity != b.similarity) return a.similarity > b.similarity;
        return to_string(a.label) < to_string(b.label);
    });
    if (scored.size() > top_k) scored.resize(top_k);

    std::vector<EntityLabel> labels;
    labels.reserve(scored.size());
    for (const Scored& s : scored) labels.push_back(s.label);
    return labels;
}

Template assign_missing_labels(Template t, const std::vector<LabelDefinition>& defs,
                               const Embedder& embedder, double threshold,
                               std::size_t top_k) {
    for (FieldSpec& field : t.fields) {
        if (field.ner_labels.empty()) {
            field.ner_labels = assign_field_labels(field, defs, embedder, threshold, top_k);
        }
    }
    return t;
}

}  // namespace metaforge
