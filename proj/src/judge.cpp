#include "metaforge/judge.hpp"

#include <algorithm>
#include <stdexcept>

namespace metaforge {

namespace {

using nlohmann::json;

void require_matching_keys(const ExtractionResult& agent, const Template& tmpl) {
    if (agent.values.size() != tmpl.fields.size()) {
        throw std::invalid_argument("agent result does not cover the template fields");
    }
    for (const FieldSpec& field : tmpl.fields) {
        if (!agent.values.contains(field.key)) {
            throw std::invalid_argument("agent result is missing field \"" + field.key +
                                        "\"");
        }
    }
}

std::vector<std::string> normalized(const json& value, FieldType type) {
    std::vector<std::string> values = normalize_values(value, type);
    std::sort(values.begin(), values.end());
    return values;
}

MatchRates rates_over(const std::vector<PairRecord>& pairs) {
    MatchRates rates;
    if (pairs.empty()) return rates;
    std::size_t ga = 0, gt = 0, at = 0;
    for (const PairRecord& pair : pairs) {
        const auto agent = normalized(pair.agent_value, pair.type);
        const auto grader = normalized(pair.grader_value, pair.type);
        const auto truth = normalized(json(pair.truth_values), pair.type);
        if (grader == agent) ++ga;
        if (grader == truth) ++gt;
        if (agent == truth) ++at;
    }
    const double denom = static_cast<double>(pairs.size());
    rates.grader_vs_agent = 100.0 * ga / denom;
    rates.grader_vs_gt = 100.0 * gt / denom;
    rates.agent_vs_gt = 100.0 * at / denom;
    return rates;
}

}  // namespace

ToolSchema build_grading_tool_schema(const Template& tmpl) {
    const ToolSchema extraction = build_tool_schema(tmpl);

    ToolSchema schema;
    schema.name = "grade_metadata";
    json properties = json::object();
    std::vector<std::string> required;
    for (const FieldSpec& field : tmpl.fields) {
        json entry;
        entry["type"] = "object";
        entry["properties"]["score"] = {{"type", "number"}, {"minimum", 0}, {"maximum", 1}};
        entry["properties"]["corrected"] = extraction.parameters["properties"][field.key];
        entry["required"] = json::array({"score", "corrected"});
        properties[field.key] = std::move(entry);
        required.push_back(field.key);
    }
    std::sort(required.begin(), required.end());
    schema.parameters = {{"type", "object"},
                         {"properties", std::move(properties)},
                         {"required", required}};
    return schema;
}

Prompt build_grading_prompt(const SelectedContext& context, const Template& tmpl,
                            const ExtractionResult& agent) {
    require_matching_keys(agent, tmpl);
    Prompt prompt = build_prompt(context, tmpl, PromptMode::plain);
    prompt.system_text =
        "You are a meticulous reviewer of metadata extracted from contract documents. "
        "For every field, score the extracted value between 0 and 1 and supply a "
        "corrected value whenever the excerpts support a better answer.";

    std::string review = "\nExtracted values under review:\n";
    for (const FieldSpec& field : tmpl.fields) {
        review += "- " + field.key + ": " + agent.values.at(field.key).dump() + "\n";
    }
    review +=
        "Respond for every field with an object {\"score\": <0..1>, \"corrected\": "
        "<value or null>} keyed by field name.";
    prompt.user_text += review;
    return prompt;
}

GradeReport grade(LLMClient& client, const SelectedContext& context, const Template& tmpl,
                  const ExtractionResult& agent, const JudgeOptions& options) {
    require_matching_keys(agent, tmpl);

    const Prompt prompt = build_grading_prompt(context, tmpl, agent);
    ChatRequest request;
    request.model = options.model;
    request.temperature = options.temperature;
    request.messages = {{"system", prompt.system_text}, {"user", prompt.user_text}};
    request.tools = {build_grading_tool_schema(tmpl)};

    const ChatResponse response = client.complete(request);

    GradeReport report;
    report.agent_values = agent.values;

    json payload;
    if (response.tool_call) {
        report.raw_trace = response.tool_call->arguments_json;
        payload = json::parse(report.raw_trace, nullptr, false);
        if (payload.is_discarded() || !payload.is_object()) {
            throw ParseError("judge tool-call arguments are not a JSON object",
                             {report.raw_trace});
        }
    } else {
        report.raw_trace = response.content;
        const auto found = last_json_object(response.content);
        if (!found) {
            throw ParseError("no JSON object found in judge output", {response.content});
        }
        payload = *found;
    }

    json corrected_payload = json::object();
    for (const FieldSpec& field : tmpl.fields) {
        FieldGrade entry;
        const json* cell =
            payload.contains(field.key) && payload.at(field.key).is_object()
                ? &payload.at(field.key)
                : nullptr;
        if (cell == nullptr) {
            report.diagnostics.push_back(field.key + ": missing from judge response");
            corrected_payload[field.key] = nullptr;
            report.fields[field.key] = entry;
            continue;
        }
        if (cell->contains("score") && cell->at("score").is_number()) {
            entry.score = cell->at("score").get<double>();
            if (entry.score < 0.0 || entry.score > 1.0) {
                report.diagnostics.push_back(field.key + ": score " +
                                             cell->at("score").dump() +
                                             " clamped to [0,1]");
                entry.score = std::clamp(entry.score, 0.0, 1.0);
            }
        } else {
            report.diagnostics.push_back(field.key + ": judge score missing or not a number");
        }
        corrected_payload[field.key] = cell->value("corrected", json(nullptr));
        report.fields[field.key] = entry;
    }

    const ExtractionResult coerced = parse_tool_arguments(corrected_payload.dump(), tmpl);
    for (const FieldSpec& field : tmpl.fields) {
        report.fields[field.key].corrected = coerced.values.at(field.key);
    }
    for (const std::string& diag : coerced.diagnostics) {
        report.diagnostics.push_back("corrected value: " + diag);
    }
    return report;
}

nlohmann::json grade_report_to_json(const GradeReport& report) {
    json fields = json::object();
    for (const auto& [key, entry] : report.fields) {
        fields[key] = {{"score", entry.score}, {"corrected", entry.corrected}};
    }
    return json{{"fields", std::move(fields)},
                {"agent", report.agent_values},
                {"diagnostics", report.diagnostics},
                {"raw_trace", report.raw_trace}};
}

GradeReport grade_report_from_json(const nlohmann::json& j) {
    GradeReport report;
    for (const auto& [key, entry] : j.at("fields").items()) {
        FieldGrade grade;
        grade.score = entry.at("score").get<double>();
        grade.corrected = entry.at("corrected");
        report.fields[key] = grade;
    }
    report.agent_values = j.at("agent");
    report.diagnostics = j.at("diagnostics").get<std::vector<std::string>>();
    report.raw_trace = j.at("raw_trace").get<std::string>();
    return report;
}

HardCaseFilter default_hard_case_filter() {
    return [](const PairRecord& pair) {
        return normalized(pair.agent_value, pair.type) !=
               normalized(json(pair.truth_values), pair.type);
    };
}

MatchRateReport match_rates(const std::map<std::string, GradeReport>& grades,
                            const std::map<std::string, ExtractionResult>& agents,
                            const GroundTruth& truth, const Template& tmpl,
                            const HardCaseFilter& hard_filter) {
    if (grades.size() != agents.size()) {
        throw std::invalid_argument("grade reports and agent results cover different documents");
    }

    std::vector<PairRecord> pairs;
    for (const auto& [doc_id, report] : grades) {
        auto agent = agents.find(doc_id);
        if (agent == agents.end()) {
            throw std::invalid_argument("no agent result for document \"" + doc_id + "\"");
        }
        for (const FieldSpec& field : tmpl.fields) {
            auto graded = report.fields.find(field.key);
            if (graded == report.fields.end() ||
                !agent->second.values.contains(field.key)) {
                throw std::invalid_argument("field \"" + field.key +
                                            "\" missing for document \"" + doc_id + "\"");
            }
            const std::vector<std::string>* truth_values = truth.find(doc_id, field.key);
            if (truth_values == nullptr) {
                throw std::invalid_argument("no ground truth for \"" + doc_id + "/" +
                                            field.key + "\"");
            }
            PairRecord pair;
            pair.doc_id = doc_id;
            pair.field_key = field.key;
            pair.type = field.type;
            pair.agent_value = agent->second.values.at(field.key);
            pair.grader_value = graded->second.corrected;
            pair.truth_values = *truth_values;
            pairs.push_back(std::move(pair));
        }
    }

    MatchRateReport report;
    report.total_pairs = pairs.size();
    report.all = rates_over(pairs);

    std::vector<PairRecord> hard;
    for (const PairRecord& pair : pairs) {
        if (hard_filter(pair)) hard.push_back(pair);
    }
    report.hard_pairs = hard.size();
    report.hard = rates_over(hard);
    return report;
}

}  // namespace metaforge
