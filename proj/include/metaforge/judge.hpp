#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "metaforge/eval.hpp"
#include "metaforge/llm.hpp"
#include "metaforge/select.hpp"
#include "metaforge/template.hpp"

namespace metaforge {

struct FieldGrade {
    double score = 0.0;           // clamped to [0,1]
    nlohmann::json corrected;     // judge's value, possibly null or == agent's
};

struct GradeReport {
    std::map<std::string, FieldGrade> fields;  // key set == template key set
    nlohmann::json agent_values;               // the graded values, untouched
    std::vector<std::string> diagnostics;
    std::string raw_trace;
};

ToolSchema build_grading_tool_schema(const Template& tmpl);

// Same context the extraction agent saw, plus its answers.
Prompt build_grading_prompt(const SelectedContext& context, const Template& tmpl,
                            const ExtractionResult& agent);

struct JudgeOptions {
    std::string model = "default";
    double temperature = 0.0;
};

GradeReport grade(LLMClient& client, const SelectedContext& context, const Template& tmpl,
                  const ExtractionResult& agent, const JudgeOptions& options = {});

nlohmann::json grade_report_to_json(const GradeReport& report);
GradeReport grade_report_from_json(const nlohmann::json& j);

struct PairRecord {
    std::string doc_id;
    std::string field_key;
    FieldType type = FieldType::string;
    nlohmann::json agent_value;
    nlohmann::json grader_value;
    std::vector<std::string> truth_values;
};

using HardCaseFilter = std::function<bool(const PairRecord&)>;

// pairs where the agent missed the ground truth
HardCaseFilter default_hard_case_filter();

struct MatchRates {
    double grader_vs_agent = 0.0;  // percentages
    double grader_vs_gt = 0.0;
    double agent_vs_gt = 0.0;
};

struct MatchRateReport {
    MatchRates all;
    MatchRates hard;
    std::size_t total_pairs = 0;
    std::size_t hard_pairs = 0;
};

// Values match when their normalized multisets are equal. All three inputs
// must cover the same (doc, field) pairs.
MatchRateReport match_rates(const std::map<std::string, GradeReport>& grades,
                            const std::map<std::string, ExtractionResult>& agents,
                            const GroundTruth& truth, const Template& tmpl,
                            const HardCaseFilter& hard_filter = default_hard_case_filter());

}  // namespace metaforge
