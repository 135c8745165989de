#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "metaforge/ner.hpp"
#include "metaforge/template.hpp"

namespace metaforge {

// doc_id -> field key -> acceptable values. An empty list means the correct
// extraction is null.
struct GroundTruth {
    std::map<std::string, std::map<std::string, std::vector<std::string>>> docs;

    const std::vector<std::string>* find(const std::string& doc_id,
                                         const std::string& field_key) const;
};

GroundTruth parse_ground_truth(const std::string& json_text);
GroundTruth load_ground_truth(const std::string& path);
std::string serialize_ground_truth(const GroundTruth& truth);

std::string normalize_value(const std::string& value, FieldType type);

// Null -> empty multiset, scalar -> singleton, array -> element-wise.
std::vector<std::string> normalize_values(const nlohmann::json& value, FieldType type);

struct FieldEval {
    std::string doc_id;
    std::string field_key;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

FieldEval field_f1(const nlohmann::json& extracted,
                   const std::vector<std::string>& truth,
                   FieldType type);

double aggregate_f1(const std::vector<FieldEval>& evals);

nlohmann::json field_eval_to_json(const FieldEval& ev);

// One (doc, field) observation feeding the monitoring report.
struct RunRecord {
    std::string doc_id;
    std::string field_key;
    bool non_null = false;
    std::vector<EntityLabel> labels;
    std::optional<double> judge_score;
};

struct MonitoringReport {
    double success_rate = 0.0;
    std::map<std::string, double> field_type_distribution;
    std::map<std::string, double> quality_by_type;
};

MonitoringReport monitoring_report(const std::vector<RunRecord>& records);

std::string report_to_json(const MonitoringReport& report);
std::string report_to_csv(const MonitoringReport& report);

}  // namespace metaforge
