#include "metaforge/eval.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "metaforge/llm.hpp"

namespace metaforge {

namespace {

using nlohmann::json;

std::string fold_collapse(const std::string& value) {
    std::string out;
    out.reserve(value.size());
    bool pending_space = false;
    for (unsigned char ch : value) {
        if (std::isspace(ch)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(static_cast<char>(std::tolower(ch)));
    }
    return out;
}

void erase_all(std::string& s, const std::string& needle) {
    std::size_t pos = 0;
    while ((pos = s.find(needle, pos)) != std::string::npos) {
        s.erase(pos, needle.size());
    }
}

std::string normalize_number(const std::string& value) {
    std::string s = fold_collapse(value);
    erase_all(s, "$");
    erase_all(s, "\xe2\x82\xac");  // euro sign
    erase_all(s, "\xc2\xa3");      // pound sign
    // drop thousands separators: commas squeezed between digits
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == ',' && i > 0 && i + 1 < s.size() &&
            std::isdigit(static_cast<unsigned char>(s[i - 1])) &&
            std::isdigit(static_cast<unsigned char>(s[i + 1]))) {
            continue;
        }
        out.push_back(s[i]);
    }
    // the currency strip can leave stray edge spaces
    while (!out.empty() && out.front() == ' ') out.erase(out.begin());
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

FieldType scalar_type(FieldType type) {
    if (type == FieldType::array || type == FieldType::multi_select) {
        return FieldType::string;
    }
    return type;
}

std::string json_scalar_to_string(const json& value) {
    if (value.is_string()) return value.get<std::string>();
    return value.dump();
}

std::map<std::string, std::size_t> multiset(const std::vector<std::string>& values) {
    std::map<std::string, std::size_t> counts;
    for (const std::string& v : values) ++counts[v];
    return counts;
}

}  // namespace

const std::vector<std::string>* GroundTruth::find(const std::string& doc_id,
                                                  const std::string& field_key) const {
    auto doc = docs.find(doc_id);
    if (doc == docs.end()) return nullptr;
    auto field = doc->second.find(field_key);
    if (field == doc->second.end()) return nullptr;
    return &field->second;
}

GroundTruth parse_ground_truth(const std::string& json_text) {
    json root = json::parse(json_text, nullptr, false);
    if (root.is_discarded() || !root.is_object()) {
        throw std::runtime_error("ground truth must be a JSON object keyed by document id");
    }
    GroundTruth truth;
    for (const auto& [doc_id, fields] : root.items()) {
        if (doc_id.empty()) throw std::runtime_error("ground truth document id is empty");
        if (!fields.is_object()) {
            throw std::runtime_error("ground truth entry for \"" + doc_id +
                                     "\" must be an object of field values");
        }
        auto& doc = truth.docs[doc_id];
        for (const auto& [key, value] : fields.items()) {
            if (key.empty()) {
                throw std::runtime_error("ground truth field key is empty in \"" + doc_id + "\"");
            }
            std::vector<std::string> values;
            if (value.is_null()) {
                // empty list: correct answer is no extraction
            } else if (value.is_string()) {
                values.push_back(value.get<std::string>());
            } else if (value.is_array()) {
                for (const json& item : value) {
                    if (!item.is_string()) {
                        throw std::runtime_error("ground truth values for \"" + doc_id + "/" +
                                                 key + "\" must be strings");
                    }
                    values.push_back(item.get<std::string>());
                }
            } else {
                throw std::runtime_error("ground truth value for \"" + doc_id + "/" + key +
                                         "\" must be a string, array, or null");
            }
            doc[key] = std::move(values);
        }
    }
    return truth;
}

GroundTruth load_ground_truth(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open ground truth file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_ground_truth(buffer.str());
}

std::string serialize_ground_truth(const GroundTruth& truth) {
    json root = json::object();
    for (const auto& [doc_id, fields] : truth.docs) {
        json doc = json::object();
        for (const auto& [key, values] : fields) doc[key] = values;
        root[doc_id] = std::move(doc);
    }
    return root.dump(2);
}

std::string normalize_value(const std::string& value, FieldType type) {
    switch (type) {
        case FieldType::date: {
            if (auto iso = canonicalize_date(value)) return *iso;
            return fold_collapse(value);
        }
        case FieldType::integer:
        case FieldType::number:
            return normalize_number(value);
        default:
            return fold_collapse(value);
    }
}

std::vector<std::string> normalize_values(const nlohmann::json& value, FieldType type) {
    std::vector<std::string> out;
    if (value.is_null()) return out;
    if (value.is_array()) {
        for (const json& item : value) {
            if (item.is_null()) continue;
            out.push_back(normalize_value(json_scalar_to_string(item), scalar_type(type)));
        }
        return out;
    }
    out.push_back(normalize_value(json_scalar_to_string(value), scalar_type(type)));
    return out;
}

FieldEval field_f1(const nlohmann::json& extracted,
                   const std::vector<std::string>& truth,
                   FieldType type) {
    FieldEval ev;
    const std::vector<std::string> got = normalize_values(extracted, type);
    std::vector<std::string> want;
    want.reserve(truth.size());
    for (const std::string& t : truth) want.push_back(normalize_value(t, scalar_type(type)));

    if (got.empty() && want.empty()) {
        ev.precision = ev.recall = ev.f1 = 1.0;
        return ev;
    }

    const auto got_counts = multiset(got);
    const auto want_counts = multiset(want);
    std::size_t correct = 0;
    for (const auto& [v, n] : got_counts) {
        auto it = want_counts.find(v);
        if (it != want_counts.end()) correct += std::min(n, it->second);
    }

    ev.precision = got.empty() ? 0.0 : static_cast<double>(correct) / got.size();
    ev.recall = want.empty() ? 0.0 : static_cast<double>(correct) / want.size();
    const double denom = ev.precision + ev.recall;
    ev.f1 = denom > 0.0 ? 2.0 * ev.precision * ev.recall / denom : 0.0;
    return ev;
}

double aggregate_f1(const std::vector<FieldEval>& evals) {
    if (evals.empty()) throw std::invalid_argument("aggregate_f1 needs at least one field eval");
    double sum = 0.0;
    for (const FieldEval& ev : evals) sum += ev.f1;
    return sum / static_cast<double>(evals.size());
}

nlohmann::json field_eval_to_json(const FieldEval& ev) {
    return json{{"doc_id", ev.doc_id},
                {"field", ev.field_key},
                {"precision", ev.precision},
                {"recall", ev.recall},
                {"f1", ev.f1}};
}

MonitoringReport monitoring_report(const std::vector<RunRecord>& records) {
    MonitoringReport report;
    if (records.empty()) return report;

    std::size_t non_null = 0;
    std::map<std::string, std::size_t> bucket_counts;
    std::map<std::string, std::pair<double, std::size_t>> bucket_scores;
    for (const RunRecord& rec : records) {
        if (rec.non_null) ++non_null;
        const std::string bucket =
            rec.labels.empty() ? "OTHER" : std::string(to_string(rec.labels.front()));
        ++bucket_counts[bucket];
        if (rec.judge_score) {
            auto& [sum, n] = bucket_scores[bucket];
            sum += *rec.judge_score;
            ++n;
        }
    }

    report.success_rate = static_cast<double>(non_null) / records.size();
    for (const auto& [bucket, count] : bucket_counts) {
        report.field_type_distribution[bucket] =
            static_cast<double>(count) / records.size();
    }
    for (const auto& [bucket, acc] : bucket_scores) {
        report.quality_by_type[bucket] = acc.first / static_cast<double>(acc.second);
    }
    return report;
}

std::string report_to_json(const MonitoringReport& report) {
    json root;
    root["success_rate"] = report.success_rate;
    root["field_type_distribution"] = report.field_type_distribution;
    root["quality_by_type"] = report.quality_by_type;
    return root.dump(2);
}

std::string report_to_csv(const MonitoringReport& report) {
    std::ostringstream out;
    out << "metric,bucket,value\n";
    char buf[64];
    auto fmt = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.6f", v);
        return std::string(buf);
    };
    out << "success_rate,," << fmt(report.success_rate) << "\n";
    for (const auto& [bucket, share] : report.field_type_distribution) {
        out << "share," << bucket << "," << fmt(share) << "\n";
    }
    for (const auto& [bucket, quality] : report.quality_by_type) {
        out << "quality," << bucket << "," << fmt(quality) << "\n";
    }
    return out.str();
}

}  // namespace metaforge
