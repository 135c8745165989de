#include "metaforge/llm.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <cstdio>

namespace metaforge {

namespace {

using nlohmann::json;

std::string fold(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::string collapse_ws(const std::string& s) {
    std::string out;
    bool in_ws = false;
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            in_ws = true;
            continue;
        }
        if (in_ws && !out.empty()) out.push_back(' ');
        in_ws = false;
        out.push_back(c);
    }
    return out;
}

int month_from_name(const std::string& folded) {
    static const std::map<std::string, int> months = {
        {"january", 1},   {"jan", 1},  {"february", 2}, {"feb", 2},  {"march", 3},
        {"mar", 3},       {"april", 4}, {"apr", 4},     {"may", 5},  {"june", 6},
        {"jun", 6},       {"july", 7},  {"jul", 7},     {"august", 8}, {"aug", 8},
        {"september", 9}, {"sep", 9},  {"sept", 9},     {"october", 10}, {"oct", 10},
        {"november", 11}, {"nov", 11}, {"december", 12}, {"dec", 12},
    };
    const auto it = months.find(folded);
    return it == months.end() ? 0 : it->second;
}

bool parse_int(const std::string& s, int& out) {
    if (s.empty() || s.size() > 9) return false;
    out = 0;
    for (char c : s) {
        if (c < '0' || c > '9') return false;
        out = out * 10 + (c - '0');
    }
    return true;
}

std::string iso_date(int year, int month, int day) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month, day);
    return buf;
}

bool plausible(int year, int month, int day) {
    return year >= 1 && year <= 9999 && month >= 1 && month <= 12 && day >= 1 && day <= 31;
}

// strips st/nd/rd/th from a day token like "2nd"
std::string strip_ordinal(std::string tok) {
    const std::string folded = fold(tok);
    for (const char* suffix : {"st", "nd", "rd", "th"}) {
        const std::size_t len = 2;
        if (folded.size() > len && folded.compare(folded.size() - len, len, suffix) == 0 &&
            std::isdigit(static_cast<unsigned char>(folded[0]))) {
            return tok.substr(0, tok.size() - len);
        }
    }
    return tok;
}

}  // namespace

std::string_view to_string(PromptMode mode) {
    return mode == PromptMode::cot ? "cot" : "plain";
}

PromptMode parse_prompt_mode(std::string_view name) {
    if (name == "plain") return PromptMode::plain;
    if (name == "cot") return PromptMode::cot;
    throw std::invalid_argument("unknown prompt mode: " + std::string(name));
}

std::optional<std::string> canonicalize_date(const std::string& raw) {
    const std::string text = collapse_ws(raw);
    if (text.empty()) return std::nullopt;

    // ISO-8601
    if (text.size() == 10 && text[4] == '-' && text[7] == '-') {
        int y, m, d;
        if (parse_int(text.substr(0, 4), y) && parse_int(text.substr(5, 2), m) &&
            parse_int(text.substr(8, 2), d) && plausible(y, m, d)) {
            return iso_date(y, m, d);
        }
        return std::nullopt;
    }

    // month-first slash form
    {
        const auto s1 = text.find('/');
        const auto s2 = text.find('/', s1 == std::string::npos ? s1 : s1 + 1);
        if (s1 != std::string::npos && s2 != std::string::npos &&
            text.find('/', s2 + 1) == std::string::npos) {
            int m, d, y;
            if (parse_int(text.substr(0, s1), m) &&
                parse_int(text.substr(s1 + 1, s2 - s1 - 1), d) &&
                parse_int(text.substr(s2 + 1), y)) {
                if (y < 100) y += 2000;
                if (plausible(y, m, d)) return iso_date(y, m, d);
            }
            return std::nullopt;
        }
    }

    // word forms; punctuation tokens (commas, periods) drop out
    std::vector<std::string> words;
    for (const std::string& tok : tokenize(text)) {
        if (tok.size() == 1 && !std::isalnum(static_cast<unsigned char>(tok[0]))) continue;
        words.push_back(tok);
    }
    // "24th of March 2024" -> drop the connective
    words.erase(std::remove_if(words.begin(), words.end(),
                               [](const std::string& w) { return fold(w) == "of"; }),
                words.end());
    if (words.size() != 3) return std::nullopt;

    int y = 0;
    if (!parse_int(words[2], y)) return std::nullopt;

    int m = month_from_name(fold(words[0]));
    if (m != 0) {  // "March 24, 2024" / "February 2nd, 2024"
        int d;
        if (parse_int(strip_ordinal(words[1]), d) && plausible(y, m, d)) {
            return iso_date(y, m, d);
        }
        return std::nullopt;
    }
    m = month_from_name(fold(words[1]));
    if (m != 0) {  // "24 March 2024"
        int d;
        if (parse_int(strip_ordinal(words[0]), d) && plausible(y, m, d)) {
            return iso_date(y, m, d);
        }
    }
    return std::nullopt;
}

ToolSchema build_tool_schema(const Template& tmpl) {
    json properties = json::object();
    std::vector<std::string> keys;
    for (const FieldSpec& field : tmpl.fields) {
        json prop;
        switch (field.type) {
            case FieldType::string:
                prop = {{"type", "string"}};
                break;
            case FieldType::integer:
                prop = {{"type", "integer"}};
                break;
            case FieldType::number:
                prop = {{"type", "number"}};
                break;
            case FieldType::date:
                prop = {{"type", "string"}, {"format", "date"}};
                break;
            case FieldType::enumeration:
                prop = {{"type", "string"}, {"enum", field.options}};
                break;
            case FieldType::multi_select:
                prop = {{"type", "array"},
                        {"items", {{"type", "string"}, {"enum", field.options}}}};
                break;
            case FieldType::array:
                prop = {{"type", "array"}, {"items", {{"type", "string"}}}};
                break;
        }
        properties[field.key] = std::move(prop);
        keys.push_back(field.key);
    }
    std::sort(keys.begin(), keys.end());

    ToolSchema schema;
    schema.name = "extract_metadata";
    schema.parameters = {
        {"type", "object"}, {"properties", std::move(properties)}, {"required", keys}};
    return schema;
}

std::string canonical_tool_json(const ToolSchema& schema) {
    const json doc = {{"name", schema.name}, {"parameters", schema.parameters}};
    return doc.dump();
}

std::size_t count_non_null(const ExtractionResult& result) {
    std::size_t n = 0;
    for (const auto& [key, value] : result.values.items()) {
        (void)key;
        if (!value.is_null()) ++n;
    }
    return n;
}

Prompt build_prompt(const SelectedContext& context, const Template& tmpl, PromptMode mode,
                    const std::optional<ExtractionResult>& prior) {
    if (context.chunks.empty()) {
        throw std::invalid_argument("cannot build a prompt from an empty context");
    }

    Prompt prompt;
    prompt.mode = mode;
    prompt.system_text =
        "You are a careful metadata extraction assistant for contract documents. "
        "Extract the requested fields from the provided excerpts only; never invent "
        "values. Use null for any field the text does not determine. Answer with a "
        "single JSON object whose keys are exactly the field keys.";

    std::ostringstream user;
    user << "Fields to extract:\n";
    for (const FieldSpec& field : tmpl.fields) {
        user << "- " << field.key << " (" << to_string(field.type) << "): " << field.prompt;
        if (!field.options.empty()) {
            user << " Options: [";
            for (std::size_t i = 0; i < field.options.size(); ++i) {
                if (i) user << ", ";
                user << field.options[i];
            }
            user << "]";
        }
        user << "\n";
    }

    user << "\nDocument excerpts:\n";
    for (const Chunk& chunk : context.chunks) {
        user << "--- Chunk " << chunk.index << " ---\n" << chunk.text << "\n";
    }

    if (prior) {
        user << "\nPreviously extracted values (keep each one unless the excerpts "
                "contradict it):\n";
        std::vector<std::string> missing;
        for (const FieldSpec& field : tmpl.fields) {
            const auto it = prior->values.find(field.key);
            if (it == prior->values.end() || it->is_null()) {
                missing.push_back(field.key);
            } else {
                user << "- " << field.key << ": " << it->dump() << "\n";
            }
        }
        user << "Still missing, fill these if the excerpts allow: ";
        for (std::size_t i = 0; i < missing.size(); ++i) {
            if (i) user << ", ";
            user << missing[i];
        }
        user << "\n";
    }

    if (mode == PromptMode::cot) {
        user << "\nReason step by step first. Put every reasoning step inside its own "
                "<thinking> ... </thinking> block, then write the final JSON object "
                "after the last closing tag.";
    }

    prompt.user_text = user.str();
    return prompt;
}

namespace {

// Pulls <thinking> ... </thinking> segments out of the text, returning the
// remainder. An unclosed block swallows the rest of the text.
std::string extract_thinking(const std::string& text, std::vector<std::string>& trace) {
    static const std::string open = "<thinking>";
    static const std::string close = "</thinking>";
    std::string rest;
    std::size_t pos = 0;
    while (true) {
        const std::size_t at = text.find(open, pos);
        if (at == std::string::npos) {
            rest += text.substr(pos);
            break;
        }
        rest += text.substr(pos, at - pos);
        const std::size_t body = at + open.size();
        const std::size_t end = text.find(close, body);
        if (end == std::string::npos) {
            trace.push_back(collapse_ws(text.substr(body)));
            break;
        }
        trace.push_back(collapse_ws(text.substr(body, end - body)));
        pos = end + close.size();
    }
    return rest;
}

// Top-level balanced {...} spans, string-aware. Candidates are tried from the
// last one backwards.
std::vector<std::string> json_object_candidates(const std::string& text) {
    std::vector<std::string> found;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        if (text[i] != '{') {
            ++i;
            continue;
        }
        int depth = 0;
        bool in_string = false;
        bool matched = false;
        for (std::size_t j = i; j < n; ++j) {
            const char c = text[j];
            if (in_string) {
                if (c == '\\') {
                    ++j;
                } else if (c == '"') {
                    in_string = false;
                }
                continue;
            }
            if (c == '"') {
                in_string = true;
            } else if (c == '{') {
                ++depth;
            } else if (c == '}') {
                --depth;
                if (depth == 0) {
                    found.push_back(text.substr(i, j - i + 1));
                    i = j + 1;
                    matched = true;
                    break;
                }
            }
        }
        if (!matched) ++i;  // unbalanced opener: step inside and rescan
    }
    return found;
}

json coerce_array_of_strings(const json& value, const FieldSpec& field,
                             std::vector<std::string>& diagnostics) {
    if (!value.is_array()) {
        diagnostics.push_back(field.key + ": expected an array");
        return nullptr;
    }
    std::vector<std::string> items;
    for (const auto& item : value) {
        if (!item.is_string()) {
            diagnostics.push_back(field.key + ": array items must be strings");
            return nullptr;
        }
        items.push_back(item.get<std::string>());
    }
    if (field.type == FieldType::multi_select) {
        std::set<std::string> seen;
        for (const std::string& item : items) {
            if (std::find(field.options.begin(), field.options.end(), item) ==
                field.options.end()) {
                diagnostics.push_back(field.key + ": value not in options: " + item);
                return nullptr;
            }
            if (!seen.insert(item).second) {
                diagnostics.push_back(field.key + ": duplicate option: " + item);
                return nullptr;
            }
        }
    }
    return json(items);
}

json coerce_field(const json& value, const FieldSpec& field,
                  std::vector<std::string>& diagnostics) {
    if (value.is_null()) return nullptr;
    switch (field.type) {
        case FieldType::string:
            if (value.is_string()) return value;
            diagnostics.push_back(field.key + ": expected a string");
            return nullptr;
        case FieldType::date: {
            if (!value.is_string()) {
                diagnostics.push_back(field.key + ": expected a date string");
                return nullptr;
            }
            const auto iso = canonicalize_date(value.get<std::string>());
            if (!iso) {
                diagnostics.push_back(field.key + ": unparseable date: " +
                                      value.get<std::string>());
                return nullptr;
            }
            return json(*iso);
        }
        case FieldType::integer: {
            if (value.is_number_integer()) return value;
            if (value.is_number_float()) {
                const double d = value.get<double>();
                if (d == static_cast<double>(static_cast<long long>(d))) {
                    return json(static_cast<long long>(d));
                }
            }
            diagnostics.push_back(field.key + ": expected an integer");
            return nullptr;
        }
        case FieldType::number:
            if (value.is_number()) return value;
            diagnostics.push_back(field.key + ": expected a number");
            return nullptr;
        case FieldType::enumeration: {
            if (!value.is_string()) {
                diagnostics.push_back(field.key + ": expected one of the options");
                return nullptr;
            }
            const std::string s = value.get<std::string>();
            if (std::find(field.options.begin(), field.options.end(), s) ==
                field.options.end()) {
                diagnostics.push_back(field.key + ": value not in options: " + s);
                return nullptr;
            }
            return value;
        }
        case FieldType::multi_select:
        case FieldType::array:
            return coerce_array_of_strings(value, field, diagnostics);
    }
    return nullptr;
}

ExtractionResult coerce_payload(const json& payload, const Template& tmpl) {
    ExtractionResult result;
    for (const FieldSpec& field : tmpl.fields) {
        if (!payload.contains(field.key)) {
            result.values[field.key] = nullptr;
            result.diagnostics.push_back(field.key + ": missing from response");
            continue;
        }
        result.values[field.key] =
            coerce_field(payload.at(field.key), field, result.diagnostics);
    }
    return result;
}

}  // namespace

std::optional<nlohmann::json> last_json_object(const std::string& text) {
    const std::vector<std::string> candidates = json_object_candidates(text);
    for (auto it = candidates.rbegin(); it != candidates.rend(); ++it) {
        json payload = json::parse(*it, nullptr, false);
        if (!payload.is_discarded() && payload.is_object()) return payload;
    }
    return std::nullopt;
}

ExtractionResult parse_response(const std::string& raw, const Template& tmpl) {
    std::vector<std::string> trace;
    const std::string stripped = extract_thinking(raw, trace);

    const std::vector<std::string> candidates = json_object_candidates(stripped);
    for (auto it = candidates.rbegin(); it != candidates.rend(); ++it) {
        json payload = json::parse(*it, nullptr, false);
        if (payload.is_discarded() || !payload.is_object()) continue;
        ExtractionResult result = coerce_payload(payload, tmpl);
        result.thinking_trace = std::move(trace);
        return result;
    }
    throw ParseError("no JSON object found in model output", {raw});
}

ExtractionResult parse_tool_arguments(const std::string& arguments_json,
                                      const Template& tmpl) {
    json payload = json::parse(arguments_json, nullptr, false);
    if (payload.is_discarded() || !payload.is_object()) {
        throw ParseError("tool-call arguments are not a JSON object", {arguments_json});
    }
    return coerce_payload(payload, tmpl);
}

ExtractionResult parse_chat(const ChatResponse& response, const Template& tmpl) {
    if (response.tool_call) {
        return parse_tool_arguments(response.tool_call->arguments_json, tmpl);
    }
    return parse_response(response.content, tmpl);
}

// --- transport ---------------------------------------------------------------

std::string canonical_request_json(const ChatRequest& request) {
    json doc;
    doc["model"] = request.model;
    doc["temperature"] = request.temperature;
    doc["messages"] = json::array();
    for (const ChatMessage& msg : request.messages) {
        doc["messages"].push_back({{"role", msg.role}, {"content", msg.content}});
    }
    if (!request.tools.empty()) {
        doc["tools"] = json::array();
        for (const ToolSchema& tool : request.tools) {
            doc["tools"].push_back(
                {{"type", "function"},
                 {"function", {{"name", tool.name}, {"parameters", tool.parameters}}}});
        }
    }
    return doc.dump();
}

std::string request_fingerprint(const ChatRequest& request) {
    const std::string body = canonical_request_json(request);
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : body) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void MockClient::script(const std::string& fingerprint, ChatResponse response) {
    std::lock_guard<std::mutex> lock(mutex_);
    by_fingerprint_[fingerprint] = std::move(response);
}

void MockClient::script_next(ChatResponse response) {
    std::lock_guard<std::mutex> lock(mutex_);
    queue_.push_back(std::move(response));
}

ChatResponse MockClient::complete(const ChatRequest& request) {
    std::lock_guard<std::mutex> lock(mutex_);
    ++calls_;
    const auto it = by_fingerprint_.find(request_fingerprint(request));
    if (it != by_fingerprint_.end()) return it->second;
    if (queue_pos_ < queue_.size()) return queue_[queue_pos_++];
    if (fallback_) return fallback_(request);
    throw std::runtime_error("mock client has no response for request " +
                             request_fingerprint(request));
}

std::size_t MockClient::call_count() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return calls_;
}

namespace {

json response_to_json(const ChatResponse& response) {
    json doc;
    doc["content"] = response.content;
    if (response.tool_call) {
        doc["tool_call"] = {{"name", response.tool_call->name},
                            {"arguments", response.tool_call->arguments_json}};
    }
    return doc;
}

ChatResponse response_from_json(const json& doc) {
    ChatResponse response;
    response.content = doc.value("content", std::string());
    if (doc.contains("tool_call")) {
        response.tool_call = ToolCall{doc["tool_call"].at("name").get<std::string>(),
                                      doc["tool_call"].at("arguments").get<std::string>()};
    }
    return response;
}

}  // namespace

ChatResponse ReplayClient::complete(const ChatRequest& request) {
    const std::filesystem::path path =
        std::filesystem::path(dir_) / (request_fingerprint(request) + ".json");
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("no recorded response for request fingerprint " +
                                 request_fingerprint(request) + " in " + dir_);
    }
    json doc;
    in >> doc;
    return response_from_json(doc);
}

ChatResponse RecordingClient::complete(const ChatRequest& request) {
    const ChatResponse response = inner_.complete(request);
    std::filesystem::create_directories(dir_);
    const std::filesystem::path path =
        std::filesystem::path(dir_) / (request_fingerprint(request) + ".json");
    std::ofstream out(path);
    out << response_to_json(response).dump(2) << "\n";
    return response;
}

// --- orchestration -----------------------------------------------------------

ChatRequest make_chat_request(const Prompt& prompt, const Template& tmpl,
                              const ExtractOptions& opts) {
    ChatRequest request;
    request.model = opts.model;
    request.temperature = opts.temperature;
    request.messages.push_back({"system", prompt.system_text});
    request.messages.push_back({"user", prompt.user_text});
    if (opts.tool_use) request.tools.push_back(build_tool_schema(tmpl));
    return request;
}

ExtractionResult extract_with_retry(LLMClient& client, const SelectedContext& context,
                                    const Template& tmpl, const ExtractOptions& opts) {
    ExtractionResult current;
    bool have_result = false;
    std::vector<std::string> raw_failures;

    for (std::size_t attempt = 0; attempt <= opts.max_retries; ++attempt) {
        if (have_result && count_non_null(current) == tmpl.fields.size()) break;

        const Prompt prompt =
            build_prompt(context, tmpl, opts.mode,
                         have_result ? std::optional<ExtractionResult>(current)
                                     : std::nullopt);
        const ChatRequest request = make_chat_request(prompt, tmpl, opts);
        const ChatResponse response = client.complete(request);

        ExtractionResult parsed;
        try {
            parsed = parse_chat(response, tmpl);
        } catch (const ParseError& e) {
            raw_failures.insert(raw_failures.end(), e.raw_responses.begin(),
                                e.raw_responses.end());
            continue;
        }

        if (!have_result) {
            current = std::move(parsed);
        } else {
            for (const FieldSpec& field : tmpl.fields) {
                const json& incoming = parsed.values.at(field.key);
                if (!incoming.is_null()) current.values[field.key] = incoming;
            }
            current.thinking_trace.insert(current.thinking_trace.end(),
                                          parsed.thinking_trace.begin(),
                                          parsed.thinking_trace.end());
            current.diagnostics.insert(current.diagnostics.end(),
                                       parsed.diagnostics.begin(),
                                       parsed.diagnostics.end());
        }
        current.attempt = static_cast<int>(attempt);
        have_result = true;
    }

    if (!have_result) {
        throw ParseError("every attempt failed to produce a parseable response",
                         raw_failures);
    }
    current.strategy_tag = opts.strategy_tag;
    return current;
}

}  // namespace metaforge
