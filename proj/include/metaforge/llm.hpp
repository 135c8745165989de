#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "metaforge/select.hpp"
#include "metaforge/template.hpp"

namespace metaforge {

enum class PromptMode { plain, cot };

std::string_view to_string(PromptMode mode);
PromptMode parse_prompt_mode(std::string_view name);

struct Prompt {
    std::string system_text;
    std::string user_text;
    PromptMode mode = PromptMode::plain;
};

/// The function-calling contract: one property per field key, every key
/// required. Shape mirrors the usual chat-completion tool definition.
struct ToolSchema {
    std::string name;
    nlohmann::json parameters;
};

ToolSchema build_tool_schema(const Template& tmpl);

/// Sorted-key dump; two templates with the same fields serialize identically
/// regardless of declaration order.
std::string canonical_tool_json(const ToolSchema& schema);

struct ExtractionResult {
    nlohmann::json values = nlohmann::json::object();  // key -> typed value or null
    std::vector<std::string> thinking_trace;
    std::vector<std::string> diagnostics;
    int attempt = 0;
    std::string strategy_tag;
};

std::size_t count_non_null(const ExtractionResult& result);

/// "March 24, 2024", "February 2nd, 2024", "24 March 2024", "2024-03-24" and
/// month-first "03/24/2024" all map to ISO-8601; anything else is nullopt.
std::optional<std::string> canonicalize_date(const std::string& raw);

/// Renders the extraction prompt. Every selected chunk appears exactly once,
/// in document order, labeled with its index. CoT mode asks for reasoning in
/// <thinking> blocks; a prior result adds a keep-and-fill section.
Prompt build_prompt(const SelectedContext& context, const Template& tmpl, PromptMode mode,
                    const std::optional<ExtractionResult>& prior = std::nullopt);

struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& message,
                        std::vector<std::string> raw = {})
        : std::runtime_error(message), raw_responses(std::move(raw)) {}

    std::vector<std::string> raw_responses;
};

// last parseable top-level JSON object in free text, if any
std::optional<nlohmann::json> last_json_object(const std::string& text);

/// Free-text path: captures <thinking> segments, then parses the last
/// top-level JSON object of the remaining text and coerces each field.
/// Throws ParseError when no JSON object can be recovered at all.
ExtractionResult parse_response(const std::string& raw, const Template& tmpl);

/// Tool path: arguments JSON -> coerced result. Nonconforming values become
/// nulls with diagnostics; only unparseable JSON throws.
ExtractionResult parse_tool_arguments(const std::string& arguments_json,
                                      const Template& tmpl);

// --- transport -------------------------------------------------------------

struct ChatMessage {
    std::string role;
    std::string content;
};

struct ChatRequest {
    std::string model;
    std::vector<ChatMessage> messages;
    std::vector<ToolSchema> tools;  // empty = no tool calling
    double temperature = 0.0;
};

struct ToolCall {
    std::string name;
    std::string arguments_json;
};

struct ChatResponse {
    std::string content;
    std::optional<ToolCall> tool_call;
};

std::string canonical_request_json(const ChatRequest& request);
/// FNV-1a 64 hex digest of the canonical request body; the fixture key.
std::string request_fingerprint(const ChatRequest& request);

/// Tool-call arguments win over free text.
ExtractionResult parse_chat(const ChatResponse& response, const Template& tmpl);

class LLMClient {
public:
    virtual ~LLMClient() = default;
    virtual ChatResponse complete(const ChatRequest& request) = 0;
};

/// Scripted client for hermetic tests. Lookup order: exact fingerprint,
/// then the FIFO queue, then the fallback responder.
class MockClient : public LLMClient {
public:
    using Responder = std::function<ChatResponse(const ChatRequest&)>;

    MockClient() = default;
    explicit MockClient(Responder fallback) : fallback_(std::move(fallback)) {}

    void script(const std::string& fingerprint, ChatResponse response);
    void script_next(ChatResponse response);

    ChatResponse complete(const ChatRequest& request) override;

    std::size_t call_count() const;

private:
    mutable std::mutex mutex_;
    std::map<std::string, ChatResponse> by_fingerprint_;
    std::vector<ChatResponse> queue_;
    std::size_t queue_pos_ = 0;
    Responder fallback_;
    std::size_t calls_ = 0;
};

/// Serves recorded responses from <dir>/<fingerprint>.json files.
class ReplayClient : public LLMClient {
public:
    explicit ReplayClient(std::string fixture_dir) : dir_(std::move(fixture_dir)) {}
    ChatResponse complete(const ChatRequest& request) override;

private:
    std::string dir_;
};

/// Pass-through wrapper that records fixtures ReplayClient can serve.
class RecordingClient : public LLMClient {
public:
    RecordingClient(LLMClient& inner, std::string fixture_dir)
        : inner_(inner), dir_(std::move(fixture_dir)) {}
    ChatResponse complete(const ChatRequest& request) override;

private:
    LLMClient& inner_;
    std::string dir_;
};

struct HttpLLMConfig {
    std::string endpoint;  // e.g. http://host:port/v1/chat/completions
    std::string api_key;
    std::size_t max_retries = 3;
    std::size_t backoff_initial_ms = 100;
};

std::unique_ptr<LLMClient> make_http_llm_client(const HttpLLMConfig& config);

// --- orchestration ----------------------------------------------------------

struct ExtractOptions {
    PromptMode mode = PromptMode::plain;
    bool tool_use = false;
    std::size_t max_retries = 0;
    std::string model = "default";
    double temperature = 0.0;
    std::string strategy_tag;
};

ChatRequest make_chat_request(const Prompt& prompt, const Template& tmpl,
                              const ExtractOptions& opts);

/// Attempt 0 runs without a prior; while any field is null and retries
/// remain, re-asks with the current result attached. Non-null values survive
/// a merge unless the retry answers differently, so non-null coverage never
/// drops. Throws ParseError carrying every raw response only when all
/// attempts fail to parse.
ExtractionResult extract_with_retry(LLMClient& client, const SelectedContext& context,
                                    const Template& tmpl, const ExtractOptions& opts);

}  // namespace metaforge
