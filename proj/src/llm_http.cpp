#include "metaforge/llm.hpp"

#include <chrono>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace metaforge {

namespace {

struct SplitUrl {
    std::string base;
    std::string path;
};

SplitUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw std::invalid_argument("endpoint must include a scheme: " + url);
    }
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

class HttpLLMClient final : public LLMClient {
public:
    explicit HttpLLMClient(HttpLLMConfig config)
        : config_(std::move(config)), url_(split_url(config_.endpoint)) {}

    ChatResponse complete(const ChatRequest& request) override {
        const std::string payload = canonical_request_json(request);

        std::size_t attempt = 0;
        std::string last_error;
        while (attempt <= config_.max_retries) {
            if (attempt > 0) {
                std::this_thread::sleep_for(std::chrono::milliseconds(
                    config_.backoff_initial_ms << (attempt - 1)));
            }
            ++attempt;

            httplib::Client client(url_.base);
            client.set_read_timeout(120, 0);
            httplib::Headers headers;
            if (!config_.api_key.empty()) {
                headers.emplace("Authorization", "Bearer " + config_.api_key);
            }
            auto res = client.Post(url_.path, headers, payload, "application/json");

            if (!res) {
                last_error = "transport error: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status == 429 || res->status >= 500) {
                last_error = "HTTP " + std::to_string(res->status);
                continue;
            }
            if (res->status != 200) {
                throw std::runtime_error("chat provider returned HTTP " +
                                         std::to_string(res->status) + ": " + res->body);
            }
            return parse_completion(res->body);
        }
        throw std::runtime_error("chat provider unreachable after " +
                                 std::to_string(attempt) + " attempts (" + last_error +
                                 ")");
    }

private:
    static ChatResponse parse_completion(const std::string& body) {
        const nlohmann::json doc = nlohmann::json::parse(body);
        const auto& choices = doc.at("choices");
        if (!choices.is_array() || choices.empty()) {
            throw std::runtime_error("chat provider returned no choices");
        }
        const auto& message = choices.at(0).at("message");

        ChatResponse response;
        if (message.contains("content") && message["content"].is_string()) {
            response.content = message["content"].get<std::string>();
        }
        if (message.contains("tool_calls") && message["tool_calls"].is_array() &&
            !message["tool_calls"].empty()) {
            const auto& call = message["tool_calls"].at(0).at("function");
            response.tool_call =
                ToolCall{call.at("name").get<std::string>(),
                         call.at("arguments").get<std::string>()};
        }
        return response;
    }

    HttpLLMConfig config_;
    SplitUrl url_;
};

}  // namespace

std::unique_ptr<LLMClient> make_http_llm_client(const HttpLLMConfig& config) {
    return std::make_unique<HttpLLMClient>(config);
}

}  // namespace metaforge
