#include "metaforge/embed.hpp"

#include <chrono>
#include <semaphore>
#include <stdexcept>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace metaforge {

namespace {

struct SplitUrl {
    std::string base;  // scheme://host:port
    std::string path;  // /route
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

class HttpEmbedder final : public Embedder {
public:
    explicit HttpEmbedder(HttpEmbedderConfig config)
        : config_(std::move(config)),
          url_(split_url(config_.endpoint)),
          in_flight_(static_cast<std::ptrdiff_t>(
              config_.max_in_flight == 0 ? 1 : config_.max_in_flight)) {}

    std::size_t dimension() const override { return config_.dimension; }

    std::vector<EmbeddingVector> embed(const std::vector<std::string>& inputs) const override {
        if (inputs.empty()) return {};
        nlohmann::json body;
        body["inputs"] = inputs;
        const std::string payload = body.dump();

        int attempt = 0;
        std::string last_error;
        while (attempt <= config_.max_retries) {
            if (attempt > 0) {
                std::this_thread::sleep_for(std::chrono::milliseconds(
                    config_.backoff_initial_ms * (1 << (attempt - 1))));
            }
            ++attempt;

            in_flight_.acquire();
            httplib::Client client(url_.base);
            client.set_read_timeout(60, 0);
            httplib::Headers headers;
            if (!config_.auth_token.empty()) {
                headers.emplace("Authorization", "Bearer " + config_.auth_token);
            }
            auto res = client.Post(url_.path, headers, payload, "application/json");
            in_flight_.release();

            if (!res) {
                last_error = "transport error: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status == 429 || res->status >= 500) {
                last_error = "HTTP " + std::to_string(res->status);
                continue;
            }
            if (res->status != 200) {
                throw std::runtime_error("embedding provider returned HTTP " +
                                         std::to_string(res->status) + ": " + res->body);
            }
            return parse_vectors(res->body, inputs.size());
        }
        throw std::runtime_error("embedding provider unreachable after " +
                                 std::to_string(attempt) + " attempts (" + last_error + ")");
    }

private:
    std::vector<EmbeddingVector> parse_vectors(const std::string& body,
                                               std::size_t expected) const {
        nlohmann::json parsed = nlohmann::json::parse(body);
        const auto& vectors = parsed.at("vectors");
        if (!vectors.is_array() || vectors.size() != expected) {
            throw std::runtime_error("embedding provider returned " +
                                     std::to_string(vectors.size()) + " vectors, expected " +
                                     std::to_string(expected));
        }
        std::vector<EmbeddingVector> out;
        out.reserve(vectors.size());
        for (const auto& row : vectors) {
            EmbeddingVector vec;
            vec.values = row.get<std::vector<double>>();
            if (vec.values.size() != config_.dimension) {
                throw std::runtime_error("embedding provider returned dimension " +
                                         std::to_string(vec.values.size()) + ", expected " +
                                         std::to_string(config_.dimension));
            }
            out.push_back(std::move(vec));
        }
        return out;
    }

    HttpEmbedderConfig config_;
    SplitUrl url_;
    mutable std::counting_semaphore<256> in_flight_;
};

}  // namespace

std::unique_ptr<Embedder> make_http_embedder(const HttpEmbedderConfig& config) {
    return std::make_unique<HttpEmbedder>(config);
}

}  // namespace metaforge
