#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace metaforge {

/// Unit L2 norm unless the zero vector (empty input text).
struct EmbeddingVector {
    std::vector<double> values;

    std::size_t dimension() const { return values.size(); }
};

/// dot(u,v) / (|u||v|); 0 when either norm is 0. Throws on dimension mismatch.
double cosine(const EmbeddingVector& u, const EmbeddingVector& v);

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::size_t dimension() const = 0;
    virtual std::vector<EmbeddingVector> embed(const std::vector<std::string>& inputs) const = 0;

    EmbeddingVector embed_one(const std::string& text) const;
};

/// Deterministic built-in embedder: case-folded, whitespace-collapsed
/// character 3-grams hashed into a fixed-dimension term-frequency vector,
/// L2-normalized. Texts shorter than the gram size contribute a single gram.
class HashedNgramEmbedder final : public Embedder {
public:
    static constexpr std::size_t kDefaultDimension = 256;
    static constexpr std::size_t kGramSize = 3;
    /// Mixed into the FNV-1a state so the bucket layout is pinned to this
    /// constant rather than the bare FNV basis.
    static constexpr std::uint64_t kHashSeed = 0x9e3779b97f4a7c15ULL;

    explicit HashedNgramEmbedder(std::size_t dimension = kDefaultDimension);

    std::size_t dimension() const override { return dimension_; }
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& inputs) const override;

private:
    std::size_t dimension_;
};

struct HttpEmbedderConfig {
    std::string endpoint;       // e.g. http://host:port/embed
    std::string auth_token;     // optional bearer token
    std::size_t dimension = HashedNgramEmbedder::kDefaultDimension;
    std::size_t max_in_flight = 4;
    int max_retries = 3;
    int backoff_initial_ms = 100;
};

/// Remote provider speaking POST {"inputs": [...]} -> {"vectors": [[...]]}.
/// Transport failures surface as std::runtime_error after bounded retries.
std::unique_ptr<Embedder> make_http_embedder(const HttpEmbedderConfig& config);

}  // namespace metaforge
