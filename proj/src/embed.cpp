#include "metaforge/embed.hpp"

#include <cctype>
#include <cmath>
#include <stdexcept>

namespace metaforge {

double cosine(const EmbeddingVector& u, const EmbeddingVector& v) {
    if (u.values.size() != v.values.size()) {
        throw std::invalid_argument("cosine: dimension mismatch");
    }
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (std::size_t i = 0; i < u.values.size(); ++i) {
        dot += u.values[i] * v.values[i];
        nu += u.values[i] * u.values[i];
        nv += v.values[i] * v.values[i];
    }
    if (nu == 0.0 || nv == 0.0) return 0.0;
    return dot / (std::sqrt(nu) * std::sqrt(nv));
}

EmbeddingVector Embedder::embed_one(const std::string& text) const {
    return embed({text}).front();
}

HashedNgramEmbedder::HashedNgramEmbedder(std::size_t dimension) : dimension_(dimension) {
    if (dimension_ == 0) throw std::invalid_argument("embedding dimension must be positive");
}

namespace {

std::string fold_text(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(static_cast<char>(std::tolower(c)));
    }
    return out;
}

std::uint64_t fnv1a(const char* data, std::size_t len, std::uint64_t seed) {
    std::uint64_t h = 14695981039346656037ULL ^ seed;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= static_cast<unsigned char>(data[i]);
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace

std::vector<EmbeddingVector> HashedNgramEmbedder::embed(
    const std::vector<std::string>& inputs) const {
    std::vector<EmbeddingVector> out;
    out.reserve(inputs.size());
    for (const std::string& input : inputs) {
        EmbeddingVector vec;
        vec.values.assign(dimension_, 0.0);
        const std::string folded = fold_text(input);
        if (!folded.empty()) {
            if (folded.size() < kGramSize) {
                vec.values[fnv1a(folded.data(), folded.size(), kHashSeed) % dimension_] += 1.0;
            } else {
                for (std::size_t i = 0; i + kGramSize <= folded.size(); ++i) {
                    vec.values[fnv1a(folded.data() + i, kGramSize, kHashSeed) % dimension_] += 1.0;
                }
            }
            double norm = 0.0;
            for (double x : vec.values) norm += x * x;
            norm = std::sqrt(norm);
            if (norm > 0.0) {
                for (double& x : vec.values) x /= norm;
            }
        }
        out.push_back(std::move(vec));
    }
    return out;
}

}  // namespace metaforge
