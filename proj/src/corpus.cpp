#include "metaforge/corpus.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace metaforge {

namespace {

bool is_space_byte(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_word_byte(unsigned char c) {
    return (c >= '0' && c <= '9') || (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
           c >= 0x80;
}

}  // namespace

std::string_view to_string(TextFormat format) {
    switch (format) {
        case TextFormat::plain: return "plain";
        case TextFormat::markdown: return "markdown";
    }
    return "plain";
}

TextFormat parse_text_format(std::string_view name) {
    if (name == "plain" || name == "txt") return TextFormat::plain;
    if (name == "markdown" || name == "md") return TextFormat::markdown;
    throw std::invalid_argument("unknown text format: " + std::string(name));
}

std::vector<CharSpan> token_spans(std::string_view text) {
    std::vector<CharSpan> spans;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        unsigned char c = static_cast<unsigned char>(text[i]);
        if (is_space_byte(c)) {
            ++i;
            continue;
        }
        if (is_word_byte(c)) {
            std::size_t start = i;
            while (i < n && is_word_byte(static_cast<unsigned char>(text[i]))) ++i;
            spans.push_back({start, i});
        } else {
            spans.push_back({i, i + 1});
            ++i;
        }
    }
    return spans;
}

std::size_t count_tokens(std::string_view text) {
    return token_spans(text).size();
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    for (const CharSpan& s : token_spans(text)) {
        tokens.emplace_back(text.substr(s.start, s.end - s.start));
    }
    return tokens;
}

std::vector<Chunk> chunk_document(const Document& doc, const ChunkingConfig& config) {
    if (config.chunk_tokens == 0) {
        throw std::invalid_argument("chunk_tokens must be positive");
    }
    if (config.overlap_tokens >= config.chunk_tokens) {
        throw std::invalid_argument("overlap_tokens must be smaller than chunk_tokens");
    }

    const std::vector<CharSpan> tokens = token_spans(doc.text);
    const std::size_t n = tokens.size();
    std::vector<Chunk> chunks;
    if (n == 0) return chunks;

    const std::size_t stride = config.chunk_tokens - config.overlap_tokens;
    for (std::size_t start = 0;; start += stride) {
        const std::size_t end = std::min(start + config.chunk_tokens, n);
        Chunk chunk;
        chunk.doc_id = doc.id;
        chunk.index = chunks.size();
        chunk.char_span.start = chunks.empty() ? 0 : tokens[start].start;
        // Non-final chunks carry the whitespace up to the next token so that
        // stitched spans cover the document with no gaps.
        chunk.char_span.end = end == n ? doc.text.size() : tokens[end].start;
        chunk.text = doc.text.substr(chunk.char_span.start,
                                     chunk.char_span.end - chunk.char_span.start);
        chunk.token_count = end - start;
        chunks.push_back(std::move(chunk));
        if (end == n) break;
    }
    return chunks;
}

std::string normalize_newlines(std::string text) {
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == '\r') {
            out.push_back('\n');
            if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
        } else {
            out.push_back(text[i]);
        }
    }
    return out;
}

Document load_document(const std::string& path,
                       const std::string& id,
                       TextFormat format,
                       const std::string& conversion_tag) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open document file: " + path);
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    Document doc;
    doc.id = id;
    doc.text = normalize_newlines(buffer.str());
    doc.format = format;
    doc.conversion_tag = conversion_tag;
    return doc;
}

std::vector<Document> load_corpus(const std::string& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) {
        throw std::runtime_error("cannot open corpus manifest: " + manifest_path);
    }
    nlohmann::json manifest;
    try {
        in >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("malformed corpus manifest " + manifest_path + ": " + e.what());
    }
    if (!manifest.is_array()) {
        throw std::runtime_error("corpus manifest must be a JSON array: " + manifest_path);
    }

    const std::filesystem::path base = std::filesystem::path(manifest_path).parent_path();
    std::vector<Document> docs;
    std::set<std::string> seen_ids;
    for (const auto& entry : manifest) {
        const std::string id = entry.at("id").get<std::string>();
        if (id.empty()) {
            throw std::runtime_error("corpus manifest entry with empty id");
        }
        if (!seen_ids.insert(id).second) {
            throw std::runtime_error("duplicate document id in manifest: " + id);
        }
        std::filesystem::path p = entry.at("path").get<std::string>();
        if (p.is_relative()) p = base / p;
        const TextFormat format =
            parse_text_format(entry.value("format", std::string("plain")));
        docs.push_back(load_document(p.string(), id, format,
                                     entry.value("conversion_tag", std::string())));
    }
    return docs;
}

}  // namespace metaforge
