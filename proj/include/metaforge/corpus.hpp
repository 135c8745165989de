#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace metaforge {

enum class TextFormat { plain, markdown };

std::string_view to_string(TextFormat format);
TextFormat parse_text_format(std::string_view name);

/// A document whose text has already been converted upstream; `conversion_tag`
/// records which conversion method produced it (e.g. "azure-md").
struct Document {
    std::string id;
    std::string text;
    TextFormat format = TextFormat::plain;
    std::string conversion_tag;
};

/// Half-open [start, end) byte offsets. Offsets never split a UTF-8 sequence
/// because the tokenizer treats multi-byte sequences as word bytes.
struct CharSpan {
    std::size_t start = 0;
    std::size_t end = 0;

    bool operator==(const CharSpan&) const = default;
};

struct Chunk {
    std::string doc_id;
    std::size_t index = 0;
    CharSpan char_span;
    std::string text;
    std::size_t token_count = 0;
};

/// A token is a maximal run of word bytes (ASCII alphanumerics plus any byte
/// >= 0x80) or a single punctuation character. Whitespace separates tokens and
/// is never part of one.
std::vector<CharSpan> token_spans(std::string_view text);
std::size_t count_tokens(std::string_view text);
std::vector<std::string> tokenize(std::string_view text);

struct ChunkingConfig {
    std::size_t chunk_tokens = 512;
    std::size_t overlap_tokens = 64;
};

/// Sliding token windows with stride (chunk_tokens - overlap_tokens). The
/// first chunk's span starts at byte 0 and the last ends at the end of the
/// text, so stitching spans with overlaps deduplicated reproduces the document
/// byte for byte. Throws std::invalid_argument on a zero window or an overlap
/// that is not smaller than the window.
std::vector<Chunk> chunk_document(const Document& doc, const ChunkingConfig& config);

/// CR and CRLF newlines become LF; no other mutation.
std::string normalize_newlines(std::string text);

Document load_document(const std::string& path,
                       const std::string& id,
                       TextFormat format,
                       const std::string& conversion_tag);

/// Manifest: JSON array of {"id", "path", "format", "conversion_tag"}.
/// Relative paths resolve against the manifest's directory.
std::vector<Document> load_corpus(const std::string& manifest_path);

}  // namespace metaforge
