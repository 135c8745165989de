#pragma once

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "metaforge/corpus.hpp"

namespace metaforge {

/// The 18-label entity scheme used for field assignment and chunk boosting.
enum class EntityLabel {
    PERSON,
    NORP,
    FAC,
    ORG,
    GPE,
    LOC,
    PRODUCT,
    EVENT,
    WORK_OF_ART,
    LAW,
    LANGUAGE,
    DATE,
    TIME,
    PERCENT,
    MONEY,
    QUANTITY,
    ORDINAL,
    CARDINAL,
};

inline constexpr std::size_t kEntityLabelCount = 18;

const std::vector<EntityLabel>& all_entity_labels();
std::string_view to_string(EntityLabel label);
std::optional<EntityLabel> parse_entity_label(std::string_view name);

struct EntitySpan {
    EntityLabel label = EntityLabel::CARDINAL;
    CharSpan char_span;
    std::string surface;
};

/// Pattern- and gazetteer-based recognizer. Numeric families (dates, times,
/// percents, money, quantities, ordinals, cardinals) come from patterns; the
/// name-like families come from the gazetteer plus capitalization heuristics
/// (e.g. a TitleCase run ending in "Corp"/"Inc"/"LLC" is an ORG). Overlapping
/// candidates resolve longest-match-first, then leftmost.
class Recognizer {
public:
    /// Built with the shipped default gazetteer.
    Recognizer();
    /// Gazetteer text: one `LABEL<TAB>phrase` per line; '#' lines are comments.
    static Recognizer from_gazetteer_text(const std::string& text);
    static Recognizer from_gazetteer_file(const std::string& path);

    std::vector<EntitySpan> recognize(std::string_view text) const;

private:
    struct Impl;
    explicit Recognizer(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
    std::shared_ptr<const Impl> impl_;
};

/// Entity spans in the chunk with a label in `labels`, divided by
/// max(1, token_count).
double ner_count(const Recognizer& recognizer, const Chunk& chunk,
                 const std::set<EntityLabel>& labels);

/// The shipped default gazetteer text.
const std::string& default_gazetteer_text();

}  // namespace metaforge
