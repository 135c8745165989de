#include "metaforge/ner.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <regex>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace metaforge {

namespace {

constexpr std::array<std::string_view, kEntityLabelCount> kLabelNames = {
    "PERSON", "NORP",     "FAC",   "ORG",      "GPE",   "LOC",
    "PRODUCT", "EVENT",   "WORK_OF_ART", "LAW", "LANGUAGE", "DATE",
    "TIME",   "PERCENT",  "MONEY", "QUANTITY", "ORDINAL", "CARDINAL",
};

std::string fold_ascii(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

bool is_word_byte(unsigned char c) {
    return (c >= '0' && c <= '9') || (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
           c >= 0x80;
}

bool is_title_case(std::string_view tok) {
    if (tok.empty() || tok[0] < 'A' || tok[0] > 'Z') return false;
    for (std::size_t i = 1; i < tok.size(); ++i) {
        const char c = tok[i];
        if (!((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9'))) return false;
    }
    return true;
}

bool is_all_caps(std::string_view tok) {
    if (tok.size() < 2) return false;
    for (char c : tok) {
        if (c < 'A' || c > 'Z') return false;
    }
    return true;
}

struct Candidate {
    std::size_t start = 0;
    std::size_t end = 0;
    EntityLabel label = EntityLabel::CARDINAL;
    int priority = 0;  // lower wins among equal-length, equal-start candidates

    std::size_t length() const { return end - start; }
};

struct PatternRule {
    std::regex regex;
    EntityLabel label;
    int priority;
};

const std::unordered_set<std::string>& org_suffixes() {
    static const std::unordered_set<std::string> s = {
        "Corp", "Corporation", "Inc", "Incorporated", "LLC", "Ltd", "Limited", "Company",
        "Co", "Group", "Holdings", "Bank", "Trust", "University", "Institute", "Partners",
        "LP", "LLP", "PLC", "GmbH", "Association", "Agency", "Commission", "Committee",
        "Council", "Department", "Ministry", "Bureau", "Fund", "Foundation", "Society",
        "Systems", "Technologies", "Industries", "Enterprises", "Ventures", "Capital",
    };
    return s;
}

const std::unordered_set<std::string>& law_suffixes() {
    static const std::unordered_set<std::string> s = {
        "Act", "Code", "Amendment", "Statute", "Regulation", "Treaty", "Directive",
        "Ordinance",
    };
    return s;
}

const std::unordered_set<std::string>& fac_suffixes() {
    static const std::unordered_set<std::string> s = {
        "Airport", "Bridge", "Building", "Tower", "Stadium", "Station", "Hospital",
        "Dam", "Canal", "Plaza", "Courthouse",
    };
    return s;
}

const std::unordered_set<std::string>& event_suffixes() {
    static const std::unordered_set<std::string> s = {
        "War", "Olympics", "Games", "Cup", "Conference", "Summit", "Festival",
    };
    return s;
}

const std::unordered_set<std::string>& honorifics() {
    static const std::unordered_set<std::string> s = {"Mr", "Mrs", "Ms", "Dr", "Prof",
                                                      "Hon", "Rev"};
    return s;
}

const std::unordered_set<std::string>& run_connectors() {
    static const std::unordered_set<std::string> s = {"&", "of", "and", "the"};
    return s;
}

std::vector<PatternRule> build_patterns() {
    const std::string month =
        "(?:January|February|March|April|May|June|July|August|September|October|November|"
        "December|Jan|Feb|Mar|Apr|Jun|Jul|Aug|Sept|Sep|Oct|Nov|Dec)\\.?";
    const std::string num = "\\d+(?:,\\d{3})*(?:\\.\\d+)?";
    const std::string day = "\\d{1,2}(?:st|nd|rd|th)?";

    std::vector<PatternRule> rules;
    auto add = [&rules](const std::string& pattern, EntityLabel label, int priority) {
        rules.push_back({std::regex(pattern, std::regex::ECMAScript), label, priority});
    };

    // DATE
    add(month + " " + day + ",? \\d{4}", EntityLabel::DATE, 2);
    add(day + " (?:day )?(?:of )?" + month + ",? \\d{4}", EntityLabel::DATE, 2);
    add("\\d{4}-\\d{2}-\\d{2}", EntityLabel::DATE, 2);
    add("\\d{1,2}/\\d{1,2}/\\d{2,4}", EntityLabel::DATE, 2);
    add(month + " " + day, EntityLabel::DATE, 2);
    add(month + ",? \\d{4}", EntityLabel::DATE, 2);
    add("\\d+(?:,\\d{3})* ?(?:day|week|month|year|decade|quarter)s?", EntityLabel::DATE, 2);
    add("(?:19|20)\\d{2}", EntityLabel::DATE, 2);
    // TIME
    add("\\d{1,2}:\\d{2}(?::\\d{2})?(?: ?[APap]\\.?[Mm]\\.?)?", EntityLabel::TIME, 3);
    add("\\d{1,2} ?[APap]\\.?[Mm]\\.?", EntityLabel::TIME, 3);
    add("(?:noon|midnight)", EntityLabel::TIME, 3);
    // PERCENT
    add(num + " ?(?:%|percent)", EntityLabel::PERCENT, 4);
    // MONEY
    add("(?:\\$|€|£) ?" + num + "(?: ?(?:million|billion|thousand))?",
        EntityLabel::MONEY, 5);
    add(num + " (?:dollars|dollar|euros|euro|pounds|pound|cents|USD|EUR|GBP)",
        EntityLabel::MONEY, 5);
    // QUANTITY
    add(num +
            " ?(?:miles?|kilometers?|km|kilograms?|kg|grams?|pounds?|lbs|ounces?|oz|feet|foot"
            "|ft|inch|inches|meters?|metres?|acres?|hectares?|tons?|tonnes?|gallons?|liters?"
            "|litres?|barrels?|square (?:feet|meters|miles))",
        EntityLabel::QUANTITY, 6);
    // ORDINAL
    add("\\d+(?:st|nd|rd|th)", EntityLabel::ORDINAL, 7);
    add("(?:[Ff]irst|[Ss]econd|[Tt]hird|[Ff]ourth|[Ff]ifth|[Ss]ixth|[Ss]eventh|[Ee]ighth|"
        "[Nn]inth|[Tt]enth)",
        EntityLabel::ORDINAL, 7);
    // CARDINAL
    add(num, EntityLabel::CARDINAL, 8);
    add("(?:one|two|three|four|five|six|seven|eight|nine|ten|eleven|twelve|twenty|thirty|"
        "forty|fifty|sixty|seventy|eighty|ninety|hundred|thousand|million|billion)",
        EntityLabel::CARDINAL, 8);
    return rules;
}

struct GazetteerEntry {
    std::vector<std::string> tokens;
    EntityLabel label;
};

}  // namespace

struct Recognizer::Impl {
    // First folded token -> entries beginning with it.
    std::unordered_map<std::string, std::vector<GazetteerEntry>> phrases;
    std::unordered_set<std::string> given_names;  // TitleCase surfaces
    std::vector<PatternRule> patterns = build_patterns();

    void add_line(const std::string& line) {
        if (line.empty() || line[0] == '#') return;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw std::runtime_error("gazetteer line missing tab separator: " + line);
        }
        const auto label = parse_entity_label(line.substr(0, tab));
        if (!label) {
            throw std::runtime_error("gazetteer line with unknown label: " + line);
        }
        const std::string phrase = line.substr(tab + 1);
        GazetteerEntry entry;
        entry.label = *label;
        entry.tokens = tokenize(phrase);
        if (entry.tokens.empty()) return;
        if (*label == EntityLabel::PERSON && entry.tokens.size() == 1) {
            given_names.insert(entry.tokens[0]);
        }
        phrases[fold_ascii(entry.tokens[0])].push_back(std::move(entry));
    }

    void collect_pattern_candidates(std::string_view text,
                                    std::vector<Candidate>& out) const {
        for (const PatternRule& rule : rules_view()) {
            const char* begin = text.data();
            const char* end = text.data() + text.size();
            for (std::cregex_iterator it(begin, end, rule.regex), last; it != last; ++it) {
                const std::size_t start = static_cast<std::size_t>(it->position(0));
                const std::size_t stop = start + static_cast<std::size_t>(it->length(0));
                if (stop == start) continue;
                // Reject matches glued to surrounding word characters.
                if (start > 0 && is_word_byte(static_cast<unsigned char>(text[start - 1])) &&
                    is_word_byte(static_cast<unsigned char>(text[start]))) {
                    continue;
                }
                if (stop < text.size() &&
                    is_word_byte(static_cast<unsigned char>(text[stop])) &&
                    is_word_byte(static_cast<unsigned char>(text[stop - 1]))) {
                    continue;
                }
                out.push_back({start, stop, rule.label, rule.priority});
            }
        }
    }

    const std::vector<PatternRule>& rules_view() const { return patterns; }
};

Recognizer::Recognizer() : impl_(from_gazetteer_text(default_gazetteer_text()).impl_) {}

Recognizer Recognizer::from_gazetteer_text(const std::string& text) {
    auto impl = std::make_shared<Impl>();
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        impl->add_line(line);
    }
    return Recognizer(std::move(impl));
}

Recognizer Recognizer::from_gazetteer_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open gazetteer file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_gazetteer_text(buf.str());
}

namespace {

// Longest match first, then leftmost, then the stronger rule family.
std::vector<EntitySpan> resolve(std::string_view text, std::vector<Candidate> candidates) {
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        if (a.length() != b.length()) return a.length() > b.length();
        if (a.start != b.start) return a.start < b.start;
        if (a.priority != b.priority) return a.priority < b.priority;
        return a.label < b.label;
    });

    std::vector<Candidate> accepted;
    for (const Candidate& c : candidates) {
        bool overlaps = false;
        for (const Candidate& a : accepted) {
            if (c.start < a.end && a.start < c.end) {
                overlaps = true;
                break;
            }
        }
        if (!overlaps) accepted.push_back(c);
    }
    std::sort(accepted.begin(), accepted.end(),
              [](const Candidate& a, const Candidate& b) { return a.start < b.start; });

    std::vector<EntitySpan> spans;
    spans.reserve(accepted.size());
    for (const Candidate& c : accepted) {
        spans.push_back({c.label, {c.start, c.end},
                         std::string(text.substr(c.start, c.end - c.start))});
    }
    return spans;
}

}  // namespace

std::vector<EntitySpan> Recognizer::recognize(std::string_view text) const {
    std::vector<Candidate> candidates;
    impl_->collect_pattern_candidates(text, candidates);

    const std::vector<CharSpan> spans = token_spans(text);
    std::vector<std::string_view> toks;
    toks.reserve(spans.size());
    for (const CharSpan& s : spans) toks.push_back(text.substr(s.start, s.end - s.start));

    // Gazetteer phrase matches: consecutive stream tokens, case-insensitive,
    // but a capitalized first token is required so prose words do not trigger
    // name-like labels.
    for (std::size_t i = 0; i < toks.size(); ++i) {
        const auto it = impl_->phrases.find(fold_ascii(toks[i]));
        if (it == impl_->phrases.end()) continue;
        const bool capitalized = is_title_case(toks[i]) || is_all_caps(toks[i]);
        for (const GazetteerEntry& entry : it->second) {
            if (!capitalized && toks[i] != entry.tokens[0]) continue;
            if (i + entry.tokens.size() > toks.size()) continue;
            bool ok = true;
            for (std::size_t k = 0; k < entry.tokens.size(); ++k) {
                if (fold_ascii(toks[i + k]) != fold_ascii(entry.tokens[k])) {
                    ok = false;
                    break;
                }
            }
            if (!ok) continue;
            const std::size_t last = i + entry.tokens.size() - 1;
            candidates.push_back({spans[i].start, spans[last].end, entry.label, 0});
        }
    }

    // Capitalized-run heuristics.
    auto is_cap = [&](std::size_t i) {
        return i < toks.size() && (is_title_case(toks[i]) || is_all_caps(toks[i]));
    };
    for (std::size_t i = 0; i < toks.size(); ++i) {
        if (!is_cap(i)) continue;
        std::size_t j = i;
        while (true) {
            if (is_cap(j + 1)) {
                ++j;
            } else if (j + 2 < toks.size() &&
                       run_connectors().count(std::string(toks[j + 1])) > 0 && is_cap(j + 2)) {
                j += 2;
            } else {
                break;
            }
        }
        if (j > i) {
            const std::string last(toks[j]);
            EntityLabel label{};
            bool matched = true;
            if (org_suffixes().count(last)) {
                label = EntityLabel::ORG;
            } else if (law_suffixes().count(last)) {
                label = EntityLabel::LAW;
            } else if (fac_suffixes().count(last)) {
                label = EntityLabel::FAC;
            } else if (event_suffixes().count(last)) {
                label = EntityLabel::EVENT;
            } else {
                matched = false;
            }
            if (matched) {
                candidates.push_back({spans[i].start, spans[j].end, label, 1});
            }
        }
    }

    // Person heuristics: a known given name, or an honorific, introduces a
    // TitleCase run (middle initials like "F." allowed).
    for (std::size_t i = 0; i < toks.size(); ++i) {
        std::size_t name_start = i;
        bool have_person = false;
        if (is_title_case(toks[i]) && impl_->given_names.count(std::string(toks[i]))) {
            have_person = true;
        } else if (honorifics().count(std::string(toks[i]))) {
            std::size_t next = i + 1;
            if (next < toks.size() && toks[next] == ".") ++next;
            if (next < toks.size() && is_title_case(toks[next])) {
                name_start = next;
                have_person = true;
            }
        }
        if (!have_person) continue;

        auto is_type_suffix = [](const std::string& tok) {
            return org_suffixes().count(tok) || law_suffixes().count(tok) ||
                   fac_suffixes().count(tok) || event_suffixes().count(tok);
        };
        std::size_t j = name_start;
        std::size_t extra = 0;
        while (extra < 3) {
            if (j + 1 < toks.size() && is_title_case(toks[j + 1]) &&
                !is_type_suffix(std::string(toks[j + 1]))) {
                ++j;
                ++extra;
            } else if (j + 3 < toks.size() && toks[j + 1].size() == 1 &&
                       toks[j + 1][0] >= 'A' && toks[j + 1][0] <= 'Z' && toks[j + 2] == "." &&
                       is_title_case(toks[j + 3])) {
                j += 3;
                ++extra;
            } else {
                break;
            }
        }
        candidates.push_back({spans[name_start].start, spans[j].end, EntityLabel::PERSON, 1});
    }

    return resolve(text, std::move(candidates));
}

double ner_count(const Recognizer& recognizer, const Chunk& chunk,
                 const std::set<EntityLabel>& labels) {
    if (labels.empty()) return 0.0;
    std::size_t hits = 0;
    for (const EntitySpan& span : recognizer.recognize(chunk.text)) {
        if (labels.count(span.label)) ++hits;
    }
    return static_cast<double>(hits) /
           static_cast<double>(std::max<std::size_t>(1, chunk.token_count));
}

const std::string& default_gazetteer_text() {
    static const std::string text = R"GAZ(# Built-in lexicon, one entry per line: LABEL<TAB>phrase.
# Swap it out with from_gazetteer_file for domain-specific vocabularies.
GPE	Alabama
GPE	Alaska
GPE	Arizona
GPE	Arkansas
GPE	California
GPE	Colorado
GPE	Connecticut
GPE	Delaware
GPE	Florida
GPE	Georgia
GPE	Hawaii
GPE	Idaho
GPE	Illinois
GPE	Indiana
GPE	Iowa
GPE	Kansas
GPE	Kentucky
GPE	Louisiana
GPE	Maine
GPE	Maryland
GPE	Massachusetts
GPE	Michigan
GPE	Minnesota
GPE	Mississippi
GPE	Missouri
GPE	Montana
GPE	Nebraska
GPE	Nevada
GPE	New Hampshire
GPE	New Jersey
GPE	New Mexico
GPE	New York
GPE	North Carolina
GPE	North Dakota
GPE	Ohio
GPE	Oklahoma
GPE	Oregon
GPE	Pennsylvania
GPE	Rhode Island
GPE	South Carolina
GPE	South Dakota
GPE	Tennessee
GPE	Texas
GPE	Utah
GPE	Vermont
GPE	Virginia
GPE	Washington
GPE	West Virginia
GPE	Wisconsin
GPE	Wyoming
GPE	District of Columbia
GPE	United States
GPE	United States of America
GPE	United Kingdom
GPE	England
GPE	Scotland
GPE	Wales
GPE	Ireland
GPE	France
GPE	Germany
GPE	Spain
GPE	Portugal
GPE	Italy
GPE	Netherlands
GPE	Belgium
GPE	Switzerland
GPE	Austria
GPE	Sweden
GPE	Norway
GPE	Denmark
GPE	Finland
GPE	Poland
GPE	Greece
GPE	Turkey
GPE	Russia
GPE	Ukraine
GPE	China
GPE	Japan
GPE	India
GPE	Singapore
GPE	Australia
GPE	Canada
GPE	Mexico
GPE	Brazil
GPE	Argentina
GPE	Chile
GPE	Israel
GPE	Egypt
GPE	South Africa
GPE	Saudi Arabia
GPE	United Arab Emirates
GPE	South Korea
GPE	Hong Kong
GPE	Taiwan
GPE	Vietnam
GPE	Thailand
GPE	Indonesia
GPE	Philippines
GPE	Malaysia
GPE	New Zealand
GPE	London
GPE	Paris
GPE	Berlin
GPE	Madrid
GPE	Rome
GPE	Amsterdam
GPE	Brussels
GPE	Zurich
GPE	Geneva
GPE	Vienna
GPE	Stockholm
GPE	Dublin
GPE	Tokyo
GPE	Beijing
GPE	Shanghai
GPE	Mumbai
GPE	Sydney
GPE	Toronto
GPE	Chicago
GPE	Boston
GPE	Houston
GPE	Dallas
GPE	Seattle
GPE	Denver
GPE	Atlanta
GPE	Miami
GPE	Philadelphia
GPE	Phoenix
GPE	San Francisco
GPE	Los Angeles
GPE	San Diego
GPE	New York City
GPE	Las Vegas
GPE	Wilmington
LOC	Europe
LOC	Asia
LOC	Africa
LOC	Antarctica
LOC	North America
LOC	South America
LOC	Latin America
LOC	Middle East
LOC	Pacific Ocean
LOC	Atlantic Ocean
LOC	Indian Ocean
LOC	Mediterranean Sea
LOC	Mississippi River
LOC	Amazon River
LOC	Hudson River
LOC	Lake Michigan
LOC	Rocky Mountains
LOC	Mount Everest
LOC	Silicon Valley
LOC	Sahara
LOC	Alps
NORP	American
NORP	Americans
NORP	British
NORP	Canadian
NORP	Canadians
NORP	Australian
NORP	European
NORP	Europeans
NORP	Asian
NORP	African
NORP	Mexican
NORP	Brazilian
NORP	Russian
NORP	Russians
NORP	Italian
NORP	Italians
NORP	Irish
NORP	Scottish
NORP	Dutch
NORP	Swedish
NORP	Norwegian
NORP	Danish
NORP	Polish
NORP	Greek
NORP	Turkish
NORP	Chinese
NORP	Japanese
NORP	Korean
NORP	Indian
NORP	Israeli
NORP	Egyptian
NORP	Swiss
NORP	Austrian
NORP	Belgian
NORP	Republican
NORP	Republicans
NORP	Democrat
NORP	Democrats
NORP	Democratic
NORP	Christian
NORP	Catholic
NORP	Protestant
NORP	Jewish
NORP	Muslim
NORP	Buddhist
NORP	Hindu
LANGUAGE	English
LANGUAGE	Spanish
LANGUAGE	French
LANGUAGE	German
LANGUAGE	Portuguese
LANGUAGE	Mandarin
LANGUAGE	Cantonese
LANGUAGE	Hindi
LANGUAGE	Arabic
LANGUAGE	Latin
LANGUAGE	Hebrew
LANGUAGE	Bengali
LANGUAGE	Urdu
LANGUAGE	Punjabi
LANGUAGE	Tagalog
LANGUAGE	Swahili
LAW	Uniform Commercial Code
LAW	Internal Revenue Code
LAW	Bankruptcy Code
LAW	Constitution
LAW	First Amendment
LAW	Fifth Amendment
LAW	Fourteenth Amendment
LAW	Sherman Act
LAW	Securities Act
LAW	Securities Exchange Act
LAW	Clean Air Act
LAW	Civil Rights Act
LAW	Americans with Disabilities Act
LAW	Patriot Act
LAW	Sarbanes-Oxley Act
LAW	Dodd-Frank Act
LAW	GDPR
LAW	HIPAA
ORG	United Nations
ORG	World Bank
ORG	International Monetary Fund
ORG	Federal Reserve
ORG	Supreme Court
ORG	Securities and Exchange Commission
ORG	Internal Revenue Service
ORG	European Union
ORG	NATO
ORG	NASA
ORG	FBI
ORG	IRS
ORG	Google
ORG	Microsoft
ORG	IBM
ORG	Intel
ORG	Amazon
ORG	Apple
ORG	Facebook
ORG	Netflix
ORG	Oracle
ORG	Salesforce
ORG	Goldman Sachs
ORG	Morgan Stanley
ORG	JPMorgan Chase
ORG	Bank of America
ORG	Wells Fargo
ORG	Citigroup
ORG	Deloitte
ORG	Accenture
ORG	McKinsey
EVENT	World War I
EVENT	World War II
EVENT	Cold War
EVENT	Great Depression
EVENT	Olympics
EVENT	Olympic Games
EVENT	Super Bowl
EVENT	World Cup
EVENT	World Series
EVENT	Hurricane Katrina
PRODUCT	iPhone
PRODUCT	iPad
PRODUCT	MacBook
PRODUCT	Android
PRODUCT	Windows
PRODUCT	Xbox
PRODUCT	PlayStation
PRODUCT	Kindle
PRODUCT	Photoshop
PRODUCT	Excel
PRODUCT	PowerPoint
PRODUCT	Outlook
PRODUCT	Chrome
PRODUCT	Firefox
PRODUCT	Boeing 747
PRODUCT	Airbus A380
WORK_OF_ART	Mona Lisa
WORK_OF_ART	Hamlet
WORK_OF_ART	Macbeth
WORK_OF_ART	War and Peace
WORK_OF_ART	Moby Dick
WORK_OF_ART	The Great Gatsby
WORK_OF_ART	Star Wars
WORK_OF_ART	The Godfather
FAC	Golden Gate Bridge
FAC	Brooklyn Bridge
FAC	Empire State Building
FAC	Eiffel Tower
FAC	Statue of Liberty
FAC	White House
FAC	Pentagon
FAC	Heathrow Airport
FAC	Grand Central Station
FAC	Hoover Dam
FAC	Panama Canal
FAC	Suez Canal
PERSON	James
PERSON	John
PERSON	Robert
PERSON	Michael
PERSON	William
PERSON	David
PERSON	Richard
PERSON	Joseph
PERSON	Thomas
PERSON	Charles
PERSON	Christopher
PERSON	Daniel
PERSON	Matthew
PERSON	Anthony
PERSON	Mark
PERSON	Donald
PERSON	Steven
PERSON	Paul
PERSON	Andrew
PERSON	Joshua
PERSON	Kenneth
PERSON	Kevin
PERSON	Brian
PERSON	George
PERSON	Edward
PERSON	Ronald
PERSON	Timothy
PERSON	Jason
PERSON	Jeffrey
PERSON	Ryan
PERSON	Jacob
PERSON	Gary
PERSON	Nicholas
PERSON	Eric
PERSON	Jonathan
PERSON	Stephen
PERSON	Larry
PERSON	Justin
PERSON	Scott
PERSON	Brandon
PERSON	Benjamin
PERSON	Samuel
PERSON	Gregory
PERSON	Frank
PERSON	Alexander
PERSON	Raymond
PERSON	Patrick
PERSON	Jack
PERSON	Dennis
PERSON	Jerry
PERSON	Henry
PERSON	Peter
PERSON	Walter
PERSON	Harold
PERSON	Carl
PERSON	Arthur
PERSON	Mary
PERSON	Patricia
PERSON	Jennifer
PERSON	Linda
PERSON	Elizabeth
PERSON	Barbara
PERSON	Susan
PERSON	Jessica
PERSON	Sarah
PERSON	Karen
PERSON	Nancy
PERSON	Lisa
PERSON	Margaret
PERSON	Betty
PERSON	Sandra
PERSON	Ashley
PERSON	Dorothy
PERSON	Kimberly
PERSON	Emily
PERSON	Donna
PERSON	Michelle
PERSON	Carol
PERSON	Amanda
PERSON	Melissa
PERSON	Deborah
PERSON	Stephanie
PERSON	Rebecca
PERSON	Laura
PERSON	Sharon
PERSON	Cynthia
PERSON	Kathleen
PERSON	Amy
PERSON	Angela
PERSON	Anna
PERSON	Ruth
PERSON	Brenda
PERSON	Pamela
PERSON	Nicole
PERSON	Katherine
PERSON	Victoria
PERSON	Christine
PERSON	Rachel
PERSON	Catherine
PERSON	Maria
PERSON	Diane
PERSON	Alice
PERSON	Julie
PERSON	Grace
PERSON	Judith
)GAZ";
    return text;
}

const std::vector<EntityLabel>& all_entity_labels() {
    static const std::vector<EntityLabel> labels = [] {
        std::vector<EntityLabel> v;
        for (std::size_t i = 0; i < kEntityLabelCount; ++i) {
            v.push_back(static_cast<EntityLabel>(i));
        }
        return v;
    }();
    return labels;
}

std::string_view to_string(EntityLabel label) {
    return kLabelNames[static_cast<std::size_t>(label)];
}

std::optional<EntityLabel> parse_entity_label(std::string_view name) {
    for (std::size_t i = 0; i < kEntityLabelCount; ++i) {
        if (kLabelNames[i] == name) return static_cast<EntityLabel>(i);
    }
    return std::nullopt;
}

}  // namespace metaforge
