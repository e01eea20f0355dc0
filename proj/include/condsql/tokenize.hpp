#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace condsql {

struct CharSpan {
    std::size_t begin = 0;
    std::size_t end = 0;  // exclusive
    friend bool operator==(const CharSpan&, const CharSpan&) = default;
};

struct Token {
    std::string surface;
    CharSpan span;
    // Index into TokenizedText::units.
    std::size_t unit = 0;
};

// A distinct word (case-insensitive); masking it deletes every occurrence.
struct FeatureUnit {
    std::string surface;  // first occurrence, original case
    std::string key;      // case-folded
    std::vector<std::size_t> positions;  // indices into tokens
};

struct TokenizedText {
    std::string original;
    std::vector<Token> tokens;      // every occurrence, sentence order
    std::vector<FeatureUnit> units;  // distinct words, first-occurrence order

    // Number of feature units (distinct words).
    std::size_t size() const { return units.size(); }

    // Tokens joined by single spaces.
    std::string normalized() const;

    // Original text from the first to the last token of [first, last).
    std::string slice(std::size_t first, std::size_t last) const;
};

// Splits on whitespace and punctuation. A digit run with internal '.', '-',
// ':' or ',' stays one token; a trailing '?' is dropped with the rest of the
// punctuation. Throws ParseError on empty/whitespace-only text.
TokenizedText tokenize(std::string_view text);

// Raw token surfaces only, no unit grouping; returns empty for empty input.
std::vector<std::string> split_words(std::string_view text);

// Parses as a number, or looks like a date/time (digit groups joined by '-' or ':').
bool is_numeric_like(std::string_view token);

}  // namespace condsql
