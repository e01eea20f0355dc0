#include "condsql/tokenize.hpp"

#include <cctype>
#include <unordered_map>

#include "condsql/error.hpp"
#include "condsql/text_util.hpp"

namespace condsql {

namespace {

bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }
bool is_word_char(char c) {
    // Bytes >= 0x80 are treated as letters so UTF-8 words stay whole.
    const auto u = static_cast<unsigned char>(c);
    return std::isalnum(u) != 0 || c == '_' || u >= 0x80;
}
bool is_joiner(char c) { return c == '.' || c == '-' || c == ':' || c == ','; }

std::vector<CharSpan> scan(std::string_view text) {
    std::vector<CharSpan> spans;
    std::size_t i = 0;
    while (i < text.size()) {
        if (!is_word_char(text[i])) {
            ++i;
            continue;
        }
        const std::size_t start = i;
        if (is_digit(text[i])) {
            // Numeric run: digits, with joiners allowed only between digits.
            while (i < text.size()) {
                if (is_digit(text[i])) {
                    ++i;
                } else if (is_joiner(text[i]) && i + 1 < text.size() && is_digit(text[i + 1])) {
                    ++i;
                } else {
                    break;
                }
            }
            // "3rd", "1980s": trailing letters belong to the same word.
            while (i < text.size() && is_word_char(text[i])) ++i;
        } else {
            while (i < text.size() && is_word_char(text[i])) ++i;
        }
        spans.push_back({start, i});
    }
    return spans;
}

}  // namespace

std::string TokenizedText::normalized() const {
    std::string out;
    for (const auto& t : tokens) {
        if (!out.empty()) out.push_back(' ');
        out += t.surface;
    }
    return out;
}

std::string TokenizedText::slice(std::size_t first, std::size_t last) const {
    if (first >= last || last > tokens.size()) return {};
    const std::size_t b = tokens[first].span.begin;
    const std::size_t e = tokens[last - 1].span.end;
    return original.substr(b, e - b);
}

TokenizedText tokenize(std::string_view text) {
    if (trim(text).empty()) throw ParseError("cannot tokenize empty text");
    TokenizedText out;
    out.original = std::string(text);
    std::unordered_map<std::string, std::size_t> unit_of;
    for (const CharSpan& s : scan(text)) {
        Token tok;
        tok.surface = std::string(text.substr(s.begin, s.end - s.begin));
        tok.span = s;
        std::string key = casefold(tok.surface);
        auto [it, inserted] = unit_of.emplace(key, out.units.size());
        if (inserted) out.units.push_back({tok.surface, key, {}});
        tok.unit = it->second;
        out.units[tok.unit].positions.push_back(out.tokens.size());
        out.tokens.push_back(std::move(tok));
    }
    if (out.tokens.empty()) throw ParseError("text has no word tokens: '" + std::string(text) + "'");
    return out;
}

std::vector<std::string> split_words(std::string_view text) {
    std::vector<std::string> out;
    for (const CharSpan& s : scan(text)) out.emplace_back(text.substr(s.begin, s.end - s.begin));
    return out;
}

bool is_numeric_like(std::string_view token) {
    if (parse_number(token)) return true;
    // Date/time shape: digit groups separated by '-' or ':' (2006-06-21, 21:00).
    bool saw_sep = false;
    bool prev_digit = false;
    for (char c : token) {
        if (is_digit(c)) {
            prev_digit = true;
        } else if ((c == '-' || c == ':') && prev_digit) {
            saw_sep = true;
            prev_digit = false;
        } else {
            return false;
        }
    }
    return saw_sep && prev_digit;
}

}  // namespace condsql
