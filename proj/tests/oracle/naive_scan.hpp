#pragma once

// Brute-force reference executor for randomized engine checks. Deliberately
// shares nothing with src/engine.cpp: its own parsing, normalization and
// aggregation, written directly from the execution rules.

#include <cctype>
#include <cstdlib>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "condsql/query.hpp"
#include "condsql/table.hpp"

namespace oracle {

inline std::string fold_words(const std::string& s) {
    std::istringstream in(s);
    std::string word, out;
    while (in >> word) {
        for (auto& c : word) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        if (!out.empty()) out += ' ';
        out += word;
    }
    return out;
}

inline std::optional<double> to_number(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\n");
    if (b == std::string::npos) return std::nullopt;
    std::size_t e = s.find_last_not_of(" \t\n");
    std::string t = s.substr(b, e - b + 1);
    const char* begin = t.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end != begin + t.size()) return std::nullopt;
    if (t.find_first_of("xXpPnNiI") != std::string::npos) return std::nullopt;  // hex, nan, inf
    return v;
}

struct Result {
    std::size_t matched = 0;
    std::vector<std::string> rows;  // selected cell texts, table order
    bool has_scalar = false;
    std::optional<double> scalar;
};

inline bool row_matches(const condsql::CanonicalQuery& q, const condsql::Table& t,
                        const std::vector<condsql::Cell>& row) {
    for (const auto& c : q.conds) {
        const std::string& cell = row[c.col].text;
        const bool real = t.types[c.col] == condsql::ColumnType::Real;
        if (c.op == condsql::Op::Eq && !real) {
            if (fold_words(cell) != fold_words(c.value)) return false;
            continue;
        }
        auto x = to_number(cell);
        auto v = to_number(c.value);
        if (!x || !v) return false;
        if (c.op == condsql::Op::Eq && !(*x == *v)) return false;
        if (c.op == condsql::Op::Gt && !(*x > *v)) return false;
        if (c.op == condsql::Op::Lt && !(*x < *v)) return false;
    }
    return true;
}

inline Result run(const condsql::CanonicalQuery& q, const condsql::Table& t) {
    Result r;
    std::vector<std::string> picked;
    for (const auto& row : t.rows) {
        if (row_matches(q, t, row)) picked.push_back(row[q.sel].text);
    }
    r.matched = picked.size();
    if (q.agg == condsql::Agg::None) {
        r.rows = picked;
        return r;
    }
    r.has_scalar = true;
    std::vector<double> nums;
    for (const auto& s : picked) {
        if (auto x = to_number(s)) nums.push_back(*x);
    }
    switch (q.agg) {
        case condsql::Agg::Count: r.scalar = static_cast<double>(picked.size()); break;
        case condsql::Agg::Sum: {
            double s = 0;
            for (double x : nums) s += x;
            r.scalar = s;
            break;
        }
        case condsql::Agg::Avg: {
            if (nums.empty()) break;
            double s = 0;
            for (double x : nums) s += x;
            r.scalar = s / static_cast<double>(nums.size());
            break;
        }
        case condsql::Agg::Max:
            for (double x : nums) if (!r.scalar || x > *r.scalar) r.scalar = x;
            break;
        case condsql::Agg::Min:
            for (double x : nums) if (!r.scalar || x < *r.scalar) r.scalar = x;
            break;
        default: break;
    }
    return r;
}

}  // namespace oracle
