#pragma once

// Random tables and rule-valid queries for property tests.

#include <random>
#include <string>
#include <vector>

#include "condsql/query.hpp"
#include "condsql/table.hpp"

namespace gen {

inline condsql::Table random_table(std::mt19937_64& rng, std::size_t max_rows = 20, std::size_t max_cols = 6) {
    static const std::vector<std::string> words = {"alpha", "Beta", " beta ", "gamma ray", "Gamma  Ray", "delta",
                                                   "n/a", "10", "x"};
    static const std::vector<std::string> numbers = {"0", "1", "2", "2.0", "3.5", "-1", "10", "20", "n/a", "7"};
    std::uniform_int_distribution<std::size_t> ncols(1, max_cols), nrows(0, max_rows);
    condsql::Table t;
    t.id = "rand";
    const std::size_t cols = ncols(rng);
    for (std::size_t c = 0; c < cols; ++c) {
        t.header.push_back("c" + std::to_string(c));
        t.types.push_back(rng() % 2 ? condsql::ColumnType::Real : condsql::ColumnType::Text);
    }
    const std::size_t rows = nrows(rng);
    for (std::size_t r = 0; r < rows; ++r) {
        std::vector<condsql::Cell> row;
        for (std::size_t c = 0; c < cols; ++c) {
            const auto& pool = t.types[c] == condsql::ColumnType::Real ? numbers : words;
            row.push_back(condsql::make_cell(pool[rng() % pool.size()], t.types[c]));
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

inline condsql::Condition random_condition(std::mt19937_64& rng, const condsql::Table& t) {
    static const std::vector<std::string> text_values = {"alpha", "BETA", "gamma ray", "zeta", "10"};
    static const std::vector<std::string> num_values = {"0", "1", "2", "2.00", "3.5", "5", "-1", "20"};
    condsql::Condition c;
    c.col = rng() % t.arity();
    if (t.is_real(c.col)) {
        c.op = static_cast<condsql::Op>(rng() % 3);
        c.value = num_values[rng() % num_values.size()];
        if (!t.rows.empty() && rng() % 2) {
            const auto& cell = t.rows[rng() % t.rows.size()][c.col];
            if (cell.number) c.value = cell.text;
        }
    } else {
        c.op = condsql::Op::Eq;
        c.value = text_values[rng() % text_values.size()];
        if (!t.rows.empty() && rng() % 2) c.value = t.rows[rng() % t.rows.size()][c.col].text;
    }
    return c;
}

// Always passes validate_syntax.
inline condsql::CanonicalQuery random_query(std::mt19937_64& rng, const condsql::Table& t, std::size_t max_conds = 3) {
    condsql::CanonicalQuery q;
    q.sel = rng() % t.arity();
    for (;;) {
        q.agg = static_cast<condsql::Agg>(rng() % 6);
        const bool text = !t.is_real(q.sel);
        if (!(text && (q.agg == condsql::Agg::Sum || q.agg == condsql::Agg::Avg))) break;
    }
    const std::size_t n = rng() % (max_conds + 1);
    for (std::size_t i = 0; i < n; ++i) q.conds.push_back(random_condition(rng, t));
    return q;
}

}  // namespace gen
