#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "condsql/query.hpp"
#include "condsql/table.hpp"

namespace condsql {

enum class ViolationKind {
    IndexOutOfRange,
    AggOnText,              // SUM/AVG over a text column
    ComparisonOnText,       // > or < against a text column
    NonNumericValue,        // value does not parse but the column is real
    ComparisonNeedsNumber,  // > or < with a value that does not parse
    EmptyValue,
};

const char* to_string(ViolationKind k);

struct Violation {
    ViolationKind kind;
    // Index into query.conds, absent for SELECT-clause violations.
    std::optional<std::size_t> cond;
    std::string message;
};

std::vector<Violation> validate_syntax(const CanonicalQuery& query, const Table& table);

struct ResultSet {
    enum class Kind { Rows, Scalar };
    Kind kind = Kind::Rows;
    std::vector<Cell> rows;
    // Empty optional is the "no value" marker (MAX/MIN/AVG over nothing).
    std::optional<double> scalar;
    std::size_t matched_count = 0;
};

// Throws RuntimeViolation when validate_syntax(query, table) is non-empty.
ResultSet execute(const CanonicalQuery& query, const Table& table);

inline bool is_empty(const ResultSet& r) { return r.matched_count == 0; }

// Structural match: sel, agg, and conds as a multiset of (col, op, canonical value).
bool logical_form_equal(const CanonicalQuery& a, const CanonicalQuery& b, const Table& table);

// Scalar for aggregates, multiset of selected cells otherwise.
bool execution_equal(const CanonicalQuery& a, const CanonicalQuery& b, const Table& table);

// Does a single cell satisfy a single condition under execute() semantics.
bool condition_holds(const Condition& cond, const Cell& cell, ColumnType type);

std::string format_result(const ResultSet& r);

}  // namespace condsql
