#include "condsql/engine.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include <nlohmann/json.hpp>

#include "condsql/error.hpp"
#include "condsql/text_util.hpp"

namespace condsql {

const char* to_string(ViolationKind k) {
    switch (k) {
        case ViolationKind::IndexOutOfRange: return "IndexOutOfRange";
        case ViolationKind::AggOnText: return "AggOnText";
        case ViolationKind::ComparisonOnText: return "ComparisonOnText";
        case ViolationKind::NonNumericValue: return "NonNumericValue";
        case ViolationKind::ComparisonNeedsNumber: return "ComparisonNeedsNumber";
        case ViolationKind::EmptyValue: return "EmptyValue";
    }
    return "?";
}

std::vector<Violation> validate_syntax(const CanonicalQuery& query, const Table& table) {
    std::vector<Violation> out;
    const std::size_t arity = table.arity();
    if (query.sel >= arity) {
        out.push_back({ViolationKind::IndexOutOfRange, std::nullopt,
                       "select column " + std::to_string(query.sel) + " out of range"});
    } else if ((query.agg == Agg::Sum || query.agg == Agg::Avg) && !table.is_real(query.sel)) {
        out.push_back({ViolationKind::AggOnText, std::nullopt,
                       std::string(agg_name(query.agg)) + " over text column '" +
                           table.header[query.sel] + "'"});
    }
    for (std::size_t i = 0; i < query.conds.size(); ++i) {
        const Condition& c = query.conds[i];
        if (c.col >= arity) {
            out.push_back({ViolationKind::IndexOutOfRange, i,
                           "condition column " + std::to_string(c.col) + " out of range"});
            continue;
        }
        if (trim(c.value).empty()) {
            out.push_back({ViolationKind::EmptyValue, i, "empty condition value"});
            continue;
        }
        const bool comparison = c.op != Op::Eq;
        const bool numeric_value = parse_number(c.value).has_value();
        const std::string& name = table.header[c.col];
        if (comparison && !table.is_real(c.col)) {
            out.push_back({ViolationKind::ComparisonOnText, i,
                           std::string(op_symbol(c.op)) + " on text column '" + name + "'"});
        }
        if (table.is_real(c.col) && !numeric_value) {
            out.push_back({ViolationKind::NonNumericValue, i,
                           "value '" + c.value + "' is not numeric but column '" + name + "' is real"});
        }
        if (comparison && !numeric_value) {
            out.push_back({ViolationKind::ComparisonNeedsNumber, i,
                           std::string(op_symbol(c.op)) + " needs a numeric value, got '" + c.value + "'"});
        }
    }
    return out;
}

bool condition_holds(const Condition& cond, const Cell& cell, ColumnType type) {
    if (cond.op == Op::Eq && type == ColumnType::Text) {
        return normalize(cell.text) == normalize(cond.value);
    }
    // Real-column EQ and every comparison are numeric; dirty cells never match.
    const auto value = parse_number(cond.value);
    const auto number = type == ColumnType::Real ? cell.number : parse_number(cell.text);
    if (!value || !number) return false;
    switch (cond.op) {
        case Op::Eq: return *number == *value;
        case Op::Gt: return *number > *value;
        case Op::Lt: return *number < *value;
    }
    return false;
}

namespace {

std::optional<double> cell_number(const Cell& cell) {
    return cell.number ? cell.number : parse_number(cell.text);
}

}  // namespace

ResultSet execute(const CanonicalQuery& query, const Table& table) {
    if (auto v = validate_syntax(query, table); !v.empty()) {
        throw RuntimeViolation("query failed rule validation: " + v.front().message);
    }
    ResultSet result;
    result.kind = query.agg == Agg::None ? ResultSet::Kind::Rows : ResultSet::Kind::Scalar;

    std::vector<const Cell*> selected;
    for (const auto& row : table.rows) {
        bool ok = true;
        for (const auto& c : query.conds) {
            if (!condition_holds(c, row[c.col], table.types[c.col])) {
                ok = false;
                break;
            }
        }
        if (ok) selected.push_back(&row[query.sel]);
    }
    result.matched_count = selected.size();

    switch (query.agg) {
        case Agg::None:
            for (const Cell* c : selected) result.rows.push_back(*c);
            break;
        case Agg::Count:
            result.scalar = static_cast<double>(selected.size());
            break;
        case Agg::Sum:
        case Agg::Avg: {
            double sum = 0.0;
            std::size_t n = 0;
            for (const Cell* c : selected) {
                if (auto x = cell_number(*c)) {
                    sum += *x;
                    ++n;
                }
            }
            if (query.agg == Agg::Sum) {
                result.scalar = sum;
            } else if (n > 0) {
                result.scalar = sum / static_cast<double>(n);
            }
            break;
        }
        case Agg::Max:
        case Agg::Min: {
            for (const Cell* c : selected) {
                auto x = cell_number(*c);
                if (!x) continue;
                if (!result.scalar || (query.agg == Agg::Max ? *x > *result.scalar : *x < *result.scalar)) {
                    result.scalar = *x;
                }
            }
            break;
        }
    }
    return result;
}

namespace {

using CondKey = std::tuple<std::size_t, int, std::string>;

std::vector<CondKey> cond_keys(const CanonicalQuery& q, const Table& table) {
    std::vector<CondKey> keys;
    keys.reserve(q.conds.size());
    for (const auto& c : q.conds) {
        const bool numeric = c.col < table.arity() && table.is_real(c.col);
        keys.emplace_back(c.col, static_cast<int>(c.op), canonical_value(c.value, numeric));
    }
    std::sort(keys.begin(), keys.end());
    return keys;
}

std::vector<std::string> row_keys(const ResultSet& r, bool numeric) {
    std::vector<std::string> keys;
    keys.reserve(r.rows.size());
    for (const auto& cell : r.rows) {
        keys.push_back(numeric && cell.number ? format_number(*cell.number) : normalize(cell.text));
    }
    std::sort(keys.begin(), keys.end());
    return keys;
}

bool scalar_equal(const std::optional<double>& a, const std::optional<double>& b) {
    if (!a || !b) return !a && !b;
    const double scale = std::max({1.0, std::fabs(*a), std::fabs(*b)});
    return std::fabs(*a - *b) <= 1e-12 * scale;
}

}  // namespace

bool logical_form_equal(const CanonicalQuery& a, const CanonicalQuery& b, const Table& table) {
    return a.sel == b.sel && a.agg == b.agg && a.connector == b.connector &&
           cond_keys(a, table) == cond_keys(b, table);
}

bool execution_equal(const CanonicalQuery& a, const CanonicalQuery& b, const Table& table) {
    const ResultSet ra = execute(a, table);
    const ResultSet rb = execute(b, table);
    if (ra.kind != rb.kind) return false;
    if (ra.kind == ResultSet::Kind::Scalar) return scalar_equal(ra.scalar, rb.scalar);
    const bool na = a.sel < table.arity() && table.is_real(a.sel);
    const bool nb = b.sel < table.arity() && table.is_real(b.sel);
    return row_keys(ra, na) == row_keys(rb, nb);
}

std::string format_result(const ResultSet& r) {
    if (r.kind == ResultSet::Kind::Scalar) return r.scalar ? format_number(*r.scalar) : "null";
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& c : r.rows) {
        if (c.number && std::trunc(*c.number) == *c.number && std::abs(*c.number) < 9.0e15) {
            rows.push_back(static_cast<long long>(*c.number));
        } else if (c.number) {
            rows.push_back(*c.number);
        } else {
            rows.push_back(c.text);
        }
    }
    return rows.dump();
}

}  // namespace condsql
