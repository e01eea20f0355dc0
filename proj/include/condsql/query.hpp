#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "condsql/table.hpp"

namespace condsql {

// WikiSQL aggregation codes.
enum class Agg { None = 0, Max = 1, Min = 2, Count = 3, Sum = 4, Avg = 5 };

// WikiSQL condition operator codes.
enum class Op { Eq = 0, Gt = 1, Lt = 2 };

// Only AND is executable; the slot exists for connector refinement.
enum class Connector { And };

const char* agg_name(Agg a);
const char* op_symbol(Op o);
std::optional<Agg> agg_from_code(long long code);
std::optional<Op> op_from_code(long long code);

struct Condition {
    std::size_t col = 0;
    Op op = Op::Eq;
    std::string value;

    friend bool operator==(const Condition&, const Condition&) = default;
};

struct CanonicalQuery {
    std::size_t sel = 0;
    Agg agg = Agg::None;
    std::vector<Condition> conds;
    Connector connector = Connector::And;

    friend bool operator==(const CanonicalQuery&, const CanonicalQuery&) = default;
};

// JSON scalar (string or number) to the value string stored in a Condition.
std::string scalar_to_string(const nlohmann::json& v);

// {"sel": int, "agg": int, "conds": [[col, op, value], ...]}. Range checks are
// the caller's job; only shape is validated here (throws ParseError).
CanonicalQuery query_from_json(const nlohmann::json& sql);
nlohmann::json query_to_json(const CanonicalQuery& q, const Table* table = nullptr);

// SELECT COUNT("driver") FROM "t1" WHERE "laps" > 53 AND "driver" = 'Ralf'
// Identifiers are double-quoted, text values single-quoted ('' escapes a quote),
// values on real columns that parse as numbers are emitted bare.
std::string render(const CanonicalQuery& q, const Table& table);

struct ParsedQuery {
    std::string table_id;
    CanonicalQuery query;
};

// Inverse of render(). Bare identifiers are accepted when they contain no
// spaces. Column names resolve case-insensitively against the store.
ParsedQuery parse_rendered(std::string_view sql, const TableStore& store);

}  // namespace condsql
