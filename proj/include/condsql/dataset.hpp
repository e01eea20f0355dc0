#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "condsql/query.hpp"
#include "condsql/table.hpp"

namespace condsql {

struct Example {
    std::string question;
    std::string table_id;
    CanonicalQuery gold;
    std::optional<std::string> id;

    friend bool operator==(const Example&, const Example&) = default;
};

// WikiSQL *.tables.jsonl: {"id", "header", "types", "rows"}, one per line.
// Blank lines are skipped. Errors name the 1-based line number.
TableStore load_tables(const std::filesystem::path& path);
TableStore read_tables(std::istream& in);

// WikiSQL *.jsonl: {"question", "table_id", "sql": {"sel", "agg", "conds"}}.
// Every example is checked against its table.
std::vector<Example> load_examples(const std::filesystem::path& path, const TableStore& store);
std::vector<Example> read_examples(std::istream& in, const TableStore& store);

Table table_from_json(const nlohmann::json& j);
nlohmann::json table_to_json(const Table& t);
Example example_from_json(const nlohmann::json& j);
nlohmann::json example_to_json(const Example& e, const TableStore* store = nullptr);

// Throws ValidationError if any index or code is out of range for the table.
void check_against_table(const CanonicalQuery& q, const Table& table);

// Erosion-style question perturbation for training-data augmentation: drops
// every verbatim mention of the gold select column and, with probability 0.5
// each, swaps verbatim WHERE-column mentions for a column name drawn from a
// different table. The gold query is never touched.
Example erosion_augment(const Example& example, const TableStore& store, std::uint64_t seed);

}  // namespace condsql
