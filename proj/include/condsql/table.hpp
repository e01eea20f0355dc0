#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace condsql {

enum class ColumnType { Text, Real };

const char* to_string(ColumnType t);

struct Cell {
    std::string text;
    // Present for real-typed cells that parse as numbers.
    std::optional<double> number;

    // Real-typed cell whose text did not parse.
    bool dirty = false;

    friend bool operator==(const Cell&, const Cell&) = default;
};

struct Table {
    std::string id;
    std::vector<std::string> header;
    std::vector<ColumnType> types;
    std::vector<std::vector<Cell>> rows;

    std::size_t arity() const { return header.size(); }
    bool is_real(std::size_t col) const { return types.at(col) == ColumnType::Real; }

    // Case-insensitive header lookup.
    std::optional<std::size_t> find_column(const std::string& name) const;

    friend bool operator==(const Table&, const Table&) = default;
};

// Builds a cell for a column of the given type, parsing numbers for real columns.
Cell make_cell(std::string text, ColumnType type);

// Immutable after load; ids kept sorted so iteration order is deterministic.
class TableStore {
public:
    // Throws ValidationError on duplicate id or arity mismatch.
    void add(Table table);

    const Table* find(const std::string& id) const;
    const Table& at(const std::string& id) const;
    std::size_t size() const { return tables_.size(); }
    bool empty() const { return tables_.empty(); }

    auto begin() const { return tables_.begin(); }
    auto end() const { return tables_.end(); }

private:
    std::map<std::string, Table> tables_;
};

}  // namespace condsql
