#include "condsql/table.hpp"

#include "condsql/error.hpp"
#include "condsql/text_util.hpp"

namespace condsql {

const char* to_string(ColumnType t) { return t == ColumnType::Real ? "real" : "text"; }

std::optional<std::size_t> Table::find_column(const std::string& name) const {
    const std::string key = normalize(name);
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (normalize(header[i]) == key) return i;
    }
    return std::nullopt;
}

Cell make_cell(std::string text, ColumnType type) {
    Cell cell;
    cell.text = std::move(text);
    if (type == ColumnType::Real) {
        cell.number = parse_number(cell.text);
        cell.dirty = !cell.number.has_value();
    }
    return cell;
}

void TableStore::add(Table table) {
    if (table.types.size() != table.header.size()) {
        throw ValidationError("table '" + table.id + "': header has " +
                              std::to_string(table.header.size()) + " columns but types has " +
                              std::to_string(table.types.size()));
    }
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        if (table.rows[r].size() != table.header.size()) {
            throw ValidationError("table '" + table.id + "': row " + std::to_string(r) + " has " +
                                  std::to_string(table.rows[r].size()) + " cells, expected " +
                                  std::to_string(table.header.size()));
        }
    }
    const std::string id = table.id;
    if (!tables_.emplace(id, std::move(table)).second) {
        throw ValidationError("duplicate table id '" + id + "'");
    }
}

const Table* TableStore::find(const std::string& id) const {
    auto it = tables_.find(id);
    return it == tables_.end() ? nullptr : &it->second;
}

const Table& TableStore::at(const std::string& id) const {
    if (const Table* t = find(id)) return *t;
    throw ValidationError("unknown table id '" + id + "'");
}

}  // namespace condsql
