#include "condsql/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "condsql/error.hpp"
#include "condsql/text_util.hpp"
#include "condsql/tokenize.hpp"

namespace condsql {

using nlohmann::json;

namespace {

template <typename F>
void for_each_record(std::istream& in, F&& f) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError("line " + std::to_string(line_no) + ": malformed record: " + e.what());
        }
        try {
            f(j, line_no);
        } catch (const ParseError& e) {
            throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
        } catch (const ValidationError& e) {
            throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
        } catch (const json::exception& e) {
            throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
}

std::ifstream open(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    return in;
}

}  // namespace

Table table_from_json(const json& j) {
    if (!j.is_object()) throw ParseError("table record must be an object");
    Table t;
    t.id = j.at("id").get<std::string>();
    t.header = j.at("header").get<std::vector<std::string>>();
    for (const auto& ty : j.at("types")) {
        const std::string s = casefold(ty.get<std::string>());
        if (s == "text") {
            t.types.push_back(ColumnType::Text);
        } else if (s == "real") {
            t.types.push_back(ColumnType::Real);
        } else {
            throw ParseError("table '" + t.id + "': unknown column type '" + s + "'");
        }
    }
    if (t.types.size() != t.header.size()) {
        throw ValidationError("table '" + t.id + "': header/types length mismatch");
    }
    for (const auto& row : j.at("rows")) {
        if (!row.is_array() || row.size() != t.header.size()) {
            throw ValidationError("table '" + t.id + "': row arity does not match header");
        }
        std::vector<Cell> cells;
        cells.reserve(row.size());
        for (std::size_t c = 0; c < row.size(); ++c) {
            cells.push_back(make_cell(scalar_to_string(row[c]), t.types[c]));
        }
        t.rows.push_back(std::move(cells));
    }
    return t;
}

json table_to_json(const Table& t) {
    json types = json::array();
    for (auto ty : t.types) types.push_back(to_string(ty));
    json rows = json::array();
    for (const auto& row : t.rows) {
        json r = json::array();
        for (const auto& c : row) {
            if (c.number && format_number(*c.number) == trim(c.text)) {
                if (std::floor(*c.number) == *c.number && std::fabs(*c.number) < 9.0e15) {
                    r.push_back(static_cast<long long>(*c.number));
                } else {
                    r.push_back(*c.number);
                }
            } else {
                r.push_back(c.text);
            }
        }
        rows.push_back(std::move(r));
    }
    return {{"id", t.id}, {"header", t.header}, {"types", types}, {"rows", rows}};
}

TableStore read_tables(std::istream& in) {
    TableStore store;
    for_each_record(in, [&](const json& j, std::size_t) { store.add(table_from_json(j)); });
    return store;
}

TableStore load_tables(const std::filesystem::path& path) {
    auto in = open(path);
    return read_tables(in);
}

void check_against_table(const CanonicalQuery& q, const Table& table) {
    if (q.sel >= table.arity()) {
        throw ValidationError("select column " + std::to_string(q.sel) + " out of range for table '" +
                              table.id + "' with " + std::to_string(table.arity()) + " columns");
    }
    for (const auto& c : q.conds) {
        if (c.col >= table.arity()) {
            throw ValidationError("condition column " + std::to_string(c.col) +
                                  " out of range for table '" + table.id + "'");
        }
        if (trim(c.value).empty()) throw ValidationError("empty condition value");
    }
}

Example example_from_json(const json& j) {
    if (!j.is_object()) throw ParseError("example record must be an object");
    Example e;
    e.question = j.at("question").get<std::string>();
    e.table_id = j.at("table_id").get<std::string>();
    e.gold = query_from_json(j.at("sql"));
    if (auto it = j.find("id"); it != j.end() && !it->is_null()) e.id = scalar_to_string(*it);
    return e;
}

json example_to_json(const Example& e, const TableStore* store) {
    const Table* table = store ? store->find(e.table_id) : nullptr;
    json j = {{"question", e.question}, {"table_id", e.table_id}, {"sql", query_to_json(e.gold, table)}};
    if (e.id) j["id"] = *e.id;
    return j;
}

std::vector<Example> read_examples(std::istream& in, const TableStore& store) {
    std::vector<Example> out;
    for_each_record(in, [&](const json& j, std::size_t) {
        Example e = example_from_json(j);
        const Table* table = store.find(e.table_id);
        if (!table) throw ValidationError("unknown table_id '" + e.table_id + "'");
        check_against_table(e.gold, *table);
        out.push_back(std::move(e));
    });
    return out;
}

std::vector<Example> load_examples(const std::filesystem::path& path, const TableStore& store) {
    auto in = open(path);
    return read_examples(in, store);
}

namespace {

struct Occurrence {
    std::size_t begin;
    std::size_t end;
};

// Whole-token-sequence, case-insensitive occurrences of `phrase` in `text`.
std::vector<Occurrence> find_mentions(const std::string& text, const std::string& phrase) {
    std::vector<std::string> needle;
    for (auto& w : split_words(phrase)) needle.push_back(casefold(w));
    if (needle.empty()) return {};
    TokenizedText hay;
    try {
        hay = tokenize(text);
    } catch (const ParseError&) {
        return {};
    }
    std::vector<Occurrence> out;
    const auto& toks = hay.tokens;
    for (std::size_t i = 0; i + needle.size() <= toks.size();) {
        bool match = true;
        for (std::size_t k = 0; k < needle.size() && match; ++k) {
            match = casefold(toks[i + k].surface) == needle[k];
        }
        if (match) {
            out.push_back({toks[i].span.begin, toks[i + needle.size() - 1].span.end});
            i += needle.size();
        } else {
            ++i;
        }
    }
    return out;
}

std::string collapse_spaces(const std::string& s) {
    std::string out;
    bool space = false;
    for (char c : trim(s)) {
        if (c == ' ' || c == '\t') {
            space = true;
            continue;
        }
        if (space && !out.empty()) {
            // no space before closing punctuation left behind by a removal
            if (c != '?' && c != ',' && c != '.') out.push_back(' ');
        }
        space = false;
        out.push_back(c);
    }
    return out;
}

}  // namespace

Example erosion_augment(const Example& example, const TableStore& store, std::uint64_t seed) {
    Example out = example;
    const Table* table = store.find(example.table_id);
    if (!table) return out;

    std::vector<const Table*> others;
    for (const auto& [id, t] : store) {
        if (id != example.table_id && !t.header.empty()) others.push_back(&t);
    }

    std::mt19937_64 rng(seed);
    std::bernoulli_distribution coin(0.5);
    std::string question = example.question;

    if (!others.empty()) {
        std::vector<std::size_t> cols;
        for (const auto& c : example.gold.conds) {
            if (c.col < table->arity() && std::find(cols.begin(), cols.end(), c.col) == cols.end()) {
                cols.push_back(c.col);
            }
        }
        for (std::size_t col : cols) {
            if (col == example.gold.sel) continue;  // removed below regardless
            const auto mentions = find_mentions(question, table->header[col]);
            // Walk right-to-left so earlier offsets stay valid.
            std::vector<std::pair<Occurrence, std::string>> edits;
            for (const auto& m : mentions) {
                if (!coin(rng)) continue;
                std::uniform_int_distribution<std::size_t> pick_table(0, others.size() - 1);
                const Table* other = others[pick_table(rng)];
                std::uniform_int_distribution<std::size_t> pick_col(0, other->arity() - 1);
                edits.emplace_back(m, other->header[pick_col(rng)]);
            }
            for (auto it = edits.rbegin(); it != edits.rend(); ++it) {
                question.replace(it->first.begin, it->first.end - it->first.begin, it->second);
            }
        }
    }

    // Removal runs last and repeats until no mention remains, since a removal
    // or a substituted name can bring the select-column name back.
    const std::string& sel_name = table->header.at(example.gold.sel);
    for (;;) {
        const auto mentions = find_mentions(question, sel_name);
        if (mentions.empty()) break;
        for (auto it = mentions.rbegin(); it != mentions.rend(); ++it) {
            question.erase(it->begin, it->end - it->begin);
        }
        question = collapse_spaces(question);
    }
    out.question = question;
    return out;
}

}  // namespace condsql
