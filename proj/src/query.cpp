#include "condsql/query.hpp"

#include <cctype>
#include <cmath>

#include "condsql/error.hpp"
#include "condsql/text_util.hpp"

namespace condsql {

const char* agg_name(Agg a) {
    switch (a) {
        case Agg::None: return "";
        case Agg::Max: return "MAX";
        case Agg::Min: return "MIN";
        case Agg::Count: return "COUNT";
        case Agg::Sum: return "SUM";
        case Agg::Avg: return "AVG";
    }
    return "";
}

const char* op_symbol(Op o) {
    switch (o) {
        case Op::Eq: return "=";
        case Op::Gt: return ">";
        case Op::Lt: return "<";
    }
    return "?";
}

std::optional<Agg> agg_from_code(long long code) {
    if (code < 0 || code > 5) return std::nullopt;
    return static_cast<Agg>(code);
}

std::optional<Op> op_from_code(long long code) {
    if (code < 0 || code > 2) return std::nullopt;
    return static_cast<Op>(code);
}

std::string scalar_to_string(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer() || v.is_number_unsigned()) return v.dump();
    if (v.is_number_float()) return format_number(v.get<double>());
    if (v.is_null()) return "";
    throw ParseError("expected a string or number, got " + v.dump());
}

CanonicalQuery query_from_json(const nlohmann::json& sql) {
    if (!sql.is_object()) throw ParseError("sql must be an object");
    auto int_field = [&](const char* key) -> long long {
        auto it = sql.find(key);
        if (it == sql.end() || !it->is_number_integer()) {
            throw ParseError(std::string("sql.") + key + " must be an integer");
        }
        return it->get<long long>();
    };
    CanonicalQuery q;
    const long long sel = int_field("sel");
    if (sel < 0) throw ValidationError("sql.sel is negative");
    q.sel = static_cast<std::size_t>(sel);
    const long long agg = int_field("agg");
    auto a = agg_from_code(agg);
    if (!a) throw ValidationError("aggregation code " + std::to_string(agg) + " out of range 0..5");
    q.agg = *a;

    auto conds = sql.find("conds");
    if (conds == sql.end()) return q;
    if (!conds->is_array()) throw ParseError("sql.conds must be an array");
    for (const auto& c : *conds) {
        if (!c.is_array() || c.size() != 3 || !c[0].is_number_integer() ||
            !c[1].is_number_integer()) {
            throw ParseError("condition must be [column_index, op_code, value], got " + c.dump());
        }
        const long long col = c[0].get<long long>();
        if (col < 0) throw ValidationError("condition column index is negative");
        auto op = op_from_code(c[1].get<long long>());
        if (!op) throw ValidationError("operator code " + c[1].dump() + " out of range 0..2");
        q.conds.push_back({static_cast<std::size_t>(col), *op, scalar_to_string(c[2])});
    }
    return q;
}

nlohmann::json query_to_json(const CanonicalQuery& q, const Table* table) {
    nlohmann::json conds = nlohmann::json::array();
    for (const auto& c : q.conds) {
        nlohmann::json value = c.value;
        if (table && c.col < table->arity() && table->is_real(c.col)) {
            // WikiSQL stores numeric values as numbers.
            if (auto n = parse_number(c.value); n && format_number(*n) == trim(c.value)) {
                if (std::floor(*n) == *n && std::fabs(*n) < 9.0e15) {
                    value = static_cast<long long>(*n);
                } else {
                    value = *n;
                }
            }
        }
        conds.push_back({c.col, static_cast<int>(c.op), value});
    }
    return {{"sel", q.sel}, {"agg", static_cast<int>(q.agg)}, {"conds", conds}};
}

namespace {

std::string quote(std::string_view s, char q) {
    std::string out(1, q);
    for (char c : s) {
        out.push_back(c);
        if (c == q) out.push_back(q);
    }
    out.push_back(q);
    return out;
}

class RenderedLexer {
public:
    explicit RenderedLexer(std::string_view src) : src_(src) {}

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }
    bool at_end() {
        skip_ws();
        return pos_ >= src_.size();
    }
    bool accept_keyword(std::string_view kw) {
        skip_ws();
        if (src_.size() - pos_ < kw.size()) return false;
        if (casefold(src_.substr(pos_, kw.size())) != casefold(kw)) return false;
        const std::size_t end = pos_ + kw.size();
        if (end < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[end])) || src_[end] == '_')) {
            return false;
        }
        pos_ = end;
        return true;
    }
    bool accept_char(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    void expect_char(char c) {
        if (!accept_char(c)) fail(std::string("expected '") + c + "'");
    }
    std::string quoted(char q) {
        // pos_ is on the opening quote
        ++pos_;
        std::string out;
        while (pos_ < src_.size()) {
            char c = src_[pos_++];
            if (c == q) {
                if (pos_ < src_.size() && src_[pos_] == q) {
                    out.push_back(q);
                    ++pos_;
                    continue;
                }
                return out;
            }
            out.push_back(c);
        }
        fail("unterminated quoted string");
    }
    std::string identifier() {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == '"') return quoted('"');
        const std::size_t start = pos_;
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (std::isspace(static_cast<unsigned char>(c)) || c == ')' || c == '(' || c == '=' ||
                c == '<' || c == '>') {
                break;
            }
            ++pos_;
        }
        if (pos_ == start) fail("expected identifier");
        return std::string(src_.substr(start, pos_ - start));
    }
    std::string value() {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == '\'') return quoted('\'');
        const std::size_t start = pos_;
        while (pos_ < src_.size() && !std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        if (pos_ == start) fail("expected value");
        return std::string(src_.substr(start, pos_ - start));
    }
    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError("query parse error at offset " + std::to_string(pos_) + ": " + what);
    }

private:
    std::string_view src_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string render(const CanonicalQuery& q, const Table& table) {
    auto col_name = [&](std::size_t i) {
        return i < table.arity() ? table.header[i] : "col" + std::to_string(i);
    };
    std::string out = "SELECT ";
    const std::string sel = quote(col_name(q.sel), '"');
    if (q.agg == Agg::None) {
        out += sel;
    } else {
        out += agg_name(q.agg);
        out += "(" + sel + ")";
    }
    out += " FROM " + quote(table.id, '"');
    for (std::size_t i = 0; i < q.conds.size(); ++i) {
        const auto& c = q.conds[i];
        out += i == 0 ? " WHERE " : " AND ";
        out += quote(col_name(c.col), '"');
        out += ' ';
        out += op_symbol(c.op);
        out += ' ';
        const bool bare = c.col < table.arity() && table.is_real(c.col) && parse_number(c.value) &&
                          c.value.find_first_of(" \t'") == std::string::npos;
        out += bare ? c.value : quote(c.value, '\'');
    }
    return out;
}

ParsedQuery parse_rendered(std::string_view sql, const TableStore& store) {
    RenderedLexer lex(sql);
    if (!lex.accept_keyword("SELECT")) lex.fail("expected SELECT");

    Agg agg = Agg::None;
    for (Agg a : {Agg::Max, Agg::Min, Agg::Count, Agg::Sum, Agg::Avg}) {
        if (lex.accept_keyword(agg_name(a))) {
            agg = a;
            break;
        }
    }
    std::string sel_name;
    if (agg != Agg::None) {
        lex.expect_char('(');
        sel_name = lex.identifier();
        lex.expect_char(')');
    } else {
        sel_name = lex.identifier();
    }
    if (!lex.accept_keyword("FROM")) lex.fail("expected FROM");
    ParsedQuery out;
    out.table_id = lex.identifier();
    const Table& table = store.at(out.table_id);

    auto resolve = [&](const std::string& name) {
        auto idx = table.find_column(name);
        if (!idx) throw ValidationError("table '" + table.id + "' has no column '" + name + "'");
        return *idx;
    };
    out.query.sel = resolve(sel_name);
    out.query.agg = agg;

    if (lex.accept_keyword("WHERE")) {
        do {
            Condition c;
            c.col = resolve(lex.identifier());
            if (lex.accept_char('=')) {
                c.op = Op::Eq;
            } else if (lex.accept_char('>')) {
                c.op = Op::Gt;
            } else if (lex.accept_char('<')) {
                c.op = Op::Lt;
            } else {
                lex.fail("expected one of = > <");
            }
            c.value = lex.value();
            out.query.conds.push_back(std::move(c));
        } while (lex.accept_keyword("AND"));
    }
    if (!lex.at_end()) lex.fail("trailing input");
    return out;
}

}  // namespace condsql
