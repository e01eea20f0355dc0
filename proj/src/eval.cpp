#include "condsql/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "condsql/engine.hpp"
#include "condsql/error.hpp"
#include "condsql/text_util.hpp"

namespace condsql {

using nlohmann::json;

std::vector<Prediction> read_predictions(std::istream& in) {
    std::vector<Prediction> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            const json j = json::parse(line);
            Prediction p;
            p.query = query_from_json(j.at("sql"));
            if (auto it = j.find("id"); it != j.end() && !it->is_null()) p.id = scalar_to_string(*it);
            out.push_back(std::move(p));
        } catch (const json::exception& e) {
            throw ParseError("predictions line " + std::to_string(line_no) + ": " + e.what());
        } catch (const ValidationError& e) {
            throw ValidationError("predictions line " + std::to_string(line_no) + ": " + e.what());
        } catch (const Error& e) {
            throw ParseError("predictions line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

std::vector<Prediction> load_predictions(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    return read_predictions(in);
}

namespace {

template <typename T>
bool same_multiset(std::vector<T> a, std::vector<T> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    return a == b;
}

ExampleResult score_one(const CanonicalQuery& pred, const Example& gold, const Table& table) {
    ExampleResult r;
    r.s_col = pred.sel == gold.gold.sel;
    r.s_agg = pred.agg == gold.gold.agg;
    r.w_num = pred.conds.size() == gold.gold.conds.size();

    std::vector<std::size_t> pc, gc;
    std::vector<int> po, go;
    std::vector<std::string> pv, gv;
    auto project = [&](const CanonicalQuery& q, auto& cols, auto& ops, auto& vals) {
        for (const auto& c : q.conds) {
            cols.push_back(c.col);
            ops.push_back(static_cast<int>(c.op));
            vals.push_back(canonical_value(c.value, c.col < table.arity() && table.is_real(c.col)));
        }
    };
    project(pred, pc, po, pv);
    project(gold.gold, gc, go, gv);
    r.w_col = same_multiset(pc, gc);
    r.w_op = same_multiset(po, go);
    r.w_val = same_multiset(pv, gv);

    r.invalid = !validate_syntax(pred, table).empty();
    if (r.invalid) return r;
    r.lf = logical_form_equal(pred, gold.gold, table);
    try {
        r.ex = execution_equal(pred, gold.gold, table);
    } catch (const RuntimeViolation&) {
        // gold itself is rule-invalid; nothing can match it by execution
        r.ex = false;
    }
    return r;
}

}  // namespace

EvalReport evaluate(const std::vector<Prediction>& predictions, const std::vector<Example>& gold,
                    const TableStore& store) {
    if (predictions.size() != gold.size()) {
        throw ValidationError("predictions (" + std::to_string(predictions.size()) + ") and gold (" +
                              std::to_string(gold.size()) + ") differ in length");
    }
    EvalReport report;
    report.n_examples = gold.size();
    std::size_t lf = 0, ex = 0, sc = 0, sa = 0, wc = 0, wo = 0, wv = 0, wn = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        ExampleResult r = score_one(predictions[i].query, gold[i], store.at(gold[i].table_id));
        r.id = predictions[i].id ? *predictions[i].id : gold[i].id ? *gold[i].id : std::to_string(i);
        lf += r.lf;
        ex += r.ex;
        sc += r.s_col;
        sa += r.s_agg;
        wc += r.w_col;
        wo += r.w_op;
        wv += r.w_val;
        wn += r.w_num;
        report.per_example.push_back(std::move(r));
    }
    if (report.n_examples > 0) {
        const double n = static_cast<double>(report.n_examples);
        report.acc_lf = lf / n;
        report.acc_ex = ex / n;
        report.components = {sc / n, sa / n, wc / n, wo / n, wv / n, wn / n};
    }
    return report;
}

EvalReport evaluate(const std::vector<CanonicalQuery>& predictions, const std::vector<Example>& gold,
                    const TableStore& store) {
    std::vector<Prediction> wrapped;
    wrapped.reserve(predictions.size());
    for (const auto& q : predictions) wrapped.push_back({q, std::nullopt});
    return evaluate(wrapped, gold, store);
}

json report_to_json(const EvalReport& report) {
    json per = json::array();
    for (const auto& r : report.per_example) {
        per.push_back({{"id", r.id},
                       {"lf", r.lf},
                       {"ex", r.ex},
                       {"s_col", r.s_col},
                       {"s_agg", r.s_agg},
                       {"w_col", r.w_col},
                       {"w_op", r.w_op},
                       {"w_val", r.w_val},
                       {"w_num", r.w_num},
                       {"invalid", r.invalid}});
    }
    const auto& c = report.components;
    return {{"n_examples", report.n_examples},
            {"acc_lf", report.acc_lf},
            {"acc_ex", report.acc_ex},
            {"components",
             {{"S_col", c.s_col}, {"S_agg", c.s_agg}, {"W_col", c.w_col}, {"W_op", c.w_op}, {"W_val", c.w_val}, {"W_num", c.w_num}}},
            {"per_example", per}};
}

EvalReport report_from_json(const json& j) {
    EvalReport r;
    r.n_examples = j.at("n_examples").get<std::size_t>();
    r.acc_lf = j.at("acc_lf").get<double>();
    r.acc_ex = j.at("acc_ex").get<double>();
    const auto& c = j.at("components");
    r.components = {c.at("S_col").get<double>(), c.at("S_agg").get<double>(), c.at("W_col").get<double>(),
                    c.at("W_op").get<double>(),  c.at("W_val").get<double>(), c.at("W_num").get<double>()};
    for (const auto& e : j.at("per_example")) {
        ExampleResult x;
        x.id = e.at("id").get<std::string>();
        x.lf = e.at("lf").get<bool>();
        x.ex = e.at("ex").get<bool>();
        x.s_col = e.at("s_col").get<bool>();
        x.s_agg = e.at("s_agg").get<bool>();
        x.w_col = e.at("w_col").get<bool>();
        x.w_op = e.at("w_op").get<bool>();
        x.w_val = e.at("w_val").get<bool>();
        x.w_num = e.at("w_num").get<bool>();
        x.invalid = e.value("invalid", false);
        r.per_example.push_back(std::move(x));
    }
    return r;
}

namespace {

std::string pct(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", v * 100.0);
    return buf;
}

}  // namespace

std::string render_report(const EvalReport& report, ReportFormat format) {
    if (format == ReportFormat::Structured) return report_to_json(report).dump();
    std::ostringstream out;
    if (report.n_examples == 0) {
        out << "n=0: no examples evaluated\n";
        return out.str();
    }
    out << "n=" << report.n_examples << "\n\n";
    out << "Acc_lf\tAcc_ex\n";
    out << pct(report.acc_lf) << '\t' << pct(report.acc_ex) << "\n\n";
    const auto& c = report.components;
    out << "S_col\tS_agg\tW_col\tW_op\tW_val\tW_num\n";
    out << pct(c.s_col) << '\t' << pct(c.s_agg) << '\t' << pct(c.w_col) << '\t' << pct(c.w_op) << '\t'
        << pct(c.w_val) << '\t' << pct(c.w_num) << '\n';
    return out.str();
}

}  // namespace condsql
