#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include <nlohmann/json.hpp>

#include "condsql/cli.hpp"
#include "condsql/dataset.hpp"
#include "condsql/engine.hpp"
#include "condsql/eval.hpp"
#include "condsql/explain.hpp"
#include "condsql/refine.hpp"
#include "condsql/scorer.hpp"

namespace py = pybind11;
using namespace condsql;

namespace {

// Routes Scorer calls to a Python callable(sentence, table_id, column_index, column_name) -> float.
class PyScorer final : public Scorer {
public:
    explicit PyScorer(py::object fn) : fn_(std::move(fn)) {}
    ~PyScorer() override {
        py::gil_scoped_acquire gil;
        fn_ = py::object();
    }
    double score(std::string_view sentence, const ScoringContext& ctx) const override {
        py::gil_scoped_acquire gil;
        return fn_(std::string(sentence), ctx.target.table_id, ctx.target.column_index, ctx.target.column_name)
            .cast<double>();
    }

private:
    py::object fn_;
};

py::object to_py(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

nlohmann::json from_py(const py::handle& obj) {
    return nlohmann::json::parse(py::module_::import("json").attr("dumps")(obj).cast<std::string>());
}

ExplainConfig explain_config(std::size_t samples, std::uint64_t seed, double kernel_width, double lambda,
                             bool exhaustive, std::size_t threads) {
    ExplainConfig cfg;
    cfg.sample_count = samples;
    cfg.seed = seed;
    cfg.kernel_width = kernel_width;
    cfg.ridge_lambda = lambda;
    cfg.exhaustive = exhaustive;
    cfg.threads = threads;
    cfg.validate();
    return cfg;
}

std::shared_ptr<const Scorer> make_scorer(py::object scorer, const std::shared_ptr<const TableStore>& store) {
    if (scorer.is_none()) return std::make_shared<LexicalScorer>(store);
    if (py::isinstance<py::str>(scorer)) {
        const auto spec = scorer.cast<std::string>();
        if (spec == "lexical") return std::make_shared<LexicalScorer>(store);
        if (spec.rfind("mock:", 0) == 0) return std::make_shared<MockScorer>(MockScorer::from_file(spec.substr(5)));
        if (spec.rfind("remote:", 0) == 0) return std::make_shared<RemoteScorer>(RemoteConfig{spec.substr(7)});
        throw ValidationError("scorer must be 'lexical', 'mock:PATH', 'remote:URL' or a callable");
    }
    return std::make_shared<PyScorer>(std::move(scorer));
}

class PyTables {
public:
    explicit PyTables(TableStore store) : store_(std::make_shared<TableStore>(std::move(store))) {}
    std::shared_ptr<const TableStore> store() const { return store_; }
    const Table& at(const std::string& id) const { return store_->at(id); }

private:
    std::shared_ptr<TableStore> store_;
};

}  // namespace

PYBIND11_MODULE(_condsql, m) {
    m.doc() = "Condition verification for text-to-SQL WHERE clauses";

    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ParseError>(m, "ParseError", m.attr("Error").ptr());
    py::register_exception<IoError>(m, "IoError", m.attr("Error").ptr());
    py::register_exception<ValidationError>(m, "ValidationError", m.attr("Error").ptr());
    py::register_exception<RuntimeViolation>(m, "RuntimeViolation", m.attr("Error").ptr());

    py::class_<PyTables>(m, "Tables")
        .def_static("load", [](const std::string& path) { return PyTables(load_tables(path)); }, py::arg("path"))
        .def_static("from_records",
                    [](const py::list& records) {
                        TableStore store;
                        for (const auto& r : records) store.add(table_from_json(from_py(r)));
                        return PyTables(std::move(store));
                    },
                    py::arg("records"))
        .def("__len__", [](const PyTables& t) { return t.store()->size(); })
        .def("__contains__", [](const PyTables& t, const std::string& id) { return t.store()->find(id) != nullptr; })
        .def("ids",
             [](const PyTables& t) {
                 std::vector<std::string> ids;
                 for (const auto& [id, _] : *t.store()) ids.push_back(id);
                 return ids;
             })
        .def("header", [](const PyTables& t, const std::string& id) { return t.at(id).header; }, py::arg("table_id"))
        .def("to_records",
             [](const PyTables& t) {
                 py::list out;
                 for (const auto& [_, table] : *t.store()) out.append(to_py(table_to_json(table)));
                 return out;
             });

    m.def(
        "validate",
        [](const PyTables& tables, const std::string& table_id, const py::dict& sql) {
            std::vector<std::string> out;
            for (const auto& v : validate_syntax(query_from_json(from_py(sql)), tables.at(table_id))) {
                out.push_back(std::string(to_string(v.kind)) + ": " + v.message);
            }
            return out;
        },
        py::arg("tables"), py::arg("table_id"), py::arg("sql"),
        "Rule violations of a WikiSQL-style query dict; empty when valid.");

    m.def(
        "execute",
        [](const PyTables& tables, const std::string& table_id, const py::dict& sql) {
            return to_py(nlohmann::json::parse(format_result(execute(query_from_json(from_py(sql)), tables.at(table_id)))));
        },
        py::arg("tables"), py::arg("table_id"), py::arg("sql"),
        "Run a query dict; returns a number, None, or a list of cell values.");

    m.def(
        "execute_sql",
        [](const PyTables& tables, const std::string& sql) {
            const ParsedQuery p = parse_rendered(sql, *tables.store());
            return to_py(nlohmann::json::parse(format_result(execute(p.query, tables.at(p.table_id)))));
        },
        py::arg("tables"), py::arg("sql"));

    m.def(
        "render",
        [](const PyTables& tables, const std::string& table_id, const py::dict& sql) {
            return render(query_from_json(from_py(sql)), tables.at(table_id));
        },
        py::arg("tables"), py::arg("table_id"), py::arg("sql"));

    m.def(
        "tokenize",
        [](const std::string& text) {
            std::vector<std::string> out;
            for (const auto& t : tokenize(text).tokens) out.push_back(t.surface);
            return out;
        },
        py::arg("text"));

    m.def(
        "explain",
        [](const std::string& text, py::object scorer, const std::string& table_id, std::size_t column_index,
           const std::string& column_name, std::size_t samples, std::uint64_t seed, double kernel_width,
           double ridge_lambda, bool exhaustive, std::size_t threads) {
            const auto cfg = explain_config(samples, seed, kernel_width, ridge_lambda, exhaustive, threads);
            const auto s = make_scorer(std::move(scorer), std::make_shared<const TableStore>());
            const ScoringContext ctx{{table_id, column_index, column_name}, text};
            Explanation e;
            {
                py::gil_scoped_release release;
                e = explain(text, *s, ctx, cfg);
            }
            return to_py(explanation_to_json(e));
        },
        py::arg("text"), py::arg("scorer"), py::arg("table_id") = "", py::arg("column_index") = 0,
        py::arg("column_name") = "", py::arg("samples") = 1000, py::arg("seed") = 0, py::arg("kernel_width") = 25.0,
        py::arg("ridge_lambda") = 1e-3, py::arg("exhaustive") = false, py::arg("threads") = 1,
        "Per-word surrogate weights. scorer is a callable(sentence, table_id, column_index, column_name) "
        "-> probability, or a scorer spec string.");

    m.def(
        "refine",
        [](const PyTables& tables, const std::string& question, const std::string& table_id, const py::list& triples,
           py::object scorer, std::size_t samples, std::uint64_t seed, std::size_t window,
           std::size_t max_iterations) {
            const Table& table = tables.at(table_id);
            const auto s = make_scorer(std::move(scorer), tables.store());
            RefineContext ctx{table, *s};
            ctx.explain = explain_config(samples, seed, 25.0, 1e-3, false, 1);
            ctx.fusion.window = window;
            ctx.fusion.max_eg_iterations = max_iterations;
            std::vector<CandidateTriple> parsed;
            for (const auto& t : triples) parsed.push_back(triple_from_json(from_py(t)));
            const auto text = tokenize(question);
            WhereRefinement r;
            {
                py::gil_scoped_release release;
                r = refine_where_clause(parsed, text, ctx);
            }
            py::list out;
            for (const auto& o : r.outcomes) out.append(to_py(outcome_to_json(o, question)));
            return out;
        },
        py::arg("tables"), py::arg("question"), py::arg("table_id"), py::arg("triples"), py::arg("scorer") = py::none(),
        py::arg("samples") = 1000, py::arg("seed") = 0, py::arg("window") = 1, py::arg("max_iterations") = 8,
        "Verify and repair candidate WHERE triples; returns one outcome dict per kept condition.");

    m.def(
        "evaluate",
        [](const PyTables& tables, const py::list& gold, const py::list& predictions) {
            std::vector<Example> g;
            for (const auto& x : gold) {
                g.push_back(example_from_json(from_py(x)));
                check_against_table(g.back().gold, tables.at(g.back().table_id));
            }
            std::vector<CanonicalQuery> p;
            for (const auto& x : predictions) p.push_back(query_from_json(from_py(x)));
            return to_py(report_to_json(evaluate(p, g, *tables.store())));
        },
        py::arg("tables"), py::arg("gold"), py::arg("predictions"),
        "gold: example dicts with question/table_id/sql; predictions: sql dicts in the same order.");

    m.def(
        "erosion_augment",
        [](const PyTables& tables, const py::dict& example, std::uint64_t seed) {
            return to_py(example_to_json(erosion_augment(example_from_json(from_py(example)), *tables.store(), seed),
                                         tables.store().get()));
        },
        py::arg("tables"), py::arg("example"), py::arg("seed") = 0);

    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out, err;
            int code;
            {
                py::gil_scoped_release release;
                code = run_cli(args, out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Run a condsql subcommand in-process; returns (exit_code, stdout, stderr).");
}
