#include "condsql/cli.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "condsql/dataset.hpp"
#include "condsql/engine.hpp"
#include "condsql/error.hpp"
#include "condsql/eval.hpp"
#include "condsql/explain.hpp"
#include "condsql/refine.hpp"
#include "condsql/scorer.hpp"
#include "condsql/text_util.hpp"

namespace condsql {

using nlohmann::json;

namespace {

struct RunConfig {
    std::string tables;
    std::string data;
    std::string predictions;
    std::string scorer = "lexical";
    bool fallback = false;
    int timeout_ms = 5000;
    std::string out;
    std::string trace;
    std::string format = "text";
    ExplainConfig explain;
    FusionConfig fusion;
};

class Output {
public:
    Output(const std::string& path, std::ostream& fallback) {
        if (!path.empty()) {
            file_.open(path);
            if (!file_) throw IoError("cannot write '" + path + "'");
        }
        stream_ = path.empty() ? &fallback : &file_;
    }
    std::ostream& operator*() { return *stream_; }

private:
    std::ofstream file_;
    std::ostream* stream_;
};

std::shared_ptr<const TableStore> need_tables(const RunConfig& cfg) {
    if (cfg.tables.empty()) throw CLI::RequiredError("--tables");
    return std::make_shared<const TableStore>(load_tables(cfg.tables));
}

std::unique_ptr<Scorer> make_scorer(const RunConfig& cfg, const std::shared_ptr<const TableStore>& store) {
    const std::string& s = cfg.scorer;
    if (s == "lexical") return std::make_unique<LexicalScorer>(store);
    if (s.rfind("mock:", 0) == 0) return std::make_unique<MockScorer>(MockScorer::from_file(s.substr(5)));
    if (s.rfind("remote:", 0) == 0) {
        RemoteConfig rc;
        rc.endpoint = s.substr(7);
        rc.timeout = std::chrono::milliseconds(cfg.timeout_ms);
        if (cfg.fallback) rc.fallback = std::make_shared<LexicalScorer>(store);
        return std::make_unique<RemoteScorer>(rc);
    }
    throw CLI::ValidationError("--scorer", "expected lexical, mock:PATH or remote:URL, got '" + s + "'");
}

std::string weight_str(double w) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", w);
    return buf;
}

int cmd_exec(const RunConfig& cfg, const std::string& query, std::ostream& out, std::ostream& err) {
    const auto store = need_tables(cfg);
    Output sink(cfg.out, out);
    auto run = [&](const CanonicalQuery& q, const Table& table) -> bool {
        if (auto v = validate_syntax(q, table); !v.empty()) {
            std::string msg;
            for (const auto& x : v) msg += (msg.empty() ? "" : "; ") + std::string(to_string(x.kind)) + ": " + x.message;
            err << "violation: " << msg << '\n';
            *sink << "error\n";
            return false;
        }
        *sink << format_result(execute(q, table)) << '\n';
        return true;
    };
    if (!query.empty()) {
        try {
            const ParsedQuery p = parse_rendered(query, *store);
            return run(p.query, store->at(p.table_id)) ? kExitOk : kExitDataError;
        } catch (const IoError&) {
            throw;
        } catch (const Error& e) {
            err << "error: " << e.what() << '\n';
            return kExitDataError;
        }
    }
    if (cfg.predictions.empty()) throw CLI::ValidationError("exec", "give --query or --predictions");
    std::ifstream in(cfg.predictions);
    if (!in) throw IoError("cannot open '" + cfg.predictions + "'");
    int status = kExitOk;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            const json j = json::parse(line);
            const Table& table = store->at(j.at("table_id").get<std::string>());
            const CanonicalQuery q = query_from_json(j.at("sql"));
            if (!run(q, table)) {
                err << "  (line " << line_no << ")\n";
                status = kExitDataError;
            }
        } catch (const json::exception& e) {
            err << "line " << line_no << ": " << e.what() << '\n';
            *sink << "error\n";
            status = kExitDataError;
        } catch (const Error& e) {
            err << "line " << line_no << ": " << e.what() << '\n';
            *sink << "error\n";
            status = kExitDataError;
        }
    }
    return status;
}

std::vector<TokenRange> parse_spans(const std::string& spec) {
    std::vector<TokenRange> out;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto dash = item.find('-');
        if (dash == std::string::npos) throw CLI::ValidationError("--spans", "expected FIRST-LAST pairs, got '" + item + "'");
        out.push_back({std::stoul(item.substr(0, dash)), std::stoul(item.substr(dash + 1))});
    }
    return out;
}

int cmd_explain(const RunConfig& cfg, const std::string& question, const std::string& table_id,
                const std::string& column, const std::string& spans_spec, const std::string& value,
                std::ostream& out) {
    const auto store = need_tables(cfg);
    const Table& table = store->at(table_id);
    std::optional<std::size_t> col = table.find_column(column);
    if (!col) {
        if (auto n = parse_number(column); n && *n >= 0 && *n < static_cast<double>(table.arity())) {
            col = static_cast<std::size_t>(*n);
        }
    }
    if (!col) throw ValidationError("table '" + table_id + "' has no column '" + column + "'");
    const auto scorer = make_scorer(cfg, store);
    const TokenizedText text = tokenize(question);
    const ScoringContext ctx = scoring_context(table, *col, question);
    const Explanation ex = explain(text, *scorer, ctx, cfg.explain);

    std::vector<TokenRange> spans;
    if (!spans_spec.empty()) spans = parse_spans(spans_spec);
    if (!value.empty()) {
        CandidateTriple t;
        t.col = *col;
        t.value = value;
        auto more = generate_value_candidates(text, t, cfg.fusion);
        spans.insert(spans.end(), more.begin(), more.end());
    }
    std::vector<SpanStat> stats;
    if (!spans.empty()) stats = explain_spans(text, *scorer, ctx, spans, cfg.explain);

    Output sink(cfg.out, out);
    if (cfg.format == "json") {
        json j = explanation_to_json(ex);
        if (!stats.empty()) {
            json s = json::array();
            for (const auto& st : stats) s.push_back({st.text, st.range.width(), st.contribution});
            j["spans"] = s;
        }
        *sink << j.dump() << '\n';
        return kExitOk;
    }
    for (std::size_t i = 0; i < ex.units.size(); ++i) *sink << ex.units[i] << '\t' << weight_str(ex.weights[i]) << '\n';
    if (!stats.empty()) {
        *sink << '\n';
        for (const auto& st : stats) *sink << st.text << '\t' << st.range.width() << '\t' << weight_str(st.contribution) << '\n';
    }
    return kExitOk;
}

int cmd_refine(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const auto store = need_tables(cfg);
    if (cfg.data.empty()) throw CLI::RequiredError("--data");
    const auto scorer = make_scorer(cfg, store);
    std::ifstream in(cfg.data);
    if (!in) throw IoError("cannot open '" + cfg.data + "'");
    Output sink(cfg.out, out);
    std::optional<std::ofstream> trace;
    if (!cfg.trace.empty()) {
        trace.emplace(cfg.trace);
        if (!*trace) throw IoError("cannot write '" + cfg.trace + "'");
    }

    int status = kExitOk;
    std::size_t done = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            const json j = json::parse(line);
            const std::string question = j.at("question").get<std::string>();
            const Table& table = store->at(j.at("table_id").get<std::string>());

            std::vector<std::vector<CandidateTriple>> paths;
            if (auto p = j.find("paths"); p != j.end()) {
                for (const auto& path : *p) {
                    std::vector<CandidateTriple> ts;
                    for (const auto& t : path) ts.push_back(triple_from_json(t));
                    paths.push_back(std::move(ts));
                }
            } else {
                std::vector<CandidateTriple> ts;
                for (const auto& t : j.at("triples")) ts.push_back(triple_from_json(t));
                paths.push_back(std::move(ts));
            }
            const auto fused = fuse_candidates(paths, cfg.fusion, &table);
            const TokenizedText text = tokenize(question);
            const RefineContext ctx{table, *scorer, cfg.explain, cfg.fusion};
            const WhereRefinement refined = refine_where_clause(fused, text, ctx);

            CanonicalQuery q;
            if (auto s = j.find("sql"); s != j.end()) {
                q.sel = s->value("sel", std::size_t{0});
                q.agg = agg_from_code(s->value("agg", 0)).value_or(Agg::None);
            }
            json triples = json::array();
            for (const auto& o : refined.outcomes) {
                q.conds.push_back(o.final);
                CandidateTriple t = o.input;
                t.col = o.final.col;
                t.op = o.final.op;
                t.value = o.final.value;
                t.value_span.reset();
                triples.push_back(triple_to_json(t));
                if (trace) {
                    json tr = outcome_to_json(o, question);
                    if (auto id = j.find("id"); id != j.end()) tr["id"] = *id;
                    *trace << tr.dump() << '\n';
                }
            }
            json record = {{"question", question},
                           {"table_id", table.id},
                           {"sql", query_to_json(q, &table)},
                           {"triples", triples}};
            if (auto id = j.find("id"); id != j.end()) record["id"] = *id;
            *sink << record.dump() << '\n';
            ++done;
        } catch (const IoError&) {
            throw;
        } catch (const json::exception& e) {
            err << "line " << line_no << ": " << e.what() << '\n';
            status = kExitDataError;
        } catch (const Error& e) {
            err << "line " << line_no << ": " << e.what() << '\n';
            status = kExitDataError;
        }
    }
    err << "refined " << done << " line(s)\n";
    return status;
}

int cmd_eval(const RunConfig& cfg, std::ostream& out) {
    const auto store = need_tables(cfg);
    if (cfg.data.empty()) throw CLI::RequiredError("--data");
    if (cfg.predictions.empty()) throw CLI::RequiredError("--predictions");
    const auto gold = load_examples(cfg.data, *store);
    const auto preds = load_predictions(cfg.predictions);
    const EvalReport report = evaluate(preds, gold, *store);
    Output sink(cfg.out, out);
    const auto fmt = cfg.format == "json" ? ReportFormat::Structured : ReportFormat::Text;
    *sink << render_report(report, fmt);
    if (fmt == ReportFormat::Structured) *sink << '\n';
    return kExitOk;
}

int cmd_ping(const std::string& endpoint, int timeout_ms, std::ostream& out, std::ostream& err) {
    RemoteConfig rc;
    rc.endpoint = endpoint;
    rc.timeout = std::chrono::milliseconds(timeout_ms);
    try {
        const HealthStatus h = RemoteScorer(rc).health();
        out << "ok model=" << h.model << '\n';
        return kExitOk;
    } catch (const TransportError& e) {
        err << "ping failed (" << to_string(e.kind()) << "): " << e.what() << '\n';
        return kExitDataError;
    }
}

void add_explain_flags(CLI::App* app, RunConfig& cfg) {
    app->add_option("--seed", cfg.explain.seed, "Sampling seed");
    app->add_option("--samples", cfg.explain.sample_count, "Perturbations per fit")->check(CLI::PositiveNumber);
    app->add_option("--kernel-width", cfg.explain.kernel_width, "Neighborhood kernel width")->check(CLI::PositiveNumber);
    app->add_option("--lambda", cfg.explain.ridge_lambda, "Ridge penalty on surrogate weights")->check(CLI::NonNegativeNumber);
    app->add_option("--threads", cfg.explain.threads, "Scoring threads")->check(CLI::PositiveNumber);
    app->add_flag("--exhaustive", cfg.explain.exhaustive, "Enumerate all masks instead of sampling");
    app->add_option("--scorer", cfg.scorer, "lexical | mock:FIXTURE | remote:URL");
    app->add_flag("--fallback", cfg.fallback, "Fall back to the lexical scorer when the remote one fails");
    app->add_option("--timeout-ms", cfg.timeout_ms, "Remote scorer timeout");
    app->add_option("--window", cfg.fusion.window, "Token window around the extracted value");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Condition verification and evaluation for single-table text-to-SQL", "condsql"};
    app.require_subcommand(1);
    RunConfig cfg;

    auto* exec = app.add_subcommand("exec", "Execute a rendered query or a predictions file");
    std::string query;
    exec->add_option("--tables", cfg.tables, "Tables file (line-delimited)");
    exec->add_option("--query", query, "Rendered query, e.g. SELECT COUNT(\"a\") FROM \"t\"");
    exec->add_option("--predictions", cfg.predictions, "Records with table_id and sql");
    exec->add_option("--out", cfg.out, "Output file (default stdout)");

    auto* expl = app.add_subcommand("explain", "Print token (and span) weights for a question");
    std::string question, table_id, column, spans, value;
    expl->add_option("--tables", cfg.tables, "Tables file");
    expl->add_option("--question", question, "Question text")->required();
    expl->add_option("--table", table_id, "Table id")->required();
    expl->add_option("--column", column, "Target column name or index")->required();
    expl->add_option("--spans", spans, "Token spans FIRST-LAST (exclusive), comma separated");
    expl->add_option("--value", value, "Extracted value; its window spans are ranked");
    expl->add_option("--format", cfg.format, "text | json")->check(CLI::IsMember({"text", "json"}));
    expl->add_option("--out", cfg.out, "Output file (default stdout)");
    add_explain_flags(expl, cfg);

    auto* refine = app.add_subcommand("refine", "Fuse and refine candidate WHERE triples");
    refine->add_option("--tables", cfg.tables, "Tables file");
    refine->add_option("--data", cfg.data, "Candidate triples (line-delimited)");
    refine->add_option("--out", cfg.out, "Refined records (default stdout)");
    refine->add_option("--trace", cfg.trace, "Per-triple outcome trace file");
    refine->add_option("--threshold", cfg.fusion.threshold, "Fusion confidence threshold")->check(CLI::Range(0.0, 1.0));
    refine->add_option("--max-iterations", cfg.fusion.max_eg_iterations, "Execution-guided iteration bound");
    add_explain_flags(refine, cfg);

    auto* ev = app.add_subcommand("eval", "Score predictions against gold examples");
    ev->add_option("--tables", cfg.tables, "Tables file");
    ev->add_option("--data", cfg.data, "Gold examples");
    ev->add_option("--predictions", cfg.predictions, "Prediction records");
    ev->add_option("--format", cfg.format, "text | json")->check(CLI::IsMember({"text", "json"}));
    ev->add_option("--out", cfg.out, "Output file (default stdout)");

    auto* ping = app.add_subcommand("ping", "Health-check a remote scorer");
    std::string endpoint;
    ping->add_option("endpoint", endpoint, "http://host:port")->required();
    ping->add_option("--timeout-ms", cfg.timeout_ms, "Timeout");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        if (*exec) return cmd_exec(cfg, query, out, err);
        if (*expl) return cmd_explain(cfg, question, table_id, column, spans, value, out);
        if (*refine) return cmd_refine(cfg, out, err);
        if (*ev) return cmd_eval(cfg, out);
        if (*ping) return cmd_ping(endpoint, cfg.timeout_ms, out, err);
    } catch (const CLI::Error& e) {
        err << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitDataError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitDataError;
    }
    return kExitUsage;
}

}  // namespace condsql
