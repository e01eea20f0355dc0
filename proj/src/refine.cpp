#include "condsql/refine.hpp"

#include <algorithm>
#include <map>
#include <tuple>

#include "condsql/error.hpp"
#include "condsql/text_util.hpp"

namespace condsql {

using nlohmann::json;

const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::AcceptedAsIs: return "AcceptedAsIs";
        case Verdict::ValueReplaced: return "ValueReplaced";
        case Verdict::RejectedNoCandidate: return "RejectedNoCandidate";
    }
    return "?";
}

const char* to_string(RuleFired r) {
    switch (r) {
        case RuleFired::RuleValidation: return "RuleValidation";
        case RuleFired::EGNonEmpty: return "EGNonEmpty";
        case RuleFired::EGEmptyLimeRescue: return "EGEmptyLimeRescue";
        case RuleFired::NumericDirect: return "NumericDirect";
        case RuleFired::NumericEqEmptyAccept: return "NumericEqEmptyAccept";
        case RuleFired::EGExhausted: return "EGExhausted";
        case RuleFired::PassThrough: return "PassThrough";
    }
    return "?";
}

void FusionConfig::validate() const {
    if (!(threshold > 0.0 && threshold < 1.0)) throw ValidationError("fusion threshold must be in (0,1)");
}

ScoringContext scoring_context(const Table& table, std::size_t column, const std::string& question) {
    return {{table.id, column, column < table.arity() ? table.header[column] : std::string()}, question};
}

namespace {

using TripleKey = std::tuple<std::size_t, int, std::string>;

TripleKey key_of(std::size_t col, Op op, const std::string& value, const Table* table) {
    const bool numeric = table && col < table->arity() && table->is_real(col);
    return {col, static_cast<int>(op), canonical_value(value, numeric)};
}

}  // namespace

std::vector<CandidateTriple> fuse_candidates(const std::vector<std::vector<CandidateTriple>>& paths,
                                             const FusionConfig& config, const Table* table) {
    config.validate();
    const std::vector<CandidateTriple>* chosen = nullptr;
    double best_mean = -1.0;
    for (const auto& path : paths) {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& t : path) {
            if (t.confidence >= config.threshold) {
                sum += t.confidence;
                ++n;
            }
        }
        if (n == 0) continue;
        const double mean = sum / static_cast<double>(n);
        if (mean > best_mean) {
            best_mean = mean;
            chosen = &path;
        }
    }
    std::vector<CandidateTriple> out;
    if (!chosen) return out;
    std::map<TripleKey, std::size_t> seen;
    for (const auto& t : *chosen) {
        if (t.confidence < config.threshold) continue;
        auto [it, inserted] = seen.emplace(key_of(t.col, t.op, t.value, table), out.size());
        if (inserted) {
            out.push_back(t);
        } else if (t.confidence > out[it->second].confidence) {
            out[it->second].confidence = t.confidence;
        }
    }
    return out;
}

TokenRange locate_value(const TokenizedText& question, const CandidateTriple& triple) {
    if (triple.value_span) {
        const auto& s = *triple.value_span;
        if (s.first < s.last && s.last <= question.tokens.size()) return s;
        throw ValidationError("declared value span [" + std::to_string(s.first) + ", " + std::to_string(s.last) +
                              ") is outside the question");
    }
    std::vector<std::string> needle;
    for (auto& w : split_words(triple.value)) needle.push_back(casefold(w));
    const auto& toks = question.tokens;
    if (!needle.empty() && needle.size() <= toks.size()) {
        for (std::size_t i = 0; i + needle.size() <= toks.size(); ++i) {
            bool match = true;
            for (std::size_t k = 0; k < needle.size() && match; ++k) {
                match = casefold(toks[i + k].surface) == needle[k];
            }
            if (match) return {i, i + needle.size()};
        }
    }
    throw ValidationError("value '" + triple.value + "' not found in question");
}

std::vector<TokenRange> generate_value_candidates(const TokenizedText& question, const CandidateTriple& triple,
                                                  const FusionConfig& config) {
    const TokenRange v = locate_value(question, triple);
    const std::size_t lo = v.first >= config.window ? v.first - config.window : 0;
    const std::size_t hi = std::min(question.tokens.size(), v.last + config.window);
    std::vector<TokenRange> out;
    for (std::size_t s = lo; s < hi; ++s) {
        for (std::size_t e = s + 1; e <= hi; ++e) out.push_back({s, e});
    }
    return out;
}

namespace {

// Executes a single-condition probe and bumps the outcome's call counter.
std::size_t probe(const RefineContext& ctx, RefinementOutcome& out, const Condition& cond) {
    CanonicalQuery q;
    q.sel = cond.col;
    q.conds = {cond};
    ++out.execute_calls;
    return ctx.execute(q, ctx.table).matched_count;
}

bool rule_valid(const Condition& cond, const Table& table) {
    CanonicalQuery q;
    q.sel = cond.col;
    q.conds = {cond};
    return validate_syntax(q, table).empty();
}

RefinementOutcome start(const CandidateTriple& triple) {
    RefinementOutcome out;
    out.input = triple;
    out.final = triple.condition();
    return out;
}

bool same_number_or_text(const std::string& a, const std::string& b) {
    auto na = parse_number(a);
    auto nb = parse_number(b);
    if (na && nb) return *na == *nb;
    return normalize(a) == normalize(b);
}

}  // namespace

RefinementOutcome refine_text_condition(const CandidateTriple& triple, const TokenizedText& question,
                                        const RefineContext& ctx) {
    RefinementOutcome out = start(triple);
    const std::size_t matched = probe(ctx, out, out.final);
    out.trace.push_back({triple.value, std::nullopt, matched, matched > 0 ? "execution non-empty; accept" : "execution empty"});
    if (matched > 0) {
        out.verdict = Verdict::AcceptedAsIs;
        out.rule_fired = RuleFired::EGNonEmpty;
        return out;
    }

    std::vector<TokenRange> candidates;
    try {
        candidates = generate_value_candidates(question, triple, ctx.fusion);
    } catch (const ValidationError& e) {
        out.verdict = Verdict::RejectedNoCandidate;
        out.rule_fired = RuleFired::PassThrough;
        out.trace.push_back({triple.value, std::nullopt, std::nullopt, std::string("passed through: ") + e.what()});
        return out;
    }

    const auto stats = explain_spans(question, ctx.scorer, scoring_context(ctx.table, triple.col, question.original),
                                     candidates, ctx.explain);
    const std::string original = normalize(triple.value);
    std::size_t executed = 0;
    for (const SpanStat& s : stats) {
        if (executed >= ctx.fusion.max_eg_iterations) {
            out.trace.push_back({s.text, s.contribution, std::nullopt, "not executed: iteration limit"});
            continue;
        }
        if (normalize(s.text) == original) {
            out.trace.push_back({s.text, s.contribution, 0, "same as extracted value; already empty"});
            continue;
        }
        Condition cand = out.final;
        cand.value = s.text;
        const std::size_t m = probe(ctx, out, cand);
        ++executed;
        if (m > 0) {
            out.trace.push_back({s.text, s.contribution, m, "execution non-empty; replace"});
            out.final = cand;
            out.verdict = Verdict::ValueReplaced;
            out.rule_fired = RuleFired::EGEmptyLimeRescue;
            return out;
        }
        out.trace.push_back({s.text, s.contribution, m, "execution empty"});
    }

    // Empty answers are legitimate; keep the span the scorer credits most.
    const SpanStat& top = stats.front();
    out.rule_fired = RuleFired::EGExhausted;
    if (normalize(top.text) == original) {
        out.verdict = Verdict::AcceptedAsIs;
        out.trace.push_back({top.text, top.contribution, std::nullopt, "exhausted; extracted value ranks first, keep"});
    } else {
        out.verdict = Verdict::ValueReplaced;
        out.final.value = top.text;
        out.trace.push_back({top.text, top.contribution, std::nullopt, "exhausted; keep top-contribution span"});
    }
    return out;
}

RefinementOutcome verify_numeric_condition(const CandidateTriple& triple, const TokenizedText& question,
                                           const RefineContext& ctx) {
    RefinementOutcome out = start(triple);
    const bool comparison = triple.op != Op::Eq;

    if (!comparison) {
        if (rule_valid(out.final, ctx.table)) {
            const std::size_t matched = probe(ctx, out, out.final);
            if (matched > 0) {
                out.trace.push_back({triple.value, std::nullopt, matched, "execution non-empty; accept"});
                out.verdict = Verdict::AcceptedAsIs;
                out.rule_fired = RuleFired::EGNonEmpty;
                return out;
            }
            out.trace.push_back({triple.value, std::nullopt, matched, "execution empty; consult token weights"});
        } else {
            out.trace.push_back({triple.value, std::nullopt, std::nullopt, "value not numeric; execution skipped"});
        }
    }

    struct NumericUnit {
        std::string surface;
        double weight;
        std::size_t order;
    };
    std::vector<NumericUnit> numbers;
    for (std::size_t i = 0; i < question.units.size(); ++i) {
        if (is_numeric_like(question.units[i].surface)) numbers.push_back({question.units[i].surface, 0.0, i});
    }
    if (numbers.empty()) {
        out.verdict = Verdict::RejectedNoCandidate;
        out.rule_fired = RuleFired::PassThrough;
        out.trace.push_back({triple.value, std::nullopt, std::nullopt, "passed through: no numeric units in question"});
        return out;
    }

    const Explanation ex =
        explain(question, ctx.scorer, scoring_context(ctx.table, triple.col, question.original), ctx.explain);
    for (auto& u : numbers) u.weight = ex.weights[u.order];

    auto is_extracted = [&](const NumericUnit& u) { return same_number_or_text(u.surface, triple.value); };
    // Highest weight; ties go to the extracted value, then the earlier unit.
    auto better = [&](const NumericUnit& a, const NumericUnit& b) {
        if (a.weight != b.weight) return a.weight > b.weight;
        if (is_extracted(a) != is_extracted(b)) return is_extracted(a);
        return a.order < b.order;
    };
    auto argmax = [&](auto&& admissible) -> const NumericUnit* {
        const NumericUnit* best = nullptr;
        for (const auto& u : numbers) {
            if (admissible(u) && (!best || better(u, *best))) best = &u;
        }
        return best;
    };

    const NumericUnit* best = argmax([](const NumericUnit&) { return true; });
    for (const auto& u : numbers) {
        out.trace.push_back({u.surface, u.weight, std::nullopt,
                             &u == best ? "numeric unit; highest weight" : "numeric unit"});
    }
    // A date/time-shaped winner cannot be a value for a real column; use the
    // best parseable number instead.
    const NumericUnit* target = best;
    if (target && !parse_number(target->surface)) {
        target = argmax([](const NumericUnit& u) { return parse_number(u.surface).has_value(); });
    }

    const RuleFired accept_rule = comparison ? RuleFired::NumericDirect : RuleFired::NumericEqEmptyAccept;
    if (!target || target->weight <= 0.0) {
        out.verdict = Verdict::AcceptedAsIs;
        out.rule_fired = RuleFired::NumericDirect;
        out.low_confidence = true;
        out.trace.push_back({triple.value, std::nullopt, std::nullopt,
                             "no positively weighted number; keep extracted value (low confidence)"});
        return out;
    }
    if (is_extracted(*target)) {
        out.verdict = Verdict::AcceptedAsIs;
        out.rule_fired = accept_rule;
        out.trace.push_back({triple.value, target->weight, std::nullopt, "extracted value carries the highest positive weight; accept"});
        return out;
    }
    out.final.value = target->surface;
    out.verdict = Verdict::ValueReplaced;
    out.rule_fired = RuleFired::NumericDirect;
    out.trace.push_back({target->surface, target->weight, std::nullopt, "replace value with highest positive weight number"});
    return out;
}

WhereRefinement refine_where_clause(const std::vector<CandidateTriple>& triples, const TokenizedText& question,
                                    const RefineContext& ctx) {
    WhereRefinement result;
    std::map<TripleKey, bool> seen;
    for (const auto& original : triples) {
        const std::size_t fallbacks_before = ctx.scorer.fallback_count();
        RefinementOutcome out;
        if (original.col >= ctx.table.arity() || trim(original.value).empty()) {
            out = start(original);
            out.verdict = Verdict::RejectedNoCandidate;
            out.rule_fired = RuleFired::PassThrough;
            out.trace.push_back({original.value, std::nullopt, std::nullopt,
                                 "passed through: column out of range or empty value"});
        } else {
            CandidateTriple triple = original;
            std::vector<TraceEntry> repairs;
            CanonicalQuery q;
            q.sel = triple.col;
            q.conds = {triple.condition()};
            for (const auto& v : validate_syntax(q, ctx.table)) {
                if (v.kind == ViolationKind::ComparisonOnText && triple.op != Op::Eq) {
                    repairs.push_back({triple.value, std::nullopt, std::nullopt,
                                       std::string("rule validation: '") + op_symbol(triple.op) +
                                           "' on text column repaired to '='"});
                    triple.op = Op::Eq;
                } else if (v.kind != ViolationKind::ComparisonOnText) {
                    repairs.push_back({triple.value, std::nullopt, std::nullopt,
                                       std::string("rule validation: ") + to_string(v.kind)});
                }
            }
            out = ctx.table.is_real(triple.col) ? verify_numeric_condition(triple, question, ctx)
                                                : refine_text_condition(triple, question, ctx);
            out.input = original;
            if (triple.op != original.op) out.rule_fired = RuleFired::RuleValidation;
            out.trace.insert(out.trace.begin(), repairs.begin(), repairs.end());
        }
        if (ctx.scorer.fallback_count() > fallbacks_before) {
            out.trace.push_back({"", std::nullopt, std::nullopt, "scorer fallback used for some calls"});
        }
        if (!seen.emplace(key_of(out.final.col, out.final.op, out.final.value, &ctx.table), true).second) {
            continue;  // duplicate of an earlier condition
        }
        result.outcomes.push_back(std::move(out));
    }
    return result;
}

json triple_to_json(const CandidateTriple& t) {
    json j = {{"col", t.col}, {"op", static_cast<int>(t.op)}, {"value", t.value}, {"confidence", t.confidence}};
    if (t.value_span) j["span"] = {t.value_span->first, t.value_span->last};
    return j;
}

CandidateTriple triple_from_json(const json& j) {
    CandidateTriple t;
    if (j.is_array()) {
        // [col, op, value] as in WikiSQL conds
        if (j.size() < 3) throw ParseError("triple array must be [col, op, value]");
        t.col = j.at(0).get<std::size_t>();
        auto op = op_from_code(j.at(1).get<long long>());
        if (!op) throw ValidationError("operator code out of range: " + j.at(1).dump());
        t.op = *op;
        t.value = scalar_to_string(j.at(2));
        if (j.size() > 3) t.confidence = j.at(3).get<double>();
        return t;
    }
    t.col = j.at("col").get<std::size_t>();
    const auto& op = j.at("op");
    std::optional<Op> parsed;
    if (op.is_number_integer()) {
        parsed = op_from_code(op.get<long long>());
    } else if (op.is_string()) {
        const std::string s = op.get<std::string>();
        if (s == "=") parsed = Op::Eq;
        if (s == ">") parsed = Op::Gt;
        if (s == "<") parsed = Op::Lt;
    }
    if (!parsed) throw ValidationError("bad operator: " + op.dump());
    t.op = *parsed;
    t.value = scalar_to_string(j.at("value"));
    t.confidence = j.value("confidence", 1.0);
    if (!(t.confidence >= 0.0 && t.confidence <= 1.0)) throw ValidationError("confidence outside [0,1]");
    if (auto s = j.find("span"); s != j.end() && !s->is_null()) {
        t.value_span = TokenRange{s->at(0).get<std::size_t>(), s->at(1).get<std::size_t>()};
    }
    return t;
}

json outcome_to_json(const RefinementOutcome& o, const std::string& question) {
    json trace = json::array();
    for (const auto& e : o.trace) {
        json t = {{"candidate", e.candidate}, {"decision", e.decision}};
        if (e.contribution) t["contribution"] = *e.contribution;
        if (e.matched_count) t["matched_count"] = *e.matched_count;
        trace.push_back(std::move(t));
    }
    return {{"question", question},
            {"input_triple", triple_to_json(o.input)},
            {"outcome",
             {{"col", o.final.col},
              {"op", static_cast<int>(o.final.op)},
              {"value", o.final.value},
              {"verdict", to_string(o.verdict)}}},
            {"rule_fired", to_string(o.rule_fired)},
            {"low_confidence", o.low_confidence},
            {"execute_calls", o.execute_calls},
            {"trace", trace}};
}

}  // namespace condsql
