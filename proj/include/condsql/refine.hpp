#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "condsql/engine.hpp"
#include "condsql/explain.hpp"
#include "condsql/query.hpp"
#include "condsql/scorer.hpp"
#include "condsql/table.hpp"
#include "condsql/tokenize.hpp"

namespace condsql {

struct CandidateTriple {
    std::size_t col = 0;
    Op op = Op::Eq;
    std::string value;
    // Token interval of the value in the question, when the extractor reports it.
    std::optional<TokenRange> value_span;
    double confidence = 1.0;

    Condition condition() const { return {col, op, value}; }
};

enum class Verdict { AcceptedAsIs, ValueReplaced, RejectedNoCandidate };
enum class RuleFired {
    RuleValidation,
    EGNonEmpty,
    EGEmptyLimeRescue,
    NumericDirect,
    NumericEqEmptyAccept,
    // Every ranked span executed empty; the top-contribution span is kept.
    EGExhausted,
    // Nothing to refine against (value not in the question, no numbers).
    PassThrough,
};

const char* to_string(Verdict v);
const char* to_string(RuleFired r);

struct TraceEntry {
    std::string candidate;
    std::optional<double> contribution;
    std::optional<std::size_t> matched_count;
    std::string decision;
};

struct RefinementOutcome {
    CandidateTriple input;
    Condition final;
    Verdict verdict = Verdict::AcceptedAsIs;
    RuleFired rule_fired = RuleFired::EGNonEmpty;
    std::vector<TraceEntry> trace;
    std::size_t execute_calls = 0;
    // Numeric verification found no positively weighted number to back the value.
    bool low_confidence = false;
};

struct FusionConfig {
    double threshold = 0.5;
    std::size_t window = 1;
    std::size_t max_eg_iterations = 8;

    void validate() const;
};

using ExecuteFn = std::function<ResultSet(const CanonicalQuery&, const Table&)>;

// Everything a refinement step reads. The table and scorer are shared read-only.
struct RefineContext {
    const Table& table;
    const Scorer& scorer;
    ExplainConfig explain;
    FusionConfig fusion;
    ExecuteFn execute = condsql::execute;
};

// Picks the path with the highest mean confidence among its triples at or
// above the threshold, drops the rest of that path below threshold, and
// merges duplicate (col, op, value) keeping the highest confidence.
std::vector<CandidateTriple> fuse_candidates(const std::vector<std::vector<CandidateTriple>>& paths,
                                             const FusionConfig& config, const Table* table = nullptr);

// Token interval of the triple's value: its declared span, else the first
// normalized match in the question. Throws ValidationError if neither works.
TokenRange locate_value(const TokenizedText& question, const CandidateTriple& triple);

// Every contiguous span inside [start - W, end + W], clipped, ordered by start then width.
std::vector<TokenRange> generate_value_candidates(const TokenizedText& question, const CandidateTriple& triple,
                                                  const FusionConfig& config);

RefinementOutcome refine_text_condition(const CandidateTriple& triple, const TokenizedText& question,
                                        const RefineContext& ctx);

RefinementOutcome verify_numeric_condition(const CandidateTriple& triple, const TokenizedText& question,
                                           const RefineContext& ctx);

struct WhereRefinement {
    std::vector<RefinementOutcome> outcomes;
    Connector connector = Connector::And;
};

// Rule validation with operator repair, dispatch by column type, deduplication.
WhereRefinement refine_where_clause(const std::vector<CandidateTriple>& triples, const TokenizedText& question,
                                    const RefineContext& ctx);

ScoringContext scoring_context(const Table& table, std::size_t column, const std::string& question);

nlohmann::json triple_to_json(const CandidateTriple& t);
CandidateTriple triple_from_json(const nlohmann::json& j);
nlohmann::json outcome_to_json(const RefinementOutcome& o, const std::string& question);

}  // namespace condsql
