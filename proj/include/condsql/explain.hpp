#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "condsql/error.hpp"
#include "condsql/scorer.hpp"
#include "condsql/tokenize.hpp"

namespace condsql {

struct ExplainConfig {
    std::size_t sample_count = 1000;
    double kernel_width = 25.0;
    double ridge_lambda = 1e-3;
    std::uint64_t seed = 0;
    // Enumerate every non-empty mask instead of sampling (only sensible for small n).
    bool exhaustive = false;
    // Worker threads used for scoring; the scorer must tolerate concurrent calls.
    std::size_t threads = 1;

    // Throws ValidationError if a field is out of range.
    void validate() const;
};

using Mask = std::vector<std::uint8_t>;

struct Perturbation {
    Mask mask;             // 1 = feature unit kept
    std::string sentence;  // rendering with masked units deleted
    double kernel_weight = 0.0;
    double probability = 0.0;
};

// Maps every token occurrence to a feature unit. The default layout groups
// occurrences by case-folded word; a span layout makes one contiguous token
// range a single unit.
struct FeatureLayout {
    std::vector<std::size_t> unit_of_token;
    std::vector<std::string> unit_surface;

    std::size_t size() const { return unit_surface.size(); }
};

FeatureLayout word_layout(const TokenizedText& text);
// Tokens [first, last) form one unit; the remaining tokens are grouped by word.
// Throws ValidationError if the range is empty or out of bounds.
FeatureLayout span_layout(const TokenizedText& text, std::size_t first, std::size_t last);

// Original text with every token whose unit is masked out deleted.
std::string render_masked(const TokenizedText& text, const FeatureLayout& layout, const Mask& mask);

// exp(-D^2 / width^2) with D = 1 - sqrt(k/n) the cosine distance to the all-ones mask.
double kernel_weight(std::span<const std::uint8_t> mask, double kernel_width);

// Identity first, then sample_count-1 masks: removal count uniform in
// {1..n-1}, removed set uniform of that size. For n == 1 the rest are identity.
std::vector<Mask> sample_masks(std::size_t n, const ExplainConfig& config);

// Identity first, then every other non-empty mask. Throws for n > 20.
std::vector<Mask> exhaustive_masks(std::size_t n);

// Masks and renderings for the word layout, unscored.
std::vector<Perturbation> sample_perturbations(const TokenizedText& text, const ExplainConfig& config);

struct SurrogateFit {
    std::vector<double> weights;
    double intercept = 0.0;
};

// Kernel-weighted least squares of probability on mask, with an unpenalized
// intercept and ridge penalty lambda on the weights. Solves the normal
// equations exactly. Throws SingularSystem when lambda == 0 and the design is
// rank-deficient.
SurrogateFit fit_surrogate(std::span<const Perturbation> perturbations, double ridge_lambda);

class SingularSystem : public Error {
public:
    using Error::Error;
};

// Scorer threw while scoring perturbation `index`.
class ScoringError : public Error {
public:
    ScoringError(std::size_t index, const std::string& what)
        : Error("scoring perturbation " + std::to_string(index) + ": " + what), index_(index) {}
    std::size_t index() const { return index_; }

private:
    std::size_t index_;
};

struct Explanation {
    std::string text;
    std::vector<std::string> units;
    std::vector<double> weights;
    double intercept = 0.0;
    std::size_t sample_count = 0;
    std::uint64_t seed = 0;

    // Weight of the unit whose case-folded surface equals `word`, or nullopt.
    std::optional<double> weight_of(std::string_view word) const;
};

nlohmann::json explanation_to_json(const Explanation& e);

// Fills probability for every perturbation via scorer, possibly on several threads.
void score_perturbations(std::vector<Perturbation>& perturbations, const Scorer& scorer,
                         const ScoringContext& ctx, std::size_t threads);

// Token-level explanation, one weight per distinct word in sentence order.
Explanation explain(std::string_view text, const Scorer& scorer, const ScoringContext& ctx,
                    const ExplainConfig& config);
Explanation explain(const TokenizedText& text, const Scorer& scorer, const ScoringContext& ctx,
                    const ExplainConfig& config);

struct TokenRange {
    std::size_t first = 0;
    std::size_t last = 0;  // exclusive
    std::size_t width() const { return last - first; }
    friend bool operator==(const TokenRange&, const TokenRange&) = default;
};

struct SpanStat {
    TokenRange range;
    std::string text;  // case-folded original substring
    double contribution = 0.0;
};

// Refits the surrogate once per span with that span as one atomic unit.
// Sorted by contribution descending; ties keep the input order.
std::vector<SpanStat> explain_spans(const TokenizedText& text, const Scorer& scorer,
                                    const ScoringContext& ctx, std::span<const TokenRange> spans,
                                    const ExplainConfig& config);

}  // namespace condsql
