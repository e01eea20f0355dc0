#include "condsql/explain.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>
#include <unordered_map>

#include "condsql/text_util.hpp"

namespace condsql {

void ExplainConfig::validate() const {
    if (sample_count < 1) throw ValidationError("sample_count must be >= 1");
    if (!(kernel_width > 0.0)) throw ValidationError("kernel width must be > 0");
    if (!(ridge_lambda >= 0.0)) throw ValidationError("ridge lambda must be >= 0");
    if (threads < 1) throw ValidationError("threads must be >= 1");
}

FeatureLayout word_layout(const TokenizedText& text) {
    FeatureLayout layout;
    layout.unit_of_token.reserve(text.tokens.size());
    for (const auto& t : text.tokens) layout.unit_of_token.push_back(t.unit);
    for (const auto& u : text.units) layout.unit_surface.push_back(u.surface);
    return layout;
}

FeatureLayout span_layout(const TokenizedText& text, std::size_t first, std::size_t last) {
    if (first >= last || last > text.tokens.size()) {
        throw ValidationError("span [" + std::to_string(first) + ", " + std::to_string(last) +
                              ") is empty or outside the " + std::to_string(text.tokens.size()) +
                              "-token sentence");
    }
    FeatureLayout layout;
    std::unordered_map<std::string, std::size_t> unit_of;
    std::size_t span_unit = 0;
    for (std::size_t i = 0; i < text.tokens.size(); ++i) {
        if (i >= first && i < last) {
            if (i == first) {
                span_unit = layout.unit_surface.size();
                layout.unit_surface.push_back(text.slice(first, last));
            }
            layout.unit_of_token.push_back(span_unit);
            continue;
        }
        const std::string key = casefold(text.tokens[i].surface);
        auto [it, inserted] = unit_of.emplace(key, layout.unit_surface.size());
        if (inserted) layout.unit_surface.push_back(text.tokens[i].surface);
        layout.unit_of_token.push_back(it->second);
    }
    return layout;
}

std::string render_masked(const TokenizedText& text, const FeatureLayout& layout, const Mask& mask) {
    if (std::all_of(mask.begin(), mask.end(), [](std::uint8_t b) { return b != 0; })) {
        return text.original;
    }
    std::string out;
    std::size_t cursor = 0;
    for (std::size_t i = 0; i < text.tokens.size(); ++i) {
        if (mask[layout.unit_of_token[i]]) continue;
        out.append(text.original, cursor, text.tokens[i].span.begin - cursor);
        cursor = text.tokens[i].span.end;
    }
    out.append(text.original, cursor, std::string::npos);

    // Collapse the whitespace left behind by deletions.
    std::string collapsed;
    collapsed.reserve(out.size());
    bool space = false;
    for (char c : out) {
        if (c == ' ' || c == '\t' || c == '\n') {
            space = !collapsed.empty();
            continue;
        }
        if (space) collapsed.push_back(' ');
        space = false;
        collapsed.push_back(c);
    }
    return collapsed;
}

double kernel_weight(std::span<const std::uint8_t> mask, double kernel_width) {
    const std::size_t n = mask.size();
    const auto kept = static_cast<std::size_t>(std::count_if(mask.begin(), mask.end(), [](auto b) { return b != 0; }));
    if (n == 0 || kept == 0) return 0.0;
    const double d = 1.0 - std::sqrt(static_cast<double>(kept) / static_cast<double>(n));
    return std::exp(-(d * d) / (kernel_width * kernel_width));
}

std::vector<Mask> sample_masks(std::size_t n, const ExplainConfig& config) {
    std::vector<Mask> masks;
    masks.reserve(config.sample_count);
    masks.emplace_back(n, std::uint8_t{1});
    std::mt19937_64 rng(config.seed);
    std::vector<std::size_t> idx(n);
    while (masks.size() < config.sample_count) {
        Mask m(n, std::uint8_t{1});
        if (n >= 2) {
            std::uniform_int_distribution<std::size_t> count_dist(1, n - 1);
            const std::size_t remove = count_dist(rng);
            std::iota(idx.begin(), idx.end(), std::size_t{0});
            // Partial Fisher-Yates: the first `remove` slots become a uniform subset.
            for (std::size_t i = 0; i < remove; ++i) {
                std::uniform_int_distribution<std::size_t> pick(i, n - 1);
                std::swap(idx[i], idx[pick(rng)]);
                m[idx[i]] = 0;
            }
        }
        masks.push_back(std::move(m));
    }
    return masks;
}

std::vector<Mask> exhaustive_masks(std::size_t n) {
    if (n > 20) throw ValidationError("exhaustive masks limited to n <= 20, got " + std::to_string(n));
    std::vector<Mask> masks;
    const std::uint64_t full = (std::uint64_t{1} << n) - 1;
    masks.reserve(full);
    masks.emplace_back(n, std::uint8_t{1});
    for (std::uint64_t bits = 1; bits < full; ++bits) {
        Mask m(n);
        for (std::size_t i = 0; i < n; ++i) m[i] = static_cast<std::uint8_t>((bits >> i) & 1u);
        masks.push_back(std::move(m));
    }
    return masks;
}

namespace {

std::vector<Perturbation> build_perturbations(const TokenizedText& text, const FeatureLayout& layout,
                                              const ExplainConfig& config) {
    config.validate();
    const auto masks = config.exhaustive ? exhaustive_masks(layout.size()) : sample_masks(layout.size(), config);
    std::vector<Perturbation> out;
    out.reserve(masks.size());
    for (const auto& m : masks) {
        Perturbation p;
        p.sentence = render_masked(text, layout, m);
        p.kernel_weight = kernel_weight(m, config.kernel_width);
        p.mask = m;
        out.push_back(std::move(p));
    }
    return out;
}

// Scores `sentences` in place of probabilities; indices in errors refer to `owner`.
void score_into(const std::vector<std::string>& sentences, const std::vector<std::size_t>& owner,
                std::vector<double>& out, const Scorer& scorer, const ScoringContext& ctx,
                std::size_t threads) {
    out.assign(sentences.size(), 0.0);
    auto one = [&](std::size_t i) {
        double p = 0.0;
        try {
            p = scorer.score(sentences[i], ctx);
        } catch (const std::exception& e) {
            throw ScoringError(owner[i], e.what());
        }
        if (!(p >= 0.0 && p <= 1.0)) {
            throw ScoringError(owner[i], "probability " + std::to_string(p) + " outside [0,1]");
        }
        out[i] = p;
    };
    const std::size_t workers = std::min(threads, sentences.size());
    if (workers <= 1) {
        for (std::size_t i = 0; i < sentences.size(); ++i) one(i);
        return;
    }
    std::exception_ptr first_error;
    std::size_t first_index = sentences.size();
    std::mutex mu;
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t i = w; i < sentences.size(); i += workers) {
                    try {
                        one(i);
                    } catch (...) {
                        std::lock_guard lock(mu);
                        // keep the lowest index so failures are reported deterministically
                        if (i < first_index) {
                            first_index = i;
                            first_error = std::current_exception();
                        }
                        return;
                    }
                }
            });
        }
    }
    if (first_error) std::rethrow_exception(first_error);
}

// Scores perturbations, reusing `cache` across calls that share sentences.
void score_cached(std::vector<Perturbation>& perturbations, const Scorer& scorer,
                  const ScoringContext& ctx, std::size_t threads,
                  std::unordered_map<std::string, double>& cache) {
    std::vector<std::string> todo;
    std::vector<std::size_t> owner;
    std::unordered_map<std::string, std::size_t> queued;
    for (std::size_t i = 0; i < perturbations.size(); ++i) {
        const auto& s = perturbations[i].sentence;
        if (cache.count(s) || queued.count(s)) continue;
        queued.emplace(s, todo.size());
        todo.push_back(s);
        owner.push_back(i);
    }
    std::vector<double> scores;
    score_into(todo, owner, scores, scorer, ctx, threads);
    for (std::size_t i = 0; i < todo.size(); ++i) cache.emplace(todo[i], scores[i]);
    for (auto& p : perturbations) p.probability = cache.at(p.sentence);
}

}  // namespace

std::vector<Perturbation> sample_perturbations(const TokenizedText& text, const ExplainConfig& config) {
    return build_perturbations(text, word_layout(text), config);
}

SurrogateFit fit_surrogate(std::span<const Perturbation> perturbations, double ridge_lambda) {
    if (!(ridge_lambda >= 0.0)) throw ValidationError("ridge lambda must be >= 0");
    std::size_t usable = 0;
    std::size_t n = 0;
    for (const auto& p : perturbations) {
        if (p.kernel_weight > 0.0) {
            ++usable;
            n = p.mask.size();
        }
    }
    if (usable < 2) throw ValidationError("surrogate fit needs at least 2 perturbations with positive kernel weight");

    // Column 0 is the intercept; columns 1..n are the mask bits.
    const std::size_t d = n + 1;
    std::vector<double> a(d * d, 0.0);
    std::vector<double> b(d, 0.0);
    std::vector<double> x(d);
    for (const auto& p : perturbations) {
        if (p.kernel_weight <= 0.0) continue;
        if (p.mask.size() != n) throw ValidationError("perturbation masks have inconsistent lengths");
        x[0] = 1.0;
        for (std::size_t i = 0; i < n; ++i) x[i + 1] = p.mask[i] ? 1.0 : 0.0;
        const double w = p.kernel_weight;
        for (std::size_t r = 0; r < d; ++r) {
            if (x[r] == 0.0) continue;
            const double wr = w * x[r];
            b[r] += wr * p.probability;
            for (std::size_t c = 0; c <= r; ++c) a[r * d + c] += wr * x[c];
        }
    }
    for (std::size_t i = 1; i < d; ++i) a[i * d + i] += ridge_lambda;

    // Cholesky on the lower triangle, in place.
    double max_diag = 0.0;
    for (std::size_t i = 0; i < d; ++i) max_diag = std::max(max_diag, a[i * d + i]);
    const double tol = 1e-12 * std::max(max_diag, 1e-300);
    for (std::size_t j = 0; j < d; ++j) {
        double diag = a[j * d + j];
        for (std::size_t k = 0; k < j; ++k) diag -= a[j * d + k] * a[j * d + k];
        if (!(diag > tol)) {
            throw SingularSystem("surrogate normal equations are singular (feature " + std::to_string(j) +
                                 " is not identifiable from the perturbations); use ridge lambda > 0");
        }
        const double l = std::sqrt(diag);
        a[j * d + j] = l;
        for (std::size_t i = j + 1; i < d; ++i) {
            double v = a[i * d + j];
            for (std::size_t k = 0; k < j; ++k) v -= a[i * d + k] * a[j * d + k];
            a[i * d + j] = v / l;
        }
    }
    // L y = b, then L^T beta = y.
    std::vector<double> beta(b);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t k = 0; k < i; ++k) beta[i] -= a[i * d + k] * beta[k];
        beta[i] /= a[i * d + i];
    }
    for (std::size_t i = d; i-- > 0;) {
        for (std::size_t k = i + 1; k < d; ++k) beta[i] -= a[k * d + i] * beta[k];
        beta[i] /= a[i * d + i];
    }
    SurrogateFit fit;
    fit.intercept = beta[0];
    fit.weights.assign(beta.begin() + 1, beta.end());
    return fit;
}

std::optional<double> Explanation::weight_of(std::string_view word) const {
    const std::string key = casefold(word);
    for (std::size_t i = 0; i < units.size(); ++i) {
        if (casefold(units[i]) == key) return weights[i];
    }
    return std::nullopt;
}

nlohmann::json explanation_to_json(const Explanation& e) {
    return {{"text", e.text},
            {"units", e.units},
            {"weights", e.weights},
            {"intercept", e.intercept},
            {"seed", e.seed},
            {"sample_count", e.sample_count}};
}

void score_perturbations(std::vector<Perturbation>& perturbations, const Scorer& scorer,
                         const ScoringContext& ctx, std::size_t threads) {
    std::unordered_map<std::string, double> cache;
    score_cached(perturbations, scorer, ctx, threads, cache);
}

Explanation explain(const TokenizedText& text, const Scorer& scorer, const ScoringContext& ctx,
                    const ExplainConfig& config) {
    auto perturbations = sample_perturbations(text, config);
    score_perturbations(perturbations, scorer, ctx, config.threads);
    const SurrogateFit fit = fit_surrogate(perturbations, config.ridge_lambda);
    Explanation e;
    e.text = text.original;
    for (const auto& u : text.units) e.units.push_back(u.surface);
    e.weights = fit.weights;
    e.intercept = fit.intercept;
    e.sample_count = perturbations.size();
    e.seed = config.seed;
    return e;
}

Explanation explain(std::string_view text, const Scorer& scorer, const ScoringContext& ctx,
                    const ExplainConfig& config) {
    return explain(tokenize(text), scorer, ctx, config);
}

std::vector<SpanStat> explain_spans(const TokenizedText& text, const Scorer& scorer,
                                    const ScoringContext& ctx, std::span<const TokenRange> spans,
                                    const ExplainConfig& config) {
    std::unordered_map<std::string, double> cache;
    std::vector<SpanStat> out;
    out.reserve(spans.size());
    for (const TokenRange& r : spans) {
        const FeatureLayout layout = span_layout(text, r.first, r.last);
        auto perturbations = build_perturbations(text, layout, config);
        score_cached(perturbations, scorer, ctx, config.threads, cache);
        const SurrogateFit fit = fit_surrogate(perturbations, config.ridge_lambda);
        const std::size_t unit = layout.unit_of_token[r.first];
        out.push_back({r, casefold(text.slice(r.first, r.last)), fit.weights[unit]});
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const SpanStat& a, const SpanStat& b) { return a.contribution > b.contribution; });
    return out;
}

}  // namespace condsql
