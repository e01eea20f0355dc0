#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "condsql/error.hpp"
#include "condsql/table.hpp"

namespace condsql {

// The condition column whose relevance is being scored.
struct ScoringTarget {
    std::string table_id;
    std::size_t column_index = 0;
    std::string column_name;
};

// What a scorer sees besides the sentence: the target column and the
// unperturbed question the sentence was derived from.
struct ScoringContext {
    ScoringTarget target;
    std::string question;
};

// Black-box p(z): probability that `sentence` refers to the target column.
// Implementations must be safe to call concurrently.
class Scorer {
public:
    virtual ~Scorer() = default;
    virtual double score(std::string_view sentence, const ScoringContext& ctx) const = 0;
    // Number of calls answered by a fallback path rather than the primary model.
    virtual std::size_t fallback_count() const { return 0; }
};

// Normalized LCS between case-folded token sequences of `sentence` and `candidate`,
// divided by the candidate length. 0 for an empty candidate.
double lcs_match(std::string_view sentence, std::string_view candidate);

// Deterministic stand-in: max lcs_match over the column name and every distinct
// cell of the target column.
class LexicalScorer final : public Scorer {
public:
    explicit LexicalScorer(std::shared_ptr<const TableStore> store);
    double score(std::string_view sentence, const ScoringContext& ctx) const override;

private:
    const std::vector<std::string>& candidates(const ScoringTarget& t) const;

    std::shared_ptr<const TableStore> store_;
    mutable std::mutex mu_;
    mutable std::map<std::pair<std::string, std::size_t>, std::vector<std::string>> cache_;
};

// One fixture: a weight list attached to a (question, target) pair.
struct MockFixture {
    std::string question;
    std::string table_id;
    std::size_t column_index = 0;
    double intercept = 0.0;
    std::vector<std::pair<std::string, double>> weights;
};

// sigmoid(intercept + sum of weights of fixture words present in the sentence).
class MockScorer final : public Scorer {
public:
    explicit MockScorer(std::vector<MockFixture> fixtures);

    // Line-delimited {"question", "table_id", "column_index", "intercept"?, "weights": [[word, w], ...]}.
    static MockScorer from_file(const std::filesystem::path& path);

    double score(std::string_view sentence, const ScoringContext& ctx) const override;
    const std::vector<MockFixture>& fixtures() const { return fixtures_; }

private:
    const MockFixture& lookup(const ScoringContext& ctx) const;
    std::vector<MockFixture> fixtures_;
};

class TransportError : public Error {
public:
    enum class Kind { Unreachable, Timeout, HttpStatus, Malformed, OutOfBounds };
    TransportError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

const char* to_string(TransportError::Kind k);

struct RemoteConfig {
    std::string endpoint;  // http://host:port
    std::chrono::milliseconds timeout{5000};
    std::size_t max_connections = 4;
    // Answer with this scorer when the server cannot be used. Off by default.
    std::shared_ptr<const Scorer> fallback;
};

struct HealthStatus {
    std::string status;
    std::string model;
};

// HTTP client for the scoring service: POST /score, GET /health.
class RemoteScorer final : public Scorer {
public:
    explicit RemoteScorer(RemoteConfig config);
    ~RemoteScorer() override;

    double score(std::string_view sentence, const ScoringContext& ctx) const override;
    std::size_t fallback_count() const override { return fallbacks_.load(); }

    // Throws TransportError on any protocol or connection failure.
    HealthStatus health() const;

private:
    class Pool;
    double score_once(std::string_view sentence, const ScoringContext& ctx) const;

    RemoteConfig config_;
    std::unique_ptr<Pool> pool_;
    mutable std::atomic<std::size_t> fallbacks_{0};
};

}  // namespace condsql
