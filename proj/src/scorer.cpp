#include "condsql/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <condition_variable>
#include <fstream>
#include <set>
#include <unordered_set>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "condsql/text_util.hpp"
#include "condsql/tokenize.hpp"

namespace condsql {

using nlohmann::json;

namespace {

std::vector<std::string> folded_words(std::string_view s) {
    auto words = split_words(s);
    for (auto& w : words) w = casefold(w);
    return words;
}

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

}  // namespace

double lcs_match(std::string_view sentence, std::string_view candidate) {
    const auto c = folded_words(candidate);
    if (c.empty()) return 0.0;
    const auto s = folded_words(sentence);
    const double r = static_cast<double>(lcs_length(s, c)) / static_cast<double>(c.size());
    return std::clamp(r, 0.0, 1.0);
}

LexicalScorer::LexicalScorer(std::shared_ptr<const TableStore> store) : store_(std::move(store)) {}

const std::vector<std::string>& LexicalScorer::candidates(const ScoringTarget& t) const {
    std::lock_guard lock(mu_);
    auto key = std::make_pair(t.table_id, t.column_index);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    const Table& table = store_->at(t.table_id);
    if (t.column_index >= table.arity()) {
        throw ValidationError("column " + std::to_string(t.column_index) + " out of range for table '" +
                              t.table_id + "'");
    }
    std::vector<std::string> out{table.header[t.column_index]};
    std::set<std::string> seen{normalize(out.front())};
    for (const auto& row : table.rows) {
        const auto& text = row[t.column_index].text;
        if (seen.insert(normalize(text)).second) out.push_back(text);
    }
    return cache_.emplace(key, std::move(out)).first->second;
}

double LexicalScorer::score(std::string_view sentence, const ScoringContext& ctx) const {
    double best = 0.0;
    for (const auto& c : candidates(ctx.target)) {
        best = std::max(best, lcs_match(sentence, c));
        if (best >= 1.0) break;
    }
    return best;
}

MockScorer::MockScorer(std::vector<MockFixture> fixtures) : fixtures_(std::move(fixtures)) {
    for (auto& f : fixtures_) {
        for (auto& [word, w] : f.weights) word = casefold(word);
    }
}

MockScorer MockScorer::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open mock fixture '" + path.string() + "'");
    std::vector<MockFixture> fixtures;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            const json j = json::parse(line);
            MockFixture f;
            f.question = j.at("question").get<std::string>();
            f.table_id = j.at("table_id").get<std::string>();
            f.column_index = j.at("column_index").get<std::size_t>();
            f.intercept = j.value("intercept", 0.0);
            for (const auto& w : j.at("weights")) {
                f.weights.emplace_back(w.at(0).get<std::string>(), w.at(1).get<double>());
            }
            fixtures.push_back(std::move(f));
        } catch (const json::exception& e) {
            throw ParseError("mock fixture line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return MockScorer(std::move(fixtures));
}

const MockFixture& MockScorer::lookup(const ScoringContext& ctx) const {
    const std::string q = normalize(ctx.question);
    for (const auto& f : fixtures_) {
        if (f.table_id == ctx.target.table_id && f.column_index == ctx.target.column_index &&
            normalize(f.question) == q) {
            return f;
        }
    }
    throw ValidationError("no mock fixture for question '" + ctx.question + "' and column " +
                          std::to_string(ctx.target.column_index) + " of table '" + ctx.target.table_id +
                          "'");
}

double MockScorer::score(std::string_view sentence, const ScoringContext& ctx) const {
    const MockFixture& f = lookup(ctx);
    const auto words = folded_words(sentence);
    const std::unordered_set<std::string> present(words.begin(), words.end());
    double logit = f.intercept;
    for (const auto& [word, w] : f.weights) {
        if (present.count(word)) logit += w;
    }
    return 1.0 / (1.0 + std::exp(-logit));
}

const char* to_string(TransportError::Kind k) {
    switch (k) {
        case TransportError::Kind::Unreachable: return "unreachable";
        case TransportError::Kind::Timeout: return "timeout";
        case TransportError::Kind::HttpStatus: return "http-status";
        case TransportError::Kind::Malformed: return "malformed-response";
        case TransportError::Kind::OutOfBounds: return "out-of-bounds";
    }
    return "?";
}

// Bounded set of keep-alive clients; callers block when all are in use.
class RemoteScorer::Pool {
public:
    Pool(const RemoteConfig& cfg) : cfg_(cfg) {}

    std::unique_ptr<httplib::Client> acquire() {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return !idle_.empty() || live_ < std::max<std::size_t>(1, cfg_.max_connections); });
        if (!idle_.empty()) {
            auto c = std::move(idle_.back());
            idle_.pop_back();
            return c;
        }
        ++live_;
        lock.unlock();
        auto c = std::make_unique<httplib::Client>(cfg_.endpoint);
        const auto secs = std::chrono::duration_cast<std::chrono::seconds>(cfg_.timeout);
        const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(cfg_.timeout - secs);
        c->set_connection_timeout(secs.count(), usecs.count());
        c->set_read_timeout(secs.count(), usecs.count());
        c->set_write_timeout(secs.count(), usecs.count());
        c->set_keep_alive(true);
        return c;
    }

    void release(std::unique_ptr<httplib::Client> c, bool healthy) {
        std::lock_guard lock(mu_);
        if (healthy) {
            idle_.push_back(std::move(c));
        } else {
            --live_;
        }
        cv_.notify_one();
    }

private:
    const RemoteConfig& cfg_;
    std::mutex mu_;
    std::condition_variable cv_;
    std::vector<std::unique_ptr<httplib::Client>> idle_;
    std::size_t live_ = 0;
};

namespace {

bool transient(TransportError::Kind k) {
    return k == TransportError::Kind::Unreachable || k == TransportError::Kind::Timeout ||
           k == TransportError::Kind::HttpStatus;
}

TransportError from_httplib(httplib::Error err, const std::string& endpoint) {
    const auto kind = err == httplib::Error::Read || err == httplib::Error::Write ||
                              err == httplib::Error::ConnectionTimeout
                          ? TransportError::Kind::Timeout
                          : TransportError::Kind::Unreachable;
    return TransportError(kind, "scorer at " + endpoint + ": " + httplib::to_string(err));
}

}  // namespace

RemoteScorer::RemoteScorer(RemoteConfig config)
    : config_(std::move(config)), pool_(std::make_unique<Pool>(config_)) {
    if (config_.endpoint.empty()) throw ValidationError("remote scorer endpoint is empty");
}

RemoteScorer::~RemoteScorer() = default;

double RemoteScorer::score_once(std::string_view sentence, const ScoringContext& ctx) const {
    const json body = {{"sentence", sentence},
                       {"table_id", ctx.target.table_id},
                       {"column_index", ctx.target.column_index},
                       {"column_name", ctx.target.column_name}};
    auto client = pool_->acquire();
    auto res = client->Post("/score", body.dump(), "application/json");
    if (!res) {
        pool_->release(std::move(client), false);
        throw from_httplib(res.error(), config_.endpoint);
    }
    pool_->release(std::move(client), true);
    if (res->status != 200) {
        throw TransportError(TransportError::Kind::HttpStatus,
                             "scorer returned HTTP " + std::to_string(res->status));
    }
    json reply;
    try {
        reply = json::parse(res->body);
    } catch (const json::parse_error&) {
        throw TransportError(TransportError::Kind::Malformed, "scorer reply is not JSON: " + res->body);
    }
    auto p = reply.find("probability");
    if (!reply.is_object() || p == reply.end() || !p->is_number()) {
        throw TransportError(TransportError::Kind::Malformed,
                             "scorer reply lacks numeric 'probability': " + res->body);
    }
    const double prob = p->get<double>();
    if (!(prob >= 0.0 && prob <= 1.0)) {
        throw TransportError(TransportError::Kind::OutOfBounds,
                             "scorer probability " + p->dump() + " outside [0,1]");
    }
    return prob;
}

double RemoteScorer::score(std::string_view sentence, const ScoringContext& ctx) const {
    try {
        try {
            return score_once(sentence, ctx);
        } catch (const TransportError& e) {
            if (!transient(e.kind())) throw;
            return score_once(sentence, ctx);
        }
    } catch (const TransportError& e) {
        if (!config_.fallback || e.kind() == TransportError::Kind::OutOfBounds) throw;
        ++fallbacks_;
        return config_.fallback->score(sentence, ctx);
    }
}

HealthStatus RemoteScorer::health() const {
    auto client = pool_->acquire();
    auto res = client->Get("/health");
    pool_->release(std::move(client), static_cast<bool>(res));
    if (!res) throw from_httplib(res.error(), config_.endpoint);
    if (res->status != 200) {
        throw TransportError(TransportError::Kind::HttpStatus,
                             "health check returned HTTP " + std::to_string(res->status));
    }
    try {
        const json j = json::parse(res->body);
        HealthStatus h{j.at("status").get<std::string>(), j.at("model").get<std::string>()};
        if (h.status != "ok") {
            throw TransportError(TransportError::Kind::Malformed, "health status is '" + h.status + "'");
        }
        return h;
    } catch (const json::exception&) {
        throw TransportError(TransportError::Kind::Malformed, "malformed health reply: " + res->body);
    }
}

}  // namespace condsql
