#include <doctest.h>

#include <httplib.h>

#include <nlohmann/json.hpp>
#include <sstream>
#include <thread>

#include "condsql/cli.hpp"
#include "condsql/dataset.hpp"
#include "condsql/explain.hpp"
#include "condsql/scorer.hpp"
#include "support/stats.hpp"

using namespace condsql;

namespace {

const std::string kData = CONDSQL_TEST_DATA;

std::shared_ptr<const TableStore> case_tables() {
    return std::make_shared<const TableStore>(load_tables(kData + "/cases/tables.jsonl"));
}

ScoringContext ctx_for(const std::string& table, std::size_t col, const std::string& name, const std::string& q) {
    return {{table, col, name}, q};
}

// Minimal in-process scoring service on an ephemeral port.
class FakeServer {
public:
    explicit FakeServer(std::function<void(const httplib::Request&, httplib::Response&)> score) {
        server_.Post("/score", [score](const httplib::Request& req, httplib::Response& res) { score(req, res); });
        server_.Get("/health", [](const httplib::Request&, httplib::Response& res) {
            res.set_content(R"({"status":"ok","model":"echo"})", "application/json");
        });
        server_.set_keep_alive_timeout(0);
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~FakeServer() {
        server_.stop();
        thread_.join();
    }
    std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

// A port that refuses connections: bound without listening, then released.
std::string dead_endpoint() {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
    socklen_t len = sizeof addr;
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
    ::close(fd);
    return "http://127.0.0.1:" + std::to_string(ntohs(addr.sin_port));
}

}  // namespace

TEST_CASE("lcs_match") {
    CHECK(lcs_match("kabul area", "Kabul area") == 1.0);
    CHECK(lcs_match("name the casualties", "Kabul area") == 0.0);
    CHECK(lcs_match("for the Kabul", "Kabul area") == 0.5);
    CHECK(lcs_match("anything", "") == 0.0);
}

TEST_CASE("lexical scorer") {
    const LexicalScorer s(case_tables());
    const auto ctx = ctx_for("1-kabul", 1, "Location", "Name the casualties for the Kabul area?");
    CHECK(s.score("Kabul area", ctx) == 1.0);
    CHECK(s.score("name the casualties", ctx) == 0.0);
    // Adding words never lowers a subsequence-based match.
    CHECK(s.score("for the Kabul", ctx) <= s.score("for the Kabul area", ctx));
    CHECK(s.score("the location", ctx) == 1.0);
}

TEST_CASE("mock scorer") {
    const auto mock = MockScorer::from_file(kData + "/cases/mock_fixture.jsonl");
    REQUIRE(mock.fixtures().size() == 5);
    const std::string ralf = "What is the grid total for Ralf Schumacher racing over 53 laps?";
    const auto rctx = ctx_for("1-ralf", 0, "Driver", ralf);
    const double full = mock.score(ralf, rctx);
    CHECK(mock.score("What is the grid total for Ralf Schumacher over 53 laps?", rctx) > full);

    const std::string kabul = "Name the casualties for the Kabul area?";
    const auto kctx = ctx_for("1-kabul", 1, "Location", kabul);
    CHECK(mock.score("Name the casualties for the area?", kctx) < mock.score(kabul, kctx));
    // Question normalization: case and spacing do not matter for the key.
    CHECK_NOTHROW(mock.score(kabul, ctx_for("1-kabul", 1, "Location", "  name THE casualties for the kabul area? ")));
    CHECK_THROWS_AS(mock.score(kabul, ctx_for("1-kabul", 2, "Nature", kabul)), ValidationError);
    CHECK_THROWS_AS(mock.score(kabul, ctx_for("1-ralf", 1, "Location", kabul)), ValidationError);
}

TEST_CASE("exhaustive explanation of the mock reproduces the fixture ranking") {
    const auto mock = MockScorer::from_file(kData + "/cases/mock_fixture.jsonl");
    for (const auto& f : mock.fixtures()) {
        const auto text = tokenize(f.question);
        if (text.size() > 14) continue;
        ExplainConfig cfg;
        cfg.exhaustive = true;
        const auto ctx = ctx_for(f.table_id, f.column_index, "", f.question);
        const auto e = explain(text, mock, ctx, cfg);
        std::vector<double> got, want;
        for (const auto& [word, w] : f.weights) {
            if (auto g = e.weight_of(word)) {
                got.push_back(*g);
                want.push_back(w);
            }
        }
        REQUIRE(got.size() >= 6);
        CHECK(stats::spearman(got, want) == doctest::Approx(1.0));
    }
}

TEST_CASE("remote scorer") {
    const ScoringContext ctx = ctx_for("1-kabul", 1, "Location", "Name the casualties for the Kabul area?");

    SUBCASE("well-formed replies and request body") {
        nlohmann::json seen;
        std::mutex mu;
        FakeServer server([&](const httplib::Request& req, httplib::Response& res) {
            {
                std::lock_guard lock(mu);
                seen = nlohmann::json::parse(req.body);
            }
            res.set_content(R"({"probability": 0.25})", "application/json");
        });
        RemoteScorer remote({server.endpoint()});
        CHECK(remote.score("Kabul area", ctx) == 0.25);
        CHECK(seen.at("sentence") == "Kabul area");
        CHECK(seen.at("table_id") == "1-kabul");
        CHECK(seen.at("column_index") == 1);
        CHECK(seen.at("column_name") == "Location");
        const auto h = remote.health();
        CHECK(h.status == "ok");
        CHECK(h.model == "echo");
        CHECK(remote.fallback_count() == 0);

        // The pool is shared by concurrent callers.
        std::vector<std::jthread> workers;
        std::atomic<int> ok{0};
        for (int i = 0; i < 8; ++i) {
            workers.emplace_back([&] {
                for (int k = 0; k < 10; ++k) ok += remote.score("x", ctx) == 0.25;
            });
        }
        workers.clear();
        CHECK(ok == 80);
    }
    SUBCASE("out-of-bounds probability is fatal even with a fallback") {
        FakeServer server([](const httplib::Request&, httplib::Response& res) {
            res.set_content(R"({"probability": 1.5})", "application/json");
        });
        RemoteConfig cfg{server.endpoint()};
        cfg.fallback = std::make_shared<LexicalScorer>(case_tables());
        RemoteScorer remote(cfg);
        try {
            remote.score("Kabul", ctx);
            FAIL("expected TransportError");
        } catch (const TransportError& e) {
            CHECK(e.kind() == TransportError::Kind::OutOfBounds);
        }
    }
    SUBCASE("malformed reply") {
        FakeServer server([](const httplib::Request&, httplib::Response& res) {
            res.set_content(R"({"prob": 0.5})", "application/json");
        });
        RemoteScorer remote({server.endpoint()});
        try {
            remote.score("Kabul", ctx);
            FAIL("expected TransportError");
        } catch (const TransportError& e) {
            CHECK(e.kind() == TransportError::Kind::Malformed);
        }
    }
    SUBCASE("server error status") {
        FakeServer server([](const httplib::Request&, httplib::Response& res) { res.status = 500; });
        RemoteScorer remote({server.endpoint()});
        try {
            remote.score("Kabul", ctx);
            FAIL("expected TransportError");
        } catch (const TransportError& e) {
            CHECK(e.kind() == TransportError::Kind::HttpStatus);
        }
    }
    SUBCASE("unreachable server without and with fallback") {
        RemoteConfig cfg{dead_endpoint()};
        cfg.timeout = std::chrono::milliseconds(500);
        {
            RemoteScorer remote(cfg);
            CHECK_THROWS_AS(remote.score("Kabul", ctx), TransportError);
            CHECK_THROWS_AS(remote.health(), TransportError);
        }
        cfg.fallback = std::make_shared<LexicalScorer>(case_tables());
        RemoteScorer remote(cfg);
        CHECK(remote.score("Kabul area", ctx) == 1.0);
        CHECK(remote.score("casualties", ctx) == 0.0);
        CHECK(remote.fallback_count() == 2);
    }
    SUBCASE("ping subcommand") {
        FakeServer server([](const httplib::Request&, httplib::Response& res) {
            res.set_content(R"({"probability": 0.5})", "application/json");
        });
        std::ostringstream out, err;
        CHECK(run_cli({"ping", server.endpoint()}, out, err) == kExitOk);
        CHECK(out.str().find("echo") != std::string::npos);
        std::ostringstream out2, err2;
        CHECK(run_cli({"ping", dead_endpoint(), "--timeout-ms", "300"}, out2, err2) != kExitOk);
        CHECK_FALSE(err2.str().empty());
    }
}
