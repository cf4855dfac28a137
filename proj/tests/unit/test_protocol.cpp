#include "fpscore/error.hpp"
#include "fpscore/protocol.hpp"
#include "fpscore/server.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>

using namespace fpscore;
using namespace fpscore::protocol;

namespace {

const std::filesystem::path kFixtures = std::filesystem::path(FPSCORE_FIXTURES) / "protocol";

std::vector<std::string> fixture_stems() {
    std::vector<std::string> out;
    for (const auto& e : std::filesystem::directory_iterator(kFixtures)) {
        const std::string name = e.path().filename().string();
        const std::string suffix = ".request.json";
        if (name.size() > suffix.size() && name.ends_with(suffix)) out.push_back(name.substr(0, name.size() - suffix.size()));
    }
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace

TEST_SUITE("protocol") {
    TEST_CASE("request round trip") {
        ScoreRequest r;
        r.pretokenized = {{"a", "b"}, {"ü", "\"q\""}};
        const std::string wire = serialize(r);
        CHECK(wire == R"({"mode":"pretokenized","texts":[["a","b"],["ü","\"q\""]],"include":["p_actual","p_max","rank","entropy"]})");
        const auto back = parse_request(wire);
        CHECK(back.pretokenized == r.pretokenized);
        CHECK(serialize(back) == wire);

        ScoreRequest raw;
        raw.mode = Mode::raw;
        raw.raw = {"Hello there."};
        raw.include = {Field::p_actual, Field::p_max};
        CHECK(serialize(parse_request(serialize(raw))) == serialize(raw));
        CHECK_FALSE(parse_request(serialize(raw)).includes(Field::rank));
    }

    TEST_CASE("include defaults to every field") {
        const auto r = parse_request(R"({"mode":"pretokenized","texts":[["a"]]})");
        CHECK(r.includes(Field::rank));
        CHECK(r.includes(Field::entropy));
    }

    TEST_CASE("empty text lists are rejected before any call") {
        ScoreRequest r;
        CHECK_THROWS_WITH_AS(r.validate(), "non-empty texts required", InvalidArgument);
        r.pretokenized = {{}};
        CHECK_THROWS_AS(r.validate(), InvalidArgument);
    }

    TEST_CASE("malformed requests") {
        for (const char* bad : {"", "[]", "{\"mode\":\"x\",\"texts\":[[\"a\"]]}", "{\"mode\":\"raw\",\"texts\":[1]}",
                                "{\"mode\":\"pretokenized\",\"texts\":[]}", "{\"texts\":[[\"a\"]]}",
                                "{\"mode\":\"pretokenized\",\"texts\":[[\"a\"]],\"include\":[\"bogus\"]}"}) {
            CAPTURE(bad);
            CHECK_THROWS_AS(parse_request(bad), FormatError);
        }
    }

    TEST_CASE("response round trip and doubles survive exactly") {
        ScoreResponse r;
        r.backend = {"ngram-3", 15, "0123456789abcdef"};
        r.results = {{{"a", std::log(0.1), std::log(0.3), 2, 1.234567890123}, {"b", -0.5, -0.5, 1, std::nullopt}}};
        const std::string wire = serialize(r);
        const auto back = parse_response(wire);
        CHECK(back == r);
        CHECK(serialize(back) == wire);
    }

    TEST_CASE("schema violations in responses") {
        const std::string head = R"({"backend":{"name":"n","vocab_size":3,"fingerprint":"f"},"results":)";
        for (const std::string tail :
             {R"([[{"token":"a","logp_actual":0.5,"logp_max":0.5}]]})", R"([[{"token":"a","logp_actual":-1,"logp_max":-2}]]})",
              R"([[{"token":"a","logp_actual":-1,"logp_max":-1,"rank":0}]]})",
              R"([[{"token":"a","logp_actual":-1,"logp_max":-1,"entropy_nats":-1}]]})", R"([[{"logp_actual":-1,"logp_max":-1}]]})",
              R"({})", R"([[{"token":"a","logp_actual":"x","logp_max":-1}]]})"}) {
            CAPTURE(tail);
            CHECK_THROWS_AS(parse_response(head + tail), FormatError);
        }
        CHECK_THROWS_AS(parse_response(R"({"results":[]})"), FormatError);
    }

    TEST_CASE("responses are checked against their request") {
        ScoreRequest req;
        req.pretokenized = {{"a", "b"}};
        ScoreResponse ok{{"n", 3, "f"}, {{{"a", -1, -1, 1, 0.5}, {"b", -2, -1, 2, 0.5}}}};
        CHECK_NOTHROW(parse_response(serialize(ok), &req));
        ScoreResponse short_text{{"n", 3, "f"}, {{{"a", -1, -1, 1, 0.5}}}};
        CHECK_THROWS_AS(parse_response(serialize(short_text), &req), FormatError);
        ScoreResponse no_rank{{"n", 3, "f"}, {{{"a", -1, -1, std::nullopt, 0.5}, {"b", -2, -1, 2, 0.5}}}};
        CHECK_THROWS_AS(parse_response(serialize(no_rank), &req), FormatError);
        req.pretokenized.push_back({"c"});
        CHECK_THROWS_AS(parse_response(serialize(ok), &req), FormatError);
    }

    TEST_CASE("info and error bodies") {
        const ScorerInfo info{"ngram-2", 10, "abcdef0123456789"};
        CHECK(serialize(info) == R"({"name":"ngram-2","vocab_size":10,"fingerprint":"abcdef0123456789"})");
        CHECK(parse_info(serialize(info)) == info);
        CHECK(parse_error(error_body("bad things")) == "bad things");
        CHECK(parse_error("plain text") == "plain text");
    }

    TEST_CASE("wire conversion keeps fp in log space") {
        const TokenScore s{1e-300, 1e-200, 5, 2.0, 1e-100};
        ScoreRequest req;
        const auto w = to_wire("x", s, req);
        const auto back = from_wire(w);
        CHECK(back.fp == doctest::Approx(1e-100).epsilon(1e-9));
        CHECK(back.rank == 5);
        const TokenScore top{0.25, 0.25, 1, 1.0, 1.0};
        CHECK(from_wire(to_wire("y", top, req)).fp == 1.0);
    }

    TEST_CASE("recorded fixtures re-serialize byte for byte") {
        const auto stems = fixture_stems();
        REQUIRE(stems.size() >= 4);
        for (const auto& stem : stems) {
            CAPTURE(stem);
            const std::string req_text = testutil::slurp(kFixtures / (stem + ".request.json"));
            const std::string res_text = testutil::slurp(kFixtures / (stem + ".response.json"));
            const auto req = parse_request(req_text);
            CHECK(serialize(req) == req_text);
            const auto res = parse_response(res_text, &req);
            CHECK(serialize(res) == res_text);
        }
        const std::string info = testutil::slurp(kFixtures / "info.json");
        CHECK(serialize(parse_info(info)) == info);
    }

    TEST_CASE("server reproduces the fixtures from the fixture corpus") {
        std::vector<std::string> lines = read_corpus_lines((kFixtures / "tiny_corpus.txt").string());
        ScoreServer server(testutil::shared_model(lines, {3, 0.75, 1.0}));
        CHECK(server.handle_info().body == testutil::slurp(kFixtures / "info.json"));
        for (const auto& stem : fixture_stems()) {
            CAPTURE(stem);
            const auto res = server.handle_score(testutil::slurp(kFixtures / (stem + ".request.json")));
            CHECK(res.status == 200);
            CHECK(res.body == testutil::slurp(kFixtures / (stem + ".response.json")));
        }
    }

    TEST_CASE("server status codes") {
        ScoreServer server(testutil::shared_model(testutil::toy_lines(), {2, 0.75, 1.0}));
        CHECK(server.handle_score("{nope").status == 400);
        CHECK(server.handle_score(R"({"mode":"pretokenized","texts":[]})").status == 400);
        const auto bad = server.handle_score(R"({"mode":"raw","texts":["   "]})");
        CHECK(bad.status == 400);
        CHECK_FALSE(parse_error(bad.body).empty());
        ScoreServer empty(nullptr);
        CHECK(empty.handle_info().status == 503);
        CHECK(empty.handle_score(R"({"mode":"pretokenized","texts":[["a"]]})").status == 503);
    }
}
