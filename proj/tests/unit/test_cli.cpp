#include "fpscore/cli.hpp"
#include "fpscore/naturalness.hpp"
#include "fpscore/report.hpp"
#include "fpscore/server.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <sstream>

using namespace fpscore;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "fpscore");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

// A trained model plus natural and synthetic text files in a temp dir.
struct Workspace {
    testutil::TempDir dir;
    std::string model, model2, natural, synthetic;

    Workspace() {
        std::string corpus;
        for (int i = 0; i < 20; ++i)
            for (const auto& l : testutil::toy_lines()) corpus += l + "\n";
        testutil::spit(dir / "corpus.txt", corpus);
        model = (dir / "m.fplm").string();
        model2 = (dir / "m2.fplm").string();
        REQUIRE(run({"train", "--corpus", (dir / "corpus.txt").string(), "--out", model, "--order", "3"}).code == 0);
        REQUIRE(run({"train", "--corpus", (dir / "corpus.txt").string(), "--out", model2, "--order", "2"}).code == 0);
        natural = (dir / "natural.txt").string();
        testutil::spit(natural, "the zebra sat on a park .\n\nthe mat ran to a cat home .\na dog and the park sat .\n");
        synthetic = (dir / "synthetic.txt").string();
        REQUIRE(run({"generate", "--model", model, "--count", "3", "--k", "2", "--max-len", "8", "--seed", "4", "--out", synthetic})
                    .code == 0);
    }

    std::string path(const std::string& name) const { return (dir / name).string(); }
};

} // namespace

TEST_SUITE("cli") {
    TEST_CASE("usage errors exit with 2") {
        CHECK(run({}).code == 2);
        CHECK(run({"frobnicate"}).code == 2);
        CHECK(run({"score", "--bogus"}).code == 2);
        const auto r = run({"score", "--input", "x"});
        CHECK(r.code == 2);
        CHECK(r.err.find("Usage") != std::string::npos);
        CHECK(run({"--help"}).code == 0);
    }

    TEST_CASE("operation errors exit with 1") {
        const auto r = run({"train", "--corpus", "/nonexistent/corpus.txt", "--out", "/tmp/x.fplm"});
        CHECK(r.code == 1);
        CHECK(r.err.rfind("error: ", 0) == 0);
        CHECK(run({"score", "--backend", "weird:thing", "--input", "x", "--out", "y"}).code == 1);
    }

    TEST_CASE("score, calibrate, evaluate, compare, report") {
        Workspace w;
        const auto nat = run({"score", "--backend", "ngram:" + w.model, "--input", w.natural, "--out", w.path("nat.jsonl")});
        REQUIRE(nat.code == 0);
        CHECK(nat.err.find("fingerprint") != std::string::npos);
        REQUIRE(run({"score", "--backend", "ngram:" + w.model, "--input", w.synthetic, "--out", w.path("syn.jsonl")}).code == 0);
        const auto records = read_jsonl(w.path("nat.jsonl"));
        REQUIRE(records.size() == 3);
        CHECK(records[0].sample_id == "line-1");
        CHECK(records[1].sample_id == "line-3"); // blank line skipped, numbering kept

        const auto cal = run({"calibrate", "--natural", w.path("nat.jsonl"), "--synthetic", w.path("syn.jsonl"), "--out",
                              w.path("t.json"), "--roc", w.path("roc.csv")});
        REQUIRE(cal.code == 0);
        const auto cfg = load_thresholds(w.path("t.json"));
        CHECK(cfg.calibration_meta.backend_fingerprint == records[0].backend_fingerprint);
        CHECK(std::filesystem::exists(w.path("roc.csv")));

        const auto ev = run({"evaluate", "--scored", w.path("syn.jsonl"), "--thresholds", w.path("t.json")});
        REQUIRE(ev.code == 0);
        CHECK(ev.out.find("h_score ") != std::string::npos);
        const auto evj = run({"evaluate", "--scored", w.path("syn.jsonl"), "--thresholds", w.path("t.json"), "--json"});
        CHECK(evj.out.find("\"h_score\":") != std::string::npos);

        REQUIRE(run({"calibrate", "--natural", w.path("nat.jsonl"), "--synthetic", w.path("syn.jsonl"), "--out",
                     w.path("d.json"), "--mode", "dual", "--c", "0.5"})
                    .code == 0);
        CHECK(run({"calibrate", "--natural", w.path("nat.jsonl"), "--synthetic", w.path("syn.jsonl"), "--out", w.path("d.json"),
                   "--mode", "triple"})
                  .code == 2);

        const auto cmp = run({"compare", "--generated", w.path("syn.jsonl"), "--gold", w.path("nat.jsonl"), "--csv", w.path("c.csv")});
        REQUIRE(cmp.code == 0);
        CHECK(cmp.out.find("ngram-3") != std::string::npos);
        CHECK(testutil::slurp(w.path("c.csv")).find(records[0].backend_fingerprint) != std::string::npos);

        REQUIRE(run({"report", "--scored", w.path("nat.jsonl"), "--sample-id", "line-3", "--out", w.path("h.html")}).code == 0);
        CHECK(testutil::slurp(w.path("h.html")).find("tok ") != std::string::npos);
        CHECK(run({"report", "--scored", w.path("nat.jsonl"), "--sample-id", "nope", "--out", w.path("h.html")}).code == 1);
    }

    TEST_CASE("thresholds are bound to their backend") {
        Workspace w;
        REQUIRE(run({"score", "--backend", "ngram:" + w.model, "--input", w.natural, "--out", w.path("nat.jsonl")}).code == 0);
        REQUIRE(run({"score", "--backend", "ngram:" + w.model, "--input", w.synthetic, "--out", w.path("syn.jsonl")}).code == 0);
        REQUIRE(run({"score", "--backend", "ngram:" + w.model2, "--input", w.synthetic, "--out", w.path("syn2.jsonl")}).code == 0);
        REQUIRE(run({"calibrate", "--natural", w.path("nat.jsonl"), "--synthetic", w.path("syn.jsonl"), "--out", w.path("t.json")})
                    .code == 0);

        const auto refused = run({"evaluate", "--scored", w.path("syn2.jsonl"), "--thresholds", w.path("t.json")});
        CHECK(refused.code == 1);
        CHECK(refused.err.find("--allow-backend-mismatch") != std::string::npos);
        CHECK(run({"evaluate", "--scored", w.path("syn2.jsonl"), "--thresholds", w.path("t.json"), "--allow-backend-mismatch"}).code ==
              0);
        CHECK(run({"calibrate", "--natural", w.path("nat.jsonl"), "--synthetic", w.path("syn2.jsonl"), "--out", w.path("x.json")})
                  .code == 1);
        CHECK(run({"compare", "--generated", w.path("syn2.jsonl"), "--gold", w.path("nat.jsonl")}).code == 1);
    }

    TEST_CASE("score options") {
        Workspace w;
        testutil::spit(w.path("rep.txt"), "the the the dog dog ran\nthe\n");
        REQUIRE(run({"score", "--backend", "ngram:" + w.model, "--input", w.path("rep.txt"), "--out", w.path("r.jsonl"),
                     "--collapse-repeats", "--min-tokens", "2"})
                    .code == 0);
        const auto recs = read_jsonl(w.path("r.jsonl"));
        REQUIRE(recs.size() == 1);
        CHECK(recs[0].k == 3);
        CHECK(run({"score", "--backend", "ngram:" + w.model, "--input", w.path("rep.txt"), "--out", w.path("r.jsonl"), "--raw"})
                  .code == 1);
    }

    TEST_CASE("remote backend through the command line") {
        Workspace w;
        auto model = std::make_shared<const NgramModel>(NgramModel::load(w.model));
        ScoreServer server(model);
        const int port = server.bind("127.0.0.1", 0);
        server.start();
        const std::string url = "remote:http://127.0.0.1:" + std::to_string(port);
        REQUIRE(run({"score", "--backend", "ngram:" + w.model, "--input", w.natural, "--out", w.path("local.jsonl")}).code == 0);
        REQUIRE(run({"score", "--backend", url, "--input", w.natural, "--out", w.path("remote.jsonl")}).code == 0);
        REQUIRE(run({"score", "--backend", url, "--input", w.natural, "--out", w.path("raw.jsonl"), "--raw"}).code == 0);
        const auto local = read_jsonl(w.path("local.jsonl"));
        const auto remote = read_jsonl(w.path("remote.jsonl"));
        const auto raw = read_jsonl(w.path("raw.jsonl"));
        REQUIRE(local.size() == remote.size());
        REQUIRE(local.size() == raw.size());
        for (std::size_t i = 0; i < local.size(); ++i) {
            CHECK(std::abs(local[i].fp_s - remote[i].fp_s) <= 1e-9);
            CHECK(std::abs(local[i].fp_s - raw[i].fp_s) <= 1e-9);
            CHECK(local[i].backend_fingerprint == remote[i].backend_fingerprint);
            CHECK(local[i].sample_id == raw[i].sample_id);
        }
        server.stop();
    }

    TEST_CASE("generate honours prompt and eos suppression") {
        Workspace w;
        const auto g = run({"generate", "--model", w.model, "--count", "2", "--k", "1", "--max-len", "6", "--prompt", "The dog",
                            "--suppress-eos"});
        REQUIRE(g.code == 0);
        std::istringstream lines(g.out);
        std::string line;
        int n = 0;
        while (std::getline(lines, line)) {
            ++n;
            CHECK(line.rfind("the dog ", 0) == 0);
            CHECK(tokenize(line).size() == 8);
        }
        CHECK(n == 2);
    }
}
