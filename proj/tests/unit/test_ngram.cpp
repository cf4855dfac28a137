#include "fpscore/error.hpp"
#include "fpscore/ngram.hpp"

#include "fixed_corpora.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

#include <doctest.h>
#include <zlib.h>

#include <cmath>
#include <numeric>
#include <random>

using namespace fpscore;

namespace {

Vocabulary abc_vocab() { return Vocabulary::from_words({"<unk>", "</s>", "a", "b", "c"}, 1); }

// All contexts of length order-1 whose padding symbols form a prefix, plus
// every shorter unpadded context.
std::vector<std::vector<TokenId>> all_contexts(std::size_t vocab_size, int order) {
    std::vector<std::vector<TokenId>> out;
    const std::size_t len = static_cast<std::size_t>(order - 1);
    for (std::size_t l = 0; l <= len; ++l) {
        std::size_t combos = 1;
        for (std::size_t i = 0; i < l; ++i) combos *= vocab_size;
        for (std::size_t code = 0; code < combos; ++code) {
            std::vector<TokenId> ctx;
            std::size_t c = code;
            for (std::size_t i = 0; i < l; ++i) {
                ctx.push_back(static_cast<TokenId>(c % vocab_size));
                c /= vocab_size;
            }
            out.push_back(ctx);
            // same symbols behind explicit padding
            if (l < len) {
                std::vector<TokenId> padded(len - l, Vocabulary::kBos);
                padded.insert(padded.end(), ctx.begin(), ctx.end());
                out.push_back(padded);
            }
        }
    }
    return out;
}

std::vector<long> as_oracle_ctx(const std::vector<TokenId>& ctx) {
    std::vector<long> out;
    for (TokenId id : ctx) out.push_back(id == Vocabulary::kBos ? -1L : static_cast<long>(id));
    return out;
}

std::string gunzip(const std::filesystem::path& p) {
    gzFile f = gzopen(p.string().c_str(), "rb");
    std::string out;
    char buf[4096];
    int n;
    while ((n = gzread(f, buf, sizeof buf)) > 0) out.append(buf, static_cast<std::size_t>(n));
    gzclose(f);
    return out;
}

void gzip_to(const std::filesystem::path& p, const std::string& text) {
    gzFile f = gzopen(p.string().c_str(), "wb9");
    gzwrite(f, text.data(), static_cast<unsigned>(text.size()));
    gzclose(f);
}

} // namespace

TEST_SUITE("ngram") {
    TEST_CASE("unigram probabilities by hand") {
        auto m = NgramModel::train({{2, 2, 3}}, Vocabulary::from_words({"<unk>", "</s>", "a", "b"}, 1), {1, 0.75, 1.0});
        const auto d = m.next_distribution(std::vector<TokenId>{});
        CHECK(d[2] == doctest::Approx(0.375).epsilon(1e-15));
        CHECK(d[0] == doctest::Approx(0.125).epsilon(1e-15));
        CHECK(d[1] == doctest::Approx(2.0 / 8.0).epsilon(1e-15));
        CHECK(m.total_tokens() == 4);
    }

    TEST_CASE("bigram interpolation by hand") {
        // a b a b a c: T = 7 (with EOS), |V| = 5, c(a) = 3 as context, c(a,b) = 2
        auto m = NgramModel::train({{2, 3, 2, 3, 2, 4}}, abc_vocab(), {2, 0.75, 1.0});
        const double p1_b = (2.0 + 1.0) / (7.0 + 5.0);
        const double p1_c = (1.0 + 1.0) / (7.0 + 5.0);
        const auto d = m.next_distribution(std::vector<TokenId>{2});
        CHECK(d[3] == doctest::Approx(0.75 * 2.0 / 3.0 + 0.25 * p1_b).epsilon(1e-15));
        CHECK(d[3] == doctest::Approx(0.5625).epsilon(1e-15));
        CHECK(d[4] == doctest::Approx(0.75 * 1.0 / 3.0 + 0.25 * p1_c).epsilon(1e-15));
    }

    TEST_CASE("matches the brute-force oracle on fixed corpora") {
        for (const auto& fc : testutil::fixed_corpora()) {
            const auto enc = testutil::encode_corpus(fc);
            std::size_t tokens = 0;
            for (const auto& s : enc.ids) tokens += s.size();
            REQUIRE(tokens <= 200);
            for (int order = 1; order <= 3; ++order) {
                CAPTURE(fc.name);
                CAPTURE(order);
                const NgramParams params{order, 0.75, 1.0};
                const auto model = NgramModel::train(enc.ids, enc.vocab, params);
                const oracle::Ngram ref(enc.ids, static_cast<int>(enc.vocab.size()), order, params.lambda, params.alpha);
                double worst = 0.0, worst_sum = 0.0;
                for (const auto& ctx : all_contexts(enc.vocab.size(), order)) {
                    const auto d = model.next_distribution(ctx);
                    REQUIRE(d.size() == enc.vocab.size());
                    double sum = 0.0;
                    for (std::size_t w = 0; w < d.size(); ++w) {
                        CHECK(d[w] > 0.0);
                        worst = std::max(worst, std::abs(d[w] - ref.prob(as_oracle_ctx(ctx), static_cast<long>(w))));
                        sum += d[w];
                    }
                    worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
                }
                CHECK(worst <= 1e-12);
                CHECK(worst_sum <= 1e-9);
            }
        }
    }

    TEST_CASE("raw counts match the oracle") {
        const auto enc = testutil::encode_corpus(testutil::fixed_corpora()[0]);
        const auto model = NgramModel::train(enc.ids, enc.vocab, {3, 0.75, 1.0});
        const oracle::Ngram ref(enc.ids, static_cast<int>(enc.vocab.size()), 3, 0.75, 1.0);
        const TokenId B = Vocabulary::kBos;
        for (const auto& ng : std::vector<std::vector<TokenId>>{{2}, {2, 3}, {B, 2}, {B, B, 2}, {2, 3, 2}, {4, 1}}) {
            std::vector<long> ctx = as_oracle_ctx(ng);
            const long w = ctx.back();
            ctx.pop_back();
            CHECK(model.count(ng) == static_cast<std::uint64_t>(ref.count(ctx, w)));
        }
        CHECK(model.context_count(std::vector<TokenId>{2}) == static_cast<std::uint64_t>(ref.count({2}, -1)));
    }

    TEST_CASE("unseen context falls back to the unigram distribution") {
        auto m = NgramModel::train({{2, 3, 2, 3, 2, 4}}, abc_vocab(), {3, 0.75, 1.0});
        const auto uni = NgramModel::train({{2, 3, 2, 3, 2, 4}}, abc_vocab(), {1, 0.75, 1.0});
        // UNK never occurs in training, so neither [unk] nor [unk, unk] has been seen
        CHECK(m.next_distribution(std::vector<TokenId>{0, 0}) == uni.next_distribution(std::vector<TokenId>{}));
        CHECK(m.next_distribution(std::vector<TokenId>{0, 4}) != uni.next_distribution(std::vector<TokenId>{}));
        // longer contexts only use their tail
        CHECK(m.next_distribution(std::vector<TokenId>{4, 4, 2, 3}) == m.next_distribution(std::vector<TokenId>{2, 3}));
    }

    TEST_CASE("training does not depend on sample order") {
        std::vector<std::vector<TokenId>> corpus = {{2, 3}, {4, 2, 2}, {3, 3, 4, 2}};
        auto a = NgramModel::train(corpus, abc_vocab(), {3, 0.75, 1.0});
        std::reverse(corpus.begin(), corpus.end());
        auto b = NgramModel::train(corpus, abc_vocab(), {3, 0.75, 1.0});
        CHECK(a.fingerprint() == b.fingerprint());
        CHECK(a.next_distribution(std::vector<TokenId>{2, 3}) == b.next_distribution(std::vector<TokenId>{2, 3}));
    }

    TEST_CASE("invalid hyperparameters and corpora") {
        CHECK_THROWS_AS(NgramModel::train({}, abc_vocab(), {}), InvalidArgument);
        CHECK_THROWS_AS(NgramModel::train({{2}}, abc_vocab(), {0, 0.75, 1.0}), InvalidArgument);
        CHECK_THROWS_AS(NgramModel::train({{2}}, abc_vocab(), {6, 0.75, 1.0}), InvalidArgument);
        CHECK_THROWS_AS(NgramModel::train({{2}}, abc_vocab(), {2, 1.0, 1.0}), InvalidArgument);
        CHECK_THROWS_AS(NgramModel::train({{2}}, abc_vocab(), {2, 0.5, 0.0}), InvalidArgument);
        CHECK_THROWS_AS(NgramModel::train({{9}}, abc_vocab(), {}), InvalidArgument);
    }

    TEST_CASE("save and load round trip") {
        testutil::TempDir dir;
        const auto enc = testutil::encode_corpus(testutil::fixed_corpora()[1]);
        const auto m = NgramModel::train(enc.ids, enc.vocab, {3, 0.6, 0.5});
        m.save(dir / "m.fplm");
        const auto back = NgramModel::load(dir / "m.fplm");
        CHECK(back.fingerprint() == m.fingerprint());
        CHECK(back.info() == m.info());
        CHECK(back.vocab() == m.vocab());
        CHECK(back.params().lambda == m.params().lambda);
        std::mt19937_64 rng(5);
        for (int i = 0; i < 100; ++i) {
            std::vector<TokenId> ctx(rng() % 4);
            for (auto& t : ctx) t = static_cast<TokenId>(rng() % m.vocab().size());
            CHECK(back.next_distribution(ctx) == m.next_distribution(ctx));
        }
        // saving again gives the same bytes
        back.save(dir / "again.fplm");
        CHECK(gunzip(dir / "again.fplm") == gunzip(dir / "m.fplm"));
    }

    TEST_CASE("damaged model files are rejected") {
        testutil::TempDir dir;
        const auto m = NgramModel::train({{2, 3, 2, 3, 2, 4}}, abc_vocab(), {2, 0.75, 1.0});
        m.save(dir / "m.fplm");
        const std::string bytes = testutil::slurp(dir / "m.fplm");

        testutil::spit(dir / "trunc.fplm", bytes.substr(0, bytes.size() / 2));
        CHECK_THROWS_WITH_AS(NgramModel::load(dir / "trunc.fplm"), doctest::Contains("corrupt file"), FormatError);

        std::string text = gunzip(dir / "m.fplm");
        std::string tampered = text;
        tampered[tampered.size() - 2] = tampered[tampered.size() - 2] == '1' ? '2' : '1';
        gzip_to(dir / "tampered.fplm", tampered);
        CHECK_THROWS_WITH_AS(NgramModel::load(dir / "tampered.fplm"), doctest::Contains("corrupt file"), FormatError);

        std::string versioned = text;
        const auto pos = versioned.find("\"version\":1");
        REQUIRE(pos != std::string::npos);
        versioned.replace(pos, 11, "\"version\":2");
        gzip_to(dir / "v2.fplm", versioned);
        CHECK_THROWS_WITH_AS(NgramModel::load(dir / "v2.fplm"), doctest::Contains("version mismatch"), FormatError);

        CHECK_THROWS_AS(NgramModel::load(dir / "missing.fplm"), IoError);
    }

    TEST_CASE("top-k indices break ties by id") {
        const std::vector<double> d{0.1, 0.3, 0.3, 0.2, 0.1};
        CHECK(top_k_indices(d, 1) == std::vector<TokenId>{1});
        CHECK(top_k_indices(d, 3) == std::vector<TokenId>{1, 2, 3});
        CHECK(top_k_indices(d, 5) == std::vector<TokenId>{1, 2, 3, 0, 4});
    }

    TEST_CASE("k = 1 is argmax decoding") {
        const auto enc = testutil::encode_corpus(testutil::fixed_corpora()[1]);
        const auto m = NgramModel::train(enc.ids, enc.vocab, {2, 0.75, 1.0});
        const std::vector<TokenId> prompt{enc.vocab.lookup("the")};
        const auto a = generate_topk(m, 1, 1, 12, prompt);
        const auto b = generate_topk(m, 999, 1, 12, prompt);
        CHECK(a == b);
        std::vector<TokenId> ctx = prompt;
        for (TokenId id : a) {
            const auto d = m.next_distribution(ctx);
            CHECK(id == top_k_indices(d, 1)[0]);
            ctx.push_back(id);
        }
    }

    TEST_CASE("generation is deterministic per seed and stops at EOS or max_len") {
        const auto enc = testutil::encode_corpus(testutil::fixed_corpora()[1]);
        const auto m = NgramModel::train(enc.ids, enc.vocab, {3, 0.75, 1.0});
        const std::vector<TokenId> prompt{enc.vocab.lookup("the")};
        CHECK(generate_topk(m, 42, 4, 20, prompt) == generate_topk(m, 42, 4, 20, prompt));
        bool differs = false;
        for (std::uint64_t s = 0; s < 20; ++s) differs |= generate_topk(m, s, 4, 20, prompt) != generate_topk(m, 42, 4, 20, prompt);
        CHECK(differs);
        for (std::uint64_t s = 0; s < 20; ++s) {
            const auto out = generate_topk(m, s, 4, 20, prompt);
            CHECK(out.size() <= 20);
            CHECK(std::find(out.begin(), out.end(), Vocabulary::kEos) == out.end());
            CHECK(generate_topk(m, s, 4, 20, prompt, {true}).size() == 20);
        }
        CHECK_THROWS_AS(generate_topk(m, 1, 0, 5, prompt), InvalidArgument);
        CHECK_THROWS_AS(generate_topk(m, 1, m.vocab().size() + 1, 5, prompt), InvalidArgument);
    }

    TEST_CASE("sampled frequencies follow the renormalized top-k distribution") {
        const auto enc = testutil::encode_corpus(testutil::fixed_corpora()[1]);
        const auto m = NgramModel::train(enc.ids, enc.vocab, {2, 0.75, 1.0});
        const std::vector<TokenId> prompt{enc.vocab.lookup("the")};
        const std::size_t k = 4;
        const auto d = m.next_distribution(prompt);
        const auto top = top_k_indices(d, k);
        double mass = 0.0;
        for (TokenId id : top) mass += d[id];

        std::vector<double> freq(d.size(), 0.0);
        const int draws = 10000;
        for (int s = 0; s < draws; ++s) {
            const auto out = generate_topk(m, static_cast<std::uint64_t>(s), k, 1, prompt);
            // a sampled EOS ends generation and yields no token
            freq[out.empty() ? Vocabulary::kEos : out[0]] += 1.0 / draws;
        }
        for (std::size_t w = 0; w < d.size(); ++w) {
            const bool kept = std::find(top.begin(), top.end(), static_cast<TokenId>(w)) != top.end();
            const double expected = kept ? d[w] / mass : 0.0;
            CHECK(std::abs(freq[w] - expected) <= 0.02);
        }
    }
}
