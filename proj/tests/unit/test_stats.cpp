#include "fpscore/error.hpp"
#include "fpscore/stats.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace fpscore;

TEST_SUITE("stats") {
    TEST_CASE("identical arms") {
        const std::vector<double> x{0.2, 0.4, 0.6};
        const auto c = paired_compare(x, x, 1);
        CHECK(c.mean_diff == 0.0);
        CHECK(c.frac_greater == 0.0);
        CHECK(c.p_value == 1.0);
        CHECK(c.test_meta.ties == 3);
        CHECK_FALSE(c.significant);
    }

    TEST_CASE("constant positive differences") {
        std::vector<double> gen(10, 0.6), gold(10, 0.5);
        const auto c = paired_compare(gen, gold, 1);
        CHECK(c.p_value == 2.0 / 1024.0);
        CHECK(c.significant);
        CHECK(c.test_meta.exact);
        CHECK(c.test_meta.resamples == 1024);
        CHECK(c.frac_greater == 1.0);
        CHECK(c.rel_diff_pct == doctest::Approx(20.0));
    }

    TEST_CASE("arithmetic of the summary fields") {
        const auto c = paired_compare(std::vector<double>{0.2, 0.3}, std::vector<double>{0.1, 0.4}, 1);
        CHECK(c.frac_greater == 0.5);
        CHECK(c.mean_diff == doctest::Approx(0.0).epsilon(1e-15));
        CHECK(c.n_greater == 1);
        CHECK_THROWS_AS(paired_compare(std::vector<double>{0.1}, std::vector<double>{0.2}, 1), InvalidArgument);
        CHECK_THROWS_AS(paired_compare(std::vector<double>{0.1, 0.2}, std::vector<double>{0.2}, 1), InvalidArgument);
    }

    TEST_CASE("exact mode agrees with the enumeration oracle") {
        std::mt19937_64 rng(17);
        std::uniform_real_distribution<double> u(-0.3, 0.5);
        for (int trial = 0; trial < 40; ++trial) {
            std::vector<double> d(2 + rng() % 11);
            for (auto& x : d) x = u(rng);
            if (trial % 4 == 0) d[0] = 0.0;
            PermutationMeta meta;
            const double p = sign_flip_p_value(d, 0, PermutationOptions{}, &meta);
            CHECK(p == oracle::exact_sign_flip_p(d));
            CHECK(meta.exact);
        }
    }

    TEST_CASE("negating differences keeps the exact p-value") {
        std::mt19937_64 rng(23);
        std::uniform_real_distribution<double> u(-0.2, 0.6);
        for (int trial = 0; trial < 30; ++trial) {
            std::vector<double> gen(3 + rng() % 14), gold(gen.size());
            for (std::size_t i = 0; i < gen.size(); ++i) {
                gen[i] = 0.3 + u(rng) / 2;
                gold[i] = 0.3 + u(rng) / 2;
            }
            const auto a = paired_compare(gen, gold, 5);
            const auto b = paired_compare(gold, gen, 5);
            CHECK(a.p_value == b.p_value);
            CHECK(a.mean_diff == doctest::Approx(-b.mean_diff).epsilon(1e-15));
        }
    }

    TEST_CASE("Monte Carlo mode is seeded and worker independent") {
        std::mt19937_64 rng(29);
        std::normal_distribution<double> nd(0.02, 0.1);
        std::vector<double> d(60);
        for (auto& x : d) x = nd(rng);
        PermutationOptions one{20, 20000, 1}, four{20, 20000, 4};
        PermutationMeta meta;
        const double a = sign_flip_p_value(d, 99, one, &meta);
        CHECK_FALSE(meta.exact);
        CHECK(meta.resamples == 20000);
        CHECK(a == sign_flip_p_value(d, 99, one));
        CHECK(a == sign_flip_p_value(d, 99, four));
        CHECK(a > 0.0);
        CHECK(a <= 1.0);
        // resampling noise only: a different seed stays close
        CHECK(std::abs(a - sign_flip_p_value(d, 100, one)) < 0.03);
        // add-one smoothing keeps the p-value away from zero
        std::vector<double> strong(60, 0.1);
        CHECK(sign_flip_p_value(strong, 1, one) == 1.0 / 20001.0);
    }

    TEST_CASE("table rendering") {
        PairedComparison sig;
        sig.frac_greater = 0.7264;
        sig.mean_diff = 0.08;
        sig.rel_diff_pct = 29.46;
        sig.significant = true;
        sig.p_value = 0.001;
        PairedComparison plain = sig;
        plain.mean_diff = 0.012;
        plain.rel_diff_pct = 13.69;
        plain.significant = false;
        CHECK(format_percent(0.7264) == "72.64 %");
        CHECK(format_difference(sig) == "0.080†(29.46 %)");
        CHECK(format_difference(plain) == "0.012 (13.69 %)");

        const auto rows = summary_table({{"Bsumm", "BERT", sig}, {"", "", plain}});
        REQUIRE(rows.size() == 2);
        CHECK(rows[0].frac_greater == "72.64 %");
        CHECK(rows[1].generator.empty());
        CHECK(rows[1].discriminator.empty());
        const auto csv = table_to_csv(rows);
        CHECK(csv.find("Bsumm,BERT,72.64 %,0.080†(29.46 %)") != std::string::npos);
        const auto text = table_to_text(rows);
        CHECK(text.find("0.080†(29.46 %)") != std::string::npos);
    }
}
