#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace fpscore {

struct PermutationOptions {
    std::size_t exact_max_n = 20;   // enumerate all 2^n sign flips up to this size
    std::size_t resamples = 20000;  // Monte Carlo sign flips beyond it
    unsigned workers = 1;
};

struct PermutationMeta {
    bool exact = true;
    std::uint64_t seed = 0;
    std::uint64_t resamples = 0; // 2^n in exact mode
    std::int64_t ties = 0;       // pairs with gen == gold
};

// Paired comparison of generated vs. gold Fp values (pairs matched by index).
struct PairedComparison {
    std::int64_t n_pairs = 0;
    std::int64_t n_greater = 0;
    double frac_greater = 0.0; // strict gen > gold
    double mean_gen = 0.0;
    double mean_gold = 0.0;
    double mean_diff = 0.0;    // mean(gen - gold)
    double rel_diff_pct = 0.0; // 100 * mean_diff / mean(gold)
    double p_value = 1.0;      // two-sided paired sign-flip permutation test
    bool significant = false;  // p_value < 0.05
    PermutationMeta test_meta;
};

inline constexpr double kSignificanceLevel = 0.05;

// Two-sided paired sign-flip permutation test on d_i = gen_i - gold_i:
// p = share of sign assignments whose |mean| reaches the observed |mean|.
// Exact for n <= exact_max_n, otherwise `resamples` seeded random flips with
// add-one smoothing. Monte Carlo draws are generated in fixed blocks with
// per-block derived seeds, so the result does not depend on `workers`.
PairedComparison paired_compare(std::span<const double> gen_fps, std::span<const double> gold_fps, std::uint64_t seed,
                                PermutationOptions options = {});

double sign_flip_p_value(std::span<const double> diffs, std::uint64_t seed, const PermutationOptions& options,
                         PermutationMeta* meta = nullptr);

struct Trial {
    std::string generator;
    std::string discriminator;
    PairedComparison comparison;
};

struct TableRow {
    std::string generator;
    std::string discriminator;
    std::string frac_greater; // "72.64 %"
    std::string difference;   // "0.080†(29.46 %)" or "0.012 (13.69 %)"
    double p_value = 1.0;
};

std::string format_percent(double fraction); // 0.7264 -> "72.64 %"
std::string format_difference(const PairedComparison& c);

std::vector<TableRow> summary_table(const std::vector<Trial>& trials);
std::string table_to_csv(const std::vector<TableRow>& rows);
std::string table_to_text(const std::vector<TableRow>& rows);

} // namespace fpscore
