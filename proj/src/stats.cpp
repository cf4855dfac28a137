#include "fpscore/stats.hpp"

#include "fpscore/error.hpp"
#include "fpscore/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

namespace fpscore {

namespace {

constexpr std::size_t kBlock = 1000;
constexpr std::string_view kDagger = "†";

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

double signed_sum(std::span<const double> d, std::uint64_t mask) {
    double s = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) s += (mask >> i & 1u) ? -d[i] : d[i];
    return s;
}

std::size_t display_width(const std::string& s) {
    std::size_t w = 0;
    for (unsigned char c : s) w += (c & 0xc0) != 0x80;
    return w;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

} // namespace

double sign_flip_p_value(std::span<const double> d, std::uint64_t seed, const PermutationOptions& options,
                         PermutationMeta* meta) {
    const std::size_t n = d.size();
    double scale = 0.0;
    for (double x : d) scale += std::abs(x);
    const double observed = std::abs(signed_sum(d, 0));
    // sums that tie the observed one up to rounding count as reaching it
    const double cutoff = observed - 1e-12 * scale;

    if (n <= options.exact_max_n) {
        if (n >= 63) throw InvalidArgument("exact enumeration limited to n < 63");
        const std::uint64_t total = std::uint64_t{1} << n;
        std::uint64_t hits = 0;
        for (std::uint64_t mask = 0; mask < total; ++mask) hits += std::abs(signed_sum(d, mask)) >= cutoff;
        if (meta) {
            meta->exact = true;
            meta->resamples = total;
            meta->seed = seed;
        }
        return static_cast<double>(hits) / static_cast<double>(total);
    }

    if (options.resamples == 0) throw InvalidArgument("Monte Carlo mode needs resamples >= 1");
    const std::size_t blocks = (options.resamples + kBlock - 1) / kBlock;
    std::vector<std::uint64_t> hits(blocks, 0);
    parallel_for(blocks, options.workers, [&](std::size_t b) {
        std::mt19937_64 rng(splitmix64(seed ^ splitmix64(b + 1)));
        const std::size_t count = std::min(kBlock, options.resamples - b * kBlock);
        for (std::size_t r = 0; r < count; ++r) {
            double s = 0.0;
            std::uint64_t bits = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (i % 64 == 0) bits = rng();
                s += (bits & 1u) ? -d[i] : d[i];
                bits >>= 1;
            }
            hits[b] += std::abs(s) >= cutoff;
        }
    });
    std::uint64_t total_hits = 0;
    for (auto h : hits) total_hits += h;
    if (meta) {
        meta->exact = false;
        meta->resamples = options.resamples;
        meta->seed = seed;
    }
    return static_cast<double>(total_hits + 1) / static_cast<double>(options.resamples + 1);
}

PairedComparison paired_compare(std::span<const double> gen, std::span<const double> gold, std::uint64_t seed,
                                PermutationOptions options) {
    if (gen.size() != gold.size()) throw InvalidArgument("length mismatch between generated and gold values");
    if (gen.size() < 2) throw InvalidArgument("paired comparison needs at least 2 pairs");

    PairedComparison c;
    c.n_pairs = static_cast<std::int64_t>(gen.size());
    std::vector<double> diffs(gen.size());
    double sum_gen = 0.0, sum_gold = 0.0, sum_diff = 0.0;
    for (std::size_t i = 0; i < gen.size(); ++i) {
        diffs[i] = gen[i] - gold[i];
        sum_gen += gen[i];
        sum_gold += gold[i];
        sum_diff += diffs[i];
        if (gen[i] > gold[i]) ++c.n_greater;
        if (gen[i] == gold[i]) ++c.test_meta.ties;
    }
    const auto n = static_cast<double>(gen.size());
    c.frac_greater = static_cast<double>(c.n_greater) / n;
    c.mean_gen = sum_gen / n;
    c.mean_gold = sum_gold / n;
    c.mean_diff = sum_diff / n;
    c.rel_diff_pct = c.mean_gold != 0.0 ? 100.0 * c.mean_diff / c.mean_gold : 0.0;

    const std::int64_t ties = c.test_meta.ties;
    c.p_value = std::clamp(sign_flip_p_value(diffs, seed, options, &c.test_meta), 0.0, 1.0);
    c.test_meta.ties = ties;
    c.significant = c.p_value < kSignificanceLevel;
    return c;
}

std::string format_percent(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f %%", 100.0 * fraction);
    return buf;
}

std::string format_difference(const PairedComparison& c) {
    char diff[32];
    std::snprintf(diff, sizeof diff, "%.3f", c.mean_diff);
    char rel[32];
    std::snprintf(rel, sizeof rel, "(%.2f %%)", c.rel_diff_pct);
    std::string out = diff;
    out += c.significant ? std::string(kDagger) : std::string(" ");
    out += rel;
    return out;
}

std::vector<TableRow> summary_table(const std::vector<Trial>& trials) {
    std::vector<TableRow> rows;
    rows.reserve(trials.size());
    for (const auto& t : trials)
        rows.push_back({t.generator, t.discriminator, format_percent(t.comparison.frac_greater),
                        format_difference(t.comparison), t.comparison.p_value});
    return rows;
}

std::string table_to_csv(const std::vector<TableRow>& rows) {
    std::ostringstream os;
    os << "generator,discriminator,fp_gen_gt_fp_gold,fp_gen_minus_fp_gold,p_value\n";
    for (const auto& r : rows) {
        char p[32];
        std::snprintf(p, sizeof p, "%.6g", r.p_value);
        os << csv_field(r.generator) << ',' << csv_field(r.discriminator) << ',' << csv_field(r.frac_greater) << ','
           << csv_field(r.difference) << ',' << p << '\n';
    }
    return os.str();
}

std::string table_to_text(const std::vector<TableRow>& rows) {
    std::vector<std::vector<std::string>> cells{{"Generator", "Discriminator", "Fp_gen > Fp_gold", "Fp_gen - Fp_gold", "p"}};
    for (const auto& r : rows) {
        char p[32];
        std::snprintf(p, sizeof p, "%.4g", r.p_value);
        cells.push_back({r.generator, r.discriminator, r.frac_greater, r.difference, p});
    }
    std::vector<std::size_t> width(cells.front().size(), 0);
    for (const auto& row : cells)
        for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], display_width(row[i]));

    std::ostringstream os;
    for (std::size_t r = 0; r < cells.size(); ++r) {
        for (std::size_t i = 0; i < cells[r].size(); ++i) {
            os << cells[r][i];
            if (i + 1 < cells[r].size()) os << std::string(width[i] - display_width(cells[r][i]) + 2, ' ');
        }
        os << '\n';
        if (r == 0) {
            std::size_t total = 0;
            for (auto w : width) total += w + 2;
            os << std::string(total - 2, '-') << '\n';
        }
    }
    return os.str();
}

} // namespace fpscore
