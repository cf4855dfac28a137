#pragma once

#include "fpscore/fp.hpp"
#include "fpscore/ngram.hpp"
#include "fpscore/report.hpp"
#include "fpscore/stats.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace fpscore {

struct StudyConfig {
    std::filesystem::path corpus_path;
    double train_fraction = 0.9;
    int generator_small = 2;
    int generator_large = 4;
    int discriminator_small = 2;
    int discriminator_large = 5;
    std::size_t top_k = 5;
    std::size_t samples_per_arm = 300;
    std::size_t sample_length = 30;
    std::size_t prompt_length = 5;
    std::int64_t min_count = 2;
    double lambda = 0.75;
    double alpha = 1.0;
    bool suppress_eos = true;
    std::uint64_t seed = 20200501;

    void validate() const;
    static StudyConfig from_json(const std::string& text, const std::filesystem::path& base_dir = {});
    static StudyConfig load(const std::filesystem::path& path);
    std::string to_json() const;
};

struct StudyCell {
    std::string generator;
    std::string discriminator;
    int generator_order = 0;
    int discriminator_order = 0;
    ScorerInfo discriminator_info;
    FpSummary synthetic;
    FpSummary natural;
    PairedComparison comparison;
};

struct HypothesisVerdict {
    std::string name;
    bool rejected = false;
    std::string detail;
};

struct StudyResult {
    StudyConfig config;
    std::size_t train_lines = 0;
    std::size_t heldout_lines = 0;
    std::size_t vocab_size = 0;
    double heldout_unk_rate = 0.0;
    std::vector<StudyCell> cells; // generator-major: (G-small, D-small), (G-small, D-large), ...
    std::vector<HypothesisVerdict> verdicts;
    std::vector<std::string> trends; // informational size trends
    std::vector<std::vector<std::string>> natural_texts;
    std::vector<std::vector<std::vector<std::string>>> synthetic_texts; // [generator][sample]
};

// Trains small/large generators and discriminators on the training split,
// continues the prompt of every natural held-out window with each generator
// (top-k sampling), scores the continuations of both members of every pair
// with each discriminator and compares them.
StudyResult run_size_study(const StudyConfig& config, unsigned workers = 1);

// Writes fp_table.csv, comparison.csv, comparison.txt, study.json and the
// natural/synthetic sample texts into `dir`.
void emit_study(const StudyResult& result, const std::filesystem::path& dir);

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

} // namespace fpscore
