#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fpscore {

using TokenId = std::uint32_t;

// A word occurrence: its surface form and its vocabulary index.
struct Token {
    std::string surface;
    TokenId id = 0;
};

// Scoring statistics for one position of a text under some backend.
//
// fp is the ratio p_actual / p_max, i.e. the probability of the observed
// token relative to the most probable token at that position. rank counts
// only strictly more probable tokens, so the argmax has rank 1 even under ties.
struct TokenScore {
    double p_actual = 0.0;
    double p_max = 0.0;
    std::int64_t rank = 0;
    double entropy_nats = 0.0;
    double fp = 0.0;

    friend bool operator==(const TokenScore&, const TokenScore&) = default;
};

// Identity of the discriminator backend. Fp values depend on it, so it is
// carried into every report and threshold file.
struct ScorerInfo {
    std::string backend_name;
    std::int64_t vocab_size = 0;
    std::string model_fingerprint;

    friend bool operator==(const ScorerInfo&, const ScorerInfo&) = default;
};

struct SampleScore {
    std::string sample_id;
    std::int64_t k = 0;
    std::vector<std::string> tokens; // backend-granularity surfaces, parallel to token_scores
    std::vector<TokenScore> token_scores;
    double fp_s = 0.0;
    ScorerInfo backend;

    friend bool operator==(const SampleScore&, const SampleScore&) = default;
};

enum class ClassLabel { h, m, u };

std::string_view to_string(ClassLabel label);

enum class ThresholdMode { single, dual };

std::string_view to_string(ThresholdMode mode);
ThresholdMode threshold_mode_from_string(std::string_view s);

// Moments and bookkeeping of the populations a ThresholdConfig was fitted on.
struct CalibrationMeta {
    std::int64_t n_natural = 0;
    std::int64_t n_synthetic = 0;
    double mean_natural = 0.0;
    double stdev_natural = 0.0;
    double mean_synthetic = 0.0;
    double stdev_synthetic = 0.0;
    std::int64_t calibration_errors = 0;
    double calibration_accuracy = 0.0;
    double c = 0.0;                // dual mode spread multiplier; 0 for single mode
    bool degenerate_overlap = false;
    std::string backend_fingerprint;

    friend bool operator==(const CalibrationMeta&, const CalibrationMeta&) = default;
};

struct ThresholdConfig {
    ThresholdMode mode = ThresholdMode::single;
    double fp_t = 0.5;
    double fp_l = 0.0;
    double fp_r = 0.0;
    CalibrationMeta calibration_meta;

    static ThresholdConfig single(double fp_t);
    static ThresholdConfig dual(double fp_l, double fp_r);

    // Throws InvalidArgument if the boundaries are outside (0,1) or misordered.
    void validate() const;

    friend bool operator==(const ThresholdConfig&, const ThresholdConfig&) = default;
};

struct CorpusResult {
    ThresholdMode mode = ThresholdMode::single;
    std::int64_t n = 0;
    std::int64_t n_h = 0;
    std::int64_t n_m = 0;
    std::int64_t n_u = 0;
    double h_score = 0.0;
    double m_score = 0.0;
    double mean_fp = 0.0;

    friend bool operator==(const CorpusResult&, const CorpusResult&) = default;
};

// Returns an empty list when every invariant of the sample and of each of its
// token scores holds; otherwise one message per violation.
std::vector<std::string> validate_sample_score(const SampleScore& score);

} // namespace fpscore
