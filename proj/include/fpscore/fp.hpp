#pragma once

#include "fpscore/scorer.hpp"
#include "fpscore/types.hpp"

#include <span>
#include <string>
#include <vector>

namespace fpscore {

// Mean and spread of a set of per-sample Fp values. stdev uses the n-1
// denominator; a single sample reports stdev 0 and sets single_sample.
struct FpSummary {
    std::int64_t count = 0;
    double mean = 0.0;
    double stdev = 0.0;
    double min = 0.0;
    double max = 0.0;
    bool single_sample = false;

    friend bool operator==(const FpSummary&, const FpSummary&) = default;
};

double token_fp(double p_actual, double p_max);

// Arithmetic mean of the token fp values.
double sample_fp(std::span<const TokenScore> token_scores);

SampleScore make_sample_score(std::string sample_id, ScoredText scored, ScorerInfo backend);

SampleScore score_sample(Scorer& scorer, const std::vector<std::string>& tokens, std::string sample_id);

struct SampleInput {
    std::string sample_id;
    std::vector<std::string> tokens;
};

// Batch version; results follow input order. Inputs shorter than
// min_tokens are dropped (0 keeps everything, including empty inputs, which
// are then rejected as empty samples).
std::vector<SampleScore> score_samples(Scorer& scorer, const std::vector<SampleInput>& inputs, std::size_t min_tokens = 0);

FpSummary summarize(std::span<const double> values);
// Summary over the per-sample fp_s values (samples are not pooled by token).
FpSummary corpus_mean_fp(std::span<const SampleScore> samples);

// "0.336 (0.280)"
std::string format_mean_std(const FpSummary& summary, int decimals = 3);

} // namespace fpscore
