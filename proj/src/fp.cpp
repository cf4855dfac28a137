#include "fpscore/fp.hpp"

#include "fpscore/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace fpscore {

double token_fp(double p_actual, double p_max) {
    if (!(p_actual > 0.0 && p_actual <= p_max && p_max <= 1.0)) throw InvalidArgument("invalid probability pair");
    return p_actual / p_max;
}

double sample_fp(std::span<const TokenScore> token_scores) {
    if (token_scores.empty()) throw InvalidArgument("empty sample");
    double sum = 0.0;
    for (const auto& t : token_scores) sum += t.fp;
    return sum / static_cast<double>(token_scores.size());
}

SampleScore make_sample_score(std::string sample_id, ScoredText scored, ScorerInfo backend) {
    SampleScore s;
    s.sample_id = std::move(sample_id);
    s.fp_s = sample_fp(scored.scores);
    s.k = static_cast<std::int64_t>(scored.scores.size());
    s.tokens = std::move(scored.tokens);
    s.token_scores = std::move(scored.scores);
    s.backend = std::move(backend);
    return s;
}

SampleScore score_sample(Scorer& scorer, const std::vector<std::string>& tokens, std::string sample_id) {
    if (tokens.empty()) throw InvalidArgument("empty sample");
    return make_sample_score(std::move(sample_id), scorer.score(tokens), scorer.info());
}

std::vector<SampleScore> score_samples(Scorer& scorer, const std::vector<SampleInput>& inputs, std::size_t min_tokens) {
    std::vector<const SampleInput*> kept;
    std::vector<std::vector<std::string>> texts;
    for (const auto& in : inputs) {
        if (in.tokens.size() < min_tokens) continue;
        if (in.tokens.empty()) throw InvalidArgument("empty sample '" + in.sample_id + "'");
        kept.push_back(&in);
        texts.push_back(in.tokens);
    }
    std::vector<SampleScore> out;
    if (texts.empty()) return out;
    auto scored = scorer.score_batch(texts);
    const ScorerInfo info = scorer.info();
    out.reserve(scored.size());
    for (std::size_t i = 0; i < scored.size(); ++i) out.push_back(make_sample_score(kept[i]->sample_id, std::move(scored[i]), info));
    return out;
}

FpSummary summarize(std::span<const double> values) {
    if (values.empty()) throw InvalidArgument("empty sample set");
    FpSummary s;
    s.count = static_cast<std::int64_t>(values.size());
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    s.min = *lo;
    s.max = *hi;
    if (values.size() == 1) {
        s.single_sample = true;
        s.stdev = 0.0;
        return s;
    }
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stdev = std::sqrt(ss / static_cast<double>(values.size() - 1));
    // rounding can push the mean a hair outside [min, max]
    s.mean = std::clamp(s.mean, s.min, s.max);
    return s;
}

FpSummary corpus_mean_fp(std::span<const SampleScore> samples) {
    std::vector<double> v;
    v.reserve(samples.size());
    for (const auto& s : samples) v.push_back(s.fp_s);
    return summarize(v);
}

std::string format_mean_std(const FpSummary& summary, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f (%.*f)", decimals, summary.mean, decimals, summary.stdev);
    return buf;
}

} // namespace fpscore
