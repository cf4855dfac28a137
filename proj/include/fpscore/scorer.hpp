#pragma once

#include "fpscore/ngram.hpp"
#include "fpscore/types.hpp"

#include <memory>
#include <span>
#include <string>
#include <vector>

namespace fpscore {

// Per-position scores of one text together with the token surfaces they
// refer to (the backend's own granularity).
struct ScoredText {
    std::vector<std::string> tokens;
    std::vector<TokenScore> scores;
};

// Statistics of `actual` under a next-token distribution:
//   p_actual = dist[actual], p_max = max(dist),
//   rank = 1 + #{w : dist[w] > p_actual}, entropy = -sum p ln p (nats),
//   fp = p_actual / p_max.
TokenScore score_position(std::span<const double> dist, TokenId actual);

// The discriminator backend: maps token sequences to per-position statistics.
class Scorer {
public:
    virtual ~Scorer() = default;

    virtual ScorerInfo info() = 0;
    virtual std::vector<ScoredText> score_batch(const std::vector<std::vector<std::string>>& texts) = 0;

    ScoredText score(const std::vector<std::string>& tokens);
};

// In-process scorer backed by an n-gram model. Out-of-vocabulary surfaces are
// scored as UNK. Scoring is a pure function of (model, tokens).
class LocalScorer final : public Scorer {
public:
    explicit LocalScorer(std::shared_ptr<const NgramModel> model, unsigned workers = 1);

    ScorerInfo info() override { return model_->info(); }
    std::vector<ScoredText> score_batch(const std::vector<std::vector<std::string>>& texts) override;

    std::vector<TokenScore> score_ids(std::span<const TokenId> ids) const;
    // Scores ids[start..] while conditioning on the full prefix.
    std::vector<TokenScore> score_ids(std::span<const TokenId> ids, std::size_t start) const;

    const NgramModel& model() const { return *model_; }

private:
    std::shared_ptr<const NgramModel> model_;
    unsigned workers_;
};

} // namespace fpscore
