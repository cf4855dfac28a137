#include "fpscore/scorer.hpp"

#include "fpscore/error.hpp"
#include "fpscore/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace fpscore {

TokenScore score_position(std::span<const double> dist, TokenId actual) {
    if (actual >= dist.size()) throw InvalidArgument("token id out of distribution range");
    TokenScore s;
    s.p_actual = dist[actual];
    s.p_max = *std::max_element(dist.begin(), dist.end());
    std::int64_t greater = 0;
    double entropy = 0.0;
    for (double p : dist) {
        if (p > s.p_actual) ++greater;
        if (p > 0.0) entropy -= p * std::log(p);
    }
    s.rank = greater + 1;
    s.entropy_nats = std::max(0.0, entropy);
    if (!(s.p_actual > 0.0)) throw InvalidArgument("token has zero probability");
    s.fp = s.p_actual / s.p_max;
    return s;
}

ScoredText Scorer::score(const std::vector<std::string>& tokens) {
    auto out = score_batch({tokens});
    return std::move(out.front());
}

LocalScorer::LocalScorer(std::shared_ptr<const NgramModel> model, unsigned workers)
    : model_(std::move(model)), workers_(std::max(1u, workers)) {
    if (!model_) throw InvalidArgument("local scorer needs a model");
}

std::vector<TokenScore> LocalScorer::score_ids(std::span<const TokenId> ids) const { return score_ids(ids, 0); }

std::vector<TokenScore> LocalScorer::score_ids(std::span<const TokenId> ids, std::size_t start) const {
    std::vector<TokenScore> out;
    out.reserve(ids.size() > start ? ids.size() - start : 0);
    std::vector<double> dist;
    for (std::size_t i = start; i < ids.size(); ++i) {
        model_->next_distribution(ids.first(i), dist);
        out.push_back(score_position(dist, ids[i]));
    }
    return out;
}

std::vector<ScoredText> LocalScorer::score_batch(const std::vector<std::vector<std::string>>& texts) {
    std::vector<ScoredText> out(texts.size());
    parallel_for(texts.size(), workers_, [&](std::size_t i) {
        const auto ids = encode(texts[i], model_->vocab());
        out[i].tokens = texts[i];
        out[i].scores = score_ids(ids);
    });
    return out;
}

} // namespace fpscore
