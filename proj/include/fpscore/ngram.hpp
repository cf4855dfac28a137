#pragma once

#include "fpscore/tokenizer.hpp"
#include "fpscore/types.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace fpscore {

struct NgramParams {
    int order = 3;
    double lambda = 0.75;
    double alpha = 1.0;

    void validate() const;
};

struct GenerateOptions {
    // Drop EOS from the candidate list so the output always reaches max_len.
    bool suppress_eos = false;
};

// Interpolated maximum-likelihood n-gram model over a closed vocabulary.
//
//   p_1(w)       = (c(w) + alpha) / (T + alpha * |V|)
//   p_o(w | ctx) = lambda * c(ctx, w) / c(ctx) + (1 - lambda) * p_{o-1}(w | ctx')   if c(ctx) > 0
//                = p_{o-1}(w | ctx')                                                 otherwise
//
// where ctx' drops the oldest context symbol. Every training sample is padded
// with order-1 BOS symbols and terminated by EOS. The distribution is strictly
// positive and normalized for every context. A trained model is immutable.
class NgramModel {
public:
    static constexpr int kMaxOrder = 5;
    using ContextKey = std::array<TokenId, kMaxOrder - 1>;

    static NgramModel train(const std::vector<std::vector<TokenId>>& corpus, Vocabulary vocab, NgramParams params);

    static NgramModel load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

    // Probability vector over the vocabulary. Short contexts are left-padded
    // with BOS; only the last order-1 symbols of longer ones are used.
    std::vector<double> next_distribution(std::span<const TokenId> context) const;
    void next_distribution(std::span<const TokenId> context, std::vector<double>& out) const;

    // Count of the n-gram (context..., w); context symbols may be kBos.
    std::uint64_t count(std::span<const TokenId> ngram) const;
    // Number of times the context was followed by a predicted token.
    std::uint64_t context_count(std::span<const TokenId> context) const;

    std::uint64_t total_tokens() const { return total_; }
    const Vocabulary& vocab() const { return vocab_; }
    const NgramParams& params() const { return params_; }
    int order() const { return params_.order; }
    const std::string& fingerprint() const { return fingerprint_; }
    ScorerInfo info() const;

private:
    struct Successors {
        std::uint64_t total = 0;
        std::vector<std::pair<TokenId, std::uint64_t>> next; // sorted by id
    };
    struct KeyHash {
        std::size_t operator()(const ContextKey& k) const noexcept;
    };
    using Table = std::unordered_map<ContextKey, Successors, KeyHash>;

    NgramModel() = default;
    void finalize();
    std::string canonical_body() const;
    const Successors* find(int order, std::span<const TokenId> context) const;

    Vocabulary vocab_;
    NgramParams params_;
    std::uint64_t total_ = 0;
    std::vector<std::uint64_t> unigram_;
    std::vector<double> unigram_prob_;
    std::vector<Table> tables_; // tables_[o - 2] holds order-o contexts
    std::string fingerprint_;
};

// Top-k sampling. At each step keeps the k most probable tokens (ties go to
// the lower id), renormalizes and draws with a generator seeded by `seed`.
// Stops after EOS (not emitted) or max_len tokens. Returns only the
// continuation, not the prompt.
std::vector<TokenId> generate_topk(const NgramModel& model, std::uint64_t seed, std::size_t k, std::size_t max_len,
                                   std::span<const TokenId> prompt, GenerateOptions options = {});

// Indices of the k most probable entries, by descending probability then id.
std::vector<TokenId> top_k_indices(std::span<const double> dist, std::size_t k);

} // namespace fpscore
