#pragma once

#include "fpscore/types.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace fpscore {

// Lowercases, splits on Unicode whitespace and peels leading/trailing
// punctuation into single-character tokens. A leading apostrophe stays
// attached to a short English clitic ('s 'll 're 've 'd 'm 't), so already
// tokenized text such as "dog 's" keeps its clitic token.
std::vector<std::string> tokenize(std::string_view text);

class Vocabulary {
public:
    static constexpr TokenId kUnk = 0;
    static constexpr TokenId kEos = 1;
    // Context-only padding symbol. Never part of the vocabulary, never predicted.
    static constexpr TokenId kBos = 0xffffffffu;

    static constexpr std::string_view kUnkSurface = "<unk>";
    static constexpr std::string_view kEosSurface = "</s>";

    Vocabulary();

    // Rebuilds a vocabulary from its ordered word list; the first two entries
    // must be the reserved UNK and EOS surfaces.
    static Vocabulary from_words(std::vector<std::string> words, std::int64_t min_count);

    TokenId lookup(std::string_view surface) const;
    bool contains(std::string_view surface) const;
    const std::string& surface(TokenId id) const;

    std::size_t size() const { return words_.size(); }
    std::int64_t min_count() const { return min_count_; }
    const std::vector<std::string>& words() const { return words_; }

    friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
        return a.words_ == b.words_ && a.min_count_ == b.min_count_;
    }

private:
    void add(std::string word);

    std::vector<std::string> words_;
    std::unordered_map<std::string, TokenId> index_;
    std::int64_t min_count_ = 1;
};

// Every surface seen at least min_count times, ordered by descending frequency
// then bytewise lexicographic order, after the reserved UNK and EOS entries.
Vocabulary build_vocab(const std::vector<std::vector<std::string>>& corpus, std::int64_t min_count);

std::vector<TokenId> encode(std::span<const std::string> tokens, const Vocabulary& vocab);

// Fraction of tokens that map to UNK; 0 for an empty input.
double unk_rate(std::span<const TokenId> ids);

// Reads a UTF-8 corpus file: one sample per line, blank lines skipped.
std::vector<std::string> read_corpus_lines(const std::string& path);

} // namespace fpscore
