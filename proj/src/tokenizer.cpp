#include "fpscore/tokenizer.hpp"

#include "fpscore/error.hpp"

#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/locid.h>

#include <algorithm>
#include <array>
#include <fstream>
#include <map>

namespace fpscore {

namespace {

bool is_apostrophe(UChar32 c) { return c == U'\'' || c == 0x2019; }

bool is_clitic(const icu::UnicodeString& core) {
    static const std::array<const char16_t*, 7> clitics = {u"s", u"ll", u"re", u"ve", u"d", u"m", u"t"};
    return std::any_of(clitics.begin(), clitics.end(),
                       [&](const char16_t* c) { return core == icu::UnicodeString(c); });
}

std::string to_utf8(const icu::UnicodeString& s) {
    std::string out;
    s.toUTF8String(out);
    return out;
}

// Splits one whitespace-free word into tokens.
void split_word(const icu::UnicodeString& word, std::vector<std::string>& out) {
    std::vector<UChar32> cps;
    for (int32_t i = 0; i < word.length();) {
        UChar32 c = word.char32At(i);
        cps.push_back(c);
        i += U16_LENGTH(c);
    }
    std::size_t lead = 0;
    while (lead < cps.size() && u_ispunct(cps[lead])) ++lead;
    if (lead == cps.size()) {
        for (UChar32 c : cps) out.push_back(to_utf8(icu::UnicodeString(c)));
        return;
    }
    std::size_t trail = cps.size();
    while (trail > lead && u_ispunct(cps[trail - 1])) --trail;

    icu::UnicodeString core;
    for (std::size_t i = lead; i < trail; ++i) core.append(cps[i]);

    std::size_t split_lead = lead;
    if (lead > 0 && is_apostrophe(cps[lead - 1]) && is_clitic(core)) {
        split_lead = lead - 1;
        core.insert(0, cps[lead - 1]);
    }
    for (std::size_t i = 0; i < split_lead; ++i) out.push_back(to_utf8(icu::UnicodeString(cps[i])));
    out.push_back(to_utf8(core));
    for (std::size_t i = trail; i < cps.size(); ++i) out.push_back(to_utf8(icu::UnicodeString(cps[i])));
}

} // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    icu::UnicodeString s = icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
    s.toLower(icu::Locale::getRoot());

    icu::UnicodeString word;
    for (int32_t i = 0; i < s.length();) {
        UChar32 c = s.char32At(i);
        i += U16_LENGTH(c);
        if (u_isUWhiteSpace(c)) {
            if (!word.isEmpty()) split_word(word, out);
            word.remove();
        } else {
            word.append(c);
        }
    }
    if (!word.isEmpty()) split_word(word, out);
    return out;
}

Vocabulary::Vocabulary() {
    add(std::string(kUnkSurface));
    add(std::string(kEosSurface));
}

void Vocabulary::add(std::string word) {
    const auto id = static_cast<TokenId>(words_.size());
    index_.emplace(word, id);
    words_.push_back(std::move(word));
}

Vocabulary Vocabulary::from_words(std::vector<std::string> words, std::int64_t min_count) {
    if (words.size() < 2 || words[0] != kUnkSurface || words[1] != kEosSurface)
        throw FormatError("vocabulary must start with the reserved UNK and EOS entries");
    if (min_count < 1) throw InvalidArgument("min_count must be >= 1");
    Vocabulary v;
    v.min_count_ = min_count;
    for (std::size_t i = 2; i < words.size(); ++i) {
        if (words[i].empty()) throw FormatError("empty vocabulary entry");
        if (v.contains(words[i])) throw FormatError("duplicate vocabulary entry '" + words[i] + "'");
        v.add(std::move(words[i]));
    }
    return v;
}

TokenId Vocabulary::lookup(std::string_view surface) const {
    auto it = index_.find(std::string(surface));
    return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view surface) const {
    return index_.find(std::string(surface)) != index_.end();
}

const std::string& Vocabulary::surface(TokenId id) const {
    if (id >= words_.size()) throw InvalidArgument("token id out of range");
    return words_[id];
}

Vocabulary build_vocab(const std::vector<std::vector<std::string>>& corpus, std::int64_t min_count) {
    if (min_count < 1) throw InvalidArgument("min_count must be >= 1");
    std::map<std::string, std::int64_t> counts;
    for (const auto& sample : corpus)
        for (const auto& tok : sample) ++counts[tok];
    if (counts.empty()) throw InvalidArgument("empty corpus");

    std::vector<std::pair<std::string, std::int64_t>> kept;
    for (auto& [word, count] : counts) {
        if (count >= min_count && word != Vocabulary::kUnkSurface && word != Vocabulary::kEosSurface)
            kept.emplace_back(word, count);
    }
    std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });

    std::vector<std::string> words{std::string(Vocabulary::kUnkSurface), std::string(Vocabulary::kEosSurface)};
    for (auto& [word, count] : kept) words.push_back(word);
    return Vocabulary::from_words(std::move(words), min_count);
}

std::vector<TokenId> encode(std::span<const std::string> tokens, const Vocabulary& vocab) {
    std::vector<TokenId> ids;
    ids.reserve(tokens.size());
    for (const auto& t : tokens) ids.push_back(vocab.lookup(t));
    return ids;
}

double unk_rate(std::span<const TokenId> ids) {
    if (ids.empty()) return 0.0;
    auto n = std::count(ids.begin(), ids.end(), Vocabulary::kUnk);
    return static_cast<double>(n) / static_cast<double>(ids.size());
}

std::vector<std::string> read_corpus_lines(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t\v\f") == std::string::npos) continue;
        lines.push_back(line);
    }
    return lines;
}

} // namespace fpscore
