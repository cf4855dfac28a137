#pragma once

#include "fpscore/ngram.hpp"
#include "fpscore/tokenizer.hpp"

#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace testutil {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::mt19937_64 rng(std::random_device{}());
        path_ = std::filesystem::temp_directory_path() / ("fpscore-test-" + std::to_string(rng()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

inline fpscore::NgramModel train_on_lines(const std::vector<std::string>& lines, fpscore::NgramParams params,
                                          std::int64_t min_count = 1) {
    std::vector<std::vector<std::string>> toks;
    for (const auto& l : lines) toks.push_back(fpscore::tokenize(l));
    auto vocab = fpscore::build_vocab(toks, min_count);
    std::vector<std::vector<fpscore::TokenId>> ids;
    for (const auto& t : toks) ids.push_back(fpscore::encode(t, vocab));
    return fpscore::NgramModel::train(ids, std::move(vocab), params);
}

inline std::shared_ptr<const fpscore::NgramModel> shared_model(const std::vector<std::string>& lines,
                                                               fpscore::NgramParams params) {
    return std::make_shared<const fpscore::NgramModel>(train_on_lines(lines, params));
}

inline const std::vector<std::string>& toy_lines() {
    static const std::vector<std::string> lines = {
        "the dog ran to the park .", "the cat sat on the mat .", "a dog sat on the mat .",
        "the cat ran to the dog .",  "a cat and a dog ran home .", "the dog ran home .",
    };
    return lines;
}

} // namespace testutil
