// Regenerates the offline protocol fixtures:
//   record_fixtures <out-dir>
// Trains a small 3-gram model on <out-dir>/tiny_corpus.txt, then records the
// loopback server's answers to a fixed set of requests.
#include "fpscore/protocol.hpp"
#include "fpscore/report.hpp"
#include "fpscore/server.hpp"
#include "fpscore/tokenizer.hpp"

#include <filesystem>
#include <iostream>

using namespace fpscore;
namespace fs = std::filesystem;

namespace {

std::shared_ptr<const NgramModel> tiny_model(const fs::path& corpus_path) {
    std::vector<std::vector<std::string>> corpus;
    for (const auto& line : read_corpus_lines(corpus_path.string())) corpus.push_back(tokenize(line));
    Vocabulary vocab = build_vocab(corpus, 1);
    std::vector<std::vector<TokenId>> ids;
    for (const auto& t : corpus) ids.push_back(encode(t, vocab));
    return std::make_shared<const NgramModel>(NgramModel::train(ids, std::move(vocab), NgramParams{3, 0.75, 1.0}));
}

void record(const ScoreServer& server, const fs::path& dir, const std::string& name, const protocol::ScoreRequest& req) {
    const std::string body = protocol::serialize(req);
    const HttpResult res = server.handle_score(body);
    if (res.status != 200) throw std::runtime_error(name + ": server answered " + std::to_string(res.status));
    write_text_file(dir / (name + ".request.json"), body);
    write_text_file(dir / (name + ".response.json"), res.body);
}

} // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: record_fixtures <out-dir>\n";
        return 2;
    }
    const fs::path dir = argv[1];
    try {
        ScoreServer server(tiny_model(dir / "tiny_corpus.txt"));
        write_text_file(dir / "info.json", server.handle_info().body);

        protocol::ScoreRequest basic;
        basic.pretokenized = {{"the", "dog", "ran", "to", "the", "park", "."}, {"a", "cat", "sat", "on", "the", "mat", "."}};
        record(server, dir, "basic", basic);

        protocol::ScoreRequest oov;
        oov.pretokenized = {{"the", "zebra", "ran", "home"}, {"xylophone"}};
        record(server, dir, "oov", oov);

        protocol::ScoreRequest partial;
        partial.pretokenized = {{"the", "cat", "ran", "."}};
        partial.include = {protocol::Field::p_actual, protocol::Field::p_max};
        record(server, dir, "partial_fields", partial);

        protocol::ScoreRequest raw;
        raw.mode = protocol::Mode::raw;
        raw.raw = {"The dog sat on the mat.", "A cat ran to the park!"};
        record(server, dir, "raw", raw);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
