#pragma once

#include "fpscore/ngram.hpp"
#include "fpscore/remote.hpp"

#include <memory>
#include <string>
#include <thread>

namespace httplib {
class Server;
}

namespace fpscore {

// HTTP server for the scoring protocol, backed by an n-gram model. Raw-mode
// texts are split with tokenize(). Used as a loopback backend in tests and by
// the `serve` CLI subcommand.
class ScoreServer {
public:
    // A null model makes every endpoint answer 503.
    explicit ScoreServer(std::shared_ptr<const NgramModel> model);
    ~ScoreServer();

    ScoreServer(const ScoreServer&) = delete;
    ScoreServer& operator=(const ScoreServer&) = delete;

    HttpResult handle_score(const std::string& body) const;
    HttpResult handle_info() const;

    // Binds (port 0 picks a free port) and returns the bound port.
    int bind(const std::string& host = "127.0.0.1", int port = 0);
    void start();  // serve on a background thread
    void listen(); // serve on the calling thread until stop()
    void stop();

private:
    std::shared_ptr<const NgramModel> model_;
    std::unique_ptr<httplib::Server> http_;
    std::thread thread_;
};

} // namespace fpscore
