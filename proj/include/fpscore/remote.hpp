#pragma once

#include "fpscore/error.hpp"
#include "fpscore/protocol.hpp"
#include "fpscore/scorer.hpp"

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

namespace fpscore {

// Connection-level failure (refused, reset, timed out).
class TransportError : public RemoteError {
public:
    using RemoteError::RemoteError;
};

struct HttpResult {
    int status = 0;
    std::string body;
};

class Transport {
public:
    virtual ~Transport() = default;
    virtual HttpResult post(const std::string& path, const std::string& body) = 0;
    virtual HttpResult get(const std::string& path) = 0;
};

// HTTP/1.1 transport. Each call opens its own connection, so one instance can
// be shared by concurrent callers.
class HttpTransport final : public Transport {
public:
    HttpTransport(std::string base_url, std::chrono::seconds timeout);

    HttpResult post(const std::string& path, const std::string& body) override;
    HttpResult get(const std::string& path) override;

private:
    std::string base_url_;
    std::chrono::seconds timeout_;
};

// Serves recorded exchanges from a fixture directory:
//   info.json                        body returned for GET /v1/info
//   <name>.request.json / <name>.response.json
// A POST whose body is byte-identical to a recorded request gets the recorded
// response; anything else is a transport error.
class ReplayTransport final : public Transport {
public:
    explicit ReplayTransport(const std::filesystem::path& dir);

    HttpResult post(const std::string& path, const std::string& body) override;
    HttpResult get(const std::string& path) override;

    std::size_t size() const { return exchanges_.size(); }

private:
    std::map<std::string, std::string> exchanges_;
    std::optional<std::string> info_;
};

struct RemoteOptions {
    std::size_t batch_size = 32;
    unsigned max_in_flight = 8;
    std::chrono::seconds timeout{30};

    // Defaults, with the timeout taken from FPSCORE_REMOTE_TIMEOUT_SECS when set.
    static RemoteOptions from_env();
};

// Client for the remote scoring protocol. Requests are cut into batches of at
// most batch_size texts with at most max_in_flight batches outstanding;
// responses are reassembled in request order. A transport failure is retried
// once on a fresh connection before it is reported.
class RemoteScorer final : public Scorer {
public:
    explicit RemoteScorer(std::shared_ptr<Transport> transport, RemoteOptions options = {});
    static std::unique_ptr<RemoteScorer> connect(const std::string& url, RemoteOptions options = RemoteOptions::from_env());

    ScorerInfo info() override;
    std::vector<ScoredText> score_batch(const std::vector<std::vector<std::string>>& texts) override;
    // Raw mode: the server tokenizes, and the returned surfaces are its tokens.
    std::vector<ScoredText> score_raw_batch(const std::vector<std::string>& texts);

    protocol::ScoreResponse request(const protocol::ScoreRequest& request);

private:
    protocol::ScoreResponse call(const protocol::ScoreRequest& batch);
    std::vector<ScoredText> to_scored(protocol::ScoreResponse response);

    std::shared_ptr<Transport> transport_;
    RemoteOptions options_;
    std::mutex mu_;
    std::optional<ScorerInfo> info_;
};

} // namespace fpscore
