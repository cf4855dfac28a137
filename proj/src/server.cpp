#include "fpscore/server.hpp"

#include "fpscore/protocol.hpp"
#include "fpscore/tokenizer.hpp"

#include <httplib.h>

namespace fpscore {

ScoreServer::ScoreServer(std::shared_ptr<const NgramModel> model)
    : model_(std::move(model)), http_(std::make_unique<httplib::Server>()) {
    http_->Post(std::string(protocol::kScorePath), [this](const httplib::Request& req, httplib::Response& res) {
        const auto r = handle_score(req.body);
        res.status = r.status;
        res.set_content(r.body, "application/json");
    });
    http_->Get(std::string(protocol::kInfoPath), [this](const httplib::Request&, httplib::Response& res) {
        const auto r = handle_info();
        res.status = r.status;
        res.set_content(r.body, "application/json");
    });
}

ScoreServer::~ScoreServer() { stop(); }

HttpResult ScoreServer::handle_info() const {
    if (!model_) return {503, protocol::error_body("model not loaded")};
    return {200, protocol::serialize(model_->info())};
}

HttpResult ScoreServer::handle_score(const std::string& body) const {
    if (!model_) return {503, protocol::error_body("model not loaded")};
    protocol::ScoreRequest req;
    try {
        req = protocol::parse_request(body);
    } catch (const FormatError& e) {
        return {400, protocol::error_body(e.what())};
    }

    LocalScorer scorer(model_);
    protocol::ScoreResponse resp;
    resp.backend = model_->info();
    for (std::size_t i = 0; i < req.size(); ++i) {
        std::vector<std::string> toks = req.mode == protocol::Mode::raw ? tokenize(req.raw[i]) : req.pretokenized[i];
        if (toks.empty()) return {400, protocol::error_body("text " + std::to_string(i) + " has no tokens")};
        const auto ids = encode(toks, model_->vocab());
        const auto scores = scorer.score_ids(ids);
        std::vector<protocol::WireToken> recs;
        recs.reserve(scores.size());
        for (std::size_t j = 0; j < scores.size(); ++j) recs.push_back(protocol::to_wire(std::move(toks[j]), scores[j], req));
        resp.results.push_back(std::move(recs));
    }
    return {200, protocol::serialize(resp)};
}

int ScoreServer::bind(const std::string& host, int port) {
    if (port == 0) {
        const int bound = http_->bind_to_any_port(host);
        if (bound < 0) throw IoError("cannot bind " + host);
        return bound;
    }
    if (!http_->bind_to_port(host, port)) throw IoError("cannot bind " + host + ":" + std::to_string(port));
    return port;
}

void ScoreServer::start() {
    thread_ = std::thread([this] { http_->listen_after_bind(); });
    http_->wait_until_ready();
}

void ScoreServer::listen() { http_->listen_after_bind(); }

void ScoreServer::stop() {
    if (http_) http_->stop();
    if (thread_.joinable()) thread_.join();
}

} // namespace fpscore
