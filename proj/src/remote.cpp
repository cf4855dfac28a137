#include "fpscore/remote.hpp"

#include "fpscore/parallel.hpp"

#include <httplib.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace fpscore {

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot open '" + p.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

HttpResult to_result(const httplib::Result& res, const std::string& what) {
    if (!res) throw TransportError(what + ": " + httplib::to_string(res.error()));
    return HttpResult{res->status, res->body};
}

} // namespace

HttpTransport::HttpTransport(std::string base_url, std::chrono::seconds timeout)
    : base_url_(std::move(base_url)), timeout_(timeout) {
    while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
}

HttpResult HttpTransport::post(const std::string& path, const std::string& body) {
    httplib::Client cli(base_url_);
    cli.set_connection_timeout(timeout_);
    cli.set_read_timeout(timeout_);
    cli.set_write_timeout(timeout_);
    return to_result(cli.Post(path, body, "application/json"), "POST " + base_url_ + path);
}

HttpResult HttpTransport::get(const std::string& path) {
    httplib::Client cli(base_url_);
    cli.set_connection_timeout(timeout_);
    cli.set_read_timeout(timeout_);
    return to_result(cli.Get(path), "GET " + base_url_ + path);
}

ReplayTransport::ReplayTransport(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw IoError("fixture directory '" + dir.string() + "' not found");
    const std::string suffix = ".request.json";
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (name == "info.json") {
            info_ = slurp(entry.path());
            continue;
        }
        if (name.size() <= suffix.size() || name.compare(name.size() - suffix.size(), suffix.size(), suffix) != 0)
            continue;
        const auto stem = name.substr(0, name.size() - suffix.size());
        exchanges_[slurp(entry.path())] = slurp(dir / (stem + ".response.json"));
    }
}

HttpResult ReplayTransport::post(const std::string& path, const std::string& body) {
    if (path != protocol::kScorePath) return HttpResult{404, protocol::error_body("not found")};
    auto it = exchanges_.find(body);
    if (it == exchanges_.end()) throw TransportError("no recorded exchange for request");
    return HttpResult{200, it->second};
}

HttpResult ReplayTransport::get(const std::string& path) {
    if (path != protocol::kInfoPath) return HttpResult{404, protocol::error_body("not found")};
    if (!info_) throw TransportError("no recorded info exchange");
    return HttpResult{200, *info_};
}

RemoteOptions RemoteOptions::from_env() {
    RemoteOptions o;
    if (const char* env = std::getenv("FPSCORE_REMOTE_TIMEOUT_SECS"); env && *env) {
        char* end = nullptr;
        const long secs = std::strtol(env, &end, 10);
        if (*end != '\0' || secs <= 0) throw InvalidArgument("FPSCORE_REMOTE_TIMEOUT_SECS must be a positive integer");
        o.timeout = std::chrono::seconds(secs);
    }
    return o;
}

RemoteScorer::RemoteScorer(std::shared_ptr<Transport> transport, RemoteOptions options)
    : transport_(std::move(transport)), options_(options) {
    if (!transport_) throw InvalidArgument("remote scorer needs a transport");
    if (options_.batch_size == 0 || options_.max_in_flight == 0) throw InvalidArgument("batch size and in-flight cap must be >= 1");
}

std::unique_ptr<RemoteScorer> RemoteScorer::connect(const std::string& url, RemoteOptions options) {
    return std::make_unique<RemoteScorer>(std::make_shared<HttpTransport>(url, options.timeout), options);
}

ScorerInfo RemoteScorer::info() {
    {
        std::lock_guard lock(mu_);
        if (info_) return *info_;
    }
    HttpResult res;
    try {
        res = transport_->get(std::string(protocol::kInfoPath));
    } catch (const TransportError&) {
        res = transport_->get(std::string(protocol::kInfoPath));
    }
    if (res.status != 200)
        throw RemoteError("server error " + std::to_string(res.status) + ": " + protocol::parse_error(res.body));
    ScorerInfo info;
    try {
        info = protocol::parse_info(res.body);
    } catch (const FormatError& e) {
        throw RemoteError(e.what());
    }
    std::lock_guard lock(mu_);
    info_ = info;
    return info;
}

protocol::ScoreResponse RemoteScorer::call(const protocol::ScoreRequest& batch) {
    const std::string body = protocol::serialize(batch);
    const std::string path(protocol::kScorePath);
    HttpResult res;
    try {
        res = transport_->post(path, body);
    } catch (const TransportError&) {
        try {
            res = transport_->post(path, body);
        } catch (const TransportError& e) {
            throw RemoteError(std::string("remote unreachable: ") + e.what());
        }
    }
    if (res.status != 200)
        throw RemoteError("server error " + std::to_string(res.status) + ": " + protocol::parse_error(res.body));
    try {
        return protocol::parse_response(res.body, &batch);
    } catch (const FormatError& e) {
        throw RemoteError(e.what());
    }
}

protocol::ScoreResponse RemoteScorer::request(const protocol::ScoreRequest& request) {
    request.validate();
    const std::size_t n = request.size();
    const std::size_t batches = (n + options_.batch_size - 1) / options_.batch_size;

    std::vector<protocol::ScoreResponse> parts(batches);
    parallel_for(batches, options_.max_in_flight, [&](std::size_t b) {
        protocol::ScoreRequest sub;
        sub.mode = request.mode;
        sub.include = request.include;
        const std::size_t lo = b * options_.batch_size;
        const std::size_t hi = std::min(n, lo + options_.batch_size);
        for (std::size_t i = lo; i < hi; ++i) {
            if (request.mode == protocol::Mode::raw) {
                sub.raw.push_back(request.raw[i]);
            } else {
                sub.pretokenized.push_back(request.pretokenized[i]);
            }
        }
        parts[b] = call(sub);
    });

    protocol::ScoreResponse out;
    for (std::size_t b = 0; b < parts.size(); ++b) {
        if (b == 0) {
            out.backend = parts[b].backend;
        } else if (!(parts[b].backend == out.backend)) {
            throw RemoteError("backend identity changed between batches");
        }
        for (auto& r : parts[b].results) out.results.push_back(std::move(r));
    }
    std::lock_guard lock(mu_);
    if (!info_) info_ = out.backend;
    return out;
}

std::vector<ScoredText> RemoteScorer::to_scored(protocol::ScoreResponse response) {
    std::vector<ScoredText> out;
    out.reserve(response.results.size());
    for (auto& text : response.results) {
        ScoredText s;
        for (auto& t : text) {
            s.scores.push_back(protocol::from_wire(t));
            s.tokens.push_back(std::move(t.token));
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<ScoredText> RemoteScorer::score_batch(const std::vector<std::vector<std::string>>& texts) {
    protocol::ScoreRequest req;
    req.mode = protocol::Mode::pretokenized;
    req.pretokenized = texts;
    return to_scored(request(req));
}

std::vector<ScoredText> RemoteScorer::score_raw_batch(const std::vector<std::string>& texts) {
    protocol::ScoreRequest req;
    req.mode = protocol::Mode::raw;
    req.raw = texts;
    return to_scored(request(req));
}

} // namespace fpscore
