#include "fpscore/protocol.hpp"

#include "fpscore/error.hpp"

#include <nlohmann/json.hpp>

#include <cmath>

namespace fpscore::protocol {

using ojson = nlohmann::ordered_json;

namespace {

// Log-probabilities of a proper distribution may exceed 0 by rounding only.
constexpr double kLogSlack = 1e-9;

[[noreturn]] void malformed(const std::string& what) { throw FormatError("malformed message: " + what); }

ojson parse_json(std::string_view body) {
    try {
        return ojson::parse(body);
    } catch (const nlohmann::json::exception& e) {
        malformed(std::string("invalid JSON (") + e.what() + ")");
    }
}

const ojson& member(const ojson& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) malformed(std::string("missing '") + key + "'");
    return *it;
}

double finite_number(const ojson& v, const char* key) {
    if (!v.is_number()) malformed(std::string("'") + key + "' must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) malformed(std::string("'") + key + "' must be finite");
    return d;
}

Field field_from_string(const std::string& s) {
    if (s == "p_actual") return Field::p_actual;
    if (s == "p_max") return Field::p_max;
    if (s == "rank") return Field::rank;
    if (s == "entropy") return Field::entropy;
    malformed("unknown include field '" + s + "'");
}

ojson info_json(const ScorerInfo& info) {
    ojson j = ojson::object();
    j["name"] = info.backend_name;
    j["vocab_size"] = info.vocab_size;
    j["fingerprint"] = info.model_fingerprint;
    return j;
}

ScorerInfo info_from_json(const ojson& j) {
    if (!j.is_object()) malformed("backend must be an object");
    const auto& name = member(j, "name");
    const auto& vocab = member(j, "vocab_size");
    const auto& fp = member(j, "fingerprint");
    if (!name.is_string() || !fp.is_string()) malformed("backend name/fingerprint must be strings");
    if (!vocab.is_number_integer() || vocab.get<std::int64_t>() < 1) malformed("backend vocab_size must be a positive integer");
    return ScorerInfo{name.get<std::string>(), vocab.get<std::int64_t>(), fp.get<std::string>()};
}

} // namespace

std::string_view to_string(Field f) {
    switch (f) {
    case Field::p_actual: return "p_actual";
    case Field::p_max: return "p_max";
    case Field::rank: return "rank";
    case Field::entropy: return "entropy";
    }
    return "?";
}

bool ScoreRequest::includes(Field f) const {
    for (Field x : include)
        if (x == f) return true;
    return false;
}

void ScoreRequest::validate() const {
    if (size() == 0) throw InvalidArgument("non-empty texts required");
    if (mode == Mode::pretokenized) {
        for (const auto& t : pretokenized)
            if (t.empty()) throw InvalidArgument("pretokenized texts must be non-empty");
    }
}

std::string serialize(const ScoreRequest& request) {
    ojson j = ojson::object();
    j["mode"] = request.mode == Mode::raw ? "raw" : "pretokenized";
    if (request.mode == Mode::raw) {
        j["texts"] = request.raw;
    } else {
        j["texts"] = request.pretokenized;
    }
    ojson inc = ojson::array();
    for (Field f : request.include) inc.push_back(std::string(to_string(f)));
    j["include"] = std::move(inc);
    return j.dump();
}

ScoreRequest parse_request(std::string_view body) {
    const ojson j = parse_json(body);
    if (!j.is_object()) malformed("request must be an object");
    ScoreRequest r;
    const auto& mode = member(j, "mode");
    if (mode == "raw") {
        r.mode = Mode::raw;
    } else if (mode == "pretokenized") {
        r.mode = Mode::pretokenized;
    } else {
        malformed("mode must be 'pretokenized' or 'raw'");
    }
    const auto& texts = member(j, "texts");
    if (!texts.is_array()) malformed("texts must be an array");
    for (const auto& t : texts) {
        if (r.mode == Mode::raw) {
            if (!t.is_string()) malformed("raw texts must be strings");
            r.raw.push_back(t.get<std::string>());
        } else {
            if (!t.is_array()) malformed("pretokenized texts must be arrays of strings");
            std::vector<std::string> toks;
            for (const auto& s : t) {
                if (!s.is_string()) malformed("pretokenized texts must be arrays of strings");
                toks.push_back(s.get<std::string>());
            }
            r.pretokenized.push_back(std::move(toks));
        }
    }
    if (j.contains("include")) {
        const auto& inc = j["include"];
        if (!inc.is_array()) malformed("include must be an array");
        r.include.clear();
        for (const auto& f : inc) {
            if (!f.is_string()) malformed("include entries must be strings");
            r.include.push_back(field_from_string(f.get<std::string>()));
        }
    }
    try {
        r.validate();
    } catch (const InvalidArgument& e) {
        malformed(e.what());
    }
    return r;
}

std::string serialize(const ScoreResponse& response) {
    ojson j = ojson::object();
    j["backend"] = info_json(response.backend);
    ojson results = ojson::array();
    for (const auto& text : response.results) {
        ojson recs = ojson::array();
        for (const auto& t : text) {
            ojson rec = ojson::object();
            rec["token"] = t.token;
            rec["logp_actual"] = t.logp_actual;
            rec["logp_max"] = t.logp_max;
            if (t.rank) rec["rank"] = *t.rank;
            if (t.entropy_nats) rec["entropy_nats"] = *t.entropy_nats;
            recs.push_back(std::move(rec));
        }
        results.push_back(std::move(recs));
    }
    j["results"] = std::move(results);
    return j.dump();
}

ScoreResponse parse_response(std::string_view body, const ScoreRequest* request) {
    const ojson j = parse_json(body);
    if (!j.is_object()) malformed("response must be an object");
    ScoreResponse r;
    r.backend = info_from_json(member(j, "backend"));
    const auto& results = member(j, "results");
    if (!results.is_array()) malformed("results must be an array");
    for (const auto& text : results) {
        if (!text.is_array()) malformed("each result must be an array of token records");
        std::vector<WireToken> recs;
        for (const auto& rec : text) {
            if (!rec.is_object()) malformed("token record must be an object");
            WireToken t;
            const auto& tok = member(rec, "token");
            if (!tok.is_string()) malformed("'token' must be a string");
            t.token = tok.get<std::string>();
            t.logp_actual = finite_number(member(rec, "logp_actual"), "logp_actual");
            t.logp_max = finite_number(member(rec, "logp_max"), "logp_max");
            if (t.logp_max > kLogSlack || t.logp_actual > kLogSlack) malformed("log-probabilities must be <= 0");
            if (t.logp_actual > t.logp_max) malformed("logp_actual > logp_max");
            if (auto it = rec.find("rank"); it != rec.end()) {
                if (!it->is_number_integer() || it->get<std::int64_t>() < 1) malformed("'rank' must be an integer >= 1");
                t.rank = it->get<std::int64_t>();
            }
            if (auto it = rec.find("entropy_nats"); it != rec.end()) {
                const double e = finite_number(*it, "entropy_nats");
                if (e < 0.0) malformed("'entropy_nats' must be >= 0");
                t.entropy_nats = e;
            }
            recs.push_back(std::move(t));
        }
        r.results.push_back(std::move(recs));
    }

    if (request) {
        if (r.results.size() != request->size()) malformed("result count does not match request");
        for (std::size_t i = 0; i < r.results.size(); ++i) {
            if (request->mode == Mode::pretokenized && r.results[i].size() != request->pretokenized[i].size())
                malformed("token count does not match request for text " + std::to_string(i));
            for (const auto& t : r.results[i]) {
                if (request->includes(Field::rank) && !t.rank) malformed("missing requested 'rank'");
                if (request->includes(Field::entropy) && !t.entropy_nats) malformed("missing requested 'entropy_nats'");
            }
        }
    }
    return r;
}

std::string serialize(const ScorerInfo& info) { return info_json(info).dump(); }

ScorerInfo parse_info(std::string_view body) { return info_from_json(parse_json(body)); }

std::string error_body(std::string_view message) {
    ojson j = ojson::object();
    j["error"] = std::string(message);
    return j.dump();
}

std::string parse_error(std::string_view body) {
    try {
        const ojson j = ojson::parse(body);
        if (j.is_object() && j.contains("error") && j["error"].is_string()) return j["error"].get<std::string>();
    } catch (const nlohmann::json::exception&) {
    }
    return std::string(body.substr(0, 200));
}

WireToken to_wire(std::string surface, const TokenScore& score, const ScoreRequest& request) {
    WireToken t;
    t.token = std::move(surface);
    t.logp_actual = std::log(score.p_actual);
    t.logp_max = std::log(score.p_max);
    if (request.includes(Field::rank)) t.rank = score.rank;
    if (request.includes(Field::entropy)) t.entropy_nats = score.entropy_nats;
    return t;
}

TokenScore from_wire(const WireToken& token) {
    TokenScore s;
    const double la = std::min(token.logp_actual, 0.0);
    const double lm = std::min(token.logp_max, 0.0);
    s.p_actual = std::exp(la);
    s.p_max = std::exp(lm);
    s.fp = la == lm ? 1.0 : std::exp(la - lm);
    if (la == lm) s.p_actual = s.p_max;
    s.rank = token.rank.value_or(0);
    s.entropy_nats = token.entropy_nats.value_or(0.0);
    return s;
}

} // namespace fpscore::protocol
