#pragma once

#include "fpscore/scorer.hpp"
#include "fpscore/types.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

// JSON wire format of the remote scoring service.
//
//   POST /v1/score  {"mode":"pretokenized"|"raw","texts":[...],"include":[...]}
//     -> {"backend":{"name","vocab_size","fingerprint"},
//         "results":[[{"token","logp_actual","logp_max","rank","entropy_nats"},...],...]}
//   GET  /v1/info   -> the "backend" object
//   errors          -> {"error": "..."} with status 400 (malformed) or 503 (no model)
//
// Probabilities travel as natural-log values. Serialization is canonical:
// fixed key order, compact separators, shortest round-trip doubles, so
// serialize(parse(x)) == x for any message this module produced.
namespace fpscore::protocol {

inline constexpr std::string_view kScorePath = "/v1/score";
inline constexpr std::string_view kInfoPath = "/v1/info";

enum class Mode { pretokenized, raw };

enum class Field { p_actual, p_max, rank, entropy };

std::string_view to_string(Field f);

struct ScoreRequest {
    Mode mode = Mode::pretokenized;
    std::vector<std::vector<std::string>> pretokenized; // used when mode == pretokenized
    std::vector<std::string> raw;                       // used when mode == raw
    std::vector<Field> include{Field::p_actual, Field::p_max, Field::rank, Field::entropy};

    std::size_t size() const { return mode == Mode::raw ? raw.size() : pretokenized.size(); }
    bool includes(Field f) const;
    // Throws InvalidArgument("non-empty texts required") and friends.
    void validate() const;
};

struct WireToken {
    std::string token;
    double logp_actual = 0.0;
    double logp_max = 0.0;
    std::optional<std::int64_t> rank;
    std::optional<double> entropy_nats;

    friend bool operator==(const WireToken&, const WireToken&) = default;
};

struct ScoreResponse {
    ScorerInfo backend;
    std::vector<std::vector<WireToken>> results;

    friend bool operator==(const ScoreResponse&, const ScoreResponse&) = default;
};

std::string serialize(const ScoreRequest& request);
std::string serialize(const ScoreResponse& response);
std::string serialize(const ScorerInfo& info);
std::string error_body(std::string_view message);

// All parsers throw FormatError on schema violations.
ScoreRequest parse_request(std::string_view body);
// When `request` is given, also checks the result count and requested fields.
ScoreResponse parse_response(std::string_view body, const ScoreRequest* request = nullptr);
ScorerInfo parse_info(std::string_view body);
std::string parse_error(std::string_view body);

WireToken to_wire(std::string surface, const TokenScore& score, const ScoreRequest& request);
// Rebuilds a TokenScore. fp is computed in log space as exp(logp_actual - logp_max).
TokenScore from_wire(const WireToken& token);

} // namespace fpscore::protocol
