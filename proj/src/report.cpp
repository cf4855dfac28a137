#include "fpscore/report.hpp"

#include "fpscore/error.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace fpscore {

namespace {

std::string real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

std::string quote(const std::string& s) { return nlohmann::json(s).dump(); }

std::string html_escape(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        case '\'': out += "&#39;"; break;
        default: out += c;
        }
    }
    return out;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

} // namespace

SampleRecord to_record(const SampleScore& sample) {
    SampleRecord r;
    r.sample_id = sample.sample_id;
    r.k = sample.k;
    r.fp_s = sample.fp_s;
    r.backend_name = sample.backend.backend_name;
    r.backend_fingerprint = sample.backend.model_fingerprint;
    r.tokens.reserve(sample.token_scores.size());
    for (std::size_t i = 0; i < sample.token_scores.size(); ++i) {
        const auto& t = sample.token_scores[i];
        r.tokens.push_back({i < sample.tokens.size() ? sample.tokens[i] : std::string(), t.fp, t.rank, t.entropy_nats});
    }
    return r;
}

std::string to_jsonl_line(const SampleRecord& r) {
    std::string out = "{\"sample_id\":" + quote(r.sample_id) + ",\"k\":" + std::to_string(r.k) + ",\"fp_s\":" + real(r.fp_s) +
                      ",\"backend\":{\"name\":" + quote(r.backend_name) + ",\"fingerprint\":" + quote(r.backend_fingerprint) +
                      "},\"tokens\":[";
    for (std::size_t i = 0; i < r.tokens.size(); ++i) {
        const auto& t = r.tokens[i];
        if (i) out += ',';
        out += "{\"surface\":" + quote(t.surface) + ",\"fp\":" + real(t.fp) + ",\"rank\":" + std::to_string(t.rank) +
               ",\"entropy_nats\":" + real(t.entropy_nats) + "}";
    }
    out += "]}";
    return out;
}

SampleRecord parse_jsonl_line(const std::string& line) {
    try {
        const auto j = nlohmann::json::parse(line);
        SampleRecord r;
        r.sample_id = j.at("sample_id").get<std::string>();
        r.k = j.at("k").get<std::int64_t>();
        r.fp_s = j.at("fp_s").get<double>();
        r.backend_name = j.at("backend").at("name").get<std::string>();
        r.backend_fingerprint = j.at("backend").at("fingerprint").get<std::string>();
        for (const auto& t : j.at("tokens"))
            r.tokens.push_back({t.at("surface").get<std::string>(), t.at("fp").get<double>(), t.at("rank").get<std::int64_t>(),
                                t.at("entropy_nats").get<double>()});
        if (static_cast<std::size_t>(r.k) != r.tokens.size()) throw FormatError("bad sample record: k != token count");
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad sample record: ") + e.what());
    }
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << content;
    out.flush();
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void emit_jsonl(const std::vector<SampleScore>& samples, const std::filesystem::path& path) {
    std::string out;
    for (const auto& s : samples) {
        out += to_jsonl_line(to_record(s));
        out += '\n';
    }
    write_text_file(path, out);
}

std::vector<SampleRecord> read_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::vector<SampleRecord> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            out.push_back(parse_jsonl_line(line));
        } catch (const FormatError& e) {
            throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

std::string fp_table_csv(const std::vector<FpCell>& cells) {
    if (cells.empty()) throw InvalidArgument("empty Fp table");
    std::set<std::string> generators;
    std::map<std::string, std::string> discriminators; // label -> fingerprint
    std::map<std::pair<std::string, std::string>, const FpCell*> grid;
    for (const auto& c : cells) {
        generators.insert(c.generator);
        discriminators.emplace(c.discriminator, c.backend_fingerprint);
        grid[{c.generator, c.discriminator}] = &c;
    }

    std::ostringstream os;
    os << "# backends:";
    for (const auto& [d, fp] : discriminators) os << ' ' << d << '=' << fp;
    os << '\n' << "generator";
    for (const auto& [d, fp] : discriminators) os << ',' << csv_field(d + " Fp_gen") << ',' << csv_field(d + " Fp_gold");
    os << '\n';
    for (const auto& g : generators) {
        os << csv_field(g);
        for (const auto& [d, fp] : discriminators) {
            auto it = grid.find({g, d});
            if (it == grid.end()) {
                os << ",,";
            } else {
                os << ',' << format_mean_std(it->second->generated) << ',' << format_mean_std(it->second->gold);
            }
        }
        os << '\n';
    }
    return os.str();
}

void emit_fp_table(const std::vector<FpCell>& cells, const std::filesystem::path& path) {
    write_text_file(path, fp_table_csv(cells));
}

FpBucket fp_bucket(double fp) {
    if (fp < 0.25) return FpBucket::green;
    if (fp < 0.5) return FpBucket::yellow;
    if (fp < 0.75) return FpBucket::orange;
    return FpBucket::red;
}

std::string_view to_string(FpBucket bucket) {
    switch (bucket) {
    case FpBucket::green: return "green";
    case FpBucket::yellow: return "yellow";
    case FpBucket::orange: return "orange";
    case FpBucket::red: return "red";
    }
    return "?";
}

std::string heatmap_html(const SampleRecord& s) {
    std::ostringstream os;
    os << "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n"
       << "<title>Fp heatmap: " << html_escape(s.sample_id) << "</title>\n"
       << "<style>\n"
       << "body{font-family:sans-serif;max-width:60em;margin:2em auto;line-height:2}\n"
       << ".tok{padding:0.1em 0.2em;border-radius:0.2em}\n"
       << ".green{background:#9be39b}.yellow{background:#f5e76b}.orange{background:#f5b05b}.red{background:#f07a7a}\n"
       << ".legend span{margin-right:1em}\n"
       << "</style>\n</head>\n<body>\n"
       << "<h1>" << html_escape(s.sample_id) << "</h1>\n"
       << "<p class=\"backend\">backend: " << html_escape(s.backend_name) << " (fingerprint "
       << html_escape(s.backend_fingerprint) << ")</p>\n"
       << "<p class=\"summary\">tokens: " << s.k << ", sample Fp: " << real(s.fp_s) << "</p>\n"
       << "<p class=\"legend\"><span class=\"green\">[0, 0.25)</span><span class=\"yellow\">[0.25, 0.5)</span>"
       << "<span class=\"orange\">[0.5, 0.75)</span><span class=\"red\">[0.75, 1]</span></p>\n"
       << "<p class=\"text\">\n";
    for (const auto& t : s.tokens) {
        os << "<span class=\"tok " << to_string(fp_bucket(t.fp)) << "\" title=\"fp=" << real(t.fp) << " rank=" << t.rank
           << " entropy=" << real(t.entropy_nats) << "\">" << html_escape(t.surface) << "</span>\n";
    }
    os << "</p>\n</body>\n</html>\n";
    return os.str();
}

void emit_heatmap(const SampleScore& sample, const std::filesystem::path& path) { emit_heatmap(to_record(sample), path); }

void emit_heatmap(const SampleRecord& sample, const std::filesystem::path& path) {
    write_text_file(path, heatmap_html(sample));
}

} // namespace fpscore
