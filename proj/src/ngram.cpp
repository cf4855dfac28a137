#include "fpscore/ngram.hpp"

#include "fpscore/error.hpp"
#include "hashing.hpp"

#include <nlohmann/json.hpp>
#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>

namespace fpscore {

namespace {

constexpr std::string_view kMagic = "FPLM";
constexpr int kFormatVersion = 1;

void write_id(std::string& out, TokenId id) {
    if (id == Vocabulary::kBos) {
        out += '^';
    } else {
        out += std::to_string(id);
    }
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> f;
    std::size_t pos = 0;
    while (pos < line.size()) {
        auto next = line.find(' ', pos);
        if (next == std::string_view::npos) next = line.size();
        f.push_back(line.substr(pos, next - pos));
        pos = next + 1;
    }
    return f;
}

template <typename T>
T parse_number(std::string_view s) {
    T value{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) throw FormatError("corrupt file: bad number '" + std::string(s) + "'");
    return value;
}

TokenId parse_id(std::string_view s) {
    if (s == "^") return Vocabulary::kBos;
    return parse_number<TokenId>(s);
}

std::string read_gzip(const std::filesystem::path& path) {
    gzFile f = gzopen(path.c_str(), "rb");
    if (!f) throw IoError("cannot open '" + path.string() + "'");
    std::string data;
    char buf[1 << 16];
    int n = 0;
    while ((n = gzread(f, buf, sizeof buf)) > 0) data.append(buf, static_cast<std::size_t>(n));
    int errnum = Z_OK;
    gzerror(f, &errnum);
    const int close_rc = gzclose_r(f);
    if (n < 0 || (errnum != Z_OK && errnum != Z_STREAM_END) || close_rc != Z_OK)
        throw FormatError("corrupt file: '" + path.string() + "' is truncated or not gzip data");
    return data;
}

void write_gzip(const std::filesystem::path& path, std::string_view data) {
    gzFile f = gzopen(path.c_str(), "wb9");
    if (!f) throw IoError("cannot write '" + path.string() + "'");
    std::size_t off = 0;
    while (off < data.size()) {
        const auto chunk = static_cast<unsigned>(std::min<std::size_t>(data.size() - off, 1u << 20));
        if (gzwrite(f, data.data() + off, chunk) != static_cast<int>(chunk)) {
            gzclose_w(f);
            throw IoError("write failed for '" + path.string() + "'");
        }
        off += chunk;
    }
    if (gzclose_w(f) != Z_OK) throw IoError("write failed for '" + path.string() + "'");
}

std::string crc_hex(std::uint32_t crc) {
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08x", crc);
    return buf;
}

} // namespace

void NgramParams::validate() const {
    if (order < 1 || order > NgramModel::kMaxOrder) throw InvalidArgument("order must be in [1,5]");
    if (!(lambda > 0.0 && lambda < 1.0)) throw InvalidArgument("lambda must be in (0,1)");
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidArgument("alpha must be > 0");
}

std::size_t NgramModel::KeyHash::operator()(const ContextKey& k) const noexcept {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (TokenId id : k) {
        h ^= id;
        h *= 0x100000001b3ull;
    }
    return static_cast<std::size_t>(h);
}

NgramModel NgramModel::train(const std::vector<std::vector<TokenId>>& corpus, Vocabulary vocab, NgramParams params) {
    params.validate();
    if (corpus.empty()) throw InvalidArgument("empty corpus");

    NgramModel m;
    m.vocab_ = std::move(vocab);
    m.params_ = params;
    const int n = params.order;
    const std::size_t v = m.vocab_.size();
    m.unigram_.assign(v, 0);

    using Counts = std::unordered_map<TokenId, std::uint64_t>;
    std::vector<std::unordered_map<ContextKey, Counts, KeyHash>> raw(static_cast<std::size_t>(n - 1));

    std::vector<TokenId> padded;
    for (const auto& sample : corpus) {
        padded.assign(static_cast<std::size_t>(n - 1), Vocabulary::kBos);
        for (TokenId id : sample) {
            if (id >= v) throw InvalidArgument("token id out of vocabulary range");
            padded.push_back(id);
        }
        padded.push_back(Vocabulary::kEos);

        for (std::size_t i = static_cast<std::size_t>(n - 1); i < padded.size(); ++i) {
            const TokenId w = padded[i];
            ++m.unigram_[w];
            ++m.total_;
            for (int o = 2; o <= n; ++o) {
                ContextKey key{};
                const std::size_t len = static_cast<std::size_t>(o - 1);
                std::copy_n(padded.begin() + static_cast<std::ptrdiff_t>(i - len), len, key.begin());
                ++raw[static_cast<std::size_t>(o - 2)][key][w];
            }
        }
    }

    m.tables_.resize(raw.size());
    for (std::size_t t = 0; t < raw.size(); ++t) {
        for (auto& [key, counts] : raw[t]) {
            Successors s;
            s.next.assign(counts.begin(), counts.end());
            std::sort(s.next.begin(), s.next.end());
            for (const auto& [w, c] : s.next) s.total += c;
            m.tables_[t].emplace(key, std::move(s));
        }
    }
    m.finalize();
    return m;
}

void NgramModel::finalize() {
    const double denom = static_cast<double>(total_) + params_.alpha * static_cast<double>(vocab_.size());
    unigram_prob_.resize(vocab_.size());
    for (std::size_t w = 0; w < vocab_.size(); ++w)
        unigram_prob_[w] = (static_cast<double>(unigram_[w]) + params_.alpha) / denom;
    fingerprint_ = detail::sha256_hex(canonical_body()).substr(0, 16);
}

std::string NgramModel::canonical_body() const {
    nlohmann::json header;
    header["magic"] = kMagic;
    header["version"] = kFormatVersion;
    header["order"] = params_.order;
    header["lambda"] = params_.lambda;
    header["alpha"] = params_.alpha;
    header["min_count"] = vocab_.min_count();
    header["vocab"] = vocab_.words();

    std::string out = header.dump();
    out += '\n';
    for (std::size_t w = 0; w < unigram_.size(); ++w) {
        if (unigram_[w] == 0) continue;
        out += "1 ";
        out += std::to_string(w);
        out += ' ';
        out += std::to_string(unigram_[w]);
        out += '\n';
    }
    for (std::size_t t = 0; t < tables_.size(); ++t) {
        const int o = static_cast<int>(t) + 2;
        std::vector<const std::pair<const ContextKey, Successors>*> entries;
        entries.reserve(tables_[t].size());
        for (const auto& e : tables_[t]) entries.push_back(&e);
        std::sort(entries.begin(), entries.end(), [](auto* a, auto* b) { return a->first < b->first; });
        for (const auto* e : entries) {
            std::string prefix = std::to_string(o);
            for (int i = 0; i < o - 1; ++i) {
                prefix += ' ';
                write_id(prefix, e->first[static_cast<std::size_t>(i)]);
            }
            for (const auto& [w, c] : e->second.next) {
                out += prefix;
                out += ' ';
                out += std::to_string(w);
                out += ' ';
                out += std::to_string(c);
                out += '\n';
            }
        }
    }
    return out;
}

void NgramModel::save(const std::filesystem::path& path) const {
    const std::string body = canonical_body();
    const auto nl = body.find('\n');
    nlohmann::json header = nlohmann::json::parse(body.substr(0, nl));
    header["checksum"] = crc_hex(detail::crc32(body));
    std::string file = header.dump();
    file += body.substr(nl);
    write_gzip(path, file);
}

NgramModel NgramModel::load(const std::filesystem::path& path) {
    const std::string data = read_gzip(path);
    const auto nl = data.find('\n');
    if (nl == std::string::npos) throw FormatError("corrupt file: missing header");

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(data.substr(0, nl));
    } catch (const nlohmann::json::exception&) {
        throw FormatError("corrupt file: unreadable header");
    }
    if (!header.is_object() || header.value("magic", "") != kMagic) throw FormatError("corrupt file: not an FPLM model");
    if (!header.contains("version") || header["version"] != kFormatVersion)
        throw FormatError("version mismatch: expected FPLM version " + std::to_string(kFormatVersion));
    if (!header.contains("checksum") || !header["checksum"].is_string()) throw FormatError("corrupt file: missing checksum");

    const std::string stored = header["checksum"].get<std::string>();
    header.erase("checksum");
    const std::string body = header.dump() + data.substr(nl);
    if (crc_hex(detail::crc32(body)) != stored) throw FormatError("corrupt file: checksum mismatch");

    NgramModel m;
    try {
        m.params_.order = header.at("order").get<int>();
        m.params_.lambda = header.at("lambda").get<double>();
        m.params_.alpha = header.at("alpha").get<double>();
        m.params_.validate();
        m.vocab_ = Vocabulary::from_words(header.at("vocab").get<std::vector<std::string>>(),
                                          header.at("min_count").get<std::int64_t>());
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("corrupt file: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw FormatError(std::string("corrupt file: ") + e.what());
    }

    const std::size_t v = m.vocab_.size();
    m.unigram_.assign(v, 0);
    m.tables_.resize(static_cast<std::size_t>(m.params_.order - 1));

    std::istringstream lines(data.substr(nl + 1));
    std::string line;
    while (std::getline(lines, line)) {
        const auto f = split_fields(line);
        if (f.size() < 3) throw FormatError("corrupt file: short record");
        const int o = parse_number<int>(f[0]);
        if (o < 1 || o > m.params_.order || f.size() != static_cast<std::size_t>(o) + 2)
            throw FormatError("corrupt file: bad record order");
        const TokenId w = parse_number<TokenId>(f[static_cast<std::size_t>(o)]);
        const auto c = parse_number<std::uint64_t>(f[static_cast<std::size_t>(o) + 1]);
        if (w >= v || c == 0) throw FormatError("corrupt file: bad count record");
        if (o == 1) {
            m.unigram_[w] = c;
            m.total_ += c;
            continue;
        }
        ContextKey key{};
        for (int i = 0; i < o - 1; ++i) key[static_cast<std::size_t>(i)] = parse_id(f[static_cast<std::size_t>(i) + 1]);
        auto& s = m.tables_[static_cast<std::size_t>(o - 2)][key];
        s.next.emplace_back(w, c);
        s.total += c;
    }
    m.finalize();
    return m;
}

const NgramModel::Successors* NgramModel::find(int order, std::span<const TokenId> context) const {
    ContextKey key{};
    std::copy(context.begin(), context.end(), key.begin());
    const auto& table = tables_[static_cast<std::size_t>(order - 2)];
    auto it = table.find(key);
    return it == table.end() ? nullptr : &it->second;
}

std::vector<double> NgramModel::next_distribution(std::span<const TokenId> context) const {
    std::vector<double> out;
    next_distribution(context, out);
    return out;
}

void NgramModel::next_distribution(std::span<const TokenId> context, std::vector<double>& out) const {
    const std::size_t width = static_cast<std::size_t>(params_.order - 1);
    std::array<TokenId, kMaxOrder - 1> ctx{};
    ctx.fill(Vocabulary::kBos);
    const std::size_t used = std::min(width, context.size());
    for (std::size_t i = 0; i < used; ++i) {
        const TokenId id = context[context.size() - used + i];
        if (id != Vocabulary::kBos && id >= vocab_.size()) throw InvalidArgument("context token id out of range");
        ctx[width - used + i] = id;
    }

    out.assign(vocab_.size(), 0.0);
    double coef = 1.0;
    const double lambda = params_.lambda;
    for (int o = params_.order; o >= 2; --o) {
        const std::size_t len = static_cast<std::size_t>(o - 1);
        const Successors* s = find(o, std::span<const TokenId>(ctx.data() + (width - len), len));
        if (!s) continue;
        const double f = coef * lambda / static_cast<double>(s->total);
        for (const auto& [w, c] : s->next) out[w] += f * static_cast<double>(c);
        coef *= 1.0 - lambda;
    }
    for (std::size_t w = 0; w < out.size(); ++w) out[w] += coef * unigram_prob_[w];
}

std::uint64_t NgramModel::count(std::span<const TokenId> ngram) const {
    if (ngram.empty() || ngram.size() > static_cast<std::size_t>(params_.order)) return 0;
    const TokenId w = ngram.back();
    if (w >= vocab_.size()) return 0;
    if (ngram.size() == 1) return unigram_[w];
    const Successors* s = find(static_cast<int>(ngram.size()), ngram.first(ngram.size() - 1));
    if (!s) return 0;
    auto it = std::lower_bound(s->next.begin(), s->next.end(), std::make_pair(w, std::uint64_t{0}));
    return it != s->next.end() && it->first == w ? it->second : 0;
}

std::uint64_t NgramModel::context_count(std::span<const TokenId> context) const {
    if (context.empty()) return total_;
    if (context.size() >= static_cast<std::size_t>(params_.order)) return 0;
    const Successors* s = find(static_cast<int>(context.size()) + 1, context);
    return s ? s->total : 0;
}

ScorerInfo NgramModel::info() const {
    return ScorerInfo{"ngram-" + std::to_string(params_.order), static_cast<std::int64_t>(vocab_.size()), fingerprint_};
}

std::vector<TokenId> top_k_indices(std::span<const double> dist, std::size_t k) {
    k = std::min(k, dist.size());
    std::vector<TokenId> ids(dist.size());
    std::iota(ids.begin(), ids.end(), TokenId{0});
    std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(k), ids.end(),
                      [&](TokenId a, TokenId b) { return dist[a] > dist[b] || (dist[a] == dist[b] && a < b); });
    ids.resize(k);
    return ids;
}

std::vector<TokenId> generate_topk(const NgramModel& model, std::uint64_t seed, std::size_t k, std::size_t max_len,
                                   std::span<const TokenId> prompt, GenerateOptions options) {
    if (k < 1 || k > model.vocab().size()) throw InvalidArgument("k must be in [1, vocabulary size]");

    std::mt19937_64 rng(seed);
    std::vector<TokenId> history(prompt.begin(), prompt.end());
    std::vector<TokenId> out;
    std::vector<double> dist;
    while (out.size() < max_len) {
        model.next_distribution(history, dist);
        if (options.suppress_eos) dist[Vocabulary::kEos] = 0.0;
        const auto top = top_k_indices(dist, k);

        double mass = 0.0;
        for (TokenId id : top) mass += dist[id];
        // 53 random bits -> uniform in [0,1), identical on every platform
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        const double target = u * mass;
        TokenId pick = top.front();
        double cum = 0.0;
        for (TokenId id : top) {
            if (dist[id] <= 0.0) continue;
            pick = id;
            cum += dist[id];
            if (target < cum) break;
        }
        if (pick == Vocabulary::kEos) break;
        out.push_back(pick);
        history.push_back(pick);
    }
    return out;
}

} // namespace fpscore
