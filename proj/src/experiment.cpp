#include "fpscore/experiment.hpp"

#include "fpscore/error.hpp"
#include "fpscore/parallel.hpp"
#include "fpscore/scorer.hpp"
#include "fpscore/tokenizer.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <random>
#include <sstream>

namespace fpscore {

namespace {

std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

std::string label(const char* role, const char* size, int order) {
    return std::string(role) + std::to_string(order) + "-" + size;
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::string join(const std::vector<std::string>& toks) {
    std::string out;
    for (std::size_t i = 0; i < toks.size(); ++i) {
        if (i) out += ' ';
        out += toks[i];
    }
    return out;
}

nlohmann::ordered_json summary_json(const FpSummary& s) {
    nlohmann::ordered_json j;
    j["count"] = s.count;
    j["mean"] = s.mean;
    j["stdev"] = s.stdev;
    j["min"] = s.min;
    j["max"] = s.max;
    return j;
}

} // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    return mix(mix(seed ^ mix(a + 1)) ^ mix(b + 0x51ed2701ull));
}

void StudyConfig::validate() const {
    for (int o : {generator_small, generator_large, discriminator_small, discriminator_large})
        if (o < 1 || o > NgramModel::kMaxOrder) throw InvalidArgument("model orders must be in [1,5]");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw InvalidArgument("train fraction must be in (0,1)");
    if (samples_per_arm < 2) throw InvalidArgument("samples per arm must be >= 2");
    if (top_k < 1) throw InvalidArgument("top-k must be >= 1");
    if (sample_length < 2 || prompt_length >= sample_length) throw InvalidArgument("need sample_length > prompt_length and sample_length >= 2");
    if (min_count < 1) throw InvalidArgument("min_count must be >= 1");
    NgramParams{2, lambda, alpha}.validate();
}

StudyConfig StudyConfig::from_json(const std::string& text, const std::filesystem::path& base_dir) {
    StudyConfig c;
    try {
        const auto j = nlohmann::json::parse(text);
        if (!j.is_object()) throw FormatError("study config must be a JSON object");
        static const std::vector<std::string> known = {"corpus", "train_fraction", "generator_orders", "discriminator_orders",
                                                       "top_k", "samples_per_arm", "sample_length", "prompt_length",
                                                       "min_count", "lambda", "alpha", "suppress_eos", "seed"};
        for (const auto& [key, value] : j.items())
            if (std::find(known.begin(), known.end(), key) == known.end()) throw FormatError("unknown study config key '" + key + "'");

        std::filesystem::path corpus = j.at("corpus").get<std::string>();
        c.corpus_path = corpus.is_relative() && !base_dir.empty() ? base_dir / corpus : corpus;
        c.train_fraction = j.value("train_fraction", c.train_fraction);
        if (j.contains("generator_orders")) {
            c.generator_small = j["generator_orders"].at("small").get<int>();
            c.generator_large = j["generator_orders"].at("large").get<int>();
        }
        if (j.contains("discriminator_orders")) {
            c.discriminator_small = j["discriminator_orders"].at("small").get<int>();
            c.discriminator_large = j["discriminator_orders"].at("large").get<int>();
        }
        c.top_k = j.value("top_k", c.top_k);
        c.samples_per_arm = j.value("samples_per_arm", c.samples_per_arm);
        c.sample_length = j.value("sample_length", c.sample_length);
        c.prompt_length = j.value("prompt_length", c.prompt_length);
        c.min_count = j.value("min_count", c.min_count);
        c.lambda = j.value("lambda", c.lambda);
        c.alpha = j.value("alpha", c.alpha);
        c.suppress_eos = j.value("suppress_eos", c.suppress_eos);
        c.seed = j.value("seed", c.seed);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad study config: ") + e.what());
    }
    c.validate();
    return c;
}

StudyConfig StudyConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str(), path.parent_path());
}

std::string StudyConfig::to_json() const {
    nlohmann::ordered_json j;
    j["corpus"] = corpus_path.generic_string();
    j["train_fraction"] = train_fraction;
    j["generator_orders"] = {{"small", generator_small}, {"large", generator_large}};
    j["discriminator_orders"] = {{"small", discriminator_small}, {"large", discriminator_large}};
    j["top_k"] = top_k;
    j["samples_per_arm"] = samples_per_arm;
    j["sample_length"] = sample_length;
    j["prompt_length"] = prompt_length;
    j["min_count"] = min_count;
    j["lambda"] = lambda;
    j["alpha"] = alpha;
    j["suppress_eos"] = suppress_eos;
    j["seed"] = seed;
    return j.dump(2);
}

StudyResult run_size_study(const StudyConfig& config, unsigned workers) {
    config.validate();
    StudyResult result;
    result.config = config;

    const auto lines = read_corpus_lines(config.corpus_path.string());
    std::vector<std::vector<std::string>> tokenized(lines.size());
    parallel_for(lines.size(), workers, [&](std::size_t i) { tokenized[i] = tokenize(lines[i]); });
    std::erase_if(tokenized, [](const auto& t) { return t.empty(); });
    if (tokenized.size() < 2) throw InvalidArgument("corpus too small: need at least 2 non-empty lines");

    // Fisher-Yates with an explicit draw so the split is identical on every platform
    std::vector<std::size_t> order(tokenized.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(derive_seed(config.seed, 0));
    for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng() % (i + 1)]);

    const auto n_train = static_cast<std::size_t>(config.train_fraction * static_cast<double>(order.size()));
    if (n_train == 0 || n_train == order.size()) throw InvalidArgument("corpus too small for the train/held-out split");
    result.train_lines = n_train;
    result.heldout_lines = order.size() - n_train;

    std::vector<std::vector<std::string>> train;
    train.reserve(n_train);
    for (std::size_t i = 0; i < n_train; ++i) train.push_back(tokenized[order[i]]);
    Vocabulary vocab = build_vocab(train, config.min_count);
    if (vocab.size() < config.top_k + 2) throw InvalidArgument("degenerate vocabulary: fewer words than top-k");
    result.vocab_size = vocab.size();

    std::vector<std::vector<TokenId>> train_ids;
    train_ids.reserve(train.size());
    for (const auto& t : train) train_ids.push_back(encode(t, vocab));

    // natural samples: consecutive non-overlapping windows of held-out lines
    const std::size_t len = config.sample_length;
    std::vector<std::vector<TokenId>> natural;
    for (std::size_t i = n_train; i < order.size() && natural.size() < config.samples_per_arm; ++i) {
        const auto& toks = tokenized[order[i]];
        for (std::size_t off = 0; off + len <= toks.size() && natural.size() < config.samples_per_arm; off += len) {
            std::vector<std::string> window(toks.begin() + static_cast<std::ptrdiff_t>(off),
                                            toks.begin() + static_cast<std::ptrdiff_t>(off + len));
            natural.push_back(encode(window, vocab));
            result.natural_texts.push_back(std::move(window));
        }
    }
    if (natural.size() < config.samples_per_arm)
        throw InvalidArgument("corpus too small: " + std::to_string(natural.size()) + " held-out windows of " +
                              std::to_string(len) + " tokens, need " + std::to_string(config.samples_per_arm));

    std::size_t unk = 0;
    for (const auto& ids : natural) unk += static_cast<std::size_t>(std::count(ids.begin(), ids.end(), Vocabulary::kUnk));
    result.heldout_unk_rate = static_cast<double>(unk) / static_cast<double>(natural.size() * len);

    std::map<int, std::shared_ptr<const NgramModel>> models;
    for (int o : {config.generator_small, config.generator_large, config.discriminator_small, config.discriminator_large}) {
        if (models.count(o)) continue;
        models[o] = std::make_shared<const NgramModel>(
            NgramModel::train(train_ids, vocab, NgramParams{o, config.lambda, config.alpha}));
    }

    const std::vector<std::pair<std::string, int>> generators = {
        {label("G", "small", config.generator_small), config.generator_small},
        {label("G", "large", config.generator_large), config.generator_large}};
    const std::vector<std::pair<std::string, int>> discriminators = {
        {label("D", "small", config.discriminator_small), config.discriminator_small},
        {label("D", "large", config.discriminator_large), config.discriminator_large}};

    const std::size_t n = natural.size();
    const std::size_t prompt = config.prompt_length;
    std::vector<std::vector<std::vector<TokenId>>> synthetic(generators.size(), std::vector<std::vector<TokenId>>(n));
    for (std::size_t g = 0; g < generators.size(); ++g) {
        const NgramModel& gen = *models.at(generators[g].second);
        parallel_for(n, workers, [&](std::size_t i) {
            const std::span<const TokenId> head(natural[i].data(), prompt);
            auto cont = generate_topk(gen, derive_seed(config.seed, 1 + g, i), config.top_k, len - prompt, head,
                                      GenerateOptions{config.suppress_eos});
            if (cont.empty()) throw InvalidArgument("generator produced an empty continuation (enable suppress_eos)");
            std::vector<TokenId> full(head.begin(), head.end());
            full.insert(full.end(), cont.begin(), cont.end());
            synthetic[g][i] = std::move(full);
        });
        std::vector<std::vector<std::string>> texts;
        for (const auto& ids : synthetic[g]) {
            std::vector<std::string> words;
            for (TokenId id : ids) words.push_back(vocab.surface(id));
            texts.push_back(std::move(words));
        }
        result.synthetic_texts.push_back(std::move(texts));
    }

    // only the continuation is scored; the shared prompt is conditioning context
    auto fp_of = [&](const LocalScorer& scorer, const std::vector<TokenId>& ids) {
        return sample_fp(scorer.score_ids(ids, prompt));
    };

    for (std::size_t g = 0; g < generators.size(); ++g) {
        for (std::size_t d = 0; d < discriminators.size(); ++d) {
            StudyCell cell;
            cell.generator = generators[g].first;
            cell.discriminator = discriminators[d].first;
            cell.generator_order = generators[g].second;
            cell.discriminator_order = discriminators[d].second;
            result.cells.push_back(std::move(cell));
        }
    }

    for (std::size_t d = 0; d < discriminators.size(); ++d) {
        const LocalScorer scorer(models.at(discriminators[d].second));
        std::vector<double> nat_fp(n);
        parallel_for(n, workers, [&](std::size_t i) { nat_fp[i] = fp_of(scorer, natural[i]); });
        const FpSummary nat_summary = summarize(nat_fp);

        for (std::size_t g = 0; g < generators.size(); ++g) {
            std::vector<double> syn_fp(n);
            parallel_for(n, workers, [&](std::size_t i) { syn_fp[i] = fp_of(scorer, synthetic[g][i]); });
            StudyCell& cell = result.cells[g * discriminators.size() + d];
            cell.discriminator_info = scorer.model().info();
            cell.natural = nat_summary;
            cell.synthetic = summarize(syn_fp);
            cell.comparison = paired_compare(syn_fp, nat_fp, derive_seed(config.seed, 100 + g, d),
                                             PermutationOptions{20, 20000, workers});
        }
    }

    auto cell_at = [&](std::size_t g, std::size_t d) -> const StudyCell& { return result.cells[g * discriminators.size() + d]; };

    bool gen_rows = true;
    std::string h1_detail;
    for (std::size_t d = 0; d < discriminators.size(); ++d) {
        for (std::size_t g = 0; g < generators.size(); ++g) gen_rows = gen_rows && cell_at(g, d).comparison.significant;
        const double delta = cell_at(1, d).comparison.mean_diff - cell_at(0, d).comparison.mean_diff;
        result.trends.push_back("generator size under " + discriminators[d].first + ": mean difference " +
                                fmt("%.4f", cell_at(0, d).comparison.mean_diff) + " -> " +
                                fmt("%.4f", cell_at(1, d).comparison.mean_diff) + " (" + (delta > 0 ? "larger" : "not larger") +
                                " with the larger generator)");
    }
    h1_detail = gen_rows ? "every generator shows a significant Fp difference under every discriminator (p < 0.05)"
                         : "at least one generator/discriminator cell shows no significant difference";
    result.verdicts.push_back({"H1_0: no difference despite small and large generators", gen_rows, h1_detail});

    bool disc_cols = true;
    for (std::size_t g = 0; g < generators.size(); ++g) {
        for (std::size_t d = 0; d < discriminators.size(); ++d) disc_cols = disc_cols && cell_at(g, d).comparison.significant;
        const double delta = cell_at(g, 1).comparison.mean_diff - cell_at(g, 0).comparison.mean_diff;
        result.trends.push_back("discriminator size for " + generators[g].first + ": mean difference " +
                                fmt("%.4f", cell_at(g, 0).comparison.mean_diff) + " -> " +
                                fmt("%.4f", cell_at(g, 1).comparison.mean_diff) + " (" + (delta > 0 ? "larger" : "not larger") +
                                " with the larger discriminator)");
    }
    result.verdicts.push_back({"H2_0: no difference despite small and large discriminators", disc_cols,
                               disc_cols ? "every discriminator finds a significant Fp difference for every generator (p < 0.05)"
                                         : "at least one generator/discriminator cell shows no significant difference"});
    return result;
}

void emit_study(const StudyResult& r, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);

    std::vector<FpCell> fp_cells;
    std::vector<Trial> trials;
    for (const auto& c : r.cells) {
        fp_cells.push_back({c.generator, c.discriminator, c.synthetic, c.natural, c.discriminator_info.model_fingerprint});
        trials.push_back({c.generator, c.discriminator, c.comparison});
    }
    emit_fp_table(fp_cells, dir / "fp_table.csv");
    const auto rows = summary_table(trials);
    std::string backends = "# backends:";
    for (const auto& c : r.cells)
        if (backends.find(c.discriminator + "=") == std::string::npos)
            backends += " " + c.discriminator + "=" + c.discriminator_info.model_fingerprint;
    write_text_file(dir / "comparison.csv", backends + "\n" + table_to_csv(rows));
    write_text_file(dir / "comparison.txt", backends + "\n" + table_to_text(rows));

    nlohmann::ordered_json j;
    j["config"] = nlohmann::ordered_json::parse(r.config.to_json());
    j["train_lines"] = r.train_lines;
    j["heldout_lines"] = r.heldout_lines;
    j["vocab_size"] = r.vocab_size;
    j["heldout_unk_rate"] = r.heldout_unk_rate;
    nlohmann::ordered_json cells = nlohmann::ordered_json::array();
    for (const auto& c : r.cells) {
        nlohmann::ordered_json cj;
        cj["generator"] = c.generator;
        cj["discriminator"] = c.discriminator;
        cj["backend"] = {{"name", c.discriminator_info.backend_name},
                         {"vocab_size", c.discriminator_info.vocab_size},
                         {"fingerprint", c.discriminator_info.model_fingerprint}};
        cj["fp_synthetic"] = summary_json(c.synthetic);
        cj["fp_natural"] = summary_json(c.natural);
        const auto& p = c.comparison;
        cj["n_pairs"] = p.n_pairs;
        cj["frac_greater"] = p.frac_greater;
        cj["mean_diff"] = p.mean_diff;
        cj["rel_diff_pct"] = p.rel_diff_pct;
        cj["p_value"] = p.p_value;
        cj["significant"] = p.significant;
        cj["test"] = {{"method", p.test_meta.exact ? "exact" : "monte_carlo"},
                      {"seed", p.test_meta.seed},
                      {"resamples", p.test_meta.resamples},
                      {"ties", p.test_meta.ties}};
        cells.push_back(std::move(cj));
    }
    j["cells"] = std::move(cells);
    nlohmann::ordered_json verdicts = nlohmann::ordered_json::array();
    for (const auto& v : r.verdicts) verdicts.push_back({{"hypothesis", v.name}, {"rejected", v.rejected}, {"detail", v.detail}});
    j["verdicts"] = std::move(verdicts);
    j["trends"] = r.trends;
    write_text_file(dir / "study.json", j.dump(2) + "\n");

    std::string nat;
    for (const auto& t : r.natural_texts) nat += join(t) + "\n";
    write_text_file(dir / "samples_natural.txt", nat);
    for (std::size_t g = 0; g < r.synthetic_texts.size(); ++g) {
        std::string syn;
        for (const auto& t : r.synthetic_texts[g]) syn += join(t) + "\n";
        const std::string name = r.cells.empty() ? std::to_string(g) : r.cells[g * (r.cells.size() / r.synthetic_texts.size())].generator;
        write_text_file(dir / ("samples_" + name + ".txt"), syn);
    }
}

} // namespace fpscore
