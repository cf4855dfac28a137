#include "fpscore/cli.hpp"

#include "fpscore/error.hpp"
#include "fpscore/experiment.hpp"
#include "fpscore/fp.hpp"
#include "fpscore/naturalness.hpp"
#include "fpscore/ngram.hpp"
#include "fpscore/parallel.hpp"
#include "fpscore/remote.hpp"
#include "fpscore/report.hpp"
#include "fpscore/server.hpp"
#include "fpscore/stats.hpp"
#include "fpscore/tokenizer.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>

namespace fpscore {

namespace {

struct NumberedLine {
    std::size_t number = 0;
    std::string text;
};

std::vector<NumberedLine> read_numbered_lines(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::vector<NumberedLine> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t\v\f") == std::string::npos) continue;
        out.push_back({n, line});
    }
    return out;
}

std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

std::string common_fingerprint(const std::vector<SampleRecord>& records, const std::string& what) {
    if (records.empty()) throw InvalidArgument(what + " contains no samples");
    std::set<std::string> fps;
    for (const auto& r : records) fps.insert(r.backend_fingerprint);
    if (fps.size() != 1) throw InvalidArgument(what + " mixes samples scored by different backends");
    return *fps.begin();
}

std::vector<double> fp_values(const std::vector<SampleRecord>& records) {
    std::vector<double> v;
    v.reserve(records.size());
    for (const auto& r : records) v.push_back(r.fp_s);
    return v;
}

std::string join(const std::vector<std::string>& toks) {
    std::string out;
    for (std::size_t i = 0; i < toks.size(); ++i) {
        if (i) out += ' ';
        out += toks[i];
    }
    return out;
}

void log_backend(std::ostream& err, const ScorerInfo& info) {
    err << "backend " << info.backend_name << " vocab_size " << info.vocab_size << " fingerprint " << info.model_fingerprint
        << "\n";
}

} // namespace

std::unique_ptr<Scorer> make_scorer(const std::string& backend, unsigned workers) {
    const auto colon = backend.find(':');
    if (colon == std::string::npos) throw InvalidArgument("backend must be ngram:<model-file> or remote:<url>");
    const std::string kind = backend.substr(0, colon);
    const std::string target = backend.substr(colon + 1);
    if (kind == "ngram") return std::make_unique<LocalScorer>(std::make_shared<const NgramModel>(NgramModel::load(target)), workers);
    if (kind == "remote") return RemoteScorer::connect(target, RemoteOptions::from_env());
    throw InvalidArgument("unknown backend kind '" + kind + "'");
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Fp (fraction of probabilities) text naturalness toolkit", "fpscore"};
    app.require_subcommand(1);
    unsigned workers = default_workers();

    // train
    auto* train = app.add_subcommand("train", "Train an n-gram model from a corpus (one sample per line)");
    std::string train_corpus, train_out;
    NgramParams train_params;
    std::int64_t train_min_count = 1;
    train->add_option("--corpus", train_corpus, "UTF-8 corpus file")->required();
    train->add_option("--out", train_out, "model file to write")->required();
    train->add_option("--order", train_params.order, "n-gram order (1-5)")->capture_default_str();
    train->add_option("--lambda", train_params.lambda, "interpolation weight")->capture_default_str();
    train->add_option("--alpha", train_params.alpha, "unigram add-alpha smoothing")->capture_default_str();
    train->add_option("--min-count", train_min_count, "minimum word frequency kept in the vocabulary")->capture_default_str();

    // generate
    auto* gen = app.add_subcommand("generate", "Sample a synthetic corpus with top-k decoding");
    std::string gen_model, gen_out, gen_prompt;
    std::uint64_t gen_seed = 1;
    std::size_t gen_k = 5, gen_max_len = 30, gen_count = 10;
    bool gen_suppress_eos = false;
    gen->add_option("--model", gen_model, "model file")->required();
    gen->add_option("--seed", gen_seed, "random seed")->capture_default_str();
    gen->add_option("--k", gen_k, "top-k")->capture_default_str();
    gen->add_option("--max-len", gen_max_len, "maximum tokens per sample")->capture_default_str();
    gen->add_option("--count", gen_count, "number of samples")->capture_default_str();
    gen->add_option("--prompt", gen_prompt, "prompt text prepended to every sample");
    gen->add_flag("--suppress-eos", gen_suppress_eos, "never stop before --max-len");
    gen->add_option("--out", gen_out, "output file (default: stdout)");
    gen->add_option("--workers", workers, "worker threads");

    // score
    auto* score = app.add_subcommand("score", "Score texts (one per line) and write per-sample records");
    std::string score_backend, score_input, score_out;
    std::size_t score_min_tokens = 0;
    bool score_collapse = false, score_raw = false;
    score->add_option("--backend", score_backend, "ngram:<model-file> or remote:<url>")->required();
    score->add_option("--input", score_input, "text file, one sample per line")->required();
    score->add_option("--out", score_out, "output .jsonl")->required();
    score->add_option("--workers", workers, "worker threads");
    score->add_option("--min-tokens", score_min_tokens, "skip samples with fewer tokens (0: keep all)");
    score->add_flag("--collapse-repeats", score_collapse, "collapse runs of repeated tokens before scoring");
    score->add_flag("--raw", score_raw, "remote backends only: let the server tokenize");

    // calibrate
    auto* cal = app.add_subcommand("calibrate", "Fit Fp thresholds from scored natural and synthetic sets");
    std::string cal_natural, cal_synthetic, cal_out, cal_mode = "single", cal_roc;
    double cal_c = 1.0;
    ClassWeights cal_weights;
    bool cal_allow_mismatch = false;
    cal->add_option("--natural", cal_natural, "scored natural samples (.jsonl)")->required();
    cal->add_option("--synthetic", cal_synthetic, "scored synthetic samples (.jsonl)")->required();
    cal->add_option("--out", cal_out, "threshold file to write")->required();
    cal->add_option("--mode", cal_mode, "single or dual")->check(CLI::IsMember({"single", "dual"}))->capture_default_str();
    cal->add_option("--c", cal_c, "dual mode spread multiplier")->capture_default_str();
    cal->add_option("--weight-natural", cal_weights.natural, "single mode error weight of natural samples");
    cal->add_option("--weight-synthetic", cal_weights.synthetic, "single mode error weight of synthetic samples");
    cal->add_option("--roc", cal_roc, "also write a threshold sweep CSV");
    cal->add_flag("--allow-backend-mismatch", cal_allow_mismatch, "accept sets scored by different backends");

    // evaluate
    auto* eval = app.add_subcommand("evaluate", "Classify a scored set and report h/m scores");
    std::string eval_scored, eval_thresholds;
    bool eval_allow_mismatch = false, eval_json = false;
    eval->add_option("--scored", eval_scored, "scored samples (.jsonl)")->required();
    eval->add_option("--thresholds", eval_thresholds, "threshold file")->required();
    eval->add_flag("--allow-backend-mismatch", eval_allow_mismatch, "apply thresholds calibrated on another backend");
    eval->add_flag("--json", eval_json, "print the result as JSON");

    // compare
    auto* cmp = app.add_subcommand("compare", "Paired comparison of generated vs. gold Fp values");
    std::string cmp_generated, cmp_gold, cmp_gen_label = "generator", cmp_disc_label, cmp_csv;
    std::uint64_t cmp_seed = 1;
    cmp->add_option("--generated", cmp_generated, "scored generated samples (.jsonl)")->required();
    cmp->add_option("--gold", cmp_gold, "scored gold samples (.jsonl), paired by position")->required();
    cmp->add_option("--seed", cmp_seed, "seed for Monte Carlo resampling")->capture_default_str();
    cmp->add_option("--generator-label", cmp_gen_label, "row label")->capture_default_str();
    cmp->add_option("--discriminator-label", cmp_disc_label, "column label (default: backend name)");
    cmp->add_option("--csv", cmp_csv, "also write the row as CSV");
    cmp->add_option("--workers", workers, "worker threads");

    // experiment
    auto* exp = app.add_subcommand("experiment", "Run the generator/discriminator size study");
    std::string exp_config, exp_out;
    exp->add_option("--config", exp_config, "study config (JSON)")->required();
    exp->add_option("--out-dir", exp_out, "output directory")->required();
    exp->add_option("--workers", workers, "worker threads");

    // report
    auto* rep = app.add_subcommand("report", "Render a per-token Fp heatmap page for one scored sample");
    std::string rep_scored, rep_id, rep_out;
    std::size_t rep_index = 0;
    rep->add_option("--scored", rep_scored, "scored samples (.jsonl)")->required();
    auto* rep_id_opt = rep->add_option("--sample-id", rep_id, "sample to render");
    rep->add_option("--index", rep_index, "0-based record index (when --sample-id is absent)")->excludes(rep_id_opt);
    rep->add_option("--out", rep_out, "output .html")->required();

    // serve
    auto* serve = app.add_subcommand("serve", "Serve a local model over the scoring protocol");
    std::string serve_backend, serve_host = "127.0.0.1";
    int serve_port = 8080;
    serve->add_option("--backend", serve_backend, "ngram:<model-file>")->required();
    serve->add_option("--host", serve_host)->capture_default_str();
    serve->add_option("--port", serve_port)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }
    workers = std::max(1u, workers);

    try {
        if (*train) {
            std::vector<std::vector<std::string>> corpus;
            for (const auto& line : read_corpus_lines(train_corpus)) corpus.push_back(tokenize(line));
            Vocabulary vocab = build_vocab(corpus, train_min_count);
            std::vector<std::vector<TokenId>> ids;
            ids.reserve(corpus.size());
            for (const auto& t : corpus) ids.push_back(encode(t, vocab));
            const NgramModel model = NgramModel::train(ids, std::move(vocab), train_params);
            model.save(train_out);
            log_backend(err, model.info());
            out << "wrote " << train_out << " (" << model.vocab().size() << " words, " << model.total_tokens()
                << " training tokens)\n";
        } else if (*gen) {
            const NgramModel model = NgramModel::load(gen_model);
            log_backend(err, model.info());
            const auto prompt = encode(tokenize(gen_prompt), model.vocab());
            std::vector<std::string> lines(gen_count);
            parallel_for(gen_count, workers, [&](std::size_t i) {
                const auto ids = generate_topk(model, derive_seed(gen_seed, i), gen_k, gen_max_len, prompt,
                                               GenerateOptions{gen_suppress_eos});
                std::vector<std::string> words;
                for (TokenId id : prompt) words.push_back(model.vocab().surface(id));
                for (TokenId id : ids) words.push_back(model.vocab().surface(id));
                lines[i] = join(words);
            });
            std::string text;
            for (const auto& l : lines) text += l + "\n";
            if (gen_out.empty()) {
                out << text;
            } else {
                write_text_file(gen_out, text);
            }
        } else if (*score) {
            auto scorer = make_scorer(score_backend, workers);
            const ScorerInfo info = scorer->info();
            log_backend(err, info);
            const auto lines = read_numbered_lines(score_input);
            std::vector<SampleScore> samples;
            if (score_raw) {
                auto* remote = dynamic_cast<RemoteScorer*>(scorer.get());
                if (!remote) throw InvalidArgument("--raw needs a remote backend");
                std::vector<std::string> texts;
                for (const auto& l : lines) texts.push_back(l.text);
                auto scored = texts.empty() ? std::vector<ScoredText>{} : remote->score_raw_batch(texts);
                for (std::size_t i = 0; i < scored.size(); ++i) {
                    if (scored[i].scores.size() < std::max<std::size_t>(score_min_tokens, 1)) continue;
                    samples.push_back(make_sample_score("line-" + std::to_string(lines[i].number), std::move(scored[i]), info));
                }
            } else {
                std::vector<SampleInput> inputs;
                for (const auto& l : lines) {
                    auto toks = tokenize(l.text);
                    if (score_collapse) toks = collapse_repeated_runs(toks);
                    if (toks.empty()) continue;
                    inputs.push_back({"line-" + std::to_string(l.number), std::move(toks)});
                }
                samples = score_samples(*scorer, inputs, score_min_tokens);
            }
            emit_jsonl(samples, score_out);
            out << "scored " << samples.size() << " samples -> " << score_out << "\n";
        } else if (*cal) {
            const auto natural = read_jsonl(cal_natural);
            const auto synthetic = read_jsonl(cal_synthetic);
            const std::string fp_nat = common_fingerprint(natural, cal_natural);
            const std::string fp_syn = common_fingerprint(synthetic, cal_synthetic);
            if (fp_nat != fp_syn && !cal_allow_mismatch)
                throw InvalidArgument("natural and synthetic sets were scored by different backends (" + fp_nat + " vs " + fp_syn + ")");
            err << "backend fingerprint " << fp_nat << "\n";
            const auto nat = fp_values(natural);
            const auto syn = fp_values(synthetic);
            ThresholdConfig cfg = cal_mode == "single" ? calibrate_single(nat, syn, cal_weights) : calibrate_dual(nat, syn, cal_c);
            cfg.calibration_meta.backend_fingerprint = fp_nat;
            save_thresholds(cfg, cal_out);
            if (!cal_roc.empty()) {
                std::string csv = "# backend " + fp_nat + "\nthreshold,true_h_rate,false_h_rate,errors\n";
                for (const auto& p : roc_sweep(nat, syn))
                    csv += format_real(p.threshold) + "," + format_real(p.true_h_rate) + "," + format_real(p.false_h_rate) + "," +
                           std::to_string(p.errors) + "\n";
                write_text_file(cal_roc, csv);
            }
            out << thresholds_to_json(cfg);
        } else if (*eval) {
            const auto records = read_jsonl(eval_scored);
            const ThresholdConfig cfg = load_thresholds(eval_thresholds);
            const std::string fp = common_fingerprint(records, eval_scored);
            err << "backend fingerprint " << fp << "\n";
            if (fp != cfg.calibration_meta.backend_fingerprint && !eval_allow_mismatch)
                throw InvalidArgument("threshold file was calibrated on backend '" + cfg.calibration_meta.backend_fingerprint +
                                      "' but samples were scored by '" + fp + "' (use --allow-backend-mismatch to override)");
            const CorpusResult r = evaluate_system(fp_values(records), cfg);
            if (eval_json) {
                out << "{\"mode\":\"" << to_string(r.mode) << "\",\"n\":" << r.n << ",\"n_h\":" << r.n_h << ",\"n_m\":" << r.n_m
                    << ",\"n_u\":" << r.n_u << ",\"h_score\":" << format_real(r.h_score) << ",\"m_score\":" << format_real(r.m_score)
                    << ",\"mean_fp\":" << format_real(r.mean_fp) << ",\"backend_fingerprint\":\"" << fp << "\"}\n";
            } else {
                out << "backend_fingerprint " << fp << "\n"
                    << "mode " << to_string(r.mode) << "\n"
                    << "n " << r.n << "\n"
                    << "n_h " << r.n_h << "\n"
                    << "n_m " << r.n_m << "\n"
                    << "n_u " << r.n_u << "\n"
                    << "h_score " << format_real(r.h_score) << "\n"
                    << "m_score " << format_real(r.m_score) << "\n"
                    << "mean_fp " << format_real(r.mean_fp) << "\n";
            }
        } else if (*cmp) {
            const auto generated = read_jsonl(cmp_generated);
            const auto gold = read_jsonl(cmp_gold);
            const std::string fp_gen = common_fingerprint(generated, cmp_generated);
            const std::string fp_gold = common_fingerprint(gold, cmp_gold);
            if (fp_gen != fp_gold) throw InvalidArgument("generated and gold sets were scored by different backends");
            err << "backend fingerprint " << fp_gen << "\n";
            const auto c = paired_compare(fp_values(generated), fp_values(gold), cmp_seed, PermutationOptions{20, 20000, workers});
            const std::string disc = cmp_disc_label.empty() ? generated.front().backend_name : cmp_disc_label;
            const auto rows = summary_table({Trial{cmp_gen_label, disc, c}});
            out << "# backend " << fp_gen << "\n" << table_to_text(rows);
            if (!cmp_csv.empty()) write_text_file(cmp_csv, "# backend " + fp_gen + "\n" + table_to_csv(rows));
        } else if (*exp) {
            const StudyConfig cfg = StudyConfig::load(exp_config);
            const StudyResult r = run_size_study(cfg, workers);
            for (const auto& c : r.cells)
                if (c.generator == r.cells.front().generator) log_backend(err, c.discriminator_info);
            emit_study(r, exp_out);
            std::vector<Trial> trials;
            for (const auto& c : r.cells) trials.push_back({c.generator, c.discriminator, c.comparison});
            out << table_to_text(summary_table(trials));
            for (const auto& v : r.verdicts) out << v.name << ": " << (v.rejected ? "rejected" : "not rejected") << "\n";
            for (const auto& t : r.trends) out << "trend: " << t << "\n";
        } else if (*rep) {
            const auto records = read_jsonl(rep_scored);
            const SampleRecord* pick = nullptr;
            if (!rep_id.empty()) {
                for (const auto& r : records)
                    if (r.sample_id == rep_id) pick = &r;
                if (!pick) throw InvalidArgument("no sample with id '" + rep_id + "'");
            } else {
                if (rep_index >= records.size()) throw InvalidArgument("sample index out of range");
                pick = &records[rep_index];
            }
            err << "backend fingerprint " << pick->backend_fingerprint << "\n";
            emit_heatmap(*pick, rep_out);
            out << "wrote " << rep_out << "\n";
        } else if (*serve) {
            if (serve_backend.rfind("ngram:", 0) != 0) throw InvalidArgument("serve needs an ngram:<model-file> backend");
            auto model = std::make_shared<const NgramModel>(NgramModel::load(serve_backend.substr(6)));
            log_backend(err, model->info());
            ScoreServer server(model);
            const int port = server.bind(serve_host, serve_port);
            out << "listening on http://" << serve_host << ":" << port << std::endl;
            server.listen();
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

} // namespace fpscore
