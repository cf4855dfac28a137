#include "fpscore/cli.hpp"
#include "fpscore/error.hpp"
#include "fpscore/experiment.hpp"
#include "fpscore/fp.hpp"
#include "fpscore/naturalness.hpp"
#include "fpscore/ngram.hpp"
#include "fpscore/remote.hpp"
#include "fpscore/report.hpp"
#include "fpscore/scorer.hpp"
#include "fpscore/stats.hpp"
#include "fpscore/tokenizer.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

namespace py = pybind11;
using namespace fpscore;

namespace {

std::vector<std::vector<TokenId>> encode_lines(const std::vector<std::string>& lines, std::int64_t min_count, Vocabulary& vocab) {
    std::vector<std::vector<std::string>> toks;
    for (const auto& l : lines) toks.push_back(tokenize(l));
    vocab = build_vocab(toks, min_count);
    std::vector<std::vector<TokenId>> ids;
    for (const auto& t : toks) ids.push_back(encode(t, vocab));
    return ids;
}

std::shared_ptr<const NgramModel> train_lines(const std::vector<std::string>& lines, int order, double lambda, double alpha,
                                              std::int64_t min_count) {
    Vocabulary vocab;
    auto ids = encode_lines(lines, min_count, vocab);
    return std::make_shared<const NgramModel>(NgramModel::train(ids, std::move(vocab), NgramParams{order, lambda, alpha}));
}

py::dict info_dict(const ScorerInfo& i) {
    py::dict d;
    d["name"] = i.backend_name;
    d["vocab_size"] = i.vocab_size;
    d["fingerprint"] = i.model_fingerprint;
    return d;
}

} // namespace

PYBIND11_MODULE(_fpscore, m) {
    m.doc() = "Fp (fraction of probabilities) text naturalness toolkit";

    static py::exception<Error> error(m, "Error");
    py::register_exception<InvalidArgument>(m, "InvalidArgument", error.ptr());
    py::register_exception<IoError>(m, "IoError", error.ptr());
    py::register_exception<FormatError>(m, "FormatError", error.ptr());
    py::register_exception<RemoteError>(m, "RemoteError", error.ptr());

    m.def("tokenize", [](const std::string& text) { return tokenize(text); }, py::arg("text"));

    py::class_<TokenScore>(m, "TokenScore")
        .def_readonly("p_actual", &TokenScore::p_actual)
        .def_readonly("p_max", &TokenScore::p_max)
        .def_readonly("rank", &TokenScore::rank)
        .def_readonly("entropy_nats", &TokenScore::entropy_nats)
        .def_readonly("fp", &TokenScore::fp)
        .def("__repr__", [](const TokenScore& t) {
            std::ostringstream os;
            os << "TokenScore(fp=" << t.fp << ", rank=" << t.rank << ", entropy_nats=" << t.entropy_nats << ")";
            return os.str();
        });

    py::class_<SampleScore>(m, "SampleScore")
        .def_readonly("sample_id", &SampleScore::sample_id)
        .def_readonly("k", &SampleScore::k)
        .def_readonly("tokens", &SampleScore::tokens)
        .def_readonly("token_scores", &SampleScore::token_scores)
        .def_readonly("fp_s", &SampleScore::fp_s)
        .def_property_readonly("backend", [](const SampleScore& s) { return info_dict(s.backend); })
        .def("violations", [](const SampleScore& s) { return validate_sample_score(s); });

    py::class_<NgramModel, std::shared_ptr<NgramModel>>(m, "NgramModel")
        .def_static(
            "train",
            [](const std::vector<std::string>& lines, int order, double lambda, double alpha, std::int64_t min_count) {
                return std::const_pointer_cast<NgramModel>(train_lines(lines, order, lambda, alpha, min_count));
            },
            py::arg("lines"), py::arg("order") = 3, py::arg("lambda_") = 0.75, py::arg("alpha") = 1.0, py::arg("min_count") = 1,
            "Train on raw text lines (one sample per line).")
        .def_static("load", [](const std::filesystem::path& p) { return std::make_shared<NgramModel>(NgramModel::load(p)); })
        .def("save", &NgramModel::save, py::arg("path"))
        .def_property_readonly("order", &NgramModel::order)
        .def_property_readonly("fingerprint", &NgramModel::fingerprint)
        .def_property_readonly("words", [](const NgramModel& mdl) { return mdl.vocab().words(); })
        .def("info", [](const NgramModel& mdl) { return info_dict(mdl.info()); })
        .def(
            "next_distribution",
            [](const NgramModel& mdl, const std::vector<std::string>& context) {
                return mdl.next_distribution(encode(context, mdl.vocab()));
            },
            py::arg("context"), "Probability of every vocabulary word after the given context words.")
        .def(
            "generate",
            [](const NgramModel& mdl, std::uint64_t seed, std::size_t k, std::size_t max_len, const std::vector<std::string>& prompt,
               bool suppress_eos) {
                const auto ids = generate_topk(mdl, seed, k, max_len, encode(prompt, mdl.vocab()), GenerateOptions{suppress_eos});
                std::vector<std::string> out;
                for (TokenId id : ids) out.push_back(mdl.vocab().surface(id));
                return out;
            },
            py::arg("seed"), py::arg("k") = 5, py::arg("max_len") = 30, py::arg("prompt") = std::vector<std::string>{},
            py::arg("suppress_eos") = false);

    py::class_<Scorer>(m, "Scorer")
        .def("info", [](Scorer& s) { return info_dict(s.info()); })
        .def(
            "score",
            [](Scorer& s, const std::vector<std::string>& tokens, const std::string& sample_id) {
                return score_sample(s, tokens, sample_id);
            },
            py::arg("tokens"), py::arg("sample_id") = "", py::call_guard<py::gil_scoped_release>())
        .def(
            "score_many",
            [](Scorer& s, const std::vector<std::vector<std::string>>& texts, std::size_t min_tokens) {
                std::vector<SampleInput> in;
                for (std::size_t i = 0; i < texts.size(); ++i) in.push_back({std::to_string(i), texts[i]});
                return score_samples(s, in, min_tokens);
            },
            py::arg("texts"), py::arg("min_tokens") = 0, py::call_guard<py::gil_scoped_release>());

    py::class_<LocalScorer, Scorer>(m, "LocalScorer")
        .def(py::init([](std::shared_ptr<NgramModel> model, unsigned workers) {
                 return std::make_unique<LocalScorer>(std::const_pointer_cast<const NgramModel>(model), workers);
             }),
             py::arg("model"), py::arg("workers") = 1);

    py::class_<RemoteScorer, Scorer>(m, "RemoteScorer")
        .def(py::init([](const std::string& url, std::size_t batch_size, unsigned max_in_flight, long timeout_secs) {
                 return RemoteScorer::connect(url, RemoteOptions{batch_size, max_in_flight, std::chrono::seconds(timeout_secs)});
             }),
             py::arg("url"), py::arg("batch_size") = 32, py::arg("max_in_flight") = 8, py::arg("timeout_secs") = 30)
        .def_static(
            "replay",
            [](const std::filesystem::path& dir) { return std::make_unique<RemoteScorer>(std::make_shared<ReplayTransport>(dir)); },
            py::arg("fixture_dir"), "Client answering from recorded protocol fixtures.");

    m.def("token_fp", &token_fp, py::arg("p_actual"), py::arg("p_max"));
    m.def("summarize", [](const std::vector<double>& v) {
        const auto s = summarize(v);
        py::dict d;
        d["count"] = s.count;
        d["mean"] = s.mean;
        d["stdev"] = s.stdev;
        d["min"] = s.min;
        d["max"] = s.max;
        return d;
    });

    py::enum_<ClassLabel>(m, "ClassLabel").value("h", ClassLabel::h).value("m", ClassLabel::m).value("u", ClassLabel::u);

    py::class_<ThresholdConfig>(m, "ThresholdConfig")
        .def_static("single", &ThresholdConfig::single, py::arg("fp_t"))
        .def_static("dual", &ThresholdConfig::dual, py::arg("fp_l"), py::arg("fp_r"))
        .def_static("load", &load_thresholds, py::arg("path"))
        .def_static("from_json", &thresholds_from_json)
        .def("save", [](const ThresholdConfig& c, const std::filesystem::path& p) { save_thresholds(c, p); })
        .def("to_json", &thresholds_to_json)
        .def_property_readonly("mode", [](const ThresholdConfig& c) { return std::string(to_string(c.mode)); })
        .def_readonly("fp_t", &ThresholdConfig::fp_t)
        .def_readonly("fp_l", &ThresholdConfig::fp_l)
        .def_readonly("fp_r", &ThresholdConfig::fp_r)
        .def_property_readonly("calibration_errors", [](const ThresholdConfig& c) { return c.calibration_meta.calibration_errors; })
        .def_property_readonly("calibration_accuracy",
                               [](const ThresholdConfig& c) { return c.calibration_meta.calibration_accuracy; })
        .def_property_readonly("degenerate_overlap", [](const ThresholdConfig& c) { return c.calibration_meta.degenerate_overlap; });

    m.def("classify", &classify, py::arg("fp_s"), py::arg("thresholds"));
    m.def("h_score_two_class", [](std::int64_t h, std::int64_t mm) {
        const auto s = h_score_two_class(h, mm);
        return py::make_tuple(s.h, s.m);
    });
    m.def("h_score_three_class", [](std::int64_t h, std::int64_t mm, std::int64_t u) {
        const auto s = h_score_three_class(h, mm, u);
        return py::make_tuple(s.h, s.m);
    });
    m.def(
        "calibrate_single",
        [](const std::vector<double>& nat, const std::vector<double>& syn, double wn, double ws) {
            return calibrate_single(nat, syn, ClassWeights{wn, ws});
        },
        py::arg("natural"), py::arg("synthetic"), py::arg("weight_natural") = 1.0, py::arg("weight_synthetic") = 1.0);
    m.def(
        "calibrate_dual", [](const std::vector<double>& nat, const std::vector<double>& syn, double c) { return calibrate_dual(nat, syn, c); },
        py::arg("natural"), py::arg("synthetic"), py::arg("c") = 1.0);
    m.def(
        "evaluate_system",
        [](const std::vector<double>& fps, const ThresholdConfig& t) {
            const auto r = evaluate_system(fps, t);
            py::dict d;
            d["mode"] = std::string(to_string(r.mode));
            d["n"] = r.n;
            d["n_h"] = r.n_h;
            d["n_m"] = r.n_m;
            d["n_u"] = r.n_u;
            d["h_score"] = r.h_score;
            d["m_score"] = r.m_score;
            d["mean_fp"] = r.mean_fp;
            return d;
        },
        py::arg("sample_fps"), py::arg("thresholds"));

    m.def(
        "paired_compare",
        [](const std::vector<double>& gen, const std::vector<double>& gold, std::uint64_t seed, unsigned workers) {
            PairedComparison c;
            {
                py::gil_scoped_release release;
                c = paired_compare(gen, gold, seed, PermutationOptions{20, 20000, workers});
            }
            py::dict d;
            d["n_pairs"] = c.n_pairs;
            d["frac_greater"] = c.frac_greater;
            d["mean_gen"] = c.mean_gen;
            d["mean_gold"] = c.mean_gold;
            d["mean_diff"] = c.mean_diff;
            d["rel_diff_pct"] = c.rel_diff_pct;
            d["p_value"] = c.p_value;
            d["significant"] = c.significant;
            d["exact"] = c.test_meta.exact;
            d["ties"] = c.test_meta.ties;
            d["formatted"] = format_difference(c);
            return d;
        },
        py::arg("generated"), py::arg("gold"), py::arg("seed") = 1, py::arg("workers") = 1);

    m.def("emit_jsonl", &emit_jsonl, py::arg("samples"), py::arg("path"));
    m.def("heatmap_html", [](const SampleScore& s) { return heatmap_html(to_record(s)); });

    m.def(
        "run_study",
        [](const std::filesystem::path& config, const std::filesystem::path& out_dir, unsigned workers) {
            StudyResult r;
            {
                py::gil_scoped_release release;
                r = run_size_study(StudyConfig::load(config), workers);
                emit_study(r, out_dir);
            }
            py::list cells;
            for (const auto& c : r.cells) {
                py::dict d;
                d["generator"] = c.generator;
                d["discriminator"] = c.discriminator;
                d["mean_synthetic"] = c.synthetic.mean;
                d["mean_natural"] = c.natural.mean;
                d["frac_greater"] = c.comparison.frac_greater;
                d["p_value"] = c.comparison.p_value;
                cells.append(d);
            }
            return cells;
        },
        py::arg("config"), py::arg("out_dir"), py::arg("workers") = 1);

    m.def(
        "cli",
        [](const std::vector<std::string>& args) {
            std::vector<std::string> full{"fpscore"};
            full.insert(full.end(), args.begin(), args.end());
            std::vector<const char*> argv;
            for (const auto& a : full) argv.push_back(a.c_str());
            std::ostringstream out, err;
            int code;
            {
                py::gil_scoped_release release;
                code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Run the command-line tool in-process; returns (exit_code, stdout, stderr).");
}
