#include "fpscore/naturalness.hpp"

#include "fpscore/error.hpp"
#include "fpscore/fp.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace fpscore {

namespace {

constexpr double kEdge = 1e-12;

void check_fp(double fp) {
    if (!(fp > 0.0 && fp <= 1.0)) throw InvalidArgument("fp value out of (0,1]");
}

void check_fps(std::span<const double> fps) {
    for (double v : fps) check_fp(v);
}

double clamp_open(double x) { return std::clamp(x, kEdge, 1.0 - kEdge); }

struct Moments {
    double mean = 0.0;
    double stdev = 0.0;
};

Moments moments(std::span<const double> v) {
    const FpSummary s = summarize(v);
    return {s.mean, s.stdev};
}

void fill_moments(CalibrationMeta& meta, std::span<const double> natural, std::span<const double> synthetic) {
    const Moments n = moments(natural);
    const Moments s = moments(synthetic);
    meta.n_natural = static_cast<std::int64_t>(natural.size());
    meta.n_synthetic = static_cast<std::int64_t>(synthetic.size());
    meta.mean_natural = n.mean;
    meta.stdev_natural = n.stdev;
    meta.mean_synthetic = s.mean;
    meta.stdev_synthetic = s.stdev;
}

std::vector<double> candidate_thresholds(std::span<const double> natural, std::span<const double> synthetic) {
    std::vector<double> pooled(natural.begin(), natural.end());
    pooled.insert(pooled.end(), synthetic.begin(), synthetic.end());
    std::sort(pooled.begin(), pooled.end());
    std::vector<double> out;
    out.reserve(pooled.size());
    for (std::size_t i = 0; i + 1 < pooled.size(); ++i) out.push_back(clamp_open(0.5 * (pooled[i] + pooled[i + 1])));
    return out;
}

// errors of classify_single(., t) against the labels: natural >= t, synthetic < t
std::pair<std::int64_t, std::int64_t> split_errors(const std::vector<double>& nat_sorted,
                                                   const std::vector<double>& syn_sorted, double t) {
    const auto nat_h = std::lower_bound(nat_sorted.begin(), nat_sorted.end(), t) - nat_sorted.begin();
    const auto syn_h = std::lower_bound(syn_sorted.begin(), syn_sorted.end(), t) - syn_sorted.begin();
    return {static_cast<std::int64_t>(nat_sorted.size()) - nat_h, syn_h};
}

} // namespace

ClassLabel classify_single(double fp_s, double fp_t) {
    check_fp(fp_s);
    if (!(fp_t > 0.0 && fp_t < 1.0)) throw InvalidArgument("threshold fp_t must lie in (0,1)");
    return fp_s < fp_t ? ClassLabel::h : ClassLabel::m;
}

ClassLabel classify_dual(double fp_s, double fp_l, double fp_r) {
    check_fp(fp_s);
    if (fp_l > fp_r) throw InvalidArgument("fp_l > fp_r");
    if (!(fp_l > 0.0 && fp_r < 1.0)) throw InvalidArgument("thresholds fp_l, fp_r must lie in (0,1)");
    if (fp_s < fp_l) return ClassLabel::h;
    if (fp_s <= fp_r) return ClassLabel::u;
    return ClassLabel::m;
}

ClassLabel classify(double fp_s, const ThresholdConfig& t) {
    return t.mode == ThresholdMode::single ? classify_single(fp_s, t.fp_t) : classify_dual(fp_s, t.fp_l, t.fp_r);
}

HmScores h_score_two_class(std::int64_t n_h, std::int64_t n_m) {
    if (n_h < 0 || n_m < 0) throw InvalidArgument("class counts must be non-negative");
    if (n_h + n_m == 0) throw InvalidArgument("no classified samples");
    const double h = static_cast<double>(n_h) / static_cast<double>(n_h + n_m);
    return {h, 1.0 - h};
}

HmScores h_score_three_class(std::int64_t n_h, std::int64_t n_m, std::int64_t n_u) {
    if (n_h < 0 || n_m < 0 || n_u < 0) throw InvalidArgument("class counts must be non-negative");
    const std::int64_t n = n_h + n_m + n_u;
    if (n == 0) throw InvalidArgument("no classified samples");
    if (n_u == 0) return h_score_two_class(n_h, n_m); // exact reduction, m = 1 - h
    return {static_cast<double>(n_h) / static_cast<double>(n), static_cast<double>(n_m) / static_cast<double>(n)};
}

ThresholdConfig calibrate_single(std::span<const double> natural, std::span<const double> synthetic, ClassWeights weights) {
    if (natural.empty() || synthetic.empty()) throw InvalidArgument("calibration needs natural and synthetic samples");
    if (!(weights.natural > 0.0 && weights.synthetic > 0.0)) throw InvalidArgument("class weights must be positive");
    check_fps(natural);
    check_fps(synthetic);

    std::vector<double> nat(natural.begin(), natural.end());
    std::vector<double> syn(synthetic.begin(), synthetic.end());
    std::sort(nat.begin(), nat.end());
    std::sort(syn.begin(), syn.end());

    double best_cost = HUGE_VAL;
    double best_t = 0.5;
    std::int64_t best_errors = 0;
    for (double t : candidate_thresholds(nat, syn)) {
        const auto [nat_err, syn_err] = split_errors(nat, syn, t);
        const double cost = weights.natural * static_cast<double>(nat_err) + weights.synthetic * static_cast<double>(syn_err);
        if (cost < best_cost) {
            best_cost = cost;
            best_t = t;
            best_errors = nat_err + syn_err;
        }
    }

    ThresholdConfig cfg = ThresholdConfig::single(best_t);
    fill_moments(cfg.calibration_meta, natural, synthetic);
    cfg.calibration_meta.calibration_errors = best_errors;
    cfg.calibration_meta.calibration_accuracy =
        1.0 - static_cast<double>(best_errors) / static_cast<double>(natural.size() + synthetic.size());
    return cfg;
}

ThresholdConfig calibrate_dual(std::span<const double> natural, std::span<const double> synthetic, double c) {
    if (natural.size() < 2 || synthetic.size() < 2) throw InvalidArgument("dual calibration needs at least 2 samples per population");
    if (!(c > 0.0) || !std::isfinite(c)) throw InvalidArgument("spread multiplier c must be > 0");
    check_fps(natural);
    check_fps(synthetic);

    CalibrationMeta meta;
    fill_moments(meta, natural, synthetic);
    meta.c = c;

    const double left = meta.mean_natural + c * meta.stdev_natural;
    const double right = meta.mean_synthetic - c * meta.stdev_synthetic;

    ThresholdConfig cfg;
    if (left > right) {
        cfg.mode = ThresholdMode::single;
        cfg.fp_t = clamp_open(0.5 * (left + right));
        meta.degenerate_overlap = true;
    } else {
        cfg.mode = ThresholdMode::dual;
        cfg.fp_l = clamp_open(left);
        cfg.fp_r = clamp_open(right);
    }
    cfg.validate();

    std::int64_t errors = 0;
    for (double v : natural) errors += classify(v, cfg) != ClassLabel::h;
    for (double v : synthetic) errors += classify(v, cfg) != ClassLabel::m;
    meta.calibration_errors = errors;
    meta.calibration_accuracy = 1.0 - static_cast<double>(errors) / static_cast<double>(natural.size() + synthetic.size());
    cfg.calibration_meta = meta;
    return cfg;
}

CorpusResult evaluate_system(std::span<const double> sample_fps, const ThresholdConfig& thresholds) {
    if (sample_fps.empty()) throw InvalidArgument("no samples to evaluate");
    thresholds.validate();
    CorpusResult r;
    r.mode = thresholds.mode;
    r.n = static_cast<std::int64_t>(sample_fps.size());
    for (double fp : sample_fps) {
        switch (classify(fp, thresholds)) {
        case ClassLabel::h: ++r.n_h; break;
        case ClassLabel::m: ++r.n_m; break;
        case ClassLabel::u: ++r.n_u; break;
        }
    }
    const HmScores s = thresholds.mode == ThresholdMode::single ? h_score_two_class(r.n_h, r.n_m)
                                                                : h_score_three_class(r.n_h, r.n_m, r.n_u);
    r.h_score = s.h;
    r.m_score = s.m;
    // sorted so the mean does not depend on sample order
    std::vector<double> sorted(sample_fps.begin(), sample_fps.end());
    std::sort(sorted.begin(), sorted.end());
    r.mean_fp = summarize(sorted).mean;
    return r;
}

std::vector<RocPoint> roc_sweep(std::span<const double> natural, std::span<const double> synthetic) {
    if (natural.empty() || synthetic.empty()) throw InvalidArgument("ROC sweep needs natural and synthetic samples");
    check_fps(natural);
    check_fps(synthetic);
    std::vector<double> nat(natural.begin(), natural.end());
    std::vector<double> syn(synthetic.begin(), synthetic.end());
    std::sort(nat.begin(), nat.end());
    std::sort(syn.begin(), syn.end());

    std::vector<RocPoint> out;
    for (double t : candidate_thresholds(nat, syn)) {
        if (!out.empty() && out.back().threshold == t) continue;
        const auto [nat_err, syn_err] = split_errors(nat, syn, t);
        RocPoint p;
        p.threshold = t;
        p.true_h_rate = static_cast<double>(static_cast<std::int64_t>(nat.size()) - nat_err) / static_cast<double>(nat.size());
        p.false_h_rate = static_cast<double>(syn_err) / static_cast<double>(syn.size());
        p.errors = nat_err + syn_err;
        out.push_back(p);
    }
    return out;
}

std::vector<std::string> collapse_repeated_runs(std::span<const std::string> tokens) {
    std::vector<std::string> out;
    for (const auto& t : tokens)
        if (out.empty() || out.back() != t) out.push_back(t);
    return out;
}

std::string thresholds_to_json(const ThresholdConfig& cfg) {
    nlohmann::ordered_json j;
    j["mode"] = std::string(to_string(cfg.mode));
    if (cfg.mode == ThresholdMode::single) {
        j["fp_t"] = cfg.fp_t;
    } else {
        j["fp_l"] = cfg.fp_l;
        j["fp_r"] = cfg.fp_r;
    }
    const auto& m = cfg.calibration_meta;
    nlohmann::ordered_json meta;
    meta["backend_fingerprint"] = m.backend_fingerprint;
    meta["n_natural"] = m.n_natural;
    meta["n_synthetic"] = m.n_synthetic;
    meta["mean_natural"] = m.mean_natural;
    meta["stdev_natural"] = m.stdev_natural;
    meta["mean_synthetic"] = m.mean_synthetic;
    meta["stdev_synthetic"] = m.stdev_synthetic;
    meta["calibration_errors"] = m.calibration_errors;
    meta["calibration_accuracy"] = m.calibration_accuracy;
    meta["c"] = m.c;
    meta["degenerate_overlap"] = m.degenerate_overlap;
    j["calibration_meta"] = meta;
    return j.dump(2) + "\n";
}

ThresholdConfig thresholds_from_json(const std::string& text) {
    try {
        const auto j = nlohmann::json::parse(text);
        ThresholdConfig cfg;
        cfg.mode = threshold_mode_from_string(j.at("mode").get<std::string>());
        if (cfg.mode == ThresholdMode::single) {
            cfg.fp_t = j.at("fp_t").get<double>();
        } else {
            cfg.fp_l = j.at("fp_l").get<double>();
            cfg.fp_r = j.at("fp_r").get<double>();
        }
        if (j.contains("calibration_meta")) {
            const auto& m = j["calibration_meta"];
            auto& meta = cfg.calibration_meta;
            meta.backend_fingerprint = m.value("backend_fingerprint", "");
            meta.n_natural = m.value("n_natural", std::int64_t{0});
            meta.n_synthetic = m.value("n_synthetic", std::int64_t{0});
            meta.mean_natural = m.value("mean_natural", 0.0);
            meta.stdev_natural = m.value("stdev_natural", 0.0);
            meta.mean_synthetic = m.value("mean_synthetic", 0.0);
            meta.stdev_synthetic = m.value("stdev_synthetic", 0.0);
            meta.calibration_errors = m.value("calibration_errors", std::int64_t{0});
            meta.calibration_accuracy = m.value("calibration_accuracy", 0.0);
            meta.c = m.value("c", 0.0);
            meta.degenerate_overlap = m.value("degenerate_overlap", false);
        }
        cfg.validate();
        return cfg;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad threshold file: ") + e.what());
    }
}

void save_thresholds(const ThresholdConfig& config, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << thresholds_to_json(config);
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

ThresholdConfig load_thresholds(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return thresholds_from_json(ss.str());
}

} // namespace fpscore
