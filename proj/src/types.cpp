#include "fpscore/types.hpp"

#include "fpscore/error.hpp"

#include <cmath>
#include <sstream>

namespace fpscore {

namespace {

constexpr double kRelTol = 1e-12;
constexpr double kEntropySlack = 1e-9;

bool close(double a, double b, double tol = kRelTol) {
    return std::abs(a - b) <= tol * std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

} // namespace

std::string_view to_string(ClassLabel label) {
    switch (label) {
    case ClassLabel::h: return "h";
    case ClassLabel::m: return "m";
    case ClassLabel::u: return "u";
    }
    return "?";
}

std::string_view to_string(ThresholdMode mode) {
    return mode == ThresholdMode::single ? "single" : "dual";
}

ThresholdMode threshold_mode_from_string(std::string_view s) {
    if (s == "single") return ThresholdMode::single;
    if (s == "dual") return ThresholdMode::dual;
    throw InvalidArgument("unknown threshold mode '" + std::string(s) + "'");
}

ThresholdConfig ThresholdConfig::single(double fp_t) {
    ThresholdConfig cfg;
    cfg.mode = ThresholdMode::single;
    cfg.fp_t = fp_t;
    cfg.validate();
    return cfg;
}

ThresholdConfig ThresholdConfig::dual(double fp_l, double fp_r) {
    ThresholdConfig cfg;
    cfg.mode = ThresholdMode::dual;
    cfg.fp_l = fp_l;
    cfg.fp_r = fp_r;
    cfg.validate();
    return cfg;
}

void ThresholdConfig::validate() const {
    auto inside = [](double x) { return x > 0.0 && x < 1.0; };
    if (mode == ThresholdMode::single) {
        if (!inside(fp_t)) throw InvalidArgument("threshold fp_t must lie in (0,1)");
        return;
    }
    if (!inside(fp_l) || !inside(fp_r)) throw InvalidArgument("thresholds fp_l, fp_r must lie in (0,1)");
    if (fp_l > fp_r) throw InvalidArgument("fp_l > fp_r");
}

std::vector<std::string> validate_sample_score(const SampleScore& score) {
    std::vector<std::string> out;
    auto add = [&](std::size_t i, const std::string& what) {
        std::ostringstream os;
        os << "token " << i << ": " << what;
        out.push_back(os.str());
    };

    if (score.k < 1) out.emplace_back("k must be >= 1");
    if (static_cast<std::size_t>(score.k) != score.token_scores.size())
        out.emplace_back("k != number of token scores");
    if (!score.tokens.empty() && score.tokens.size() != score.token_scores.size())
        out.emplace_back("token surfaces and scores differ in length");

    const double entropy_bound =
        score.backend.vocab_size > 0 ? std::log(static_cast<double>(score.backend.vocab_size)) : HUGE_VAL;

    double sum = 0.0;
    for (std::size_t i = 0; i < score.token_scores.size(); ++i) {
        const TokenScore& t = score.token_scores[i];
        sum += t.fp;
        if (!(t.p_actual > 0.0 && t.p_actual <= 1.0)) add(i, "p_actual out of (0,1]");
        if (!(t.p_max > 0.0 && t.p_max <= 1.0)) add(i, "p_max out of (0,1]");
        if (t.p_actual > t.p_max) add(i, "p_actual > p_max");
        if (!(t.fp > 0.0 && t.fp <= 1.0)) add(i, "fp out of (0,1]");
        if (t.p_max > 0.0 && !close(t.fp, t.p_actual / t.p_max)) add(i, "fp != p_actual / p_max");
        if (t.rank < 1) add(i, "rank < 1");
        if ((t.rank == 1) != (t.p_actual == t.p_max)) add(i, "rank == 1 does not match p_actual == p_max");
        if (!(t.entropy_nats >= 0.0)) add(i, "entropy negative");
        if (t.entropy_nats > entropy_bound + kEntropySlack) add(i, "entropy exceeds ln(vocab size)");
    }

    if (!score.token_scores.empty()) {
        const double mean = sum / static_cast<double>(score.token_scores.size());
        if (!close(mean, score.fp_s)) out.emplace_back("fp_s != mean of token fp values");
    }
    if (!(score.fp_s > 0.0 && score.fp_s <= 1.0)) out.emplace_back("fp_s out of (0,1]");
    return out;
}

} // namespace fpscore
