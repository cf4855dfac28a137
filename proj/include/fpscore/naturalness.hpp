#pragma once

#include "fpscore/types.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace fpscore {

// h when fp_s < fp_t, m otherwise (a sample exactly on the threshold is m).
ClassLabel classify_single(double fp_s, double fp_t);

// h when fp_s < fp_l, u when fp_l <= fp_s <= fp_r, m when fp_s > fp_r.
ClassLabel classify_dual(double fp_s, double fp_l, double fp_r);

ClassLabel classify(double fp_s, const ThresholdConfig& thresholds);

struct HmScores {
    double h = 0.0;
    double m = 0.0;

    friend bool operator==(const HmScores&, const HmScores&) = default;
};

// h = n_h / (n_h + n_m), m = 1 - h.
HmScores h_score_two_class(std::int64_t n_h, std::int64_t n_m);

// h = n_h / n, m = n_m / n with n = n_h + n_m + n_u; h + m <= 1.
HmScores h_score_three_class(std::int64_t n_h, std::int64_t n_m, std::int64_t n_u);

struct ClassWeights {
    double natural = 1.0;
    double synthetic = 1.0;
};

// Picks the single threshold among midpoints of adjacent pooled values that
// minimises (weighted) misclassifications; ties go to the smallest threshold.
ThresholdConfig calibrate_single(std::span<const double> natural_fps, std::span<const double> synthetic_fps,
                                 ClassWeights weights = {});

// fp_l = mean(natural) + c * stdev(natural), fp_r = mean(synthetic) - c * stdev(synthetic).
// Overlapping boundaries collapse into a single threshold at their midpoint,
// flagged as degenerate_overlap. Boundaries are clamped into (0,1).
ThresholdConfig calibrate_dual(std::span<const double> natural_fps, std::span<const double> synthetic_fps, double c = 1.0);

CorpusResult evaluate_system(std::span<const double> sample_fps, const ThresholdConfig& thresholds);

// One point of a threshold sweep over single-threshold classification.
struct RocPoint {
    double threshold = 0.0;
    double true_h_rate = 0.0;  // natural samples classified h
    double false_h_rate = 0.0; // synthetic samples classified h
    std::int64_t errors = 0;
};

// Sweep over the same candidate thresholds calibrate_single considers.
std::vector<RocPoint> roc_sweep(std::span<const double> natural_fps, std::span<const double> synthetic_fps);

// Replaces each run of identical consecutive tokens by one occurrence.
std::vector<std::string> collapse_repeated_runs(std::span<const std::string> tokens);

void save_thresholds(const ThresholdConfig& config, const std::filesystem::path& path);
ThresholdConfig load_thresholds(const std::filesystem::path& path);
std::string thresholds_to_json(const ThresholdConfig& config);
ThresholdConfig thresholds_from_json(const std::string& text);

} // namespace fpscore
