#pragma once

#include "fpscore/fp.hpp"
#include "fpscore/types.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace fpscore {

// What a .jsonl line carries for one scored sample.
struct TokenRecord {
    std::string surface;
    double fp = 0.0;
    std::int64_t rank = 0;
    double entropy_nats = 0.0;
};

struct SampleRecord {
    std::string sample_id;
    std::int64_t k = 0;
    double fp_s = 0.0;
    std::string backend_name;
    std::string backend_fingerprint;
    std::vector<TokenRecord> tokens;
};

SampleRecord to_record(const SampleScore& sample);

// {"sample_id","k","fp_s","backend":{"name","fingerprint"},"tokens":[{"surface","fp","rank","entropy_nats"}]}
// Fixed key order, reals printed with 9 significant digits.
std::string to_jsonl_line(const SampleRecord& record);
SampleRecord parse_jsonl_line(const std::string& line);

void emit_jsonl(const std::vector<SampleScore>& samples, const std::filesystem::path& path);
std::vector<SampleRecord> read_jsonl(const std::filesystem::path& path);

// One (generator, discriminator) cell of the Fp summary table.
struct FpCell {
    std::string generator;
    std::string discriminator;
    FpSummary generated;
    FpSummary gold;
    std::string backend_fingerprint;
};

// Rows are generators, column pairs (Fp_gen, Fp_gold) per discriminator, both
// ordered by label; cells read "mean (std)". A leading comment line lists the
// discriminator fingerprints.
std::string fp_table_csv(const std::vector<FpCell>& cells);
void emit_fp_table(const std::vector<FpCell>& cells, const std::filesystem::path& path);

enum class FpBucket { green, yellow, orange, red };

// Left-closed quartile buckets: [0,.25) green, [.25,.5) yellow, [.5,.75) orange, [.75,1] red.
FpBucket fp_bucket(double fp);
std::string_view to_string(FpBucket bucket);

std::string heatmap_html(const SampleRecord& sample);
void emit_heatmap(const SampleScore& sample, const std::filesystem::path& path);
void emit_heatmap(const SampleRecord& sample, const std::filesystem::path& path);

void write_text_file(const std::filesystem::path& path, const std::string& content);

} // namespace fpscore
