#pragma once

#include <functional>
#include <string>
#include <vector>

#include "arithlab/extract.hpp"
#include "arithlab/formats.hpp"
#include "arithlab/model.hpp"
#include "arithlab/vocab.hpp"

namespace arithlab {

struct AccuracyGrid {
    std::vector<int> m1_values;
    std::vector<int> m2_values;
    std::vector<double> rates;  // m1-major
    int n_samples = 0;
    uint64_t seed = 0;
    std::string format_id;

    double& at(size_t i1, size_t i2) { return rates[i1 * m2_values.size() + i2]; }
    double at(size_t i1, size_t i2) const { return rates[i1 * m2_values.size() + i2]; }
    double mean() const;
};

// Produces the full token sequence (prompt + completion) for one eval item.
// The model-backed generator runs greedy decoding; the oracle stub replays
// the ground-truth sample and is used to self-test the harness.
using GenerateFn =
    std::function<std::vector<int32_t>(const std::vector<int32_t>& prompt, const Sample& truth)>;

GenerateFn model_generator(const ParameterSet<float>& params, const ModelConfig& cfg,
                           const TagTable* tag);
GenerateFn oracle_generator(const Vocabulary& vocab);

// Exact-match rate per (m1, m2) cell; operands are drawn uniformly with
// exactly those digit counts from per-cell derived seeds (seed, m1, m2).
AccuracyGrid eval_grid(const GenerateFn& gen, const Vocabulary& vocab, const MulFormat& fmt, int m1_lo,
                       int m1_hi, int m2_lo, int m2_hi, int n_samples, uint64_t seed);

// Convenience overload mirroring the module contract: greedy generation from
// a trained model, one fresh tag table per evaluation run.
AccuracyGrid eval_grid(const ParameterSet<float>& params, const ModelConfig& cfg, const MulFormat& fmt,
                       int m1_lo, int m1_hi, int m2_lo, int m2_hi, int n_samples, uint64_t seed,
                       uint64_t tag_seed = 0);

enum class RevRegime { Regular, Repetitive };

struct LengthCurve {
    std::vector<int> digits;
    std::vector<double> rates;
    int n_samples = 0;
    uint64_t seed = 0;
    std::string format_id;
};

// Both operands share the digit count n per entry (test law: exactly n
// digits). For reversal the repetitive regime draws repeated-digit inputs.
LengthCurve eval_lengths(const GenerateFn& gen, const Vocabulary& vocab, const FormatSpec& fmt,
                         const std::vector<int>& digit_list, int n_samples, uint64_t seed,
                         RevRegime regime = RevRegime::Regular);

LengthCurve eval_lengths(const ParameterSet<float>& params, const ModelConfig& cfg,
                         const FormatSpec& fmt, const std::vector<int>& digit_list, int n_samples,
                         uint64_t seed, uint64_t tag_seed = 0, RevRegime regime = RevRegime::Regular);

// Fixed question prompt; rate = extracted teacher answer == a + b.
LengthCurve eval_dialogue(const GenerateFn& gen, const Vocabulary& vocab,
                          const std::vector<int>& digit_list, int n_samples, uint64_t seed);

LengthCurve eval_dialogue(const ParameterSet<float>& params, const ModelConfig& cfg,
                          const Vocabulary& vocab, const std::vector<int>& digit_list, int n_samples,
                          uint64_t seed, uint64_t tag_seed = 0);

// First row "m1\m2,<m2 values>", one row per m1 with 2-decimal rates, then a
// provenance comment. A full-precision sidecar goes to `path` with ".full"
// inserted before the extension.
void write_grid_csv(const std::string& path, const AccuracyGrid& grid, uint64_t config_hash);
void write_curve_csv(const std::string& path, const LengthCurve& curve, uint64_t config_hash);

struct GridFile {
    std::vector<int> m1_values;
    std::vector<int> m2_values;
    std::vector<double> rates;
    std::string provenance;  // trailing comment line, when present
};

// Throws std::runtime_error with the line number on malformed input.
GridFile read_grid_csv(const std::string& path);

}  // namespace arithlab
