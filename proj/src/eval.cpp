#include "arithlab/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "arithlab/decimal.hpp"
#include "arithlab/dialogue.hpp"

namespace arithlab {

double AccuracyGrid::mean() const {
    double acc = 0.0;
    for (double r : rates) acc += r;
    return rates.empty() ? 0.0 : acc / static_cast<double>(rates.size());
}

GenerateFn model_generator(const ParameterSet<float>& params, const ModelConfig& cfg,
                           const TagTable* tag) {
    return [&params, cfg, tag](const std::vector<int32_t>& prompt, const Sample& truth) {
        const int total_tokens = static_cast<int>(split_tokens(truth.text).size());
        const int expected_completion = total_tokens - truth.prompt_len + 1;  // + EOS
        const int room = cfg.n_ctx - static_cast<int>(prompt.size());
        const int max_new = std::max(1, std::min(room, expected_completion + 8));
        return generate(params, cfg, prompt, max_new, tag);
    };
}

GenerateFn oracle_generator(const Vocabulary& vocab) {
    return [&vocab](const std::vector<int32_t>&, const Sample& truth) {
        const TokenSeq seq = vocab.encode(truth.text);
        std::vector<int32_t> out;
        out.reserve(seq.ids.size() + 2);
        out.push_back(Vocabulary::kBos);
        out.insert(out.end(), seq.ids.begin(), seq.ids.end());
        out.push_back(Vocabulary::kEos);
        return out;
    };
}

namespace {

std::vector<int32_t> prompt_tokens(const Vocabulary& vocab, const Sample& s) {
    const TokenSeq seq = vocab.encode(s.text);
    std::vector<int32_t> prompt;
    prompt.reserve(static_cast<size_t>(s.prompt_len) + 1);
    prompt.push_back(Vocabulary::kBos);
    prompt.insert(prompt.end(), seq.ids.begin(), seq.ids.begin() + s.prompt_len);
    return prompt;
}

std::string decode_generated(const Vocabulary& vocab, const std::vector<int32_t>& ids) {
    std::vector<int32_t> kept;
    kept.reserve(ids.size());
    for (int32_t id : ids) {
        if (id == Vocabulary::kBos || id == Vocabulary::kEos || id == Vocabulary::kPad) continue;
        kept.push_back(id);
    }
    return vocab.decode(kept);
}

// Exact integer match of the extracted answer.
bool eval_one(const GenerateFn& gen, const Vocabulary& vocab, const FormatSpec& fmt, const Sample& truth) {
    const std::vector<int32_t> out = gen(prompt_tokens(vocab, truth), truth);
    const std::optional<std::string> got = extract_answer(fmt, decode_generated(vocab, out));
    return got && *got == truth.answer;
}

}  // namespace

AccuracyGrid eval_grid(const GenerateFn& gen, const Vocabulary& vocab, const MulFormat& fmt, int m1_lo,
                       int m1_hi, int m2_lo, int m2_hi, int n_samples, uint64_t seed) {
    if (n_samples < 1) throw std::invalid_argument("eval_grid: n_samples must be >= 1");
    AccuracyGrid grid;
    for (int m = m1_lo; m <= m1_hi; ++m) grid.m1_values.push_back(m);
    for (int m = m2_lo; m <= m2_hi; ++m) grid.m2_values.push_back(m);
    grid.rates.assign(grid.m1_values.size() * grid.m2_values.size(), 0.0);
    grid.n_samples = n_samples;
    grid.seed = seed;
    grid.format_id = "mul";

    const FormatSpec spec = fmt;
    for (size_t i1 = 0; i1 < grid.m1_values.size(); ++i1) {
        for (size_t i2 = 0; i2 < grid.m2_values.size(); ++i2) {
            const int m1 = grid.m1_values[i1], m2 = grid.m2_values[i2];
            Rng rng(derive_seed(seed, {static_cast<uint64_t>(m1), static_cast<uint64_t>(m2)}));
            int correct = 0;
            for (int s = 0; s < n_samples; ++s) {
                const std::string a = sample_value_with_digits(m1, rng);
                const std::string b = sample_value_with_digits(m2, rng);
                const Sample truth = format_multiplication(a, b, fmt);
                correct += eval_one(gen, vocab, spec, truth) ? 1 : 0;
            }
            grid.at(i1, i2) = static_cast<double>(correct) / n_samples;
        }
    }
    return grid;
}

AccuracyGrid eval_grid(const ParameterSet<float>& params, const ModelConfig& cfg, const MulFormat& fmt,
                       int m1_lo, int m1_hi, int m2_lo, int m2_hi, int n_samples, uint64_t seed,
                       uint64_t tag_seed) {
    const Vocabulary vocab = Vocabulary::build({});
    TagTable tag;
    const TagTable* tag_ptr = nullptr;
    if (cfg.pos == PosStrategy::RandomTag) {
        tag = make_tag_table(cfg, 0, tag_seed);
        tag_ptr = &tag;
    }
    return eval_grid(model_generator(params, cfg, tag_ptr), vocab, fmt, m1_lo, m1_hi, m2_lo, m2_hi,
                     n_samples, seed);
}

namespace {

Sample build_length_sample(const FormatSpec& fmt, int n, RevRegime regime, Rng& rng) {
    if (const auto* add = std::get_if<AddFormat>(&fmt)) {
        const std::string a = decimal::sample_with_digit_count(n, rng);
        const std::string b = decimal::sample_with_digit_count(n, rng);
        switch (add->variant) {
            case AddVariant::Basic: return format_addition_basic(a, b);
            case AddVariant::RandomSpace: return format_addition_random_space(a, b, add->space_p, rng);
            case AddVariant::Recursive: return format_addition_recursive(a, b, add->reverse_addends);
        }
    }
    if (std::holds_alternative<RevFormat>(fmt)) {
        const std::string x = regime == RevRegime::Repetitive ? gen_repetitive(n, rng)
                                                              : decimal::sample_with_digit_count(n, rng);
        return format_reversal(x);
    }
    if (const auto* mix = std::get_if<MixFormat>(&fmt)) {
        const std::string a = decimal::sample_with_digit_count(n, rng);
        const std::string b = decimal::sample_with_digit_count(n, rng);
        const MixSub sub{mix->random_space, mix->s_lo, mix->s_hi};
        return format_mix_addition(a, b, sub, rng);
    }
    throw std::invalid_argument("eval_lengths: unsupported format");
}

}  // namespace

LengthCurve eval_lengths(const GenerateFn& gen, const Vocabulary& vocab, const FormatSpec& fmt,
                         const std::vector<int>& digit_list, int n_samples, uint64_t seed,
                         RevRegime regime) {
    if (n_samples < 1) throw std::invalid_argument("eval_lengths: n_samples must be >= 1");
    LengthCurve curve;
    curve.digits = digit_list;
    curve.n_samples = n_samples;
    curve.seed = seed;
    curve.format_id = std::holds_alternative<RevFormat>(fmt)
                          ? (regime == RevRegime::Repetitive ? "reversal_repetitive" : "reversal")
                          : "lengths";
    for (const int n : digit_list) {
        Rng rng(derive_seed(seed, {static_cast<uint64_t>(n)}));
        int correct = 0;
        for (int s = 0; s < n_samples; ++s) {
            const Sample truth = build_length_sample(fmt, n, regime, rng);
            correct += eval_one(gen, vocab, fmt, truth) ? 1 : 0;
        }
        curve.rates.push_back(static_cast<double>(correct) / n_samples);
    }
    return curve;
}

LengthCurve eval_lengths(const ParameterSet<float>& params, const ModelConfig& cfg, const FormatSpec& fmt,
                         const std::vector<int>& digit_list, int n_samples, uint64_t seed,
                         uint64_t tag_seed, RevRegime regime) {
    const Vocabulary vocab = Vocabulary::build({});
    TagTable tag;
    const TagTable* tag_ptr = nullptr;
    if (cfg.pos == PosStrategy::RandomTag) {
        tag = make_tag_table(cfg, 0, tag_seed);
        tag_ptr = &tag;
    }
    return eval_lengths(model_generator(params, cfg, tag_ptr), vocab, fmt, digit_list, n_samples, seed,
                        regime);
}

LengthCurve eval_dialogue(const GenerateFn& gen, const Vocabulary& vocab,
                          const std::vector<int>& digit_list, int n_samples, uint64_t seed) {
    if (n_samples < 1) throw std::invalid_argument("eval_dialogue: n_samples must be >= 1");
    LengthCurve curve;
    curve.digits = digit_list;
    curve.n_samples = n_samples;
    curve.seed = seed;
    curve.format_id = "dialogue";
    const FormatSpec mix = MixFormat{};
    for (const int n : digit_list) {
        Rng rng(derive_seed(seed, {0xD1Au, static_cast<uint64_t>(n)}));
        int correct = 0;
        for (int s = 0; s < n_samples; ++s) {
            const std::string a = decimal::sample_with_digit_count(n, rng);
            const std::string b = decimal::sample_with_digit_count(n, rng);
            const std::string prompt = dialogue_eval_prompt(a, b);
            Sample truth;
            truth.prompt_len = static_cast<int>(split_tokens(prompt).size());
            std::vector<std::string> completion = {"Teacher", ":", "The", "answer", "is"};
            detail::append_digit_tokens(completion, decimal::add(a, b));
            completion.push_back(".");
            truth.text = prompt + " " + join_tokens(completion);
            truth.answer = decimal::add(a, b);
            truth.m1 = n;
            truth.m2 = n;
            correct += eval_one(gen, vocab, mix, truth) ? 1 : 0;
        }
        curve.rates.push_back(static_cast<double>(correct) / n_samples);
    }
    return curve;
}

LengthCurve eval_dialogue(const ParameterSet<float>& params, const ModelConfig& cfg,
                          const Vocabulary& vocab, const std::vector<int>& digit_list, int n_samples,
                          uint64_t seed, uint64_t tag_seed) {
    TagTable tag;
    const TagTable* tag_ptr = nullptr;
    if (cfg.pos == PosStrategy::RandomTag) {
        tag = make_tag_table(cfg, 0, tag_seed);
        tag_ptr = &tag;
    }
    return eval_dialogue(model_generator(params, cfg, tag_ptr), vocab, digit_list, n_samples, seed);
}

namespace {

std::string sidecar_path(const std::string& path) {
    const size_t dot = path.find_last_of('.');
    if (dot == std::string::npos || path.find('/', dot) != std::string::npos) return path + ".full";
    return path.substr(0, dot) + ".full" + path.substr(dot);
}

void write_grid_body(std::ofstream& f, const AccuracyGrid& grid, const char* fmtstr) {
    f << "m1\\m2";
    for (int m2 : grid.m2_values) f << "," << m2;
    f << "\n";
    char buf[64];
    for (size_t i1 = 0; i1 < grid.m1_values.size(); ++i1) {
        f << grid.m1_values[i1];
        for (size_t i2 = 0; i2 < grid.m2_values.size(); ++i2) {
            std::snprintf(buf, sizeof(buf), fmtstr, grid.at(i1, i2));
            f << "," << buf;
        }
        f << "\n";
    }
}

}  // namespace

void write_grid_csv(const std::string& path, const AccuracyGrid& grid, uint64_t config_hash) {
    {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw std::runtime_error("write_grid_csv: cannot write " + path);
        write_grid_body(f, grid, "%.2f");
        f << "# seed=" << grid.seed << " n_samples=" << grid.n_samples << " format=" << grid.format_id
          << " config_hash=" << config_hash << "\n";
    }
    {
        const std::string full = sidecar_path(path);
        std::ofstream f(full, std::ios::binary);
        if (!f) throw std::runtime_error("write_grid_csv: cannot write " + full);
        write_grid_body(f, grid, "%.17g");
        f << "# seed=" << grid.seed << " n_samples=" << grid.n_samples << " format=" << grid.format_id
          << " config_hash=" << config_hash << "\n";
    }
}

void write_curve_csv(const std::string& path, const LengthCurve& curve, uint64_t config_hash) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_curve_csv: cannot write " + path);
    f << "digits,rate\n";
    char buf[64];
    for (size_t i = 0; i < curve.digits.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", curve.rates[i]);
        f << curve.digits[i] << "," << buf << "\n";
    }
    f << "# seed=" << curve.seed << " n_samples=" << curve.n_samples << " format=" << curve.format_id
      << " config_hash=" << config_hash << "\n";
}

GridFile read_grid_csv(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("read_grid_csv: cannot read " + path);
    GridFile grid;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            grid.provenance = line.size() > 2 ? line.substr(2) : "";
            continue;
        }
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (lineno == 1) {
            if (cells.empty() || cells[0] != "m1\\m2")
                throw std::runtime_error(path + ":1: expected header starting with m1\\m2");
            for (size_t i = 1; i < cells.size(); ++i) {
                try {
                    grid.m2_values.push_back(std::stoi(cells[i]));
                } catch (...) {
                    throw std::runtime_error(path + ":1: bad m2 value '" + cells[i] + "'");
                }
            }
            continue;
        }
        if (cells.size() != grid.m2_values.size() + 1)
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected " +
                                     std::to_string(grid.m2_values.size() + 1) + " cells, got " +
                                     std::to_string(cells.size()));
        try {
            grid.m1_values.push_back(std::stoi(cells[0]));
            for (size_t i = 1; i < cells.size(); ++i) grid.rates.push_back(std::stod(cells[i]));
        } catch (const std::runtime_error&) {
            throw;
        } catch (...) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": malformed number");
        }
    }
    if (grid.m1_values.empty()) throw std::runtime_error(path + ":1: empty grid");
    return grid;
}

}  // namespace arithlab
