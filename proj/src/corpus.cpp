#include "arithlab/corpus.hpp"

#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "arithlab/decimal.hpp"
#include "arithlab/dialogue.hpp"
#include "arithlab/extract.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace arithlab {

namespace {

std::vector<Sample> gen_mul(const MulFormat& fmt, int size, Rng& rng) {
    std::vector<Sample> out;
    out.reserve(static_cast<size_t>(size));
    for (int i = 0; i < size; ++i) {
        const int d1 = sample_digit_count(fmt.max_digits, fmt.one_digit_weight, rng);
        const int d2 = sample_digit_count(fmt.max_digits, fmt.one_digit_weight, rng);
        const std::string a = sample_value_with_digits(d1, rng);
        const std::string b = sample_value_with_digits(d2, rng);
        const bool augmented = fmt.aug != MulAug::None && i % fmt.aug_every == 0;
        if (augmented && fmt.aug == MulAug::NBy1) {
            const auto [a2, b2] = apply_n_by_1(a, b);
            out.push_back(format_multiplication(a2, b2, fmt));
        } else if (augmented && fmt.aug == MulAug::FirstStep) {
            out.push_back(format_first_step(a, b, fmt));
        } else {
            out.push_back(format_multiplication(a, b, fmt));
        }
    }
    return out;
}

std::vector<Sample> gen_add(const AddFormat& fmt, int size, Rng& rng) {
    std::vector<Sample> out;
    out.reserve(static_cast<size_t>(size));
    for (int i = 0; i < size; ++i) {
        const AddendPair p = sample_addend_pair_train(fmt.d_lo, fmt.d_hi, rng);
        switch (fmt.variant) {
            case AddVariant::Basic:
                out.push_back(format_addition_basic(p.a, p.b));
                break;
            case AddVariant::RandomSpace:
                out.push_back(format_addition_random_space(p.a, p.b, fmt.space_p, rng));
                break;
            case AddVariant::Recursive:
                out.push_back(format_addition_recursive(p.a, p.b, fmt.reverse_addends));
                break;
        }
    }
    return out;
}

std::vector<Sample> gen_rev(const RevFormat& fmt, int size, Rng& rng) {
    std::vector<Sample> out;
    out.reserve(static_cast<size_t>(size));
    for (int i = 0; i < size; ++i) {
        const int n = static_cast<int>(rng.range(fmt.d_lo, fmt.d_hi));
        out.push_back(format_reversal(decimal::sample_below_pow10(n, rng)));
    }
    return out;
}

int weighted_digit_count(const MixBand& band, Rng& rng) {
    double total = 0.0;
    for (double w : band.digit_weights) total += w;
    if (total <= 0.0) throw std::invalid_argument("mix band: digit weights sum to zero");
    double u = rng.real01() * total;
    for (size_t i = 0; i < band.digit_weights.size(); ++i) {
        u -= band.digit_weights[i];
        if (u < 0.0) return band.d_lo + static_cast<int>(i);
    }
    return band.d_hi;
}

std::string corrupt_sum(const std::string& sum, Rng& rng) {
    const int d = decimal::digit_count(sum);
    for (;;) {
        const std::string v = decimal::sample_with_digit_count(d, rng);
        if (v != sum) return v;
    }
}

// Rescales the band/addition counts proportionally so the corpus holds
// exactly `size` samples; the spec's own totals pass through unchanged.
MixFormat scaled_mix(const MixFormat& fmt, int size) {
    long total = fmt.addition_count;
    for (const MixBand& b : fmt.dialogue_bands) total += b.count;
    if (total <= 0) throw std::invalid_argument("mix format: no samples configured");
    if (total == size) return fmt;
    MixFormat out = fmt;
    const double scale = static_cast<double>(size) / static_cast<double>(total);
    long assigned = 0;
    for (MixBand& b : out.dialogue_bands) {
        b.count = static_cast<int>(b.count * scale);
        assigned += b.count;
    }
    out.addition_count = static_cast<int>(out.addition_count * scale);
    assigned += out.addition_count;
    // remainder lands in the largest component
    int* largest = &out.addition_count;
    for (MixBand& b : out.dialogue_bands)
        if (b.count > *largest) largest = &b.count;
    *largest += static_cast<int>(size - assigned);
    return out;
}

std::vector<Sample> gen_mix(const MixFormat& fmt_in, int size, Rng& rng) {
    const MixFormat fmt = scaled_mix(fmt_in, size);
    std::vector<Sample> out;
    out.reserve(static_cast<size_t>(size));
    const int templates = dialogue_template_count();
    for (const MixBand& band : fmt.dialogue_bands) {
        if (band.digit_weights.size() != static_cast<size_t>(band.d_hi - band.d_lo + 1))
            throw std::invalid_argument("mix band: one digit weight per digit count required");
        for (int i = 0; i < band.count; ++i) {
            const std::string a = sample_value_with_digits(weighted_digit_count(band, rng), rng);
            const std::string b = sample_value_with_digits(weighted_digit_count(band, rng), rng);
            const int tid = static_cast<int>(rng.below(static_cast<uint64_t>(templates)));
            std::string written;
            if (rng.bernoulli(band.wrong_answer_rate)) written = corrupt_sum(decimal::add(a, b), rng);
            Sample s = gen_dialogue(a, b, tid, written);
            if (rng.bernoulli(fmt.format_deviation_rate)) {
                // Two dialogues end up on one line, mirroring collection noise.
                const std::string a2 = sample_value_with_digits(weighted_digit_count(band, rng), rng);
                const std::string b2 = sample_value_with_digits(weighted_digit_count(band, rng), rng);
                const int tid2 = static_cast<int>(rng.below(static_cast<uint64_t>(templates)));
                const Sample second = gen_dialogue(a2, b2, tid2);
                const int first_len = static_cast<int>(split_tokens(s.text).size());
                s.text += " " + second.text;
                s.prompt_len = first_len + second.prompt_len;
                s.answer = second.answer;
                s.m1 = second.m1;
                s.m2 = second.m2;
                s.wrong_answer = false;
            }
            out.push_back(std::move(s));
        }
    }
    const MixSub sub{fmt.random_space, fmt.s_lo, fmt.s_hi};
    for (int i = 0; i < fmt.addition_count; ++i) {
        const AddendPair p = sample_addend_pair_train(fmt.add_d_lo, fmt.add_d_hi, rng);
        out.push_back(format_mix_addition(p.a, p.b, sub, rng));
    }
    return out;
}

}  // namespace

std::vector<Sample> generate_corpus(const FormatSpec& spec, int size, uint64_t seed) {
    if (size < 1) throw std::invalid_argument("generate_corpus: size must be >= 1");
    Rng rng(derive_seed(seed, {0xDA7A}));
    std::vector<Sample> samples;
    if (const auto* mul = std::get_if<MulFormat>(&spec)) {
        samples = gen_mul(*mul, size, rng);
    } else if (const auto* add = std::get_if<AddFormat>(&spec)) {
        samples = gen_add(*add, size, rng);
    } else if (const auto* rev = std::get_if<RevFormat>(&spec)) {
        samples = gen_rev(*rev, size, rng);
    } else {
        samples = gen_mix(std::get<MixFormat>(spec), size, rng);
    }
    if (static_cast<int>(samples.size()) != size)
        throw std::logic_error("generate_corpus: produced " + std::to_string(samples.size()) +
                               " samples, expected " + std::to_string(size));
    return samples;
}

Vocabulary vocabulary_for(const FormatSpec& spec) {
    if (std::holds_alternative<MixFormat>(spec)) return Vocabulary::build(builtin_dialogue_templates());
    return Vocabulary::build({});
}

json spec_to_json(const FormatSpec& spec) {
    json j;
    if (const auto* mul = std::get_if<MulFormat>(&spec)) {
        j["task"] = "mul";
        j["max_digits"] = mul->max_digits;
        j["pad"] = mul->pad;
        j["reverse"] = mul->reverse;
        j["one_digit_weight"] = mul->one_digit_weight;
        j["augment"] = mul->aug == MulAug::None ? "none" : (mul->aug == MulAug::NBy1 ? "nby1" : "firststep");
        j["augment_every"] = mul->aug_every;
    } else if (const auto* add = std::get_if<AddFormat>(&spec)) {
        j["task"] = "add";
        j["variant"] = add->variant == AddVariant::Basic
                           ? "basic"
                           : (add->variant == AddVariant::RandomSpace ? "random_space" : "recursive");
        j["space_p"] = add->space_p;
        j["reverse_addends"] = add->reverse_addends;
        j["d_lo"] = add->d_lo;
        j["d_hi"] = add->d_hi;
    } else if (const auto* rev = std::get_if<RevFormat>(&spec)) {
        j["task"] = "reversal";
        j["d_lo"] = rev->d_lo;
        j["d_hi"] = rev->d_hi;
    } else {
        const auto& mix = std::get<MixFormat>(spec);
        j["task"] = "mix";
        j["random_space"] = mix.random_space;
        j["s_lo"] = mix.s_lo;
        j["s_hi"] = mix.s_hi;
        j["format_deviation_rate"] = mix.format_deviation_rate;
        j["addition_count"] = mix.addition_count;
        j["add_d_lo"] = mix.add_d_lo;
        j["add_d_hi"] = mix.add_d_hi;
        j["dialogue_bands"] = json::array();
        for (const MixBand& b : mix.dialogue_bands) {
            j["dialogue_bands"].push_back({{"count", b.count},
                                           {"d_lo", b.d_lo},
                                           {"d_hi", b.d_hi},
                                           {"digit_weights", b.digit_weights},
                                           {"wrong_answer_rate", b.wrong_answer_rate}});
        }
    }
    return j;
}

FormatSpec spec_from_json(const json& j) {
    const std::string task = j.at("task").get<std::string>();
    if (task == "mul") {
        MulFormat f;
        f.max_digits = j.at("max_digits").get<int>();
        f.pad = j.at("pad").get<bool>();
        f.reverse = j.at("reverse").get<bool>();
        f.one_digit_weight = j.value("one_digit_weight", 1.0);
        const std::string aug = j.value("augment", "none");
        f.aug = aug == "none" ? MulAug::None : (aug == "nby1" ? MulAug::NBy1 : MulAug::FirstStep);
        f.aug_every = j.value("augment_every", 3);
        return f;
    }
    if (task == "add") {
        AddFormat f;
        const std::string v = j.at("variant").get<std::string>();
        f.variant = v == "basic" ? AddVariant::Basic
                                 : (v == "random_space" ? AddVariant::RandomSpace : AddVariant::Recursive);
        f.space_p = j.value("space_p", 0.3);
        f.reverse_addends = j.value("reverse_addends", true);
        f.d_lo = j.at("d_lo").get<int>();
        f.d_hi = j.at("d_hi").get<int>();
        return f;
    }
    if (task == "reversal") {
        RevFormat f;
        f.d_lo = j.at("d_lo").get<int>();
        f.d_hi = j.at("d_hi").get<int>();
        return f;
    }
    if (task == "mix") {
        MixFormat f;
        f.random_space = j.at("random_space").get<bool>();
        f.s_lo = j.value("s_lo", 1);
        f.s_hi = j.value("s_hi", 5);
        f.format_deviation_rate = j.value("format_deviation_rate", 0.03);
        f.addition_count = j.value("addition_count", 0);
        f.add_d_lo = j.value("add_d_lo", 2);
        f.add_d_hi = j.value("add_d_hi", 5);
        f.dialogue_bands.clear();
        for (const json& b : j.at("dialogue_bands")) {
            MixBand band;
            band.count = b.at("count").get<int>();
            band.d_lo = b.at("d_lo").get<int>();
            band.d_hi = b.at("d_hi").get<int>();
            band.digit_weights = b.at("digit_weights").get<std::vector<double>>();
            band.wrong_answer_rate = b.value("wrong_answer_rate", 0.0);
            f.dialogue_bands.push_back(std::move(band));
        }
        return f;
    }
    throw std::invalid_argument("spec_from_json: unknown task '" + task + "'");
}

uint64_t config_hash(const json& j) {
    const std::string s = j.dump();
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::map<std::pair<int, int>, int> cell_counts(const std::vector<Sample>& samples) {
    std::map<std::pair<int, int>, int> counts;
    for (const Sample& s : samples) ++counts[{s.m1, s.m2}];
    return counts;
}

void write_corpus(const std::string& dir, const FormatSpec& spec, uint64_t seed,
                  const std::vector<Sample>& samples, const Vocabulary& vocab) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    const fs::path root(dir);

    {
        std::ofstream f(root / "corpus.txt", std::ios::binary);
        if (!f) throw std::runtime_error("write_corpus: cannot write " + (root / "corpus.txt").string());
        for (const Sample& s : samples) f << s.text << '\n';
        if (!f) throw std::runtime_error("write_corpus: I/O failure on " + (root / "corpus.txt").string());
    }
    vocab.save((root / "vocab.txt").string());

    json counts = json::object();
    for (const auto& [cell, n] : cell_counts(samples))
        counts[std::to_string(cell.first) + "," + std::to_string(cell.second)] = n;

    json manifest;
    manifest["seed"] = seed;
    manifest["spec"] = spec_to_json(spec);
    manifest["size"] = samples.size();
    manifest["per_cell_counts"] = counts;
    manifest["config_hash"] = config_hash(spec_to_json(spec));

    std::ofstream mf(root / "manifest.json", std::ios::binary);
    if (!mf) throw std::runtime_error("write_corpus: cannot write " + (root / "manifest.json").string());
    mf << manifest.dump(2) << '\n';
}

LoadedCorpus load_corpus(const std::string& dir) {
    const fs::path root(dir);
    std::ifstream mf(root / "manifest.json", std::ios::binary);
    if (!mf) throw std::runtime_error("load_corpus: cannot read " + (root / "manifest.json").string());
    json manifest = json::parse(mf);

    LoadedCorpus out{spec_from_json(manifest.at("spec")), manifest.at("seed").get<uint64_t>(), {},
                     Vocabulary::load((root / "vocab.txt").string())};

    std::ifstream cf(root / "corpus.txt", std::ios::binary);
    if (!cf) throw std::runtime_error("load_corpus: cannot read " + (root / "corpus.txt").string());
    std::string line;
    while (std::getline(cf, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        Sample s;
        s.text = line;
        const std::vector<std::string> tokens = split_tokens(line);
        const std::optional<int> boundary = prompt_boundary(out.spec, tokens);
        s.prompt_len = boundary.value_or(static_cast<int>(tokens.size()));
        if (auto ans = extract_answer(out.spec, line)) s.answer = *ans;
        out.samples.push_back(std::move(s));
    }
    return out;
}

}  // namespace arithlab
