#include "arithlab/extract.hpp"

#include <algorithm>

#include "arithlab/decimal.hpp"

namespace arithlab {

namespace {

bool is_digit_tok(const std::string& t) { return t.size() == 1 && t[0] >= '0' && t[0] <= '9'; }
bool is_filler_tok(const std::string& t) { return t == Vocabulary::filler_text(); }

// Digits collected from `from` onward. FILLER tokens inside the anchored span
// are skipped; any other token ends the span.
std::string anchored_digits(const std::vector<std::string>& tokens, size_t from) {
    std::string run;
    for (size_t i = from; i < tokens.size(); ++i) {
        if (is_filler_tok(tokens[i])) continue;
        if (!is_digit_tok(tokens[i])) break;
        run += tokens[i][0];
    }
    return run;
}

// Last maximal run of consecutive digit tokens; FILLER terminates a run.
std::string last_digit_run(const std::vector<std::string>& tokens, size_t* start_out = nullptr) {
    std::string best;
    size_t best_start = 0;
    std::string cur;
    size_t cur_start = 0;
    for (size_t i = 0; i <= tokens.size(); ++i) {
        if (i < tokens.size() && is_digit_tok(tokens[i])) {
            if (cur.empty()) cur_start = i;
            cur += tokens[i][0];
        } else if (!cur.empty()) {
            best = cur;
            best_start = cur_start;
            cur.clear();
        }
    }
    if (start_out) *start_out = best_start;
    return best;
}

std::optional<size_t> find_first(const std::vector<std::string>& tokens, const std::string& sym) {
    auto it = std::find(tokens.begin(), tokens.end(), sym);
    if (it == tokens.end()) return std::nullopt;
    return static_cast<size_t>(it - tokens.begin());
}

std::optional<size_t> find_last(const std::vector<std::string>& tokens, const std::string& sym) {
    auto it = std::find(tokens.rbegin(), tokens.rend(), sym);
    if (it == tokens.rend()) return std::nullopt;
    return tokens.size() - 1 - static_cast<size_t>(it - tokens.rbegin());
}

std::optional<std::string> finish(std::string run, bool reverse) {
    if (run.empty()) return std::nullopt;
    if (reverse) std::reverse(run.begin(), run.end());
    return decimal::canonical(run);
}

std::optional<std::string> extract_mul(const MulFormat& fmt, const std::vector<std::string>& tokens) {
    std::optional<size_t> sep = find_first(tokens, "#");
    if (fmt.aug == MulAug::FirstStep) {
        const std::optional<size_t> pct = find_first(tokens, "%");
        if (pct && (!sep || *pct < *sep)) sep = pct;
    }
    if (!sep) return std::nullopt;
    return finish(anchored_digits(tokens, *sep + 1), fmt.reverse);
}

std::optional<std::string> extract_add(const AddFormat& fmt, const std::vector<std::string>& tokens) {
    const std::string anchor = fmt.variant == AddVariant::Recursive ? "=" : ",";
    const std::optional<size_t> pos = find_last(tokens, anchor);
    if (!pos) return std::nullopt;
    return finish(anchored_digits(tokens, *pos + 1), false);
}

std::optional<std::string> extract_mix(const std::vector<std::string>& tokens) {
    const std::optional<size_t> eq = find_last(tokens, "=");
    if (eq) return finish(anchored_digits(tokens, *eq + 1), false);
    return finish(last_digit_run(tokens), false);
}

}  // namespace

std::optional<std::string> extract_answer(const FormatSpec& fmt, const std::string& generated) {
    const std::vector<std::string> tokens = split_tokens(generated);
    if (std::holds_alternative<MulFormat>(fmt)) return extract_mul(std::get<MulFormat>(fmt), tokens);
    if (std::holds_alternative<AddFormat>(fmt)) return extract_add(std::get<AddFormat>(fmt), tokens);
    if (std::holds_alternative<RevFormat>(fmt)) {
        const std::optional<size_t> pos = find_first(tokens, ">");
        if (!pos) return std::nullopt;
        return finish(anchored_digits(tokens, *pos + 1), false);
    }
    return extract_mix(tokens);
}

std::optional<std::string> extract_last_digit_run(const std::string& generated) {
    const std::string run = last_digit_run(split_tokens(generated));
    if (run.empty()) return std::nullopt;
    return decimal::canonical(run);
}

std::optional<int> prompt_boundary(const FormatSpec& fmt, const std::vector<std::string>& tokens) {
    const auto after = [&tokens](const std::string& sym) -> std::optional<int> {
        const std::optional<size_t> pos = find_first(tokens, sym);
        if (!pos) return std::nullopt;
        return static_cast<int>(*pos) + 1;
    };
    if (std::holds_alternative<MulFormat>(fmt)) {
        const std::optional<size_t> hash = find_first(tokens, "#");
        const std::optional<size_t> pct = find_first(tokens, "%");
        std::optional<size_t> sep = hash;
        if (pct && (!sep || *pct < *sep)) sep = pct;
        if (!sep) return std::nullopt;
        return static_cast<int>(*sep) + 1;
    }
    if (std::holds_alternative<AddFormat>(fmt)) return after(":");
    if (std::holds_alternative<RevFormat>(fmt)) return after(">");
    const std::optional<size_t> eq = find_last(tokens, "=");
    if (eq) return static_cast<int>(*eq) + 1;
    size_t start = 0;
    if (last_digit_run(tokens, &start).empty()) return std::nullopt;
    return static_cast<int>(start);
}

}  // namespace arithlab
