#include "arithlab/formats.hpp"

#include <algorithm>
#include <stdexcept>

namespace arithlab {

namespace detail {

void append_digit_tokens(std::vector<std::string>& out, const std::string& digits) {
    for (char c : digits) out.emplace_back(1, c);
}

std::string left_pad(const std::string& digits, int width) {
    const int n = static_cast<int>(digits.size());
    if (n >= width) return digits;
    return std::string(static_cast<size_t>(width - n), '0') + digits;
}

}  // namespace detail

using detail::append_digit_tokens;
using detail::left_pad;

MixFormat default_mix_format(bool random_space, int addition_count) {
    MixFormat f;
    f.dialogue_bands = {
        MixBand{12200, 2, 3, {0.3, 0.7}, 0.0},
        MixBand{1040, 4, 5, {0.5, 0.5}, 0.002},
    };
    f.random_space = random_space;
    f.addition_count = addition_count;
    return f;
}

int sample_digit_count(int n, double alpha, Rng& rng) {
    if (n < 1) throw std::invalid_argument("sample_digit_count: n must be >= 1");
    if (alpha < 0.0) throw std::invalid_argument("sample_digit_count: alpha must be >= 0");
    const double total = alpha + static_cast<double>(n - 1);
    if (total <= 0.0) throw std::invalid_argument("sample_digit_count: all digit-count weights are zero");
    const double u = rng.real01() * total;
    if (u < alpha) return 1;
    const int d = 2 + static_cast<int>(u - alpha);
    return std::min(d, n);
}

std::string sample_value_with_digits(int d, Rng& rng) { return decimal::sample_with_digit_count(d, rng); }

AddendPair sample_addend_pair_train(int n_lo, int n_hi, Rng& rng) {
    if (n_lo < 1 || n_lo > n_hi) throw std::invalid_argument("sample_addend_pair_train: bad digit range");
    AddendPair p;
    p.n = static_cast<int>(rng.range(n_lo, n_hi));
    p.a = decimal::sample_below_pow10(p.n, rng);
    p.b = decimal::sample_below_pow10(p.n, rng);
    return p;
}

namespace {

Sample format_mul_impl(const std::string& a, const std::string& b, const MulFormat& fmt,
                       const std::string& separator, const std::string& product) {
    if (!decimal::is_canonical(a) || !decimal::is_canonical(b))
        throw std::invalid_argument("format_multiplication: operands must be canonical decimals");
    const int n = fmt.max_digits;
    if (decimal::digit_count(a) > n || decimal::digit_count(b) > n)
        throw std::invalid_argument("format_multiplication: operand exceeds max_digits=" + std::to_string(n));

    std::string fa = a, fb = b, fp = product;
    if (fmt.pad) {
        fa = left_pad(fa, n);
        fb = left_pad(fb, n);
        fp = left_pad(fp, 2 * n);
    }
    if (fmt.reverse) std::reverse(fp.begin(), fp.end());

    std::vector<std::string> tokens;
    append_digit_tokens(tokens, fa);
    tokens.push_back("*");
    append_digit_tokens(tokens, fb);
    tokens.push_back(separator);
    const int prompt_len = static_cast<int>(tokens.size());
    append_digit_tokens(tokens, fp);

    Sample s;
    s.text = join_tokens(tokens);
    s.prompt_len = prompt_len;
    s.answer = product;
    s.m1 = decimal::digit_count(a);
    s.m2 = decimal::digit_count(b);
    return s;
}

}  // namespace

Sample format_multiplication(const std::string& a, const std::string& b, const MulFormat& fmt) {
    return format_mul_impl(a, b, fmt, "#", decimal::mul(a, b));
}

std::pair<std::string, std::string> apply_n_by_1(const std::string& a, const std::string& b) {
    return {a, decimal::last_digit(b)};
}

Sample format_first_step(const std::string& a, const std::string& b, const MulFormat& fmt) {
    return format_mul_impl(a, b, fmt, "%", decimal::mul(a, decimal::last_digit(b)));
}

namespace {

// Least-significant-first digit values, zero-extended to `len`.
std::vector<int> lsb_digits(const std::string& s, int len) {
    std::vector<int> d(static_cast<size_t>(len), 0);
    for (size_t i = 0; i < s.size(); ++i) d[i] = s[s.size() - 1 - i] - '0';
    return d;
}

void append_value_tokens(std::vector<std::string>& out, int v) {
    if (v >= 10) out.emplace_back(1, static_cast<char>('0' + v / 10));
    out.emplace_back(1, static_cast<char>('0' + v % 10));
}

}  // namespace

Sample format_addition_basic(const std::string& a, const std::string& b) {
    if (!decimal::is_canonical(a) || !decimal::is_canonical(b))
        throw std::invalid_argument("format_addition_basic: operands must be canonical decimals");
    const int L = std::max(decimal::digit_count(a), decimal::digit_count(b));
    const std::vector<int> da = lsb_digits(a, L), db = lsb_digits(b, L);

    std::vector<std::string> tokens;
    append_digit_tokens(tokens, a);
    tokens.push_back("+");
    append_digit_tokens(tokens, b);
    tokens.push_back(":");
    const int prompt_len = static_cast<int>(tokens.size());

    int carry = 0;
    for (int i = 0; i < L; ++i) {
        const int t = carry + da[static_cast<size_t>(i)] + db[static_cast<size_t>(i)];
        tokens.emplace_back(1, static_cast<char>('0' + carry));
        tokens.push_back("+");
        tokens.emplace_back(1, static_cast<char>('0' + da[static_cast<size_t>(i)]));
        tokens.push_back("+");
        tokens.emplace_back(1, static_cast<char>('0' + db[static_cast<size_t>(i)]));
        tokens.push_back("=");
        append_value_tokens(tokens, t);
        tokens.push_back(",");
        carry = t / 10;
    }
    const std::string sum = decimal::add(a, b);
    append_digit_tokens(tokens, sum);

    Sample s;
    s.text = join_tokens(tokens);
    s.prompt_len = prompt_len;
    s.answer = sum;
    s.m1 = decimal::digit_count(a);
    s.m2 = decimal::digit_count(b);
    return s;
}

Sample format_addition_random_space(const std::string& a, const std::string& b, double p, Rng& rng) {
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("format_addition_random_space: p must be in [0,1]");
    Sample base = format_addition_basic(a, b);
    const std::vector<std::string> tokens = split_tokens(base.text);

    std::vector<std::string> out;
    out.reserve(tokens.size() * 2);
    int prompt_len = base.prompt_len;
    for (size_t i = 0; i < tokens.size(); ++i) {
        if (i > 0 && rng.bernoulli(p)) {
            out.push_back(Vocabulary::filler_text());
            if (i < static_cast<size_t>(base.prompt_len)) ++prompt_len;
        }
        out.push_back(tokens[i]);
    }
    base.text = join_tokens(out);
    base.prompt_len = prompt_len;
    return base;
}

Sample format_addition_recursive(const std::string& a, const std::string& b, bool reverse_addends) {
    if (!decimal::is_canonical(a) || !decimal::is_canonical(b))
        throw std::invalid_argument("format_addition_recursive: operands must be canonical decimals");
    const int L = std::max(decimal::digit_count(a), decimal::digit_count(b));
    const std::vector<int> da = lsb_digits(a, L), db = lsb_digits(b, L);

    const auto append_addend = [&](std::vector<std::string>& out, const std::string& v) {
        std::string d = v;
        if (reverse_addends) std::reverse(d.begin(), d.end());
        append_digit_tokens(out, d);
    };

    std::vector<std::string> tokens;
    append_addend(tokens, a);
    tokens.push_back("+");
    append_addend(tokens, b);
    tokens.push_back(":");
    const int prompt_len = static_cast<int>(tokens.size());

    int carry = 0;
    std::vector<int> sums;  // s_1..s_i, least-significant first
    for (int i = 0; i < L; ++i) {
        const int t = carry + da[static_cast<size_t>(i)] + db[static_cast<size_t>(i)];
        sums.push_back(t % 10);
        tokens.emplace_back(1, static_cast<char>('0' + carry));
        tokens.push_back("+");
        tokens.emplace_back(1, static_cast<char>('0' + da[static_cast<size_t>(i)]));
        tokens.push_back("+");
        tokens.emplace_back(1, static_cast<char>('0' + db[static_cast<size_t>(i)]));
        tokens.push_back("=");
        append_value_tokens(tokens, t);
        tokens.push_back(",");
        tokens.push_back("=");
        for (auto it = sums.rbegin(); it != sums.rend(); ++it)
            tokens.emplace_back(1, static_cast<char>('0' + *it));
        tokens.push_back(",");
        carry = t / 10;
        if (i + 1 < L) {
            for (int j = i + 1; j < L; ++j)
                tokens.emplace_back(1, static_cast<char>('0' + da[static_cast<size_t>(j)]));
            tokens.push_back("+");
            for (int j = i + 1; j < L; ++j)
                tokens.emplace_back(1, static_cast<char>('0' + db[static_cast<size_t>(j)]));
            tokens.push_back(":");
        }
    }
    const std::string sum = decimal::add(a, b);
    tokens.push_back("=");
    append_digit_tokens(tokens, sum);

    Sample s;
    s.text = join_tokens(tokens);
    s.prompt_len = prompt_len;
    s.answer = sum;
    s.m1 = decimal::digit_count(a);
    s.m2 = decimal::digit_count(b);
    return s;
}

Sample format_reversal(const std::string& x) {
    if (x.empty() || !std::all_of(x.begin(), x.end(), [](char c) { return c >= '0' && c <= '9'; }))
        throw std::invalid_argument("format_reversal: input must be a digit string");
    std::string rev = x;
    std::reverse(rev.begin(), rev.end());

    std::vector<std::string> tokens;
    append_digit_tokens(tokens, x);
    tokens.push_back(">");
    const int prompt_len = static_cast<int>(tokens.size());
    append_digit_tokens(tokens, rev);

    Sample s;
    s.text = join_tokens(tokens);
    s.prompt_len = prompt_len;
    s.answer = decimal::canonical(rev);
    s.m1 = static_cast<int>(x.size());
    s.m2 = 0;
    return s;
}

std::string gen_repetitive(int repeats, Rng& rng) {
    if (repeats < 1) throw std::invalid_argument("gen_repetitive: repeats must be >= 1");
    const char d = static_cast<char>('0' + rng.range(0, 9));
    return std::string(static_cast<size_t>(repeats), d);
}

Sample format_mix_addition(const std::string& a, const std::string& b, const MixSub& sub, Rng& rng) {
    if (!decimal::is_canonical(a) || !decimal::is_canonical(b))
        throw std::invalid_argument("format_mix_addition: operands must be canonical decimals");
    const std::string sum = decimal::add(a, b);

    std::vector<std::string> tokens;
    append_digit_tokens(tokens, a);
    if (sub.random_space) {
        const int ns = static_cast<int>(rng.range(sub.s_lo, sub.s_hi));
        for (int i = 0; i < ns; ++i) tokens.push_back(Vocabulary::filler_text());
        append_digit_tokens(tokens, b);
        const int ns2 = static_cast<int>(rng.range(sub.s_lo, sub.s_hi));
        for (int i = 0; i < ns2; ++i) tokens.push_back(Vocabulary::filler_text());
    } else {
        tokens.push_back("+");
        append_digit_tokens(tokens, b);
        tokens.push_back("=");
    }
    const int prompt_len = static_cast<int>(tokens.size());
    append_digit_tokens(tokens, sum);

    Sample s;
    s.text = join_tokens(tokens);
    s.prompt_len = prompt_len;
    s.answer = sum;
    s.m1 = decimal::digit_count(a);
    s.m2 = decimal::digit_count(b);
    return s;
}

}  // namespace arithlab
