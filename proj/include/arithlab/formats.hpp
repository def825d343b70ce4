#pragma once

#include <string>
#include <variant>
#include <vector>

#include "arithlab/decimal.hpp"
#include "arithlab/rng.hpp"
#include "arithlab/vocab.hpp"

namespace arithlab {

// One training/eval instance. `text` is the token-spaced line as written to
// the corpus; `answer` is the true result of the encoded operation as a
// canonical decimal string; (m1, m2) are the operand digit counts.
struct Sample {
    std::string text;
    int prompt_len = 0;
    std::string answer;
    int m1 = 0;
    int m2 = 0;
    bool wrong_answer = false;  // dialogue noise: written answer is deliberately wrong
};

enum class MulAug { None, NBy1, FirstStep };

struct MulFormat {
    int max_digits = 5;
    bool pad = false;
    bool reverse = false;
    double one_digit_weight = 1.0;
    MulAug aug = MulAug::None;
    int aug_every = 3;
};

enum class AddVariant { Basic, RandomSpace, Recursive };

struct AddFormat {
    AddVariant variant = AddVariant::Basic;
    double space_p = 0.3;
    bool reverse_addends = true;  // recursive-scratchpad header order
    int d_lo = 2;
    int d_hi = 10;
};

struct RevFormat {
    int d_lo = 2;
    int d_hi = 10;
};

struct MixBand {
    int count = 0;
    int d_lo = 2;
    int d_hi = 3;
    std::vector<double> digit_weights;  // one weight per digit count in [d_lo, d_hi]
    double wrong_answer_rate = 0.0;
};

struct MixFormat {
    std::vector<MixBand> dialogue_bands;
    bool random_space = false;
    int s_lo = 1;
    int s_hi = 5;
    double format_deviation_rate = 0.03;
    int addition_count = 0;
    int add_d_lo = 2;
    int add_d_hi = 5;
};

// Dialogue-heavy defaults: ~12200 easy dialogues, ~1040 hard ones with a
// 0.2% wrong-answer rate, 3% of dialogues deviating from the single-dialogue
// format.
MixFormat default_mix_format(bool random_space, int addition_count);

using FormatSpec = std::variant<MulFormat, AddFormat, RevFormat, MixFormat>;

// Digit-count law: weight `alpha` for d == 1 and weight 1 for each d in
// [2, n], normalized. Throws std::invalid_argument when all weights vanish
// (alpha == 0 and n == 1).
int sample_digit_count(int n, double alpha, Rng& rng);

// d == 1: uniform on [0, 9]; d >= 2: uniform on [10^(d-1), 10^d - 1].
std::string sample_value_with_digits(int d, Rng& rng);

struct AddendPair {
    std::string a;
    std::string b;
    int n = 0;
};

// n uniform on {n_lo..n_hi}; both addends independent uniform on [0, 10^n - 1].
AddendPair sample_addend_pair_train(int n_lo, int n_hi, Rng& rng);

// digits(a) "*" digits(b) "#" digits(a*b); `pad` left-zero-extends factors to
// max_digits and the product to 2*max_digits; `reverse` reverses the
// (possibly padded) product digit string. Throws when an operand exceeds
// max_digits.
Sample format_multiplication(const std::string& a, const std::string& b, const MulFormat& fmt);

// (a, b) -> (a, b mod 10); formatted downstream with the same flags.
std::pair<std::string, std::string> apply_n_by_1(const std::string& a, const std::string& b);

// digits(a) "*" digits(b) "%" digits(a*(b mod 10)); the full b stays in the
// prompt and only the separator changes.
Sample format_first_step(const std::string& a, const std::string& b, const MulFormat& fmt);

// Carry scratchpad: "a + b :" then "c + a_i + b_i = t ," per digit, then the
// full sum.
Sample format_addition_basic(const std::string& a, const std::string& b);

// Basic scratchpad with one FILLER inserted independently at each gap between
// consecutive tokens with probability p.
Sample format_addition_random_space(const std::string& a, const std::string& b, double p, Rng& rng);

// Recursive scratchpad: each digit step restates the unconsumed operand
// digits (least-significant first) and the running partial sum.
Sample format_addition_recursive(const std::string& a, const std::string& b, bool reverse_addends);

// digits(x) ">" digits reversed. Leading zeros are kept in the output span;
// the answer is the integer value of the reversed digit string.
Sample format_reversal(const std::string& x);

// One digit sampled uniformly, repeated `repeats` times as a digit string.
std::string gen_repetitive(int repeats, Rng& rng);

struct MixSub {
    bool random_space = false;
    int s_lo = 1;
    int s_hi = 5;
};

// MixBasic: "a + b = s". MixRandomSpace: "a F^ns b F^ns' s" with ns, ns'
// uniform on {s_lo..s_hi}.
Sample format_mix_addition(const std::string& a, const std::string& b, const MixSub& sub, Rng& rng);

namespace detail {
// Appends one token per digit character.
void append_digit_tokens(std::vector<std::string>& out, const std::string& digits);
std::string left_pad(const std::string& digits, int width);
}  // namespace detail

}  // namespace arithlab
