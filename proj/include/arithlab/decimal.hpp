#pragma once

#include <string>

#include "arithlab/rng.hpp"

namespace arithlab {

// Non-negative integers as canonical decimal strings (no leading zeros,
// "0" for zero). Schoolbook arithmetic keeps the generators exact at any
// operand width; test oracles recompute results through a separate path.
namespace decimal {

bool is_canonical(const std::string& s);

// Strips leading zeros; "" and "000" both canonicalize to "0".
std::string canonical(const std::string& s);

int digit_count(const std::string& s);

std::string add(const std::string& a, const std::string& b);
std::string mul(const std::string& a, const std::string& b);

// b mod 10 as a single digit string.
std::string last_digit(const std::string& b);

// Uniform on [0, 9] for d == 1, uniform on [10^(d-1), 10^d - 1] for d >= 2.
std::string sample_with_digit_count(int d, Rng& rng);

// Uniform on [0, 10^n - 1]; result is canonical (may have fewer digits).
std::string sample_below_pow10(int n, Rng& rng);

}  // namespace decimal
}  // namespace arithlab
