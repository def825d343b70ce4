#include "arithlab/decimal.hpp"

#include <algorithm>
#include <stdexcept>

namespace arithlab::decimal {

bool is_canonical(const std::string& s) {
    if (s.empty()) return false;
    if (s.size() > 1 && s[0] == '0') return false;
    return std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

std::string canonical(const std::string& s) {
    size_t i = 0;
    while (i + 1 < s.size() && s[i] == '0') ++i;
    std::string out = s.substr(i);
    if (out.empty()) out = "0";
    return out;
}

int digit_count(const std::string& s) { return static_cast<int>(canonical(s).size()); }

std::string add(const std::string& a, const std::string& b) {
    if (!is_canonical(a) || !is_canonical(b)) throw std::invalid_argument("decimal::add: non-canonical input");
    std::string out;
    int carry = 0;
    for (size_t i = 0; i < a.size() || i < b.size() || carry; ++i) {
        int s = carry;
        if (i < a.size()) s += a[a.size() - 1 - i] - '0';
        if (i < b.size()) s += b[b.size() - 1 - i] - '0';
        out.push_back(static_cast<char>('0' + s % 10));
        carry = s / 10;
    }
    std::reverse(out.begin(), out.end());
    return canonical(out);
}

std::string mul(const std::string& a, const std::string& b) {
    if (!is_canonical(a) || !is_canonical(b)) throw std::invalid_argument("decimal::mul: non-canonical input");
    if (a == "0" || b == "0") return "0";
    std::vector<int> acc(a.size() + b.size(), 0);
    for (size_t i = 0; i < a.size(); ++i) {
        const int da = a[a.size() - 1 - i] - '0';
        for (size_t j = 0; j < b.size(); ++j) {
            acc[i + j] += da * (b[b.size() - 1 - j] - '0');
        }
    }
    int carry = 0;
    std::string out;
    for (size_t k = 0; k < acc.size(); ++k) {
        const int v = acc[k] + carry;
        out.push_back(static_cast<char>('0' + v % 10));
        carry = v / 10;
    }
    while (carry) {
        out.push_back(static_cast<char>('0' + carry % 10));
        carry /= 10;
    }
    std::reverse(out.begin(), out.end());
    return canonical(out);
}

std::string last_digit(const std::string& b) {
    if (!is_canonical(b)) throw std::invalid_argument("decimal::last_digit: non-canonical input");
    return std::string(1, b.back());
}

std::string sample_with_digit_count(int d, Rng& rng) {
    if (d < 1) throw std::invalid_argument("decimal: digit count must be >= 1");
    std::string s;
    s.reserve(static_cast<size_t>(d));
    if (d == 1) {
        s.push_back(static_cast<char>('0' + rng.range(0, 9)));
        return s;
    }
    s.push_back(static_cast<char>('0' + rng.range(1, 9)));
    for (int i = 1; i < d; ++i) s.push_back(static_cast<char>('0' + rng.range(0, 9)));
    return s;
}

std::string sample_below_pow10(int n, Rng& rng) {
    if (n < 1) throw std::invalid_argument("decimal: width must be >= 1");
    std::string s;
    s.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) s.push_back(static_cast<char>('0' + rng.range(0, 9)));
    return canonical(s);
}

}  // namespace arithlab::decimal
