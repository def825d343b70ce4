#pragma once

#include <string>
#include <unordered_map>
#include <vector>

namespace arithlab {

using TokenId = int32_t;

// A generated/evaluation token sequence. `prompt_len` counts the tokens the
// model is conditioned on before generation starts (through the separator).
struct TokenSeq {
    std::vector<TokenId> ids;
    int prompt_len = 0;
};

// Closed token vocabulary for every task format. Symbol order is fixed:
// reserved tokens, digits, operators, then template words sorted
// lexicographically. Immutable after construction; safe to share across
// threads.
class Vocabulary {
public:
    static constexpr TokenId kBos = 0;
    static constexpr TokenId kEos = 1;
    static constexpr TokenId kPad = 2;
    static constexpr TokenId kFiller = 3;

    static const char* bos_text() { return "<bos>"; }
    static const char* eos_text() { return "<eos>"; }
    static const char* pad_text() { return "<pad>"; }
    static const char* filler_text() { return "_"; }

    // Builds from the closed template corpus. Each template is a
    // space-separated token string; the substitution slots {A}, {B}, {S} are
    // not symbols. Throws std::invalid_argument if a template word collides
    // with a reserved, digit or operator symbol.
    static Vocabulary build(const std::vector<std::string>& template_corpus);

    int size() const { return static_cast<int>(symbols_.size()); }
    const std::vector<std::string>& symbols() const { return symbols_; }
    const std::string& symbol(TokenId id) const;

    bool contains(const std::string& symbol) const { return index_.count(symbol) > 0; }
    // Throws std::out_of_range for unknown symbols.
    TokenId id(const std::string& symbol) const;

    // `text` is a sequence of vocabulary symbols separated by single spaces.
    // Throws std::invalid_argument naming the symbol and its position on
    // unknown symbols. Empty text encodes to an empty sequence.
    TokenSeq encode(const std::string& text) const;

    // Inverse of encode: symbols joined by single spaces. Throws
    // std::out_of_range when an id is >= size().
    std::string decode(const std::vector<TokenId>& ids) const;

    bool is_digit(TokenId id) const { return id >= digit0_ && id < digit0_ + 10; }
    int digit_value(TokenId id) const { return id - digit0_; }
    TokenId digit_id(int value) const { return digit0_ + value; }

    // One symbol per line, line number == id. Round-trips bit-exactly.
    void save(const std::string& path) const;
    static Vocabulary load(const std::string& path);

private:
    Vocabulary() = default;
    void add(const std::string& symbol);

    std::vector<std::string> symbols_;
    std::unordered_map<std::string, TokenId> index_;
    TokenId digit0_ = 4;
};

// Splits a token-spaced string on single spaces. "" yields no tokens.
std::vector<std::string> split_tokens(const std::string& text);

// Joins tokens with single spaces.
std::string join_tokens(const std::vector<std::string>& tokens);

}  // namespace arithlab
