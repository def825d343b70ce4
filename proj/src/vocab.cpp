#include "arithlab/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace arithlab {

std::vector<std::string> split_tokens(const std::string& text) {
    std::vector<std::string> out;
    size_t start = 0;
    while (start <= text.size()) {
        const size_t pos = text.find(' ', start);
        if (pos == std::string::npos) {
            if (start < text.size()) out.push_back(text.substr(start));
            break;
        }
        out.push_back(text.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
    std::string out;
    for (size_t i = 0; i < tokens.size(); ++i) {
        if (i) out += ' ';
        out += tokens[i];
    }
    return out;
}

namespace {

const char* kOperators[] = {"+", "*", "#", "%", "=", ":", ",", ">", "?"};

bool is_slot(const std::string& tok) {
    return tok == "{A}" || tok == "{B}" || tok == "{S}";
}

}  // namespace

void Vocabulary::add(const std::string& symbol) {
    if (symbol.empty()) throw std::invalid_argument("vocabulary: empty symbol");
    auto [it, inserted] = index_.emplace(symbol, static_cast<TokenId>(symbols_.size()));
    if (!inserted) throw std::invalid_argument("vocabulary: duplicate symbol '" + symbol + "'");
    symbols_.push_back(symbol);
}

Vocabulary Vocabulary::build(const std::vector<std::string>& template_corpus) {
    Vocabulary v;
    v.add(bos_text());
    v.add(eos_text());
    v.add(pad_text());
    v.add(filler_text());
    v.digit0_ = static_cast<TokenId>(v.symbols_.size());
    for (int d = 0; d < 10; ++d) v.add(std::string(1, static_cast<char>('0' + d)));
    for (const char* op : kOperators) v.add(op);

    std::set<std::string> words;
    for (const std::string& tpl : template_corpus) {
        for (const std::string& tok : split_tokens(tpl)) {
            if (is_slot(tok)) continue;
            if (v.index_.count(tok)) continue;  // operators/punctuation reuse fixed symbols
            words.insert(tok);
        }
    }
    for (const std::string& w : words) v.add(w);
    return v;
}

const std::string& Vocabulary::symbol(TokenId id) const {
    if (id < 0 || id >= size()) throw std::out_of_range("vocabulary: id " + std::to_string(id) + " out of range");
    return symbols_[static_cast<size_t>(id)];
}

TokenId Vocabulary::id(const std::string& symbol) const {
    auto it = index_.find(symbol);
    if (it == index_.end()) throw std::out_of_range("vocabulary: unknown symbol '" + symbol + "'");
    return it->second;
}

TokenSeq Vocabulary::encode(const std::string& text) const {
    TokenSeq seq;
    const std::vector<std::string> tokens = split_tokens(text);
    seq.ids.reserve(tokens.size());
    for (size_t i = 0; i < tokens.size(); ++i) {
        auto it = index_.find(tokens[i]);
        if (it == index_.end()) {
            throw std::invalid_argument("encode: unknown symbol '" + tokens[i] + "' at position " +
                                        std::to_string(i));
        }
        seq.ids.push_back(it->second);
    }
    seq.prompt_len = static_cast<int>(seq.ids.size());
    return seq;
}

std::string Vocabulary::decode(const std::vector<TokenId>& ids) const {
    std::string out;
    for (size_t i = 0; i < ids.size(); ++i) {
        if (i) out += ' ';
        out += symbol(ids[i]);
    }
    return out;
}

void Vocabulary::save(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("vocabulary: cannot write " + path);
    for (const std::string& s : symbols_) f << s << '\n';
}

Vocabulary Vocabulary::load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("vocabulary: cannot read " + path);
    Vocabulary v;
    std::string line;
    while (std::getline(f, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        v.add(line);
    }
    if (v.size() < 23) throw std::runtime_error("vocabulary: file " + path + " too small");
    for (int d = 0; d < 10; ++d) {
        if (v.symbols_[static_cast<size_t>(v.digit0_ + d)] != std::string(1, static_cast<char>('0' + d)))
            throw std::runtime_error("vocabulary: file " + path + " has unexpected digit layout");
    }
    return v;
}

}  // namespace arithlab
