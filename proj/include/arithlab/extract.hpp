#pragma once

#include <optional>
#include <string>
#include <vector>

#include "arithlab/formats.hpp"

namespace arithlab {

// Pulls the answer span out of a (possibly model-generated) token string and
// normalizes it to a canonical decimal: un-reverses reversed products, strips
// padding zeros. FILLER tokens are skipped at a run boundary and terminate a
// run once digits have started. Returns nullopt when no digit run exists
// where the format requires one; never throws on malformed generations.
std::optional<std::string> extract_answer(const FormatSpec& fmt, const std::string& generated);

// Answer extraction for the fixed dialogue evaluation prompt (last maximal
// digit run).
std::optional<std::string> extract_last_digit_run(const std::string& generated);

// Number of tokens through the format's separator, recovered from a corpus
// line. Returns nullopt when the separator is absent.
std::optional<int> prompt_boundary(const FormatSpec& fmt, const std::vector<std::string>& tokens);

}  // namespace arithlab
