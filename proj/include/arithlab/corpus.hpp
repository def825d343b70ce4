#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "arithlab/formats.hpp"
#include "arithlab/vocab.hpp"

namespace arithlab {

// (spec, seed, size) -> samples; byte-deterministic. Augmented multiplication
// corpora transform every aug_every-th sample (indices == 0 mod aug_every).
std::vector<Sample> generate_corpus(const FormatSpec& spec, int size, uint64_t seed);

// Vocabulary a corpus of this format needs: the arithmetic symbol set, plus
// the dialogue template words for mix corpora.
Vocabulary vocabulary_for(const FormatSpec& spec);

nlohmann::json spec_to_json(const FormatSpec& spec);
FormatSpec spec_from_json(const nlohmann::json& j);

// FNV-1a over a canonical JSON dump; embedded into output files.
uint64_t config_hash(const nlohmann::json& j);

// Writes corpus.txt (one sample per line), vocab.txt and manifest.json
// ({seed, spec, size, per_cell_counts}) into `dir`. Throws with the path on
// I/O failure.
void write_corpus(const std::string& dir, const FormatSpec& spec, uint64_t seed,
                  const std::vector<Sample>& samples, const Vocabulary& vocab);

struct LoadedCorpus {
    FormatSpec spec;
    uint64_t seed = 0;
    std::vector<Sample> samples;  // prompt_len/answer recovered per line
    Vocabulary vocab;
};

LoadedCorpus load_corpus(const std::string& dir);

// Per-(m1, m2) sample counts.
std::map<std::pair<int, int>, int> cell_counts(const std::vector<Sample>& samples);

}  // namespace arithlab
