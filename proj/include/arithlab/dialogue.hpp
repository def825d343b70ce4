#pragma once

#include <memory>
#include <string>
#include <vector>

#include "arithlab/formats.hpp"
#include "arithlab/rng.hpp"

namespace arithlab {

// Token-spaced dialogue templates with {A}, {B}, {S} substitution slots.
// These replace the external-LLM dialogue pipeline with a deterministic,
// oracle-checkable generator.
const std::vector<std::string>& builtin_dialogue_templates();

int dialogue_template_count();

// Substitutes digit-token runs for the slots. prompt_len covers everything
// through the final teacher phrase preceding the answer digits. Throws
// std::invalid_argument when the template lacks one of the three slots or
// template_id is out of range. `written_answer` overrides the rendered sum
// (noise injection); the returned Sample keeps the true sum in `answer`.
Sample gen_dialogue(const std::string& a, const std::string& b, int template_id,
                    const std::string& written_answer = "");

// The fixed evaluation question, e.g.
// "Student : Hi , what is the sum of 3 4 and 4 3 2 ?".
std::string dialogue_eval_prompt(const std::string& a, const std::string& b);

// Optional hook for sourcing dialogue lines from an external LLM. Disabled by
// default; the deterministic template generator above is the production path
// and the only one exercised by tests.
class ExternalDialogueClient {
public:
    virtual ~ExternalDialogueClient() = default;
    // Takes a full instruction prompt, returns one dialogue per element.
    virtual std::vector<std::string> generate(const std::string& prompt) = 0;
};

}  // namespace arithlab
