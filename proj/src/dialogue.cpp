#include "arithlab/dialogue.hpp"

#include <stdexcept>

#include "arithlab/decimal.hpp"

namespace arithlab {

const std::vector<std::string>& builtin_dialogue_templates() {
    static const std::vector<std::string> templates = {
        "Student : Excuse me , can you help me with something ? I need to add two numbers , {A} and {B} . "
        "Teacher : Of course , let me do the calculation for you . The answer is {S} .",
        "Student : Good morning ! Can you help me with a math problem ? I need to find the sum of {A} and {B} . "
        "Teacher : Good morning ! Sure thing . The answer is {S} .",
        "Student : Hi , can you help me add two numbers , {A} and {B} ? Teacher : Sure . {S} is the answer .",
        "Student : Hi , what is the sum of {A} and {B} ? Teacher : The answer is {S} .",
        "Student : Hello ! Could you add {A} and {B} for me ? Teacher : Happy to help . You get {S} .",
        "Student : Sorry to bother you , but what do {A} and {B} add up to ? Teacher : No bother at all . "
        "They add up to {S} .",
        "Student : Quick question : what is {A} plus {B} ? Teacher : That one is easy . It is {S} .",
        "Student : I am stuck on adding {A} and {B} . Can you check it for me ? Teacher : Let me see . "
        "The total comes out to {S} .",
        "Student : My homework asks for the sum of {A} and {B} . Teacher : Take it one digit at a time . "
        "The sum is {S} .",
        "Student : Would you mind adding {A} and {B} ? Teacher : Not at all . The result is {S} .",
        "Student : Hey , I keep getting different results for {A} plus {B} . Teacher : Happens to everyone . "
        "The correct result is {S} .",
        "Student : Can we do one more exercise ? Add {A} and {B} please . Teacher : Certainly . "
        "That gives {S} .",
        "Student : What do you get when you add {A} to {B} ? Teacher : Adding them carefully , I get {S} .",
        "Student : Good afternoon ! Please compute {A} plus {B} . Teacher : Good afternoon ! "
        "The computation gives {S} .",
        "Student : Is it hard to add {A} and {B} in your head ? Teacher : Not really . The answer is {S} .",
        "Student : Before the quiz , could you verify that I can add {A} and {B} ? Teacher : Of course . "
        "You should get {S} .",
        "Student : I wrote down {A} plus {B} but forgot the total . Teacher : No problem . The total is {S} .",
        "Student : One last thing : the sum of {A} and {B} ? Teacher : Here you go : {S} .",
        "Student : Could you walk me through {A} plus {B} ? Teacher : Align the digits , carry when needed , "
        "and you land on {S} .",
        "Student : My calculator is broken . What is {A} plus {B} ? Teacher : You do not need it . "
        "The answer is {S} .",
        "Student : Do {A} and {B} really sum to a big number ? Teacher : See for yourself : the sum is {S} .",
        "Student : Teacher , please add the numbers {A} and {B} . Teacher : Done . It equals {S} .",
        "Student : For practice , what is {A} added to {B} ? Teacher : For practice then : {S} .",
        "Student : I bet you cannot add {A} and {B} quickly ! Teacher : Watch me . It is {S} .",
    };
    return templates;
}

int dialogue_template_count() { return static_cast<int>(builtin_dialogue_templates().size()); }

Sample gen_dialogue(const std::string& a, const std::string& b, int template_id,
                    const std::string& written_answer) {
    const auto& templates = builtin_dialogue_templates();
    if (template_id < 0 || template_id >= static_cast<int>(templates.size()))
        throw std::invalid_argument("gen_dialogue: template id out of range");
    if (!decimal::is_canonical(a) || !decimal::is_canonical(b))
        throw std::invalid_argument("gen_dialogue: operands must be canonical decimals");

    const std::string sum = decimal::add(a, b);
    const std::string& written = written_answer.empty() ? sum : written_answer;

    std::vector<std::string> out;
    int prompt_len = -1;
    int slots_a = 0, slots_b = 0, slots_s = 0;
    for (const std::string& tok : split_tokens(templates[static_cast<size_t>(template_id)])) {
        if (tok == "{A}") {
            detail::append_digit_tokens(out, a);
            ++slots_a;
        } else if (tok == "{B}") {
            detail::append_digit_tokens(out, b);
            ++slots_b;
        } else if (tok == "{S}") {
            prompt_len = static_cast<int>(out.size());
            detail::append_digit_tokens(out, written);
            ++slots_s;
        } else {
            out.push_back(tok);
        }
    }
    if (slots_a != 1 || slots_b != 1 || slots_s != 1)
        throw std::invalid_argument("gen_dialogue: template must contain {A}, {B} and {S} exactly once");

    Sample s;
    s.text = join_tokens(out);
    s.prompt_len = prompt_len;
    s.answer = sum;
    s.m1 = decimal::digit_count(a);
    s.m2 = decimal::digit_count(b);
    s.wrong_answer = written != sum;
    return s;
}

std::string dialogue_eval_prompt(const std::string& a, const std::string& b) {
    std::vector<std::string> out = {"Student", ":", "Hi", ",", "what", "is", "the", "sum", "of"};
    detail::append_digit_tokens(out, a);
    out.push_back("and");
    detail::append_digit_tokens(out, b);
    out.push_back("?");
    return join_tokens(out);
}

}  // namespace arithlab
