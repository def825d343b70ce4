#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <set>

#include "arithlab/corpus.hpp"
#include "arithlab/decimal.hpp"
#include "arithlab/dialogue.hpp"
#include "arithlab/extract.hpp"
#include "arithlab/formats.hpp"
#include "oracle_helpers.hpp"

using namespace arithlab;

TEST_SUITE_BEGIN("datagen");

TEST_CASE("decimal arithmetic agrees with the 128-bit oracle") {
    Rng rng(11);
    for (int i = 0; i < 2000; ++i) {
        const std::string a = decimal::sample_with_digit_count(1 + static_cast<int>(rng.below(15)), rng);
        const std::string b = decimal::sample_with_digit_count(1 + static_cast<int>(rng.below(15)), rng);
        CHECK(decimal::mul(a, b) == oracle::mul(a, b));
        CHECK(decimal::add(a, b) == oracle::add(a, b));
    }
    CHECK(decimal::mul("0", "999") == "0");
    CHECK(decimal::canonical("000") == "0");
}

TEST_CASE("multiplication formats reproduce the published strings") {
    MulFormat fmt;
    fmt.max_digits = 5;

    fmt.pad = false;
    fmt.reverse = false;
    CHECK(format_multiplication("73866", "1001", fmt).text == "7 3 8 6 6 * 1 0 0 1 # 7 3 9 3 9 8 6 6");

    fmt.reverse = true;
    CHECK(format_multiplication("73866", "1001", fmt).text == "7 3 8 6 6 * 1 0 0 1 # 6 6 8 9 3 9 3 7");

    fmt.pad = true;
    fmt.reverse = false;
    CHECK(format_multiplication("73866", "1001", fmt).text ==
          "7 3 8 6 6 * 0 1 0 0 1 # 0 0 7 3 9 3 9 8 6 6");

    fmt.reverse = true;
    const Sample s = format_multiplication("73866", "1001", fmt);
    CHECK(s.text == "7 3 8 6 6 * 0 1 0 0 1 # 6 6 8 9 3 9 3 7 0 0");
    CHECK(s.answer == "73939866");
    CHECK(s.m1 == 5);
    CHECK(s.m2 == 4);
    CHECK(s.prompt_len == 12);
}

TEST_CASE("multiplication edge cases") {
    MulFormat fmt;
    fmt.max_digits = 1;
    CHECK(format_multiplication("0", "0", fmt).text == "0 * 0 # 0");

    fmt.max_digits = 2;
    fmt.pad = true;
    fmt.reverse = true;
    CHECK(format_multiplication("12", "34", fmt).text == "1 2 * 3 4 # 8 0 4 0");

    fmt.max_digits = 2;
    CHECK_THROWS_AS(format_multiplication("123", "4", fmt), std::invalid_argument);
}

TEST_CASE("augmentation lines reproduce the published examples") {
    MulFormat fmt;
    fmt.max_digits = 5;
    fmt.reverse = true;

    const auto [a1, b1] = apply_n_by_1("65125", "15306");
    CHECK(a1 == "65125");
    CHECK(b1 == "6");
    CHECK(format_multiplication(a1, b1, fmt).text == "6 5 1 2 5 * 6 # 0 5 7 0 9 3");

    const auto [a2, b2] = apply_n_by_1("22", "9");
    CHECK(format_multiplication(a2, b2, fmt).text == "2 2 * 9 # 8 9 1");

    CHECK(format_first_step("65125", "15306", fmt).text == "6 5 1 2 5 * 1 5 3 0 6 % 0 5 7 0 9 3");
    CHECK(format_first_step("22", "89", fmt).text == "2 2 * 8 9 % 8 9 1");

    const auto [a3, b3] = apply_n_by_1("7", "0");
    CHECK(a3 == "7");
    CHECK(b3 == "0");
    MulFormat basic;
    basic.max_digits = 1;
    CHECK(format_multiplication(a3, b3, basic).answer == "0");

    MulFormat plain;
    plain.max_digits = 2;
    const Sample fs = format_first_step("5", "10", plain);
    CHECK(fs.text == "5 * 1 0 % 0");
    CHECK(fs.answer == "0");
}

TEST_CASE("basic addition scratchpad") {
    const Sample s = format_addition_basic("239", "821");
    CHECK(s.text == "2 3 9 + 8 2 1 : 0 + 9 + 1 = 1 0 , 1 + 3 + 2 = 6 , 0 + 2 + 8 = 1 0 , 1 0 6 0");
    CHECK(s.answer == "1060");
    CHECK(s.prompt_len == 8);

    CHECK(format_addition_basic("0", "0").text == "0 + 0 : 0 + 0 + 0 = 0 , 0");

    const Sample carry = format_addition_basic("999", "1");
    CHECK(carry.answer == "1000");
    const std::string expect_tail = "1 0 0 0";
    CHECK(carry.text.substr(carry.text.size() - expect_tail.size()) == expect_tail);
    CHECK(carry.text == "9 9 9 + 1 : 0 + 9 + 1 = 1 0 , 1 + 9 + 0 = 1 0 , 1 + 9 + 0 = 1 0 , 1 0 0 0");
}

TEST_CASE("random space degenerate rates") {
    Rng rng(5);
    const Sample base = format_addition_basic("239", "821");
    const Sample none = format_addition_random_space("239", "821", 0.0, rng);
    CHECK(none.text == base.text);
    CHECK(none.prompt_len == base.prompt_len);

    const Sample all = format_addition_random_space("239", "821", 1.0, rng);
    const auto base_tokens = split_tokens(base.text);
    const auto all_tokens = split_tokens(all.text);
    REQUIRE(all_tokens.size() == 2 * base_tokens.size() - 1);
    for (size_t i = 0; i < all_tokens.size(); ++i)
        CHECK(all_tokens[i] == (i % 2 ? Vocabulary::filler_text() : base_tokens[i / 2]));
    // prompt still ends at ":"
    CHECK(all_tokens[static_cast<size_t>(all.prompt_len) - 1] == ":");
}

TEST_CASE("random space answers survive filler insertion") {
    Rng rng(7);
    const FormatSpec spec = AddFormat{AddVariant::RandomSpace, 0.3, true, 2, 10};
    for (int i = 0; i < 500; ++i) {
        const AddendPair p = sample_addend_pair_train(2, 10, rng);
        const Sample s = format_addition_random_space(p.a, p.b, 0.3, rng);
        const auto got = extract_answer(spec, s.text);
        REQUIRE(got.has_value());
        CHECK(*got == oracle::add(p.a, p.b));
    }
}

TEST_CASE("recursive scratchpad matches the published trace") {
    const Sample s = format_addition_recursive("239", "821", false);
    CHECK(s.text ==
          "2 3 9 + 8 2 1 : 0 + 9 + 1 = 1 0 , = 0 , 3 2 + 2 8 : 1 + 3 + 2 = 6 , = 6 0 , 2 + 8 : "
          "0 + 2 + 8 = 1 0 , = 0 6 0 , = 1 0 6 0");
    CHECK(s.answer == "1060");
    CHECK(s.prompt_len == 8);

    const Sample one = format_addition_recursive("9", "9", true);
    CHECK(one.text == "9 + 9 : 0 + 9 + 9 = 1 8 , = 8 , = 1 8");

    // reversed addends change only the header
    const Sample rev = format_addition_recursive("239", "821", true);
    CHECK(split_tokens(rev.text)[0] == "9");
    CHECK(rev.answer == "1060");
}

TEST_CASE("recursive scratchpad final sum equals the oracle") {
    Rng rng(13);
    const FormatSpec spec = AddFormat{AddVariant::Recursive, 0.3, true, 2, 10};
    for (int i = 0; i < 2000; ++i) {
        const AddendPair p = sample_addend_pair_train(2, 10, rng);
        const Sample s = format_addition_recursive(p.a, p.b, i % 2 == 0);
        CHECK(s.answer == oracle::add(p.a, p.b));
        const auto got = extract_answer(spec, s.text);
        REQUIRE(got.has_value());
        CHECK(*got == s.answer);
    }
}

TEST_CASE("digit reversal") {
    CHECK(format_reversal("12345").text == "1 2 3 4 5 > 5 4 3 2 1");
    CHECK(format_reversal("7").text == "7 > 7");
    const Sample s = format_reversal("1200");
    CHECK(s.text == "1 2 0 0 > 0 0 2 1");
    CHECK(s.answer == "21");
}

TEST_CASE("repetitive generator") {
    Rng rng(3);
    const std::string x = gen_repetitive(3, rng);
    REQUIRE(x.size() == 3);
    CHECK(x[0] == x[1]);
    CHECK(x[1] == x[2]);
    CHECK(gen_repetitive(1, rng).size() == 1);

    std::vector<long> counts(10, 0);
    const long draws = 100000;
    for (long i = 0; i < draws; ++i) {
        const std::string v = gen_repetitive(5, rng);
        ++counts[static_cast<size_t>(v[0] - '0')];
    }
    int df = 0;
    const double stat = oracle::chi2_stat(counts, std::vector<double>(10, 0.1), draws, &df);
    CHECK(df == 9);
    CHECK(stat < oracle::chi2_crit_001(df));
}

TEST_CASE("mix addition formats") {
    Rng rng(9);
    const MixSub basic{false, 1, 5};
    CHECK(format_mix_addition("48", "4", basic, rng).text == "4 8 + 4 = 5 2");
    CHECK(format_mix_addition("375", "261", basic, rng).text == "3 7 5 + 2 6 1 = 6 3 6");
    CHECK(format_mix_addition("5051", "8539", basic, rng).text == "5 0 5 1 + 8 5 3 9 = 1 3 5 9 0");

    const MixSub spaced{true, 1, 5};
    for (int i = 0; i < 200; ++i) {
        const Sample s = format_mix_addition("48", "4", spaced, rng);
        const auto tokens = split_tokens(s.text);
        int runs[2] = {0, 0};
        int run_idx = -1;
        for (const auto& t : tokens) {
            if (t == Vocabulary::filler_text()) {
                REQUIRE(run_idx >= 0);
                ++runs[run_idx];
            } else if (run_idx < 1 && t != "4" && t != "8") {
                FAIL("unexpected token in spaced sample");
            }
            if (t == "8" && run_idx == -1) run_idx = 0;
            if (run_idx == 0 && runs[0] > 0 && t == "4") run_idx = 1;
        }
        CHECK(runs[0] >= 1);
        CHECK(runs[0] <= 5);
        CHECK(runs[1] >= 1);
        CHECK(runs[1] <= 5);
    }
}

TEST_CASE("dialogue substitution mirrors the published example") {
    const Sample s = gen_dialogue("842", "62", 0);
    CHECK(s.text.find("add two numbers , 8 4 2 and 6 2 .") != std::string::npos);
    CHECK(s.text.find("The answer is 9 0 4 .") != std::string::npos);
    CHECK(s.answer == "904");
    const auto tokens = split_tokens(s.text);
    CHECK(tokens[static_cast<size_t>(s.prompt_len)] == "9");
    CHECK(tokens[static_cast<size_t>(s.prompt_len) - 1] == "is");

    CHECK(gen_dialogue("0", "0", 3).answer == "0");
    CHECK_THROWS_AS(gen_dialogue("1", "2", -1), std::invalid_argument);
    CHECK_THROWS_AS(gen_dialogue("1", "2", dialogue_template_count()), std::invalid_argument);
}

TEST_CASE("dialogue oracle bookkeeping over generated corpora") {
    MixFormat fmt = default_mix_format(false, 0);
    fmt.dialogue_bands[0].count = 5000;
    fmt.dialogue_bands[1].count = 5000;
    fmt.dialogue_bands[1].wrong_answer_rate = 0.05;  // amplified to make the count testable
    const auto samples = generate_corpus(fmt, 10000, 77);
    const FormatSpec spec = fmt;
    int wrong = 0;
    for (const Sample& s : samples) {
        const auto got = extract_answer(spec, s.text);
        REQUIRE(got.has_value());
        if (s.wrong_answer) {
            ++wrong;
            CHECK(*got != s.answer);
        } else {
            CHECK(*got == s.answer);
        }
    }
    // ~250 expected at 5% of 5000; allow a generous band
    CHECK(wrong > 150);
    CHECK(wrong < 400);
}

TEST_CASE("eval prompt tokenization") {
    CHECK(dialogue_eval_prompt("34", "432") == "Student : Hi , what is the sum of 3 4 and 4 3 2 ?");
}

TEST_CASE("sample_digit_count follows the weighted law") {
    Rng rng(21);
    SUBCASE("alpha=1 is uniform") {
        std::vector<long> counts(5, 0);
        const long draws = 100000;
        for (long i = 0; i < draws; ++i) ++counts[static_cast<size_t>(sample_digit_count(5, 1.0, rng) - 1)];
        int df = 0;
        const double stat = oracle::chi2_stat(counts, std::vector<double>(5, 0.2), draws, &df);
        CHECK(stat < oracle::chi2_crit_001(df));
    }
    SUBCASE("alpha=0 excludes single digits") {
        for (int i = 0; i < 10000; ++i) CHECK(sample_digit_count(10, 0.0, rng) >= 2);
    }
    SUBCASE("alpha=0.4 at n=3") {
        std::vector<long> counts(3, 0);
        const long draws = 200000;
        for (long i = 0; i < draws; ++i) ++counts[static_cast<size_t>(sample_digit_count(3, 0.4, rng) - 1)];
        const std::vector<double> probs = {0.4 / 2.4, 1.0 / 2.4, 1.0 / 2.4};
        int df = 0;
        const double stat = oracle::chi2_stat(counts, probs, draws, &df);
        CHECK(stat < oracle::chi2_crit_001(df));
    }
    SUBCASE("degenerate weights are rejected") {
        CHECK_THROWS_AS(sample_digit_count(1, 0.0, rng), std::invalid_argument);
    }
}

TEST_CASE("value sampling laws") {
    Rng rng(31);
    for (int i = 0; i < 2000; ++i) {
        const std::string v1 = sample_value_with_digits(1, rng);
        CHECK(v1.size() == 1);
        const std::string v3 = sample_value_with_digits(3, rng);
        CHECK(v3.size() == 3);
        CHECK(v3[0] != '0');
    }
    double mean = 0.0;
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) mean += std::stod(sample_value_with_digits(2, rng));
    mean /= draws;
    CHECK(mean == doctest::Approx(54.5).epsilon(0.02));
}

TEST_CASE("addend pair law") {
    Rng rng(41);
    long below = 0;
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) {
        const AddendPair p = sample_addend_pair_train(2, 2, rng);
        CHECK(p.a.size() <= 2);
        CHECK(p.b.size() <= 2);
        if (p.a.size() < 2) ++below;
    }
    // P(addend < 10) == 0.1
    CHECK(static_cast<double>(below) / draws == doctest::Approx(0.1).epsilon(0.05));

    for (int i = 0; i < 1000; ++i) {
        const AddendPair p = sample_addend_pair_train(2, 10, rng);
        CHECK(p.n >= 2);
        CHECK(p.n <= 10);
        CHECK(static_cast<int>(p.a.size()) <= p.n);
    }
}

TEST_CASE("corpus generation is deterministic and counts augmented lines") {
    MulFormat fmt;
    fmt.max_digits = 5;
    fmt.reverse = true;
    fmt.aug = MulAug::FirstStep;
    fmt.aug_every = 3;

    const auto a = generate_corpus(fmt, 9, 42);
    const auto b = generate_corpus(fmt, 9, 42);
    REQUIRE(a.size() == 9);
    for (size_t i = 0; i < a.size(); ++i) CHECK(a[i].text == b[i].text);

    int pct = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        const bool has_pct = a[i].text.find('%') != std::string::npos;
        CHECK(has_pct == (i % 3 == 0));
        pct += has_pct ? 1 : 0;
    }
    CHECK(pct == 3);

    const auto c = generate_corpus(fmt, 9, 43);
    bool any_diff = false;
    for (size_t i = 0; i < a.size(); ++i) any_diff |= a[i].text != c[i].text;
    CHECK(any_diff);
}

TEST_CASE("corpus writing round-trips through load") {
    MulFormat fmt;
    fmt.max_digits = 3;
    const FormatSpec spec = fmt;
    const auto samples = generate_corpus(spec, 50, 7);
    const Vocabulary vocab = vocabulary_for(spec);
    const std::string dir = "corpus_roundtrip_test";
    write_corpus(dir, spec, 7, samples, vocab);

    const LoadedCorpus loaded = load_corpus(dir);
    CHECK(loaded.seed == 7);
    REQUIRE(loaded.samples.size() == samples.size());
    for (size_t i = 0; i < samples.size(); ++i) {
        CHECK(loaded.samples[i].text == samples[i].text);
        CHECK(loaded.samples[i].prompt_len == samples[i].prompt_len);
        CHECK(loaded.samples[i].answer == samples[i].answer);
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("oracle soundness across every format family") {
    Rng rng(55);
    const int per_format = 1500;

    for (const bool pad : {false, true}) {
        for (const bool rev : {false, true}) {
            MulFormat fmt;
            fmt.max_digits = 10;
            fmt.pad = pad;
            fmt.reverse = rev;
            const FormatSpec spec = fmt;
            for (int i = 0; i < per_format; ++i) {
                const std::string a = sample_value_with_digits(sample_digit_count(10, 1.0, rng), rng);
                const std::string b = sample_value_with_digits(sample_digit_count(10, 1.0, rng), rng);
                const Sample s = format_multiplication(a, b, fmt);
                CHECK(s.answer == oracle::mul(a, b));
                const auto got = extract_answer(spec, s.text);
                REQUIRE(got.has_value());
                CHECK(*got == s.answer);
            }
        }
    }

    const FormatSpec basic_add = AddFormat{AddVariant::Basic, 0.3, true, 2, 13};
    for (int i = 0; i < per_format; ++i) {
        const AddendPair p = sample_addend_pair_train(2, 13, rng);
        const Sample s = format_addition_basic(p.a, p.b);
        CHECK(s.answer == oracle::add(p.a, p.b));
        CHECK(extract_answer(basic_add, s.text).value() == s.answer);
    }

    const FormatSpec rev_spec = RevFormat{2, 13};
    for (int i = 0; i < per_format; ++i) {
        const std::string x = decimal::sample_below_pow10(2 + static_cast<int>(rng.below(12)), rng);
        const Sample s = format_reversal(x);
        std::string manual = x;
        std::reverse(manual.begin(), manual.end());
        CHECK(s.answer == decimal::canonical(manual));
        CHECK(extract_answer(rev_spec, s.text).value() == s.answer);
    }
}

TEST_SUITE_END();
