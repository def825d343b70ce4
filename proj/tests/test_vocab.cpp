#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "arithlab/dialogue.hpp"
#include "arithlab/vocab.hpp"

using namespace arithlab;

TEST_SUITE_BEGIN("vocab");

TEST_CASE("empty template set yields the closed 23-symbol set") {
    const Vocabulary v = Vocabulary::build({});
    CHECK(v.size() == 23);
    CHECK(v.symbol(Vocabulary::kBos) == "<bos>");
    CHECK(v.symbol(Vocabulary::kEos) == "<eos>");
    CHECK(v.symbol(Vocabulary::kPad) == "<pad>");
    CHECK(v.symbol(Vocabulary::kFiller) == "_");
    for (int d = 0; d < 10; ++d) CHECK(v.symbol(v.digit_id(d)) == std::string(1, '0' + d));
    for (const char* op : {"+", "*", "#", "%", "=", ":", ",", ">", "?"}) CHECK(v.contains(op));
}

TEST_CASE("template words join the vocabulary") {
    const Vocabulary v = Vocabulary::build({"Teacher : hello {A} {B} {S}"});
    CHECK(v.contains("Teacher"));
    CHECK(v.contains("hello"));
    CHECK_FALSE(v.contains("{A}"));
}

TEST_CASE("builds are deterministic") {
    const auto& templates = builtin_dialogue_templates();
    const Vocabulary a = Vocabulary::build(templates);
    const Vocabulary b = Vocabulary::build(templates);
    REQUIRE(a.size() == b.size());
    CHECK(a.symbols() == b.symbols());
}

TEST_CASE("digits and punctuation in templates reuse the fixed symbols") {
    const Vocabulary base = Vocabulary::build({});
    const Vocabulary v = Vocabulary::build({"count to 7 with : and , {A} {B} {S}"});
    CHECK(v.size() == base.size() + 4);  // count, to, with, and
    CHECK(v.id("7") == base.id("7"));
    CHECK(v.id(":") == base.id(":"));
}

TEST_CASE("encode/decode round trip and errors") {
    const Vocabulary v = Vocabulary::build({});
    const TokenSeq seq = v.encode("2 3 9");
    REQUIRE(seq.ids.size() == 3);
    CHECK(seq.ids[0] == v.id("2"));
    CHECK(seq.ids[1] == v.id("3"));
    CHECK(seq.ids[2] == v.id("9"));
    CHECK(v.decode(seq.ids) == "2 3 9");

    CHECK(v.encode("").ids.empty());

    try {
        v.encode("2 bogus 9");
        FAIL("expected throw");
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        CHECK(msg.find("bogus") != std::string::npos);
        CHECK(msg.find("1") != std::string::npos);
    }

    CHECK_THROWS_AS(v.decode({static_cast<TokenId>(v.size())}), std::out_of_range);
}

TEST_CASE("vocabulary file round-trips bit-exactly") {
    const Vocabulary v = Vocabulary::build(builtin_dialogue_templates());
    const std::string path = "vocab_roundtrip_test.txt";
    v.save(path);
    const Vocabulary loaded = Vocabulary::load(path);
    CHECK(loaded.symbols() == v.symbols());

    std::ifstream f(path, std::ios::binary);
    std::string bytes1((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    loaded.save(path);
    std::ifstream g(path, std::ios::binary);
    std::string bytes2((std::istreambuf_iterator<char>(g)), std::istreambuf_iterator<char>());
    CHECK(bytes1 == bytes2);
    std::remove(path.c_str());
}

TEST_SUITE_END();
