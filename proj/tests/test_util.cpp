#include <doctest.h>

#include <nlohmann/json.hpp>

#include "mirage/util.hpp"

using namespace mirage;

TEST_CASE("fnv1a64 matches reference vectors") {
    // Reference values from the FNV-1a specification.
    CHECK(util::fnv1a64("") == 0xcbf29ce484222325ull);
    CHECK(util::fnv1a64("a") == 0xaf63dc4c8601ec8cull);
    CHECK(util::fnv1a64("foobar") == 0x85944171f73967e8ull);
}

TEST_CASE("digest_hex is stable and 16 chars") {
    auto d = util::digest_hex("hello");
    CHECK(d.size() == 16);
    CHECK(d == util::digest_hex("hello"));
    CHECK(d != util::digest_hex("hello!"));
}

TEST_CASE("json_digest ignores key insertion order") {
    nlohmann::json a;
    a["x"] = 1;
    a["y"] = 2;
    nlohmann::json b;
    b["y"] = 2;
    b["x"] = 1;
    CHECK(util::json_digest(a) == util::json_digest(b));
}

TEST_CASE("split_seed decorrelates labels") {
    auto a = util::split_seed(42, "alpha");
    auto b = util::split_seed(42, "beta");
    auto c = util::split_seed(43, "alpha");
    CHECK(a != b);
    CHECK(a != c);
    CHECK(a == util::split_seed(42, "alpha"));
}

TEST_CASE("tokenize lowercases and splits on non-alnum") {
    auto tokens = util::tokenize("The Save-button 2x");
    REQUIRE(tokens.size() == 4);
    CHECK(tokens[0] == "the");
    CHECK(tokens[1] == "save");
    CHECK(tokens[2] == "button");
    CHECK(tokens[3] == "2x");
}

TEST_CASE("token_overlap is Jaccard over token sets") {
    // {the,save,button} vs {save,button}: 2 shared of 3 distinct.
    CHECK(util::token_overlap("the Save button", "Save button") == doctest::Approx(2.0 / 3.0));
    CHECK(util::token_overlap("a b", "c d") == 0.0);
    CHECK(util::token_overlap("same", "same") == 1.0);
}

TEST_CASE("substitute_placeholders binds and reports missing") {
    std::vector<std::pair<std::string, std::string>> row{{"name", "Ann"}};
    CHECK(util::substitute_placeholders("hi {name}!", row) == "hi Ann!");
    std::vector<std::string> missing;
    CHECK(util::substitute_placeholders("hi {nick}", row, &missing) == "hi ");
    REQUIRE(missing.size() == 1);
    CHECK(missing[0] == "nick");
    CHECK_THROWS_AS(util::substitute_placeholders("hi {nick}", row), std::runtime_error);
}

TEST_CASE("placeholder_names dedupes in order") {
    auto names = util::placeholder_names("{a} {b} {a}");
    REQUIRE(names.size() == 2);
    CHECK(names[0] == "a");
    CHECK(names[1] == "b");
}
