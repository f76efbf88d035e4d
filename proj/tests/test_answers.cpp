#include "secot/answers.hpp"

#include <doctest.h>

#include <stdexcept>

using namespace secot;

TEST_CASE("numeric extraction takes the last number") {
    const auto format = AnswerFormat::numeric();
    auto a = normalize_answer("3 * 4 * 1 * 3 = 36 ways", format);
    REQUIRE(a.has_value());
    CHECK(a->text == "36");
    CHECK(*a->value == doctest::Approx(36.0));

    a = normalize_answer("Multiplying gives 27 * 256 * 1 * 27 = 186,624 ways.", format);
    REQUIRE(a.has_value());
    CHECK(a->text == "186624");

    a = normalize_answer("The total is 36.", format);
    REQUIRE(a.has_value());
    CHECK(a->text == "36");

    a = normalize_answer("about -5.39 km away", format);
    REQUIRE(a.has_value());
    CHECK(*a->value == doctest::Approx(-5.39));
}

TEST_CASE("numeric extraction failures") {
    const auto format = AnswerFormat::numeric();
    CHECK_FALSE(normalize_answer("", format).has_value());
    CHECK_FALSE(normalize_answer("no digits here", format).has_value());
}

TEST_CASE("grouping commas are stripped, list commas are not merged") {
    const auto format = AnswerFormat::numeric();
    CHECK(normalize_answer("1,2", format)->text == "2");        // a list, not a group
    CHECK(normalize_answer("x = 12,345,678", format)->text == "12345678");
    CHECK(normalize_answer("take 1,2345", format)->text == "2345");
}

TEST_CASE("numeric canonicalization merges equal values") {
    const auto format = AnswerFormat::numeric();
    CHECK(normalize_answer("36", format)->text == normalize_answer("36.0", format)->text);
}

TEST_CASE("multiple choice prefers parenthesized letters") {
    const auto format = AnswerFormat::multiple_choice("ABCDE");
    auto a = normalize_answer("the answer is (D) 6 : n", format);
    REQUIRE(a.has_value());
    CHECK(a->text == "D");

    // bare standalone letter, last one wins
    a = normalize_answer("maybe B. Actually the answer is C", format);
    REQUIRE(a.has_value());
    CHECK(a->text == "C");

    // lowercase standalone letters are articles, not answers
    CHECK_FALSE(normalize_answer("a road goes on", format).has_value());

    // letters outside the valid set are ignored
    CHECK_FALSE(normalize_answer("the answer is (F)", format).has_value());
}

TEST_CASE("yes/no takes the last occurrence, case-insensitive") {
    const auto format = AnswerFormat::yes_no();
    CHECK(normalize_answer("Yes. Wait, no.", format)->text == "no");
    CHECK(normalize_answer("The coin is heads up, so YES", format)->text == "yes");
    CHECK_FALSE(normalize_answer("nothing of note", format).has_value()); // no bare yes/no word
}

TEST_CASE("free form extracts after the trigger") {
    const auto format = AnswerFormat::free_form();
    auto a = normalize_answer("Let's see. Therefore, the answer is EnAd.", format);
    REQUIRE(a.has_value());
    CHECK(a->text == "enad");

    // no trigger: last non-empty line
    a = normalize_answer("working...\n\n  eNAd!  \n", format);
    REQUIRE(a.has_value());
    CHECK(a->text == "enad");

    CHECK_FALSE(normalize_answer("???", format).has_value());
}

TEST_CASE("gold number parsing handles decorated answers") {
    CHECK(*parse_gold_number("72") == doctest::Approx(72));
    CHECK(*parse_gold_number("some steps\n#### 72") == doctest::Approx(72));
    CHECK_FALSE(parse_gold_number("none").has_value());
}

TEST_CASE("multiple choice format requires letters") {
    CHECK_THROWS_AS((void)AnswerFormat::multiple_choice(""), std::invalid_argument);
}
