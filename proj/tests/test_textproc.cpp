#include <random>
#include <stdexcept>

#include "doctest.h"

#include "kselect/textproc.hpp"

using namespace kselect;

TEST_CASE("normalize lowercases and strips punctuation") {
    CHECK(normalize("Gonville Hotel!") == "gonville hotel");
    CHECK(normalize("") == "");
    CHECK(normalize("A  &  B") == "a b");
    CHECK(normalize("don't stop") == "don t stop");
    CHECK(normalize("  leading and trailing  ") == "leading and trailing");
    CHECK(normalize("room 42") == "room 42");
}

TEST_CASE("normalize keeps multi-byte sequences intact") {
    CHECK(normalize("caf\xc3\xa9 bar") == "caf\xc3\xa9 bar");
}

TEST_CASE("normalize is idempotent on random strings") {
    std::mt19937 rng(2024);
    const std::string alphabet = "abcXYZ 019!?,.-'&\xc3\xa9";
    std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
    std::uniform_int_distribution<int> len(0, 60);
    for (int i = 0; i < 200; ++i) {
        std::string s;
        const int n = len(rng);
        for (int j = 0; j < n; ++j) s.push_back(alphabet[pick(rng)]);
        const std::string once = normalize(s);
        CHECK(normalize(once) == once);
    }
}

TEST_CASE("tokenize splits into normalized tokens with source offsets") {
    auto tokens = tokenize("gonville hotel");
    REQUIRE(tokens.size() == 2);
    CHECK(tokens[0].surface == "gonville");
    CHECK(tokens[1].surface == "hotel");

    CHECK(tokenize("").empty());

    tokens = tokenize("don't stop");
    REQUIRE(tokens.size() == 3);
    CHECK(tokens[0].surface == "don");
    CHECK(tokens[1].surface == "t");
    CHECK(tokens[2].surface == "stop");
    CHECK(tokens[1].start == 4);
    CHECK(tokens[1].end == 5);
}

TEST_CASE("tokenize offsets map back to the original string") {
    std::mt19937 rng(77);
    const std::string alphabet = "abWZ 09.,!-";
    std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
    std::uniform_int_distribution<int> len(0, 50);
    for (int i = 0; i < 200; ++i) {
        std::string s;
        const int n = len(rng);
        for (int j = 0; j < n; ++j) s.push_back(alphabet[pick(rng)]);
        std::string joined;
        for (const Token& t : tokenize(s)) {
            REQUIRE(t.start < t.end);
            REQUIRE(t.end <= s.size());
            CHECK(normalize(s.substr(t.start, t.end - t.start)) == t.surface);
            if (!joined.empty()) joined.push_back(' ');
            joined += t.surface;
        }
        // Joining surfaces with single spaces reproduces normalize().
        CHECK(joined == normalize(s));
    }
}

TEST_CASE("tokenization is stable under prior normalization") {
    for (const char* s : {"Gonville Hotel!", "A  &  B", "don't stop", "", "  x  "}) {
        auto a = tokenize(s);
        auto b = tokenize(normalize(s));
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].surface == b[i].surface);
    }
}

TEST_CASE("ngrams produces contiguous windows") {
    const auto tokens = tokenize("alpha beta gamma");

    auto bigrams = ngrams(tokens, 2);
    REQUIRE(bigrams.size() == 2);
    CHECK(bigrams[0].text == "alpha beta");
    CHECK(bigrams[1].text == "beta gamma");
    CHECK(bigrams[0].n == 2);
    CHECK(bigrams[1].first == 1);

    CHECK(ngrams(tokens, 5).empty());

    auto unigrams = ngrams(tokens, 1);
    REQUIRE(unigrams.size() == 3);
    CHECK(unigrams[2].text == "gamma");

    CHECK_THROWS_AS(ngrams(tokens, 0), std::invalid_argument);
}

TEST_CASE("all_ngrams_up_to concatenates lengths 1..n_max") {
    CHECK(all_ngrams_up_to(tokenize("a b c d"), 2).size() == 7);  // 4 + 3
    CHECK(all_ngrams_up_to(tokenize(""), 3).empty());
    CHECK(all_ngrams_up_to(tokenize("a b"), 4).size() == 3);  // 2 + 1, longer windows vanish
    CHECK_THROWS_AS(all_ngrams_up_to(tokenize("a"), 0), std::invalid_argument);
}

TEST_CASE("n-gram count formulas hold on random token lists") {
    std::mt19937 rng(13);
    std::uniform_int_distribution<int> len_dist(0, 50);
    std::uniform_int_distribution<std::size_t> n_dist(1, 10);
    for (int i = 0; i < 150; ++i) {
        const int len = len_dist(rng);
        std::string text;
        for (int j = 0; j < len; ++j) text += "w" + std::to_string(j) + " ";
        const auto tokens = tokenize(text);
        REQUIRE(tokens.size() == static_cast<std::size_t>(len));

        const std::size_t n = n_dist(rng);
        const std::size_t expected_single =
            tokens.size() >= n ? tokens.size() - n + 1 : 0;
        CHECK(ngrams(tokens, n).size() == expected_single);

        std::size_t expected_total = 0;
        for (std::size_t k = 1; k <= n; ++k) {
            expected_total += tokens.size() >= k ? tokens.size() - k + 1 : 0;
        }
        CHECK(all_ngrams_up_to(tokens, n).size() == expected_total);
    }
}
