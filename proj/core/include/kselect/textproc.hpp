#pragma once
// Deterministic normalization, tokenization and n-gram windows shared by
// the retrieval backends and the knowledge matcher.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace kselect {

// A normalized word with byte offsets into the original (un-normalized) text.
struct Token {
    std::string surface;  // lowercased, never empty
    std::size_t start = 0;  // byte offset into the source string
    std::size_t end = 0;    // exclusive

    bool operator==(const Token&) const = default;
};

// A contiguous window of n tokens. `first` indexes into the token list the
// window was generated from; `text` is the space-joined surface form.
struct NGram {
    std::size_t first = 0;
    std::size_t n = 0;
    std::string text;

    bool operator==(const NGram&) const = default;
};

// Lowercase ASCII letters, keep digits and multi-byte UTF-8 sequences,
// replace everything else with a space, collapse runs of spaces and trim.
// Idempotent.
std::string normalize(std::string_view text);

// Split into maximal runs of word bytes. Offsets refer to the original
// string; joining the surfaces with single spaces equals normalize(text).
std::vector<Token> tokenize(std::string_view text);

// All contiguous windows of exactly n tokens, in source order.
// Count is max(0, tokens.size() - n + 1). Requires n >= 1.
std::vector<NGram> ngrams(const std::vector<Token>& tokens, std::size_t n);

// Concatenation of ngrams(tokens, k) for k = 1..n_max. Requires n_max >= 1.
std::vector<NGram> all_ngrams_up_to(const std::vector<Token>& tokens, std::size_t n_max);

}  // namespace kselect
