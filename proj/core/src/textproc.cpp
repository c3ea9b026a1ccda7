#include "kselect/textproc.hpp"

#include <stdexcept>

namespace kselect {

namespace {

// Word bytes survive normalization: ASCII alphanumerics (letters lowercased)
// and any byte of a multi-byte UTF-8 sequence. ASCII punctuation, whitespace
// and control characters become separators.
inline bool is_word_byte(unsigned char c) {
    if (c >= 0x80) return true;
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

inline char lower_ascii(unsigned char c) {
    if (c >= 'A' && c <= 'Z') return static_cast<char>(c - 'A' + 'a');
    return static_cast<char>(c);
}

}  // namespace

std::string normalize(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (unsigned char c : text) {
        if (is_word_byte(c)) {
            if (pending_space && !out.empty()) out.push_back(' ');
            pending_space = false;
            out.push_back(lower_ascii(c));
        } else {
            pending_space = true;
        }
    }
    return out;
}

std::vector<Token> tokenize(std::string_view text) {
    std::vector<Token> tokens;
    std::size_t i = 0;
    const std::size_t len = text.size();
    while (i < len) {
        if (!is_word_byte(static_cast<unsigned char>(text[i]))) {
            ++i;
            continue;
        }
        std::size_t start = i;
        std::string surface;
        while (i < len && is_word_byte(static_cast<unsigned char>(text[i]))) {
            surface.push_back(lower_ascii(static_cast<unsigned char>(text[i])));
            ++i;
        }
        tokens.push_back(Token{std::move(surface), start, i});
    }
    return tokens;
}

std::vector<NGram> ngrams(const std::vector<Token>& tokens, std::size_t n) {
    if (n < 1) throw std::invalid_argument("ngrams: n must be >= 1");
    std::vector<NGram> out;
    if (tokens.size() < n) return out;
    out.reserve(tokens.size() - n + 1);
    for (std::size_t first = 0; first + n <= tokens.size(); ++first) {
        std::string text = tokens[first].surface;
        for (std::size_t j = 1; j < n; ++j) {
            text.push_back(' ');
            text += tokens[first + j].surface;
        }
        out.push_back(NGram{first, n, std::move(text)});
    }
    return out;
}

std::vector<NGram> all_ngrams_up_to(const std::vector<Token>& tokens, std::size_t n_max) {
    if (n_max < 1) throw std::invalid_argument("all_ngrams_up_to: n_max must be >= 1");
    std::vector<NGram> out;
    for (std::size_t k = 1; k <= n_max; ++k) {
        auto windows = ngrams(tokens, k);
        out.insert(out.end(), std::make_move_iterator(windows.begin()),
                   std::make_move_iterator(windows.end()));
    }
    return out;
}

}  // namespace kselect
