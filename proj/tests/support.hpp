#pragma once
// Shared fixtures and independent oracles for the test suites. The oracles
// deliberately re-derive results from first principles and never call the
// implementation paths they check.

#include <cmath>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kselect/corpus.hpp"
#include "kselect/tagger.hpp"
#include "kselect/textproc.hpp"

namespace kselect::testing {

// Plain exponential recursion (with the textbook equal-head skip); the
// reference definition of edit distance.
inline std::size_t lev_oracle(std::string_view a, std::string_view b) {
    if (a.empty()) return b.size();
    if (b.empty()) return a.size();
    if (a.front() == b.front()) return lev_oracle(a.substr(1), b.substr(1));
    const std::size_t del = lev_oracle(a.substr(1), b);
    const std::size_t ins = lev_oracle(a, b.substr(1));
    const std::size_t sub = lev_oracle(a.substr(1), b.substr(1));
    return 1 + std::min({del, ins, sub});
}

// Mirrors the frozen similarity formula on pre-normalized strings.
inline double similarity_formula(std::size_t lev, std::size_t len_a, std::size_t len_b) {
    const std::size_t denom = std::max(len_a, len_b);
    if (denom == 0) return 1.0;
    return 1.0 - static_cast<double>(lev) / static_cast<double>(denom);
}

// Brute-force tf-idf cosine, independent of DocIndex. Documents are given as
// raw title/body text; terms come from the production tokenizer (the shared
// contract), the math is re-derived here.
class TfIdfOracle {
public:
    explicit TfIdfOracle(const std::vector<std::pair<std::string, std::string>>& docs) {
        for (const auto& [title, body] : docs) {
            std::map<std::string, int> tf;
            for (const Token& t : tokenize(title + " " + body)) ++tf[t.surface];
            for (const auto& [term, _] : tf) ++df_[term];
            doc_tf_.push_back(std::move(tf));
        }
    }

    double idf(const std::string& term) const {
        const double n = static_cast<double>(doc_tf_.size());
        auto it = df_.find(term);
        const double df = it == df_.end() ? 0.0 : static_cast<double>(it->second);
        return std::log((n + 1.0) / (df + 1.0)) + 1.0;
    }

    double cosine(const std::string& query, std::size_t doc) const {
        std::map<std::string, int> qtf;
        for (const Token& t : tokenize(query)) ++qtf[t.surface];
        double dot = 0.0, qn = 0.0, dn = 0.0;
        for (const auto& [term, count] : qtf) {
            const double w = count * idf(term);
            qn += w * w;
            auto it = doc_tf_[doc].find(term);
            if (it != doc_tf_[doc].end()) dot += w * it->second * idf(term);
        }
        for (const auto& [term, count] : doc_tf_[doc]) {
            const double w = count * idf(term);
            dn += w * w;
        }
        if (qn == 0.0 || dn == 0.0) return 0.0;
        return dot / (std::sqrt(qn) * std::sqrt(dn));
    }

private:
    std::vector<std::map<std::string, int>> doc_tf_;
    std::map<std::string, int> df_;
};

// Independent IOB run decoder (same repair rule, different code path).
inline std::vector<std::pair<std::size_t, std::size_t>> span_ranges_oracle(
    const std::vector<IOBTag>& tags) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    std::size_t i = 0;
    while (i < tags.size()) {
        if (tags[i] == IOBTag::O) {
            ++i;
            continue;
        }
        const std::size_t start = i;  // B_ENT, or an orphan I_ENT repaired to a start
        ++i;
        while (i < tags.size() && tags[i] == IOBTag::I_ENT) ++i;
        out.emplace_back(start, i - 1);
    }
    return out;
}

inline DialogueContext make_context(const std::vector<std::pair<char, std::string>>& turns) {
    DialogueContext context;
    for (const auto& [speaker, text] : turns) {
        context.turns.push_back(
            Utterance{speaker == 'U' ? Speaker::kUser : Speaker::kSystem, text});
    }
    return context;
}

inline DialogueContext user_turn(const std::string& text) { return make_context({{'U', text}}); }

inline KnowledgeDoc make_doc(int id, std::string title, std::string body) {
    return KnowledgeDoc{id, std::move(title), std::move(body)};
}

inline Entity make_entity(int id, std::string name, std::vector<KnowledgeDoc> docs) {
    Entity entity;
    entity.id = id;
    entity.name = std::move(name);
    for (KnowledgeDoc& doc : docs) entity.docs.emplace(doc.doc_id, std::move(doc));
    return entity;
}

// The hand-checked 5-doc hotel fixture used by the matcher tests.
inline KnowledgeBase wifi_hotel_kb() {
    KnowledgeBase kb;
    kb.domains["hotel"].emplace(
        1, make_entity(1, "alpha hotel",
                       {make_doc(0, "wifi internet access",
                                 "the wifi is strong enough for streaming videos"),
                        make_doc(1, "breakfast hours", "breakfast is served from seven to ten"),
                        make_doc(2, "parking", "free parking is available on site"),
                        make_doc(3, "pet policy", "pets are welcome with a small fee"),
                        make_doc(4, "pool and gym", "the pool and gym are open all day")}));
    return kb;
}

}  // namespace kselect::testing
