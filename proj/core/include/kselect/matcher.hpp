#pragma once
// Stage two: rank knowledge docs within the retrieved entity's reduced
// search space. Lexical tf-idf cosine scoring with turn truncation and an
// optional keyword filter on the query.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kselect/corpus.hpp"
#include "kselect/fuzzy.hpp"
#include "kselect/textproc.hpp"

namespace kselect {

struct MatcherConfig {
    std::optional<int> k_turns;        // query = last k utterances, nullopt = all
    int top_k = 5;
    std::optional<int> keyword_top_m;  // keep only the m highest tf-idf query terms, nullopt = off
    int max_tokens = 256;
};

// Immutable after build; safe for concurrent scoring.
struct DocIndex {
    struct DocEntry {
        KnowledgeKey key;
        std::map<std::string, int> tf;  // term counts over title + body
        int length = 0;                 // token count
    };

    std::vector<DocEntry> docs;             // sorted by key
    std::map<KnowledgeKey, std::size_t> by_key;
    std::map<std::string, int> df;
    std::map<std::string, double> idf;      // ln((N+1)/(df+1)) + 1
    double unseen_idf = 1.0;                // idf of a df=0 term
    std::size_t total_docs = 0;

    double idf_of(const std::string& term) const {
        auto it = idf.find(term);
        return it == idf.end() ? unseen_idf : it->second;
    }
};

struct ScoredKey {
    KnowledgeKey key;
    double score = 0.0;

    bool operator==(const ScoredKey&) const = default;
};

// Ranked knowledge keys with scores; the pipeline's output and the unit of
// evaluation. docs_scored counts cosine evaluations, the literal measure of
// search-space pruning.
struct SelectionResult {
    std::vector<ScoredKey> ranked;        // scores nonincreasing, length <= top_k
    std::vector<std::string> query_used;  // token surfaces after truncation/filtering
    std::uint64_t docs_scored = 0;

    bool operator==(const SelectionResult&) const = default;
};

DocIndex build_index(const KnowledgeBase& kb);

// Terms ranked by tf(in query) * idf; the top_m best terms kept, all their
// occurrences surviving in original textual order. Ties keep the term whose
// first occurrence is earlier. Requires top_m >= 1.
std::vector<Token> extract_keywords(const std::vector<Token>& query_tokens, const DocIndex& index,
                                    int top_m);

// Cosine similarity between tf-idf vectors of query and doc, in [0, 1];
// 0 when either vector is all-zero. Throws ValidationError on an unindexed
// key.
double score_doc(const std::vector<Token>& query_tokens, const KnowledgeKey& key,
                 const DocIndex& index);

// Query construction shared by both selection paths: last k_turns
// utterances, trimmed to the last max_tokens tokens, then keyword-filtered.
std::vector<Token> build_query(const DialogueContext& context, const DocIndex& index,
                               const MatcherConfig& config);

// Scores only the docs under the given entity (search-space pruning). Ties
// broken by ascending doc_id.
SelectionResult select_knowledge(const DialogueContext& context, const EntityCandidate& entity,
                                 const KnowledgeBase& kb, const DocIndex& index,
                                 const MatcherConfig& config);

// Baseline behavior when no entity is known: scores every doc in the
// knowledge base. Ties broken by ascending (domain, entity_id, doc_id).
SelectionResult select_full_kb(const DialogueContext& context, const KnowledgeBase& kb,
                               const DocIndex& index, const MatcherConfig& config);

}  // namespace kselect
