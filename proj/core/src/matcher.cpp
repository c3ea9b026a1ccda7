#include "kselect/matcher.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace kselect {

DocIndex build_index(const KnowledgeBase& kb) {
    DocIndex index;
    for (const auto& [domain, entities] : kb.domains) {
        for (const auto& [entity_id, entity] : entities) {
            for (const auto& [doc_id, doc] : entity.docs) {
                DocIndex::DocEntry entry;
                entry.key = KnowledgeKey{domain, entity_id, doc_id};
                for (const Token& token : tokenize(doc.title + " " + doc.body)) {
                    ++entry.tf[token.surface];
                    ++entry.length;
                }
                for (const auto& [term, _] : entry.tf) ++index.df[term];
                index.by_key.emplace(entry.key, index.docs.size());
                index.docs.push_back(std::move(entry));
            }
        }
    }
    index.total_docs = index.docs.size();
    const double n_plus_1 = static_cast<double>(index.total_docs + 1);
    for (const auto& [term, df] : index.df) {
        index.idf[term] = std::log(n_plus_1 / static_cast<double>(df + 1)) + 1.0;
    }
    index.unseen_idf = std::log(n_plus_1) + 1.0;
    return index;
}

std::vector<Token> extract_keywords(const std::vector<Token>& query_tokens, const DocIndex& index,
                                    int top_m) {
    if (top_m < 1) throw std::invalid_argument("extract_keywords: top_m must be >= 1");

    struct TermScore {
        double score = 0.0;
        std::size_t first_pos = 0;
    };
    std::map<std::string, TermScore> terms;
    for (std::size_t i = 0; i < query_tokens.size(); ++i) {
        auto it = terms.try_emplace(query_tokens[i].surface, TermScore{0.0, i}).first;
        it->second.score += index.idf_of(query_tokens[i].surface);  // tf * idf, one idf per occurrence
    }
    if (terms.size() <= static_cast<std::size_t>(top_m)) return query_tokens;

    std::vector<std::pair<std::string, TermScore>> ranked(terms.begin(), terms.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second.score != b.second.score) return a.second.score > b.second.score;
        return a.second.first_pos < b.second.first_pos;
    });
    ranked.resize(static_cast<std::size_t>(top_m));

    std::set<std::string> keep;
    for (const auto& [term, _] : ranked) keep.insert(term);
    std::vector<Token> kept;
    for (const Token& token : query_tokens) {
        if (keep.count(token.surface) != 0) kept.push_back(token);
    }
    return kept;
}

namespace {

std::map<std::string, int> term_counts(const std::vector<Token>& tokens) {
    std::map<std::string, int> tf;
    for (const Token& token : tokens) ++tf[token.surface];
    return tf;
}

double cosine_against_doc(const std::map<std::string, int>& query_tf,
                          const DocIndex::DocEntry& doc, const DocIndex& index) {
    double dot = 0.0;
    double query_norm_sq = 0.0;
    for (const auto& [term, q_count] : query_tf) {
        const double idf = index.idf_of(term);
        const double q_w = static_cast<double>(q_count) * idf;
        query_norm_sq += q_w * q_w;
        auto it = doc.tf.find(term);
        if (it != doc.tf.end()) dot += q_w * static_cast<double>(it->second) * idf;
    }
    double doc_norm_sq = 0.0;
    for (const auto& [term, d_count] : doc.tf) {
        const double d_w = static_cast<double>(d_count) * index.idf_of(term);
        doc_norm_sq += d_w * d_w;
    }
    if (query_norm_sq == 0.0 || doc_norm_sq == 0.0) return 0.0;
    const double cos = dot / (std::sqrt(query_norm_sq) * std::sqrt(doc_norm_sq));
    return std::clamp(cos, 0.0, 1.0);
}

SelectionResult rank_keys(const std::vector<Token>& query, const std::vector<KnowledgeKey>& keys,
                          const DocIndex& index, int top_k) {
    SelectionResult result;
    for (const Token& token : query) result.query_used.push_back(token.surface);

    const auto query_tf = term_counts(query);
    std::vector<ScoredKey> scored;
    scored.reserve(keys.size());
    for (const KnowledgeKey& key : keys) {
        auto it = index.by_key.find(key);
        if (it == index.by_key.end()) {
            throw ValidationError("score_doc: key (" + key.domain + ", " +
                                  std::to_string(key.entity_id) + ", " +
                                  std::to_string(key.doc_id) + ") is not indexed");
        }
        scored.push_back(ScoredKey{key, cosine_against_doc(query_tf, index.docs[it->second], index)});
        ++result.docs_scored;
    }
    // keys arrive in ascending key order, so stable sort by score keeps the
    // ascending-doc_id tie rule.
    std::stable_sort(scored.begin(), scored.end(),
                     [](const ScoredKey& a, const ScoredKey& b) { return a.score > b.score; });
    if (scored.size() > static_cast<std::size_t>(top_k)) {
        scored.resize(static_cast<std::size_t>(top_k));
    }
    result.ranked = std::move(scored);
    return result;
}

}  // namespace

double score_doc(const std::vector<Token>& query_tokens, const KnowledgeKey& key,
                 const DocIndex& index) {
    auto it = index.by_key.find(key);
    if (it == index.by_key.end()) {
        throw ValidationError("score_doc: key (" + key.domain + ", " +
                              std::to_string(key.entity_id) + ", " + std::to_string(key.doc_id) +
                              ") is not indexed");
    }
    return cosine_against_doc(term_counts(query_tokens), index.docs[it->second], index);
}

std::vector<Token> build_query(const DialogueContext& context, const DocIndex& index,
                               const MatcherConfig& config) {
    std::size_t first_turn = 0;
    if (config.k_turns.has_value()) {
        std::size_t k = static_cast<std::size_t>(std::max(1, *config.k_turns));
        if (k < context.turns.size()) first_turn = context.turns.size() - k;
    }
    std::vector<Token> tokens;
    for (std::size_t t = first_turn; t < context.turns.size(); ++t) {
        for (Token& token : tokenize(context.turns[t].text)) {
            tokens.push_back(std::move(token));
        }
    }
    const std::size_t cap = static_cast<std::size_t>(std::max(1, config.max_tokens));
    if (tokens.size() > cap) {
        tokens.erase(tokens.begin(), tokens.begin() + static_cast<long>(tokens.size() - cap));
    }
    if (config.keyword_top_m.has_value()) {
        tokens = extract_keywords(tokens, index, *config.keyword_top_m);
    }
    return tokens;
}

SelectionResult select_knowledge(const DialogueContext& context, const EntityCandidate& entity,
                                 const KnowledgeBase& kb, const DocIndex& index,
                                 const MatcherConfig& config) {
    const Entity* ent = kb.find_entity(entity.domain, entity.entity_id);
    if (ent == nullptr) {
        throw ValidationError("select_knowledge: entity (" + entity.domain + ", " +
                              std::to_string(entity.entity_id) + ") not in knowledge base");
    }
    if (ent->docs.empty()) {
        throw ValidationError("select_knowledge: entity (" + entity.domain + ", " +
                              std::to_string(entity.entity_id) + ") has no docs");
    }
    std::vector<KnowledgeKey> keys;
    keys.reserve(ent->docs.size());
    for (const auto& [doc_id, _] : ent->docs) {
        keys.push_back(KnowledgeKey{entity.domain, entity.entity_id, doc_id});
    }
    return rank_keys(build_query(context, index, config), keys, index, config.top_k);
}

SelectionResult select_full_kb(const DialogueContext& context, const KnowledgeBase& kb,
                               const DocIndex& index, const MatcherConfig& config) {
    std::vector<KnowledgeKey> keys;
    keys.reserve(index.docs.size());
    for (const auto& [domain, entities] : kb.domains) {
        for (const auto& [entity_id, entity] : entities) {
            for (const auto& [doc_id, _] : entity.docs) {
                keys.push_back(KnowledgeKey{domain, entity_id, doc_id});
            }
        }
    }
    return rank_keys(build_query(context, index, config), keys, index, config.top_k);
}

}  // namespace kselect
