#include "kselect/fuzzy.hpp"

#include <algorithm>
#include <numeric>

namespace kselect {

Gazetteer Gazetteer::build(const KnowledgeBase& kb) {
    Gazetteer gaz;
    for (const auto& [domain, entities] : kb.domains) {
        for (const auto& [entity_id, entity] : entities) {
            Entry entry;
            entry.domain = domain;
            entry.entity_id = entity_id;
            entry.norm_name = normalize(entity.name);
            entry.name_tokens = tokenize(entity.name).size();
            gaz.max_name_tokens = std::max(gaz.max_name_tokens, entry.name_tokens);
            gaz.entries.push_back(std::move(entry));
        }
    }
    for (std::size_t i = 0; i < gaz.entries.size(); ++i) {
        // First entry wins if two entities share a normalized name.
        gaz.exact.try_emplace(gaz.entries[i].norm_name, i);
    }
    return gaz;
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
    if (a.size() < b.size()) std::swap(a, b);  // b is the shorter, row fits it
    const std::size_t m = b.size();
    if (m == 0) return a.size();

    std::vector<std::size_t> row(m + 1);
    std::iota(row.begin(), row.end(), std::size_t{0});
    for (std::size_t i = 1; i <= a.size(); ++i) {
        std::size_t diag = row[0];  // row[i-1][0]
        row[0] = i;
        for (std::size_t j = 1; j <= m; ++j) {
            std::size_t up = row[j];
            std::size_t subst = diag + (a[i - 1] == b[j - 1] ? 0 : 1);
            row[j] = std::min({row[j] + 1, row[j - 1] + 1, subst});
            diag = up;
        }
    }
    return row[m];
}

double similarity_normalized(std::string_view norm_a, std::string_view norm_b) {
    const std::size_t denom = std::max(norm_a.size(), norm_b.size());
    if (denom == 0) return 1.0;
    return 1.0 - static_cast<double>(levenshtein(norm_a, norm_b)) / static_cast<double>(denom);
}

double similarity(std::string_view a, std::string_view b) {
    return similarity_normalized(normalize(a), normalize(b));
}

namespace {

// Per-entity running best match during one retrieval call.
struct BestMatch {
    double score = -1.0;
    std::size_t ngram_tokens = 0;
    std::string ngram_text;
    int turn_index = -1;

    // Better score wins; at equal score a longer n-gram wins; otherwise the
    // earlier occurrence stands (turns and windows are scanned in order).
    bool beaten_by(double score_, std::size_t tokens_) const {
        if (score_ != score) return score_ > score;
        return tokens_ > ngram_tokens;
    }
};

}  // namespace

std::pair<std::vector<EntityCandidate>, ComparisonCounter> retrieve_fuzzy(
    const DialogueContext& context, const Gazetteer& gazetteer, const FuzzyConfig& config) {
    ComparisonCounter counter;
    std::vector<BestMatch> best(gazetteer.entries.size());

    std::size_t first_turn = 0;
    if (config.last_k_turns.has_value()) {
        std::size_t k = static_cast<std::size_t>(std::max(1, *config.last_k_turns));
        if (k < context.turns.size()) first_turn = context.turns.size() - k;
    }

    for (std::size_t t = first_turn; t < context.turns.size(); ++t) {
        const auto tokens = tokenize(context.turns[t].text);
        const auto windows = all_ngrams_up_to(tokens, gazetteer.max_name_tokens);
        for (const NGram& ng : windows) {
            for (std::size_t e = 0; e < gazetteer.entries.size(); ++e) {
                double score = similarity_normalized(ng.text, gazetteer.entries[e].norm_name);
                ++counter.comparisons;
                if (score >= config.threshold && best[e].beaten_by(score, ng.n)) {
                    best[e] = BestMatch{score, ng.n, ng.text, static_cast<int>(t)};
                }
            }
        }
    }

    std::vector<std::pair<EntityCandidate, std::size_t>> scored;  // candidate + n-gram length
    for (std::size_t e = 0; e < gazetteer.entries.size(); ++e) {
        if (best[e].score >= config.threshold) {
            const auto& entry = gazetteer.entries[e];
            scored.emplace_back(EntityCandidate{entry.domain, entry.entity_id, best[e].score,
                                                best[e].ngram_text, best[e].turn_index},
                                best[e].ngram_tokens);
        }
    }
    // Entries are already in (domain, entity_id) order, so a stable sort on
    // (score desc, n-gram length desc) leaves ties in that order.
    std::stable_sort(scored.begin(), scored.end(), [](const auto& x, const auto& y) {
        if (x.first.score != y.first.score) return x.first.score > y.first.score;
        return x.second > y.second;
    });
    std::vector<EntityCandidate> candidates;
    candidates.reserve(scored.size());
    for (auto& [candidate, _] : scored) candidates.push_back(std::move(candidate));
    return {std::move(candidates), counter};
}

std::pair<std::vector<EntityCandidate>, ComparisonCounter> retrieve_fuzzy(
    const DialogueContext& context, const KnowledgeBase& kb, const FuzzyConfig& config) {
    return retrieve_fuzzy(context, Gazetteer::build(kb), config);
}

}  // namespace kselect
