#pragma once
// Fuzzy entity retrieval: score every history n-gram against every entity
// name with normalized Levenshtein similarity, emit candidates above the
// configured threshold.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kselect/corpus.hpp"
#include "kselect/textproc.hpp"

namespace kselect {

struct FuzzyConfig {
    double threshold = 0.95;
    std::optional<int> last_k_turns;  // nullopt = consider all turns
};

// A (domain, entity) hypothesis produced by either retrieval backend.
// turn_index is the absolute index into DialogueContext::turns of the turn
// the match came from (-1 when no turn context applies, e.g. a bare span).
struct EntityCandidate {
    std::string domain;
    int entity_id = 0;
    double score = 0.0;
    std::string matched_ngram;
    int turn_index = -1;

    bool operator==(const EntityCandidate&) const = default;
};

// Count of similarity evaluations, the hardware-independent cost measure.
struct ComparisonCounter {
    std::uint64_t comparisons = 0;
};

// Precomputed entity-name side of the match: normalized names in a frozen
// (domain, entity_id) order, plus the n-gram length cap derived from them.
struct Gazetteer {
    struct Entry {
        std::string domain;
        int entity_id = 0;
        std::string norm_name;
        std::size_t name_tokens = 0;
    };

    std::vector<Entry> entries;
    std::unordered_map<std::string, std::size_t> exact;  // norm name -> entries index
    std::size_t max_name_tokens = 1;

    static Gazetteer build(const KnowledgeBase& kb);
};

// Unit-cost edit distance (insert/delete/substitute).
std::size_t levenshtein(std::string_view a, std::string_view b);

// 1 - levenshtein(normalize(a), normalize(b)) / max(len); 1.0 when both
// normalize to empty.
double similarity(std::string_view a, std::string_view b);

// Same formula for inputs that are already normalized.
double similarity_normalized(std::string_view norm_a, std::string_view norm_b);

// Scores all n-grams (lengths 1..max_name_tokens) of the last k considered
// turns against every entity name; each entity appears at most once, best
// score kept. Candidates sorted by score desc, then longer matched n-gram,
// then (domain, entity_id). Counter equals pairs evaluated.
std::pair<std::vector<EntityCandidate>, ComparisonCounter> retrieve_fuzzy(
    const DialogueContext& context, const Gazetteer& gazetteer, const FuzzyConfig& config);

std::pair<std::vector<EntityCandidate>, ComparisonCounter> retrieve_fuzzy(
    const DialogueContext& context, const KnowledgeBase& kb, const FuzzyConfig& config);

}  // namespace kselect
