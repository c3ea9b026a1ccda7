#pragma once
// Deterministic generator of desk-scale knowledge bases and labeled
// dialogues. Entity-name, doc-keyword and filler vocabularies are built
// from disjoint consonant classes so the three token populations never
// collide, which keeps retrieval outcomes analyzable by construction.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "kselect/corpus.hpp"

namespace kselect {

struct CorpusSpec {
    std::uint64_t seed = 7;
    int n_domains = 2;
    int entities_per_domain = 5;
    int docs_per_entity = 3;
    int dialogues = 50;
    // turn offset from the end of the dialogue -> probability of the entity
    // mention landing there (0 = final turn). Realized as exact quotas.
    std::map<int, double> mention_turn_distribution = {{0, 0.4}, {1, 0.4}, {2, 0.2}};
    double misspell_rate = 0.0;  // chance a mention gets a one-character substitution
    std::pair<int, int> distractor_turns = {1, 2};  // extra turns before the mention
};

struct GeneratedCorpus {
    KnowledgeBase kb;
    std::vector<LabeledDialogue> dialogues;
};

// Throws ValidationError on spec invariant violations.
void validate_corpus_spec(const CorpusSpec& spec);

CorpusSpec parse_corpus_spec(const std::string& json_text,
                             const std::string& origin = "<memory>");
CorpusSpec load_corpus_spec(const std::filesystem::path& path);

// Fully deterministic given spec.seed; output always passes
// validate_knowledge_base, and every gold key resolves.
GeneratedCorpus generate(const CorpusSpec& spec);

// Writes knowledge.json, logs.json and labels.json into dir.
void write_corpus(const GeneratedCorpus& corpus, const std::filesystem::path& dir);

}  // namespace kselect
