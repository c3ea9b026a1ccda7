#pragma once
// Tagger-based entity retrieval: IOB dataset preparation from gold knowledge
// labels, an averaged-perceptron sequence tagger, span decoding, and linking
// decoded spans back to knowledge-base entities.
//
// Compared to the fuzzy backend this extracts entity mentions directly from
// the history, so the per-dialogue cost does not scale with (n-grams x
// entity names).

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "kselect/corpus.hpp"
#include "kselect/fuzzy.hpp"
#include "kselect/textproc.hpp"

namespace kselect {

enum class IOBTag : int { B_ENT = 0, I_ENT = 1, O = 2 };

inline constexpr std::array<IOBTag, 3> kAllTags = {IOBTag::B_ENT, IOBTag::I_ENT, IOBTag::O};

const char* tag_name(IOBTag tag);
IOBTag tag_from_name(const std::string& name);

struct TaggedSentence {
    std::vector<Token> tokens;
    std::vector<IOBTag> tags;  // same length as tokens
};

struct TaggerConfig {
    int epochs = 10;
    std::uint64_t seed = 1;
    int max_tokens = 256;             // history is trimmed to the last max_tokens
    std::optional<int> last_k_turns;  // inference-time turn window, nullopt = all
};

// Feature weights keyed by feature string; one weight per tag. averaged are
// the inference weights (running average over all training steps).
struct TaggerModel {
    using WeightMap = std::unordered_map<std::string, std::array<double, 3>>;

    WeightMap weights;
    WeightMap averaged;
    int epochs_trained = 0;
    std::uint64_t seed = 0;
    int max_tokens = 256;
    std::vector<std::uint64_t> epoch_mistakes;  // training diagnostics, not persisted
};

struct PreparedDataset {
    std::vector<TaggedSentence> sentences;
    std::size_t no_mention = 0;   // gold entity name absent from the history (all-O)
    std::size_t non_seeking = 0;  // target=false dialogues, skipped
};

// Builds one tagged sentence per knowledge-seeking dialogue: turns
// concatenated oldest-first, trimmed to the last config.max_tokens tokens,
// every token span equal to the gold entity's normalized name tagged
// B_ENT I_ENT*, everything else O. Throws ValidationError on a knowledge key
// that does not resolve in kb.
PreparedDataset prepare_ner_dataset(const std::vector<LabeledDialogue>& pairs,
                                    const KnowledgeBase& kb, const TaggerConfig& config);

// Deterministic feature set for position i. prev_tag is the predicted tag of
// the previous token (IOBTag::O at position 0).
std::vector<std::string> extract_features(const std::vector<Token>& tokens, std::size_t i,
                                          IOBTag prev_tag);

// Standard averaged-perceptron training: greedy left-to-right decoding with
// the predicted previous tag, +1/-1 updates on mistakes, sentence order
// shuffled per epoch from config.seed. Throws on an empty dataset or
// epochs < 1.
TaggerModel train(const std::vector<TaggedSentence>& dataset, const TaggerConfig& config);

// Greedy left-to-right argmax over averaged weights; ties broken B_ENT <
// I_ENT < O.
std::vector<IOBTag> tag(const TaggerModel& model, const std::vector<Token>& tokens);

// Maximal B_ENT (I_ENT)* runs as [first, last] token index ranges; an I_ENT
// with no open span is repaired to a span start.
std::vector<std::pair<std::size_t, std::size_t>> decode_span_ranges(
    const std::vector<IOBTag>& tags);

// Same runs as space-joined surface strings, in textual order.
std::vector<std::string> decode_spans(const std::vector<Token>& tokens,
                                      const std::vector<IOBTag>& tags);

// Exact normalized-name match wins with score 1.0 and no similarity
// evaluations; otherwise the best name with similarity >= 0.85 wins and the
// counter grows by the gazetteer size; otherwise nullopt.
std::optional<EntityCandidate> link_entity(const std::string& span, const Gazetteer& gazetteer,
                                           ComparisonCounter& counter);
std::optional<EntityCandidate> link_entity(const std::string& span, const KnowledgeBase& kb);

// Tokenize the considered turns, trim to the last max_tokens, tag, decode
// spans, link each span. The counter counts only link-time similarity
// evaluations; tagging itself performs zero entity comparisons.
std::pair<std::vector<EntityCandidate>, ComparisonCounter> retrieve_ner(
    const DialogueContext& context, const TaggerModel& model, const Gazetteer& gazetteer,
    const TaggerConfig& config);
std::pair<std::vector<EntityCandidate>, ComparisonCounter> retrieve_ner(
    const DialogueContext& context, const TaggerModel& model, const KnowledgeBase& kb,
    const TaggerConfig& config);

// Model file: {"config": {...}, "weights": {"<feature>": {"B_ENT": w, ...}}}
// with zero weights omitted.
std::string serialize_model(const TaggerModel& model);
TaggerModel parse_model(const std::string& json_text, const std::string& origin = "<memory>");
void save_model(const TaggerModel& model, const std::filesystem::path& path);
TaggerModel load_model(const std::filesystem::path& path);

}  // namespace kselect
