#pragma once
// Two-stage selection: entity retrieval via a pluggable backend, then
// knowledge matching restricted to the retrieved entity's docs.

#include <optional>
#include <string>

#include "kselect/corpus.hpp"
#include "kselect/fuzzy.hpp"
#include "kselect/matcher.hpp"
#include "kselect/tagger.hpp"

namespace kselect {

enum class Backend { kFuzzy, kNer };
enum class Fallback { kEmpty, kFullKb };

struct PipelineConfig {
    Backend backend = Backend::kFuzzy;
    FuzzyConfig fuzzy;
    TaggerConfig tagger;
    MatcherConfig matcher;
    Fallback fallback = Fallback::kFullKb;  // degrade to the unreduced search space
};

struct StageTimes {
    double retrieval_sec = 0.0;
    double matching_sec = 0.0;
};

struct PipelineOutcome {
    std::optional<EntityCandidate> entity;
    SelectionResult selection;
    ComparisonCounter comparisons;
    StageTimes stage_times;
};

// Holds immutable references to (kb, index, model); safe for concurrent run
// calls. The referenced objects must outlive the pipeline.
class Pipeline {
public:
    // Throws std::invalid_argument when backend is NER and model is null.
    Pipeline(const KnowledgeBase& kb, const DocIndex& index, const TaggerModel* model,
             PipelineConfig config);

    PipelineOutcome run(const DialogueContext& context) const;

    const PipelineConfig& config() const { return config_; }

private:
    const KnowledgeBase& kb_;
    const DocIndex& index_;
    const TaggerModel* model_;
    PipelineConfig config_;
    Gazetteer gazetteer_;
};

// One-shot convenience wrapper.
PipelineOutcome run_pipeline(const DialogueContext& context, const KnowledgeBase& kb,
                             const DocIndex& index, const TaggerModel* model,
                             const PipelineConfig& config);

std::string outcome_to_json(const PipelineOutcome& outcome);

}  // namespace kselect
