#pragma once
// Metrics and ablation harness: retrieval accuracy, exact-match accuracy,
// recall@k, set-based micro F1, latency, comparison counts, and turn sweeps.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kselect/pipeline.hpp"

namespace kselect {

struct AblationRow {
    std::optional<int> k_turns;  // nullopt = all
    double retrieval_accuracy = 0.0;
    double em_accuracy = 0.0;
    double f1 = 0.0;
    double latency_sec = 0.0;  // mean seconds per dialogue
    std::uint64_t comparisons = 0;
};

struct EvalReport {
    double retrieval_accuracy = 0.0;
    double em_accuracy = 0.0;
    std::map<int, double> recall_at_k;
    double f1 = 0.0;
    double mean_latency_sec = 0.0;
    std::uint64_t total_comparisons = 0;
    std::vector<AblationRow> per_turn_ablation;
};

// Fraction of dialogues whose top-1 predicted (domain, entity_id) equals the
// gold knowledge key's entity. Gold entries must be knowledge-seeking.
double retrieval_accuracy(const std::vector<std::optional<EntityCandidate>>& predictions,
                          const std::vector<GoldLabel>& gold);

// Fraction whose top-1 key exactly equals the (first) gold key.
double em_accuracy(const std::vector<SelectionResult>& results,
                   const std::vector<GoldLabel>& gold);

// Micro-averaged F1 of the top-k predicted key set vs the gold key set;
// 0 when precision and recall are both 0.
double selection_f1(const std::vector<SelectionResult>& results,
                    const std::vector<GoldLabel>& gold);

// Runs the pipeline over every knowledge-seeking dialogue and aggregates.
// Non-seeking entries (target=false) are skipped.
EvalReport evaluate_dataset(const std::vector<LabeledDialogue>& dataset, const KnowledgeBase& kb,
                            const DocIndex& index, const TaggerModel* model,
                            const PipelineConfig& config);

// Full pipeline per k with the matcher's k_turns and both backends'
// last_k_turns overridden; one row per k.
std::vector<AblationRow> ablate_turns(const std::vector<LabeledDialogue>& dataset,
                                      const KnowledgeBase& kb, const DocIndex& index,
                                      const TaggerModel* model, const PipelineConfig& config,
                                      const std::vector<std::optional<int>>& ks);

struct BenchResult {
    double fuzzy_time_sec = 0.0;  // median over repeats, whole dataset
    double ner_time_sec = 0.0;
    std::uint64_t fuzzy_comparisons = 0;
    std::uint64_t ner_comparisons = 0;
};

// Runs both backends over the full dataset `repeats` times; reports median
// wall-clock and total comparison counts. Requires repeats >= 1.
BenchResult benchmark(const std::vector<LabeledDialogue>& dataset, const KnowledgeBase& kb,
                      const DocIndex& index, const TaggerModel& model,
                      const PipelineConfig& config, int repeats);

std::string report_to_json(const EvalReport& report);
std::string report_to_table(const EvalReport& report);
std::string bench_to_json(const BenchResult& result);

}  // namespace kselect
