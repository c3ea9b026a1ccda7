#include "kselect/pipeline.hpp"

#include <chrono>
#include <stdexcept>

#include "json.hpp"

namespace kselect {

using nlohmann::json;

namespace {
double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}
}  // namespace

Pipeline::Pipeline(const KnowledgeBase& kb, const DocIndex& index, const TaggerModel* model,
                   PipelineConfig config)
    : kb_(kb), index_(index), model_(model), config_(std::move(config)),
      gazetteer_(Gazetteer::build(kb)) {
    if (config_.backend == Backend::kNer && model_ == nullptr) {
        throw std::invalid_argument("pipeline: NER backend requires a tagger model");
    }
}

PipelineOutcome Pipeline::run(const DialogueContext& context) const {
    PipelineOutcome outcome;

    auto start = std::chrono::steady_clock::now();
    std::vector<EntityCandidate> candidates;
    if (config_.backend == Backend::kFuzzy) {
        auto [found, counter] = retrieve_fuzzy(context, gazetteer_, config_.fuzzy);
        candidates = std::move(found);
        outcome.comparisons = counter;
    } else {
        auto [found, counter] = retrieve_ner(context, *model_, gazetteer_, config_.tagger);
        candidates = std::move(found);
        outcome.comparisons = counter;
    }
    outcome.stage_times.retrieval_sec = seconds_since(start);

    start = std::chrono::steady_clock::now();
    if (!candidates.empty()) {
        outcome.entity = candidates.front();
        outcome.selection = select_knowledge(context, *outcome.entity, kb_, index_, config_.matcher);
    } else if (config_.fallback == Fallback::kFullKb) {
        outcome.selection = select_full_kb(context, kb_, index_, config_.matcher);
    } else {
        // EMPTY fallback: record the query, score nothing.
        for (const Token& token : build_query(context, index_, config_.matcher)) {
            outcome.selection.query_used.push_back(token.surface);
        }
    }
    outcome.stage_times.matching_sec = seconds_since(start);
    return outcome;
}

PipelineOutcome run_pipeline(const DialogueContext& context, const KnowledgeBase& kb,
                             const DocIndex& index, const TaggerModel* model,
                             const PipelineConfig& config) {
    return Pipeline(kb, index, model, config).run(context);
}

std::string outcome_to_json(const PipelineOutcome& outcome) {
    json entity = nullptr;
    if (outcome.entity.has_value()) {
        entity = {{"domain", outcome.entity->domain},
                  {"entity_id", outcome.entity->entity_id},
                  {"score", outcome.entity->score},
                  {"matched_ngram", outcome.entity->matched_ngram},
                  {"turn_index", outcome.entity->turn_index}};
    }
    json ranked = json::array();
    for (const ScoredKey& sk : outcome.selection.ranked) {
        ranked.push_back({{"domain", sk.key.domain},
                          {"entity_id", sk.key.entity_id},
                          {"doc_id", sk.key.doc_id},
                          {"score", sk.score}});
    }
    json root = {{"entity", std::move(entity)},
                 {"selection",
                  {{"ranked", std::move(ranked)},
                   {"query_used", outcome.selection.query_used},
                   {"docs_scored", outcome.selection.docs_scored}}},
                 {"comparisons", outcome.comparisons.comparisons},
                 {"stage_times",
                  {{"retrieval_sec", outcome.stage_times.retrieval_sec},
                   {"matching_sec", outcome.stage_times.matching_sec}}}};
    return root.dump(2) + "\n";
}

}  // namespace kselect
