#include "kselect/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <iomanip>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace kselect {

using nlohmann::json;

namespace {

void require_equal_lengths(std::size_t a, std::size_t b, const char* what) {
    if (a != b) {
        throw std::invalid_argument(std::string(what) + ": length mismatch (" + std::to_string(a) +
                                    " vs " + std::to_string(b) + ")");
    }
}

double now_diff(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

double retrieval_accuracy(const std::vector<std::optional<EntityCandidate>>& predictions,
                          const std::vector<GoldLabel>& gold) {
    require_equal_lengths(predictions.size(), gold.size(), "retrieval_accuracy");
    if (predictions.empty()) return 0.0;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (!predictions[i].has_value() || gold[i].knowledge.empty()) continue;
        const KnowledgeKey& key = gold[i].knowledge.front();
        if (predictions[i]->domain == key.domain && predictions[i]->entity_id == key.entity_id) {
            ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

double em_accuracy(const std::vector<SelectionResult>& results,
                   const std::vector<GoldLabel>& gold) {
    require_equal_lengths(results.size(), gold.size(), "em_accuracy");
    if (results.empty()) return 0.0;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < results.size(); ++i) {
        if (results[i].ranked.empty() || gold[i].knowledge.empty()) continue;
        if (results[i].ranked.front().key == gold[i].knowledge.front()) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(results.size());
}

double selection_f1(const std::vector<SelectionResult>& results,
                    const std::vector<GoldLabel>& gold) {
    require_equal_lengths(results.size(), gold.size(), "selection_f1");
    std::uint64_t true_positive = 0, predicted = 0, relevant = 0;
    for (std::size_t i = 0; i < results.size(); ++i) {
        std::set<KnowledgeKey> gold_set(gold[i].knowledge.begin(), gold[i].knowledge.end());
        predicted += results[i].ranked.size();
        relevant += gold_set.size();
        for (const ScoredKey& sk : results[i].ranked) {
            if (gold_set.count(sk.key) != 0) ++true_positive;
        }
    }
    const double p = predicted == 0 ? 0.0 : static_cast<double>(true_positive) / predicted;
    const double r = relevant == 0 ? 0.0 : static_cast<double>(true_positive) / relevant;
    if (p + r == 0.0) return 0.0;
    return 2.0 * p * r / (p + r);
}

EvalReport evaluate_dataset(const std::vector<LabeledDialogue>& dataset, const KnowledgeBase& kb,
                            const DocIndex& index, const TaggerModel* model,
                            const PipelineConfig& config) {
    Pipeline pipeline(kb, index, model, config);

    std::vector<std::optional<EntityCandidate>> predictions;
    std::vector<SelectionResult> selections;
    std::vector<GoldLabel> gold;
    std::uint64_t comparisons = 0;
    double total_sec = 0.0;

    for (const LabeledDialogue& pair : dataset) {
        if (!pair.label.target) continue;
        auto start = std::chrono::steady_clock::now();
        PipelineOutcome outcome = pipeline.run(pair.context);
        total_sec += now_diff(start);
        predictions.push_back(std::move(outcome.entity));
        selections.push_back(std::move(outcome.selection));
        gold.push_back(pair.label);
        comparisons += outcome.comparisons.comparisons;
    }

    EvalReport report;
    report.retrieval_accuracy = retrieval_accuracy(predictions, gold);
    report.em_accuracy = em_accuracy(selections, gold);
    report.f1 = selection_f1(selections, gold);
    report.total_comparisons = comparisons;
    report.mean_latency_sec = gold.empty() ? 0.0 : total_sec / static_cast<double>(gold.size());

    std::set<int> ks = {1, 2, 5, config.matcher.top_k};
    for (int k : ks) {
        if (k < 1 || k > config.matcher.top_k) continue;
        std::size_t hits = 0;
        for (std::size_t i = 0; i < selections.size(); ++i) {
            const auto& ranked = selections[i].ranked;
            const std::size_t depth = std::min<std::size_t>(static_cast<std::size_t>(k), ranked.size());
            bool hit = false;
            for (std::size_t j = 0; j < depth && !hit; ++j) {
                for (const KnowledgeKey& key : gold[i].knowledge) {
                    if (ranked[j].key == key) {
                        hit = true;
                        break;
                    }
                }
            }
            if (hit) ++hits;
        }
        report.recall_at_k[k] =
            gold.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(gold.size());
    }
    return report;
}

std::vector<AblationRow> ablate_turns(const std::vector<LabeledDialogue>& dataset,
                                      const KnowledgeBase& kb, const DocIndex& index,
                                      const TaggerModel* model, const PipelineConfig& config,
                                      const std::vector<std::optional<int>>& ks) {
    if (dataset.empty()) throw std::invalid_argument("ablate_turns: empty dataset");
    std::vector<AblationRow> rows;
    for (const std::optional<int>& k : ks) {
        PipelineConfig overridden = config;
        overridden.matcher.k_turns = k;
        overridden.fuzzy.last_k_turns = k;
        overridden.tagger.last_k_turns = k;
        EvalReport report = evaluate_dataset(dataset, kb, index, model, overridden);
        AblationRow row;
        row.k_turns = k;
        row.retrieval_accuracy = report.retrieval_accuracy;
        row.em_accuracy = report.em_accuracy;
        row.f1 = report.f1;
        row.latency_sec = report.mean_latency_sec;
        row.comparisons = report.total_comparisons;
        rows.push_back(row);
    }
    return rows;
}

BenchResult benchmark(const std::vector<LabeledDialogue>& dataset, const KnowledgeBase& kb,
                      const DocIndex& index, const TaggerModel& model,
                      const PipelineConfig& config, int repeats) {
    if (repeats < 1) throw std::invalid_argument("benchmark: repeats must be >= 1");

    PipelineConfig fuzzy_config = config;
    fuzzy_config.backend = Backend::kFuzzy;
    PipelineConfig ner_config = config;
    ner_config.backend = Backend::kNer;

    Pipeline fuzzy_pipeline(kb, index, &model, fuzzy_config);
    Pipeline ner_pipeline(kb, index, &model, ner_config);

    BenchResult result;
    std::vector<double> fuzzy_times, ner_times;
    for (int rep = 0; rep < repeats; ++rep) {
        std::uint64_t fuzzy_comparisons = 0;
        auto start = std::chrono::steady_clock::now();
        for (const LabeledDialogue& pair : dataset) {
            if (!pair.label.target) continue;
            fuzzy_comparisons += fuzzy_pipeline.run(pair.context).comparisons.comparisons;
        }
        fuzzy_times.push_back(now_diff(start));

        std::uint64_t ner_comparisons = 0;
        start = std::chrono::steady_clock::now();
        for (const LabeledDialogue& pair : dataset) {
            if (!pair.label.target) continue;
            ner_comparisons += ner_pipeline.run(pair.context).comparisons.comparisons;
        }
        ner_times.push_back(now_diff(start));

        result.fuzzy_comparisons = fuzzy_comparisons;
        result.ner_comparisons = ner_comparisons;
    }

    auto median = [](std::vector<double>& v) {
        std::sort(v.begin(), v.end());
        const std::size_t n = v.size();
        return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    };
    result.fuzzy_time_sec = median(fuzzy_times);
    result.ner_time_sec = median(ner_times);
    return result;
}

namespace {

json ablation_to_json(const std::vector<AblationRow>& rows) {
    json out = json::array();
    for (const AblationRow& row : rows) {
        json k = row.k_turns.has_value() ? json(*row.k_turns) : json("all");
        out.push_back({{"k_turns", std::move(k)},
                       {"retrieval_accuracy", row.retrieval_accuracy},
                       {"em_accuracy", row.em_accuracy},
                       {"f1", row.f1},
                       {"latency_sec", row.latency_sec},
                       {"comparisons", row.comparisons}});
    }
    return out;
}

}  // namespace

std::string report_to_json(const EvalReport& report) {
    json recall = json::object();
    for (const auto& [k, v] : report.recall_at_k) recall[std::to_string(k)] = v;
    json root = {{"retrieval_accuracy", report.retrieval_accuracy},
                 {"em_accuracy", report.em_accuracy},
                 {"f1", report.f1},
                 {"recall_at_k", std::move(recall)},
                 {"latency_sec", report.mean_latency_sec},
                 {"comparisons", report.total_comparisons},
                 {"ablation", ablation_to_json(report.per_turn_ablation)}};
    return root.dump(2) + "\n";
}

std::string report_to_table(const EvalReport& report) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(4);
    out << std::left << std::setw(22) << "metric" << "value\n";
    out << std::left << std::setw(22) << "retrieval_accuracy" << report.retrieval_accuracy << "\n";
    out << std::left << std::setw(22) << "em_accuracy" << report.em_accuracy << "\n";
    out << std::left << std::setw(22) << "f1" << report.f1 << "\n";
    for (const auto& [k, v] : report.recall_at_k) {
        out << std::left << std::setw(22) << ("recall@" + std::to_string(k)) << v << "\n";
    }
    out << std::left << std::setw(22) << "latency_sec" << std::setprecision(6)
        << report.mean_latency_sec << "\n";
    out << std::left << std::setw(22) << "comparisons" << report.total_comparisons << "\n";
    if (!report.per_turn_ablation.empty()) {
        out << "\n" << std::left << std::setw(9) << "k_turns" << std::setw(11) << "retr_acc"
            << std::setw(9) << "em_acc" << std::setw(9) << "f1" << std::setw(14) << "latency_sec"
            << "comparisons\n";
        for (const AblationRow& row : report.per_turn_ablation) {
            out << std::setprecision(4) << std::left << std::setw(9)
                << (row.k_turns.has_value() ? std::to_string(*row.k_turns) : std::string("all"))
                << std::setw(11) << row.retrieval_accuracy << std::setw(9) << row.em_accuracy
                << std::setw(9) << row.f1 << std::setw(14) << std::setprecision(6)
                << row.latency_sec << row.comparisons << "\n";
        }
    }
    return out.str();
}

std::string bench_to_json(const BenchResult& result) {
    const double ratio = result.ner_comparisons == 0
                             ? static_cast<double>(result.fuzzy_comparisons)
                             : static_cast<double>(result.fuzzy_comparisons) /
                                   static_cast<double>(result.ner_comparisons);
    json root = {{"fuzzy_time_sec", result.fuzzy_time_sec},
                 {"ner_time_sec", result.ner_time_sec},
                 {"fuzzy_comparisons", result.fuzzy_comparisons},
                 {"ner_comparisons", result.ner_comparisons},
                 {"comparison_ratio", ratio},
                 {"wallclock_speedup", result.ner_time_sec > 0.0
                                           ? result.fuzzy_time_sec / result.ner_time_sec
                                           : 0.0}};
    return root.dump(2) + "\n";
}

}  // namespace kselect
