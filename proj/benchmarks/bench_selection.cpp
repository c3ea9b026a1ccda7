#include <benchmark/benchmark.h>

#include <string>

#include "kselect/evaluation.hpp"
#include "kselect/fuzzy.hpp"
#include "kselect/matcher.hpp"
#include "kselect/pipeline.hpp"
#include "kselect/synthetic.hpp"
#include "kselect/tagger.hpp"

using namespace kselect;

namespace {

GeneratedCorpus corpus_with(int entities_per_domain, int dialogues) {
    CorpusSpec spec;
    spec.seed = 4242;
    spec.n_domains = 2;
    spec.entities_per_domain = entities_per_domain;
    spec.docs_per_entity = 3;
    spec.dialogues = dialogues;
    spec.mention_turn_distribution = {{2, 1.0}};
    spec.distractor_turns = {4, 4};
    return generate(spec);
}

}  // namespace

static void Levenshtein(benchmark::State& state) {
    const std::string a(static_cast<std::size_t>(state.range()), 'a');
    std::string b = a;
    for (std::size_t i = 1; i < b.size(); i += 3) b[i] = 'b';
    for (auto _ : state) {
        benchmark::DoNotOptimize(levenshtein(a, b));
    }
    state.SetComplexityN(state.range());
}
BENCHMARK(Levenshtein)->RangeMultiplier(2)->Range(8, 128)->Complexity();

static void FuzzyRetrieval(benchmark::State& state) {
    const GeneratedCorpus corpus = corpus_with(static_cast<int>(state.range()), 4);
    const Gazetteer gaz = Gazetteer::build(corpus.kb);
    std::size_t i = 0;
    for (auto _ : state) {
        const auto& pair = corpus.dialogues[i++ % corpus.dialogues.size()];
        benchmark::DoNotOptimize(retrieve_fuzzy(pair.context, gaz, FuzzyConfig{}));
    }
    state.SetComplexityN(state.range());
}
BENCHMARK(FuzzyRetrieval)->RangeMultiplier(4)->Range(8, 512)->Complexity();

static void NerRetrieval(benchmark::State& state) {
    const GeneratedCorpus corpus = corpus_with(static_cast<int>(state.range()), 4);
    const Gazetteer gaz = Gazetteer::build(corpus.kb);
    TaggerConfig config;
    config.seed = 1;
    const auto prepared = prepare_ner_dataset(corpus.dialogues, corpus.kb, config);
    const TaggerModel model = train(prepared.sentences, config);
    std::size_t i = 0;
    for (auto _ : state) {
        const auto& pair = corpus.dialogues[i++ % corpus.dialogues.size()];
        benchmark::DoNotOptimize(retrieve_ner(pair.context, model, gaz, config));
    }
    state.SetComplexityN(state.range());
}
BENCHMARK(NerRetrieval)->RangeMultiplier(4)->Range(8, 512)->Complexity();

static void KnowledgeMatching(benchmark::State& state) {
    const GeneratedCorpus corpus = corpus_with(8, 16);
    const DocIndex index = build_index(corpus.kb);
    std::size_t i = 0;
    for (auto _ : state) {
        const auto& pair = corpus.dialogues[i++ % corpus.dialogues.size()];
        const KnowledgeKey& gold = pair.label.knowledge.front();
        EntityCandidate entity{gold.domain, gold.entity_id, 1.0, "", 0};
        benchmark::DoNotOptimize(
            select_knowledge(pair.context, entity, corpus.kb, index, MatcherConfig{}));
    }
}
BENCHMARK(KnowledgeMatching);

static void FullPipeline(benchmark::State& state) {
    const GeneratedCorpus corpus = corpus_with(32, 8);
    const DocIndex index = build_index(corpus.kb);
    Pipeline pipeline(corpus.kb, index, nullptr, PipelineConfig{});
    std::size_t i = 0;
    for (auto _ : state) {
        const auto& pair = corpus.dialogues[i++ % corpus.dialogues.size()];
        benchmark::DoNotOptimize(pipeline.run(pair.context));
    }
}
BENCHMARK(FullPipeline);

BENCHMARK_MAIN();
