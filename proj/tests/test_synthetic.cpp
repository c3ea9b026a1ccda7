#include <map>
#include <set>

#include "doctest.h"

#include "kselect/fuzzy.hpp"
#include "kselect/synthetic.hpp"
#include "support.hpp"

using namespace kselect;
using namespace kselect::testing;

TEST_CASE("generation is byte-identical for a fixed seed") {
    CorpusSpec spec;
    spec.seed = 7;
    spec.dialogues = 30;
    GeneratedCorpus a = generate(spec);
    GeneratedCorpus b = generate(spec);
    CHECK(serialize_knowledge_base(a.kb) == serialize_knowledge_base(b.kb));
    CHECK(serialize_logs(a.dialogues) == serialize_logs(b.dialogues));
    CHECK(serialize_labels(a.dialogues) == serialize_labels(b.dialogues));

    spec.seed = 8;
    GeneratedCorpus c = generate(spec);
    CHECK(serialize_knowledge_base(a.kb) != serialize_knowledge_base(c.kb));
}

TEST_CASE("generated corpora pass corpus validation and all keys resolve") {
    for (std::uint64_t seed : {1u, 5u, 9u}) {
        CorpusSpec spec;
        spec.seed = seed;
        spec.dialogues = 20;
        GeneratedCorpus corpus = generate(spec);
        CHECK_NOTHROW(validate_knowledge_base(corpus.kb));
        CHECK(corpus.kb.entity_count() ==
              static_cast<std::size_t>(spec.n_domains * spec.entities_per_domain));
        CHECK(corpus.dialogues.size() == static_cast<std::size_t>(spec.dialogues));
        for (const LabeledDialogue& pair : corpus.dialogues) {
            REQUIRE(pair.label.target);
            REQUIRE(pair.label.knowledge.size() == 1);
            CHECK(corpus.kb.find_doc(pair.label.knowledge.front()) != nullptr);
            CHECK(pair.context.turns.back().speaker == Speaker::kUser);
        }
    }
}

TEST_CASE("entity names are unique and from a disjoint vocabulary") {
    CorpusSpec spec;
    spec.seed = 3;
    spec.n_domains = 3;
    spec.entities_per_domain = 10;
    GeneratedCorpus corpus = generate(spec);
    std::set<std::string> names;
    for (const auto& [domain, entities] : corpus.kb.domains) {
        for (const auto& [id, entity] : entities) {
            CHECK(names.insert(normalize(entity.name)).second);
        }
    }
    CHECK(names.size() == 30);
}

TEST_CASE("zero misspell rate keeps the exact-mention guarantee") {
    CorpusSpec spec;
    spec.seed = 42;
    spec.dialogues = 40;
    spec.misspell_rate = 0.0;
    GeneratedCorpus corpus = generate(spec);
    Gazetteer gaz = Gazetteer::build(corpus.kb);
    for (const LabeledDialogue& pair : corpus.dialogues) {
        auto found = retrieve_fuzzy(pair.context, gaz, FuzzyConfig{}).first;
        REQUIRE_FALSE(found.empty());
        CHECK(found.front().domain == pair.label.knowledge.front().domain);
        CHECK(found.front().entity_id == pair.label.knowledge.front().entity_id);
        CHECK(found.front().score == 1.0);
    }
}

TEST_CASE("mention offsets realize the distribution as exact quotas") {
    CorpusSpec spec;
    spec.seed = 55;
    spec.dialogues = 40;
    spec.misspell_rate = 0.0;
    spec.mention_turn_distribution = {{0, 0.25}, {1, 0.50}, {4, 0.25}};
    GeneratedCorpus corpus = generate(spec);

    std::map<int, int> observed;
    for (const LabeledDialogue& pair : corpus.dialogues) {
        const Entity* entity = corpus.kb.find_entity(pair.label.knowledge.front().domain,
                                                     pair.label.knowledge.front().entity_id);
        const std::string name = normalize(entity->name);
        int found_offset = -1;
        for (std::size_t t = 0; t < pair.context.turns.size(); ++t) {
            if (normalize(pair.context.turns[t].text).find(name) != std::string::npos) {
                found_offset = static_cast<int>(pair.context.turns.size() - 1 - t);
            }
        }
        REQUIRE(found_offset >= 0);
        ++observed[found_offset];
    }
    CHECK(observed[0] == 10);
    CHECK(observed[1] == 20);
    CHECK(observed[4] == 10);
}

TEST_CASE("mentions at offset 4 need a five-turn window") {
    CorpusSpec spec;
    spec.seed = 77;
    spec.dialogues = 20;
    spec.misspell_rate = 0.0;
    spec.mention_turn_distribution = {{4, 1.0}};
    GeneratedCorpus corpus = generate(spec);
    Gazetteer gaz = Gazetteer::build(corpus.kb);

    FuzzyConfig narrow;
    narrow.last_k_turns = 2;
    FuzzyConfig wide;
    wide.last_k_turns = 5;
    for (const LabeledDialogue& pair : corpus.dialogues) {
        CHECK(retrieve_fuzzy(pair.context, gaz, narrow).first.empty());
        auto found = retrieve_fuzzy(pair.context, gaz, wide).first;
        REQUIRE_FALSE(found.empty());
        CHECK(found.front().entity_id == pair.label.knowledge.front().entity_id);
    }
}

TEST_CASE("misspell rate 1.0 corrupts every mention by one character") {
    CorpusSpec spec;
    spec.seed = 60;
    spec.dialogues = 25;
    spec.misspell_rate = 1.0;
    GeneratedCorpus corpus = generate(spec);
    Gazetteer gaz = Gazetteer::build(corpus.kb);
    std::size_t verified = 0;
    for (const LabeledDialogue& pair : corpus.dialogues) {
        const Entity* entity = corpus.kb.find_entity(pair.label.knowledge.front().domain,
                                                     pair.label.knowledge.front().entity_id);
        const std::string name = normalize(entity->name);
        // The exact name never appears...
        for (const Utterance& turn : pair.context.turns) {
            CHECK(normalize(turn.text).find(name) == std::string::npos);
        }
        // ...but some n-gram sits at edit distance exactly 1 from it.
        bool found_near = false;
        for (const Utterance& turn : pair.context.turns) {
            const auto tokens = tokenize(turn.text);
            for (const NGram& ng : all_ngrams_up_to(tokens, gaz.max_name_tokens)) {
                if (levenshtein(ng.text, name) == 1) found_near = true;
            }
        }
        if (found_near) ++verified;
    }
    // A substitution can merge two tokens only if it hits a space; the
    // generator never replaces spaces, so every dialogue qualifies.
    CHECK(verified == corpus.dialogues.size());
}

TEST_CASE("corpus spec validation rejects bad shapes") {
    CorpusSpec spec;
    spec.dialogues = 0;
    CHECK_THROWS_AS(validate_corpus_spec(spec), ValidationError);

    spec = CorpusSpec{};
    spec.mention_turn_distribution = {{0, 0.5}, {1, 0.6}};
    CHECK_THROWS_AS(validate_corpus_spec(spec), ValidationError);

    spec = CorpusSpec{};
    spec.mention_turn_distribution = {{-1, 1.0}};
    CHECK_THROWS_AS(validate_corpus_spec(spec), ValidationError);

    spec = CorpusSpec{};
    spec.misspell_rate = 1.5;
    CHECK_THROWS_AS(validate_corpus_spec(spec), ValidationError);

    spec = CorpusSpec{};
    spec.distractor_turns = {3, 1};
    CHECK_THROWS_AS(validate_corpus_spec(spec), ValidationError);
}

TEST_CASE("corpus spec parses from JSON with defaults") {
    CorpusSpec spec = parse_corpus_spec(R"({
        "seed": 99, "dialogues": 12,
        "mention_turn_distribution": {"0": 0.5, "2": 0.5},
        "distractor_turns": [0, 1]
    })");
    CHECK(spec.seed == 99);
    CHECK(spec.dialogues == 12);
    CHECK(spec.n_domains == 2);  // default preserved
    CHECK(spec.mention_turn_distribution.at(2) == 0.5);
    CHECK(spec.distractor_turns == std::pair<int, int>{0, 1});

    CHECK_THROWS_AS(parse_corpus_spec("{nope"), ParseError);
    CHECK_THROWS_AS(parse_corpus_spec(R"({"dialogues": -3})"), ValidationError);
    CHECK_THROWS_AS(parse_corpus_spec(R"({"distractor_turns": [1]})"), ValidationError);
}

TEST_CASE("write_corpus emits loadable files") {
    CorpusSpec spec;
    spec.seed = 70;
    spec.dialogues = 8;
    GeneratedCorpus corpus = generate(spec);
    const auto dir = std::filesystem::temp_directory_path() / "kselect_test_corpus";
    std::filesystem::remove_all(dir);
    write_corpus(corpus, dir);

    KnowledgeBase kb = load_knowledge_base(dir / "knowledge.json");
    CHECK(kb == corpus.kb);
    auto pairs = load_dialogues(dir / "logs.json", dir / "labels.json", &kb);
    CHECK(pairs == corpus.dialogues);
    std::filesystem::remove_all(dir);
}
