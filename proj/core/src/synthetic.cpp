#include "kselect/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "json.hpp"

#include "kselect/fuzzy.hpp"
#include "kselect/rng.hpp"
#include "kselect/textproc.hpp"

namespace kselect {

using nlohmann::json;

namespace {

// Disjoint consonant classes per token role.
constexpr const char* kNameConsonants = "bdgkm";
constexpr const char* kTopicConsonants = "prstv";
constexpr const char* kFillerConsonants = "fhjln";
constexpr const char* kVowels = "aeiou";

std::string pseudo_word(DetRng& rng, const char* consonants, int min_syllables,
                        int max_syllables) {
    const int syllables = rng.uniform_int(min_syllables, max_syllables);
    const int n_cons = static_cast<int>(std::string(consonants).size());
    std::string word;
    for (int s = 0; s < syllables; ++s) {
        word.push_back(consonants[rng.uniform_int(0, n_cons - 1)]);
        word.push_back(kVowels[rng.uniform_int(0, 4)]);
    }
    return word;
}

std::string filler_word(DetRng& rng) { return pseudo_word(rng, kFillerConsonants, 2, 3); }

// 1-3 pseudo-words, unique across the kb and kept at edit distance >= 3 from
// every other name so a one-character misspelling can never be closer to a
// different entity.
std::string make_entity_name(DetRng& rng, std::vector<std::string>& taken) {
    for (int attempt = 0;; ++attempt) {
        const int words = rng.uniform_int(1, 3);
        std::string name;
        for (int w = 0; w < words; ++w) {
            if (w > 0) name.push_back(' ');
            name += pseudo_word(rng, kNameConsonants, 2, 4);
        }
        if (attempt > 200) name += " " + pseudo_word(rng, kNameConsonants, 2, 4);
        bool ok = true;
        for (const std::string& existing : taken) {
            const std::size_t len_gap = existing.size() > name.size()
                                            ? existing.size() - name.size()
                                            : name.size() - existing.size();
            if (len_gap >= 3) continue;
            if (levenshtein(existing, name) < 3) {
                ok = false;
                break;
            }
        }
        if (ok) {
            taken.push_back(name);
            return name;
        }
    }
}

// One-character substitution at a random non-space position.
std::string misspell(DetRng& rng, const std::string& name) {
    std::vector<int> positions;
    for (int i = 0; i < static_cast<int>(name.size()); ++i) {
        if (name[static_cast<std::size_t>(i)] != ' ') positions.push_back(i);
    }
    std::string out = name;
    const int pos = positions[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<int>(positions.size()) - 1))];
    char replacement;
    do {
        replacement = static_cast<char>('a' + rng.uniform_int(0, 25));
    } while (replacement == out[static_cast<std::size_t>(pos)]);
    out[static_cast<std::size_t>(pos)] = replacement;
    return out;
}

// Exact quotas per offset (largest remainder), deterministically shuffled.
std::vector<int> mention_offsets(DetRng& rng, const std::map<int, double>& distribution,
                                 int dialogues) {
    struct Share {
        int offset;
        int count;
        double remainder;
    };
    std::vector<Share> shares;
    int assigned = 0;
    for (const auto& [offset, p] : distribution) {
        const double exact = p * dialogues;
        const int base = static_cast<int>(std::floor(exact));
        shares.push_back(Share{offset, base, exact - base});
        assigned += base;
    }
    std::stable_sort(shares.begin(), shares.end(),
                     [](const Share& a, const Share& b) { return a.remainder > b.remainder; });
    for (int i = 0; assigned < dialogues; ++i, ++assigned) {
        ++shares[static_cast<std::size_t>(i) % shares.size()].count;
    }
    std::vector<int> offsets;
    offsets.reserve(static_cast<std::size_t>(dialogues));
    std::sort(shares.begin(), shares.end(),
              [](const Share& a, const Share& b) { return a.offset < b.offset; });
    for (const Share& share : shares) {
        offsets.insert(offsets.end(), static_cast<std::size_t>(share.count), share.offset);
    }
    rng.shuffle(offsets);
    return offsets;
}

std::string join(const std::vector<std::string>& words) {
    std::string out;
    for (const std::string& w : words) {
        if (!out.empty()) out.push_back(' ');
        out += w;
    }
    return out;
}

}  // namespace

void validate_corpus_spec(const CorpusSpec& spec) {
    if (spec.n_domains < 1 || spec.entities_per_domain < 1 || spec.docs_per_entity < 1 ||
        spec.dialogues < 1) {
        throw ValidationError("corpus spec: all counts must be >= 1");
    }
    if (spec.mention_turn_distribution.empty()) {
        throw ValidationError("corpus spec: mention_turn_distribution is empty");
    }
    double total = 0.0;
    for (const auto& [offset, p] : spec.mention_turn_distribution) {
        if (offset < 0) throw ValidationError("corpus spec: negative mention turn offset");
        if (p < 0.0) throw ValidationError("corpus spec: negative probability");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw ValidationError("corpus spec: mention turn probabilities must sum to 1, got " +
                              std::to_string(total));
    }
    if (spec.misspell_rate < 0.0 || spec.misspell_rate > 1.0) {
        throw ValidationError("corpus spec: misspell_rate must be in [0, 1]");
    }
    if (spec.distractor_turns.first < 0 ||
        spec.distractor_turns.second < spec.distractor_turns.first) {
        throw ValidationError("corpus spec: distractor_turns must be a range 0 <= lo <= hi");
    }
}

CorpusSpec parse_corpus_spec(const std::string& json_text, const std::string& origin) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(origin + ": " + e.what());
    }
    CorpusSpec spec;
    spec.seed = root.value("seed", spec.seed);
    spec.n_domains = root.value("n_domains", spec.n_domains);
    spec.entities_per_domain = root.value("entities_per_domain", spec.entities_per_domain);
    spec.docs_per_entity = root.value("docs_per_entity", spec.docs_per_entity);
    spec.dialogues = root.value("dialogues", spec.dialogues);
    spec.misspell_rate = root.value("misspell_rate", spec.misspell_rate);
    if (auto it = root.find("mention_turn_distribution"); it != root.end()) {
        spec.mention_turn_distribution.clear();
        for (const auto& [key, value] : it->items()) {
            spec.mention_turn_distribution[std::stoi(key)] = value.get<double>();
        }
    }
    if (auto it = root.find("distractor_turns"); it != root.end()) {
        if (!it->is_array() || it->size() != 2) {
            throw ValidationError(origin + ": distractor_turns must be [lo, hi]");
        }
        spec.distractor_turns = {(*it)[0].get<int>(), (*it)[1].get<int>()};
    }
    validate_corpus_spec(spec);
    return spec;
}

CorpusSpec load_corpus_spec(const std::filesystem::path& path) {
    return parse_corpus_spec(read_text_file(path), path.string());
}

GeneratedCorpus generate(const CorpusSpec& spec) {
    validate_corpus_spec(spec);
    DetRng rng(spec.seed);
    GeneratedCorpus corpus;

    // Knowledge base.
    std::vector<std::string> taken_names;
    std::vector<KnowledgeKey> all_doc_keys;
    for (int d = 0; d < spec.n_domains; ++d) {
        const std::string domain = "domain" + std::to_string(d);
        auto& entities = corpus.kb.domains[domain];
        for (int e = 0; e < spec.entities_per_domain; ++e) {
            Entity entity;
            entity.id = e;
            entity.name = make_entity_name(rng, taken_names);
            for (int doc_id = 0; doc_id < spec.docs_per_entity; ++doc_id) {
                KnowledgeDoc doc;
                doc.doc_id = doc_id;
                const int n_topic = rng.uniform_int(3, 5);
                std::vector<std::string> topic;
                for (int t = 0; t < n_topic; ++t) {
                    topic.push_back(pseudo_word(rng, kTopicConsonants, 2, 3));
                }
                doc.title = join(topic);
                std::vector<std::string> body_words = topic;
                const int extra = rng.uniform_int(1, 3);
                for (int t = 0; t < extra; ++t) {
                    body_words.push_back(pseudo_word(rng, kTopicConsonants, 2, 3));
                }
                doc.body = join(body_words);
                entity.docs.emplace(doc_id, std::move(doc));
                all_doc_keys.push_back(KnowledgeKey{domain, e, doc_id});
            }
            entities.emplace(e, std::move(entity));
        }
    }

    // Dialogues.
    const std::vector<int> offsets = mention_offsets(rng, spec.mention_turn_distribution,
                                                     spec.dialogues);
    for (int i = 0; i < spec.dialogues; ++i) {
        const KnowledgeKey gold = all_doc_keys[static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<int>(all_doc_keys.size()) - 1))];
        const Entity& entity = *corpus.kb.find_entity(gold.domain, gold.entity_id);
        const KnowledgeDoc& doc = entity.docs.at(gold.doc_id);

        std::string mention_name = entity.name;
        if (spec.misspell_rate > 0.0 && rng.uniform01() < spec.misspell_rate) {
            mention_name = misspell(rng, mention_name);
        }

        const int offset = offsets[static_cast<std::size_t>(i)];
        const int distractors = rng.uniform_int(spec.distractor_turns.first,
                                                spec.distractor_turns.second);
        const int total_turns = offset + 1 + distractors;
        const int mention_turn = distractors;  // = total_turns - 1 - offset

        std::vector<std::string> title_words;
        for (const Token& t : tokenize(doc.title)) title_words.push_back(t.surface);
        rng.shuffle(title_words);
        std::string query_text = "do they have " + join(title_words) + " " + filler_word(rng);

        DialogueContext context;
        context.turns.resize(static_cast<std::size_t>(total_turns));
        for (int t = 0; t < total_turns; ++t) {
            Utterance& u = context.turns[static_cast<std::size_t>(t)];
            const int from_end = total_turns - 1 - t;
            u.speaker = from_end % 2 == 0 ? Speaker::kUser : Speaker::kSystem;
            if (t == total_turns - 1) {
                u.text = mention_turn == t ? "what about " + mention_name + " " + query_text
                                           : query_text;
            } else if (t == mention_turn) {
                u.text = "what about " + mention_name + " then " + filler_word(rng);
            } else if (t < mention_turn) {
                // Distractor turn: dump a sibling doc's keywords twice so a
                // full-history query drifts toward the wrong doc.
                if (spec.docs_per_entity > 1) {
                    int sibling;
                    do {
                        sibling = rng.uniform_int(0, spec.docs_per_entity - 1);
                    } while (sibling == gold.doc_id);
                    const std::string& sib_title = entity.docs.at(sibling).title;
                    u.text = "they said " + sib_title + " " + sib_title + " also " +
                             filler_word(rng);
                } else {
                    u.text = "they said " + filler_word(rng) + " " + filler_word(rng) + " also";
                }
            } else {
                u.text = "well " + filler_word(rng) + " " + filler_word(rng);
            }
        }

        GoldLabel label;
        label.target = true;
        label.knowledge.push_back(gold);
        corpus.dialogues.push_back(LabeledDialogue{std::move(context), std::move(label)});
    }
    return corpus;
}

void write_corpus(const GeneratedCorpus& corpus, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_text_file(dir / "knowledge.json", serialize_knowledge_base(corpus.kb));
    write_text_file(dir / "logs.json", serialize_logs(corpus.dialogues));
    write_text_file(dir / "labels.json", serialize_labels(corpus.dialogues));
}

}  // namespace kselect
