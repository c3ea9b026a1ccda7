#include "kselect/tagger.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "json.hpp"

#include "kselect/rng.hpp"

namespace kselect {

using nlohmann::json;

namespace {
constexpr double kLinkThreshold = 0.85;
constexpr const char* kStartSentinel = "<S>";
constexpr const char* kEndSentinel = "</S>";
}  // namespace

const char* tag_name(IOBTag tag) {
    switch (tag) {
        case IOBTag::B_ENT: return "B_ENT";
        case IOBTag::I_ENT: return "I_ENT";
        case IOBTag::O: return "O";
    }
    return "O";
}

IOBTag tag_from_name(const std::string& name) {
    if (name == "B_ENT") return IOBTag::B_ENT;
    if (name == "I_ENT") return IOBTag::I_ENT;
    if (name == "O") return IOBTag::O;
    throw ValidationError("unknown IOB tag name '" + name + "'");
}

std::vector<std::string> extract_features(const std::vector<Token>& tokens, std::size_t i,
                                          IOBTag prev_tag) {
    if (i >= tokens.size()) throw std::invalid_argument("extract_features: index out of range");
    const std::string& cur = tokens[i].surface;

    std::vector<std::string> features;
    features.reserve(8);
    features.push_back("w0=" + cur);
    features.push_back("w-1=" + (i == 0 ? std::string(kStartSentinel) : tokens[i - 1].surface));
    features.push_back("w+1=" +
                       (i + 1 == tokens.size() ? std::string(kEndSentinel) : tokens[i + 1].surface));
    features.push_back("pre3=" + cur.substr(0, 3));
    features.push_back("suf3=" + (cur.size() > 3 ? cur.substr(cur.size() - 3) : cur));
    features.push_back(std::string("prevtag=") + tag_name(prev_tag));
    if (i == 0) features.push_back("first");
    if (std::all_of(cur.begin(), cur.end(), [](unsigned char c) { return c >= '0' && c <= '9'; })) {
        features.push_back("isdigit");
    }
    return features;
}

namespace {

// Tokens of all turns in order, trimmed to the last max_tokens. turn_of
// records each surviving token's absolute turn index.
struct FlatHistory {
    std::vector<Token> tokens;
    std::vector<std::size_t> turn_of;
};

FlatHistory flatten_history(const DialogueContext& context, std::size_t first_turn,
                            int max_tokens) {
    FlatHistory flat;
    for (std::size_t t = first_turn; t < context.turns.size(); ++t) {
        for (Token& token : tokenize(context.turns[t].text)) {
            flat.tokens.push_back(std::move(token));
            flat.turn_of.push_back(t);
        }
    }
    const std::size_t cap = static_cast<std::size_t>(std::max(1, max_tokens));
    if (flat.tokens.size() > cap) {
        const std::size_t drop = flat.tokens.size() - cap;
        flat.tokens.erase(flat.tokens.begin(), flat.tokens.begin() + static_cast<long>(drop));
        flat.turn_of.erase(flat.turn_of.begin(), flat.turn_of.begin() + static_cast<long>(drop));
    }
    return flat;
}

std::size_t first_considered_turn(const DialogueContext& context,
                                  const std::optional<int>& last_k_turns) {
    if (!last_k_turns.has_value()) return 0;
    std::size_t k = static_cast<std::size_t>(std::max(1, *last_k_turns));
    return k < context.turns.size() ? context.turns.size() - k : 0;
}

double feature_weight(const TaggerModel::WeightMap& weights, const std::string& feature,
                      IOBTag tag) {
    auto it = weights.find(feature);
    if (it == weights.end()) return 0.0;
    return it->second[static_cast<int>(tag)];
}

IOBTag predict(const TaggerModel::WeightMap& weights, const std::vector<std::string>& features) {
    double best_score = 0.0;
    IOBTag best = IOBTag::B_ENT;
    bool first = true;
    for (IOBTag tag : kAllTags) {
        double score = 0.0;
        for (const std::string& f : features) score += feature_weight(weights, f, tag);
        if (first || score > best_score) {
            best_score = score;
            best = tag;
            first = false;
        }
    }
    return best;
}

// Lazy-average bookkeeping: totals accumulate weight * steps-held so the
// final average needs one flush per touched weight.
struct AveragedTrainer {
    struct Cell {
        std::array<double, 3> weight{};
        std::array<double, 3> total{};
        std::array<std::uint64_t, 3> stamp{};
    };
    std::unordered_map<std::string, Cell> cells;
    std::uint64_t step = 0;

    void bump(const std::string& feature, IOBTag tag, double delta) {
        Cell& cell = cells[feature];
        int t = static_cast<int>(tag);
        cell.total[t] += cell.weight[t] * static_cast<double>(step - cell.stamp[t]);
        cell.stamp[t] = step;
        cell.weight[t] += delta;
    }
};

}  // namespace

PreparedDataset prepare_ner_dataset(const std::vector<LabeledDialogue>& pairs,
                                    const KnowledgeBase& kb, const TaggerConfig& config) {
    PreparedDataset out;
    for (std::size_t d = 0; d < pairs.size(); ++d) {
        const LabeledDialogue& pair = pairs[d];
        if (!pair.label.target) {
            ++out.non_seeking;
            continue;
        }
        const KnowledgeKey& key = pair.label.knowledge.front();
        const Entity* entity = kb.find_entity(key.domain, key.entity_id);
        if (entity == nullptr) {
            throw ValidationError("dialogue " + std::to_string(d) + ": knowledge key (" +
                                  key.domain + ", " + std::to_string(key.entity_id) +
                                  ") does not resolve in the knowledge base");
        }

        FlatHistory flat = flatten_history(pair.context, 0, config.max_tokens);
        TaggedSentence sentence;
        sentence.tokens = std::move(flat.tokens);
        sentence.tags.assign(sentence.tokens.size(), IOBTag::O);

        const std::vector<Token> name_tokens = tokenize(entity->name);
        bool mentioned = false;
        if (!name_tokens.empty() && sentence.tokens.size() >= name_tokens.size()) {
            // Greedy leftmost matching; spans of the same name cannot overlap.
            std::size_t i = 0;
            while (i + name_tokens.size() <= sentence.tokens.size()) {
                bool match = true;
                for (std::size_t j = 0; j < name_tokens.size(); ++j) {
                    if (sentence.tokens[i + j].surface != name_tokens[j].surface) {
                        match = false;
                        break;
                    }
                }
                if (match) {
                    sentence.tags[i] = IOBTag::B_ENT;
                    for (std::size_t j = 1; j < name_tokens.size(); ++j) {
                        sentence.tags[i + j] = IOBTag::I_ENT;
                    }
                    mentioned = true;
                    i += name_tokens.size();
                } else {
                    ++i;
                }
            }
        }
        if (!mentioned) ++out.no_mention;
        out.sentences.push_back(std::move(sentence));
    }
    return out;
}

TaggerModel train(const std::vector<TaggedSentence>& dataset, const TaggerConfig& config) {
    if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
    if (config.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
    for (const TaggedSentence& s : dataset) {
        if (s.tokens.size() != s.tags.size()) {
            throw std::invalid_argument("train: tokens/tags length mismatch");
        }
    }

    AveragedTrainer trainer;
    DetRng rng(config.seed);
    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    std::vector<std::uint64_t> epoch_mistakes;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(order);
        std::uint64_t mistakes = 0;
        for (std::size_t idx : order) {
            const TaggedSentence& sentence = dataset[idx];
            IOBTag prev = IOBTag::O;
            for (std::size_t i = 0; i < sentence.tokens.size(); ++i) {
                ++trainer.step;
                const auto features = extract_features(sentence.tokens, i, prev);
                // Scores against the live weights.
                double best_score = 0.0;
                IOBTag pred = IOBTag::B_ENT;
                bool first = true;
                for (IOBTag t : kAllTags) {
                    double score = 0.0;
                    for (const std::string& f : features) {
                        auto it = trainer.cells.find(f);
                        if (it != trainer.cells.end()) score += it->second.weight[static_cast<int>(t)];
                    }
                    if (first || score > best_score) {
                        best_score = score;
                        pred = t;
                        first = false;
                    }
                }
                const IOBTag gold = sentence.tags[i];
                if (pred != gold) {
                    ++mistakes;
                    for (const std::string& f : features) {
                        trainer.bump(f, gold, +1.0);
                        trainer.bump(f, pred, -1.0);
                    }
                }
                prev = pred;
            }
        }
        epoch_mistakes.push_back(mistakes);
    }

    TaggerModel model;
    model.epochs_trained = config.epochs;
    model.seed = config.seed;
    model.max_tokens = config.max_tokens;
    model.epoch_mistakes = std::move(epoch_mistakes);
    const double steps = static_cast<double>(trainer.step);
    for (auto& [feature, cell] : trainer.cells) {
        std::array<double, 3> raw{};
        std::array<double, 3> avg{};
        bool any = false;
        for (int t = 0; t < 3; ++t) {
            cell.total[t] += cell.weight[t] * static_cast<double>(trainer.step - cell.stamp[t]);
            raw[t] = cell.weight[t];
            avg[t] = steps > 0 ? cell.total[t] / steps : 0.0;
            any = any || raw[t] != 0.0 || avg[t] != 0.0;
        }
        if (any) {
            model.weights.emplace(feature, raw);
            model.averaged.emplace(feature, avg);
        }
    }
    return model;
}

std::vector<IOBTag> tag(const TaggerModel& model, const std::vector<Token>& tokens) {
    std::vector<IOBTag> tags;
    tags.reserve(tokens.size());
    IOBTag prev = IOBTag::O;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        IOBTag t = predict(model.averaged, extract_features(tokens, i, prev));
        tags.push_back(t);
        prev = t;
    }
    return tags;
}

std::vector<std::pair<std::size_t, std::size_t>> decode_span_ranges(
    const std::vector<IOBTag>& tags) {
    std::vector<std::pair<std::size_t, std::size_t>> ranges;
    bool open = false;
    std::size_t start = 0;
    for (std::size_t i = 0; i < tags.size(); ++i) {
        switch (tags[i]) {
            case IOBTag::B_ENT:
                if (open) ranges.emplace_back(start, i - 1);
                start = i;
                open = true;
                break;
            case IOBTag::I_ENT:
                if (!open) {  // repair: orphan I_ENT starts a span
                    start = i;
                    open = true;
                }
                break;
            case IOBTag::O:
                if (open) {
                    ranges.emplace_back(start, i - 1);
                    open = false;
                }
                break;
        }
    }
    if (open) ranges.emplace_back(start, tags.size() - 1);
    return ranges;
}

std::vector<std::string> decode_spans(const std::vector<Token>& tokens,
                                      const std::vector<IOBTag>& tags) {
    if (tokens.size() != tags.size()) {
        throw std::invalid_argument("decode_spans: tokens/tags length mismatch");
    }
    std::vector<std::string> spans;
    for (const auto& [first, last] : decode_span_ranges(tags)) {
        std::string text = tokens[first].surface;
        for (std::size_t i = first + 1; i <= last; ++i) {
            text.push_back(' ');
            text += tokens[i].surface;
        }
        spans.push_back(std::move(text));
    }
    return spans;
}

std::optional<EntityCandidate> link_entity(const std::string& span, const Gazetteer& gazetteer,
                                           ComparisonCounter& counter) {
    const std::string norm_span = normalize(span);
    if (auto it = gazetteer.exact.find(norm_span); it != gazetteer.exact.end()) {
        const auto& entry = gazetteer.entries[it->second];
        return EntityCandidate{entry.domain, entry.entity_id, 1.0, span, -1};
    }
    double best_score = -1.0;
    const Gazetteer::Entry* best = nullptr;
    for (const auto& entry : gazetteer.entries) {
        double score = similarity_normalized(norm_span, entry.norm_name);
        ++counter.comparisons;
        if (score > best_score) {  // entries ordered by (domain, entity_id); first tie wins
            best_score = score;
            best = &entry;
        }
    }
    if (best == nullptr || best_score < kLinkThreshold) return std::nullopt;
    return EntityCandidate{best->domain, best->entity_id, best_score, span, -1};
}

std::optional<EntityCandidate> link_entity(const std::string& span, const KnowledgeBase& kb) {
    ComparisonCounter counter;
    return link_entity(span, Gazetteer::build(kb), counter);
}

std::pair<std::vector<EntityCandidate>, ComparisonCounter> retrieve_ner(
    const DialogueContext& context, const TaggerModel& model, const Gazetteer& gazetteer,
    const TaggerConfig& config) {
    ComparisonCounter counter;
    FlatHistory flat =
        flatten_history(context, first_considered_turn(context, config.last_k_turns),
                        config.max_tokens);
    const std::vector<IOBTag> tags = tag(model, flat.tokens);

    struct Best {
        EntityCandidate candidate;
        std::size_t span_tokens = 0;
    };
    std::vector<std::optional<Best>> best(gazetteer.entries.size());
    std::unordered_map<std::string, std::size_t> entry_index;
    for (std::size_t e = 0; e < gazetteer.entries.size(); ++e) {
        entry_index[gazetteer.entries[e].domain + "\x1f" +
                    std::to_string(gazetteer.entries[e].entity_id)] = e;
    }

    for (const auto& [first, last] : decode_span_ranges(tags)) {
        std::string span = flat.tokens[first].surface;
        for (std::size_t i = first + 1; i <= last; ++i) {
            span.push_back(' ');
            span += flat.tokens[i].surface;
        }
        auto linked = link_entity(span, gazetteer, counter);
        if (!linked.has_value()) continue;
        linked->turn_index = static_cast<int>(flat.turn_of[first]);
        const std::size_t span_tokens = last - first + 1;
        const std::size_t e = entry_index.at(linked->domain + "\x1f" +
                                             std::to_string(linked->entity_id));
        if (!best[e].has_value() || linked->score > best[e]->candidate.score ||
            (linked->score == best[e]->candidate.score && span_tokens > best[e]->span_tokens)) {
            best[e] = Best{std::move(*linked), span_tokens};
        }
    }

    std::vector<std::pair<EntityCandidate, std::size_t>> scored;
    for (auto& b : best) {
        if (b.has_value()) scored.emplace_back(std::move(b->candidate), b->span_tokens);
    }
    std::stable_sort(scored.begin(), scored.end(), [](const auto& x, const auto& y) {
        if (x.first.score != y.first.score) return x.first.score > y.first.score;
        return x.second > y.second;
    });
    std::vector<EntityCandidate> candidates;
    candidates.reserve(scored.size());
    for (auto& [candidate, _] : scored) candidates.push_back(std::move(candidate));
    return {std::move(candidates), counter};
}

std::pair<std::vector<EntityCandidate>, ComparisonCounter> retrieve_ner(
    const DialogueContext& context, const TaggerModel& model, const KnowledgeBase& kb,
    const TaggerConfig& config) {
    return retrieve_ner(context, model, Gazetteer::build(kb), config);
}

std::string serialize_model(const TaggerModel& model) {
    json weights = json::object();
    // std::map ordering for a diff-able file.
    std::map<std::string, const std::array<double, 3>*> ordered;
    for (const auto& [feature, w] : model.averaged) ordered.emplace(feature, &w);
    for (const auto& [feature, w] : ordered) {
        json per_tag = json::object();
        for (IOBTag t : kAllTags) {
            double v = (*w)[static_cast<int>(t)];
            if (v != 0.0) per_tag[tag_name(t)] = v;
        }
        if (!per_tag.empty()) weights[feature] = std::move(per_tag);
    }
    json root = {{"config",
                  {{"epochs", model.epochs_trained},
                   {"seed", model.seed},
                   {"max_tokens", model.max_tokens}}},
                 {"weights", std::move(weights)}};
    return root.dump(2) + "\n";
}

TaggerModel parse_model(const std::string& json_text, const std::string& origin) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(origin + ": " + e.what());
    }
    TaggerModel model;
    if (auto cfg = root.find("config"); cfg != root.end()) {
        model.epochs_trained = cfg->value("epochs", 0);
        model.seed = cfg->value("seed", std::uint64_t{0});
        model.max_tokens = cfg->value("max_tokens", 256);
    }
    auto weights = root.find("weights");
    if (weights == root.end() || !weights->is_object()) {
        throw ValidationError(origin + ": missing 'weights' object");
    }
    for (const auto& [feature, per_tag] : weights->items()) {
        std::array<double, 3> w{};
        for (const auto& [name, value] : per_tag.items()) {
            double v = value.get<double>();
            if (!std::isfinite(v)) {
                throw ValidationError(origin + ": non-finite weight for feature '" + feature + "'");
            }
            w[static_cast<int>(tag_from_name(name))] = v;
        }
        model.averaged.emplace(feature, w);
    }
    model.weights = model.averaged;
    return model;
}

void save_model(const TaggerModel& model, const std::filesystem::path& path) {
    write_text_file(path, serialize_model(model));
}

TaggerModel load_model(const std::filesystem::path& path) {
    return parse_model(read_text_file(path), path.string());
}

}  // namespace kselect
