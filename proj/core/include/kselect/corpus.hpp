#pragma once
// Knowledge base and dialogue data model, plus ingestion and validation of
// the on-disk JSON formats (knowledge.json / logs.json / labels.json).

#include <compare>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace kselect {

// Malformed JSON input (bad syntax, wrong shape). Message carries the file
// path and the parser's line/column context.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Well-formed JSON that violates a data invariant. Message names the
// offending domain/entity/doc or dialogue index.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct KnowledgeDoc {
    int doc_id = 0;
    std::string title;  // FAQ question or review heading, may be empty
    std::string body;   // never empty

    bool operator==(const KnowledgeDoc&) const = default;
};

struct Entity {
    int id = 0;
    std::string name;  // display name, non-empty after normalization
    std::map<int, KnowledgeDoc> docs;

    bool operator==(const Entity&) const = default;
};

// The address of one knowledge snippet.
struct KnowledgeKey {
    std::string domain;
    int entity_id = 0;
    int doc_id = 0;

    auto operator<=>(const KnowledgeKey&) const = default;
};

// Full search space: domains -> entities -> docs. Immutable after load and
// safe to share across concurrent readers.
struct KnowledgeBase {
    std::map<std::string, std::map<int, Entity>> domains;

    const Entity* find_entity(const std::string& domain, int entity_id) const;
    const KnowledgeDoc* find_doc(const KnowledgeKey& key) const;
    std::size_t entity_count() const;
    std::size_t doc_count() const;

    bool operator==(const KnowledgeBase&) const = default;
};

enum class Speaker { kUser, kSystem };

struct Utterance {
    Speaker speaker = Speaker::kUser;
    std::string text;  // non-empty

    bool operator==(const Utterance&) const = default;
};

// Ordered conversation history; at least one turn, last turn is the user's.
struct DialogueContext {
    std::vector<Utterance> turns;

    bool operator==(const DialogueContext&) const = default;
};

// Ground truth for one dialogue. target=false means the turn is not
// knowledge-seeking and carries no keys.
struct GoldLabel {
    bool target = false;
    std::vector<KnowledgeKey> knowledge;

    bool operator==(const GoldLabel&) const = default;
};

struct LabeledDialogue {
    DialogueContext context;
    GoldLabel label;

    bool operator==(const LabeledDialogue&) const = default;
};

// Throws ValidationError naming the offending domain/entity/doc.
void validate_knowledge_base(const KnowledgeBase& kb);

KnowledgeBase parse_knowledge_base(const std::string& json_text,
                                   const std::string& origin = "<memory>");
KnowledgeBase load_knowledge_base(const std::filesystem::path& path);

// Pairwise zip of logs and labels; lengths must match. When kb is given,
// every referenced knowledge key must resolve.
std::vector<LabeledDialogue> parse_dialogues(const std::string& logs_json,
                                             const std::string& labels_json,
                                             const KnowledgeBase* kb = nullptr,
                                             const std::string& logs_origin = "<memory>",
                                             const std::string& labels_origin = "<memory>");
std::vector<LabeledDialogue> load_dialogues(const std::filesystem::path& logs_path,
                                            const std::filesystem::path& labels_path,
                                            const KnowledgeBase* kb = nullptr);

std::string serialize_knowledge_base(const KnowledgeBase& kb);
std::string serialize_logs(const std::vector<LabeledDialogue>& dialogues);
std::string serialize_labels(const std::vector<LabeledDialogue>& dialogues);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace kselect
