#include "kselect/corpus.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "kselect/textproc.hpp"

namespace kselect {

using nlohmann::json;

namespace {

// SAX handler that rejects duplicate object keys, which a DOM parse would
// silently collapse. Tracks the key path so the error names the offender.
struct DupKeyChecker : json::json_sax_t {
    struct Scope {
        std::set<std::string> seen;
        bool is_object = false;
    };
    std::vector<Scope> stack;
    std::vector<std::string> path;
    std::string duplicate_path;

    bool record_key(const std::string& k) {
        if (!stack.empty() && stack.back().is_object) {
            if (!stack.back().seen.insert(k).second) {
                std::string where;
                for (const auto& p : path) where += "/" + p;
                duplicate_path = where + "/" + k;
                return false;
            }
        }
        if (!path.empty()) path.back() = k;
        return true;
    }

    bool null() override { return true; }
    bool boolean(bool) override { return true; }
    bool number_integer(number_integer_t) override { return true; }
    bool number_unsigned(number_unsigned_t) override { return true; }
    bool number_float(number_float_t, const string_t&) override { return true; }
    bool string(string_t&) override { return true; }
    bool binary(binary_t&) override { return true; }
    bool start_object(std::size_t) override {
        stack.push_back(Scope{{}, true});
        path.emplace_back();
        return true;
    }
    bool key(string_t& k) override { return record_key(k); }
    bool end_object() override {
        stack.pop_back();
        path.pop_back();
        return true;
    }
    bool start_array(std::size_t) override {
        stack.push_back(Scope{{}, false});
        path.emplace_back("[]");
        return true;
    }
    bool end_array() override {
        stack.pop_back();
        path.pop_back();
        return true;
    }
    bool parse_error(std::size_t, const std::string&, const nlohmann::detail::exception&) override {
        return false;
    }
};

json parse_json(const std::string& text, const std::string& origin) {
    DupKeyChecker checker;
    if (!json::sax_parse(text, &checker) && !checker.duplicate_path.empty()) {
        throw ValidationError(origin + ": duplicate JSON key at " + checker.duplicate_path);
    }
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(origin + ": " + e.what());
    }
}

int parse_int_key(const std::string& key, const std::string& where) {
    std::size_t pos = 0;
    int value = 0;
    try {
        value = std::stoi(key, &pos);
    } catch (const std::exception&) {
        throw ValidationError(where + ": key '" + key + "' is not an integer");
    }
    if (pos != key.size()) {
        throw ValidationError(where + ": key '" + key + "' is not an integer");
    }
    return value;
}

const json& require(const json& obj, const char* field, const std::string& where) {
    auto it = obj.find(field);
    if (it == obj.end()) {
        throw ValidationError(where + ": missing field '" + field + "'");
    }
    return *it;
}

}  // namespace

const Entity* KnowledgeBase::find_entity(const std::string& domain, int entity_id) const {
    auto dit = domains.find(domain);
    if (dit == domains.end()) return nullptr;
    auto eit = dit->second.find(entity_id);
    if (eit == dit->second.end()) return nullptr;
    return &eit->second;
}

const KnowledgeDoc* KnowledgeBase::find_doc(const KnowledgeKey& key) const {
    const Entity* entity = find_entity(key.domain, key.entity_id);
    if (entity == nullptr) return nullptr;
    auto it = entity->docs.find(key.doc_id);
    if (it == entity->docs.end()) return nullptr;
    return &it->second;
}

std::size_t KnowledgeBase::entity_count() const {
    std::size_t n = 0;
    for (const auto& [_, entities] : domains) n += entities.size();
    return n;
}

std::size_t KnowledgeBase::doc_count() const {
    std::size_t n = 0;
    for (const auto& [_, entities] : domains)
        for (const auto& [_, entity] : entities) n += entity.docs.size();
    return n;
}

void validate_knowledge_base(const KnowledgeBase& kb) {
    for (const auto& [domain, entities] : kb.domains) {
        if (domain.empty()) throw ValidationError("knowledge base: empty domain name");
        for (const auto& [entity_id, entity] : entities) {
            std::string where = "domain '" + domain + "' entity " + std::to_string(entity_id);
            if (entity.id != entity_id) {
                throw ValidationError(where + ": id field disagrees with map key");
            }
            if (normalize(entity.name).empty()) {
                throw ValidationError(where + ": entity name is empty");
            }
            if (entity.docs.empty()) {
                throw ValidationError(where + " ('" + entity.name + "'): no docs");
            }
            for (const auto& [doc_id, doc] : entity.docs) {
                if (doc.doc_id != doc_id) {
                    throw ValidationError(where + " doc " + std::to_string(doc_id) +
                                          ": id field disagrees with map key");
                }
                if (doc.body.empty()) {
                    throw ValidationError(where + " doc " + std::to_string(doc_id) +
                                          ": empty body");
                }
            }
        }
    }
}

KnowledgeBase parse_knowledge_base(const std::string& json_text, const std::string& origin) {
    json root = parse_json(json_text, origin);
    if (!root.is_object()) {
        throw ValidationError(origin + ": top level must be an object of domains");
    }
    KnowledgeBase kb;
    for (const auto& [domain, entities_json] : root.items()) {
        if (!entities_json.is_object()) {
            throw ValidationError(origin + ": domain '" + domain + "' must map to an object");
        }
        auto& entities = kb.domains[domain];
        for (const auto& [entity_key, entity_json] : entities_json.items()) {
            int entity_id = parse_int_key(entity_key, origin + ": domain '" + domain + "'");
            std::string where = origin + ": domain '" + domain + "' entity " + entity_key;
            if (!entity_json.is_object()) {
                throw ValidationError(where + ": must be an object");
            }
            Entity entity;
            entity.id = entity_id;
            entity.name = require(entity_json, "name", where).get<std::string>();
            const json& docs_json = require(entity_json, "docs", where);
            if (!docs_json.is_object()) {
                throw ValidationError(where + ": 'docs' must be an object");
            }
            for (const auto& [doc_key, doc_json] : docs_json.items()) {
                int doc_id = parse_int_key(doc_key, where);
                KnowledgeDoc doc;
                doc.doc_id = doc_id;
                doc.title = require(doc_json, "title", where + " doc " + doc_key).get<std::string>();
                doc.body = require(doc_json, "body", where + " doc " + doc_key).get<std::string>();
                entity.docs.emplace(doc_id, std::move(doc));
            }
            entities.emplace(entity_id, std::move(entity));
        }
    }
    validate_knowledge_base(kb);
    return kb;
}

KnowledgeBase load_knowledge_base(const std::filesystem::path& path) {
    return parse_knowledge_base(read_text_file(path), path.string());
}

namespace {

Speaker parse_speaker(const std::string& s, const std::string& where) {
    if (s == "U") return Speaker::kUser;
    if (s == "S") return Speaker::kSystem;
    throw ValidationError(where + ": speaker must be \"U\" or \"S\", got \"" + s + "\"");
}

DialogueContext parse_context(const json& turns_json, const std::string& where) {
    if (!turns_json.is_array() || turns_json.empty()) {
        throw ValidationError(where + ": dialogue must be a non-empty array of turns");
    }
    DialogueContext context;
    for (std::size_t t = 0; t < turns_json.size(); ++t) {
        const json& turn = turns_json[t];
        std::string turn_where = where + " turn " + std::to_string(t);
        Utterance u;
        u.speaker = parse_speaker(require(turn, "speaker", turn_where).get<std::string>(), turn_where);
        u.text = require(turn, "text", turn_where).get<std::string>();
        if (u.text.empty()) throw ValidationError(turn_where + ": empty text");
        context.turns.push_back(std::move(u));
    }
    if (context.turns.back().speaker != Speaker::kUser) {
        throw ValidationError(where + ": last turn must be the user's");
    }
    return context;
}

GoldLabel parse_label(const json& label_json, const std::string& where) {
    GoldLabel label;
    label.target = require(label_json, "target", where).get<bool>();
    if (auto it = label_json.find("knowledge"); it != label_json.end()) {
        for (const json& key_json : *it) {
            KnowledgeKey key;
            key.domain = require(key_json, "domain", where).get<std::string>();
            key.entity_id = require(key_json, "entity_id", where).get<int>();
            key.doc_id = require(key_json, "doc_id", where).get<int>();
            label.knowledge.push_back(std::move(key));
        }
    }
    if (!label.target && !label.knowledge.empty()) {
        throw ValidationError(where + ": target=false but knowledge list is non-empty");
    }
    if (label.target && label.knowledge.empty()) {
        throw ValidationError(where + ": target=true but knowledge list is empty");
    }
    return label;
}

}  // namespace

std::vector<LabeledDialogue> parse_dialogues(const std::string& logs_json,
                                             const std::string& labels_json,
                                             const KnowledgeBase* kb,
                                             const std::string& logs_origin,
                                             const std::string& labels_origin) {
    json logs = parse_json(logs_json, logs_origin);
    json labels = parse_json(labels_json, labels_origin);
    if (!logs.is_array()) throw ValidationError(logs_origin + ": top level must be an array");
    if (!labels.is_array()) throw ValidationError(labels_origin + ": top level must be an array");
    if (logs.size() != labels.size()) {
        throw ValidationError("length mismatch: " + std::to_string(logs.size()) + " dialogues vs " +
                              std::to_string(labels.size()) + " labels");
    }
    std::vector<LabeledDialogue> out;
    out.reserve(logs.size());
    for (std::size_t i = 0; i < logs.size(); ++i) {
        std::string where = "dialogue " + std::to_string(i);
        LabeledDialogue pair;
        pair.context = parse_context(logs[i], where);
        pair.label = parse_label(labels[i], where);
        if (kb != nullptr) {
            for (const KnowledgeKey& key : pair.label.knowledge) {
                if (kb->find_doc(key) == nullptr) {
                    throw ValidationError(where + ": knowledge key (" + key.domain + ", " +
                                          std::to_string(key.entity_id) + ", " +
                                          std::to_string(key.doc_id) +
                                          ") does not resolve in the knowledge base");
                }
            }
        }
        out.push_back(std::move(pair));
    }
    return out;
}

std::vector<LabeledDialogue> load_dialogues(const std::filesystem::path& logs_path,
                                            const std::filesystem::path& labels_path,
                                            const KnowledgeBase* kb) {
    return parse_dialogues(read_text_file(logs_path), read_text_file(labels_path), kb,
                           logs_path.string(), labels_path.string());
}

std::string serialize_knowledge_base(const KnowledgeBase& kb) {
    json root = json::object();
    for (const auto& [domain, entities] : kb.domains) {
        json domain_json = json::object();
        for (const auto& [entity_id, entity] : entities) {
            json docs_json = json::object();
            for (const auto& [doc_id, doc] : entity.docs) {
                docs_json[std::to_string(doc_id)] = {{"title", doc.title}, {"body", doc.body}};
            }
            domain_json[std::to_string(entity_id)] = {{"name", entity.name},
                                                      {"docs", std::move(docs_json)}};
        }
        root[domain] = std::move(domain_json);
    }
    return root.dump(2) + "\n";
}

std::string serialize_logs(const std::vector<LabeledDialogue>& dialogues) {
    json root = json::array();
    for (const LabeledDialogue& d : dialogues) {
        json turns = json::array();
        for (const Utterance& u : d.context.turns) {
            turns.push_back({{"speaker", u.speaker == Speaker::kUser ? "U" : "S"},
                             {"text", u.text}});
        }
        root.push_back(std::move(turns));
    }
    return root.dump(2) + "\n";
}

std::string serialize_labels(const std::vector<LabeledDialogue>& dialogues) {
    json root = json::array();
    for (const LabeledDialogue& d : dialogues) {
        json keys = json::array();
        for (const KnowledgeKey& key : d.label.knowledge) {
            keys.push_back({{"domain", key.domain},
                            {"entity_id", key.entity_id},
                            {"doc_id", key.doc_id}});
        }
        root.push_back({{"target", d.label.target}, {"knowledge", std::move(keys)}});
    }
    return root.dump(2) + "\n";
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open file: " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open file for writing: " + path.string());
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace kselect
