// kselect: two-stage knowledge selection for task-oriented dialogue.
// Subcommands: validate, gen-corpus, train-ner, select, evaluate, bench.
// Structured output goes to stdout, diagnostics to stderr.

#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "kselect/corpus.hpp"
#include "kselect/evaluation.hpp"
#include "kselect/pipeline.hpp"
#include "kselect/synthetic.hpp"
#include "kselect/tagger.hpp"

namespace {

using nlohmann::json;
using namespace kselect;

// "all" or a positive integer.
std::optional<int> parse_k(const std::string& value, const std::string& flag) {
    if (value == "all") return std::nullopt;
    try {
        int k = std::stoi(value);
        if (k >= 1) return k;
    } catch (const std::exception&) {
    }
    throw CLI::ValidationError(flag, "expected a positive integer or 'all', got '" + value + "'");
}

struct SelectOptions {
    std::string kb_path;
    std::string backend = "fuzzy";
    std::string model_path;
    std::string k_turns = "all";
    std::string fallback = "full";
    int top_k = 5;
    int keywords = 0;  // 0 = off
    double threshold = 0.95;
    int max_tokens = 256;
};

PipelineConfig make_pipeline_config(const SelectOptions& opt) {
    PipelineConfig config;
    if (opt.backend == "fuzzy") {
        config.backend = Backend::kFuzzy;
    } else if (opt.backend == "ner") {
        config.backend = Backend::kNer;
    } else {
        throw CLI::ValidationError("--backend", "must be 'fuzzy' or 'ner'");
    }
    if (opt.fallback == "empty") {
        config.fallback = Fallback::kEmpty;
    } else if (opt.fallback == "full") {
        config.fallback = Fallback::kFullKb;
    } else {
        throw CLI::ValidationError("--fallback", "must be 'empty' or 'full'");
    }
    auto k = parse_k(opt.k_turns, "--k-turns");
    config.fuzzy.threshold = opt.threshold;
    config.fuzzy.last_k_turns = k;
    config.tagger.last_k_turns = k;
    config.tagger.max_tokens = opt.max_tokens;
    config.matcher.k_turns = k;
    config.matcher.top_k = opt.top_k;
    config.matcher.max_tokens = opt.max_tokens;
    if (opt.keywords > 0) config.matcher.keyword_top_m = opt.keywords;
    return config;
}

DialogueContext parse_utterances_json(const std::string& text) {
    json turns;
    try {
        turns = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("--utterances: ") + e.what());
    }
    // Reuse the logs-entry validation by wrapping it as a one-dialogue log.
    json logs = json::array({turns});
    json labels = json::array({{{"target", true},
                                {"knowledge", json::array({{{"domain", "?"},
                                                            {"entity_id", 0},
                                                            {"doc_id", 0}}})}}});
    auto pairs = parse_dialogues(logs.dump(), labels.dump(), nullptr, "--utterances", "<internal>");
    return pairs.front().context;
}

int run_validate(const std::string& kb_path, const std::string& logs_path,
                 const std::string& labels_path) {
    KnowledgeBase kb = load_knowledge_base(kb_path);
    json out = {{"domains", kb.domains.size()},
                {"entities", kb.entity_count()},
                {"docs", kb.doc_count()}};
    if (!logs_path.empty() || !labels_path.empty()) {
        if (logs_path.empty() || labels_path.empty()) {
            throw CLI::ValidationError("--logs/--labels", "both must be given together");
        }
        auto pairs = load_dialogues(logs_path, labels_path, &kb);
        std::size_t seeking = 0;
        for (const auto& pair : pairs) {
            if (pair.label.target) ++seeking;
        }
        out["dialogues"] = pairs.size();
        out["knowledge_seeking"] = seeking;
    }
    std::cout << out.dump(2) << "\n";
    return 0;
}

int run_gen_corpus(const std::string& spec_path, const std::string& out_dir) {
    CorpusSpec spec = load_corpus_spec(spec_path);
    GeneratedCorpus corpus = generate(spec);
    write_corpus(corpus, out_dir);
    json out = {{"out_dir", out_dir},
                {"entities", corpus.kb.entity_count()},
                {"docs", corpus.kb.doc_count()},
                {"dialogues", corpus.dialogues.size()}};
    std::cout << out.dump(2) << "\n";
    return 0;
}

int run_train_ner(const std::string& kb_path, const std::string& logs_path,
                  const std::string& labels_path, const std::string& out_path,
                  const TaggerConfig& config) {
    KnowledgeBase kb = load_knowledge_base(kb_path);
    auto pairs = load_dialogues(logs_path, labels_path, &kb);
    PreparedDataset dataset = prepare_ner_dataset(pairs, kb, config);
    if (dataset.sentences.empty()) {
        throw ValidationError("train-ner: no knowledge-seeking dialogues to train on");
    }
    TaggerModel model = train(dataset.sentences, config);
    save_model(model, out_path);
    json out = {{"model", out_path},
                {"sentences", dataset.sentences.size()},
                {"no_mention", dataset.no_mention},
                {"non_seeking_skipped", dataset.non_seeking},
                {"epochs", model.epochs_trained},
                {"final_epoch_mistakes",
                 model.epoch_mistakes.empty() ? 0 : model.epoch_mistakes.back()}};
    std::cout << out.dump(2) << "\n";
    return 0;
}

int run_select(const SelectOptions& opt, const std::string& utterances_json) {
    PipelineConfig config = make_pipeline_config(opt);
    KnowledgeBase kb = load_knowledge_base(opt.kb_path);
    DocIndex index = build_index(kb);
    TaggerModel model;
    const TaggerModel* model_ptr = nullptr;
    if (config.backend == Backend::kNer) {
        model = load_model(opt.model_path);
        model_ptr = &model;
    }
    DialogueContext context = parse_utterances_json(utterances_json);
    PipelineOutcome outcome = run_pipeline(context, kb, index, model_ptr, config);
    std::cout << outcome_to_json(outcome);
    return 0;
}

int run_evaluate(const SelectOptions& opt, const std::string& logs_path,
                 const std::string& labels_path, const std::string& ablate) {
    PipelineConfig config = make_pipeline_config(opt);
    KnowledgeBase kb = load_knowledge_base(opt.kb_path);
    DocIndex index = build_index(kb);
    auto pairs = load_dialogues(logs_path, labels_path, &kb);
    TaggerModel model;
    const TaggerModel* model_ptr = nullptr;
    if (config.backend == Backend::kNer) {
        model = load_model(opt.model_path);
        model_ptr = &model;
    }
    EvalReport report = evaluate_dataset(pairs, kb, index, model_ptr, config);
    if (!ablate.empty()) {
        std::vector<std::optional<int>> ks;
        std::string item;
        std::istringstream stream(ablate);
        while (std::getline(stream, item, ',')) {
            ks.push_back(parse_k(item, "--ablate"));
        }
        report.per_turn_ablation = ablate_turns(pairs, kb, index, model_ptr, config, ks);
    }
    std::cout << report_to_json(report);
    std::cerr << report_to_table(report);
    return 0;
}

int run_bench(const SelectOptions& opt, const std::string& logs_path,
              const std::string& labels_path, int repeats) {
    PipelineConfig config = make_pipeline_config(opt);
    KnowledgeBase kb = load_knowledge_base(opt.kb_path);
    DocIndex index = build_index(kb);
    auto pairs = load_dialogues(logs_path, labels_path, &kb);
    TaggerModel model = load_model(opt.model_path);
    BenchResult result = benchmark(pairs, kb, index, model, config, repeats);
    std::cout << bench_to_json(result);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"two-stage knowledge selection: entity retrieval + knowledge matching"};
    app.require_subcommand(1);

    SelectOptions opt;
    std::string logs_path, labels_path, out_path, spec_path, utterances_json, ablate;
    TaggerConfig tagger_config;
    int repeats = 3;

    auto* validate = app.add_subcommand("validate", "load and validate corpus files");
    validate->add_option("--kb", opt.kb_path, "knowledge.json path")->required();
    validate->add_option("--logs", logs_path, "logs.json path");
    validate->add_option("--labels", labels_path, "labels.json path");

    auto* gen = app.add_subcommand("gen-corpus", "generate a synthetic corpus");
    gen->add_option("--spec", spec_path, "corpus spec JSON path")->required();
    gen->add_option("--out", out_path, "output directory")->required();

    auto* train_cmd = app.add_subcommand("train-ner", "train the IOB tagger");
    train_cmd->add_option("--kb", opt.kb_path)->required();
    train_cmd->add_option("--logs", logs_path)->required();
    train_cmd->add_option("--labels", labels_path)->required();
    train_cmd->add_option("--out", out_path, "model output path")->required();
    train_cmd->add_option("--epochs", tagger_config.epochs);
    train_cmd->add_option("--seed", tagger_config.seed);
    train_cmd->add_option("--max-tokens", tagger_config.max_tokens);

    auto* select = app.add_subcommand("select", "run the pipeline on one dialogue");
    select->add_option("--kb", opt.kb_path)->required();
    select->add_option("--backend", opt.backend, "fuzzy|ner");
    select->add_option("--model", opt.model_path, "tagger model path (required for ner)");
    select->add_option("--utterances", utterances_json, "one logs entry as inline JSON")->required();
    select->add_option("--k-turns", opt.k_turns, "positive integer or 'all'");
    select->add_option("--top-k", opt.top_k);
    select->add_option("--keywords", opt.keywords, "keep top-m tf-idf query terms (0 = off)");
    select->add_option("--threshold", opt.threshold);
    select->add_option("--max-tokens", opt.max_tokens);
    select->add_option("--fallback", opt.fallback, "empty|full");

    auto* evaluate = app.add_subcommand("evaluate", "run metrics over a labeled dataset");
    evaluate->add_option("--kb", opt.kb_path)->required();
    evaluate->add_option("--logs", logs_path)->required();
    evaluate->add_option("--labels", labels_path)->required();
    evaluate->add_option("--backend", opt.backend, "fuzzy|ner");
    evaluate->add_option("--model", opt.model_path);
    evaluate->add_option("--k-turns", opt.k_turns);
    evaluate->add_option("--top-k", opt.top_k);
    evaluate->add_option("--keywords", opt.keywords);
    evaluate->add_option("--threshold", opt.threshold);
    evaluate->add_option("--max-tokens", opt.max_tokens);
    evaluate->add_option("--fallback", opt.fallback);
    evaluate->add_option("--ablate", ablate, "comma-separated turn counts, e.g. 1,2,5,all");

    auto* bench = app.add_subcommand("bench", "compare fuzzy and ner backends");
    bench->add_option("--kb", opt.kb_path)->required();
    bench->add_option("--logs", logs_path)->required();
    bench->add_option("--labels", labels_path)->required();
    bench->add_option("--model", opt.model_path)->required();
    bench->add_option("--threshold", opt.threshold);
    bench->add_option("--repeats", repeats);

    try {
        app.parse(argc, argv);
        if ((select->parsed() || evaluate->parsed()) && opt.backend == "ner" &&
            opt.model_path.empty()) {
            std::cerr << "error: --backend ner requires --model\n";
            return 1;
        }
        if (validate->parsed()) return run_validate(opt.kb_path, logs_path, labels_path);
        if (gen->parsed()) return run_gen_corpus(spec_path, out_path);
        if (train_cmd->parsed()) {
            return run_train_ner(opt.kb_path, logs_path, labels_path, out_path, tagger_config);
        }
        if (select->parsed()) return run_select(opt, utterances_json);
        if (evaluate->parsed()) return run_evaluate(opt, logs_path, labels_path, ablate);
        if (bench->parsed()) return run_bench(opt, logs_path, labels_path, repeats);
        return 1;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);  // prints help or the usage error
        return code == 0 ? 0 : 1;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 2;
    }
}
