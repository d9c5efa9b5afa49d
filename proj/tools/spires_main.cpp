// spires: schema-driven recursive information extraction over a completion
// LLM, with offline record/replay and relation-extraction evaluation.

#include "spires/digest.hpp"
#include "spires/emit.hpp"
#include "spires/engine.hpp"
#include "spires/errors.hpp"
#include "spires/eval.hpp"
#include "spires/grounding.hpp"
#include "spires/llm.hpp"
#include "spires/prompt.hpp"
#include "spires/schema.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

namespace {

using namespace spires;

// Stable exit codes, also listed in --help and the README:
//   0 success            4 invalid configuration or flag combination
//   1 schema violations  5 transport/rate-limit failure
//   2 file not found     6 malformed input data (syntax, TSV, cassette)
//   3 replay miss        7 extraction failure
constexpr int kExitOk = 0;
constexpr int kExitViolations = 1;
constexpr int kExitIo = 2;
constexpr int kExitReplayMiss = 3;
constexpr int kExitConfig = 4;
constexpr int kExitTransport = 5;
constexpr int kExitData = 6;
constexpr int kExitExtraction = 7;

const char* kExitCodeHelp =
    "Exit codes: 0 ok, 1 schema violations, 2 file not found, 3 replay miss,\n"
    "4 bad configuration, 5 transport failure, 6 malformed input, 7 extraction failure";

struct CommonOptions {
    std::string schema_path;
    std::string entry_class;
    std::string backend = "replay";
    std::string cassette_path;
    std::vector<std::string> lexicon_paths;
    std::vector<std::string> hierarchy_specs; // PREFIX=path
    std::string normmap_path;
    std::string format = "yaml";
    std::string out_path;
    bool deterministic = false;

    bool chunking = false;
    int window_chars = 1500;
    int overlap_chars = 200;
    int workers = 1;

    int recursion_limit = 10;
    std::string delimiter = ";";
    std::vector<std::string> null_markers;
    bool warnings_as_errors = false;
    std::string model_id = "gpt-3.5-turbo";
    double temperature = 0.0;
    int max_output_chars = 100000;

    std::string endpoint; // overrides SPIRES_LLM_ENDPOINT
    std::string api_key;  // overrides SPIRES_LLM_KEY
};

void require_file(const std::string& path, const std::string& what) {
    if (!std::filesystem::exists(path))
        throw std::filesystem::filesystem_error("no such " + what, path,
                                                std::make_error_code(std::errc::no_such_file_or_directory));
}

std::string read_stream_or_file(const std::string& path) {
    if (path.empty() || path == "-") {
        std::ostringstream buf;
        buf << std::cin.rdbuf();
        return buf.str();
    }
    require_file(path, "input file");
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string now_utc() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

std::string timestamp(const CommonOptions& opts) {
    return opts.deterministic ? "1970-01-01T00:00:00Z" : now_utc();
}

EngineConfig engine_config(const CommonOptions& opts) {
    EngineConfig config;
    config.recursion_limit = opts.recursion_limit;
    config.delimiter = opts.delimiter;
    if (!opts.null_markers.empty()) config.null_markers = opts.null_markers;
    config.warnings_as_errors = opts.warnings_as_errors;
    config.model_id = opts.model_id;
    config.temperature = opts.temperature;
    config.max_output_chars = opts.max_output_chars;
    return config;
}

ChunkParams chunk_params(const CommonOptions& opts) {
    ChunkParams params;
    params.chunking = opts.chunking;
    params.window_chars = opts.window_chars;
    params.overlap_chars = opts.overlap_chars;
    return params;
}

std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return sha256_hex(buf.str());
}

struct BackendBundle {
    std::shared_ptr<CompletionBackend> backend;
    std::string cassette_digest;
};

BackendBundle build_backend(const CommonOptions& opts) {
    BackendBundle bundle;
    if (opts.backend == "replay") {
        if (opts.cassette_path.empty())
            throw ConfigError("the replay backend requires --cassette");
        require_file(opts.cassette_path, "cassette");
        bundle.backend = std::make_shared<ReplayBackend>(load_cassette_file(opts.cassette_path));
        bundle.cassette_digest = file_digest(opts.cassette_path);
    } else if (opts.backend == "http") {
        HttpBackendConfig config = HttpBackendConfig::from_env();
        if (!opts.endpoint.empty()) config.endpoint = opts.endpoint;
        if (!opts.api_key.empty()) config.api_key = opts.api_key;
        bundle.backend = std::make_shared<HttpBackend>(config);
    } else {
        throw ConfigError("unknown backend '" + opts.backend + "' (expected replay or http)");
    }
    return bundle;
}

std::shared_ptr<Grounder> build_grounder(const CommonOptions& opts, const Schema& schema) {
    auto grounder = std::make_shared<Grounder>();
    std::map<std::string, std::string> hierarchy_by_prefix;
    for (const auto& spec : opts.hierarchy_specs) {
        size_t eq = spec.find('=');
        if (eq == std::string::npos)
            throw ConfigError("--hierarchy expects PREFIX=path, got '" + spec + "'");
        hierarchy_by_prefix[spec.substr(0, eq)] = spec.substr(eq + 1);
    }
    for (const auto& path : opts.lexicon_paths) {
        require_file(path, "lexicon");
        Lexicon lexicon = load_lexicon_file(path);
        auto it = hierarchy_by_prefix.find(lexicon.vocabulary_prefix);
        if (it != hierarchy_by_prefix.end()) {
            require_file(it->second, "hierarchy");
            lexicon.hierarchy = load_hierarchy_file(it->second);
            hierarchy_by_prefix.erase(it);
        }
        grounder->add_lexicon(std::make_shared<Lexicon>(std::move(lexicon)));
    }
    if (!hierarchy_by_prefix.empty())
        throw ConfigError("--hierarchy prefix '" + hierarchy_by_prefix.begin()->first +
                          "' matches no loaded lexicon");
    if (!opts.normmap_path.empty()) {
        require_file(opts.normmap_path, "normalization map");
        grounder->set_normalization_map(NormalizationMap::load_file(opts.normmap_path));
    }
    grounder->prepare(schema);
    return grounder;
}

void write_output(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write output file: " + out_path);
    out << text;
}

std::string render_document(const InstanceDocument& doc, const Schema& schema, const std::string& format) {
    if (format == "yaml") return emit_yaml(doc, schema);
    if (format == "json") return emit_json(doc, schema);
    if (format == "ofn") return emit_axioms(doc, schema).to_string();
    throw ConfigError("unknown format '" + format + "' (expected yaml, json, or ofn)");
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

int cmd_validate(const std::string& schema_path) {
    require_file(schema_path, "schema");
    std::ifstream in(schema_path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();

    // Parse without the load-time validity gate so every violation is
    // listed, not just the first.
    Schema schema;
    try {
        schema = load_schema(buf.str());
    } catch (const SyntaxError&) {
        throw;
    } catch (const SchemaError& e) {
        std::cerr << e.what() << "\n";
        return kExitViolations;
    }
    std::vector<Violation> violations = validate_schema(schema);
    if (violations.empty()) {
        std::cout << "schema '" << schema.name << "' is valid (" << schema.classes.size()
                  << " classes)\n";
        return kExitOk;
    }
    for (const auto& v : violations) std::cerr << v.to_string() << "\n";
    return kExitViolations;
}

int cmd_extract(const CommonOptions& opts, const std::string& input_path,
                const std::string& document_id) {
    require_file(opts.schema_path, "schema");
    Schema schema = load_schema_file(opts.schema_path);
    BackendBundle bundle = build_backend(opts);
    std::shared_ptr<Grounder> grounder = build_grounder(opts, schema);

    std::string text = read_stream_or_file(input_path);
    Engine engine(schema, *bundle.backend, grounder.get(), engine_config(opts));
    ExtractionResult result = engine.extract(opts.entry_class, text, document_id);

    InstanceDocument doc;
    doc.root = std::move(result.instance);
    doc.schema_name = schema.name;
    doc.metadata.model_id = opts.model_id;
    doc.metadata.cassette_digest = bundle.cassette_digest;
    doc.metadata.extracted_at = timestamp(opts);
    doc.metadata.warnings = result.warnings;

    for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
    write_output(render_document(doc, schema, opts.format), opts.out_path);
    return kExitOk;
}

int cmd_record(const CommonOptions& opts, const std::string& corpus_path) {
    if (opts.backend != "http")
        throw ConfigError("record requires the http backend (got '" + opts.backend + "')");
    if (opts.cassette_path.empty()) throw ConfigError("record requires --cassette for the output file");
    require_file(opts.schema_path, "schema");
    require_file(corpus_path, "corpus");

    Schema schema = load_schema_file(opts.schema_path);
    std::shared_ptr<Grounder> grounder = build_grounder(opts, schema);
    BackendBundle bundle = build_backend(opts);

    Cassette initial;
    if (std::filesystem::exists(opts.cassette_path)) initial = load_cassette_file(opts.cassette_path);
    initial.metadata.model_id = opts.model_id;
    initial.metadata.created_at = timestamp(opts);
    auto recording = std::make_shared<RecordingBackend>(bundle.backend, std::move(initial));

    std::vector<CorpusDocument> corpus = load_corpus_file(corpus_path);
    Engine engine(schema, *recording, grounder.get(), engine_config(opts));

    // Flush whatever was recorded even when a document fails mid-run.
    try {
        for (const auto& doc : corpus) {
            ChunkPlan plan = chunk_document(doc.title, doc.abstract_text, chunk_params(opts));
            for (const auto& chunk : plan.chunks) {
                ExtractionResult result = engine.extract(opts.entry_class, chunk.text, doc.id);
                InstanceDocument rendered;
                rendered.root = std::move(result.instance);
                rendered.schema_name = schema.name;
                rendered.metadata.model_id = opts.model_id;
                rendered.metadata.extracted_at = timestamp(opts);
                rendered.metadata.warnings = result.warnings;
                for (const auto& w : result.warnings)
                    std::cerr << "warning: " << doc.id << ": " << w << "\n";
                std::cout << render_document(rendered, schema, opts.format);
                std::cout << "---\n";
            }
        }
    } catch (...) {
        save_cassette_file(recording->snapshot(), opts.cassette_path);
        std::cerr << "partial cassette flushed to " << opts.cassette_path << "\n";
        throw;
    }
    save_cassette_file(recording->snapshot(), opts.cassette_path);
    std::cerr << "cassette written to " << opts.cassette_path << " ("
              << recording->snapshot().entries.size() << " entries)\n";
    return kExitOk;
}

int cmd_eval_triples(const CommonOptions& opts, const std::string& gold_path,
                     const std::string& pred_path, const std::string& corpus_path,
                     const std::string& emit_pred_path) {
    require_file(gold_path, "gold triples");
    std::vector<TripleRecord> gold = load_triples_file(gold_path);

    NormalizationMap norm;
    if (!opts.normmap_path.empty()) {
        require_file(opts.normmap_path, "normalization map");
        norm = NormalizationMap::load_file(opts.normmap_path);
    }

    std::vector<TripleRecord> predicted;
    if (!pred_path.empty()) {
        require_file(pred_path, "predicted triples");
        predicted = load_triples_file(pred_path);
    } else if (!corpus_path.empty()) {
        require_file(corpus_path, "corpus");
        Schema schema = load_schema_file(opts.schema_path);
        BackendBundle bundle = build_backend(opts);
        std::shared_ptr<Grounder> grounder = build_grounder(opts, schema);
        Engine engine(schema, *bundle.backend, grounder.get(), engine_config(opts));
        CorpusRunResult run = run_corpus_extraction(load_corpus_file(corpus_path), engine,
                                                    opts.entry_class, chunk_params(opts), opts.workers);
        for (const auto& w : run.warnings) std::cerr << "warning: " << w << "\n";
        predicted = std::move(run.triples);
    } else {
        throw ConfigError("eval triples needs --pred or --corpus");
    }

    if (!emit_pred_path.empty()) write_output(render_triples_tsv(predicted), emit_pred_path);

    ScoreReport report = score_triples(gold, predicted, norm);
    std::cout << render_report_text(report, "triples");
    if (!opts.out_path.empty()) write_output(render_report_json(report, "triples"), opts.out_path);
    return kExitOk;
}

int cmd_eval_ner(const CommonOptions& opts, const std::string& gold_path, const std::string& pred_path,
                 const std::vector<std::string>& types) {
    require_file(gold_path, "gold ner");
    require_file(pred_path, "predicted ner");
    std::vector<NerRecord> gold = load_ner_file(gold_path);
    std::vector<NerRecord> predicted = load_ner_file(pred_path);
    std::vector<std::string> allowed = types.empty() ? std::vector<std::string>{"chemical", "disease"} : types;

    auto reports = score_ner(gold, predicted, allowed);
    for (const auto& [type, report] : reports) std::cout << render_report_text(report, "ner/" + type);
    if (!opts.out_path.empty()) {
        std::string combined = "[\n";
        bool first = true;
        for (const auto& [type, report] : reports) {
            if (!first) combined += ",\n";
            combined += render_report_json(report, "ner/" + type);
            first = false;
        }
        combined += "]\n";
        write_output(combined, opts.out_path);
    }
    return kExitOk;
}

int cmd_eval_grounding(const CommonOptions& opts, const std::string& pairs_path) {
    require_file(pairs_path, "grounding pairs");
    auto pairs = load_grounding_pairs_file(pairs_path);

    Grounder grounder;
    for (const auto& path : opts.lexicon_paths) {
        require_file(path, "lexicon");
        grounder.add_lexicon(std::make_shared<Lexicon>(load_lexicon_file(path)));
    }
    if (!opts.normmap_path.empty()) {
        require_file(opts.normmap_path, "normalization map");
        grounder.set_normalization_map(NormalizationMap::load_file(opts.normmap_path));
    }

    GroundingReport report = score_grounding(pairs, grounder);
    for (const auto& row : report.per_vocabulary)
        std::cout << row.prefix << ": " << row.matched << "/" << row.total << "\n";
    std::cout << "overall: " << report.matched << "/" << report.total << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"spires: schema-driven recursive extraction of structured instances from text"};
    app.footer(kExitCodeHelp);
    app.require_subcommand(1);

    CommonOptions opts;
    auto add_common = [&opts](CLI::App* cmd, bool with_engine = true) {
        cmd->add_option("--schema", opts.schema_path, "schema file");
        cmd->add_option("--class", opts.entry_class, "entry point class");
        cmd->add_option("--backend", opts.backend, "completion backend: replay or http");
        cmd->add_option("--cassette", opts.cassette_path, "cassette file for replay/record");
        cmd->add_option("--lexicon", opts.lexicon_paths, "lexicon TSV (repeatable)");
        cmd->add_option("--hierarchy", opts.hierarchy_specs, "hierarchy TSV as PREFIX=path (repeatable)");
        cmd->add_option("--normmap", opts.normmap_path, "normalization map TSV");
        cmd->add_option("--format", opts.format, "output format: yaml, json, or ofn");
        cmd->add_option("--out", opts.out_path, "write output/report to this file");
        cmd->add_flag("--deterministic", opts.deterministic, "zero timestamps for golden-file runs");
        cmd->add_flag("--chunking,!--no-chunking", opts.chunking,
                      "sliding-window preprocessing (default: off)");
        cmd->add_option("--window", opts.window_chars, "chunk window size in chars");
        cmd->add_option("--overlap", opts.overlap_chars, "chunk overlap in chars");
        cmd->add_option("--workers", opts.workers, "worker pool width for batch runs");
        if (with_engine) {
            cmd->add_option("--recursion-limit", opts.recursion_limit, "max nesting depth");
            cmd->add_option("--delimiter", opts.delimiter, "multivalued split delimiter");
            cmd->add_option("--null-marker", opts.null_markers, "extra null marker (repeatable)");
            cmd->add_flag("--warnings-as-errors", opts.warnings_as_errors, "fail on any warning");
            cmd->add_option("--model", opts.model_id, "model id sent to the backend");
            cmd->add_option("--temperature", opts.temperature, "sampling temperature");
            cmd->add_option("--max-output-chars", opts.max_output_chars, "completion truncation limit");
            cmd->add_option("--endpoint", opts.endpoint, "http backend URL (or SPIRES_LLM_ENDPOINT)");
            cmd->add_option("--key", opts.api_key, "http backend API key (or SPIRES_LLM_KEY)");
        }
    };

    // validate
    std::string validate_schema_path;
    CLI::App* validate = app.add_subcommand("validate", "check a schema file against all invariants");
    validate->add_option("schema", validate_schema_path, "schema file")->required();

    // extract
    std::string extract_input;
    std::string extract_doc_id;
    CLI::App* extract = app.add_subcommand("extract", "extract one document to a structured instance");
    add_common(extract);
    extract->add_option("input", extract_input, "input text file ('-' or omit for stdin)");
    extract->add_option("--doc-id", extract_doc_id, "document id recorded as provenance");

    // record
    std::string record_corpus;
    CLI::App* record_cmd = app.add_subcommand("record", "run the http backend over a corpus, recording a cassette");
    add_common(record_cmd);
    record_cmd->add_option("corpus", record_corpus, "corpus TSV: doc_id<TAB>title[<TAB>abstract]")->required();

    // eval
    CLI::App* eval_cmd = app.add_subcommand("eval", "scoring protocols");
    eval_cmd->require_subcommand(1);

    std::string gold_path, pred_path, eval_corpus, emit_pred_path;
    CLI::App* eval_triples = eval_cmd->add_subcommand("triples", "score (source, subject, object) triples");
    add_common(eval_triples);
    eval_triples->add_option("--gold", gold_path, "gold triples TSV")->required();
    eval_triples->add_option("--pred", pred_path, "predicted triples TSV");
    eval_triples->add_option("--corpus", eval_corpus, "extract predictions from this corpus instead");
    eval_triples->add_option("--emit-pred", emit_pred_path, "also write predicted triples TSV here");

    std::string ner_gold, ner_pred;
    std::vector<std::string> ner_types;
    CLI::App* eval_ner = eval_cmd->add_subcommand("ner", "score per-type (source, curie) entity sets");
    add_common(eval_ner, false);
    eval_ner->add_option("--gold", ner_gold, "gold NER TSV")->required();
    eval_ner->add_option("--pred", ner_pred, "predicted NER TSV")->required();
    eval_ner->add_option("--type", ner_types, "allowed entity type (repeatable)");

    std::string pairs_path;
    CLI::App* eval_grounding = eval_cmd->add_subcommand("grounding", "score label->CURIE grounding accuracy");
    add_common(eval_grounding, false);
    eval_grounding->add_option("--pairs", pairs_path, "label<TAB>expected_curie TSV")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate->parsed()) return cmd_validate(validate_schema_path);
        if (extract->parsed()) return cmd_extract(opts, extract_input, extract_doc_id);
        if (record_cmd->parsed()) return cmd_record(opts, record_corpus);
        if (eval_triples->parsed())
            return cmd_eval_triples(opts, gold_path, pred_path, eval_corpus, emit_pred_path);
        if (eval_ner->parsed()) return cmd_eval_ner(opts, ner_gold, ner_pred, ner_types);
        if (eval_grounding->parsed()) return cmd_eval_grounding(opts, pairs_path);
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const ReplayMissError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitReplayMiss;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const TransportError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitTransport;
    } catch (const RateLimitError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitTransport;
    } catch (const SyntaxError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const SchemaError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitViolations;
    } catch (const ExtractionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitExtraction;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitExtraction;
    }
    return kExitOk;
}
