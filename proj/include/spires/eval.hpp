#pragma once

#include "spires/engine.hpp"
#include "spires/grounding.hpp"

#include <map>
#include <string>
#include <vector>

namespace spires {

// A chemical-induces-disease style statement. The predicate is the fixed
// token INDUCES; scoring identity is (source_id, subject, object).
struct TripleRecord {
    std::string source_id;
    std::string subject; // CURIE
    std::string predicate = "INDUCES";
    std::string object; // CURIE
    std::string subject_qualifier;
    std::string object_qualifier;
    std::string predicate_qualifier;

    bool operator==(const TripleRecord&) const = default;
};

struct ScoreReport {
    long true_positives = 0;
    long false_positives = 0;
    long false_negatives = 0;
    double precision = 0; // 0-1
    double recall = 0;    // 0-1
    double f_score = 0;   // 0-100

    struct DocumentRow {
        std::string source_id;
        long tp = 0, fp = 0, fn = 0;
    };
    std::vector<DocumentRow> per_document;
};

// Fills precision/recall/f from the counts (0 when a denominator is 0).
void finalize_scores(ScoreReport& report);

// Predicted records with a predicate qualifier of NOT are dropped before
// comparison; other qualifiers are ignored; both sides are normalized and
// deduplicated on (source_id, subject, object).
ScoreReport score_triples(const std::vector<TripleRecord>& gold,
                          const std::vector<TripleRecord>& predicted,
                          const NormalizationMap& norm = {});

struct NerRecord {
    std::string source_id;
    std::string curie;
    std::string entity_type;

    bool operator==(const NerRecord&) const = default;
};

// Per-entity-type set comparison on (source_id, curie). Rows with a type
// outside `allowed_types` raise DataError.
std::map<std::string, ScoreReport> score_ner(const std::vector<NerRecord>& gold,
                                             const std::vector<NerRecord>& predicted,
                                             const std::vector<std::string>& allowed_types = {"chemical",
                                                                                              "disease"});

struct GroundingReport {
    struct VocabularyRow {
        std::string prefix;
        long matched = 0;
        long total = 0;
    };
    std::vector<VocabularyRow> per_vocabulary;
    long matched = 0;
    long total = 0;
};

// A pair counts as matched when grounding returns exactly the expected
// CURIE and the surface comes back unchanged.
GroundingReport score_grounding(const std::vector<std::pair<std::string, std::string>>& pairs,
                                const Grounder& grounder);

struct ChunkParams {
    bool chunking = false;
    int window_chars = 1500;
    int overlap_chars = 200;
};

struct ChunkPlan {
    struct Chunk {
        std::string text;
        size_t offset = 0;
    };
    std::vector<Chunk> chunks;
    int window_chars = 0;
    int overlap_chars = 0;
};

// "title. abstract" concatenation. No-chunking mode emits it as a single
// chunk; chunking mode slides a window over it, snapping to the nearest
// sentence boundary (". " followed by an uppercase letter) when possible.
std::string concat_title_abstract(const std::string& title, const std::string& abstract);
ChunkPlan chunk_document(const std::string& title, const std::string& abstract, const ChunkParams& params);

// Union with first-occurrence-wins qualifiers, deduplicated on
// (source_id, subject, object).
std::vector<TripleRecord> merge_chunk_results(const std::vector<std::vector<TripleRecord>>& per_chunk);

// ---------------------------------------------------------------------------
// Corpus I/O and instance projection
// ---------------------------------------------------------------------------

struct CorpusDocument {
    std::string id;
    std::string title;
    std::string abstract_text;
};

std::vector<TripleRecord> parse_triples_tsv(const std::string& source);
std::vector<TripleRecord> load_triples_file(const std::string& path);
std::string render_triples_tsv(const std::vector<TripleRecord>& triples);

std::vector<NerRecord> parse_ner_tsv(const std::string& source);
std::vector<NerRecord> load_ner_file(const std::string& path);

std::vector<std::pair<std::string, std::string>> parse_grounding_pairs_tsv(const std::string& source);
std::vector<std::pair<std::string, std::string>> load_grounding_pairs_file(const std::string& path);

std::vector<CorpusDocument> parse_corpus_tsv(const std::string& source);
std::vector<CorpusDocument> load_corpus_file(const std::string& path);

// Nested instances carrying grounded `subject` and `object` entity leaves
// become triples; qualifiers come from same-named scalar attributes.
// Ungrounded subjects or objects yield no triple.
std::vector<TripleRecord> collect_triples(const Instance& root);

// Grounded entity leaves as (curie, entity class name) pairs, document order.
std::vector<std::pair<std::string, std::string>> collect_entities(const Instance& root);

struct CorpusRunResult {
    std::vector<TripleRecord> triples; // merged, sorted by document id
    std::vector<std::string> warnings;
};

// Extracts every corpus document on a pool of `workers` threads, chunking
// per `params`, and merges the per-chunk triples deterministically.
CorpusRunResult run_corpus_extraction(const std::vector<CorpusDocument>& corpus, const Engine& engine,
                                      const std::string& class_name, const ChunkParams& params,
                                      int workers = 1);

std::string render_report_json(const ScoreReport& report, const std::string& task);
std::string render_report_text(const ScoreReport& report, const std::string& task);

} // namespace spires
