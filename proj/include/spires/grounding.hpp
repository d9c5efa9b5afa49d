#pragma once

#include "spires/schema.hpp"

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace spires {

// Lowercase, internal whitespace collapsed, leading/trailing punctuation
// stripped. Applied to lexicon labels and to surfaces before lookup.
std::string normalize_label(const std::string& label);

// One vocabulary's label -> CURIE index, optionally with its hierarchy.
struct Lexicon {
    std::string vocabulary_prefix;
    std::map<std::string, std::vector<std::string>> entries; // normalized label -> CURIEs
    std::map<std::string, std::string> labels;               // CURIE -> preferred label
    Hierarchy hierarchy;

    std::optional<std::string> preferred_label(const std::string& curie) const;
};

// TSV rows: curie<TAB>preferred_label[<TAB>synonym1|synonym2|...]
// All rows must share one prefix. Throws DataError with a line number on
// malformed rows.
Lexicon load_lexicon(const std::string& source);
Lexicon load_lexicon_file(const std::string& path);

// Builds an in-memory lexicon from extensional value-set members, so
// enumeration values can be grounded like any vocabulary.
Lexicon lexicon_from_members(const std::string& prefix,
                             const std::vector<std::pair<std::string, std::string>>& members);

// Cross-vocabulary CURIE canonicalization (e.g. CHEBI -> MESH).
class NormalizationMap {
public:
    NormalizationMap() = default;

    // TSV rows: source_curie<TAB>canonical_curie. Rejects chains that would
    // break idempotence.
    static NormalizationMap parse(const std::string& source);
    static NormalizationMap load_file(const std::string& path);

    void add(const std::string& source, const std::string& canonical);
    // Mapped canonical CURIE when a pair exists, the input otherwise.
    std::string normalize(const std::string& curie) const;
    size_t size() const { return pairs_.size(); }

private:
    std::map<std::string, std::string> pairs_;
};

enum class MatchKind { Exact, Partial };

struct AnnotationCandidate {
    std::string curie;
    std::string label;    // the vocabulary label that matched
    MatchKind match = MatchKind::Exact;
};

// A span mapped to an identifier, with the candidates that were weighed.
struct GroundedEntity {
    std::string surface;           // verbatim extracted span
    std::string curie;             // canonical (post-normalization) CURIE
    std::string label;             // preferred label of the chosen identifier
    std::string source_vocabulary; // prefix of the annotator that produced it
    std::vector<std::pair<std::string, MatchKind>> candidates;

    bool operator==(const GroundedEntity&) const = default;
};

struct ConstraintCheck {
    bool pass = true;
    std::string reason; // "prefix" or "value-set" when failing
};

// Produces identifier candidates for a surface string. Implementations must
// be deterministic for a fixed input.
class Annotator {
public:
    virtual ~Annotator() = default;
    virtual std::string name() const = 0;
    // Prefix of the single vocabulary served, when there is one.
    virtual std::optional<std::string> vocabulary() const { return std::nullopt; }
    // May throw TransportError; the grounder skips the annotator then.
    virtual std::vector<AnnotationCandidate> annotate(const std::string& surface) const = 0;
};

// Exact lookup on normalized labels, falling back to the longest label that
// appears as a whole-word substring of the surface.
class LexiconAnnotator : public Annotator {
public:
    explicit LexiconAnnotator(std::shared_ptr<const Lexicon> lexicon);

    std::string name() const override;
    std::optional<std::string> vocabulary() const override { return lexicon_->vocabulary_prefix; }
    std::vector<AnnotationCandidate> annotate(const std::string& surface) const override;

    const Lexicon& lexicon() const { return *lexicon_; }

private:
    std::shared_ptr<const Lexicon> lexicon_;
};

// Client for the generic annotator contract:
//   POST {"text": surface, "vocabularies": [prefix...]}
//   ->   {"candidates": [{"curie": ..., "label": ..., "match": "exact"|"partial"}]}
class HttpAnnotator : public Annotator {
public:
    HttpAnnotator(std::string endpoint, std::vector<std::string> vocabularies = {});

    std::string name() const override;
    std::vector<AnnotationCandidate> annotate(const std::string& surface) const override;

private:
    std::string endpoint_;
    std::vector<std::string> vocabularies_;
};

// Orders annotators per class (id-space order first, then registration
// order), normalizes candidates, and enforces IDSpaces and value-set
// constraints. Immutable once prepared; safe for concurrent ground() calls.
class Grounder {
public:
    Grounder() = default;

    void add_lexicon(std::shared_ptr<const Lexicon> lexicon);
    void add_annotator(std::shared_ptr<const Annotator> annotator);
    void set_normalization_map(NormalizationMap map);

    // Resolves and caches value sets for every class in `schema` that has
    // one. Must be called before grounding against such classes.
    void prepare(const Schema& schema);

    // Not-found is a normal outcome (the caller may assign a blank node).
    // Throws Error when `surface` is empty after trimming or `cls` is not
    // an entity class.
    std::optional<GroundedEntity> ground(const std::string& surface, const ClassDef& cls,
                                         std::vector<std::string>* warnings = nullptr) const;

    ConstraintCheck check_id_constraints(const GroundedEntity& e, const ClassDef& cls) const;

    const NormalizationMap& normalization_map() const { return normmap_; }
    std::optional<std::string> preferred_label(const std::string& curie) const;
    const std::set<std::string>* resolved_value_set(const std::string& class_name) const;

private:
    std::vector<std::shared_ptr<const Annotator>> stack_for(const ClassDef& cls) const;

    std::vector<std::shared_ptr<const Annotator>> annotators_;
    std::map<std::string, std::shared_ptr<const Lexicon>> lexicons_; // by prefix
    NormalizationMap normmap_;
    std::map<std::string, std::set<std::string>> value_sets_;            // class name -> resolved CURIEs
    std::map<std::string, std::shared_ptr<const Annotator>> member_annotators_; // class name -> extensional members
};

} // namespace spires
