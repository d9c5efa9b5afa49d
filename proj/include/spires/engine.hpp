#pragma once

#include "spires/grounding.hpp"
#include "spires/llm.hpp"
#include "spires/schema.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace spires {

struct Instance;

struct Scalar {
    enum class Kind { String, Number, Boolean };
    Kind kind = Kind::String;
    std::string text;  // lexical form, as extracted (trimmed)
    double number = 0; // valid when kind == Number
    bool boolean = false;

    static Scalar string_value(std::string text);

    bool operator==(const Scalar&) const = default;
};

// An entity-valued leaf: pending until grounding is attempted, then either
// grounded or assigned a blank-node label.
struct EntityLeaf {
    std::string surface;      // extracted span, trimmed
    std::string target_class; // the entity class this leaf should ground into
    std::optional<GroundedEntity> grounded;
    std::string blank_label; // "_:Name" once assigned; empty beforehand

    bool is_grounded() const { return grounded.has_value(); }

    bool operator==(const EntityLeaf&) const = default;
};

struct AttributeValue {
    enum class Kind { Scalar, Entity, Nested, List };
    Kind kind = Kind::Scalar;
    Scalar scalar;
    EntityLeaf entity;
    std::vector<AttributeValue> items; // List elements
    std::vector<Instance> nested;      // exactly one element when Nested

    static AttributeValue from_scalar(Scalar s);
    static AttributeValue from_entity(EntityLeaf e);
    static AttributeValue from_nested(Instance i);
    static AttributeValue from_list(std::vector<AttributeValue> items);

    const Instance& nested_instance() const { return nested.front(); }
    Instance& nested_instance() { return nested.front(); }
};

bool operator==(const AttributeValue& a, const AttributeValue& b);
bool operator!=(const AttributeValue& a, const AttributeValue& b);

// One extracted record. Keys are normalized attribute names and always
// correspond to attributes of `class_name`.
struct Instance {
    std::string class_name;
    std::vector<std::pair<std::string, AttributeValue>> values;
    std::string provenance; // document id, when known

    const AttributeValue* find(const std::string& normalized_name) const;
    void set(const std::string& normalized_name, AttributeValue value);
    void erase(const std::string& normalized_name);
};

bool operator==(const Instance& a, const Instance& b);
bool operator!=(const Instance& a, const Instance& b);

// Raw name/value pairs recovered from one completion.
struct ParsedCompletion {
    std::vector<std::pair<std::string, std::string>> pairs; // (raw attribute name, raw value)
    std::vector<std::string> unmatched_lines;
};

struct EngineConfig {
    int recursion_limit = 10;
    std::string delimiter = ";";
    // Completions equal to one of these (case-insensitive, after trim) are
    // treated as absent values.
    std::vector<std::string> null_markers = {"", "none", "n/a", "-"};
    bool warnings_as_errors = false;
    std::string model_id = "gpt-3.5-turbo";
    double temperature = 0.0;
    int max_output_chars = 100000;
};

struct ExtractionResult {
    Instance instance;
    std::vector<std::string> warnings;
};

// Trims Unicode whitespace (ASCII plus the common non-break/ideographic
// spaces) from both ends of UTF-8 text.
std::string trim_whitespace(const std::string& s);

// Splits a completion into (attribute, value) pairs on the first ':' of
// each line. Matching against schema attribute names is case-insensitive
// with whitespace normalized to underscores; everything else (including
// blank lines) lands in unmatched_lines.
ParsedCompletion parse_completion(const std::string& completion, const Schema& s,
                                  const std::string& class_name);

// Replaces every ungrounded entity leaf with a deterministic blank-node
// label ("_:" + CamelCase surface, suffixed on collision). Labels are
// unique across the whole instance tree.
void assign_blank_nodes(Instance& instance);

// Orchestrates prompt generation, completion, lenient parsing, per-range
// value rules with recursion into inlined classes, grounding, and blank
// node assignment.
class Engine {
public:
    Engine(const Schema& schema, CompletionBackend& backend, const Grounder* grounder = nullptr,
           EngineConfig config = {});

    ExtractionResult extract(const std::string& class_name, const std::string& text,
                             const std::string& document_id = "") const;

    // One token's worth of Rule 1-3 handling; exposed for tests. Returns
    // nullopt for null-marker values.
    std::optional<AttributeValue> parse_value(const std::string& raw, const AttributeDef& attr,
                                              std::vector<std::string>& warnings, int depth = 0,
                                              const std::string& document_id = "") const;

    const EngineConfig& config() const { return config_; }

private:
    Instance extract_impl(const std::string& class_name, const std::string& text,
                          std::vector<std::string>& warnings, int depth,
                          const std::string& document_id) const;
    std::optional<AttributeValue> parse_token(const std::string& token, const AttributeDef& attr,
                                              std::vector<std::string>& warnings, int depth,
                                              const std::string& document_id) const;
    bool is_null_marker(const std::string& value) const;
    void ground_tree(Instance& instance, std::vector<std::string>& warnings) const;

    const Schema& schema_;
    CompletionBackend& backend_;
    const Grounder* grounder_;
    EngineConfig config_;
};

} // namespace spires
