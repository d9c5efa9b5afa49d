#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace spires {

// Allowable values of an attribute: a primitive type, a class defined in
// the same schema, or the value set attached to a class.
struct RangeSpec {
    enum class Kind { Primitive, ClassRef, ValueSetRef };
    enum class Primitive { String, Number, Boolean };

    Kind kind = Kind::Primitive;
    Primitive primitive = Primitive::String;
    std::string class_name; // ClassRef / ValueSetRef target

    static RangeSpec string_type();
    static RangeSpec number_type();
    static RangeSpec boolean_type();
    static RangeSpec class_ref(const std::string& name);
    static RangeSpec value_set_ref(const std::string& name);

    bool operator==(const RangeSpec&) const = default;
};

struct AttributeDef {
    std::string name;
    bool multivalued = false;
    bool identifier = false;
    bool inlined = false;
    std::optional<std::string> prompt;
    RangeSpec range;

    bool operator==(const AttributeDef&) const = default;
};

// Permissible identifiers for a class: a fixed member list or an ontology
// query (descendant closures of include roots minus exclude roots).
struct ValueSetSpec {
    enum class Kind { Extensional, Intensional };

    Kind kind = Kind::Extensional;
    // Extensional: fixed (CURIE, label) members.
    std::vector<std::pair<std::string, std::string>> members;
    // Intensional: vocabulary prefix plus root CURIEs.
    std::string source;
    std::vector<std::string> include_roots;
    std::vector<std::string> exclude_roots;

    bool operator==(const ValueSetSpec&) const = default;
};

struct ClassDef {
    std::string name;
    std::vector<AttributeDef> attributes;
    std::vector<std::string> id_spaces;
    std::optional<ValueSetSpec> value_set;
    // True when instances are named entities to be grounded rather than
    // nested records.
    bool is_entity = false;

    const AttributeDef* find_attribute(const std::string& normalized_name) const;

    bool operator==(const ClassDef&) const = default;
};

struct Schema {
    std::string name;
    std::vector<ClassDef> classes;                            // declaration order
    std::vector<std::pair<std::string, std::string>> prefixes; // prefix -> IRI expansion

    const ClassDef* find_class(const std::string& name) const;
    std::optional<std::string> prefix_expansion(const std::string& prefix) const;

    bool operator==(const Schema&) const = default;
};

struct Violation {
    std::string class_name;
    std::string attribute; // empty when the rule applies to the class/schema
    std::string rule;      // short rule id, e.g. "lowercase-prefix"
    std::string message;

    std::string to_string() const;
};

// Parent-child table of an ontology, loaded from a child<TAB>parent TSV.
struct Hierarchy {
    std::map<std::string, std::vector<std::string>> parents_of;
    std::map<std::string, std::vector<std::string>> children_of;

    bool empty() const { return parents_of.empty() && children_of.empty(); }
    bool contains(const std::string& curie) const;

    // The CURIE itself plus all transitive descendants.
    std::set<std::string> descendant_closure(const std::string& root) const;
};

// Lowercase, runs of whitespace collapsed to single underscores, ends
// trimmed. Used for attribute-name matching throughout.
std::string normalize_attribute_name(const std::string& name);

// PREFIX:LocalId with an upper-case prefix and a non-empty local id.
bool is_valid_curie(const std::string& curie);
std::string curie_prefix(const std::string& curie);

// Parses the schema file format and throws SyntaxError (with line number)
// on malformed input or SchemaError when the result violates invariants.
Schema load_schema(const std::string& source);
Schema load_schema_file(const std::string& path);

// All invariant violations found in `s`; empty iff the schema is valid.
std::vector<Violation> validate_schema(const Schema& s);

// Canonical rendering of `s` in the schema file format.
// load_schema(serialize_schema(s)) == s for any valid schema.
std::string serialize_schema(const Schema& s);

Hierarchy load_hierarchy(const std::string& source);
Hierarchy load_hierarchy_file(const std::string& path);

// Extensional sets pass the member CURIEs through verbatim; intensional
// sets resolve descendant closures of the include roots (roots included)
// minus the closures of the exclude roots. Unknown roots throw DataError.
std::set<std::string> resolve_value_set(const ValueSetSpec& v, const Hierarchy& hierarchy);

} // namespace spires
