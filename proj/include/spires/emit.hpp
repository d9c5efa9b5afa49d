#pragma once

#include "spires/engine.hpp"
#include "spires/schema.hpp"

#include <string>
#include <vector>

namespace spires {

struct EngineMetadata {
    std::string model_id;
    std::string cassette_digest; // SHA-256 of the cassette file, when replaying
    std::string extracted_at;    // ISO-8601 UTC; zeroed in deterministic runs
    std::vector<std::string> warnings;
};

struct InstanceDocument {
    Instance root;
    std::string schema_name;
    EngineMetadata metadata;
};

struct AxiomListing {
    std::vector<std::string> lines;

    std::string to_string() const;
};

// Attribute order follows the schema; multivalued values render as hyphen
// list items; grounded leaves as "CURIE  ## label"; blank nodes verbatim.
// Engine metadata lives under the reserved top-level key "_meta".
std::string emit_yaml(const InstanceDocument& doc, const Schema& s);

// Structurally equivalent to the YAML rendering; grounded leaves become
// {"id": ..., "label": ...} objects and blank nodes {"id": "_:Name"}.
std::string emit_json(const InstanceDocument& doc, const Schema& s);

// Flat OWL-functional-style assertion listing: one class assertion per
// instance and blank node, one property assertion per attribute-value, and
// label annotations for entity leaves. No reasoning.
AxiomListing emit_axioms(const InstanceDocument& doc, const Schema& s);

} // namespace spires
