#pragma once

#include "spires/schema.hpp"

#include <string>

namespace spires {

// A fully rendered extraction prompt. Rendering is deterministic, so the
// digest doubles as a replay key.
struct Prompt {
    std::string text;         // ends with the break sequence "==="
    std::string class_name;
    std::string input_digest; // 64-char lowercase hex SHA-256 of `text`

    bool operator==(const Prompt&) const = default;
};

// Instruction line for a class: the multi-entity phrasing when any
// attribute is multivalued, the split-into-fields phrasing otherwise.
std::string instruction_text(const ClassDef& c);

// Template line for one attribute: "name: <prompt>", with the
// "A semicolon-separated list" prefix when the attribute is multivalued.
// An unset prompt is generated from the name (underscores to spaces,
// wrapped as "<the ...>").
std::string attribute_template_line(const AttributeDef& a);

// Renders instructions, one template line per attribute in declaration
// order, "Text:", the input verbatim, and the break sequence.
// Throws SchemaError when `class_name` is not in the schema.
Prompt generate_prompt(const Schema& s, const std::string& class_name, const std::string& text);

} // namespace spires
