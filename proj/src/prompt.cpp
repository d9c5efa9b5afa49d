#include "spires/prompt.hpp"

#include "spires/digest.hpp"
#include "spires/errors.hpp"

namespace spires {

namespace {

const char* kMultiEntityInstruction =
    "From the text below, extract the following entities in the following format:";
const char* kSplitFieldsInstruction =
    "Split the following piece of text into fields in the following format:";
const char* kTextIntro = "Text:";
const char* kBreak = "===";
const char* kListPrefix = "A semicolon-separated list ";

std::string auto_prompt(const std::string& name) {
    std::string words;
    for (char c : name) words.push_back(c == '_' ? ' ' : c);
    return "<the " + words + ">";
}

} // namespace

std::string instruction_text(const ClassDef& c) {
    for (const auto& a : c.attributes)
        if (a.multivalued) return kMultiEntityInstruction;
    return kSplitFieldsInstruction;
}

std::string attribute_template_line(const AttributeDef& a) {
    std::string hint = a.prompt ? *a.prompt : auto_prompt(a.name);
    if (a.multivalued) hint = kListPrefix + hint;
    return a.name + ": " + hint;
}

Prompt generate_prompt(const Schema& s, const std::string& class_name, const std::string& text) {
    const ClassDef* cls = s.find_class(class_name);
    if (!cls) throw SchemaError("unknown class '" + class_name + "' in schema '" + s.name + "'");

    std::string out = instruction_text(*cls);
    out += "\n\n";
    for (const auto& a : cls->attributes) {
        out += attribute_template_line(a);
        out += "\n";
    }
    if (!cls->attributes.empty()) out += "\n";
    out += kTextIntro;
    out += "\n";
    out += text;
    out += "\n";
    out += kBreak;

    Prompt p;
    p.text = std::move(out);
    p.class_name = class_name;
    p.input_digest = sha256_hex(p.text);
    return p;
}

} // namespace spires
