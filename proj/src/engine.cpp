#include "spires/engine.hpp"

#include "spires/errors.hpp"
#include "spires/prompt.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <map>
#include <sstream>

namespace spires {

Scalar Scalar::string_value(std::string text) {
    Scalar s;
    s.kind = Kind::String;
    s.text = std::move(text);
    return s;
}

AttributeValue AttributeValue::from_scalar(Scalar s) {
    AttributeValue v;
    v.kind = Kind::Scalar;
    v.scalar = std::move(s);
    return v;
}

AttributeValue AttributeValue::from_entity(EntityLeaf e) {
    AttributeValue v;
    v.kind = Kind::Entity;
    v.entity = std::move(e);
    return v;
}

AttributeValue AttributeValue::from_nested(Instance i) {
    AttributeValue v;
    v.kind = Kind::Nested;
    v.nested.push_back(std::move(i));
    return v;
}

AttributeValue AttributeValue::from_list(std::vector<AttributeValue> items) {
    AttributeValue v;
    v.kind = Kind::List;
    v.items = std::move(items);
    return v;
}

bool operator==(const AttributeValue& a, const AttributeValue& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
    case AttributeValue::Kind::Scalar: return a.scalar == b.scalar;
    case AttributeValue::Kind::Entity: return a.entity == b.entity;
    case AttributeValue::Kind::Nested: return a.nested == b.nested;
    case AttributeValue::Kind::List: return a.items == b.items;
    }
    return false;
}

bool operator!=(const AttributeValue& a, const AttributeValue& b) { return !(a == b); }

const AttributeValue* Instance::find(const std::string& normalized_name) const {
    for (const auto& [k, v] : values)
        if (k == normalized_name) return &v;
    return nullptr;
}

void Instance::set(const std::string& normalized_name, AttributeValue value) {
    for (auto& [k, v] : values) {
        if (k == normalized_name) {
            v = std::move(value);
            return;
        }
    }
    values.emplace_back(normalized_name, std::move(value));
}

void Instance::erase(const std::string& normalized_name) {
    values.erase(std::remove_if(values.begin(), values.end(),
                                [&](const auto& kv) { return kv.first == normalized_name; }),
                 values.end());
}

bool operator==(const Instance& a, const Instance& b) {
    return a.class_name == b.class_name && a.values == b.values && a.provenance == b.provenance;
}

bool operator!=(const Instance& a, const Instance& b) { return !(a == b); }

// ---------------------------------------------------------------------------
// Text utilities
// ---------------------------------------------------------------------------

namespace {

// Byte length of the whitespace code point starting at `i`, or 0.
size_t whitespace_run(const std::string& s, size_t i) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    if (std::isspace(c)) return 1;
    // U+00A0 no-break space
    if (c == 0xC2 && i + 1 < s.size() && static_cast<unsigned char>(s[i + 1]) == 0xA0) return 2;
    if (c == 0xE2 && i + 2 < s.size()) {
        unsigned char c1 = static_cast<unsigned char>(s[i + 1]);
        unsigned char c2 = static_cast<unsigned char>(s[i + 2]);
        // U+2000..U+200A spaces, U+2028/29 separators
        if (c1 == 0x80 && ((c2 >= 0x80 && c2 <= 0x8A) || c2 == 0xA8 || c2 == 0xA9)) return 3;
    }
    // U+3000 ideographic space
    if (c == 0xE3 && i + 2 < s.size() && static_cast<unsigned char>(s[i + 1]) == 0x80 &&
        static_cast<unsigned char>(s[i + 2]) == 0x80)
        return 3;
    return 0;
}

std::string lowercase(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

bool parse_number(const std::string& text, double& out) {
    if (text.empty()) return false;
    const char* begin = text.c_str();
    char* end = nullptr;
    out = std::strtod(begin, &end);
    return end == begin + text.size();
}

std::string camel_case(const std::string& surface) {
    std::string out;
    bool word_start = true;
    for (char c : surface) {
        if (!std::isalnum(static_cast<unsigned char>(c))) {
            word_start = true;
            continue;
        }
        if (word_start) {
            out.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
            word_start = false;
        } else {
            out.push_back(c);
        }
    }
    return out.empty() ? "Node" : out;
}

} // namespace

std::string trim_whitespace(const std::string& s) {
    size_t begin = 0;
    while (begin < s.size()) {
        size_t run = whitespace_run(s, begin);
        if (run == 0) break;
        begin += run;
    }
    size_t end = s.size();
    while (end > begin) {
        // Scan backwards for a whitespace code point ending at `end`.
        size_t step = 0;
        for (size_t width = 1; width <= 3 && width <= end - begin; ++width) {
            size_t start = end - width;
            if (whitespace_run(s, start) == width) {
                step = width;
                break;
            }
        }
        if (step == 0) break;
        end -= step;
    }
    return s.substr(begin, end - begin);
}

// ---------------------------------------------------------------------------
// Completion parsing
// ---------------------------------------------------------------------------

ParsedCompletion parse_completion(const std::string& completion, const Schema& s,
                                  const std::string& class_name) {
    ParsedCompletion out;
    const ClassDef* cls = s.find_class(class_name);

    std::istringstream in(completion);
    std::string raw;
    while (std::getline(in, raw)) {
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        if (trim_whitespace(raw).empty()) {
            out.unmatched_lines.push_back(raw);
            continue;
        }
        size_t colon = raw.find(':');
        if (colon == std::string::npos) {
            out.unmatched_lines.push_back(raw);
            continue;
        }
        std::string name = raw.substr(0, colon);
        std::string value = raw.substr(colon + 1);
        if (cls && cls->find_attribute(normalize_attribute_name(name)))
            out.pairs.emplace_back(trim_whitespace(name), value);
        else
            out.unmatched_lines.push_back(raw);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Blank nodes
// ---------------------------------------------------------------------------

namespace {

void collect_ungrounded(AttributeValue& value, std::vector<EntityLeaf*>& out) {
    switch (value.kind) {
    case AttributeValue::Kind::Entity:
        if (!value.entity.is_grounded()) out.push_back(&value.entity);
        break;
    case AttributeValue::Kind::List:
        for (auto& item : value.items) collect_ungrounded(item, out);
        break;
    case AttributeValue::Kind::Nested:
        for (auto& [k, v] : value.nested_instance().values) collect_ungrounded(v, out);
        break;
    case AttributeValue::Kind::Scalar:
        break;
    }
}

} // namespace

void assign_blank_nodes(Instance& instance) {
    std::vector<EntityLeaf*> leaves;
    for (auto& [k, v] : instance.values) collect_ungrounded(v, leaves);

    std::map<std::string, int> used;
    for (EntityLeaf* leaf : leaves) {
        std::string base = "_:" + camel_case(leaf->surface);
        int& count = used[base];
        ++count;
        leaf->blank_label = count == 1 ? base : base + std::to_string(count);
    }
}

// ---------------------------------------------------------------------------
// Engine
// ---------------------------------------------------------------------------

Engine::Engine(const Schema& schema, CompletionBackend& backend, const Grounder* grounder,
               EngineConfig config)
    : schema_(schema), backend_(backend), grounder_(grounder), config_(std::move(config)) {}

bool Engine::is_null_marker(const std::string& value) const {
    std::string lowered = lowercase(trim_whitespace(value));
    for (const auto& marker : config_.null_markers)
        if (lowered == lowercase(marker)) return true;
    return false;
}

std::optional<AttributeValue> Engine::parse_token(const std::string& token, const AttributeDef& attr,
                                                  std::vector<std::string>& warnings, int depth,
                                                  const std::string& document_id) const {
    std::string value = trim_whitespace(token);
    if (is_null_marker(value)) {
        warnings.push_back("attribute '" + attr.name + "': null marker '" + value + "' treated as absent");
        return std::nullopt;
    }

    switch (attr.range.kind) {
    case RangeSpec::Kind::Primitive: {
        Scalar s;
        s.text = value;
        switch (attr.range.primitive) {
        case RangeSpec::Primitive::String:
            s.kind = Scalar::Kind::String;
            break;
        case RangeSpec::Primitive::Number:
            if (parse_number(value, s.number)) {
                s.kind = Scalar::Kind::Number;
            } else {
                s.kind = Scalar::Kind::String;
                warnings.push_back("attribute '" + attr.name + "': '" + value +
                                   "' is not a number; kept as string");
            }
            break;
        case RangeSpec::Primitive::Boolean: {
            std::string lowered = lowercase(value);
            if (lowered == "true" || lowered == "false") {
                s.kind = Scalar::Kind::Boolean;
                s.boolean = lowered == "true";
            } else {
                s.kind = Scalar::Kind::String;
                warnings.push_back("attribute '" + attr.name + "': '" + value +
                                   "' is not a boolean; kept as string");
            }
            break;
        }
        }
        return AttributeValue::from_scalar(std::move(s));
    }
    case RangeSpec::Kind::ValueSetRef:
    case RangeSpec::Kind::ClassRef: {
        if (attr.inlined && attr.range.kind == RangeSpec::Kind::ClassRef) {
            Instance child = extract_impl(attr.range.class_name, value, warnings, depth + 1, document_id);
            return AttributeValue::from_nested(std::move(child));
        }
        // Non-inlined class or enumeration reference: a leaf to be grounded.
        EntityLeaf leaf;
        leaf.surface = value;
        leaf.target_class = attr.range.class_name;
        return AttributeValue::from_entity(std::move(leaf));
    }
    }
    return std::nullopt;
}

std::optional<AttributeValue> Engine::parse_value(const std::string& raw, const AttributeDef& attr,
                                                  std::vector<std::string>& warnings, int depth,
                                                  const std::string& document_id) const {
    if (!attr.multivalued) return parse_token(raw, attr, warnings, depth, document_id);

    std::vector<AttributeValue> items;
    std::string remaining = raw;
    size_t start = 0;
    while (start <= remaining.size()) {
        size_t sep = remaining.find(config_.delimiter, start);
        std::string token = sep == std::string::npos ? remaining.substr(start)
                                                     : remaining.substr(start, sep - start);
        std::string trimmed = trim_whitespace(token);
        if (trimmed.empty()) {
            warnings.push_back("attribute '" + attr.name + "': empty list token dropped");
        } else if (auto value = parse_token(trimmed, attr, warnings, depth, document_id)) {
            items.push_back(std::move(*value));
        }
        if (sep == std::string::npos) break;
        start = sep + config_.delimiter.size();
    }
    if (items.empty()) return std::nullopt;
    return AttributeValue::from_list(std::move(items));
}

Instance Engine::extract_impl(const std::string& class_name, const std::string& text,
                              std::vector<std::string>& warnings, int depth,
                              const std::string& document_id) const {
    if (depth >= config_.recursion_limit)
        throw ExtractionError("recursion limit (" + std::to_string(config_.recursion_limit) +
                              ") exceeded while extracting class '" + class_name + "'");
    const ClassDef* cls = schema_.find_class(class_name);
    if (!cls) throw SchemaError("unknown class '" + class_name + "'");

    Prompt prompt = generate_prompt(schema_, class_name, text);
    CompletionRequest request;
    request.prompt = std::move(prompt);
    request.model_id = config_.model_id;
    request.temperature = config_.temperature;
    request.max_output_chars = config_.max_output_chars;
    Completion completion = backend_.complete(request, &warnings);

    Instance instance;
    instance.class_name = class_name;
    instance.provenance = document_id;

    if (trim_whitespace(completion.text).empty()) {
        warnings.push_back("class '" + class_name + "': empty completion");
        return instance;
    }

    ParsedCompletion parsed = parse_completion(completion.text, schema_, class_name);
    for (const auto& [raw_name, raw_value] : parsed.pairs) {
        std::string key = normalize_attribute_name(raw_name);
        const AttributeDef* attr = cls->find_attribute(key);
        if (!attr) continue; // parse_completion only matches known names
        if (instance.find(key))
            warnings.push_back("class '" + class_name + "': duplicate line for attribute '" + key +
                               "'; last occurrence wins");
        if (auto value = parse_value(raw_value, *attr, warnings, depth, document_id))
            instance.set(key, std::move(*value));
        else
            instance.erase(key);
    }
    return instance;
}

void Engine::ground_tree(Instance& instance, std::vector<std::string>& warnings) const {
    for (auto& [key, value] : instance.values) {
        std::vector<AttributeValue*> leaves{&value};
        while (!leaves.empty()) {
            AttributeValue* v = leaves.back();
            leaves.pop_back();
            switch (v->kind) {
            case AttributeValue::Kind::Entity: {
                if (v->entity.is_grounded() || !grounder_) break;
                const ClassDef* target = schema_.find_class(v->entity.target_class);
                if (!target || !target->is_entity) break;
                if (auto grounded = grounder_->ground(v->entity.surface, *target, &warnings))
                    v->entity.grounded = std::move(grounded);
                break;
            }
            case AttributeValue::Kind::List:
                for (auto& item : v->items) leaves.push_back(&item);
                break;
            case AttributeValue::Kind::Nested:
                ground_tree(v->nested_instance(), warnings);
                break;
            case AttributeValue::Kind::Scalar:
                break;
            }
        }
    }
}

ExtractionResult Engine::extract(const std::string& class_name, const std::string& text,
                                 const std::string& document_id) const {
    ExtractionResult result;
    result.instance = extract_impl(class_name, text, result.warnings, 0, document_id);
    ground_tree(result.instance, result.warnings);
    assign_blank_nodes(result.instance);
    if (config_.warnings_as_errors && !result.warnings.empty())
        throw ExtractionError("warnings promoted to errors: " + result.warnings.front() +
                              (result.warnings.size() > 1
                                   ? " (+" + std::to_string(result.warnings.size() - 1) + " more)"
                                   : ""));
    return result;
}

} // namespace spires
