#include "spires/emit.hpp"

#include "spires/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <set>
#include <sstream>

namespace spires {

namespace {

// Present attribute keys of `instance`, in schema declaration order.
std::vector<std::pair<std::string, const AttributeValue*>> ordered_values(const Instance& instance,
                                                                          const Schema& s) {
    std::vector<std::pair<std::string, const AttributeValue*>> out;
    const ClassDef* cls = s.find_class(instance.class_name);
    std::set<std::string> emitted;
    if (cls) {
        for (const auto& attr : cls->attributes) {
            std::string key = normalize_attribute_name(attr.name);
            if (const AttributeValue* v = instance.find(key)) {
                out.emplace_back(key, v);
                emitted.insert(key);
            }
        }
    }
    for (const auto& [k, v] : instance.values)
        if (!emitted.count(k)) out.emplace_back(k, &v);
    return out;
}

std::string entity_text(const EntityLeaf& e) {
    if (e.is_grounded()) {
        if (e.grounded->label.empty()) return e.grounded->curie;
        return e.grounded->curie + "  ## " + e.grounded->label;
    }
    if (!e.blank_label.empty()) return e.blank_label;
    return e.surface;
}

std::string scalar_text(const Scalar& s) {
    if (s.kind == Scalar::Kind::Boolean) return s.boolean ? "true" : "false";
    return s.text;
}

// ---------------------------------------------------------------------------
// YAML
// ---------------------------------------------------------------------------

void yaml_instance(std::ostream& out, const Instance& instance, const Schema& s, int indent,
                   bool first_line_inline);

void yaml_value(std::ostream& out, const std::string& key, const AttributeValue& value,
                const Schema& s, int indent) {
    std::string pad(static_cast<size_t>(indent) * 2, ' ');
    switch (value.kind) {
    case AttributeValue::Kind::Scalar:
        out << pad << key << ": " << scalar_text(value.scalar) << "\n";
        break;
    case AttributeValue::Kind::Entity:
        out << pad << key << ": " << entity_text(value.entity) << "\n";
        break;
    case AttributeValue::Kind::Nested:
        if (value.nested_instance().values.empty()) {
            out << pad << key << ": {}\n";
        } else {
            out << pad << key << ":\n";
            yaml_instance(out, value.nested_instance(), s, indent + 1, false);
        }
        break;
    case AttributeValue::Kind::List: {
        out << pad << key << ":\n";
        std::string item_pad(static_cast<size_t>(indent + 1) * 2, ' ');
        for (const auto& item : value.items) {
            switch (item.kind) {
            case AttributeValue::Kind::Scalar:
                out << item_pad << "- " << scalar_text(item.scalar) << "\n";
                break;
            case AttributeValue::Kind::Entity:
                out << item_pad << "- " << entity_text(item.entity) << "\n";
                break;
            case AttributeValue::Kind::Nested:
                if (item.nested_instance().values.empty()) {
                    out << item_pad << "- {}\n";
                } else {
                    out << item_pad << "- ";
                    yaml_instance(out, item.nested_instance(), s, indent + 2, true);
                }
                break;
            case AttributeValue::Kind::List:
                // Nested lists have no schema-level source; flatten defensively.
                out << item_pad << "- \n";
                break;
            }
        }
        break;
    }
    }
}

void yaml_instance(std::ostream& out, const Instance& instance, const Schema& s, int indent,
                   bool first_line_inline) {
    bool first = true;
    for (const auto& [key, value] : ordered_values(instance, s)) {
        if (first && first_line_inline) {
            // Caller already wrote "- "; emit the first pair without padding.
            std::ostringstream one;
            yaml_value(one, key, *value, s, indent);
            std::string text = one.str();
            out << text.substr(static_cast<size_t>(indent) * 2);
        } else {
            yaml_value(out, key, *value, s, indent);
        }
        first = false;
    }
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

nlohmann::ordered_json json_instance(const Instance& instance, const Schema& s);

nlohmann::ordered_json json_value(const AttributeValue& value, const Schema& s) {
    switch (value.kind) {
    case AttributeValue::Kind::Scalar: {
        const Scalar& sc = value.scalar;
        if (sc.kind == Scalar::Kind::Boolean) return sc.boolean;
        if (sc.kind == Scalar::Kind::Number) {
            auto parsed = nlohmann::ordered_json::parse(sc.text, nullptr, false);
            if (!parsed.is_discarded() && parsed.is_number()) return parsed;
            return sc.number;
        }
        return sc.text;
    }
    case AttributeValue::Kind::Entity: {
        const EntityLeaf& e = value.entity;
        if (e.is_grounded()) {
            nlohmann::ordered_json obj{{"id", e.grounded->curie}};
            if (!e.grounded->label.empty()) obj["label"] = e.grounded->label;
            return obj;
        }
        if (!e.blank_label.empty()) return nlohmann::ordered_json{{"id", e.blank_label}};
        return e.surface;
    }
    case AttributeValue::Kind::Nested:
        return json_instance(value.nested_instance(), s);
    case AttributeValue::Kind::List: {
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (const auto& item : value.items) arr.push_back(json_value(item, s));
        return arr;
    }
    }
    return nullptr;
}

nlohmann::ordered_json json_instance(const Instance& instance, const Schema& s) {
    nlohmann::ordered_json obj = nlohmann::ordered_json::object();
    for (const auto& [key, value] : ordered_values(instance, s)) obj[key] = json_value(*value, s);
    return obj;
}

} // namespace

std::string emit_yaml(const InstanceDocument& doc, const Schema& s) {
    std::ostringstream out;
    out << "_meta:\n";
    out << "  schema: " << doc.schema_name << "\n";
    out << "  class: " << doc.root.class_name << "\n";
    out << "  model: " << doc.metadata.model_id << "\n";
    if (!doc.metadata.cassette_digest.empty())
        out << "  cassette_digest: " << doc.metadata.cassette_digest << "\n";
    out << "  extracted_at: " << doc.metadata.extracted_at << "\n";
    if (!doc.metadata.warnings.empty()) {
        out << "  warnings:\n";
        for (const auto& w : doc.metadata.warnings) out << "    - " << w << "\n";
    }
    yaml_instance(out, doc.root, s, 0, false);
    return out.str();
}

std::string emit_json(const InstanceDocument& doc, const Schema& s) {
    nlohmann::ordered_json meta{{"schema", doc.schema_name},
                                {"class", doc.root.class_name},
                                {"model", doc.metadata.model_id}};
    if (!doc.metadata.cassette_digest.empty()) meta["cassette_digest"] = doc.metadata.cassette_digest;
    meta["extracted_at"] = doc.metadata.extracted_at;
    if (!doc.metadata.warnings.empty()) meta["warnings"] = doc.metadata.warnings;

    nlohmann::ordered_json root = nlohmann::ordered_json::object();
    root["_meta"] = std::move(meta);
    for (auto& [key, value] : json_instance(doc.root, s).items()) root[key] = value;
    return root.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// OWL-functional-style axioms
// ---------------------------------------------------------------------------

namespace {

std::string escape_literal(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    return out;
}

struct AxiomEmitter {
    const Schema& schema;
    std::vector<std::string>& lines;
    std::set<std::string> used_node_ids;
    std::map<std::string, int> class_counters;
    std::set<std::string> declared_blanks;

    std::string schema_iri(const std::string& local) const {
        return "<urn:x-spires:" + schema.name + "#" + local + ">";
    }

    std::string entity_iri(const std::string& curie) const {
        std::string prefix = curie_prefix(curie);
        auto expansion = schema.prefix_expansion(prefix);
        if (!expansion)
            throw SchemaError("cannot expand CURIE '" + curie + "': prefix '" + prefix +
                              "' is not declared in schema '" + schema.name + "'");
        return "<" + *expansion + curie.substr(prefix.size() + 1) + ">";
    }

    std::string fresh_node_id(const std::string& class_name) {
        int& counter = class_counters[class_name];
        std::string id;
        do {
            ++counter;
            id = "_:" + class_name + std::to_string(counter);
        } while (used_node_ids.count(id));
        used_node_ids.insert(id);
        return id;
    }

    void collect_blank_labels(const Instance& instance) {
        for (const auto& [k, v] : instance.values) collect_blank_labels(v);
    }

    void collect_blank_labels(const AttributeValue& value) {
        switch (value.kind) {
        case AttributeValue::Kind::Entity:
            if (!value.entity.is_grounded() && !value.entity.blank_label.empty())
                used_node_ids.insert(value.entity.blank_label);
            break;
        case AttributeValue::Kind::List:
            for (const auto& item : value.items) collect_blank_labels(item);
            break;
        case AttributeValue::Kind::Nested:
            collect_blank_labels(value.nested_instance());
            break;
        case AttributeValue::Kind::Scalar:
            break;
        }
    }

    void emit_entity(const std::string& node_id, const std::string& attr_iri, const EntityLeaf& e) {
        if (e.is_grounded()) {
            std::string iri = entity_iri(e.grounded->curie);
            lines.push_back("ObjectPropertyAssertion(" + attr_iri + " " + node_id + " " + iri + ")");
            lines.push_back("AnnotationAssertion(rdfs:label " + iri + " \"" + escape_literal(e.surface) +
                            "\")");
            return;
        }
        std::string blank = e.blank_label.empty() ? "_:Ungrounded" : e.blank_label;
        if (declared_blanks.insert(blank).second)
            lines.push_back("ClassAssertion(" + schema_iri(e.target_class) + " " + blank + ")");
        lines.push_back("ObjectPropertyAssertion(" + attr_iri + " " + node_id + " " + blank + ")");
        lines.push_back("AnnotationAssertion(rdfs:label " + blank + " \"" + escape_literal(e.surface) +
                        "\")");
    }

    void emit_value(const std::string& node_id, const std::string& attr_iri, const AttributeValue& value) {
        switch (value.kind) {
        case AttributeValue::Kind::Scalar:
            lines.push_back("DataPropertyAssertion(" + attr_iri + " " + node_id + " \"" +
                            escape_literal(scalar_text(value.scalar)) + "\")");
            break;
        case AttributeValue::Kind::Entity:
            emit_entity(node_id, attr_iri, value.entity);
            break;
        case AttributeValue::Kind::Nested: {
            std::string child_id = emit_instance(value.nested_instance());
            lines.push_back("ObjectPropertyAssertion(" + attr_iri + " " + node_id + " " + child_id + ")");
            break;
        }
        case AttributeValue::Kind::List:
            for (const auto& item : value.items) emit_value(node_id, attr_iri, item);
            break;
        }
    }

    std::string emit_instance(const Instance& instance) {
        std::string node_id = fresh_node_id(instance.class_name);
        lines.push_back("ClassAssertion(" + schema_iri(instance.class_name) + " " + node_id + ")");
        for (const auto& [key, value] : ordered_values(instance, schema))
            emit_value(node_id, schema_iri(key), *value);
        return node_id;
    }
};

} // namespace

std::string AxiomListing::to_string() const {
    std::string out;
    for (const auto& line : lines) {
        out += line;
        out += "\n";
    }
    return out;
}

AxiomListing emit_axioms(const InstanceDocument& doc, const Schema& s) {
    AxiomListing listing;
    AxiomEmitter emitter{s, listing.lines, {}, {}, {}};
    emitter.collect_blank_labels(doc.root);
    emitter.emit_instance(doc.root);
    return listing;
}

} // namespace spires
