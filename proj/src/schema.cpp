#include "spires/schema.hpp"

#include "spires/errors.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <fstream>
#include <sstream>

namespace spires {

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

bool is_upper_token(const std::string& s) {
    if (s.empty() || !std::isupper(static_cast<unsigned char>(s[0]))) return false;
    for (char c : s) {
        unsigned char u = static_cast<unsigned char>(c);
        if (std::isupper(u) || std::isdigit(u) || c == '_' || c == '.') continue;
        return false;
    }
    return true;
}

} // namespace

RangeSpec RangeSpec::string_type() { return {Kind::Primitive, Primitive::String, ""}; }
RangeSpec RangeSpec::number_type() { return {Kind::Primitive, Primitive::Number, ""}; }
RangeSpec RangeSpec::boolean_type() { return {Kind::Primitive, Primitive::Boolean, ""}; }
RangeSpec RangeSpec::class_ref(const std::string& name) { return {Kind::ClassRef, Primitive::String, name}; }
RangeSpec RangeSpec::value_set_ref(const std::string& name) { return {Kind::ValueSetRef, Primitive::String, name}; }

const AttributeDef* ClassDef::find_attribute(const std::string& normalized_name) const {
    for (const auto& a : attributes)
        if (normalize_attribute_name(a.name) == normalized_name) return &a;
    return nullptr;
}

const ClassDef* Schema::find_class(const std::string& cname) const {
    for (const auto& c : classes)
        if (c.name == cname) return &c;
    return nullptr;
}

std::optional<std::string> Schema::prefix_expansion(const std::string& prefix) const {
    for (const auto& [p, iri] : prefixes)
        if (p == prefix) return iri;
    return std::nullopt;
}

std::string Violation::to_string() const {
    std::string s = "[" + rule + "] " + class_name;
    if (!attribute.empty()) s += "." + attribute;
    s += ": " + message;
    return s;
}

std::string normalize_attribute_name(const std::string& name) {
    std::string t = trim(name);
    std::string out;
    out.reserve(t.size());
    bool in_ws = false;
    for (char c : t) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            in_ws = true;
            continue;
        }
        if (in_ws) {
            out.push_back('_');
            in_ws = false;
        }
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

bool is_valid_curie(const std::string& curie) {
    size_t colon = curie.find(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 >= curie.size()) return false;
    std::string prefix = curie.substr(0, colon);
    if (!is_upper_token(prefix)) return false;
    for (size_t i = colon + 1; i < curie.size(); ++i)
        if (std::isspace(static_cast<unsigned char>(curie[i]))) return false;
    return true;
}

std::string curie_prefix(const std::string& curie) {
    size_t colon = curie.find(':');
    return colon == std::string::npos ? "" : curie.substr(0, colon);
}

// ---------------------------------------------------------------------------
// Schema file parser
// ---------------------------------------------------------------------------

namespace {

struct Line {
    int number;
    int indent; // in levels of two spaces
    std::string text;
};

std::vector<Line> logical_lines(const std::string& source) {
    std::vector<Line> out;
    std::istringstream in(source);
    std::string raw;
    int number = 0;
    while (std::getline(in, raw)) {
        ++number;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        std::string t = trim(raw);
        if (t.empty() || t[0] == '#') continue;
        size_t spaces = 0;
        while (spaces < raw.size() && raw[spaces] == ' ') ++spaces;
        if (spaces < raw.size() && raw[spaces] == '\t')
            throw SyntaxError(number, "tab indentation is not allowed");
        if (spaces % 2 != 0)
            throw SyntaxError(number, "indentation must be a multiple of two spaces");
        out.push_back({number, static_cast<int>(spaces / 2), t});
    }
    return out;
}

// "key: value" split on the first colon; value may be empty.
std::pair<std::string, std::string> split_key(const Line& ln) {
    size_t colon = ln.text.find(':');
    if (colon == std::string::npos)
        throw SyntaxError(ln.number, "expected 'key: value', got '" + ln.text + "'");
    return {trim(ln.text.substr(0, colon)), trim(ln.text.substr(colon + 1))};
}

std::vector<std::string> parse_inline_list(const std::string& value, int line) {
    std::string v = trim(value);
    if (v.size() < 2 || v.front() != '[' || v.back() != ']')
        throw SyntaxError(line, "expected an inline list [a, b, ...], got '" + value + "'");
    std::string body = trim(v.substr(1, v.size() - 2));
    std::vector<std::string> items;
    if (body.empty()) return items;
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) items.push_back(trim(item));
    return items;
}

// {k: v, k2: "v, with comma"} -- values may be double-quoted.
std::vector<std::pair<std::string, std::string>> parse_inline_map(const std::string& value, int line) {
    std::string v = trim(value);
    if (v.size() < 2 || v.front() != '{' || v.back() != '}')
        throw SyntaxError(line, "expected an inline map {key: value, ...}, got '" + value + "'");
    std::string body = v.substr(1, v.size() - 2);
    std::vector<std::string> parts;
    std::string cur;
    bool in_quotes = false;
    for (size_t i = 0; i < body.size(); ++i) {
        char c = body[i];
        if (in_quotes) {
            if (c == '\\' && i + 1 < body.size()) {
                cur.push_back(body[++i]);
                continue;
            }
            if (c == '"') {
                in_quotes = false;
                continue;
            }
            cur.push_back(c);
            continue;
        }
        if (c == '"') {
            in_quotes = true;
            continue;
        }
        if (c == ',') {
            parts.push_back(cur);
            cur.clear();
            continue;
        }
        cur.push_back(c);
    }
    if (in_quotes) throw SyntaxError(line, "unterminated quoted string in inline map");
    if (!trim(cur).empty() || !parts.empty()) parts.push_back(cur);

    std::vector<std::pair<std::string, std::string>> pairs;
    for (const auto& p : parts) {
        std::string t = trim(p);
        if (t.empty()) continue;
        size_t colon = t.find(':');
        if (colon == std::string::npos)
            throw SyntaxError(line, "inline map entry '" + t + "' is missing ':'");
        pairs.emplace_back(trim(t.substr(0, colon)), trim(t.substr(colon + 1)));
    }
    return pairs;
}

bool parse_bool(const std::string& value, int line) {
    if (value == "true") return true;
    if (value == "false") return false;
    throw SyntaxError(line, "expected true or false, got '" + value + "'");
}

RangeSpec parse_range(const std::string& value, int line) {
    if (value == "string") return RangeSpec::string_type();
    if (value == "number") return RangeSpec::number_type();
    if (value == "boolean") return RangeSpec::boolean_type();
    if (value.rfind("values(", 0) == 0 && value.back() == ')') {
        std::string target = trim(value.substr(7, value.size() - 8));
        if (target.empty()) throw SyntaxError(line, "empty values() reference");
        return RangeSpec::value_set_ref(target);
    }
    if (value.empty()) throw SyntaxError(line, "empty range");
    return RangeSpec::class_ref(value);
}

AttributeDef parse_attribute(const std::string& name, const std::string& value, int line) {
    AttributeDef attr;
    attr.name = name;
    bool saw_range = false;
    for (const auto& [k, v] : parse_inline_map(value, line)) {
        if (k == "range") {
            attr.range = parse_range(v, line);
            saw_range = true;
        } else if (k == "multivalued") {
            attr.multivalued = parse_bool(v, line);
        } else if (k == "inlined") {
            attr.inlined = parse_bool(v, line);
        } else if (k == "identifier") {
            attr.identifier = parse_bool(v, line);
        } else if (k == "prompt") {
            attr.prompt = v;
        } else {
            throw SyntaxError(line, "unknown attribute property '" + k + "'");
        }
    }
    if (!saw_range)
        throw SyntaxError(line, "attribute '" + name + "' is missing a range");
    return attr;
}

std::pair<std::string, std::string> parse_member(const std::string& item, int line) {
    size_t eq = item.find('=');
    if (eq == std::string::npos)
        throw SyntaxError(line, "value set member '" + item + "' must be 'CURIE = label'");
    return {trim(item.substr(0, eq)), trim(item.substr(eq + 1))};
}

} // namespace

Schema load_schema(const std::string& source) {
    std::vector<Line> lines = logical_lines(source);
    if (lines.empty()) throw SyntaxError(1, "empty schema document");

    Schema schema;
    size_t i = 0;

    auto [first_key, first_value] = split_key(lines[0]);
    if (lines[0].indent != 0 || first_key != "schema")
        throw SyntaxError(lines[0].number, "schema document must start with 'schema: <name>'");
    if (first_value.empty()) throw SyntaxError(lines[0].number, "schema name is empty");
    schema.name = first_value;
    ++i;

    while (i < lines.size()) {
        const Line& ln = lines[i];
        if (ln.indent != 0) throw SyntaxError(ln.number, "expected a top-level section");
        auto [key, value] = split_key(ln);
        if (key == "prefixes") {
            ++i;
            while (i < lines.size() && lines[i].indent == 1) {
                auto [p, iri] = split_key(lines[i]);
                if (iri.empty()) throw SyntaxError(lines[i].number, "prefix '" + p + "' has no expansion");
                schema.prefixes.emplace_back(p, iri);
                ++i;
            }
        } else if (key == "classes") {
            ++i;
            while (i < lines.size() && lines[i].indent == 1) {
                auto [cname, cval] = split_key(lines[i]);
                if (!cval.empty())
                    throw SyntaxError(lines[i].number, "class '" + cname + "' takes a block, not an inline value");
                ClassDef cls;
                cls.name = cname;
                int class_line = lines[i].number;
                ++i;
                while (i < lines.size() && lines[i].indent == 2) {
                    auto [pkey, pval] = split_key(lines[i]);
                    if (pkey == "entity") {
                        cls.is_entity = parse_bool(pval, lines[i].number);
                        ++i;
                    } else if (pkey == "id_spaces") {
                        cls.id_spaces = parse_inline_list(pval, lines[i].number);
                        ++i;
                    } else if (pkey == "attributes") {
                        ++i;
                        while (i < lines.size() && lines[i].indent == 3) {
                            auto [aname, aval] = split_key(lines[i]);
                            cls.attributes.push_back(parse_attribute(aname, aval, lines[i].number));
                            ++i;
                        }
                    } else if (pkey == "value_set") {
                        ValueSetSpec vs;
                        bool saw_kind = false;
                        ++i;
                        while (i < lines.size() && lines[i].indent == 3) {
                            auto [vkey, vval] = split_key(lines[i]);
                            int vline = lines[i].number;
                            if (vkey == "kind") {
                                if (vval == "extensional") vs.kind = ValueSetSpec::Kind::Extensional;
                                else if (vval == "intensional") vs.kind = ValueSetSpec::Kind::Intensional;
                                else throw SyntaxError(vline, "value set kind must be extensional or intensional");
                                saw_kind = true;
                                ++i;
                            } else if (vkey == "source") {
                                vs.source = vval;
                                ++i;
                            } else if (vkey == "include") {
                                vs.include_roots = parse_inline_list(vval, vline);
                                ++i;
                            } else if (vkey == "exclude") {
                                vs.exclude_roots = parse_inline_list(vval, vline);
                                ++i;
                            } else if (vkey == "members") {
                                if (!vval.empty()) {
                                    for (const auto& item : parse_inline_list(vval, vline))
                                        vs.members.push_back(parse_member(item, vline));
                                    ++i;
                                } else {
                                    ++i;
                                    while (i < lines.size() && lines[i].indent == 4) {
                                        const Line& ml = lines[i];
                                        if (ml.text.rfind("- ", 0) != 0)
                                            throw SyntaxError(ml.number, "expected '- CURIE = label'");
                                        vs.members.push_back(parse_member(trim(ml.text.substr(2)), ml.number));
                                        ++i;
                                    }
                                }
                            } else {
                                throw SyntaxError(vline, "unknown value_set property '" + vkey + "'");
                            }
                        }
                        if (!saw_kind) throw SyntaxError(class_line, "value_set block is missing 'kind'");
                        cls.value_set = std::move(vs);
                    } else {
                        throw SyntaxError(lines[i].number, "unknown class property '" + pkey + "'");
                    }
                }
                schema.classes.push_back(std::move(cls));
            }
        } else if (key == "schema") {
            throw SyntaxError(ln.number, "duplicate 'schema:' line");
        } else {
            throw SyntaxError(ln.number, "unknown top-level section '" + key + "'");
        }
    }

    std::vector<Violation> violations = validate_schema(schema);
    if (!violations.empty()) {
        std::string msg = "schema '" + schema.name + "' is invalid:";
        for (const auto& v : violations) msg += "\n  " + v.to_string();
        throw SchemaError(msg);
    }
    return schema;
}

Schema load_schema_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open schema file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_schema(buf.str());
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

std::vector<Violation> validate_schema(const Schema& s) {
    std::vector<Violation> out;
    auto add = [&out](const std::string& cls, const std::string& attr, const std::string& rule,
                      const std::string& msg) { out.push_back({cls, attr, rule, msg}); };

    std::set<std::string> seen_classes;
    for (const auto& cls : s.classes) {
        if (cls.name.empty()) add("", "", "empty-class-name", "class with empty name");
        if (!seen_classes.insert(cls.name).second)
            add(cls.name, "", "duplicate-class", "class name declared more than once");
    }

    for (const auto& cls : s.classes) {
        std::set<std::string> seen_attrs;
        int identifier_count = 0;
        for (const auto& attr : cls.attributes) {
            std::string norm = normalize_attribute_name(attr.name);
            if (norm.empty()) {
                add(cls.name, attr.name, "empty-attribute-name", "attribute with empty name");
            } else if (!seen_attrs.insert(norm).second) {
                add(cls.name, attr.name, "duplicate-attribute",
                    "attribute collides with another after normalization to '" + norm + "'");
            }
            if (attr.identifier) ++identifier_count;
            if (attr.range.kind == RangeSpec::Kind::ClassRef) {
                if (!s.find_class(attr.range.class_name))
                    add(cls.name, attr.name, "dangling-range",
                        "range names undefined class '" + attr.range.class_name + "'");
            } else if (attr.range.kind == RangeSpec::Kind::ValueSetRef) {
                const ClassDef* target = s.find_class(attr.range.class_name);
                if (!target)
                    add(cls.name, attr.name, "dangling-range",
                        "value set range names undefined class '" + attr.range.class_name + "'");
                else if (!target->value_set)
                    add(cls.name, attr.name, "missing-value-set",
                        "range references values of '" + target->name + "', which defines no value set");
            }
            if (attr.inlined && attr.range.kind != RangeSpec::Kind::ClassRef)
                add(cls.name, attr.name, "inlined-non-class", "inlined is only valid when the range is a class");
        }
        if (identifier_count > 1)
            add(cls.name, "", "multiple-identifiers", "more than one attribute marked identifier");

        for (const auto& prefix : cls.id_spaces) {
            if (!is_upper_token(prefix))
                add(cls.name, "", "lowercase-prefix", "id space prefix '" + prefix + "' must be upper-case");
            else if (!s.prefix_expansion(prefix))
                add(cls.name, "", "undeclared-prefix",
                    "id space prefix '" + prefix + "' is not declared under prefixes");
        }

        if (cls.value_set) {
            const ValueSetSpec& vs = *cls.value_set;
            if (vs.kind == ValueSetSpec::Kind::Extensional) {
                for (const auto& [curie, label] : vs.members)
                    if (!is_valid_curie(curie))
                        add(cls.name, "", "invalid-curie", "value set member '" + curie + "' is not a valid CURIE");
            } else {
                for (const auto& root : vs.include_roots)
                    if (!is_valid_curie(root))
                        add(cls.name, "", "invalid-curie", "include root '" + root + "' is not a valid CURIE");
                for (const auto& root : vs.exclude_roots)
                    if (!is_valid_curie(root))
                        add(cls.name, "", "invalid-curie", "exclude root '" + root + "' is not a valid CURIE");
                std::set<std::string> inc(vs.include_roots.begin(), vs.include_roots.end());
                for (const auto& root : vs.exclude_roots)
                    if (inc.count(root))
                        add(cls.name, "", "valueset-overlap",
                            "root '" + root + "' appears in both include and exclude lists");
            }
        }
    }

    // Cycles among inlined class references would make extraction recurse
    // forever; reject them here.
    std::map<std::string, int> color; // 0 unvisited, 1 on stack, 2 done
    std::vector<std::string> stack;
    auto dfs = [&](auto&& self, const std::string& name) -> void {
        color[name] = 1;
        stack.push_back(name);
        const ClassDef* cls = s.find_class(name);
        if (cls) {
            for (const auto& attr : cls->attributes) {
                if (!attr.inlined || attr.range.kind != RangeSpec::Kind::ClassRef) continue;
                const std::string& next = attr.range.class_name;
                if (!s.find_class(next)) continue;
                if (color[next] == 1) {
                    std::string path;
                    auto it = std::find(stack.begin(), stack.end(), next);
                    for (; it != stack.end(); ++it) path += *it + " -> ";
                    path += next;
                    add(name, attr.name, "inlined-cycle", "inlined references form a cycle: " + path);
                } else if (color[next] == 0) {
                    self(self, next);
                }
            }
        }
        stack.pop_back();
        color[name] = 2;
    };
    for (const auto& cls : s.classes)
        if (color[cls.name] == 0) dfs(dfs, cls.name);

    return out;
}

// ---------------------------------------------------------------------------
// Canonical serialization
// ---------------------------------------------------------------------------

namespace {

std::string quote_if_needed(const std::string& v) {
    bool needs = v.empty();
    for (char c : v)
        if (c == ',' || c == '{' || c == '}' || c == '"' || c == '\n') needs = true;
    if (!v.empty() && (v.front() == ' ' || v.back() == ' ')) needs = true;
    if (!needs) return v;
    std::string out = "\"";
    for (char c : v) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string render_inline_list(const std::vector<std::string>& items) {
    std::string out = "[";
    for (size_t i = 0; i < items.size(); ++i) {
        if (i) out += ", ";
        out += items[i];
    }
    return out + "]";
}

} // namespace

std::string serialize_schema(const Schema& s) {
    std::ostringstream out;
    out << "schema: " << s.name << "\n";
    if (!s.prefixes.empty()) {
        out << "prefixes:\n";
        for (const auto& [p, iri] : s.prefixes) out << "  " << p << ": " << iri << "\n";
    }
    if (!s.classes.empty()) {
        out << "classes:\n";
        for (const auto& cls : s.classes) {
            out << "  " << cls.name << ":\n";
            if (cls.is_entity) out << "    entity: true\n";
            if (!cls.id_spaces.empty()) out << "    id_spaces: " << render_inline_list(cls.id_spaces) << "\n";
            if (cls.value_set) {
                const ValueSetSpec& vs = *cls.value_set;
                out << "    value_set:\n";
                if (vs.kind == ValueSetSpec::Kind::Extensional) {
                    out << "      kind: extensional\n";
                    out << "      members:\n";
                    for (const auto& [curie, label] : vs.members)
                        out << "        - " << curie << " = " << label << "\n";
                } else {
                    out << "      kind: intensional\n";
                    out << "      source: " << vs.source << "\n";
                    out << "      include: " << render_inline_list(vs.include_roots) << "\n";
                    if (!vs.exclude_roots.empty())
                        out << "      exclude: " << render_inline_list(vs.exclude_roots) << "\n";
                }
            }
            if (!cls.attributes.empty()) {
                out << "    attributes:\n";
                for (const auto& attr : cls.attributes) {
                    out << "      " << attr.name << ": {range: ";
                    switch (attr.range.kind) {
                    case RangeSpec::Kind::Primitive:
                        out << (attr.range.primitive == RangeSpec::Primitive::String   ? "string"
                                : attr.range.primitive == RangeSpec::Primitive::Number ? "number"
                                                                                       : "boolean");
                        break;
                    case RangeSpec::Kind::ClassRef:
                        out << attr.range.class_name;
                        break;
                    case RangeSpec::Kind::ValueSetRef:
                        out << "values(" << attr.range.class_name << ")";
                        break;
                    }
                    if (attr.multivalued) out << ", multivalued: true";
                    if (attr.inlined) out << ", inlined: true";
                    if (attr.identifier) out << ", identifier: true";
                    if (attr.prompt) out << ", prompt: " << quote_if_needed(*attr.prompt);
                    out << "}\n";
                }
            }
        }
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Hierarchy and value set resolution
// ---------------------------------------------------------------------------

bool Hierarchy::contains(const std::string& curie) const {
    return parents_of.count(curie) > 0 || children_of.count(curie) > 0;
}

std::set<std::string> Hierarchy::descendant_closure(const std::string& root) const {
    std::set<std::string> closure{root};
    std::deque<std::string> queue{root};
    while (!queue.empty()) {
        std::string cur = queue.front();
        queue.pop_front();
        auto it = children_of.find(cur);
        if (it == children_of.end()) continue;
        for (const auto& child : it->second)
            if (closure.insert(child).second) queue.push_back(child);
    }
    return closure;
}

Hierarchy load_hierarchy(const std::string& source) {
    Hierarchy h;
    std::istringstream in(source);
    std::string raw;
    int number = 0;
    while (std::getline(in, raw)) {
        ++number;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        if (trim(raw).empty()) continue;
        size_t tab = raw.find('\t');
        if (tab == std::string::npos)
            throw DataError("hierarchy line " + std::to_string(number) + ": expected child<TAB>parent");
        std::string child = trim(raw.substr(0, tab));
        std::string parent = trim(raw.substr(tab + 1));
        if (child.empty() || parent.empty() || parent.find('\t') != std::string::npos)
            throw DataError("hierarchy line " + std::to_string(number) + ": expected exactly two fields");
        h.parents_of[child].push_back(parent);
        h.children_of[parent].push_back(child);
    }
    return h;
}

Hierarchy load_hierarchy_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open hierarchy file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_hierarchy(buf.str());
}

std::set<std::string> resolve_value_set(const ValueSetSpec& v, const Hierarchy& hierarchy) {
    if (v.kind == ValueSetSpec::Kind::Extensional) {
        std::set<std::string> out;
        for (const auto& [curie, label] : v.members) out.insert(curie);
        return out;
    }
    auto closure_of = [&hierarchy](const std::vector<std::string>& roots) {
        std::set<std::string> acc;
        for (const auto& root : roots) {
            if (!hierarchy.contains(root))
                throw DataError("unknown root CURIE in hierarchy table: " + root);
            auto c = hierarchy.descendant_closure(root);
            acc.insert(c.begin(), c.end());
        }
        return acc;
    };
    std::set<std::string> included = closure_of(v.include_roots);
    std::set<std::string> excluded = closure_of(v.exclude_roots);
    std::set<std::string> out;
    std::set_difference(included.begin(), included.end(), excluded.begin(), excluded.end(),
                        std::inserter(out, out.begin()));
    return out;
}

} // namespace spires
