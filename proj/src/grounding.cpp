#include "spires/grounding.hpp"

#include "spires/errors.hpp"

#include <json.hpp>

#include <httplib.h>

#include <algorithm>
#include <cctype>
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

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    return out;
}

bool is_word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

// Whole-word substring search on normalized text.
bool contains_word(const std::string& haystack, const std::string& needle) {
    if (needle.empty() || needle.size() > haystack.size()) return false;
    size_t pos = 0;
    while ((pos = haystack.find(needle, pos)) != std::string::npos) {
        bool left_ok = pos == 0 || !is_word_char(haystack[pos - 1]);
        size_t end = pos + needle.size();
        bool right_ok = end == haystack.size() || !is_word_char(haystack[end]);
        if (left_ok && right_ok) return true;
        ++pos;
    }
    return false;
}

} // namespace

std::string normalize_label(const std::string& label) {
    std::string t = trim(label);
    // strip leading/trailing punctuation
    size_t b = 0, e = t.size();
    while (b < e && std::ispunct(static_cast<unsigned char>(t[b]))) ++b;
    while (e > b && std::ispunct(static_cast<unsigned char>(t[e - 1]))) --e;
    t = trim(t.substr(b, e - b));

    std::string out;
    out.reserve(t.size());
    bool in_ws = false;
    for (char c : t) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            in_ws = true;
            continue;
        }
        if (in_ws && !out.empty()) out.push_back(' ');
        in_ws = false;
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

std::optional<std::string> Lexicon::preferred_label(const std::string& curie) const {
    auto it = labels.find(curie);
    if (it == labels.end()) return std::nullopt;
    return it->second;
}

Lexicon load_lexicon(const std::string& source) {
    Lexicon lex;
    std::istringstream in(source);
    std::string raw;
    int number = 0;
    while (std::getline(in, raw)) {
        ++number;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        if (trim(raw).empty()) continue;
        std::vector<std::string> fields = split(raw, '\t');
        if (fields.size() < 2 || fields.size() > 3)
            throw DataError("lexicon line " + std::to_string(number) +
                            ": expected curie<TAB>label[<TAB>synonyms]");
        std::string curie = trim(fields[0]);
        std::string label = trim(fields[1]);
        if (!is_valid_curie(curie))
            throw DataError("lexicon line " + std::to_string(number) + ": invalid CURIE '" + curie + "'");
        if (label.empty())
            throw DataError("lexicon line " + std::to_string(number) + ": empty label");
        std::string prefix = curie_prefix(curie);
        if (lex.vocabulary_prefix.empty()) lex.vocabulary_prefix = prefix;
        else if (prefix != lex.vocabulary_prefix)
            throw DataError("lexicon line " + std::to_string(number) + ": prefix '" + prefix +
                            "' differs from file vocabulary '" + lex.vocabulary_prefix + "'");
        lex.entries[normalize_label(label)].push_back(curie);
        if (!lex.labels.count(curie)) lex.labels[curie] = label;
        if (fields.size() == 3) {
            for (const auto& syn : split(fields[2], '|')) {
                std::string key = normalize_label(syn);
                if (!key.empty()) lex.entries[key].push_back(curie);
            }
        }
    }
    return lex;
}

Lexicon load_lexicon_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open lexicon file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return load_lexicon(buf.str());
    } catch (const DataError& e) {
        throw DataError(path + ": " + e.what());
    }
}

Lexicon lexicon_from_members(const std::string& prefix,
                             const std::vector<std::pair<std::string, std::string>>& members) {
    Lexicon lex;
    lex.vocabulary_prefix = prefix;
    for (const auto& [curie, label] : members) {
        lex.entries[normalize_label(label)].push_back(curie);
        if (!lex.labels.count(curie)) lex.labels[curie] = label;
    }
    return lex;
}

// ---------------------------------------------------------------------------
// Normalization map
// ---------------------------------------------------------------------------

NormalizationMap NormalizationMap::parse(const std::string& source) {
    NormalizationMap map;
    std::istringstream in(source);
    std::string raw;
    int number = 0;
    while (std::getline(in, raw)) {
        ++number;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        if (trim(raw).empty()) continue;
        std::vector<std::string> fields = split(raw, '\t');
        if (fields.size() != 2)
            throw DataError("normalization map line " + std::to_string(number) +
                            ": expected source<TAB>canonical");
        map.add(trim(fields[0]), trim(fields[1]));
    }
    // Canonical CURIEs must map to themselves, or normalize() would not be
    // idempotent.
    for (const auto& [src, canon] : map.pairs_) {
        auto it = map.pairs_.find(canon);
        if (it != map.pairs_.end() && it->second != canon)
            throw DataError("normalization map is not idempotent: " + src + " -> " + canon + " -> " +
                            it->second);
    }
    return map;
}

NormalizationMap NormalizationMap::load_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open normalization map: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

void NormalizationMap::add(const std::string& source, const std::string& canonical) {
    pairs_[source] = canonical;
}

std::string NormalizationMap::normalize(const std::string& curie) const {
    auto it = pairs_.find(curie);
    return it == pairs_.end() ? curie : it->second;
}

// ---------------------------------------------------------------------------
// Annotators
// ---------------------------------------------------------------------------

LexiconAnnotator::LexiconAnnotator(std::shared_ptr<const Lexicon> lexicon)
    : lexicon_(std::move(lexicon)) {}

std::string LexiconAnnotator::name() const {
    return "lexicon:" + lexicon_->vocabulary_prefix;
}

std::vector<AnnotationCandidate> LexiconAnnotator::annotate(const std::string& surface) const {
    std::vector<AnnotationCandidate> out;
    std::string norm = normalize_label(surface);
    if (norm.empty()) return out;

    auto exact = lexicon_->entries.find(norm);
    if (exact != lexicon_->entries.end()) {
        for (const auto& curie : exact->second) out.push_back({curie, norm, MatchKind::Exact});
        return out;
    }

    // Fall back to the longest label occurring as a whole word inside the
    // surface; short labels produce too much noise.
    for (const auto& [key, curies] : lexicon_->entries) {
        if (key.size() < 3 || !contains_word(norm, key)) continue;
        for (const auto& curie : curies) out.push_back({curie, key, MatchKind::Partial});
    }
    std::stable_sort(out.begin(), out.end(), [](const AnnotationCandidate& a, const AnnotationCandidate& b) {
        if (a.label.size() != b.label.size()) return a.label.size() > b.label.size();
        return a.curie < b.curie;
    });
    return out;
}

HttpAnnotator::HttpAnnotator(std::string endpoint, std::vector<std::string> vocabularies)
    : endpoint_(std::move(endpoint)), vocabularies_(std::move(vocabularies)) {}

std::string HttpAnnotator::name() const {
    return "http:" + endpoint_;
}

std::vector<AnnotationCandidate> HttpAnnotator::annotate(const std::string& surface) const {
    size_t scheme_end = endpoint_.find("://");
    if (scheme_end == std::string::npos)
        throw ConfigError("annotator endpoint must include a scheme: " + endpoint_);
    std::string rest = endpoint_.substr(scheme_end + 3);
    size_t slash = rest.find('/');
    std::string host = slash == std::string::npos ? rest : rest.substr(0, slash);
    std::string path = slash == std::string::npos ? "/" : rest.substr(slash);

    nlohmann::json payload = {{"text", surface}, {"vocabularies", vocabularies_}};
    httplib::Client client(host);
    httplib::Result res = client.Post(path, payload.dump(), "application/json");
    if (!res || res->status != 200)
        throw TransportError("annotator request failed: " +
                             (res ? "status " + std::to_string(res->status) : httplib::to_string(res.error())));

    nlohmann::json reply = nlohmann::json::parse(res->body, nullptr, false);
    if (reply.is_discarded() || !reply.contains("candidates"))
        throw TransportError("annotator returned an unexpected payload");

    std::vector<AnnotationCandidate> out;
    for (const auto& item : reply["candidates"]) {
        AnnotationCandidate c;
        c.curie = item.value("curie", "");
        c.label = item.value("label", "");
        c.match = item.value("match", "exact") == "partial" ? MatchKind::Partial : MatchKind::Exact;
        if (!c.curie.empty()) out.push_back(std::move(c));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Grounder
// ---------------------------------------------------------------------------

void Grounder::add_lexicon(std::shared_ptr<const Lexicon> lexicon) {
    lexicons_[lexicon->vocabulary_prefix] = lexicon;
    annotators_.push_back(std::make_shared<LexiconAnnotator>(lexicon));
}

void Grounder::add_annotator(std::shared_ptr<const Annotator> annotator) {
    annotators_.push_back(std::move(annotator));
}

void Grounder::set_normalization_map(NormalizationMap map) {
    normmap_ = std::move(map);
}

void Grounder::prepare(const Schema& schema) {
    for (const auto& cls : schema.classes) {
        if (!cls.value_set) continue;
        const ValueSetSpec& vs = *cls.value_set;
        if (vs.kind == ValueSetSpec::Kind::Extensional) {
            value_sets_[cls.name] = resolve_value_set(vs, Hierarchy{});
            std::string prefix = vs.members.empty() ? "" : curie_prefix(vs.members.front().first);
            for (const auto& [curie, label] : vs.members)
                if (curie_prefix(curie) != prefix) prefix.clear();
            member_annotators_[cls.name] =
                std::make_shared<LexiconAnnotator>(std::make_shared<Lexicon>(lexicon_from_members(prefix, vs.members)));
        } else {
            auto lex = lexicons_.find(vs.source);
            if (lex == lexicons_.end() || lex->second->hierarchy.empty())
                throw DataError("class '" + cls.name + "' has an intensional value set over '" + vs.source +
                                "' but no hierarchy is loaded for that vocabulary");
            value_sets_[cls.name] = resolve_value_set(vs, lex->second->hierarchy);
        }
    }
}

std::vector<std::shared_ptr<const Annotator>> Grounder::stack_for(const ClassDef& cls) const {
    std::vector<std::shared_ptr<const Annotator>> stack;
    auto member = member_annotators_.find(cls.name);
    if (member != member_annotators_.end()) stack.push_back(member->second);

    std::vector<bool> used(annotators_.size(), false);
    for (const auto& prefix : cls.id_spaces) {
        for (size_t i = 0; i < annotators_.size(); ++i) {
            if (used[i]) continue;
            auto vocab = annotators_[i]->vocabulary();
            if (vocab && *vocab == prefix) {
                stack.push_back(annotators_[i]);
                used[i] = true;
            }
        }
    }
    // Remaining annotators still run: matches from other vocabularies may
    // normalize into an allowed id space.
    for (size_t i = 0; i < annotators_.size(); ++i)
        if (!used[i]) stack.push_back(annotators_[i]);
    return stack;
}

std::optional<GroundedEntity> Grounder::ground(const std::string& surface, const ClassDef& cls,
                                               std::vector<std::string>* warnings) const {
    if (trim(surface).empty()) throw Error("ground: surface is empty after trimming");
    if (!cls.is_entity) throw Error("ground: class '" + cls.name + "' is not an entity class");

    auto idspace_rank = [&cls](const std::string& curie) -> size_t {
        std::string prefix = curie_prefix(curie);
        for (size_t i = 0; i < cls.id_spaces.size(); ++i)
            if (cls.id_spaces[i] == prefix) return i;
        return cls.id_spaces.size();
    };

    const std::set<std::string>* value_set = resolved_value_set(cls.name);
    if (cls.value_set && !value_set)
        throw Error("ground: value set for class '" + cls.name + "' is not resolved; call prepare()");

    for (const auto& annotator : stack_for(cls)) {
        std::vector<AnnotationCandidate> candidates;
        try {
            candidates = annotator->annotate(surface);
        } catch (const Error& e) {
            if (warnings)
                warnings->push_back("annotator " + annotator->name() + " skipped: " + e.what());
            continue;
        }
        if (candidates.empty()) continue;

        struct Ranked {
            AnnotationCandidate candidate;
            std::string canonical;
        };
        std::vector<Ranked> ranked;
        ranked.reserve(candidates.size());
        for (auto& c : candidates) ranked.push_back({c, normmap_.normalize(c.curie)});
        std::stable_sort(ranked.begin(), ranked.end(), [&](const Ranked& a, const Ranked& b) {
            if (a.candidate.match != b.candidate.match)
                return a.candidate.match == MatchKind::Exact;
            if (a.candidate.label.size() != b.candidate.label.size())
                return a.candidate.label.size() > b.candidate.label.size();
            size_t ra = idspace_rank(a.canonical), rb = idspace_rank(b.canonical);
            if (ra != rb) return ra < rb;
            return a.canonical < b.canonical;
        });

        for (const auto& r : ranked) {
            if (!cls.id_spaces.empty()) {
                std::string prefix = curie_prefix(r.canonical);
                if (std::find(cls.id_spaces.begin(), cls.id_spaces.end(), prefix) == cls.id_spaces.end())
                    continue;
            }
            if (value_set && !value_set->count(r.canonical)) continue;

            GroundedEntity entity;
            entity.surface = surface;
            entity.curie = r.canonical;
            entity.source_vocabulary = annotator->vocabulary().value_or(curie_prefix(r.candidate.curie));
            if (auto label = preferred_label(r.canonical)) entity.label = *label;
            else if (auto raw_label = preferred_label(r.candidate.curie)) entity.label = *raw_label;
            else entity.label = r.candidate.label;
            for (const auto& other : ranked) entity.candidates.emplace_back(other.canonical, other.candidate.match);
            return entity;
        }
    }
    return std::nullopt;
}

ConstraintCheck Grounder::check_id_constraints(const GroundedEntity& e, const ClassDef& cls) const {
    if (!cls.id_spaces.empty()) {
        std::string prefix = curie_prefix(e.curie);
        if (std::find(cls.id_spaces.begin(), cls.id_spaces.end(), prefix) == cls.id_spaces.end())
            return {false, "prefix"};
    }
    if (const std::set<std::string>* vs = resolved_value_set(cls.name)) {
        if (!vs->count(e.curie)) return {false, "value-set"};
    } else if (cls.value_set && cls.value_set->kind == ValueSetSpec::Kind::Extensional) {
        auto resolved = resolve_value_set(*cls.value_set, Hierarchy{});
        if (!resolved.count(e.curie)) return {false, "value-set"};
    }
    return {true, ""};
}

std::optional<std::string> Grounder::preferred_label(const std::string& curie) const {
    std::string prefix = curie_prefix(curie);
    auto it = lexicons_.find(prefix);
    if (it != lexicons_.end())
        if (auto label = it->second->preferred_label(curie)) return label;
    for (const auto& [_, lex] : lexicons_)
        if (auto label = lex->preferred_label(curie)) return label;
    return std::nullopt;
}

const std::set<std::string>* Grounder::resolved_value_set(const std::string& class_name) const {
    auto it = value_sets_.find(class_name);
    return it == value_sets_.end() ? nullptr : &it->second;
}

} // namespace spires
