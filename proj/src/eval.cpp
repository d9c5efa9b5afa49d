#include "spires/eval.hpp"

#include "spires/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <functional>
#include <future>
#include <set>
#include <sstream>
#include <tuple>

namespace spires {

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string lowercase(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::vector<std::string> split_tabs(const std::string& s) {
    std::vector<std::string> out;
    size_t start = 0;
    while (true) {
        size_t tab = s.find('\t', start);
        if (tab == std::string::npos) {
            out.push_back(s.substr(start));
            break;
        }
        out.push_back(s.substr(start, tab - start));
        start = tab + 1;
    }
    return out;
}

bool is_not_qualifier(const std::string& q) {
    return lowercase(trim(q)) == "not";
}

using TripleKey = std::tuple<std::string, std::string, std::string>;

TripleKey key_of(const TripleRecord& t, const NormalizationMap& norm) {
    return {t.source_id, norm.normalize(t.subject), norm.normalize(t.object)};
}

std::string read_file(const std::string& path, const char* what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(std::string("cannot open ") + what + ": " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace

void finalize_scores(ScoreReport& report) {
    long tp = report.true_positives, fp = report.false_positives, fn = report.false_negatives;
    report.precision = (tp + fp) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    report.recall = (tp + fn) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    double pr = report.precision + report.recall;
    report.f_score = pr > 0 ? 100.0 * 2.0 * report.precision * report.recall / pr : 0.0;
}

ScoreReport score_triples(const std::vector<TripleRecord>& gold,
                          const std::vector<TripleRecord>& predicted, const NormalizationMap& norm) {
    std::set<TripleKey> gold_keys;
    for (const auto& t : gold) gold_keys.insert(key_of(t, norm));

    std::set<TripleKey> pred_keys;
    for (const auto& t : predicted) {
        if (is_not_qualifier(t.predicate_qualifier)) continue;
        pred_keys.insert(key_of(t, norm));
    }

    ScoreReport report;
    std::map<std::string, ScoreReport::DocumentRow> per_doc;
    for (const auto& k : gold_keys) per_doc[std::get<0>(k)].source_id = std::get<0>(k);
    for (const auto& k : pred_keys) per_doc[std::get<0>(k)].source_id = std::get<0>(k);

    for (const auto& k : pred_keys) {
        if (gold_keys.count(k)) {
            ++report.true_positives;
            ++per_doc[std::get<0>(k)].tp;
        } else {
            ++report.false_positives;
            ++per_doc[std::get<0>(k)].fp;
        }
    }
    for (const auto& k : gold_keys) {
        if (!pred_keys.count(k)) {
            ++report.false_negatives;
            ++per_doc[std::get<0>(k)].fn;
        }
    }
    for (auto& [id, row] : per_doc) report.per_document.push_back(row);
    finalize_scores(report);
    return report;
}

std::map<std::string, ScoreReport> score_ner(const std::vector<NerRecord>& gold,
                                             const std::vector<NerRecord>& predicted,
                                             const std::vector<std::string>& allowed_types) {
    auto check_type = [&allowed_types](const NerRecord& r) {
        if (std::find(allowed_types.begin(), allowed_types.end(), r.entity_type) == allowed_types.end())
            throw DataError("unknown entity type '" + r.entity_type + "'");
    };
    std::map<std::string, std::set<std::pair<std::string, std::string>>> gold_sets, pred_sets;
    for (const auto& r : gold) {
        check_type(r);
        gold_sets[r.entity_type].insert({r.source_id, r.curie});
    }
    for (const auto& r : predicted) {
        check_type(r);
        pred_sets[r.entity_type].insert({r.source_id, r.curie});
    }

    std::map<std::string, ScoreReport> out;
    for (const auto& type : allowed_types) {
        const auto& g = gold_sets[type];
        const auto& p = pred_sets[type];
        ScoreReport report;
        for (const auto& k : p) {
            if (g.count(k)) ++report.true_positives;
            else ++report.false_positives;
        }
        for (const auto& k : g)
            if (!p.count(k)) ++report.false_negatives;
        finalize_scores(report);
        out[type] = report;
    }
    return out;
}

GroundingReport score_grounding(const std::vector<std::pair<std::string, std::string>>& pairs,
                                const Grounder& grounder) {
    GroundingReport report;
    std::map<std::string, GroundingReport::VocabularyRow> rows;
    for (const auto& [label, expected] : pairs) {
        std::string prefix = curie_prefix(expected);
        auto& row = rows[prefix];
        row.prefix = prefix;
        ++row.total;
        ++report.total;

        ClassDef cls;
        cls.name = prefix + "_term";
        cls.is_entity = true;
        cls.id_spaces = {prefix};
        auto grounded = grounder.ground(label, cls);
        if (grounded && grounded->curie == expected && grounded->surface == label) {
            ++row.matched;
            ++report.matched;
        }
    }
    for (auto& [prefix, row] : rows) report.per_vocabulary.push_back(row);
    return report;
}

// ---------------------------------------------------------------------------
// Chunking
// ---------------------------------------------------------------------------

std::string concat_title_abstract(const std::string& title, const std::string& abstract) {
    if (title.empty()) return abstract;
    if (abstract.empty()) return title;
    char last = title.back();
    if (last == '.' || last == '!' || last == '?') return title + " " + abstract;
    return title + ". " + abstract;
}

ChunkPlan chunk_document(const std::string& title, const std::string& abstract,
                         const ChunkParams& params) {
    if (params.window_chars <= 0 || params.overlap_chars < 0 ||
        params.overlap_chars >= params.window_chars)
        throw ConfigError("invalid chunk parameters: window " + std::to_string(params.window_chars) +
                          ", overlap " + std::to_string(params.overlap_chars));

    ChunkPlan plan;
    plan.window_chars = params.window_chars;
    plan.overlap_chars = params.overlap_chars;
    std::string text = concat_title_abstract(title, abstract);

    if (!params.chunking) {
        plan.chunks.push_back({text, 0});
        return plan;
    }

    size_t window = static_cast<size_t>(params.window_chars);
    size_t overlap = static_cast<size_t>(params.overlap_chars);
    size_t pos = 0;
    while (true) {
        size_t end = std::min(pos + window, text.size());
        if (end < text.size()) {
            // Prefer ending on a ". Upper" sentence boundary, as long as the
            // next window still makes progress.
            for (size_t b = end; b > pos + overlap + 1; --b) {
                if (b >= 2 && text[b - 2] == '.' && text[b - 1] == ' ' &&
                    std::isupper(static_cast<unsigned char>(text[b]))) {
                    end = b;
                    break;
                }
            }
        }
        plan.chunks.push_back({text.substr(pos, end - pos), pos});
        if (end >= text.size()) break;
        pos = end - overlap;
    }
    return plan;
}

std::vector<TripleRecord> merge_chunk_results(const std::vector<std::vector<TripleRecord>>& per_chunk) {
    std::vector<TripleRecord> out;
    std::set<TripleKey> seen;
    for (const auto& chunk : per_chunk) {
        for (const auto& t : chunk) {
            TripleKey k{t.source_id, t.subject, t.object};
            if (seen.insert(k).second) out.push_back(t);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// TSV I/O
// ---------------------------------------------------------------------------

std::vector<TripleRecord> parse_triples_tsv(const std::string& source) {
    std::vector<TripleRecord> out;
    std::istringstream in(source);
    std::string raw;
    int number = 0;
    while (std::getline(in, raw)) {
        ++number;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        if (trim(raw).empty()) continue;
        std::vector<std::string> fields = split_tabs(raw);
        if (fields.size() < 3 || fields.size() > 6)
            throw DataError("triples line " + std::to_string(number) +
                            ": expected 3-6 tab-separated fields");
        fields.resize(6);
        TripleRecord t;
        t.source_id = trim(fields[0]);
        t.subject = trim(fields[1]);
        t.object = trim(fields[2]);
        t.subject_qualifier = trim(fields[3]);
        t.object_qualifier = trim(fields[4]);
        t.predicate_qualifier = trim(fields[5]);
        if (!is_valid_curie(t.subject))
            throw DataError("triples line " + std::to_string(number) + ": malformed subject CURIE '" +
                            t.subject + "'");
        if (!is_valid_curie(t.object))
            throw DataError("triples line " + std::to_string(number) + ": malformed object CURIE '" +
                            t.object + "'");
        out.push_back(std::move(t));
    }
    return out;
}

std::vector<TripleRecord> load_triples_file(const std::string& path) {
    try {
        return parse_triples_tsv(read_file(path, "triples file"));
    } catch (const DataError& e) {
        throw DataError(path + ": " + e.what());
    }
}

std::string render_triples_tsv(const std::vector<TripleRecord>& triples) {
    std::ostringstream out;
    for (const auto& t : triples)
        out << t.source_id << '\t' << t.subject << '\t' << t.object << '\t' << t.subject_qualifier
            << '\t' << t.object_qualifier << '\t' << t.predicate_qualifier << '\n';
    return out.str();
}

std::vector<NerRecord> parse_ner_tsv(const std::string& source) {
    std::vector<NerRecord> out;
    std::istringstream in(source);
    std::string raw;
    int number = 0;
    while (std::getline(in, raw)) {
        ++number;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        if (trim(raw).empty()) continue;
        std::vector<std::string> fields = split_tabs(raw);
        if (fields.size() != 3)
            throw DataError("ner line " + std::to_string(number) +
                            ": expected source_id<TAB>curie<TAB>entity_type");
        NerRecord r{trim(fields[0]), trim(fields[1]), trim(fields[2])};
        if (!is_valid_curie(r.curie))
            throw DataError("ner line " + std::to_string(number) + ": malformed CURIE '" + r.curie + "'");
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<NerRecord> load_ner_file(const std::string& path) {
    try {
        return parse_ner_tsv(read_file(path, "ner file"));
    } catch (const DataError& e) {
        throw DataError(path + ": " + e.what());
    }
}

std::vector<std::pair<std::string, std::string>> parse_grounding_pairs_tsv(const std::string& source) {
    std::vector<std::pair<std::string, std::string>> out;
    std::istringstream in(source);
    std::string raw;
    int number = 0;
    while (std::getline(in, raw)) {
        ++number;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        if (trim(raw).empty()) continue;
        std::vector<std::string> fields = split_tabs(raw);
        if (fields.size() != 2)
            throw DataError("grounding pairs line " + std::to_string(number) +
                            ": expected label<TAB>expected_curie");
        out.emplace_back(trim(fields[0]), trim(fields[1]));
    }
    return out;
}

std::vector<std::pair<std::string, std::string>> load_grounding_pairs_file(const std::string& path) {
    try {
        return parse_grounding_pairs_tsv(read_file(path, "grounding pairs file"));
    } catch (const DataError& e) {
        throw DataError(path + ": " + e.what());
    }
}

std::vector<CorpusDocument> parse_corpus_tsv(const std::string& source) {
    std::vector<CorpusDocument> out;
    std::istringstream in(source);
    std::string raw;
    int number = 0;
    while (std::getline(in, raw)) {
        ++number;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        if (trim(raw).empty()) continue;
        std::vector<std::string> fields = split_tabs(raw);
        if (fields.size() < 2 || fields.size() > 3)
            throw DataError("corpus line " + std::to_string(number) +
                            ": expected doc_id<TAB>title[<TAB>abstract]");
        fields.resize(3);
        out.push_back({trim(fields[0]), trim(fields[1]), trim(fields[2])});
    }
    return out;
}

std::vector<CorpusDocument> load_corpus_file(const std::string& path) {
    try {
        return parse_corpus_tsv(read_file(path, "corpus file"));
    } catch (const DataError& e) {
        throw DataError(path + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Instance projection
// ---------------------------------------------------------------------------

namespace {

std::string scalar_attribute_text(const Instance& instance, const std::string& key) {
    const AttributeValue* v = instance.find(key);
    if (!v || v->kind != AttributeValue::Kind::Scalar) return "";
    return v->scalar.text;
}

const EntityLeaf* entity_attribute(const Instance& instance, const std::string& key) {
    const AttributeValue* v = instance.find(key);
    if (!v || v->kind != AttributeValue::Kind::Entity) return nullptr;
    return &v->entity;
}

void walk_instances(const Instance& instance, const std::function<void(const Instance&)>& fn) {
    fn(instance);
    for (const auto& [k, v] : instance.values) {
        std::vector<const AttributeValue*> stack{&v};
        while (!stack.empty()) {
            const AttributeValue* cur = stack.back();
            stack.pop_back();
            if (cur->kind == AttributeValue::Kind::Nested) walk_instances(cur->nested_instance(), fn);
            else if (cur->kind == AttributeValue::Kind::List)
                for (const auto& item : cur->items) stack.push_back(&item);
        }
    }
}

void walk_entities(const Instance& instance, const std::function<void(const EntityLeaf&)>& fn) {
    for (const auto& [k, v] : instance.values) {
        std::vector<const AttributeValue*> stack{&v};
        while (!stack.empty()) {
            const AttributeValue* cur = stack.back();
            stack.pop_back();
            switch (cur->kind) {
            case AttributeValue::Kind::Entity: fn(cur->entity); break;
            case AttributeValue::Kind::Nested: walk_entities(cur->nested_instance(), fn); break;
            case AttributeValue::Kind::List:
                for (auto it = cur->items.rbegin(); it != cur->items.rend(); ++it) stack.push_back(&*it);
                break;
            case AttributeValue::Kind::Scalar: break;
            }
        }
    }
}

} // namespace

std::vector<TripleRecord> collect_triples(const Instance& root) {
    std::vector<TripleRecord> out;
    walk_instances(root, [&](const Instance& instance) {
        const EntityLeaf* subject = entity_attribute(instance, "subject");
        const EntityLeaf* object = entity_attribute(instance, "object");
        if (!subject || !object) return;
        if (!subject->is_grounded() || !object->is_grounded()) return;
        TripleRecord t;
        t.source_id = instance.provenance.empty() ? root.provenance : instance.provenance;
        t.subject = subject->grounded->curie;
        t.object = object->grounded->curie;
        t.subject_qualifier = scalar_attribute_text(instance, "subject_qualifier");
        t.object_qualifier = scalar_attribute_text(instance, "object_qualifier");
        t.predicate_qualifier = scalar_attribute_text(instance, "predicate_qualifier");
        out.push_back(std::move(t));
    });
    return out;
}

std::vector<std::pair<std::string, std::string>> collect_entities(const Instance& root) {
    std::vector<std::pair<std::string, std::string>> out;
    walk_entities(root, [&](const EntityLeaf& leaf) {
        if (leaf.is_grounded()) out.emplace_back(leaf.grounded->curie, leaf.target_class);
    });
    return out;
}

// ---------------------------------------------------------------------------
// Corpus runner
// ---------------------------------------------------------------------------

CorpusRunResult run_corpus_extraction(const std::vector<CorpusDocument>& corpus, const Engine& engine,
                                      const std::string& class_name, const ChunkParams& params,
                                      int workers) {
    if (workers < 1) workers = 1;

    struct DocResult {
        std::vector<TripleRecord> triples;
        std::vector<std::string> warnings;
    };

    auto process = [&](const CorpusDocument& doc) {
        DocResult result;
        ChunkPlan plan = chunk_document(doc.title, doc.abstract_text, params);
        std::vector<std::vector<TripleRecord>> per_chunk;
        for (const auto& chunk : plan.chunks) {
            ExtractionResult extraction = engine.extract(class_name, chunk.text, doc.id);
            for (auto& w : extraction.warnings) result.warnings.push_back(doc.id + ": " + w);
            per_chunk.push_back(collect_triples(extraction.instance));
        }
        result.triples = merge_chunk_results(per_chunk);
        return result;
    };

    std::vector<DocResult> results(corpus.size());
    size_t next = 0;
    while (next < corpus.size()) {
        size_t batch = std::min(static_cast<size_t>(workers), corpus.size() - next);
        std::vector<std::future<DocResult>> futures;
        for (size_t i = 0; i < batch; ++i)
            futures.push_back(std::async(std::launch::async, process, std::cref(corpus[next + i])));
        for (size_t i = 0; i < batch; ++i) results[next + i] = futures[i].get();
        next += batch;
    }

    // Deterministic merge order: sort documents by id, keep per-document
    // triple order.
    std::vector<size_t> order(corpus.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return corpus[a].id < corpus[b].id; });

    CorpusRunResult merged;
    std::vector<std::vector<TripleRecord>> all;
    for (size_t idx : order) {
        all.push_back(results[idx].triples);
        for (auto& w : results[idx].warnings) merged.warnings.push_back(w);
    }
    merged.triples = merge_chunk_results(all);
    return merged;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

std::string render_report_json(const ScoreReport& report, const std::string& task) {
    nlohmann::ordered_json j;
    j["task"] = task;
    j["counts"] = {{"true_positives", report.true_positives},
                   {"false_positives", report.false_positives},
                   {"false_negatives", report.false_negatives}};
    j["precision"] = report.precision;
    j["recall"] = report.recall;
    j["f_score"] = report.f_score;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& row : report.per_document)
        rows.push_back({{"source_id", row.source_id}, {"tp", row.tp}, {"fp", row.fp}, {"fn", row.fn}});
    j["per_document"] = rows;
    return j.dump(2) + "\n";
}

std::string render_report_text(const ScoreReport& report, const std::string& task) {
    std::ostringstream out;
    char line[160];
    std::snprintf(line, sizeof(line), "%s: TP=%ld FP=%ld FN=%ld P=%.4f R=%.4f F=%.2f\n", task.c_str(),
                  report.true_positives, report.false_positives, report.false_negatives,
                  report.precision, report.recall, report.f_score);
    out << line;
    for (const auto& row : report.per_document) {
        std::snprintf(line, sizeof(line), "  %-12s TP=%ld FP=%ld FN=%ld\n", row.source_id.c_str(), row.tp,
                      row.fp, row.fn);
        out << line;
    }
    return out.str();
}

} // namespace spires
