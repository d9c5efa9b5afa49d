// Regenerates the derived fixtures: replay cassettes (keyed by prompt
// digest), the large grounding lexicons with their expected-pair files, and
// the golden renderings. Run from the repo root after changing the prompt
// format, the fixture schemas, or the canned completions:
//
//   ./build/tools/spires-gen-fixtures [fixtures-dir]

#include "spires/emit.hpp"
#include "spires/engine.hpp"
#include "spires/eval.hpp"
#include "spires/grounding.hpp"
#include "spires/llm.hpp"
#include "spires/prompt.hpp"
#include "spires/schema.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

using namespace spires;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
    std::cout << "wrote " << path << "\n";
}

void add_entry(Cassette& cassette, const Schema& schema, const std::string& class_name,
               const std::string& text, const std::string& completion) {
    cassette.entries[generate_prompt(schema, class_name, text).input_digest] = completion;
}

Cassette make_recipe_cassette(const Schema& schema, const std::string& spaghetti_text) {
    Cassette c;
    c.metadata.model_id = "gpt-3.5-turbo";
    c.metadata.created_at = "2026-08-10T00:00:00Z";

    add_entry(c, schema, "Ingredient", "garlic powder (2 tablespoons)",
              "food_item: garlic powder\namount: 2 tablespoons");
    add_entry(c, schema, "Quantity", "2 tablespoons", "value: 2\nunit: tablespoons");

    add_entry(c, schema, "Recipe", spaghetti_text,
              "label: Simple Spaghetti\n"
              "description: A quick pasta dish with garlic.\n"
              "categories: pasta dish\n"
              "steps: boil the spaghetti in a large pot; mix the chopped onion and garlic powder into "
              "the sauce\n"
              "ingredients: spaghetti (200 grams); garlic powder (2 tablespoons)");
    add_entry(c, schema, "Step", "boil the spaghetti in a large pot",
              "action: boil\ninputs: spaghetti\noutputs: cooked spaghetti\nutensils: large pot");
    add_entry(c, schema, "Step", "mix the chopped onion and garlic powder into the sauce",
              "action: mix\ninputs: chopped onion; garlic powder\noutputs: garlic sauce\nutensils: None");
    add_entry(c, schema, "Ingredient", "spaghetti (200 grams)",
              "food_item: spaghetti\namount: 200 grams");
    add_entry(c, schema, "Quantity", "200 grams", "value: 200\nunit: grams");
    return c;
}

struct CtdDoc {
    std::string id;
    std::string root_completion;
    std::vector<std::pair<std::string, std::string>> associations; // token -> completion
};

Cassette make_ctd_cassette(const Schema& schema, const std::vector<CorpusDocument>& corpus) {
    const std::string root_class = "ChemicalToDiseaseDocument";
    const std::string assoc_class = "ChemicalToDiseaseAssociation";

    auto assoc = [](const std::string& subject, const std::string& object,
                    const std::string& subject_qualifier, const std::string& object_qualifier,
                    const std::string& predicate_qualifier) {
        return "subject: " + subject + "\npredicate: INDUCES\nobject: " + object +
               "\nsubject_qualifier: " + subject_qualifier + "\nobject_qualifier: " + object_qualifier +
               "\npredicate_qualifier: " + predicate_qualifier;
    };

    std::map<std::string, CtdDoc> docs;
    {
        CtdDoc d;
        d.id = "2160002";
        std::string t1 = "cromakalim induces vasodilation of the large and small coronary vessels";
        std::string t2 = "pinacidil induces vasodilation of the large and small coronary vessels";
        d.root_completion = "associations: " + t1 + "; " + t2;
        d.associations = {
            {t1, assoc("cromakalim", "vasodilation", "None", "large and small coronary vessels", "None")},
            {t2, assoc("pinacidil", "vasodilation", "None", "large and small coronary vessels", "None")},
        };
        docs[d.id] = d;
    }
    {
        CtdDoc d;
        d.id = "19154241";
        std::string t1 = "chronic lithium therapy induces hypercalcemia";
        d.root_completion = "associations: " + t1;
        d.associations = {{t1, assoc("lithium", "hypercalcemia", "Chronic", "None", "None")}};
        docs[d.id] = d;
    }
    {
        CtdDoc d;
        d.id = "10327032";
        std::string t1 = "fluorouracil induces transient hyperammonemic encephalopathy";
        d.root_completion = "associations: " + t1;
        d.associations = {
            {t1, assoc("fluorouracil", "hyperammonemic encephalopathy", "None", "Transient", "None")}};
        docs[d.id] = d;
    }
    {
        CtdDoc d;
        d.id = "900001";
        std::string t1 = "maintenance lithium treatment induces hypercalcemia";
        d.root_completion = "associations: " + t1;
        d.associations = {{t1, assoc("lithium", "hypercalcemia", "None", "None", "None")}};
        docs[d.id] = d;
    }
    {
        CtdDoc d;
        d.id = "900002";
        std::string t1 = "aspirin induces hypercalcemia";
        std::string t2 = "aspirin does not induce hypotension";
        d.root_completion = "associations: " + t1 + "; " + t2;
        d.associations = {
            {t1, assoc("aspirin", "hypercalcemia", "None", "None", "None")},
            {t2, assoc("aspirin", "hypotension", "None", "None", "NOT")},
        };
        docs[d.id] = d;
    }

    Cassette c;
    c.metadata.model_id = "gpt-3.5-turbo";
    c.metadata.created_at = "2026-08-10T00:00:00Z";

    for (const auto& doc : corpus) {
        const CtdDoc& canned = docs.at(doc.id);
        // Entries for the no-chunking text and for every chunk under the
        // window/overlap settings exercised by the tests.
        std::vector<ChunkParams> variants = {{false, 1500, 200}, {true, 1500, 200}, {true, 160, 40}};
        for (const auto& params : variants) {
            ChunkPlan plan = chunk_document(doc.title, doc.abstract_text, params);
            for (const auto& chunk : plan.chunks)
                add_entry(c, schema, root_class, chunk.text, canned.root_completion);
        }
        for (const auto& [token, completion] : canned.associations)
            add_entry(c, schema, assoc_class, token, completion);
    }
    return c;
}

struct VocabularyPlan {
    std::string prefix;
    std::string id_format; // printf format taking one int
    int id_base;
    std::vector<std::string> first;
    std::vector<std::string> second;
    std::vector<std::string> third; // empty -> two-word labels
    std::pair<std::string, std::string> pinned; // fixed first entry (curie, label)
};

void generate_vocabulary(const VocabularyPlan& plan, const std::string& lexicon_path,
                         const std::string& pairs_path) {
    std::ostringstream lexicon, pairs;
    for (int i = 0; i < 100; ++i) {
        std::string curie, label;
        if (i == 0 && !plan.pinned.first.empty()) {
            curie = plan.pinned.first;
            label = plan.pinned.second;
        } else {
            char local[32];
            std::snprintf(local, sizeof(local), plan.id_format.c_str(), plan.id_base + i);
            curie = plan.prefix + ":" + local;
            label = plan.first[i % 10] + " " + plan.second[(i / 10) % 10];
            if (!plan.third.empty()) label += " " + plan.third[(i * 7) % 10];
        }
        lexicon << curie << '\t' << label << '\n';
        pairs << label << '\t' << curie << '\n';
    }
    write_file(lexicon_path, lexicon.str());
    write_file(pairs_path, pairs.str());
}

} // namespace

int main(int argc, char** argv) {
    std::string fixtures = argc > 1 ? argv[1] : "fixtures";
    try {
        Schema recipe = load_schema_file(fixtures + "/schemas/recipe.schema");
        Schema ctd = load_schema_file(fixtures + "/schemas/ctd.schema");
        std::string spaghetti_text = read_file(fixtures + "/texts/spaghetti.txt");
        std::vector<CorpusDocument> corpus = load_corpus_file(fixtures + "/corpus/ctd_corpus.tsv");

        Cassette recipe_cassette = make_recipe_cassette(recipe, spaghetti_text);
        save_cassette_file(recipe_cassette, fixtures + "/cassettes/recipe.yaml");
        std::cout << "wrote " << fixtures << "/cassettes/recipe.yaml ("
                  << recipe_cassette.entries.size() << " entries)\n";

        Cassette ctd_cassette = make_ctd_cassette(ctd, corpus);
        save_cassette_file(ctd_cassette, fixtures + "/cassettes/ctd.yaml");
        std::cout << "wrote " << fixtures << "/cassettes/ctd.yaml (" << ctd_cassette.entries.size()
                  << " entries)\n";

        generate_vocabulary(
            {"GO", "%07d", 900000,
             {"alpha", "beta", "gamma", "delta", "distal", "proximal", "soluble", "membrane", "nuclear",
              "cytosolic"},
             {"kinase", "transferase", "hydrolase", "reductase", "synthase", "isomerase", "ligase",
              "phosphatase", "oxidase", "permease"},
             {"activity", "binding", "regulation", "transport", "assembly", "localization", "catalysis",
              "signaling", "maintenance", "biogenesis"},
             {"GO:0008907", "integrase activity"}},
            fixtures + "/lexicons/go.tsv", fixtures + "/eval/go_pairs.tsv");
        generate_vocabulary(
            {"EMAPA", "%05d", 90000,
             {"cranial", "caudal", "dorsal", "ventral", "medial", "lateral", "anterior", "posterior",
              "proximal", "distal"},
             {"forelimb", "hindlimb", "somite", "neural", "branchial", "optic", "otic", "cardiac",
              "hepatic", "renal"},
             {"bud", "vesicle", "plate", "tube", "ridge", "mesenchyme", "epithelium", "groove", "pit",
              "fold"},
             {}},
            fixtures + "/lexicons/emapa.tsv", fixtures + "/eval/emapa_pairs.tsv");
        generate_vocabulary(
            {"MONDO", "%07d", 8800000,
             {"familial", "sporadic", "juvenile", "adult-onset", "congenital", "acquired", "chronic",
              "acute", "recessive", "dominant"},
             {"cardiopathy", "neuropathy", "nephropathy", "hepatopathy", "dermatopathy", "myopathy",
              "osteopathy", "pneumopathy", "enteropathy", "retinopathy"},
             {},
             {}},
            fixtures + "/lexicons/mondo.tsv", fixtures + "/eval/mondo_pairs.tsv");

        // Golden renderings come from a real pipeline run over the recipe
        // cassette with deterministic metadata.
        Grounder grounder;
        for (const char* name : {"foodon", "ucum", "wikidata", "dbpedia"})
            grounder.add_lexicon(std::make_shared<Lexicon>(
                load_lexicon_file(fixtures + "/lexicons/" + name + ".tsv")));
        grounder.prepare(recipe);

        ReplayBackend backend(recipe_cassette);
        Engine engine(recipe, backend, &grounder);
        ExtractionResult result = engine.extract("Recipe", spaghetti_text, "spaghetti");

        InstanceDocument doc;
        doc.root = result.instance;
        doc.schema_name = recipe.name;
        doc.metadata.model_id = "gpt-3.5-turbo";
        doc.metadata.extracted_at = "1970-01-01T00:00:00Z";
        doc.metadata.warnings = result.warnings;

        write_file(fixtures + "/golden/spaghetti.yaml", emit_yaml(doc, recipe));
        write_file(fixtures + "/golden/spaghetti.json", emit_json(doc, recipe));
        write_file(fixtures + "/golden/spaghetti.ofn.txt", emit_axioms(doc, recipe).to_string());
    } catch (const std::exception& e) {
        std::cerr << "gen-fixtures failed: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
