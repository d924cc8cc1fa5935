#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "molfrag/dataset.hpp"
#include "molfrag/error.hpp"
#include "molfrag/evalmetrics.hpp"
#include "molfrag/fingerprint.hpp"
#include "molfrag/fragmine.hpp"
#include "molfrag/molgraph.hpp"
#include "molfrag/rng.hpp"
#include "molfrag/simspace.hpp"

namespace py = pybind11;

namespace {

molfrag::TokenMode token_mode(const std::string& mode) {
  if (mode == "cot") return molfrag::TokenMode::Cot;
  if (mode == "condition") return molfrag::TokenMode::Condition;
  throw py::value_error("mode must be 'cot' or 'condition'");
}

molfrag::PropertyKind property_kind(const std::string& name) {
  const auto kind = molfrag::parse_property_kind(name);
  if (!kind) throw py::value_error("unknown property kind: " + name);
  return *kind;
}

molfrag::Task task_from_name(const std::string& name) {
  const auto task = molfrag::parse_task(name);
  if (!task) throw py::value_error("unknown task: " + name);
  return *task;
}

}  // namespace

PYBIND11_MODULE(_molfrag, m) {
  m.doc() = "Fragment-based molecular tokenization and analysis toolkit";

  py::register_exception<molfrag::Error>(m, "MolfragError");

  // SMILES handling.
  m.def("canonical_smiles", &molfrag::canonical_smiles, py::arg("smiles"),
        "Canonical form of a SMILES string.");
  m.def("is_valid_smiles", &molfrag::is_valid_smiles, py::arg("smiles"),
        "True when the string parses as a molecule.");
  m.def(
      "molecular_weight",
      [](const std::string& smiles) {
        return molfrag::molecular_weight(molfrag::parse_smiles(smiles));
      },
      py::arg("smiles"), "Molecular weight including implicit hydrogens.");

  // Fragment vocabularies.
  py::class_<molfrag::VocabEntry>(m, "VocabEntry")
      .def_readonly("token_id", &molfrag::VocabEntry::token_id)
      .def_readonly("canon", &molfrag::VocabEntry::canon)
      .def_readonly("frequency", &molfrag::VocabEntry::frequency)
      .def_readonly("atom_count", &molfrag::VocabEntry::atom_count)
      .def("__repr__", [](const molfrag::VocabEntry& e) {
        std::ostringstream out;
        out << "VocabEntry(" << e.token_id << ", '" << e.canon << "', "
            << e.frequency << ")";
        return out.str();
      });

  py::class_<molfrag::FragmentVocabulary>(m, "FragmentVocabulary")
      .def_static("load", &molfrag::FragmentVocabulary::load_tsv_file,
                  py::arg("path"), "Read a vocabulary TSV file.")
      .def("save", &molfrag::FragmentVocabulary::save_tsv_file,
           py::arg("path"), "Write the vocabulary as TSV.")
      .def("entries", &molfrag::FragmentVocabulary::entries,
           py::return_value_policy::copy)
      .def("__len__", &molfrag::FragmentVocabulary::size)
      .def(
          "find",
          [](const molfrag::FragmentVocabulary& v, const std::string& canon)
              -> std::optional<molfrag::VocabEntry> {
            const auto* e = v.find(canon);
            if (!e) return std::nullopt;
            return *e;
          },
          py::arg("canon"), "Entry for a canonical fragment, or None.")
      .def_property_readonly("truncated",
                             &molfrag::FragmentVocabulary::truncated);

  m.def(
      "mine_vocabulary",
      [](const std::vector<std::string>& smiles, std::size_t target_size,
         int threads) {
        std::vector<molfrag::Molecule> corpus;
        corpus.reserve(smiles.size());
        for (const auto& s : smiles)
          corpus.push_back(molfrag::parse_smiles(s));
        molfrag::MiningOptions opt;
        opt.threads = threads;
        return molfrag::mine_vocabulary(corpus, target_size, opt);
      },
      py::arg("smiles"), py::arg("target_size"), py::arg("threads") = 1,
      "Mine a fragment vocabulary from a list of SMILES strings.");

  m.def(
      "decompose",
      [](const std::string& smiles, const molfrag::FragmentVocabulary& vocab,
         const std::string& id) {
        const auto d =
            molfrag::decompose(molfrag::parse_smiles(smiles), vocab, id);
        std::vector<std::pair<std::string, std::vector<std::uint32_t>>> out;
        out.reserve(d.pieces.size());
        for (const auto& piece : d.pieces)
          out.emplace_back(piece.canon, piece.atoms);
        return out;
      },
      py::arg("smiles"), py::arg("vocab"), py::arg("id") = "",
      "Vocabulary-guided decomposition: list of (canon, atom indices).");

  m.def(
      "fragment_tokens",
      [](const std::string& smiles, const molfrag::FragmentVocabulary& vocab,
         const std::string& mode, std::uint64_t seed) {
        const auto d = molfrag::decompose(molfrag::parse_smiles(smiles), vocab);
        molfrag::Rng rng(seed);
        return molfrag::fragment_tokens(d, token_mode(mode), rng);
      },
      py::arg("smiles"), py::arg("vocab"), py::arg("mode") = "cot",
      py::arg("seed") = 0,
      "Fragment tokens for a molecule: the full chain in 'cot' mode, a "
      "filtered sample in 'condition' mode.");

  // Fingerprints and similarity kernels.
  m.def(
      "morgan_fingerprint_hex",
      [](const std::string& smiles, int radius, std::size_t nbits) {
        return molfrag::morgan_fingerprint(molfrag::parse_smiles(smiles),
                                           radius, nbits)
            .to_hex();
      },
      py::arg("smiles"), py::arg("radius") = 2, py::arg("nbits") = 2048,
      "Folded circular fingerprint as a hex string.");
  m.def(
      "tanimoto",
      [](const std::string& hex_a, const std::string& hex_b) {
        return molfrag::tanimoto(molfrag::BitFingerprint::from_hex(hex_a),
                                 molfrag::BitFingerprint::from_hex(hex_b));
      },
      py::arg("hex_a"), py::arg("hex_b"),
      "Tanimoto similarity of two hex fingerprints of equal width.");
  m.def(
      "cosine",
      [](const std::vector<double>& a, const std::vector<double>& b) {
        return molfrag::cosine(a, b);
      },
      py::arg("a"), py::arg("b"));

  m.def(
      "encoding_bias",
      [](const std::map<std::string, std::vector<std::vector<double>>>&
             encodings,
         bool exclude_diagonal) {
        std::vector<molfrag::SimilarityMatrix> mats;
        std::vector<std::string> labels;
        for (const auto& [label, rows] : encodings) {
          std::vector<molfrag::FeatureVector> items;
          items.reserve(rows.size());
          for (std::size_t i = 0; i < rows.size(); ++i)
            items.push_back({std::to_string(i), rows[i]});
          mats.push_back(molfrag::similarity_matrix(items, label));
          labels.push_back(label);
        }
        const auto report = molfrag::bias_report(mats, exclude_diagonal);
        std::vector<std::vector<double>> table(report.k);
        for (std::size_t i = 0; i < report.k; ++i)
          for (std::size_t j = 0; j < report.k; ++j)
            table[i].push_back(report.at(i, j));
        py::dict out;
        out["labels"] = labels;
        out["pearson"] = table;
        return out;
      },
      py::arg("encodings"), py::arg("exclude_diagonal") = false,
      "Pairwise Pearson correlations between the cosine similarity "
      "matrices of several feature encodings, keyed by label.");

  // Property grids and prompt templates.
  m.def(
      "quantize_property",
      [](const std::string& kind, double value) {
        return molfrag::quantize_property({property_kind(kind), value}).value;
      },
      py::arg("kind"), py::arg("value"),
      "Snap a conditioning property onto its grid.");
  m.def(
      "validity_range_check",
      [](const std::string& kind, double value) {
        return molfrag::validity_range_check(property_kind(kind), value);
      },
      py::arg("kind"), py::arg("value"),
      "True when the value lies in the property's sanctioned range.");
  m.def(
      "render_prompt",
      [](const std::string& task,
         const std::map<std::string, std::string>& fields) {
        return molfrag::render_prompt(std::string_view(task), fields);
      },
      py::arg("task"), py::arg("fields"),
      "Fill the task's prompt template with the given fields.");

  m.def(
      "build_record_json",
      [](const std::string& smiles, const std::string& task,
         const molfrag::FragmentVocabulary& vocab, const std::string& id,
         const std::string& description, const std::string& question,
         const std::string& answer,
         const std::vector<std::pair<std::string, double>>& properties,
         std::uint64_t seed) {
        molfrag::RecordInputs in;
        in.id = id;
        in.description = description;
        in.question = question;
        in.answer = answer;
        for (const auto& [kind, value] : properties)
          in.properties.push_back({property_kind(kind), value});
        molfrag::Rng rng(seed);
        const auto rec = molfrag::build_record(molfrag::parse_smiles(smiles),
                                               task_from_name(task), in,
                                               vocab, rng);
        return molfrag::record_to_json(rec);
      },
      py::arg("smiles"), py::arg("task"), py::arg("vocab"),
      py::arg("id") = "", py::arg("description") = "",
      py::arg("question") = "", py::arg("answer") = "",
      py::arg("properties") = std::vector<std::pair<std::string, double>>{},
      py::arg("seed") = 0,
      "Build one dataset record and return it as a JSON line.");

  // Generation metrics.
  m.def(
      "levenshtein",
      [](const std::string& a, const std::string& b) {
        return molfrag::levenshtein(a, b);
      },
      py::arg("a"), py::arg("b"));
  m.def(
      "smiles_bleu",
      [](const std::vector<std::pair<std::string, std::string>>& pairs,
         bool atom_tokens) {
        std::vector<molfrag::GenerationPair> gp;
        gp.reserve(pairs.size());
        for (const auto& [gen, ref] : pairs) gp.push_back({gen, ref});
        return molfrag::smiles_bleu(gp, atom_tokens);
      },
      py::arg("pairs"), py::arg("atom_tokens") = false,
      "Corpus BLEU over (generated, reference) SMILES pairs.");
  m.def(
      "has_fragment",
      [](const std::string& molecule, const std::string& fragment) {
        return molfrag::has_fragment(molfrag::parse_smiles(molecule),
                                     molfrag::parse_smiles(fragment));
      },
      py::arg("molecule"), py::arg("fragment"),
      "True when the fragment occurs as a connected subgraph.");
  m.def(
      "fragment_satisfaction",
      [](const std::string& molecule,
         const std::vector<std::string>& required) {
        return molfrag::fragment_satisfaction(molfrag::parse_smiles(molecule),
                                              required);
      },
      py::arg("molecule"), py::arg("required"),
      "How many of the required fragment canons the molecule contains.");
  m.def(
      "evaluate_pairs",
      [](const std::vector<std::pair<std::string, std::string>>& pairs,
         bool atom_bleu, bool canonical_levenshtein, bool drop_invalid) {
        std::vector<molfrag::GenerationPair> gp;
        gp.reserve(pairs.size());
        for (const auto& [gen, ref] : pairs) gp.push_back({gen, ref});
        molfrag::EvalOptions opt;
        opt.bleu_atom_tokens = atom_bleu;
        opt.levenshtein_canonical = canonical_levenshtein;
        opt.fts_drop_invalid = drop_invalid;
        const auto report = molfrag::evaluate_pairs(gp, opt);
        py::dict metrics;
        for (const auto& [name, value] : report.metrics)
          metrics[py::str(name)] = value;
        py::dict out;
        out["count"] = report.count;
        out["invalid_count"] = report.invalid_count;
        out["metrics"] = metrics;
        return out;
      },
      py::arg("pairs"), py::arg("atom_bleu") = false,
      py::arg("canonical_levenshtein") = false,
      py::arg("drop_invalid") = false,
      "Full metric report over (generated, reference) pairs.");
}
