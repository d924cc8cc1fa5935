// Batch frontend over the library: corpus -> vocabulary -> tokenized
// records -> datasets, bias tables and metric reports. Per-line work runs
// on a worker pool but results are reassembled in input order, so the
// thread count never changes output bytes. Logs are JSON lines on stderr;
// results go to files or stdout ("-").
//
// Exit codes: 0 success, 1 usage error, 2 data error.

#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "molfrag/dataset.hpp"
#include "molfrag/error.hpp"
#include "molfrag/evalmetrics.hpp"
#include "molfrag/fingerprint.hpp"
#include "molfrag/fragmine.hpp"
#include "molfrag/molgraph.hpp"
#include "molfrag/parallel.hpp"
#include "molfrag/rng.hpp"
#include "molfrag/simspace.hpp"

namespace {

using nlohmann::ordered_json;

void log_event(const ordered_json& j) { std::cerr << j.dump() << '\n'; }

// "-" selects stdout so results can be piped while the log stays on
// stderr.
std::ostream& open_output(const std::string& path, std::ofstream& file) {
  if (path == "-") return std::cout;
  file.open(path, std::ios::binary);
  if (!file) throw molfrag::IoError("cannot write " + path);
  return file;
}

struct GlobalOptions {
  std::uint64_t seed = 0;
  int threads = 0;  // 0 resolves to the hardware thread count
  std::uint64_t max_bad_lines = 0;
};

struct ParsedCorpus {
  std::vector<molfrag::CorpusLine> lines;
  std::vector<std::optional<molfrag::Molecule>> mols;  // nullopt: bad line
  std::vector<std::string> errors;                     // parse messages
  std::uint64_t bad = 0;
};

// Parses every corpus line in parallel. Bad lines are logged and, above
// the --max-bad-lines threshold, abort the run. With tolerate_all the
// caller reports failures in-band instead and no threshold applies.
ParsedCorpus parse_corpus(const std::string& path, const GlobalOptions& g,
                          bool tolerate_all = false) {
  ParsedCorpus pc;
  pc.lines = molfrag::read_corpus_file(path);
  pc.mols.resize(pc.lines.size());
  pc.errors.resize(pc.lines.size());
  molfrag::parallel_for(pc.lines.size(), g.threads, [&](std::size_t i) {
    try {
      pc.mols[i] = molfrag::parse_smiles(pc.lines[i].smiles);
    } catch (const molfrag::Error& e) {
      pc.errors[i] = e.what();
    }
  });
  for (std::size_t i = 0; i < pc.lines.size(); ++i) {
    if (pc.mols[i]) continue;
    ++pc.bad;
    if (!tolerate_all)
      log_event({{"event", "bad_line"},
                 {"line", pc.lines[i].line_no},
                 {"id", pc.lines[i].id},
                 {"error", pc.errors[i]}});
  }
  log_event({{"event", "corpus_loaded"},
             {"path", path},
             {"molecules", pc.lines.size() - pc.bad},
             {"bad_lines", pc.bad}});
  if (!tolerate_all && pc.bad > g.max_bad_lines)
    throw molfrag::FormatError(
        std::to_string(pc.bad) + " unparsable lines (limit " +
        std::to_string(g.max_bad_lines) + "), see bad_line log events");
  return pc;
}

int cmd_mine(const GlobalOptions& g, const std::string& input,
             const std::string& output, std::size_t n) {
  ParsedCorpus pc = parse_corpus(input, g);
  std::vector<molfrag::Molecule> mols;
  mols.reserve(pc.mols.size());
  for (auto& m : pc.mols)
    if (m) mols.push_back(std::move(*m));

  molfrag::MiningOptions opts;
  opts.threads = g.threads;
  opts.on_iteration = [](const molfrag::MineIteration& it) {
    log_event({{"event", "merge"},
               {"iteration", it.iteration},
               {"canon", it.canon},
               {"frequency", it.frequency},
               {"occurrences_merged", it.occurrences_merged},
               {"piece_count", it.piece_count},
               {"elapsed_ms", it.elapsed_ms}});
  };
  const molfrag::FragmentVocabulary vocab =
      molfrag::mine_vocabulary(mols, n, opts);
  if (vocab.truncated())
    log_event({{"event", "warning"},
               {"message", "no mergeable pair left before the target size"},
               {"entries", vocab.size()}});

  std::ofstream file;
  vocab.save_tsv(open_output(output, file));
  log_event({{"event", "vocabulary_written"},
             {"path", output},
             {"entries", vocab.size()},
             {"truncated", vocab.truncated()}});
  return 0;
}

int cmd_tokenize(const GlobalOptions& g, const std::string& input,
                 const std::string& vocab_path, const std::string& output,
                 molfrag::TokenMode mode) {
  const auto vocab = molfrag::FragmentVocabulary::load_tsv_file(vocab_path);
  ParsedCorpus pc = parse_corpus(input, g, /*tolerate_all=*/true);

  std::vector<char> failed(pc.lines.size(), 0);
  const auto rows = molfrag::ordered_parallel_map<std::string>(
      pc.lines.size(), g.threads, [&](std::size_t i) {
        const auto& line = pc.lines[i];
        if (!pc.mols[i]) {
          failed[i] = 1;
          return ordered_json{{"id", line.id}, {"error", pc.errors[i]}}
              .dump();
        }
        try {
          const molfrag::Decomposition d =
              molfrag::decompose(*pc.mols[i], vocab, line.id);
          molfrag::Rng rng = molfrag::Rng(g.seed).fork(i);
          const auto tokens = molfrag::fragment_tokens(d, mode, rng);
          ordered_json j;
          j["id"] = line.id;
          j["smiles"] = molfrag::write_smiles(*pc.mols[i]);
          j["tokens"] = tokens;
          ordered_json pieces = ordered_json::array();
          for (const auto& p : d.pieces)
            pieces.push_back(
                ordered_json{{"canon", p.canon}, {"atoms", p.atoms}});
          j["pieces"] = std::move(pieces);
          return j.dump();
        } catch (const molfrag::Error& e) {
          failed[i] = 1;
          return ordered_json{{"id", line.id}, {"error", e.what()}}.dump();
        }
      });

  std::ofstream file;
  std::ostream& out = open_output(output, file);
  for (const auto& r : rows) out << r << '\n';
  std::uint64_t n_err = 0;
  for (const char f : failed) n_err += static_cast<std::uint64_t>(f);
  log_event({{"event", "tokenized"},
             {"molecules", rows.size() - n_err},
             {"errors", n_err}});
  return 0;
}

int cmd_fingerprint(const GlobalOptions& g, const std::string& input,
                    const std::string& output, int nbits, int radius) {
  ParsedCorpus pc = parse_corpus(input, g);
  std::vector<std::string> ids;
  std::vector<const molfrag::Molecule*> mols;
  for (std::size_t i = 0; i < pc.lines.size(); ++i) {
    if (!pc.mols[i]) continue;
    ids.push_back(pc.lines[i].id);
    mols.push_back(&*pc.mols[i]);
  }
  const auto fps = molfrag::ordered_parallel_map<molfrag::BitFingerprint>(
      mols.size(), g.threads, [&](std::size_t i) {
        return molfrag::morgan_fingerprint(*mols[i], radius, nbits);
      });
  std::ofstream file;
  molfrag::save_fingerprints(open_output(output, file), ids, fps);
  log_event({{"event", "fingerprints_written"},
             {"path", output},
             {"count", fps.size()},
             {"nbits", nbits},
             {"radius", radius}});
  return 0;
}

int cmd_bias(const GlobalOptions& g, const std::vector<std::string>& features,
             const std::string& fingerprints, const std::string& output,
             const std::string& csv, bool exclude_diagonal) {
  std::vector<molfrag::SimilarityMatrix> mats;
  std::vector<std::string> first_ids;
  std::string first_label;
  auto check_ids = [&](std::vector<std::string> ids,
                       const std::string& label) {
    if (mats.empty()) {
      first_ids = std::move(ids);
      first_label = label;
    } else if (ids != first_ids) {
      throw molfrag::FormatError("encoding " + label +
                                 " lists different molecules than " +
                                 first_label);
    }
  };
  // File stems label the table; repeats get a numeric suffix so the
  // columns stay distinguishable.
  std::set<std::string> used;
  auto unique_label = [&](std::string label) {
    std::string candidate = label;
    for (int k = 2; used.count(candidate); ++k)
      candidate = label + "_" + std::to_string(k);
    used.insert(candidate);
    return candidate;
  };

  for (const auto& path : features) {
    const auto items = molfrag::load_features_file(path);
    std::vector<std::string> ids;
    ids.reserve(items.size());
    for (const auto& it : items) ids.push_back(it.id);
    const std::string label =
        unique_label(std::filesystem::path(path).stem().string());
    check_ids(std::move(ids), label);
    mats.push_back(molfrag::similarity_matrix(items, label, g.threads));
  }
  if (!fingerprints.empty()) {
    auto loaded = molfrag::load_fingerprints_file(fingerprints);
    std::vector<std::string> ids;
    std::vector<molfrag::BitFingerprint> fps;
    ids.reserve(loaded.size());
    fps.reserve(loaded.size());
    for (auto& [id, fp] : loaded) {
      ids.push_back(id);
      fps.push_back(std::move(fp));
    }
    const std::string label = unique_label("morgan");
    check_ids(std::move(ids), label);
    mats.push_back(molfrag::similarity_matrix(fps, label, g.threads));
  }
  if (mats.size() < 2) {
    std::cerr << "bias needs at least two encodings; pass --features "
                 "repeatedly and/or --fingerprints\n";
    return 1;
  }

  const auto report = molfrag::bias_report(mats, exclude_diagonal);
  std::ofstream file;
  report.write_tsv(open_output(output, file));
  if (!csv.empty()) {
    std::ofstream csv_file;
    report.write_csv(open_output(csv, csv_file));
  }
  log_event({{"event", "bias_written"},
             {"path", output},
             {"encodings", report.labels}});
  return 0;
}

struct TextEntry {
  std::string description;
  std::string question;
  std::string answer;
};

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> cols;
  std::size_t start = 0;
  for (;;) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      cols.push_back(line.substr(start));
      return cols;
    }
    cols.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

// TSV rows "id<TAB>description" or "id<TAB>question<TAB>answer"; one id
// may have both kinds of row.
std::unordered_map<std::string, TextEntry> load_text_file(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw molfrag::IoError("cannot read " + path);
  std::unordered_map<std::string, TextEntry> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto cols = split_tabs(line);
    TextEntry& entry = out[cols[0]];
    if (cols.size() == 2) {
      entry.description = cols[1];
    } else if (cols.size() == 3) {
      entry.question = cols[1];
      entry.answer = cols[2];
    } else {
      throw molfrag::FormatError(path + ":" + std::to_string(line_no) +
                                 ": expected 2 or 3 tab-separated columns");
    }
  }
  return out;
}

// TSV rows "id<TAB>kind<TAB>value" with kind one of the property names.
std::unordered_map<std::string, std::vector<molfrag::PropertyValue>>
load_properties_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw molfrag::IoError("cannot read " + path);
  std::unordered_map<std::string, std::vector<molfrag::PropertyValue>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto cols = split_tabs(line);
    const std::string where = path + ":" + std::to_string(line_no);
    if (cols.size() != 3)
      throw molfrag::FormatError(where +
                                 ": expected id, kind, value columns");
    const auto kind = molfrag::parse_property_kind(cols[1]);
    if (!kind)
      throw molfrag::FormatError(where + ": unknown property kind " +
                                 cols[1]);
    char* end = nullptr;
    const double value = std::strtod(cols[2].c_str(), &end);
    if (end != cols[2].c_str() + cols[2].size() || cols[2].empty())
      throw molfrag::FormatError(where + ": bad numeric value " + cols[2]);
    out[cols[0]].push_back({*kind, value});
  }
  return out;
}

int cmd_build(const GlobalOptions& g, const std::string& input,
              const std::string& vocab_path, const std::string& task_name,
              const std::string& props_path, const std::string& text_path,
              const std::string& exclude_path, const std::string& output) {
  const auto task = molfrag::parse_task(task_name);
  if (!task) throw molfrag::UnknownTask(task_name);
  const auto vocab = molfrag::FragmentVocabulary::load_tsv_file(vocab_path);
  std::unordered_map<std::string, std::vector<molfrag::PropertyValue>> props;
  if (!props_path.empty()) props = load_properties_file(props_path);
  std::unordered_map<std::string, TextEntry> text;
  if (!text_path.empty()) text = load_text_file(text_path);
  std::unordered_set<std::string> excluded;
  if (!exclude_path.empty())
    excluded = molfrag::load_exclusions_file(exclude_path);

  ParsedCorpus pc = parse_corpus(input, g);
  std::vector<std::string> rows(pc.lines.size());
  std::vector<std::string> failures(pc.lines.size());
  std::vector<char> skipped(pc.lines.size(), 0);
  molfrag::parallel_for(pc.lines.size(), g.threads, [&](std::size_t i) {
    if (!pc.mols[i]) return;
    const auto& line = pc.lines[i];
    try {
      if (!excluded.empty() &&
          excluded.count(molfrag::write_smiles(*pc.mols[i]))) {
        skipped[i] = 1;
        return;
      }
      molfrag::RecordInputs in;
      in.id = line.id;
      if (const auto it = text.find(line.id); it != text.end()) {
        in.description = it->second.description;
        in.question = it->second.question;
        in.answer = it->second.answer;
      }
      if (const auto it = props.find(line.id); it != props.end())
        in.properties = it->second;
      // Fork by corpus position, not output position, so one bad line
      // upstream cannot reshuffle every later record.
      molfrag::Rng rng = molfrag::Rng(g.seed).fork(i);
      const auto record =
          molfrag::build_record(*pc.mols[i], *task, in, vocab, rng);
      rows[i] = molfrag::record_to_json(record);
    } catch (const molfrag::Error& e) {
      failures[i] = e.what();
    }
  });

  std::ofstream file;
  std::ostream& out = open_output(output, file);
  std::uint64_t written = 0, failed = 0, left_out = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].empty()) {
      out << rows[i] << '\n';
      ++written;
    } else if (!failures[i].empty()) {
      ++failed;
      log_event({{"event", "record_error"},
                 {"id", pc.lines[i].id},
                 {"error", failures[i]}});
    } else if (skipped[i]) {
      ++left_out;
    }
  }
  log_event({{"event", "dataset_written"},
             {"path", output},
             {"task", task_name},
             {"records", written},
             {"record_errors", failed},
             {"excluded", left_out}});
  if (written == 0)
    throw molfrag::EmptyCorpus("no dataset records could be built");
  return 0;
}

int cmd_eval(const std::string& pairs_path, const std::string& output,
             const std::string& json_path,
             const molfrag::EvalOptions& opts) {
  const auto pairs = molfrag::read_pairs_file(pairs_path);
  const auto report = molfrag::evaluate_pairs(pairs, opts);
  std::ofstream file;
  report.write_tsv(open_output(output, file));
  if (!json_path.empty()) {
    std::ofstream json_file;
    report.write_json(open_output(json_path, json_file));
  }
  log_event({{"event", "evaluated"},
             {"pairs", report.count},
             {"invalid", report.invalid_count}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Fragment vocabulary mining, tokenization, dataset construction and "
      "generation metrics for SMILES corpora"};
  app.require_subcommand(1);

  GlobalOptions g;
  app.add_option("--seed", g.seed, "Random seed")
      ->envname("MOLFRAG_SEED")
      ->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads, 0 for all cores")
      ->envname("MOLFRAG_THREADS")
      ->capture_default_str();
  app.add_option("--max-bad-lines", g.max_bad_lines,
                 "Unparsable corpus lines tolerated before the run aborts")
      ->envname("MOLFRAG_MAX_BAD_LINES")
      ->capture_default_str();

  auto* mine =
      app.add_subcommand("mine", "Mine a fragment vocabulary from a corpus");
  mine->fallthrough();
  std::string mine_in, mine_out = "-";
  std::size_t mine_n = 0;
  mine->add_option("-i,--input", mine_in,
                   "Corpus file, one SMILES per line with an optional "
                   "tab-separated id")
      ->required();
  mine->add_option("-n,--size", mine_n, "Target vocabulary size")->required();
  mine->add_option("-o,--output", mine_out, "Vocabulary TSV, - for stdout")
      ->capture_default_str();

  auto* tokenize = app.add_subcommand(
      "tokenize", "Decompose a corpus against a vocabulary, JSONL out");
  tokenize->fallthrough();
  std::string tok_in, tok_vocab, tok_out = "-", tok_mode = "cot";
  tokenize->add_option("-i,--input", tok_in, "Corpus file")->required();
  tokenize->add_option("--vocab", tok_vocab, "Vocabulary TSV")->required();
  tokenize->add_option("-o,--output", tok_out, "JSONL path, - for stdout")
      ->capture_default_str();
  tokenize
      ->add_option("--mode", tok_mode,
                   "cot keeps every piece sorted, condition samples 1-3 "
                   "filtered fragments")
      ->check(CLI::IsMember({"cot", "condition"}))
      ->capture_default_str();

  auto* fingerprint = app.add_subcommand(
      "fingerprint", "Morgan fingerprints for a corpus, hex dump out");
  fingerprint->fallthrough();
  std::string fp_in, fp_out = "-";
  int fp_nbits = 2048, fp_radius = 2;
  fingerprint->add_option("-i,--input", fp_in, "Corpus file")->required();
  fingerprint
      ->add_option("-o,--output", fp_out, "Fingerprint dump, - for stdout")
      ->capture_default_str();
  fingerprint->add_option("--nbits", fp_nbits, "Fingerprint width in bits")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  fingerprint->add_option("--radius", fp_radius, "Neighborhood radius")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();

  auto* bias = app.add_subcommand(
      "bias", "Pearson table across similarity matrices of several "
              "molecular encodings");
  bias->fallthrough();
  std::vector<std::string> bias_features;
  std::string bias_fps, bias_out = "-", bias_csv;
  bool bias_exclude_diagonal = false;
  bias->add_option("--features", bias_features,
                   "Feature-vector file, repeatable; the file stem labels "
                   "the encoding")
      ->take_all();
  bias->add_option("--fingerprints", bias_fps,
                   "Fingerprint dump to include as the morgan encoding");
  bias->add_option("-o,--output", bias_out, "Correlation TSV, - for stdout")
      ->capture_default_str();
  bias->add_option("--csv", bias_csv,
                   "Also write the long-form CSV to this path");
  bias->add_flag("--exclude-diagonal", bias_exclude_diagonal,
                 "Leave the unit diagonal out of each correlation");

  auto* build = app.add_subcommand(
      "build", "Build JSONL task records from a corpus and side tables");
  build->fallthrough();
  std::string build_in, build_vocab, build_task, build_props, build_text,
      build_exclude, build_out = "-";
  build->add_option("-i,--input", build_in, "Corpus file")->required();
  build->add_option("--vocab", build_vocab, "Vocabulary TSV")->required();
  build
      ->add_option("--task", build_task,
                   "captioning, general_qa, property_qa, "
                   "affinity_prediction, desc_gen, reverse_design or "
                   "ligand_gen")
      ->required()
      ->check(CLI::IsMember({"captioning", "general_qa", "property_qa",
                             "affinity_prediction", "desc_gen",
                             "reverse_design", "ligand_gen"}));
  build->add_option("--properties", build_props,
                    "TSV of id, property kind, value");
  build->add_option("--text", build_text,
                    "TSV of id, description or id, question, answer");
  build->add_option("--exclude", build_exclude,
                    "SMILES list removed from the corpus after "
                    "canonicalization");
  build->add_option("-o,--output", build_out, "JSONL path, - for stdout")
      ->capture_default_str();

  auto* eval = app.add_subcommand(
      "eval", "Generation metrics over generated/reference SMILES pairs");
  eval->fallthrough();
  std::string eval_in, eval_out = "-", eval_json;
  molfrag::EvalOptions eval_opts;
  eval->add_option("-i,--input", eval_in,
                   "Pairs file, generated<TAB>reference per line")
      ->required();
  eval->add_option("-o,--output", eval_out, "Report TSV, - for stdout")
      ->capture_default_str();
  eval->add_option("--json", eval_json, "Also write the JSON report here");
  eval->add_flag("--atom-bleu", eval_opts.bleu_atom_tokens,
                 "BLEU over SMILES atom tokens instead of characters");
  eval->add_flag("--canonical-levenshtein", eval_opts.levenshtein_canonical,
                 "Edit distance between canonical forms where both parse");
  eval->add_flag("--drop-invalid", eval_opts.fts_drop_invalid,
                 "Leave invalid generations out of the fingerprint "
                 "similarity mean instead of scoring them zero");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (mine->parsed()) return cmd_mine(g, mine_in, mine_out, mine_n);
    if (tokenize->parsed())
      return cmd_tokenize(g, tok_in, tok_vocab, tok_out,
                          tok_mode == "cot" ? molfrag::TokenMode::Cot
                                            : molfrag::TokenMode::Condition);
    if (fingerprint->parsed())
      return cmd_fingerprint(g, fp_in, fp_out, fp_nbits, fp_radius);
    if (bias->parsed())
      return cmd_bias(g, bias_features, bias_fps, bias_out, bias_csv,
                      bias_exclude_diagonal);
    if (build->parsed())
      return cmd_build(g, build_in, build_vocab, build_task, build_props,
                       build_text, build_exclude, build_out);
    if (eval->parsed()) return cmd_eval(eval_in, eval_out, eval_json, eval_opts);
  } catch (const molfrag::Error& e) {
    log_event({{"event", "error"}, {"message", e.what()}});
    return 2;
  } catch (const std::exception& e) {
    log_event({{"event", "error"}, {"message", e.what()}});
    return 2;
  }
  return 1;
}
