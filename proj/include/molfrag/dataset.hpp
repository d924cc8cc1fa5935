#ifndef MOLFRAG_DATASET_HPP
#define MOLFRAG_DATASET_HPP

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "molfrag/fragmine.hpp"
#include "molfrag/molgraph.hpp"
#include "molfrag/rng.hpp"

namespace molfrag {

enum class PropertyKind {
  Logp,
  Qed,
  Sas,
  Docking,
  Weight,
  Tpsa,
  Complexity,
  Homo,
  Lumo,
  Gap,
  Scf,
};

std::string_view property_kind_name(PropertyKind k);
std::optional<PropertyKind> parse_property_kind(std::string_view name);

struct PropertyValue {
  PropertyKind kind = PropertyKind::Logp;
  double value = 0.0;
};

// Snaps a property onto its condition grid: logp and sas to the nearest
// multiple of 1.0, qed to the nearest 0.1, docking to the nearest integer
// clamped into [-10, -5]. Ties round away from zero. Idempotent. Other
// kinds throw UnsupportedKind.
PropertyValue quantize_property(const PropertyValue& p);

// True when the value lies in the sanctioned range: weight (0,4000),
// logp (-30,50), tpsa [0,2000), complexity [0,10000], homo/lumo/gap
// (-20,20), scf (-50,0). Kinds without a range (qed, sas, docking) throw
// UnknownKind.
bool validity_range_check(PropertyKind kind, double value);

// Condition-grid rendering: docking as a plain integer, the other
// quantizable kinds with one decimal.
std::string format_property_value(const PropertyValue& p);

enum class Task {
  Captioning,
  GeneralQa,
  PropertyQa,
  AffinityPrediction,
  DescGen,
  ReverseDesign,
  LigandGen,
};

std::string_view task_name(Task t);
std::optional<Task> parse_task(std::string_view name);

enum class FragmentRole { Cot, Prompt };

std::string_view fragment_role_name(FragmentRole r);

// Where fragments sit for each task: generation from descriptions or
// docking scores emits them as chain-of-thought, everything else carries
// them in the prompt.
FragmentRole fragment_role_for(Task t);

// The verbatim prompt template for a task. Placeholders are spelled
// {Features}, {SMILES}, {Fragments}, {Question}, {Description},
// {Property Type}, {Property Value}, {Value}.
const std::string& prompt_template(Task t);

// Reverse-design wording without the fragment sentence, used when the
// condition filter leaves no fragments.
const std::string& reverse_design_property_only_template();

// Substitutes fields into a template. Every placeholder must have a
// non-empty value (MissingPlaceholder) and every field must be consumed
// (FormatError). {Features} always renders as the sentinel "<FEATURES>"
// and needs no entry.
std::string render_template(const std::string& tmpl,
                            const std::map<std::string, std::string>& fields);

std::string render_prompt(Task t,
                          const std::map<std::string, std::string>& fields);

// Name-keyed variant for callers holding a task string. Throws
// UnknownTask.
std::string render_prompt(std::string_view task,
                          const std::map<std::string, std::string>& fields);

// Recovers placeholder values from a rendered prompt by matching the
// template's literal segments left to right. Returns nullopt when the
// text does not fit the template.
std::optional<std::map<std::string, std::string>> match_prompt(
    Task t, std::string_view rendered);

// Raw per-molecule inputs accompanying the corpus line.
struct RecordInputs {
  std::string id;
  std::string description;  // captioning target, desc_gen condition
  std::string question;     // general_qa / property_qa
  std::string answer;       // comprehension-task target
  std::vector<PropertyValue> properties;  // unquantized
};

struct DatasetRecord {
  std::string id;
  Task task = Task::Captioning;
  std::string prompt;
  std::string target;
  FragmentRole role = FragmentRole::Prompt;
  std::string smiles;  // canonical form of the molecule
  std::vector<PropertyValue> condition_properties;  // quantized, as used
  std::vector<std::string> condition_fragments;     // tokens as used
};

// Assembles one record: decomposes the molecule, derives fragment tokens
// in the task's role, quantizes the conditioning properties, renders the
// prompt and picks the target. Reverse design samples 1-3 condition
// fragments first, then chooses one of the supplied logp/qed/sas
// properties with the same rng; when the condition filter removes every
// fragment the property-only prompt is used. Ligand generation requires a
// docking property. Affinity prediction falls back to the raw docking
// score when no answer text is supplied.
DatasetRecord build_record(const Molecule& m, Task task,
                           const RecordInputs& in,
                           const FragmentVocabulary& vocab, Rng& rng);

// One JSON object per line, stable key order.
std::string record_to_json(const DatasetRecord& r);

// Exclusion list: one SMILES per line ('#' comments and blanks skipped),
// canonicalized on load so spelling differences cannot leak through.
std::unordered_set<std::string> load_exclusions(std::istream& in);
std::unordered_set<std::string> load_exclusions_file(const std::string& path);

}  // namespace molfrag

#endif
