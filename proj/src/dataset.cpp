#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>

#include "json.hpp"
#include "molfrag/dataset.hpp"
#include "molfrag/error.hpp"

namespace molfrag {

namespace {

constexpr std::array<std::pair<PropertyKind, std::string_view>, 11> kKinds{{
    {PropertyKind::Logp, "logp"},
    {PropertyKind::Qed, "qed"},
    {PropertyKind::Sas, "sas"},
    {PropertyKind::Docking, "docking"},
    {PropertyKind::Weight, "weight"},
    {PropertyKind::Tpsa, "tpsa"},
    {PropertyKind::Complexity, "complexity"},
    {PropertyKind::Homo, "homo"},
    {PropertyKind::Lumo, "lumo"},
    {PropertyKind::Gap, "gap"},
    {PropertyKind::Scf, "scf"},
}};

constexpr std::array<std::pair<Task, std::string_view>, 7> kTasks{{
    {Task::Captioning, "captioning"},
    {Task::GeneralQa, "general_qa"},
    {Task::PropertyQa, "property_qa"},
    {Task::AffinityPrediction, "affinity_prediction"},
    {Task::DescGen, "desc_gen"},
    {Task::ReverseDesign, "reverse_design"},
    {Task::LigandGen, "ligand_gen"},
}};

const std::string kTemplates[7] = {
    // captioning
    "Please describe the molecule: Molecular geometric features are: "
    "{Features}. Molecular SMILES is {SMILES}. Molecular fragments are "
    "{Fragments}.",
    // general_qa
    "{Question}. Molecular geometric features are: {Features}. Molecular "
    "SMILES is {SMILES}. Molecular fragments are {Fragments}.",
    // property_qa
    "{Question}. Molecular geometric features are: {Features}. Molecular "
    "SMILES is {SMILES}. Molecular fragments are {Fragments}.",
    // affinity_prediction
    "I am interested in the docking score of the molecule to Protein 4lde, "
    "could you tell me what it is? If uncertain, provide an estimate. "
    "Respond with the numerical value only. Molecular geometric features "
    "are: {Features}. Molecular SMILES is {SMILES}. Molecular fragments are "
    "{Fragments}.",
    // desc_gen
    "Please give me molecular fragments based on the description. And then "
    "give me the molecular SMILES based on both the fragments and the "
    "description. The description is: {Description}",
    // reverse_design
    "There are some conditions, including logp (the hydrophobicity and "
    "solubility balance), qed (the drug-likeness), sas (the synthetic "
    "accessibility score), and the fragments (include specific fragments). "
    "Now please design a molecule under the given constraints: The molecule "
    "should have these fragments {Fragments}. The molecule should have a "
    "{Property Type} value of {Property Value}.",
    // ligand_gen
    "Please give me molecular fragments based on the description. And then "
    "give me the molecular SMILES based on both the fragments and the "
    "description. The description is: The docking score of the molecule to "
    "Protein 4lde is {Value}.",
};

const std::string kReverseDesignPropertyOnly =
    "There are some conditions, including logp (the hydrophobicity and "
    "solubility balance), qed (the drug-likeness), sas (the synthetic "
    "accessibility score), and the fragments (include specific fragments). "
    "Now please design a molecule under the given constraints: The molecule "
    "should have a {Property Type} value of {Property Value}.";

constexpr std::string_view kKnownPlaceholders[] = {
    "Features",      "SMILES",         "Fragments", "Question",
    "Description",   "Property Type",  "Property Value", "Value",
};

constexpr std::string_view kFeaturesSentinel = "<FEATURES>";

// Alternating literal / placeholder pieces of a template.
struct Segment {
  bool placeholder;
  std::string text;
};

std::vector<Segment> split_template(const std::string& tmpl) {
  std::vector<Segment> segs;
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const std::size_t open = tmpl.find('{', pos);
    if (open == std::string::npos) {
      segs.push_back({false, tmpl.substr(pos)});
      break;
    }
    if (open > pos) segs.push_back({false, tmpl.substr(pos, open - pos)});
    const std::size_t close = tmpl.find('}', open);
    if (close == std::string::npos)
      throw FormatError("unterminated placeholder in template");
    const std::string name = tmpl.substr(open + 1, close - open - 1);
    if (std::find(std::begin(kKnownPlaceholders), std::end(kKnownPlaceholders),
                  name) == std::end(kKnownPlaceholders))
      throw FormatError("unknown placeholder {" + name + "}");
    segs.push_back({true, name});
    pos = close + 1;
  }
  return segs;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

const PropertyValue* find_property(const std::vector<PropertyValue>& props,
                                   PropertyKind kind) {
  for (const PropertyValue& p : props)
    if (p.kind == kind) return &p;
  return nullptr;
}

}  // namespace

std::string_view property_kind_name(PropertyKind k) {
  for (const auto& [kind, name] : kKinds)
    if (kind == k) return name;
  return "";
}

std::optional<PropertyKind> parse_property_kind(std::string_view name) {
  for (const auto& [kind, n] : kKinds)
    if (n == name) return kind;
  return std::nullopt;
}

PropertyValue quantize_property(const PropertyValue& p) {
  double v = p.value;
  switch (p.kind) {
    case PropertyKind::Logp:
    case PropertyKind::Sas:
      v = std::round(v);
      break;
    case PropertyKind::Qed:
      v = std::round(v * 10.0) / 10.0;
      break;
    case PropertyKind::Docking:
      v = std::clamp(std::round(v), -10.0, -5.0);
      break;
    default:
      throw UnsupportedKind("no quantization grid for property '" +
                            std::string(property_kind_name(p.kind)) + "'");
  }
  return {p.kind, v + 0.0};  // normalizes -0.0
}

bool validity_range_check(PropertyKind kind, double value) {
  switch (kind) {
    case PropertyKind::Weight:
      return value > 0.0 && value < 4000.0;
    case PropertyKind::Logp:
      return value > -30.0 && value < 50.0;
    case PropertyKind::Tpsa:
      return value >= 0.0 && value < 2000.0;
    case PropertyKind::Complexity:
      return value >= 0.0 && value <= 10000.0;
    case PropertyKind::Homo:
    case PropertyKind::Lumo:
    case PropertyKind::Gap:
      return value > -20.0 && value < 20.0;
    case PropertyKind::Scf:
      return value > -50.0 && value < 0.0;
    default:
      throw UnknownKind("no sanctioned range for property '" +
                        std::string(property_kind_name(kind)) + "'");
  }
}

std::string format_property_value(const PropertyValue& p) {
  char buf[32];
  if (p.kind == PropertyKind::Docking)
    std::snprintf(buf, sizeof buf, "%d", static_cast<int>(p.value));
  else
    std::snprintf(buf, sizeof buf, "%.1f", p.value);
  return buf;
}

std::string_view task_name(Task t) {
  for (const auto& [task, name] : kTasks)
    if (task == t) return name;
  return "";
}

std::optional<Task> parse_task(std::string_view name) {
  for (const auto& [task, n] : kTasks)
    if (n == name) return task;
  return std::nullopt;
}

std::string_view fragment_role_name(FragmentRole r) {
  return r == FragmentRole::Cot ? "cot" : "prompt";
}

FragmentRole fragment_role_for(Task t) {
  switch (t) {
    case Task::DescGen:
    case Task::LigandGen:
      return FragmentRole::Cot;
    default:
      return FragmentRole::Prompt;
  }
}

const std::string& prompt_template(Task t) {
  return kTemplates[static_cast<int>(t)];
}

const std::string& reverse_design_property_only_template() {
  return kReverseDesignPropertyOnly;
}

std::string render_template(const std::string& tmpl,
                            const std::map<std::string, std::string>& fields) {
  const auto segs = split_template(tmpl);
  std::string out;
  std::unordered_set<std::string> used;
  for (const Segment& s : segs) {
    if (!s.placeholder) {
      out += s.text;
      continue;
    }
    if (s.text == "Features") {
      out += kFeaturesSentinel;
      used.insert(s.text);
      continue;
    }
    const auto it = fields.find(s.text);
    if (it == fields.end() || it->second.empty())
      throw MissingPlaceholder("placeholder {" + s.text + "} has no value");
    out += it->second;
    used.insert(s.text);
  }
  for (const auto& [key, value] : fields) {
    (void)value;
    if (!used.count(key))
      throw FormatError("field '" + key + "' is not used by the template");
  }
  return out;
}

std::string render_prompt(Task t,
                          const std::map<std::string, std::string>& fields) {
  return render_template(prompt_template(t), fields);
}

std::string render_prompt(std::string_view task,
                          const std::map<std::string, std::string>& fields) {
  const auto t = parse_task(task);
  if (!t) throw UnknownTask("unknown task '" + std::string(task) + "'");
  return render_prompt(*t, fields);
}

std::optional<std::map<std::string, std::string>> match_prompt(
    Task t, std::string_view rendered) {
  const auto segs = split_template(prompt_template(t));
  std::map<std::string, std::string> fields;
  std::size_t pos = 0;
  for (std::size_t si = 0; si < segs.size(); ++si) {
    const Segment& s = segs[si];
    if (!s.placeholder) {
      if (rendered.compare(pos, s.text.size(), s.text) != 0)
        return std::nullopt;
      pos += s.text.size();
      continue;
    }
    std::size_t end;
    if (si + 1 < segs.size()) {
      // Literal always follows a placeholder in these templates.
      end = rendered.find(segs[si + 1].text, pos);
      if (end == std::string_view::npos) return std::nullopt;
    } else {
      end = rendered.size();
    }
    if (end == pos) return std::nullopt;
    fields[s.text] = std::string(rendered.substr(pos, end - pos));
    pos = end;
  }
  if (pos != rendered.size()) return std::nullopt;
  return fields;
}

DatasetRecord build_record(const Molecule& m, Task task,
                           const RecordInputs& in,
                           const FragmentVocabulary& vocab, Rng& rng) {
  DatasetRecord r;
  r.id = in.id;
  r.task = task;
  r.role = fragment_role_for(task);
  r.smiles = write_smiles(m);

  const Decomposition d = decompose(m, vocab, in.id);

  switch (task) {
    case Task::Captioning:
    case Task::GeneralQa:
    case Task::PropertyQa:
    case Task::AffinityPrediction: {
      const auto tokens = fragment_tokens(d, TokenMode::Cot, rng);
      r.condition_fragments = tokens;
      std::map<std::string, std::string> fields = {
          {"SMILES", r.smiles}, {"Fragments", join_tokens(tokens)}};
      if (task == Task::GeneralQa || task == Task::PropertyQa)
        fields["Question"] = in.question;
      r.prompt = render_prompt(task, fields);
      if (task == Task::Captioning) {
        if (in.description.empty())
          throw MissingPlaceholder("captioning needs a description");
        r.target = in.description;
      } else if (task == Task::AffinityPrediction && in.answer.empty()) {
        const PropertyValue* dock =
            find_property(in.properties, PropertyKind::Docking);
        if (dock == nullptr)
          throw MissingPlaceholder(
              "affinity prediction needs an answer or a docking score");
        char buf[32];
        std::snprintf(buf, sizeof buf, "%g", dock->value);
        r.target = buf;
      } else {
        if (in.answer.empty())
          throw MissingPlaceholder("question answering needs an answer");
        r.target = in.answer;
      }
      break;
    }
    case Task::DescGen: {
      const auto tokens = fragment_tokens(d, TokenMode::Cot, rng);
      r.prompt = render_prompt(task, {{"Description", in.description}});
      r.target = join_tokens(tokens) + " " + r.smiles;
      break;
    }
    case Task::ReverseDesign: {
      const auto cond = fragment_tokens(d, TokenMode::Condition, rng);
      std::vector<PropertyValue> eligible;
      for (const PropertyValue& p : in.properties)
        if (p.kind == PropertyKind::Logp || p.kind == PropertyKind::Qed ||
            p.kind == PropertyKind::Sas)
          eligible.push_back(p);
      if (eligible.empty())
        throw MissingPlaceholder(
            "reverse design needs a logp, qed or sas property");
      const PropertyValue picked = quantize_property(
          eligible[rng.below(static_cast<std::uint64_t>(eligible.size()))]);
      r.condition_properties = {picked};
      r.condition_fragments = cond;
      std::map<std::string, std::string> fields = {
          {"Property Type", std::string(property_kind_name(picked.kind))},
          {"Property Value", format_property_value(picked)}};
      if (cond.empty()) {
        r.prompt = render_template(reverse_design_property_only_template(),
                                   fields);
      } else {
        fields["Fragments"] = join_tokens(cond);
        r.prompt = render_prompt(task, fields);
      }
      r.target = r.smiles;
      break;
    }
    case Task::LigandGen: {
      const PropertyValue* dock =
          find_property(in.properties, PropertyKind::Docking);
      if (dock == nullptr)
        throw MissingPlaceholder("ligand generation needs a docking score");
      const PropertyValue picked = quantize_property(*dock);
      r.condition_properties = {picked};
      r.prompt =
          render_prompt(task, {{"Value", format_property_value(picked)}});
      const auto tokens = fragment_tokens(d, TokenMode::Cot, rng);
      r.target = join_tokens(tokens) + " " + r.smiles;
      break;
    }
  }
  return r;
}

std::string record_to_json(const DatasetRecord& r) {
  nlohmann::ordered_json j;
  j["id"] = r.id;
  j["task"] = std::string(task_name(r.task));
  j["fragment_role"] = std::string(fragment_role_name(r.role));
  j["smiles"] = r.smiles;
  j["prompt"] = r.prompt;
  j["target"] = r.target;
  nlohmann::ordered_json props = nlohmann::ordered_json::array();
  for (const PropertyValue& p : r.condition_properties) {
    nlohmann::ordered_json pj;
    pj["kind"] = std::string(property_kind_name(p.kind));
    pj["value"] = p.value;
    props.push_back(std::move(pj));
  }
  j["conditions"]["properties"] = std::move(props);
  j["conditions"]["fragments"] = r.condition_fragments;
  return j.dump();
}

std::unordered_set<std::string> load_exclusions(std::istream& in) {
  std::unordered_set<std::string> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::size_t start = line.find_first_not_of(" \t");
    if (start == std::string::npos || line[start] == '#') continue;
    const std::size_t stop = line.find_last_not_of(" \t");
    const std::string smiles = line.substr(start, stop - start + 1);
    try {
      out.insert(canonical_smiles(smiles));
    } catch (const Error& e) {
      throw FormatError("exclusion list line " + std::to_string(line_no) +
                        ": " + e.what());
    }
  }
  return out;
}

std::unordered_set<std::string> load_exclusions_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open exclusion file: " + path);
  return load_exclusions(in);
}

}  // namespace molfrag
