#include "molfrag/elements.hpp"

#include <array>
#include <unordered_map>

namespace molfrag {

namespace {

struct ElementRow {
  const char* symbol;
  double mass;
};

// Indexed by atomic number; conventional standard atomic weights, abridged
// to three decimals where an interval is published.
constexpr std::array<ElementRow, 104> kElements = {{
    {"", 0.0},       {"H", 1.008},    {"He", 4.003},   {"Li", 6.94},
    {"Be", 9.012},   {"B", 10.81},    {"C", 12.011},   {"N", 14.007},
    {"O", 15.999},   {"F", 18.998},   {"Ne", 20.180},  {"Na", 22.990},
    {"Mg", 24.305},  {"Al", 26.982},  {"Si", 28.085},  {"P", 30.974},
    {"S", 32.06},    {"Cl", 35.45},   {"Ar", 39.948},  {"K", 39.098},
    {"Ca", 40.078},  {"Sc", 44.956},  {"Ti", 47.867},  {"V", 50.942},
    {"Cr", 51.996},  {"Mn", 54.938},  {"Fe", 55.845},  {"Co", 58.933},
    {"Ni", 58.693},  {"Cu", 63.546},  {"Zn", 65.38},   {"Ga", 69.723},
    {"Ge", 72.630},  {"As", 74.922},  {"Se", 78.971},  {"Br", 79.904},
    {"Kr", 83.798},  {"Rb", 85.468},  {"Sr", 87.62},   {"Y", 88.906},
    {"Zr", 91.224},  {"Nb", 92.906},  {"Mo", 95.95},   {"Tc", 97.0},
    {"Ru", 101.07},  {"Rh", 102.906}, {"Pd", 106.42},  {"Ag", 107.868},
    {"Cd", 112.414}, {"In", 114.818}, {"Sn", 118.710}, {"Sb", 121.760},
    {"Te", 127.60},  {"I", 126.904},  {"Xe", 131.293}, {"Cs", 132.905},
    {"Ba", 137.327}, {"La", 138.905}, {"Ce", 140.116}, {"Pr", 140.908},
    {"Nd", 144.242}, {"Pm", 145.0},   {"Sm", 150.36},  {"Eu", 151.964},
    {"Gd", 157.25},  {"Tb", 158.925}, {"Dy", 162.500}, {"Ho", 164.930},
    {"Er", 167.259}, {"Tm", 168.934}, {"Yb", 173.045}, {"Lu", 174.967},
    {"Hf", 178.486}, {"Ta", 180.948}, {"W", 183.84},   {"Re", 186.207},
    {"Os", 190.23},  {"Ir", 192.217}, {"Pt", 195.084}, {"Au", 196.967},
    {"Hg", 200.592}, {"Tl", 204.38},  {"Pb", 207.2},   {"Bi", 208.980},
    {"Po", 209.0},   {"At", 210.0},   {"Rn", 222.0},   {"Fr", 223.0},
    {"Ra", 226.0},   {"Ac", 227.0},   {"Th", 232.038}, {"Pa", 231.036},
    {"U", 238.029},  {"Np", 237.0},   {"Pu", 244.0},   {"Am", 243.0},
    {"Cm", 247.0},   {"Bk", 247.0},   {"Cf", 251.0},   {"Es", 252.0},
    {"Fm", 257.0},   {"Md", 258.0},   {"No", 259.0},   {"Lr", 266.0},
}};

const std::unordered_map<std::string_view, int>& symbol_index() {
  static const auto* map = [] {
    auto* m = new std::unordered_map<std::string_view, int>();
    for (int z = 1; z < static_cast<int>(kElements.size()); ++z)
      m->emplace(kElements[z].symbol, z);
    return m;
  }();
  return *map;
}

struct ValenceRow {
  int z;
  int list[4];  // ascending, 0-terminated
};

constexpr ValenceRow kValences[] = {
    {1, {1, 0}},        {5, {3, 0}},        {6, {4, 0}},
    {7, {3, 5, 0}},     {8, {2, 0}},        {9, {1, 0}},
    {14, {4, 0}},       {15, {3, 5, 0}},    {16, {2, 4, 6, 0}},
    {17, {1, 0}},       {33, {3, 5, 0}},    {34, {2, 4, 6, 0}},
    {35, {1, 0}},       {52, {2, 4, 6, 0}}, {53, {1, 0}},
};

const ValenceRow* valence_row(int z) {
  for (const auto& row : kValences)
    if (row.z == z) return &row;
  return nullptr;
}

}  // namespace

int atomic_number(std::string_view symbol) {
  const auto& idx = symbol_index();
  auto it = idx.find(symbol);
  return it == idx.end() ? 0 : it->second;
}

const std::string& element_symbol(int z) {
  static const std::string empty;
  static const auto* symbols = [] {
    auto* v = new std::array<std::string, kElements.size()>();
    for (std::size_t i = 0; i < kElements.size(); ++i)
      (*v)[i] = kElements[i].symbol;
    return v;
  }();
  if (z < 1 || z >= static_cast<int>(kElements.size())) return empty;
  return (*symbols)[static_cast<std::size_t>(z)];
}

double atomic_mass(int z) {
  if (z < 1 || z >= static_cast<int>(kElements.size())) return 0.0;
  return kElements[static_cast<std::size_t>(z)].mass;
}

bool in_organic_subset(int z) {
  switch (z) {
    case 5: case 6: case 7: case 8: case 9:
    case 15: case 16: case 17: case 35: case 53:
      return true;
    default:
      return false;
  }
}

bool aromatic_allowed(int z) {
  switch (z) {
    case 5: case 6: case 7: case 8: case 14:
    case 15: case 16: case 33: case 34: case 52:
      return true;
    default:
      return false;
  }
}

const int* normal_valences(int z) {
  const ValenceRow* row = valence_row(z);
  return row ? row->list : nullptr;
}

int max_valence(int z, int formal_charge) {
  // A +1 charge leaves the electron count of the previous element, so the
  // shifted row carries the right bond capacity (N+ -> 4 like C, O- -> 1
  // like F). Hydrogen is excluded from shifting: H+ is a bare proton.
  int shifted = z - formal_charge;
  const ValenceRow* row = valence_row(shifted);
  if (row == nullptr || (z == 1 && formal_charge != 0)) return -1;
  int max = 0;
  for (const int* v = row->list; *v != 0; ++v) max = *v;
  return max;
}

}  // namespace molfrag
