#pragma once

#include <array>
#include <string>
#include <string_view>

namespace protofold {

struct ResidueCode {
  char one;
  const char* three;
};

inline constexpr std::array<ResidueCode, 20> kResidueCodes = {{
    {'A', "ALA"}, {'R', "ARG"}, {'N', "ASN"}, {'D', "ASP"}, {'C', "CYS"},
    {'Q', "GLN"}, {'E', "GLU"}, {'G', "GLY"}, {'H', "HIS"}, {'I', "ILE"},
    {'L', "LEU"}, {'K', "LYS"}, {'M', "MET"}, {'F', "PHE"}, {'P', "PRO"},
    {'S', "SER"}, {'T', "THR"}, {'W', "TRP"}, {'Y', "TYR"}, {'V', "VAL"},
}};

/// Three-letter code for a one-letter code (case-insensitive), empty if unknown.
inline std::string three_letter(char c) {
  if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  for (const auto& r : kResidueCodes)
    if (r.one == c) return r.three;
  return {};
}

inline bool is_amino_acid(std::string_view name3) {
  for (const auto& r : kResidueCodes)
    if (name3 == r.three) return true;
  return false;
}

inline bool is_water(std::string_view name3) { return name3 == "HOH" || name3 == "WAT"; }

}  // namespace protofold
