#pragma once

#include "protofold/chain.hpp"
#include "protofold/kcm.hpp"
#include "protofold/params.hpp"
#include "protofold/residues.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

namespace protofold {

struct PdbAtom {
  int serial = 0;
  std::string name;
  char alt_loc = ' ';
  std::string res_name;
  char chain_id = ' ';
  int res_seq = 0;
  char icode = ' ';
  Vec3 pos = Vec3::Zero();
  double occupancy = 1.0;
  double bfactor = 0.0;
  std::string element;
  bool hetero = false;
};

struct StructureRecord {
  std::vector<PdbAtom> atoms;
  int models = 0;                  // MODEL records seen (only the first is read)
  std::size_t waters_removed = 0;  // atoms
  std::vector<std::string> notes;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::string upper(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

inline std::string field(const std::string& line, std::size_t col1, std::size_t len) {
  // 1-based column, clipped to the line
  if (line.size() < col1) return {};
  return line.substr(col1 - 1, std::min(len, line.size() - (col1 - 1)));
}

inline double parse_double(const std::string& s, int lineno, const char* what) {
  const std::string t = trim(s);
  if (t.empty()) throw ParseError("PDB line " + std::to_string(lineno) + ": missing " + what);
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    throw ParseError("PDB line " + std::to_string(lineno) + ": bad " + what + " '" + t + "'");
  }
  if (used != t.size() || !std::isfinite(v))
    throw ParseError("PDB line " + std::to_string(lineno) + ": bad " + what + " '" + t + "'");
  return v;
}

inline int parse_int(const std::string& s, int lineno, const char* what, int fallback) {
  const std::string t = trim(s);
  if (t.empty()) return fallback;
  try {
    std::size_t used = 0;
    const int v = std::stoi(t, &used);
    if (used == t.size()) return v;
  } catch (const std::exception&) {
  }
  throw ParseError("PDB line " + std::to_string(lineno) + ": bad " + what + " '" + t + "'");
}

inline std::string element_from_name(const std::string& name) {
  for (char c : name)
    if (std::isalpha(static_cast<unsigned char>(c))) return std::string(1, static_cast<char>(std::toupper(c)));
  return "X";
}

}  // namespace detail

/// ATOM/HETATM records of the first model. Waters (HOH, WAT) are removed;
/// of repeated alternate locations the first one is kept.
inline StructureRecord parse_pdb(std::istream& in) {
  StructureRecord s;
  std::string line;
  int lineno = 0;
  bool first_done = false;  // past the first ENDMDL: only count further models
  std::set<std::tuple<char, int, char, std::string>> seen;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string rec = detail::field(line, 1, 6);
    if (rec.rfind("MODEL", 0) == 0) {
      ++s.models;
      continue;
    }
    if (rec.rfind("ENDMDL", 0) == 0) {
      first_done = true;
      continue;
    }
    if (rec.rfind("END", 0) == 0) break;
    if (first_done) continue;
    const bool atom = rec == "ATOM  " || rec == "ATOM";
    const bool het = rec == "HETATM";
    if (!atom && !het) continue;
    if (line.size() < 54) throw ParseError("PDB line " + std::to_string(lineno) + ": truncated coordinate record");
    PdbAtom a;
    a.hetero = het;
    a.serial = detail::parse_int(detail::field(line, 7, 5), lineno, "serial", 0);
    a.name = detail::trim(detail::field(line, 13, 4));
    a.alt_loc = line[16];
    a.res_name = detail::trim(detail::field(line, 18, 3));
    a.chain_id = line[21];
    a.res_seq = detail::parse_int(detail::field(line, 23, 4), lineno, "residue number", 0);
    a.icode = line[26];
    a.pos = Vec3(detail::parse_double(detail::field(line, 31, 8), lineno, "x"),
                 detail::parse_double(detail::field(line, 39, 8), lineno, "y"),
                 detail::parse_double(detail::field(line, 47, 8), lineno, "z"));
    const std::string occ = detail::trim(detail::field(line, 55, 6));
    if (!occ.empty()) a.occupancy = detail::parse_double(occ, lineno, "occupancy");
    const std::string bf = detail::trim(detail::field(line, 61, 6));
    if (!bf.empty()) a.bfactor = detail::parse_double(bf, lineno, "B-factor");
    a.element = detail::upper(detail::trim(detail::field(line, 77, 2)));
    if (a.element.empty()) a.element = detail::element_from_name(a.name);
    if (a.name.empty() || a.res_name.empty()) throw ParseError("PDB line " + std::to_string(lineno) + ": missing names");
    if (is_water(a.res_name)) {
      ++s.waters_removed;
      continue;
    }
    if (!seen.emplace(a.chain_id, a.res_seq, a.icode, a.name).second) continue;
    s.atoms.push_back(a);
  }
  if (s.models > 1) s.notes.push_back("multi-model file: only the first model was read");
  if (s.atoms.empty()) throw ParseError("PDB: empty structure after removing water");
  return s;
}

inline StructureRecord read_pdb(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open PDB file " + path);
  return parse_pdb(f);
}

inline std::string format_pdb_atom(const PdbAtom& a) {
  std::string name = a.name;
  if (name.size() < 4 && a.element.size() == 1) name = " " + name;
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-6s%5d %-4s%c%3s %c%4d%c   %8.3f%8.3f%8.3f%6.2f%6.2f          %2s",
                a.hetero ? "HETATM" : "ATOM", a.serial % 100000, name.c_str(), a.alt_loc, a.res_name.c_str(),
                a.chain_id, a.res_seq, a.icode, a.pos.x(), a.pos.y(), a.pos.z(), a.occupancy, a.bfactor,
                a.element.c_str());
  return buf;
}

inline void write_structure(const StructureRecord& s, std::ostream& out) {
  if (s.atoms.empty()) throw ConfigError("write_pdb: no atoms");
  bool chain_done = false;
  for (const auto& a : s.atoms) {
    if (a.hetero && !chain_done) {
      out << "TER\n";
      chain_done = true;
    }
    out << format_pdb_atom(a) << '\n';
  }
  if (!chain_done) out << "TER\n";
  out << "END\n";
}

/// Record for a chain at the given positions (origin offset re-applied).
inline StructureRecord to_structure(const Chain& chain, const Positions& r) {
  if (chain.atoms.empty()) throw ConfigError("write_pdb: chain has no atoms");
  if (r.size() != chain.atoms.size()) throw ConfigError("write_pdb: position count mismatch");
  StructureRecord s;
  int serial = 0;
  // chain atoms first, then hetero atoms
  for (int pass = 0; pass < 2; ++pass)
    for (std::size_t i = 0; i < chain.atoms.size(); ++i) {
      const auto& at = chain.atoms[i];
      if (at.hetero != (pass == 1)) continue;
      PdbAtom a;
      a.serial = ++serial;
      a.name = at.name;
      a.res_name = at.res_name;
      a.chain_id = at.chain_id;
      a.res_seq = at.res_seq;
      a.pos = r[i] + chain.origin_offset;
      a.element = at.element;
      a.hetero = at.hetero;
      s.atoms.push_back(a);
    }
  return s;
}

inline void write_pdb(const Chain& chain, const Positions& r, const std::string& path) {
  const StructureRecord s = to_structure(chain, r);
  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path);
  write_structure(s, f);
  if (!f) throw Error("write failed for " + path);
}

/// The first chain of amino-acid ATOM records becomes the kinematic chain;
/// everything else (ligands, ions, other chains) is kept as fixed hetero atoms.
inline ImportedChain chain_from_structure(const StructureRecord& s, const TemplateLibrary& lib) {
  char first = 0;
  for (const auto& a : s.atoms)
    if (!a.hetero && is_amino_acid(a.res_name)) {
      first = a.chain_id;
      break;
    }
  if (!first) throw GeometryError("PDB: no amino-acid chain found");
  std::vector<InputResidue> residues;
  std::vector<InputAtom> hetero;
  for (const auto& a : s.atoms) {
    InputAtom ia;
    ia.name = a.name;
    ia.element = a.element;
    ia.res_name = a.res_name;
    ia.res_seq = a.res_seq;
    ia.icode = a.icode;
    ia.chain_id = a.chain_id;
    ia.pos = a.pos;
    const bool in_chain = !a.hetero && a.chain_id == first && is_amino_acid(a.res_name);
    if (!in_chain) {
      hetero.push_back(ia);
      continue;
    }
    if (residues.empty() || residues.back().res_seq != a.res_seq || residues.back().atoms.back().icode != a.icode ||
        residues.back().name != a.res_name) {
      InputResidue r;
      r.name = a.res_name;
      r.res_seq = a.res_seq;
      r.chain_id = a.chain_id;
      residues.push_back(r);
    }
    residues.back().atoms.push_back(ia);
  }
  for (std::size_t i = 1; i < residues.size(); ++i)
    if (residues[i].res_seq < residues[i - 1].res_seq)
      throw ParseError("PDB: residue numbering decreases within chain " + std::string(1, first));
  return import_chain(residues, hetero, lib);
}

/// One-letter (contiguous or spaced) or three-letter codes, any case. A
/// three-character token that is a known three-letter code is read as one residue.
inline std::vector<std::string> read_sequence(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream ss(text);
  std::string tok;
  while (ss >> tok) {
    const std::string up = detail::upper(tok);
    if (up.size() == 3 && is_amino_acid(up)) {
      out.push_back(up);
      continue;
    }
    for (char c : up) {
      const std::string t = three_letter(c);
      if (t.empty()) throw ParseError("unknown residue code '" + std::string(1, c) + "' in sequence");
      out.push_back(t);
    }
  }
  if (out.empty()) throw ParseError("empty sequence");
  return out;
}

// ---- run logs ----

inline constexpr const char* kRunLogVersion = "# protofold run log v1";

inline std::string run_log_header() { return "iteration,g_elec,g_vdw,g_cav,g_total,tau_max"; }

inline std::string run_log_row(const IterationRecord& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%d,%.10g,%.10g,%.10g,%.10g,%.10g", r.iteration, r.energy.g_elec, r.energy.g_vdw,
                r.energy.g_cav, r.energy.g_total, r.tau_max);
  return buf;
}

inline std::string timing_header() { return "iteration,t_kinematics,t_grid,t_nonbonded,t_solvation,t_torques,t_step"; }

inline std::string timing_row(const IterationRecord& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%d,%.6e,%.6e,%.6e,%.6e,%.6e,%.6e", r.iteration, r.times.kinematics, r.times.grid,
                r.times.nonbonded, r.times.solvation, r.times.torques, r.times.step);
  return buf;
}

inline std::string joint_name(const Chain& chain, int j) {
  const auto& l = chain.joint_link(j);
  const std::string res = std::to_string(l.residue + 1);
  switch (l.kind) {
    case JointKind::Phi: return "phi_" + res;
    case JointKind::Psi: return "psi_" + res;
    case JointKind::Chi: return "chi" + std::to_string(l.chi) + "_" + res;
  }
  return "joint_" + std::to_string(j);
}

inline std::string dihedral_header(const Chain& chain) {
  std::string h = "iteration";
  for (int j = 0; j < chain.dof(); ++j) h += "," + joint_name(chain, j);
  return h;
}

inline std::string dihedral_row(const Chain& chain, int iteration, const Conformation& c) {
  std::string row = std::to_string(iteration);
  char buf[32];
  for (int j = 0; j < chain.dof(); ++j) {
    std::snprintf(buf, sizeof buf, ",%.6f", joint_dihedral(chain, c, j));
    row += buf;
  }
  return row;
}

/// Writes log.csv rows as they are produced.
class RunLog {
 public:
  explicit RunLog(const std::string& path) : out_(path) {
    if (!out_) throw Error("cannot write " + path);
    out_ << kRunLogVersion << '\n' << run_log_header() << '\n';
  }
  void append(const IterationRecord& r) { out_ << run_log_row(r) << '\n'; }

 private:
  std::ofstream out_;
};

}  // namespace protofold
