#pragma once

#include "protofold/common.hpp"

#include <array>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace protofold {

struct TemplateAtom {
  std::string name;
  std::string element;
  std::string parent;
  double bond = 0.0;
  std::string angle_ref;
  double angle = 0.0;
  std::string dihedral_ref;
  double dihedral = 0.0;
  int link = 0;  // 0: C-alpha link, k: chi k link
};

struct ChiDef {
  int k = 0;
  std::array<std::string, 4> atoms;
};

/// Per-residue data: side_links() is the number of chi joints.
struct ResidueTemplate {
  std::string name;  // three-letter code
  char code = 'X';
  std::vector<TemplateAtom> atoms;
  std::vector<ChiDef> chis;
  std::vector<std::pair<std::string, std::string>> ring_bonds;

  int side_links() const { return static_cast<int>(chis.size()); }
  const TemplateAtom* find(const std::string& atom) const {
    for (const auto& a : atoms)
      if (a.name == atom) return &a;
    return nullptr;
  }
};

inline bool is_backbone_name(const std::string& n) {
  return n == "N" || n == "CA" || n == "C" || n == "O" || n == "H";
}

class TemplateLibrary {
 public:
  static constexpr const char* kFormat = "protofold-residue-templates";
  static constexpr int kVersion = 1;

  static TemplateLibrary parse(std::istream& in) {
    TemplateLibrary lib;
    std::string line;
    int lineno = 0;
    bool header = false;
    ResidueTemplate cur;
    bool open = false;
    auto fail = [&](const std::string& msg) {
      throw ParseError("templates line " + std::to_string(lineno) + ": " + msg);
    };
    while (std::getline(in, line)) {
      ++lineno;
      if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
      std::istringstream ss(line);
      std::string key;
      if (!(ss >> key)) continue;
      if (!header) {
        std::string fmt;
        int ver = 0;
        if (key != "FORMAT" || !(ss >> fmt >> ver) || fmt != kFormat)
          fail("expected 'FORMAT protofold-residue-templates 1'");
        if (ver != kVersion) fail("unsupported template format version " + std::to_string(ver));
        header = true;
        continue;
      }
      if (key == "RESIDUE") {
        if (open) fail("RESIDUE before END");
        std::string name, code;
        if (!(ss >> name >> code) || name.size() != 3 || code.size() != 1) fail("bad RESIDUE line");
        cur = ResidueTemplate{};
        cur.name = name;
        cur.code = code[0];
        open = true;
      } else if (key == "ATOM") {
        if (!open) fail("ATOM outside RESIDUE");
        TemplateAtom a;
        if (!(ss >> a.name >> a.element >> a.parent >> a.bond >> a.angle_ref >> a.angle >>
              a.dihedral_ref >> a.dihedral >> a.link))
          fail("bad ATOM line");
        if (!(a.bond > 0.0)) fail("bond length must be positive");
        if (a.link < 0 || a.link > 4) fail("link out of range");
        if (is_backbone_name(a.name) || cur.find(a.name)) fail("duplicate atom " + a.name);
        cur.atoms.push_back(a);
      } else if (key == "CHI") {
        if (!open) fail("CHI outside RESIDUE");
        ChiDef c;
        if (!(ss >> c.k >> c.atoms[0] >> c.atoms[1] >> c.atoms[2] >> c.atoms[3])) fail("bad CHI line");
        if (c.k != static_cast<int>(cur.chis.size()) + 1) fail("CHI indices must be 1, 2, ...");
        cur.chis.push_back(c);
      } else if (key == "BOND") {
        if (!open) fail("BOND outside RESIDUE");
        std::string a, b;
        if (!(ss >> a >> b)) fail("bad BOND line");
        cur.ring_bonds.emplace_back(a, b);
      } else if (key == "END") {
        if (!open) fail("END without RESIDUE");
        lib.validate(cur, lineno);
        lib.by_name_[cur.name] = cur;
        open = false;
      } else {
        fail("unknown record " + key);
      }
    }
    if (!header) throw ParseError("templates: missing FORMAT header");
    if (open) throw ParseError("templates: missing END");
    return lib;
  }

  static TemplateLibrary load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError("cannot open template file " + path);
    return parse(f);
  }

  static TemplateLibrary from_string(const std::string& text) {
    std::istringstream s(text);
    return parse(s);
  }

  const ResidueTemplate* find(const std::string& name3) const {
    auto it = by_name_.find(name3);
    return it == by_name_.end() ? nullptr : &it->second;
  }

  const ResidueTemplate& at(const std::string& name3) const {
    const auto* t = find(name3);
    if (!t) throw ConfigError("no residue template for " + name3);
    return *t;
  }

  void add(const ResidueTemplate& t) {
    validate(t, 0);
    by_name_[t.name] = t;
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : by_name_) out.push_back(k);
    return out;
  }

 private:
  void validate(const ResidueTemplate& t, int lineno) const {
    auto fail = [&](const std::string& msg) {
      throw ParseError("template " + t.name + " (line " + std::to_string(lineno) + "): " + msg);
    };
    if (t.chis.size() > 4) fail("more than 4 side-chain links");
    // each atom must reference atoms defined earlier (reachability from the backbone)
    std::vector<std::string> known = {"N", "CA", "C"};
    auto is_known = [&](const std::string& n) {
      return std::find(known.begin(), known.end(), n) != known.end();
    };
    for (const auto& a : t.atoms) {
      if (!is_known(a.parent) || !is_known(a.angle_ref) || !is_known(a.dihedral_ref))
        fail("atom " + a.name + " references an undefined atom");
      if (a.link > static_cast<int>(t.chis.size())) fail("atom " + a.name + " on a missing chi link");
      known.push_back(a.name);
    }
    for (const auto& c : t.chis)
      for (const auto& n : c.atoms)
        if (!is_known(n)) fail("CHI " + std::to_string(c.k) + " references unknown atom " + n);
    for (const auto& [a, b] : t.ring_bonds)
      if (!is_known(a) || !is_known(b)) fail("BOND references unknown atom");
  }

  std::map<std::string, ResidueTemplate> by_name_;
};

}  // namespace protofold
