#pragma once

#include "protofold/chain.hpp"
#include "protofold/topology.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace protofold {

/// Solvation classes of the atomic solvation parameter table; "-" has no term.
inline const std::vector<std::string>& solvation_classes() {
  static const std::vector<std::string> k{"C", "ON", "S", "O-", "N+"};
  return k;
}

enum class SolvColumn { Kyte, Sharp };

struct AtomParams {
  double q = 0.0;
  double R = 1.0;
  double eps = 0.0;
  double gamma = 0.0;
  std::string solv_class = "-";
};

struct AtomType {
  double R = 0.0;
  double eps = 0.0;
  std::string solv_class;
};

struct ChargeEntry {
  double q = 0.0;
  std::string type;
};

struct ParamSet {
  static constexpr const char* kFormat = "protofold-params";
  static constexpr int kVersion = 1;

  std::map<std::string, AtomType> types;
  std::map<std::string, std::pair<double, double>> solv;  // class -> (kyte, sharp)
  std::map<std::pair<std::string, std::string>, ChargeEntry> charges;  // (residue or *, atom)
  std::map<std::string, ChargeEntry> elements;
  WeightTable weights;

  double gamma(const std::string& cls, SolvColumn col) const {
    if (cls == "-") return 0.0;
    auto it = solv.find(cls);
    if (it == solv.end()) throw ConfigError("no solvation parameters for class " + cls);
    return col == SolvColumn::Kyte ? it->second.first : it->second.second;
  }

  AtomParams make(const ChargeEntry& e, SolvColumn col) const {
    auto it = types.find(e.type);
    if (it == types.end()) throw ConfigError("unknown atom type " + e.type);
    AtomParams p;
    p.q = e.q;
    p.R = it->second.R;
    p.eps = it->second.eps;
    p.solv_class = it->second.solv_class;
    p.gamma = gamma(p.solv_class, col);
    return p;
  }

  /// Lookup order: (residue, atom), (*, atom), element, *.
  AtomParams lookup(const std::string& res, const std::string& atom, const std::string& element,
                    SolvColumn col = SolvColumn::Sharp) const {
    if (auto it = charges.find({res, atom}); it != charges.end()) return make(it->second, col);
    if (auto it = charges.find({"*", atom}); it != charges.end()) return make(it->second, col);
    if (auto it = elements.find(element); it != elements.end()) return make(it->second, col);
    if (auto it = elements.find("*"); it != elements.end()) return make(it->second, col);
    throw ConfigError("no parameters for atom " + res + ":" + atom);
  }

  static ParamSet parse(std::istream& in) {
    ParamSet p;
    std::string line;
    int lineno = 0;
    bool header = false;
    std::set<std::string> seen_weight;
    auto fail = [&](const std::string& msg) {
      throw ParseError("params line " + std::to_string(lineno) + ": " + msg);
    };
    auto need_end = [&](std::istringstream& ss) {
      std::string extra;
      if (ss >> extra) fail("unexpected trailing field '" + extra + "'");
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
        if (key != "FORMAT" || !(ss >> fmt >> ver) || fmt != kFormat) fail("expected 'FORMAT protofold-params 1'");
        if (ver != kVersion) fail("unsupported params version");
        header = true;
        continue;
      }
      if (key == "TYPE") {
        std::string name;
        AtomType t;
        if (!(ss >> name >> t.R >> t.eps >> t.solv_class)) fail("TYPE needs name R eps solv_class");
        need_end(ss);
        if (!(t.R > 0.0)) fail("radius must be positive");
        if (t.eps < 0.0) fail("well depth must be non-negative");
        if (!p.types.emplace(name, t).second) fail("duplicate TYPE " + name);
      } else if (key == "SOLV") {
        std::string cls;
        double k = 0, s = 0;
        if (!(ss >> cls >> k >> s)) fail("SOLV needs class kyte sharp");
        need_end(ss);
        if (!p.solv.emplace(cls, std::make_pair(k, s)).second) fail("duplicate SOLV " + cls);
      } else if (key == "WEIGHT") {
        std::string pair;
        double we = 0, wv = 0;
        if (!(ss >> pair >> we >> wv)) fail("WEIGHT needs pair elec vdw");
        need_end(ss);
        int idx = pair == "12" ? 0 : pair == "13" ? 1 : pair == "14" ? 2 : pair == "full" ? 3 : -1;
        if (idx < 0) fail("unknown WEIGHT pair " + pair);
        if (we < 0 || we > 1 || wv < 0 || wv > 1) fail("weights must lie in [0, 1]");
        if (!seen_weight.insert(pair).second) fail("duplicate WEIGHT " + pair);
        p.weights.elec[static_cast<std::size_t>(idx)] = we;
        p.weights.vdw[static_cast<std::size_t>(idx)] = wv;
      } else if (key == "CHARGE") {
        std::string res, atom;
        ChargeEntry e;
        if (!(ss >> res >> atom >> e.q >> e.type)) fail("CHARGE needs residue atom q type");
        need_end(ss);
        if (!p.charges.emplace(std::make_pair(res, atom), e).second) fail("duplicate CHARGE " + res + " " + atom);
      } else if (key == "ELEMENT") {
        std::string el;
        ChargeEntry e;
        if (!(ss >> el >> e.type >> e.q)) fail("ELEMENT needs element type q");
        need_end(ss);
        if (!p.elements.emplace(el, e).second) fail("duplicate ELEMENT " + el);
      } else {
        fail("unknown record " + key);
      }
    }
    if (!header) throw ParseError("params: missing FORMAT header");
    for (const auto& c : solvation_classes())
      if (!p.solv.count(c)) throw ParseError("params: missing SOLV class " + c);
    for (const auto& [name, t] : p.types)
      if (t.solv_class != "-" && !p.solv.count(t.solv_class))
        throw ParseError("params: TYPE " + name + " uses unknown solvation class " + t.solv_class);
    for (const auto& [k, e] : p.charges)
      if (!p.types.count(e.type)) throw ParseError("params: CHARGE " + k.first + " " + k.second + " uses unknown type " + e.type);
    for (const auto& [k, e] : p.elements)
      if (!p.types.count(e.type)) throw ParseError("params: ELEMENT " + k + " uses unknown type " + e.type);
    return p;
  }

  static ParamSet load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError("cannot open parameter file " + path);
    return parse(f);
  }

  static ParamSet from_string(const std::string& text) {
    std::istringstream s(text);
    return parse(s);
  }
};

inline ParamSet load_params(const std::string& path) { return ParamSet::load(path); }

inline std::vector<AtomParams> assign_params(const Chain& chain, const ParamSet& ps, SolvColumn col = SolvColumn::Sharp) {
  std::vector<AtomParams> out;
  out.reserve(chain.atoms.size());
  for (const auto& a : chain.atoms) out.push_back(ps.lookup(a.res_name, a.name, a.element, col));
  return out;
}

}  // namespace protofold
