#pragma once

#include "protofold/chain.hpp"

#include <algorithm>
#include <array>
#include <memory>
#include <numeric>
#include <queue>
#include <vector>

namespace protofold {

enum class InteractionClass { Bonded12 = 0, Pair13 = 1, Pair14 = 2, Full = 3 };

inline const char* to_string(InteractionClass c) {
  switch (c) {
    case InteractionClass::Bonded12: return "12";
    case InteractionClass::Pair13: return "13";
    case InteractionClass::Pair14: return "14";
    case InteractionClass::Full: return "full";
  }
  return "?";
}

struct WeightTable {
  std::array<double, 4> elec{0.0, 0.0, 1.0 / 1.2, 1.0};
  std::array<double, 4> vdw{0.0, 0.0, 0.5, 1.0};

  double w_elec(InteractionClass c) const { return elec[static_cast<std::size_t>(c)]; }
  double w_vdw(InteractionClass c) const { return vdw[static_cast<std::size_t>(c)]; }
};

/// Covalent spanning tree rooted at the N-terminal N. Hetero atoms are not
/// part of the tree (parent -2).
struct BondTree {
  static constexpr int kRoot = -1;
  static constexpr int kDetached = -2;

  std::vector<int> parent;
  std::vector<int> depth;
  std::vector<int> residue_of;
  std::vector<std::pair<int, int>> ring_exclusions;

  int size() const { return static_cast<int>(parent.size()); }

  int ancestor(int i, int a) const {
    while (a-- > 0 && i >= 0) i = parent[static_cast<std::size_t>(i)];
    return i;
  }
};

namespace detail {
struct DisjointSet {
  std::vector<int> p;
  explicit DisjointSet(std::size_t n) : p(n) { std::iota(p.begin(), p.end(), 0); }
  int find(int x) {
    while (p[static_cast<std::size_t>(x)] != x) {
      p[static_cast<std::size_t>(x)] = p[static_cast<std::size_t>(p[static_cast<std::size_t>(x)])];
      x = p[static_cast<std::size_t>(x)];
    }
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    p[static_cast<std::size_t>(b)] = a;
    return true;
  }
};
}  // namespace detail

/// Spanning tree of the bond graph. Bonds are taken in template order and a
/// bond that closes a cycle is dropped, so each ring loses its last bond.
inline BondTree build_tree(const Chain& chain) {
  const auto n = chain.atoms.size();
  BondTree t;
  t.parent.assign(n, BondTree::kDetached);
  t.depth.assign(n, -1);
  t.residue_of.resize(n);
  for (std::size_t a = 0; a < n; ++a) t.residue_of[a] = chain.atoms[a].residue;

  std::vector<std::vector<int>> adj(n);
  detail::DisjointSet ds(n);
  for (const auto& [a, b] : chain.bonds) {
    if (a == b || a < 0 || b < 0 || static_cast<std::size_t>(a) >= n || static_cast<std::size_t>(b) >= n)
      throw GeometryError("build_tree: malformed bond");
    if (chain.atoms[static_cast<std::size_t>(a)].hetero || chain.atoms[static_cast<std::size_t>(b)].hetero)
      throw GeometryError("build_tree: bond to a hetero atom");
    if (!ds.unite(a, b)) {
      t.ring_exclusions.emplace_back(a, b);
      continue;
    }
    adj[static_cast<std::size_t>(a)].push_back(b);
    adj[static_cast<std::size_t>(b)].push_back(a);
  }
  const int root = chain.residues.at(0).n;
  std::queue<int> q;
  q.push(root);
  t.parent[static_cast<std::size_t>(root)] = BondTree::kRoot;
  t.depth[static_cast<std::size_t>(root)] = 0;
  while (!q.empty()) {
    const int u = q.front();
    q.pop();
    for (int v : adj[static_cast<std::size_t>(u)]) {
      if (t.depth[static_cast<std::size_t>(v)] >= 0) continue;
      t.parent[static_cast<std::size_t>(v)] = u;
      t.depth[static_cast<std::size_t>(v)] = t.depth[static_cast<std::size_t>(u)] + 1;
      q.push(v);
    }
  }
  for (std::size_t a = 0; a < n; ++a)
    if (!chain.atoms[a].hetero && t.depth[a] < 0)
      throw GeometryError("build_tree: atom " + chain.atoms[a].name + " of residue " +
                          std::to_string(chain.atoms[a].res_seq) + " is not connected to the chain");
  return t;
}

/// Pair class from tree path length (1, 2, 3 -> 12, 13, 14), O(1).
inline InteractionClass classify(const BondTree& t, int i, int j) {
  if (i == j) throw ConfigError("classify: i == j");
  const int ri = t.residue_of[static_cast<std::size_t>(i)];
  const int rj = t.residue_of[static_cast<std::size_t>(j)];
  if (ri < 0 || rj < 0) return InteractionClass::Full;
  if (std::abs(ri - rj) >= 2) return InteractionClass::Full;
  // ancestors of i up to 3 levels
  std::array<int, 4> ai{}, aj{};
  ai[0] = i;
  aj[0] = j;
  for (std::size_t k = 1; k < 4; ++k) {
    ai[k] = ai[k - 1] >= 0 ? t.parent[static_cast<std::size_t>(ai[k - 1])] : -1;
    aj[k] = aj[k - 1] >= 0 ? t.parent[static_cast<std::size_t>(aj[k - 1])] : -1;
  }
  int best = 99;
  for (int a = 0; a < 4; ++a) {
    if (ai[static_cast<std::size_t>(a)] < 0) break;
    for (int b = 0; a + b < 4 && b < 4; ++b) {
      if (aj[static_cast<std::size_t>(b)] < 0) break;
      if (ai[static_cast<std::size_t>(a)] == aj[static_cast<std::size_t>(b)]) best = std::min(best, a + b);
    }
  }
  switch (best) {
    case 1: return InteractionClass::Bonded12;
    case 2: return InteractionClass::Pair13;
    case 3: return InteractionClass::Pair14;
    default: return InteractionClass::Full;
  }
}

/// Pair weights for the force field: classification plus the weight table.
/// Pairs of two hetero atoms (rigid, fixed relative to each other) are skipped.
class PairWeights {
 public:
  /// Partners whose class is not Full, per atom, ascending (CSR).
  struct Exceptions {
    std::vector<int> offset{0};
    std::vector<int> partner;
    std::vector<double> w_elec, w_vdw;
  };

  PairWeights() = default;
  PairWeights(std::shared_ptr<const BondTree> tree, const Chain& chain, WeightTable table)
      : tree_(std::move(tree)), table_(table) {
    full_elec_ = table_.w_elec(InteractionClass::Full);
    full_vdw_ = table_.w_vdw(InteractionClass::Full);
    const std::size_t n = chain.atoms.size();
    hetero_.resize(n);
    for (std::size_t a = 0; a < n; ++a) hetero_[a] = chain.atoms[a].hetero ? 1 : 0;
    build_exceptions();
  }

  /// Every pair weighted as Full (for plain atom clusters).
  static PairWeights uniform(double w_elec = 1.0, double w_vdw = 1.0) {
    PairWeights p;
    p.table_.elec.fill(w_elec);
    p.table_.vdw.fill(w_vdw);
    p.full_elec_ = w_elec;
    p.full_vdw_ = w_vdw;
    return p;
  }

  InteractionClass pair_class(int i, int j) const {
    return tree_ ? classify(*tree_, i, j) : InteractionClass::Full;
  }
  bool skipped(int i, int j) const {
    return !hetero_.empty() && hetero_[static_cast<std::size_t>(i)] && hetero_[static_cast<std::size_t>(j)];
  }
  double elec(int i, int j) const { return skipped(i, j) ? 0.0 : table_.w_elec(pair_class(i, j)); }
  double vdw(int i, int j) const { return skipped(i, j) ? 0.0 : table_.w_vdw(pair_class(i, j)); }
  std::pair<double, double> both(int i, int j) const {
    if (skipped(i, j)) return {0.0, 0.0};
    const auto c = pair_class(i, j);
    return {table_.w_elec(c), table_.w_vdw(c)};
  }
  const WeightTable& table() const { return table_; }
  double full_elec() const { return full_elec_; }
  double full_vdw() const { return full_vdw_; }
  bool hetero(std::size_t i) const { return !hetero_.empty() && hetero_[i]; }
  /// Empty offsets (size 1) mean no exceptions at all.
  const Exceptions& exceptions() const { return exc_; }

 private:
  void build_exceptions() {
    const auto& t = *tree_;
    const std::size_t n = t.parent.size();
    std::vector<std::vector<int>> adj(n);
    for (std::size_t a = 0; a < n; ++a)
      if (const int p = t.parent[a]; p >= 0) {
        adj[a].push_back(p);
        adj[static_cast<std::size_t>(p)].push_back(static_cast<int>(a));
      }
    exc_.offset.assign(n + 1, 0);
    std::vector<int> found;
    for (std::size_t i = 0; i < n; ++i) {
      // tree neighborhood of radius 3
      found.clear();
      std::vector<int> frontier{static_cast<int>(i)}, next;
      for (int depth = 0; depth < 3; ++depth) {
        next.clear();
        for (int u : frontier)
          for (int v : adj[static_cast<std::size_t>(u)])
            if (v != static_cast<int>(i) && std::find(found.begin(), found.end(), v) == found.end()) {
              found.push_back(v);
              next.push_back(v);
            }
        frontier.swap(next);
      }
      std::sort(found.begin(), found.end());
      for (int j : found) {
        const auto c = classify(t, static_cast<int>(i), j);
        if (c == InteractionClass::Full) continue;
        exc_.partner.push_back(j);
        exc_.w_elec.push_back(table_.w_elec(c));
        exc_.w_vdw.push_back(table_.w_vdw(c));
      }
      exc_.offset[i + 1] = static_cast<int>(exc_.partner.size());
    }
  }

  std::shared_ptr<const BondTree> tree_;
  WeightTable table_;
  double full_elec_ = 1.0, full_vdw_ = 1.0;
  std::vector<char> hetero_;
  Exceptions exc_;
};

}  // namespace protofold
