#pragma once

#include "protofold/common.hpp"
#include "protofold/residues.hpp"
#include "protofold/templates.hpp"
#include "protofold/tree_scan.hpp"

#include <Eigen/Geometry>

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace protofold {

using RigidTransform = Mat3;

enum class JointKind { Phi, Psi, Chi };
enum class Omega { Trans, Cis };

/// How canonical builds place the peptide-plane C, O and H: from standard
/// bond lengths and angles, or from the tabulated plane constants.
enum class PlaneModel { Ideal, Table };

/// Coefficients of a peptide-plane vector in terms of the two main-chain body
/// vectors around the plane: v = c1 * (CA_i -> N_i+1) + c2 * (N_i+1 -> CA_i+1).
struct PlaneRow {
  const char* name;
  double c1;
  double c2;
};

inline constexpr std::array<PlaneRow, 4> kPlaneConstants = {{
    {"CaC", -0.2761, +1.4488},
    {"CN", +1.2761, -1.4488},
    {"CO", -1.3324, +2.3401},
    {"NH", +1.4103, -2.5111},
}};

inline const PlaneRow& plane_row(std::string_view name) {
  for (const auto& r : kPlaneConstants)
    if (name == r.name) return r;
  throw ConfigError("unknown peptide plane vector");
}

// Skeleton used to build canonical backbones.
namespace canonical {
inline constexpr double kNCa = 1.458, kCaC = 1.525, kCN = 1.329;
inline constexpr double kAngNCaC = 111.2, kAngCaCN = 116.2, kAngCNCa = 121.7;
inline constexpr double kNH = 1.01, kCO = 1.231, kCOxt = 1.25;
}  // namespace canonical

struct PeptideGeometry {
  std::array<PlaneRow, 4> plane_constants = kPlaneConstants;
  std::vector<Vec3> zp_body_vectors;  // N_i->CA_i, CA_i->N_i+1 per residue
  std::vector<Vec3> zp_unit_vectors;  // joint axes at ZP, per joint
  std::vector<Omega> omega;           // per residue (peptide bond after residue i)
  PlaneModel plane_model = PlaneModel::Ideal;
};

struct Atom {
  std::string name;
  std::string element;
  std::string res_name;
  int residue = -1;  // chain residue index, -1 for hetero atoms
  int res_seq = 0;   // residue number used for PDB output
  char chain_id = 'A';
  int link = 0;
  bool hetero = false;
  Vec3 zp = Vec3::Zero();
};

struct Link {
  int parent = -1;
  JointKind kind = JointKind::Phi;
  int residue = -1;
  int chi = 0;         // 1..4 for side-chain links
  int anchor = -1;     // atom on the joint axis, owned by the parent link
  Vec3 axis0 = Vec3::UnitX();
  std::array<int, 4> dihedral_atoms{-1, -1, -1, -1};  // -1 if not measurable
  double zp_value = 180.0;  // dihedral (deg) at theta = 0
  std::vector<int> atoms;
};

struct Residue {
  std::string name;
  int res_seq = 0;
  char chain_id = 'A';
  int n = -1, ca = -1, c = -1;
  int phi_joint = -1, psi_joint = -1;
  std::vector<int> chi_joints;
};

/// Kinematic linkage. Link 0 is the fixed base (N-terminal N and its
/// hydrogens plus all hetero atoms); joint j drives link j + 1.
struct Chain {
  std::vector<Residue> residues;
  std::vector<Atom> atoms;
  std::vector<Link> links;
  std::vector<std::pair<int, int>> bonds;  // chain atoms only, in template order
  PeptideGeometry geometry;
  Vec3 origin_offset = Vec3::Zero();  // added on output to restore an imported frame
  std::vector<std::string> warnings;

  int dof() const { return static_cast<int>(links.size()) - 1; }
  int residue_count() const { return static_cast<int>(residues.size()); }
  int atom_count() const { return static_cast<int>(atoms.size()); }
  const Link& joint_link(int j) const { return links[static_cast<std::size_t>(j + 1)]; }

  std::vector<int> link_parents() const {
    std::vector<int> p(links.size());
    for (std::size_t k = 0; k < links.size(); ++k) p[k] = links[k].parent;
    return p;
  }

  /// One past the last link of the subtree rooted at each link (links are in preorder).
  std::vector<int> subtree_end() const {
    const int l = static_cast<int>(links.size());
    std::vector<int> end(links.size());
    for (int k = l - 1; k >= 0; --k) {
      end[static_cast<std::size_t>(k)] = std::max(end[static_cast<std::size_t>(k)], k + 1);
      const int p = links[static_cast<std::size_t>(k)].parent;
      if (p >= 0)
        end[static_cast<std::size_t>(p)] =
            std::max(end[static_cast<std::size_t>(p)], end[static_cast<std::size_t>(k)]);
    }
    return end;
  }

  int find_atom(int residue, const std::string& name) const {
    for (std::size_t a = 0; a < atoms.size(); ++a)
      if (atoms[a].residue == residue && atoms[a].name == name) return static_cast<int>(a);
    return -1;
  }
};

struct Conformation {
  std::vector<double> theta;  // degrees, [0, 360)
  std::vector<char> frozen;
  int residue_count = 0;

  std::size_t size() const { return theta.size(); }
};

inline Conformation zero_conformation(const Chain& chain) {
  Conformation c;
  c.theta.assign(static_cast<std::size_t>(chain.dof()), 0.0);
  c.frozen.assign(static_cast<std::size_t>(chain.dof()), 0);
  c.residue_count = chain.residue_count();
  return c;
}

/// theta + delta per unfrozen joint, wrapped to [0, 360).
inline Conformation apply_deltas(Conformation conf, const std::vector<double>& deltas) {
  if (deltas.size() != conf.theta.size()) throw ConfigError("apply_deltas: length mismatch");
  for (std::size_t j = 0; j < deltas.size(); ++j)
    if (!conf.frozen[j]) conf.theta[j] = wrap360(conf.theta[j] + deltas[j]);
  return conf;
}

// ---- dihedral index map ----

/// Dihedral (phi, psi or chi) in [-180, 180) represented by joint j.
inline double joint_dihedral(const Chain& chain, const Conformation& conf, int j) {
  return wrap180(conf.theta[static_cast<std::size_t>(j)] + chain.joint_link(j).zp_value);
}

inline void set_joint_dihedral(const Chain& chain, Conformation& conf, int j, double deg) {
  conf.theta[static_cast<std::size_t>(j)] = wrap360(deg - chain.joint_link(j).zp_value);
}

struct Dihedrals {
  std::vector<double> phi, psi;
  std::vector<std::vector<double>> chi;
};

inline Dihedrals to_dihedrals(const Chain& chain, const Conformation& conf) {
  Dihedrals d;
  for (const auto& r : chain.residues) {
    d.phi.push_back(joint_dihedral(chain, conf, r.phi_joint));
    d.psi.push_back(joint_dihedral(chain, conf, r.psi_joint));
    std::vector<double> chi;
    for (int j : r.chi_joints) chi.push_back(joint_dihedral(chain, conf, j));
    d.chi.push_back(std::move(chi));
  }
  return d;
}

/// Conformation with the given phi/psi per residue; chi at rotamer defaults unless given.
inline Conformation from_dihedrals(const Chain& chain, const std::vector<double>& phi,
                                   const std::vector<double>& psi,
                                   const std::vector<std::vector<double>>& chi = {}) {
  const auto m = chain.residues.size();
  if (phi.size() != m || psi.size() != m || (!chi.empty() && chi.size() != m))
    throw ConfigError("from_dihedrals: size mismatch");
  Conformation c = zero_conformation(chain);
  for (std::size_t i = 0; i < m; ++i) {
    const auto& r = chain.residues[i];
    set_joint_dihedral(chain, c, r.phi_joint, phi[i]);
    set_joint_dihedral(chain, c, r.psi_joint, psi[i]);
    if (!chi.empty()) {
      if (chi[i].size() != r.chi_joints.size()) throw ConfigError("from_dihedrals: chi size mismatch");
      for (std::size_t k = 0; k < chi[i].size(); ++k) set_joint_dihedral(chain, c, r.chi_joints[k], chi[i][k]);
    }
  }
  return c;
}

/// Same phi and psi for every residue.
inline Conformation uniform_conformation(const Chain& chain, double phi, double psi) {
  const auto m = chain.residues.size();
  return from_dihedrals(chain, std::vector<double>(m, phi), std::vector<double>(m, psi));
}

// ---- kinematics ----

inline RigidTransform joint_rotation(const Vec3& axis, double angle_deg) {
  if (std::abs(axis.norm() - 1.0) > 1e-9) throw GeometryError("joint_rotation: axis is not a unit vector");
  return Eigen::AngleAxisd(deg2rad(angle_deg), axis).toRotationMatrix();
}

inline bool is_rotation(const RigidTransform& m, double tol = 1e-10) {
  const double orth = (m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff();
  return orth < tol && std::abs(m.determinant() - 1.0) < tol;
}

/// M per link: M_base = I, M_link = M_parent * R(u0_link, theta_joint).
inline std::vector<RigidTransform> link_transforms(const Chain& chain, const Conformation& conf) {
  if (conf.theta.size() != static_cast<std::size_t>(chain.dof()))
    throw ConfigError("conformation does not match chain");
  std::vector<RigidTransform> r(chain.links.size());
  r[0].setIdentity();
  for (std::size_t k = 1; k < chain.links.size(); ++k)
    r[k] = joint_rotation(chain.links[k].axis0, conf.theta[k - 1]);
  return tree_prefix(chain.link_parents(), r,
                     [](const RigidTransform& a, const RigidTransform& b) -> RigidTransform { return a * b; });
}

/// Atom positions for precomputed link transforms.
inline Positions positions_from_transforms(const Chain& chain, const std::vector<RigidTransform>& m) {
  Positions r(chain.atoms.size());
  for (std::size_t k = 0; k < chain.links.size(); ++k) {
    const auto& link = chain.links[k];
    if (link.parent < 0) {
      for (int a : link.atoms) r[static_cast<std::size_t>(a)] = chain.atoms[static_cast<std::size_t>(a)].zp;
      continue;
    }
    const Vec3 p = r[static_cast<std::size_t>(link.anchor)];
    const Vec3& p0 = chain.atoms[static_cast<std::size_t>(link.anchor)].zp;
    for (int a : link.atoms)
      r[static_cast<std::size_t>(a)] = p + m[k] * (chain.atoms[static_cast<std::size_t>(a)].zp - p0);
  }
  return r;
}

inline Positions forward_kinematics(const Chain& chain, const Conformation& conf) {
  return positions_from_transforms(chain, link_transforms(chain, conf));
}

/// Current joint axis (unit) and the point p_k on it, per joint.
struct JointFrames {
  std::vector<Vec3> axis;
  std::vector<Vec3> point;
};

inline JointFrames joint_frames(const Chain& chain, const std::vector<RigidTransform>& m, const Positions& r) {
  JointFrames f;
  const auto l = static_cast<std::size_t>(chain.dof());
  f.axis.resize(l);
  f.point.resize(l);
  for (std::size_t j = 0; j < l; ++j) {
    const auto& link = chain.links[j + 1];
    f.axis[j] = m[static_cast<std::size_t>(link.parent)] * link.axis0;
    f.point[j] = r[static_cast<std::size_t>(link.anchor)];
  }
  return f;
}

/// Dihedral of joint j measured on coordinates; nullopt if not measurable.
inline std::optional<double> measure_joint(const Chain& chain, const Positions& r, int j) {
  const auto& d = chain.joint_link(j).dihedral_atoms;
  for (int a : d)
    if (a < 0) return std::nullopt;
  auto at = [&](int a) -> const Vec3& { return r[static_cast<std::size_t>(a)]; };
  return dihedral(at(d[0]), at(d[1]), at(d[2]), at(d[3]));
}

namespace detail {

inline Vec3 plane_vector(const PlaneRow& row, const Vec3& b_ca_n, const Vec3& b_n_ca) {
  return row.c1 * b_ca_n + row.c2 * b_n_ca;
}

struct LinkSpec {
  int parent;
  JointKind kind;
  int residue;
  int chi;
  int anchor;
  Vec3 axis0;
  std::array<int, 4> dihedral_atoms;
  double zp_value;
};

inline int add_link(Chain& chain, const LinkSpec& s) {
  Link l;
  l.parent = s.parent;
  l.kind = s.kind;
  l.residue = s.residue;
  l.chi = s.chi;
  l.anchor = s.anchor;
  l.axis0 = s.axis0.normalized();
  l.dihedral_atoms = s.dihedral_atoms;
  l.zp_value = s.zp_value;
  chain.links.push_back(l);
  return static_cast<int>(chain.links.size()) - 1;
}

inline void finalize_links(Chain& chain) {
  for (auto& l : chain.links) l.atoms.clear();
  for (std::size_t a = 0; a < chain.atoms.size(); ++a)
    chain.links[static_cast<std::size_t>(chain.atoms[a].link)].atoms.push_back(static_cast<int>(a));
  chain.geometry.zp_unit_vectors.clear();
  for (std::size_t k = 1; k < chain.links.size(); ++k) chain.geometry.zp_unit_vectors.push_back(chain.links[k].axis0);
  chain.geometry.zp_body_vectors.clear();
  for (std::size_t i = 0; i < chain.residues.size(); ++i) {
    const auto& r = chain.residues[i];
    const Vec3& n = chain.atoms[static_cast<std::size_t>(r.n)].zp;
    const Vec3& ca = chain.atoms[static_cast<std::size_t>(r.ca)].zp;
    chain.geometry.zp_body_vectors.push_back(ca - n);
    if (i + 1 < chain.residues.size())
      chain.geometry.zp_body_vectors.push_back(chain.atoms[static_cast<std::size_t>(chain.residues[i + 1].n)].zp - ca);
  }
}

}  // namespace detail

/// Canonical chain from three-letter residue names. Peptide-plane atoms are
/// placed from the plane constants on an ideal trans N/CA skeleton in the xy
/// plane; side chains come from the residue templates.
inline Chain build_chain(const std::vector<std::string>& sequence, const TemplateLibrary& lib,
                         std::vector<Omega> omega = {}, PlaneModel plane = PlaneModel::Ideal) {
  using namespace canonical;
  const std::size_t m = sequence.size();
  if (m == 0) throw ConfigError("build_chain: empty sequence");
  if (omega.empty()) omega.assign(m, Omega::Trans);
  if (omega.size() != m) throw ConfigError("build_chain: omega list length mismatch");
  std::vector<const ResidueTemplate*> tpl;
  for (const auto& s : sequence) {
    if (!is_amino_acid(s)) throw ConfigError("unknown residue code " + s);
    tpl.push_back(&lib.at(s));
  }

  // Skeleton N, CA, C for residues 0..m (index m is virtual).
  std::vector<Vec3> N(m + 1), CA(m + 1), C(m + 1);
  N[0] = Vec3::Zero();
  CA[0] = Vec3(kNCa, 0.0, 0.0);
  const double t0 = deg2rad(180.0 - kAngNCaC);
  C[0] = CA[0] + kCaC * Vec3(std::cos(t0), std::sin(t0), 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const double w = omega[i] == Omega::Cis ? 0.0 : 180.0;
    N[i + 1] = place_atom(N[i], CA[i], C[i], kCN, kAngCaCN, 180.0);
    CA[i + 1] = place_atom(CA[i], C[i], N[i + 1], kNCa, kAngCNCa, w);
    C[i + 1] = place_atom(C[i], N[i + 1], CA[i + 1], kCaC, kAngNCaC, 180.0);
  }

  // Peptide-plane atoms.
  std::vector<Vec3> Cpos(m), O(m), H(m + 1);
  for (std::size_t i = 0; i < m; ++i) {
    const Vec3 b1 = N[i + 1] - CA[i];
    const Vec3 b2 = CA[i + 1] - N[i + 1];
    if (omega[i] == Omega::Trans && plane == PlaneModel::Table) {
      Cpos[i] = CA[i] + detail::plane_vector(plane_row("CaC"), b1, b2);
      O[i] = Cpos[i] + detail::plane_vector(plane_row("CO"), b1, b2);
      H[i + 1] = N[i + 1] + detail::plane_vector(plane_row("NH"), b1, b2);
    } else {
      Cpos[i] = C[i];
      O[i] = place_atom(N[i + 1], CA[i], C[i], kCO, 120.5, 180.0);
      H[i + 1] = place_atom(CA[i + 1], C[i], N[i + 1], kNH, 119.0, 180.0);
    }
  }

  Chain chain;
  chain.geometry.omega = omega;
  chain.geometry.plane_model = plane;
  // base link
  detail::add_link(chain, {-1, JointKind::Phi, -1, 0, -1, Vec3::UnitX(), {-1, -1, -1, -1}, 0.0});

  auto add_atom = [&](const std::string& name, const std::string& el, int res, int link, const Vec3& p) {
    Atom a;
    a.name = name;
    a.element = el;
    a.res_name = sequence[static_cast<std::size_t>(res)];
    a.residue = res;
    a.res_seq = res + 1;
    a.link = link;
    a.zp = p;
    chain.atoms.push_back(a);
    return static_cast<int>(chain.atoms.size()) - 1;
  };
  auto bond = [&](int a, int b) { chain.bonds.emplace_back(a, b); };

  int prev_psi_link = 0;
  int prev_c = -1;
  for (std::size_t i = 0; i < m; ++i) {
    const int ri = static_cast<int>(i);
    const auto& t = *tpl[i];
    Residue res;
    res.name = t.name;
    res.res_seq = ri + 1;

    const int n_link = prev_psi_link;
    res.n = add_atom("N", "N", ri, n_link, N[i]);
    if (prev_c >= 0) bond(prev_c, res.n);
    if (i == 0) {
      // N-terminal amine hydrogens, in plane at +-120 deg from N->CA
      const Vec3 u = (CA[0] - N[0]).normalized();
      for (int s : {+1, -1}) {
        const double a = deg2rad(120.0 * s);
        const Vec3 d(u.x() * std::cos(a) - u.y() * std::sin(a), u.x() * std::sin(a) + u.y() * std::cos(a), 0.0);
        bond(res.n, add_atom(s > 0 ? "H1" : "H2", "H", ri, 0, N[0] + kNH * d));
      }
    } else {
      bond(res.n, add_atom("H", "H", ri, n_link, H[i]));
    }

    const std::array<int, 4> phi_atoms{prev_c, -1, -1, -1};
    const int phi_link = detail::add_link(chain, {n_link, JointKind::Phi, ri, 0, res.n, CA[i] - N[i], phi_atoms, 180.0});
    res.phi_joint = phi_link - 1;
    res.ca = add_atom("CA", "C", ri, phi_link, CA[i]);
    bond(res.n, res.ca);

    // side chain atoms from the Z-matrix
    std::map<std::string, Vec3> pos{{"N", N[i]}, {"CA", CA[i]}, {"C", Cpos[i]}};
    std::map<std::string, int> idx{{"N", res.n}, {"CA", res.ca}};
    std::vector<std::pair<std::string, Vec3>> sc;
    for (const auto& ta : t.atoms) {
      const Vec3 p = place_atom(pos.at(ta.dihedral_ref), pos.at(ta.angle_ref), pos.at(ta.parent), ta.bond, ta.angle,
                                ta.dihedral);
      pos[ta.name] = p;
    }
    std::vector<int> chi_links(t.chis.size() + 1, phi_link);
    // chi links must be created before their atoms are assigned; anchors are atoms in the parent link,
    // so create atoms of link k before link k + 1.
    for (int k = 0; k <= t.side_links(); ++k) {
      if (k > 0) {
        const auto& c = t.chis[static_cast<std::size_t>(k - 1)];
        const auto& pa = pos.at(c.atoms[0]);
        const auto& pb = pos.at(c.atoms[1]);
        const auto& pc = pos.at(c.atoms[2]);
        const auto& pd = pos.at(c.atoms[3]);
        const int anchor = idx.at(c.atoms[2]);
        if (chain.atoms[static_cast<std::size_t>(anchor)].link != chi_links[static_cast<std::size_t>(k - 1)])
          throw ConfigError("template " + t.name + ": chi " + std::to_string(k) + " axis atom not on the parent link");
        chi_links[static_cast<std::size_t>(k)] = detail::add_link(
            chain, {chi_links[static_cast<std::size_t>(k - 1)], JointKind::Chi, ri, k, anchor, pc - pb,
                    {-1, -1, -1, -1}, dihedral(pa, pb, pc, pd)});
        res.chi_joints.push_back(chi_links[static_cast<std::size_t>(k)] - 1);
      }
      for (const auto& ta : t.atoms) {
        if (ta.link != k) continue;
        const int a = add_atom(ta.name, ta.element, ri, chi_links[static_cast<std::size_t>(k)], pos.at(ta.name));
        idx[ta.name] = a;
      }
    }
    for (const auto& ta : t.atoms) bond(idx.at(ta.parent), idx.at(ta.name));

    const int psi_link = detail::add_link(chain, {phi_link, JointKind::Psi, ri, 0, res.ca, Cpos[i] - CA[i],
                                                  {-1, -1, -1, -1}, 180.0});
    res.psi_joint = psi_link - 1;
    res.c = add_atom("C", "C", ri, psi_link, Cpos[i]);
    idx["C"] = res.c;
    chain.links[static_cast<std::size_t>(psi_link)].dihedral_atoms = {res.n, res.ca, res.c, -1};
    bond(res.ca, res.c);
    bond(res.c, add_atom("O", "O", ri, psi_link, O[i]));
    for (const auto& [a, b] : t.ring_bonds) bond(idx.at(a), idx.at(b));
    // chi dihedral atoms (C may be referenced, so resolve after it exists)
    for (std::size_t k = 0; k < t.chis.size(); ++k) {
      auto& l = chain.links[static_cast<std::size_t>(chi_links[k + 1])];
      for (int q = 0; q < 4; ++q) l.dihedral_atoms[static_cast<std::size_t>(q)] = idx.at(t.chis[k].atoms[static_cast<std::size_t>(q)]);
    }
    auto& phil = chain.links[static_cast<std::size_t>(phi_link)];
    if (prev_c >= 0) phil.dihedral_atoms = {prev_c, res.n, res.ca, res.c};
    else phil.dihedral_atoms = {-1, -1, -1, -1};

    if (i + 1 == m) {
      const Vec3 d = (N[m] - Cpos[i]).normalized();
      const int oxt = add_atom("OXT", "O", ri, psi_link, Cpos[i] + kCOxt * d);
      bond(res.c, oxt);
      chain.links[static_cast<std::size_t>(psi_link)].dihedral_atoms = {res.n, res.ca, res.c, oxt};
    }
    chain.residues.push_back(res);
    prev_psi_link = psi_link;
    prev_c = res.c;
  }
  // psi dihedral atoms use the next residue's N
  for (std::size_t i = 0; i + 1 < m; ++i)
    chain.links[static_cast<std::size_t>(chain.residues[i].psi_joint + 1)].dihedral_atoms[3] = chain.residues[i + 1].n;
  detail::finalize_links(chain);
  return chain;
}

inline Chain build_chain(const std::vector<std::string>& sequence, const TemplateLibrary& lib, Omega all,
                         PlaneModel plane = PlaneModel::Ideal) {
  return build_chain(sequence, lib, std::vector<Omega>(sequence.size(), all), plane);
}

/// Rotamer defaults (chi at theta = 0) of a template, measured on a canonical build.
inline std::vector<double> template_chi0(const TemplateLibrary& lib, const std::string& name3) {
  const Chain c = build_chain({name3}, lib);
  std::vector<double> out;
  for (int j : c.residues[0].chi_joints) out.push_back(c.joint_link(j).zp_value);
  return out;
}

// ---- imported geometry ----

struct InputAtom {
  std::string name;
  std::string element;
  std::string res_name;
  int res_seq = 0;
  char icode = ' ';
  char chain_id = 'A';
  Vec3 pos = Vec3::Zero();
};

struct InputResidue {
  std::string name;
  int res_seq = 0;
  char chain_id = 'A';
  std::vector<InputAtom> atoms;
};

struct ImportedChain {
  Chain chain;
  Conformation native;  // theta that reproduces the input coordinates
};

namespace detail {

inline bool is_amide_h(const std::string& n) {
  return n == "H" || n == "HN" || n == "H1" || n == "H2" || n == "H3" || n == "HN1" || n == "HN2" || n == "HN3" ||
         n == "1H" || n == "2H" || n == "3H" || n == "HT1" || n == "HT2" || n == "HT3";
}
inline bool is_alpha_h(const std::string& n) {
  return n == "HA" || n == "HA2" || n == "HA3" || n == "1HA" || n == "2HA" || n == "HA1";
}
inline bool is_carboxyl(const std::string& n) { return n == "C" || n == "O" || n == "OXT" || n == "OT1" || n == "OT2"; }

inline double covalent_radius(const std::string& el) {
  if (el == "H") return 0.31;
  if (el == "C") return 0.76;
  if (el == "N") return 0.71;
  if (el == "O") return 0.66;
  if (el == "S") return 1.05;
  if (el == "P") return 1.07;
  if (el == "SE") return 1.20;
  return 1.0;
}

inline bool bonded_by_distance(const Atom& a, const Atom& b, const Vec3& pa, const Vec3& pb) {
  if (a.element == "H" && b.element == "H") return false;
  const double cut = covalent_radius(a.element) + covalent_radius(b.element) + 0.4;
  return (pa - pb).squaredNorm() < cut * cut;
}

/// Rotates the subtree of `link` about its current axis (through the anchor) by deg.
inline void rotate_subtree(const Chain& chain, Positions& r, const std::vector<int>& subtree_end, int link, double deg) {
  const auto& l = chain.links[static_cast<std::size_t>(link)];
  const auto& d = l.dihedral_atoms;
  const Vec3 p = r[static_cast<std::size_t>(d[1] >= 0 ? d[1] : l.anchor)];
  const Vec3 axis = (r[static_cast<std::size_t>(d[2])] - p).normalized();
  const RigidTransform R = joint_rotation(axis, deg);
  for (int k = link; k < subtree_end[static_cast<std::size_t>(link)]; ++k)
    for (int a : chain.links[static_cast<std::size_t>(k)].atoms)
      r[static_cast<std::size_t>(a)] = p + R * (r[static_cast<std::size_t>(a)] - p);
}

}  // namespace detail

/// Builds a chain that keeps the as-read peptide and side-chain geometry.
/// Residues must carry N, CA and C. Side chains get chi joints only where a
/// template exists and all atoms of the chi definition are present.
inline ImportedChain import_chain(const std::vector<InputResidue>& residues, const std::vector<InputAtom>& hetero,
                                  const TemplateLibrary& lib) {
  const std::size_t m = residues.size();
  if (m == 0) throw GeometryError("import_chain: no residues");
  Chain chain;
  detail::add_link(chain, {-1, JointKind::Phi, -1, 0, -1, Vec3::UnitX(), {-1, -1, -1, -1}, 0.0});
  Positions pos;

  auto find = [](const InputResidue& r, const std::string& n) -> const InputAtom* {
    for (const auto& a : r.atoms)
      if (a.name == n) return &a;
    return nullptr;
  };

  bool any_h = false;
  int prev_psi_link = 0;
  int prev_c = -1;
  for (std::size_t i = 0; i < m; ++i) {
    const auto& in = residues[i];
    const int ri = static_cast<int>(i);
    for (const char* bb : {"N", "CA", "C"})
      if (!find(in, bb))
        throw GeometryError("residue " + in.name + " " + std::to_string(in.res_seq) + " is missing backbone atom " + bb);
    const ResidueTemplate* t = lib.find(in.name);
    Residue res;
    res.name = in.name;
    res.res_seq = in.res_seq;
    res.chain_id = in.chain_id;

    // which chi links survive: all four atoms present, and the previous chi kept
    int nchi = 0;
    if (t) {
      for (const auto& c : t->chis) {
        bool ok = true;
        for (const auto& n : c.atoms)
          if (!find(in, n)) ok = false;
        bool has_atoms = false;
        for (const auto& ta : t->atoms)
          if (ta.link == c.k && find(in, ta.name)) has_atoms = true;
        if (!ok || !has_atoms) break;
        ++nchi;
      }
    }
    auto link_of_template_atom = [&](const std::string& n) -> int {
      if (!t) return 0;
      const auto* ta = t->find(n);
      if (!ta) return 0;
      return std::min(ta->link, nchi);
    };

    const int n_link = prev_psi_link;
    const int phi_link = detail::add_link(chain, {n_link, JointKind::Phi, ri, 0, -1, Vec3::UnitX(), {-1, -1, -1, -1}, 180.0});
    std::vector<int> chi_links{phi_link};
    for (int k = 1; k <= nchi; ++k)
      chi_links.push_back(detail::add_link(chain, {chi_links.back(), JointKind::Chi, ri, k, -1, Vec3::UnitX(),
                                                   {-1, -1, -1, -1}, 0.0}));
    const int psi_link = detail::add_link(chain, {phi_link, JointKind::Psi, ri, 0, -1, Vec3::UnitX(), {-1, -1, -1, -1}, 180.0});
    res.phi_joint = phi_link - 1;
    res.psi_joint = psi_link - 1;
    for (int k = 1; k <= nchi; ++k) res.chi_joints.push_back(chi_links[static_cast<std::size_t>(k)] - 1);

    std::map<std::string, int> idx;
    for (const auto& a : in.atoms) {
      Atom at;
      at.name = a.name;
      at.element = a.element;
      at.res_name = in.name;
      at.residue = ri;
      at.res_seq = in.res_seq;
      at.chain_id = in.chain_id;
      if (a.name == "N" || detail::is_amide_h(a.name)) at.link = n_link;
      else if (a.name == "CA" || detail::is_alpha_h(a.name)) at.link = phi_link;
      else if (detail::is_carboxyl(a.name)) at.link = psi_link;
      else at.link = chi_links[static_cast<std::size_t>(link_of_template_atom(a.name))];
      if (at.element == "H") any_h = true;
      chain.atoms.push_back(at);
      pos.push_back(a.pos);
      idx[a.name] = static_cast<int>(chain.atoms.size()) - 1;
    }
    res.n = idx.at("N");
    res.ca = idx.at("CA");
    res.c = idx.at("C");

    auto& phil = chain.links[static_cast<std::size_t>(phi_link)];
    phil.anchor = res.n;
    if (prev_c >= 0) phil.dihedral_atoms = {prev_c, res.n, res.ca, res.c};
    else phil.dihedral_atoms = {-1, res.n, res.ca, -1};
    auto& psil = chain.links[static_cast<std::size_t>(psi_link)];
    psil.anchor = res.ca;
    psil.dihedral_atoms = {res.n, res.ca, res.c, -1};
    if (i + 1 == m) {
      for (const char* o : {"OXT", "OT2"})
        if (idx.count(o)) {
          psil.dihedral_atoms[3] = idx.at(o);
          break;
        }
    }
    if (t) {
      const auto chi0 = template_chi0(lib, in.name);
      for (int k = 1; k <= nchi; ++k) {
        auto& l = chain.links[static_cast<std::size_t>(chi_links[static_cast<std::size_t>(k)])];
        const auto& c = t->chis[static_cast<std::size_t>(k - 1)];
        for (int q = 0; q < 4; ++q) l.dihedral_atoms[static_cast<std::size_t>(q)] = idx.at(c.atoms[static_cast<std::size_t>(q)]);
        l.anchor = idx.at(c.atoms[2]);
        l.zp_value = chi0[static_cast<std::size_t>(k - 1)];
        if (chain.atoms[static_cast<std::size_t>(l.anchor)].link != l.parent)
          throw GeometryError("template " + t->name + ": chi axis atom not on the parent link");
      }
    }
    chain.residues.push_back(res);
    prev_psi_link = psi_link;
    prev_c = res.c;
  }
  for (std::size_t i = 0; i + 1 < m; ++i)
    chain.links[static_cast<std::size_t>(chain.residues[i].psi_joint + 1)].dihedral_atoms[3] = chain.residues[i + 1].n;
  if (!any_h) chain.warnings.push_back("structure has no hydrogen atoms; hydrogens are not added");

  // bonds: by name where the parent is known (backbone and template atoms),
  // by distance otherwise, within a residue and across consecutive residues
  {
    std::set<std::pair<int, int>> have;
    auto add_bond = [&](int a, int b) {
      if (a > b) std::swap(a, b);
      if (have.insert({a, b}).second) chain.bonds.emplace_back(a, b);
    };
    for (std::size_t i = 0; i < m; ++i) {
      const auto& res = chain.residues[i];
      const ResidueTemplate* t = lib.find(res.name);
      std::map<std::string, int> idx;
      for (std::size_t a = 0; a < chain.atoms.size(); ++a)
        if (chain.atoms[a].residue == static_cast<int>(i) && !chain.atoms[a].hetero) idx[chain.atoms[a].name] = static_cast<int>(a);
      add_bond(res.n, res.ca);
      add_bond(res.ca, res.c);
      for (const auto& [name, a] : idx) {
        if (detail::is_amide_h(name)) add_bond(res.n, a);
        else if (detail::is_alpha_h(name)) add_bond(res.ca, a);
        else if (name != "C" && detail::is_carboxyl(name)) add_bond(res.c, a);
        else if (t) {
          if (const auto* ta = t->find(name); ta && idx.count(ta->parent)) add_bond(idx.at(ta->parent), a);
        }
      }
      if (t)
        for (const auto& [a, b] : t->ring_bonds)
          if (idx.count(a) && idx.count(b)) add_bond(idx.at(a), idx.at(b));
    }
    std::vector<std::vector<int>> by_res(m);
    for (std::size_t a = 0; a < chain.atoms.size(); ++a) by_res[static_cast<std::size_t>(chain.atoms[a].residue)].push_back(static_cast<int>(a));
    for (std::size_t i = 0; i < m; ++i) {
      const auto& v = by_res[i];
      for (std::size_t x = 0; x < v.size(); ++x)
        for (std::size_t y = x + 1; y < v.size(); ++y) {
          const auto a = static_cast<std::size_t>(v[x]), b = static_cast<std::size_t>(v[y]);
          if (detail::bonded_by_distance(chain.atoms[a], chain.atoms[b], pos[a], pos[b])) add_bond(v[x], v[y]);
        }
      if (i + 1 < m) add_bond(chain.residues[i].c, chain.residues[i + 1].n);
    }
  }

  // hetero atoms ride on the base link
  for (const auto& h : hetero) {
    Atom at;
    at.name = h.name;
    at.element = h.element;
    at.res_name = h.res_name;
    at.res_seq = h.res_seq;
    at.chain_id = h.chain_id;
    at.hetero = true;
    at.link = 0;
    chain.atoms.push_back(at);
    pos.push_back(h.pos);
  }
  detail::finalize_links(chain);

  // axes from the as-read geometry (re-derived after unwinding below)
  // native theta from measured dihedrals, then unwind every joint to its ZP value
  ImportedChain out;
  out.native = zero_conformation(chain);
  const auto send = chain.subtree_end();
  for (int j = 0; j < chain.dof(); ++j) {
    const auto meas = measure_joint(chain, pos, j);
    if (!meas) continue;
    const double th = wrap360(*meas - chain.joint_link(j).zp_value);
    out.native.theta[static_cast<std::size_t>(j)] = th;
    detail::rotate_subtree(chain, pos, send, j + 1, -th);
  }

  chain.origin_offset = pos[static_cast<std::size_t>(chain.residues[0].n)];
  for (std::size_t a = 0; a < chain.atoms.size(); ++a) chain.atoms[a].zp = pos[a] - chain.origin_offset;
  for (std::size_t k = 1; k < chain.links.size(); ++k) {
    auto& l = chain.links[k];
    const auto& d = l.dihedral_atoms;
    const int b = d[1] >= 0 ? d[1] : l.anchor;
    l.axis0 = (chain.atoms[static_cast<std::size_t>(d[2] >= 0 ? d[2] : l.anchor)].zp - chain.atoms[static_cast<std::size_t>(b)].zp).normalized();
  }
  // phi links: axis N -> CA regardless of dihedral availability
  for (const auto& r : chain.residues) {
    auto& l = chain.links[static_cast<std::size_t>(r.phi_joint + 1)];
    l.axis0 = (chain.atoms[static_cast<std::size_t>(r.ca)].zp - chain.atoms[static_cast<std::size_t>(r.n)].zp).normalized();
    auto& p = chain.links[static_cast<std::size_t>(r.psi_joint + 1)];
    p.axis0 = (chain.atoms[static_cast<std::size_t>(r.c)].zp - chain.atoms[static_cast<std::size_t>(r.ca)].zp).normalized();
  }
  detail::finalize_links(chain);
  out.chain = std::move(chain);
  return out;
}

}  // namespace protofold
