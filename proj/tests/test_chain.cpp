#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace protofold;

namespace {

const TemplateLibrary& lib() { return default_templates(); }

std::vector<std::string> rep(const std::string& r, int n) { return std::vector<std::string>(static_cast<std::size_t>(n), r); }

int backbone_links(const Chain& c) {
  int k = 0;
  for (std::size_t i = 1; i < c.links.size(); ++i) k += c.links[i].kind != JointKind::Chi;
  return k;
}

}  // namespace

TEST(Chain, SingleGlycineHasOnlyBackboneLinks) {
  const Chain c = build_chain({"GLY"}, lib());
  EXPECT_EQ(c.residue_count(), 1);
  EXPECT_EQ(backbone_links(c), 2);
  EXPECT_EQ(c.dof(), 2);
  EXPECT_TRUE(c.residues[0].chi_joints.empty());
}

TEST(Chain, PolyAlanineLinkCounts) {
  const Chain c = build_chain(rep("ALA", 15), lib());
  EXPECT_EQ(c.residue_count(), 15);
  EXPECT_EQ(backbone_links(c), 30);
  for (const auto& r : c.residues) EXPECT_EQ(r.chi_joints.size(), 1u);
  EXPECT_EQ(c.dof(), 45);
  EXPECT_LE(c.dof(), 6 * 15);
}

TEST(Chain, DofMatchesSideLinkSum) {
  const std::vector<std::string> seq{"SER", "GLY", "CYS", "ALA"};
  const Chain c = build_chain(seq, lib());
  int l = 2 * 4;
  for (const auto& s : seq) l += lib().at(s).side_links();
  EXPECT_EQ(c.dof(), l);
}

TEST(Chain, EveryAtomInExactlyOneLink) {
  const Chain c = build_chain({"SER", "CYS", "ALA", "GLY"}, lib());
  std::vector<int> seen(c.atoms.size(), 0);
  for (const auto& l : c.links)
    for (int a : l.atoms) ++seen[static_cast<std::size_t>(a)];
  for (int s : seen) EXPECT_EQ(s, 1);
}

TEST(Chain, BuildErrors) {
  EXPECT_THROW(build_chain({}, lib()), ConfigError);
  EXPECT_THROW(build_chain({"XYZ"}, lib()), ConfigError);
  EXPECT_THROW(build_chain({"LYS"}, lib()), ConfigError);  // no template shipped
}

TEST(Chain, JointRotationBasics) {
  EXPECT_TRUE(joint_rotation(Vec3(0.6, 0.8, 0.0), 0.0).isApprox(Mat3::Identity(), 1e-15));
  const Vec3 y = joint_rotation(Vec3::UnitZ(), 90.0) * Vec3::UnitX();
  EXPECT_LT((y - Vec3::UnitY()).norm(), 1e-12);
  EXPECT_THROW(joint_rotation(Vec3(1.0, 1.0, 0.0), 10.0), GeometryError);

  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> a(-360, 360);
  for (int t = 0; t < 100; ++t) {
    const Vec3 u = Vec3(g(rng), g(rng), g(rng)).normalized();
    const RigidTransform m = joint_rotation(u, a(rng));
    EXPECT_TRUE(is_rotation(m));
    EXPECT_LT((m * u - u).norm(), 1e-12);
  }
}

TEST(Chain, RightHandRuleIncreasesDihedral) {
  // rotating d about b->c by +delta raises the dihedral a-b-c-d by +delta
  const Vec3 a(1, 1, 0), b(0, 0, 0), c(0, 0, 1), d(1, 0, 1.5);
  const double before = dihedral(a, b, c, d);
  const Vec3 d2 = c + joint_rotation(Vec3::UnitZ(), 25.0) * (d - c);
  EXPECT_NEAR(wrap180(dihedral(a, b, c, d2) - before), 25.0, 1e-10);
}

TEST(Chain, ZeroConformationTransformsAreIdentity) {
  const Chain c = build_chain({"ALA", "SER", "GLY"}, lib());
  for (const auto& m : link_transforms(c, zero_conformation(c))) EXPECT_TRUE(m.isApprox(Mat3::Identity(), 1e-15));
}

TEST(Chain, SingleFirstJointPropagates) {
  const Chain c = build_chain({"GLY", "GLY", "GLY"}, lib());
  Conformation conf = zero_conformation(c);
  conf.theta[0] = 30.0;
  const auto m = link_transforms(c, conf);
  const RigidTransform r = joint_rotation(c.links[1].axis0, 30.0);
  for (std::size_t k = 1; k < m.size(); ++k) EXPECT_LT((m[k] - r).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Chain, PrefixProductsMatchNaiveProducts) {
  const Chain c = build_chain({"SER", "CYS", "ALA", "GLY", "ALA", "SER", "CYS", "GLY", "ALA", "SER"}, lib());
  std::mt19937_64 rng(11);
  for (int t = 0; t < 10; ++t) {
    const auto conf = pft::random_conformation(c, rng);
    const auto m = link_transforms(c, conf);
    for (std::size_t k = 0; k < m.size(); ++k) {
      EXPECT_TRUE(is_rotation(m[k]));
      EXPECT_LT((m[k] - pft::naive_transform(c, conf, static_cast<int>(k))).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(Chain, ZeroPositionBackboneIsPlanar) {
  const Chain c = build_chain(rep("ALA", 8), lib());
  const auto r = forward_kinematics(c, zero_conformation(c));
  EXPECT_LT(r[static_cast<std::size_t>(c.residues[0].n)].norm(), 1e-15);
  for (std::size_t a = 0; a < c.atoms.size(); ++a) {
    const auto& n = c.atoms[a].name;
    if (n == "N" || n == "CA" || n == "C" || n == "O" || n == "H" || n == "H1" || n == "H2" || n == "OXT")
      EXPECT_LT(std::abs(r[a].z()), 1e-9) << n;
  }
  for (const auto& u : c.geometry.zp_unit_vectors) EXPECT_NEAR(u.norm(), 1.0, 1e-12);
  EXPECT_EQ(c.geometry.plane_constants.size(), 4u);
}

TEST(Chain, PlaneConstantsPlacePeptideAtoms) {
  const Chain c = build_chain({"GLY", "GLY"}, lib(), {}, PlaneModel::Table);
  const auto& r0 = c.residues[0];
  const auto& r1 = c.residues[1];
  auto P = [&](int a) { return c.atoms[static_cast<std::size_t>(a)].zp; };
  const Vec3 b1 = P(r1.n) - P(r0.ca);
  const Vec3 b2 = P(r1.ca) - P(r1.n);
  const Vec3 cac = -0.2761 * b1 + 1.4488 * b2;
  EXPECT_LT((P(r0.c) - P(r0.ca) - cac).norm(), 1e-12);
  const Vec3 co = -1.3324 * b1 + 2.3401 * b2;
  EXPECT_LT((P(c.find_atom(0, "O")) - P(r0.c) - co).norm(), 1e-12);
  const Vec3 nh = 1.4103 * b1 - 2.5111 * b2;
  EXPECT_LT((P(c.find_atom(1, "H")) - P(r1.n) - nh).norm(), 1e-12);
}

TEST(Chain, IdealPlaneGeometry) {
  const Chain c = build_chain({"GLY", "GLY", "GLY"}, lib());
  EXPECT_EQ(c.geometry.plane_model, PlaneModel::Ideal);
  auto P = [&](int a) { return c.atoms[static_cast<std::size_t>(a)].zp; };
  for (int i = 0; i < 2; ++i) {
    const auto& r0 = c.residues[static_cast<std::size_t>(i)];
    const auto& r1 = c.residues[static_cast<std::size_t>(i) + 1];
    const Vec3 o = P(c.find_atom(i, "O")), h = P(c.find_atom(i + 1, "H"));
    EXPECT_NEAR((o - P(r0.c)).norm(), 1.231, 1e-3);
    EXPECT_NEAR((h - P(r1.n)).norm(), 1.01, 1e-3);
    EXPECT_NEAR((P(r1.n) - P(r0.c)).norm(), 1.329, 1e-3);
    // all six plane atoms share one plane
    const Vec3 nrm = (P(r0.c) - P(r0.ca)).cross(P(r1.n) - P(r0.ca)).normalized();
    for (int a : {r1.ca, c.find_atom(i, "O"), c.find_atom(i + 1, "H")})
      EXPECT_NEAR(nrm.dot(P(a) - P(r0.ca)), 0.0, 1e-9);
    // O and H sit trans across the C-N bond
    EXPECT_LT((o - P(r0.c)).dot(h - P(r1.n)), 0.0);
  }
}

TEST(Chain, LAlanineChirality) {
  const Chain c = build_chain({"ALA"}, lib());
  auto P = [&](const char* n) { return c.atoms[static_cast<std::size_t>(c.find_atom(0, n))].zp; };
  // L residues: C-N-CA-CB near -122 deg, and the CA improper N-C-CB has the usual sign
  EXPECT_NEAR(dihedral(P("C"), P("N"), P("CA"), P("CB")), -122.5, 1.0);
  const double vol = (P("N") - P("CA")).dot((P("C") - P("CA")).cross(P("CB") - P("CA")));
  EXPECT_GT(vol, 0.0);
}

TEST(Chain, BondLengthsAndRigidityPreserved) {
  const Chain c = build_chain({"SER", "CYS", "ALA", "GLY", "SER"}, lib());
  const auto r0 = forward_kinematics(c, zero_conformation(c));
  std::mt19937_64 rng(3);
  for (int t = 0; t < 10; ++t) {
    const auto r = forward_kinematics(c, pft::random_conformation(c, rng));
    for (const auto& [a, b] : c.bonds)
      EXPECT_NEAR((r[static_cast<std::size_t>(a)] - r[static_cast<std::size_t>(b)]).norm(),
                  (r0[static_cast<std::size_t>(a)] - r0[static_cast<std::size_t>(b)]).norm(), 1e-9);
    for (const auto& l : c.links)
      for (int a : l.atoms)
        for (int b : l.atoms)
          EXPECT_NEAR((r[static_cast<std::size_t>(a)] - r[static_cast<std::size_t>(b)]).norm(),
                      (r0[static_cast<std::size_t>(a)] - r0[static_cast<std::size_t>(b)]).norm(), 1e-9);
  }
}

TEST(Chain, ForwardKinematicsMatchesSequentialRotationOracle) {
  const Chain c = build_chain({"SER", "CYS", "ALA", "GLY", "ALA", "SER", "CYS", "GLY", "ALA", "SER"}, lib());
  std::mt19937_64 rng(5);
  for (int t = 0; t < 5; ++t) {
    const auto conf = pft::random_conformation(c, rng);
    EXPECT_LT(pft::max_dev(forward_kinematics(c, conf), pft::sequential_rotation_oracle(c, conf)), 1e-9);
  }
}

TEST(Chain, MeasuredDihedralsFollowTheIndexMap) {
  const Chain c = build_chain({"SER", "CYS", "ALA", "GLY", "ALA"}, lib());
  std::mt19937_64 rng(9);
  for (int t = 0; t < 10; ++t) {
    const auto conf = pft::random_conformation(c, rng);
    const auto r = forward_kinematics(c, conf);
    for (int j = 0; j < c.dof(); ++j) {
      const auto m = measure_joint(c, r, j);
      if (!m) continue;
      EXPECT_NEAR(wrap180(*m - joint_dihedral(c, conf, j)), 0.0, 1e-8) << j;
    }
  }
}

TEST(Chain, IndexMapRoundTrip) {
  const Chain c = build_chain({"SER", "ALA", "CYS"}, lib());
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-180.0, 180.0);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> phi(3), psi(3);
    std::vector<std::vector<double>> chi(3);
    for (std::size_t i = 0; i < 3; ++i) {
      phi[i] = u(rng);
      psi[i] = u(rng);
      for (std::size_t k = 0; k < c.residues[i].chi_joints.size(); ++k) chi[i].push_back(u(rng));
    }
    const auto conf = from_dihedrals(c, phi, psi, chi);
    for (double th : conf.theta) {
      EXPECT_GE(th, 0.0);
      EXPECT_LT(th, 360.0);
    }
    const auto d = to_dihedrals(c, conf);
    for (std::size_t i = 0; i < 3; ++i) {
      EXPECT_NEAR(d.phi[i], phi[i], 1e-9);
      EXPECT_NEAR(d.psi[i], psi[i], 1e-9);
      for (std::size_t k = 0; k < chi[i].size(); ++k) EXPECT_NEAR(d.chi[i][k], chi[i][k], 1e-9);
    }
  }
  // ZP: phi = psi = -180, chi at the rotamer defaults
  const auto z = to_dihedrals(c, zero_conformation(c));
  EXPECT_DOUBLE_EQ(z.phi[0], -180.0);
  EXPECT_DOUBLE_EQ(z.psi[2], -180.0);
  EXPECT_NEAR(z.chi[1][0], 60.0, 1e-9);  // ALA HB1
}

TEST(Chain, ApplyDeltas) {
  const Chain c = build_chain({"GLY", "GLY"}, lib());
  Conformation conf = zero_conformation(c);
  conf.theta[0] = 359.0;
  const auto same = apply_deltas(conf, std::vector<double>(4, 0.0));
  EXPECT_EQ(same.theta, conf.theta);
  std::vector<double> d(4, 0.0);
  d[0] = 2.0;
  EXPECT_NEAR(apply_deltas(conf, d).theta[0], 1.0, 1e-12);
  conf.frozen[1] = 1;
  d[1] = 90.0;
  EXPECT_EQ(apply_deltas(conf, d).theta[1], 0.0);
  EXPECT_THROW(apply_deltas(conf, std::vector<double>(3, 0.0)), ConfigError);
  d[0] = -1.0;
  EXPECT_NEAR(apply_deltas(zero_conformation(c), d).theta[0], 359.0, 1e-12);
}

TEST(Chain, CisPeptide) {
  const Chain c = build_chain({"GLY", "ALA", "GLY"}, lib(), std::vector<Omega>{Omega::Cis, Omega::Trans, Omega::Trans});
  auto P = [&](int a) { return c.atoms[static_cast<std::size_t>(a)].zp; };
  const auto& r0 = c.residues[0];
  const auto& r1 = c.residues[1];
  EXPECT_NEAR(dihedral(P(r0.ca), P(r0.c), P(r1.n), P(r1.ca)), 0.0, 1e-9);
  const auto& r2 = c.residues[2];
  EXPECT_NEAR(std::abs(dihedral(P(r1.ca), P(r1.c), P(r2.n), P(r2.ca))), 180.0, 1e-6);
}

namespace {

std::vector<InputResidue> to_input(const Chain& c, const Positions& r, const Vec3& shift) {
  std::vector<InputResidue> out;
  for (std::size_t a = 0; a < c.atoms.size(); ++a) {
    const auto& at = c.atoms[a];
    if (out.empty() || out.back().res_seq != at.res_seq) {
      InputResidue ir;
      ir.name = at.res_name;
      ir.res_seq = at.res_seq;
      out.push_back(ir);
    }
    InputAtom ia;
    ia.name = at.name;
    ia.element = at.element;
    ia.res_name = at.res_name;
    ia.res_seq = at.res_seq;
    ia.pos = r[a] + shift;
    out.back().atoms.push_back(ia);
  }
  return out;
}

}  // namespace

TEST(Chain, ImportedGeometryKeepsTemplateBondLengths) {
  const Chain c = build_chain({"ALA", "SER", "CYS", "GLY", "ALA"}, lib());
  std::mt19937_64 rng(17);
  const auto conf = pft::random_conformation(c, rng);
  const auto r = forward_kinematics(c, conf);
  const Vec3 shift(12.5, -3.0, 7.25);
  const auto imp = import_chain(to_input(c, r, shift), {}, lib());
  const Chain& ic = imp.chain;
  ASSERT_EQ(ic.atoms.size(), c.atoms.size());
  EXPECT_EQ(ic.dof(), c.dof());
  // ZP bond lengths equal the canonical template ones
  for (const auto& [a, b] : c.bonds)
    EXPECT_NEAR((ic.atoms[static_cast<std::size_t>(a)].zp - ic.atoms[static_cast<std::size_t>(b)].zp).norm(),
                (c.atoms[static_cast<std::size_t>(a)].zp - c.atoms[static_cast<std::size_t>(b)].zp).norm(), 1e-6);
  // the unwound structure is the canonical ZP, and native theta reproduces the input
  // (up to a rigid motion; the N-terminal H atoms follow the unmeasurable first phi)
  const auto zi = forward_kinematics(ic, zero_conformation(ic));
  const auto zc = forward_kinematics(c, zero_conformation(c));
  auto free_h = [&](std::size_t a) { return c.atoms[a].link == 0 && c.atoms[a].name != "N"; };
  double worst = 0.0;
  for (std::size_t a = 0; a < zi.size(); ++a)
    for (std::size_t b = a + 1; b < zi.size(); ++b)
      if (!free_h(a) && !free_h(b)) worst = std::max(worst, std::abs((zi[a] - zi[b]).norm() - (zc[a] - zc[b]).norm()));
  EXPECT_LT(worst, 1e-6);
  const auto back = forward_kinematics(ic, imp.native);
  for (std::size_t a = 0; a < back.size(); ++a) EXPECT_LT((back[a] + ic.origin_offset - (r[a] + shift)).norm(), 1e-9);
  for (int j = 0; j < c.dof(); ++j)
    if (j != c.residues[0].phi_joint) EXPECT_NEAR(wrap180(imp.native.theta[static_cast<std::size_t>(j)] - conf.theta[static_cast<std::size_t>(j)]), 0.0, 1e-8);
}

TEST(Chain, ImportRequiresBackbone) {
  const Chain c = build_chain({"ALA", "GLY"}, lib());
  auto in = to_input(c, forward_kinematics(c, zero_conformation(c)), Vec3::Zero());
  auto& atoms = in[1].atoms;
  atoms.erase(std::remove_if(atoms.begin(), atoms.end(), [](const InputAtom& a) { return a.name == "CA"; }), atoms.end());
  EXPECT_THROW(import_chain(in, {}, lib()), GeometryError);
}

TEST(Chain, ImportWithoutHydrogensDropsEmptyChiLinks) {
  const Chain c = build_chain({"ALA", "SER", "ALA"}, lib());
  auto in = to_input(c, forward_kinematics(c, zero_conformation(c)), Vec3::Zero());
  for (auto& r : in)
    r.atoms.erase(std::remove_if(r.atoms.begin(), r.atoms.end(), [](const InputAtom& a) { return a.element == "H"; }),
                  r.atoms.end());
  const auto imp = import_chain(in, {}, lib());
  // Ala: HB atoms gone, no chi; Ser: chi1 keeps OG, chi2 needs HG
  EXPECT_EQ(imp.chain.residues[0].chi_joints.size(), 0u);
  EXPECT_EQ(imp.chain.residues[1].chi_joints.size(), 1u);
  EXPECT_FALSE(imp.chain.warnings.empty());
}
