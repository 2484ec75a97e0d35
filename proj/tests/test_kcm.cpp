#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace protofold;

namespace {

System make_system(const std::vector<std::string>& seq) {
  return System::make(build_chain(seq, default_templates()), default_params());
}

FieldConfig vacuum() {
  FieldConfig f;
  f.solvation = false;
  return f;
}

// No truncation at all, so the energy is smooth in theta.
FieldConfig untruncated() {
  FieldConfig f = vacuum();
  f.grid.d_elec = f.grid.d_vdw = f.grid.d_cav = 1e4;
  f.use_hash = false;
  return f;
}

bool in_subtree(const Chain& c, int link, int root) {
  for (int k = link; k >= 0; k = c.links[static_cast<std::size_t>(k)].parent)
    if (k == root) return true;
  return false;
}

// Column scan: tau_k = sum over links h below joint k of J_k . [T_h; F_h].
std::vector<double> column_scan_torques(const Chain& c, const JointFrames& fr, const std::vector<LinkWrench>& w) {
  std::vector<double> tau(static_cast<std::size_t>(c.dof()), 0.0);
  for (int k = 0; k < c.dof(); ++k) {
    const Vec6 J = jacobian_column(fr, static_cast<std::size_t>(k));
    for (std::size_t h = 0; h < c.links.size(); ++h)
      if (in_subtree(c, static_cast<int>(h), k + 1)) {
        Vec6 P;
        P << w[h].T, w[h].F;
        tau[static_cast<std::size_t>(k)] += J.dot(P);
      }
  }
  return tau;
}

}  // namespace

TEST(Wrenches, Basics) {
  const Chain c = build_chain({"ALA", "GLY", "SER"}, default_templates());
  const auto r = forward_kinematics(c, zero_conformation(c));
  for (const auto& w : link_wrenches(c, r, Forces(r.size(), Vec3::Zero()))) {
    EXPECT_EQ(w.F, Vec3::Zero());
    EXPECT_EQ(w.T, Vec3::Zero());
  }
  // N(1) sits at the origin: no lever arm
  Forces f(r.size(), Vec3::Zero());
  f[static_cast<std::size_t>(c.residues[0].n)] = Vec3(1.0, -2.0, 3.0);
  const auto w = link_wrenches(c, r, f);
  EXPECT_EQ(w[0].T, Vec3::Zero());
  EXPECT_EQ(w[0].F, Vec3(1.0, -2.0, 3.0));
}

TEST(Wrenches, MatchDirectSummation) {
  const Chain c = build_chain({"SER", "CYS", "ALA", "GLY"}, default_templates());
  std::mt19937_64 rng(61);
  const auto r = forward_kinematics(c, pft::random_conformation(c, rng));
  std::normal_distribution<double> g;
  Forces f(r.size());
  for (auto& v : f) v = Vec3(g(rng), g(rng), g(rng));
  const auto w = link_wrenches(c, r, f);
  for (std::size_t L = 0; L < c.links.size(); ++L) {
    Vec3 F = Vec3::Zero(), T = Vec3::Zero();
    for (std::size_t a = 0; a < r.size(); ++a)
      if (c.atoms[a].link == static_cast<int>(L)) {
        F += f[a];
        T += r[a].cross(f[a]);
      }
    EXPECT_LT((w[L].F - F).norm(), 1e-12);
    EXPECT_LT((w[L].T - T).norm(), 1e-12);
  }
}

TEST(Torques, ZeroWrenchesGiveZeroTorque) {
  const Chain c = build_chain({"ALA", "ALA"}, default_templates());
  const auto m = link_transforms(c, zero_conformation(c));
  const auto r = positions_from_transforms(c, m);
  for (double t : joint_torques(c, joint_frames(c, m, r), std::vector<LinkWrench>(c.links.size()))) EXPECT_EQ(t, 0.0);
}

TEST(Torques, SingleJointHandEvaluation) {
  const Chain c = build_chain({"GLY"}, default_templates());
  const auto m = link_transforms(c, zero_conformation(c));
  const auto r = positions_from_transforms(c, m);
  const auto fr = joint_frames(c, m, r);
  // force on C of the only residue (psi link, inside the phi subtree)
  const std::size_t a = static_cast<std::size_t>(c.residues[0].c);
  Forces f(r.size(), Vec3::Zero());
  f[a] = Vec3(0.3, -1.1, 2.0);
  const auto tau = joint_torques(c, fr, link_wrenches(c, r, f));
  // tau = u . ((r_a - p) x F)
  const Vec3 u = fr.axis[0], p = fr.point[0];
  EXPECT_NEAR(tau[0], u.dot((r[a] - p).cross(f[a])), 1e-12);
  EXPECT_NEAR(tau[1], fr.axis[1].dot((r[a] - fr.point[1]).cross(f[a])), 1e-12);
  EXPECT_NEAR(tau[1], 0.0, 1e-12);  // C sits on the psi axis
}

TEST(Torques, SuffixEqualsColumnScan) {
  const Chain c = build_chain({"SER", "CYS", "ALA", "GLY", "ALA", "SER", "CYS", "GLY", "ALA", "SER"}, default_templates());
  std::mt19937_64 rng(63);
  std::normal_distribution<double> g;
  for (int t = 0; t < 20; ++t) {
    const auto m = link_transforms(c, pft::random_conformation(c, rng));
    const auto r = positions_from_transforms(c, m);
    Forces f(r.size());
    for (auto& v : f) v = Vec3(g(rng), g(rng), g(rng));
    const auto fr = joint_frames(c, m, r);
    const auto w = link_wrenches(c, r, f);
    const auto a = joint_torques(c, fr, w);
    const auto b = column_scan_torques(c, fr, w);
    double scale = 0;
    for (double x : b) scale = std::max(scale, std::abs(x));
    for (std::size_t j = 0; j < a.size(); ++j) EXPECT_LE(std::abs(a[j] - b[j]), 1e-10 * scale);
  }
}

TEST(Torques, EqualNegativeEnergyDerivative) {
  const System sys = make_system({"ALA", "SER", "GLY", "CYS"});
  std::mt19937_64 rng(65);
  const FieldConfig f = untruncated();
  for (int t = 0; t < 3; ++t) {
    Conformation conf;
    Evaluation ev;
    // reject clashing draws so the energy stays well conditioned
    do {
      conf = pft::random_conformation(sys.chain, rng);
      ev = evaluate(sys, conf, f);
    } while (ev.energy.g_vdw > 50.0);
    const auto tau = joint_torques(sys.chain, ev);
    const double h = 1e-4;  // degrees
    for (int j = 0; j < sys.chain.dof(); ++j) {
      std::vector<double> d(tau.size(), 0.0);
      d[static_cast<std::size_t>(j)] = h;
      const double ep = evaluate(sys, apply_deltas(conf, d), f).energy.g_total;
      d[static_cast<std::size_t>(j)] = -h;
      const double em = evaluate(sys, apply_deltas(conf, d), f).energy.g_total;
      const double fd = -(ep - em) / (2.0 * deg2rad(h));
      EXPECT_NEAR(tau[static_cast<std::size_t>(j)], fd, 1e-4 * std::max(1.0, std::abs(fd))) << "joint " << j;
    }
  }
}

TEST(Step, Normalization) {
  Conformation conf;
  conf.theta.assign(4, 10.0);
  conf.frozen.assign(4, 0);
  const StepConfig cfg;
  const std::vector<double> tau{2.0, -1.0, 0.5, 0.0};
  const auto s = kcm_step(tau, conf, cfg);
  EXPECT_DOUBLE_EQ(s.deltas[0], cfg.kappa);
  EXPECT_DOUBLE_EQ(s.deltas[1], -cfg.kappa / 2);
  EXPECT_DOUBLE_EQ(s.conf.theta[1], 10.0 - cfg.kappa / 2);
  EXPECT_FALSE(s.converged);
  for (double c : {1e-6, 3.0, 1e6}) {
    std::vector<double> scaled;
    for (double x : tau) scaled.push_back(c * x);
    const auto s2 = kcm_step(scaled, conf, cfg);
    for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(s2.deltas[j], s.deltas[j], 1e-15);
  }
  double mx = 0;
  for (double d : s.deltas) mx = std::max(mx, std::abs(d));
  EXPECT_DOUBLE_EQ(mx, cfg.kappa);
}

TEST(Step, FrozenJointsAndDegenerateCases) {
  Conformation conf;
  conf.theta.assign(3, 0.0);
  conf.frozen = {1, 0, 0};
  const StepConfig cfg;
  // the frozen joint carries the largest torque but does not set the scale
  const auto s = kcm_step({100.0, 1.0, -0.5}, conf, cfg);
  EXPECT_EQ(s.deltas[0], 0.0);
  EXPECT_EQ(s.conf.theta[0], 0.0);
  EXPECT_DOUBLE_EQ(s.deltas[1], cfg.kappa);
  const auto z = kcm_step({0.0, 0.0, 0.0}, conf, cfg);
  EXPECT_TRUE(z.converged);
  EXPECT_EQ(z.conf.theta, conf.theta);
  conf.frozen = {1, 1, 1};
  EXPECT_THROW(kcm_step({1.0, 1.0, 1.0}, conf, cfg), ConfigError);
  EXPECT_THROW(kcm_step({1.0}, conf, cfg), ConfigError);
  StepConfig bad;
  bad.kappa = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Fold, TorqueFreeStartStopsImmediately) {
  System sys = make_system({"GLY", "GLY"});
  for (auto& p : sys.params) {
    p.q = 0;
    p.eps = 0;
  }
  const auto tr = fold(sys, zero_conformation(sys.chain), vacuum(), StepConfig{});
  ASSERT_EQ(tr.rows.size(), 1u);
  EXPECT_TRUE(tr.converged);
  EXPECT_EQ(tr.reason, "zero-torque");
  EXPECT_EQ(tr.final_conf.theta, zero_conformation(sys.chain).theta);
}

TEST(Fold, IterationBookkeeping) {
  const System sys = make_system({"ALA", "ALA", "ALA"});
  StepConfig st;
  st.max_iters = 6;
  st.torque_tol = 0;
  st.energy_tol = 0;
  st.snapshot_every = 2;
  const Conformation start = uniform_conformation(sys.chain, -60, -40);
  std::vector<int> seen;
  const auto tr = fold(sys, start, vacuum(), st, [&](const IterationRecord& r, const Conformation&) { seen.push_back(r.iteration); });
  ASSERT_EQ(tr.rows.size(), 6u);
  EXPECT_EQ(seen, (std::vector<int>{0, 1, 2, 3, 4, 5}));
  EXPECT_EQ(tr.reason, "max-iters");
  EXPECT_FALSE(tr.converged);
  // the last row describes the final conformation
  const auto ev = evaluate(sys, tr.final_conf, vacuum());
  EXPECT_DOUBLE_EQ(ev.energy.g_total, tr.rows.back().energy.g_total);
  std::vector<int> snaps;
  for (const auto& s : tr.snapshots) snaps.push_back(s.first);
  EXPECT_EQ(snaps, (std::vector<int>{0, 2, 4, 5}));
  // every step moves the largest-torque joint by exactly kappa
  const auto one = fold(sys, start, vacuum(), [] {
    StepConfig s;
    s.max_iters = 2;
    s.torque_tol = 0;
    s.energy_tol = 0;
    return s;
  }());
  double mx = 0;
  for (std::size_t j = 0; j < start.theta.size(); ++j)
    mx = std::max(mx, std::abs(wrap180(one.final_conf.theta[j] - start.theta[j])));
  EXPECT_NEAR(mx, StepConfig{}.kappa, 1e-9);
}

TEST(Fold, EnergyMostlyDecreasesEarly) {
  const System sys = make_system(std::vector<std::string>(15, "ALA"));
  StepConfig st;
  st.max_iters = 11;
  const auto tr = fold(sys, uniform_conformation(sys.chain, -10, -10), vacuum(), st);
  ASSERT_EQ(tr.rows.size(), 11u);
  int down = 0;
  for (std::size_t t = 1; t < tr.rows.size(); ++t) down += tr.rows[t].energy.g_total <= tr.rows[t - 1].energy.g_total;
  EXPECT_GE(down, 8);
}

TEST(Fold, FieldErrorIsRecorded) {
  Chain c = build_chain({"GLY", "GLY"}, default_templates());
  Atom h;
  h.name = "NA";
  h.element = "NA";
  h.res_name = "NA";
  h.hetero = true;
  h.link = 0;
  h.zp = c.atoms[static_cast<std::size_t>(c.residues[0].n)].zp;  // on top of N(1)
  c.atoms.push_back(h);
  c.links[0].atoms.push_back(static_cast<int>(c.atoms.size()) - 1);
  const System sys = System::make(c, default_params());
  const auto tr = fold(sys, zero_conformation(sys.chain), vacuum(), StepConfig{});
  EXPECT_EQ(tr.reason, "error");
  EXPECT_EQ(tr.error_iteration, 0);
  EXPECT_FALSE(tr.error.empty());
  EXPECT_TRUE(tr.rows.empty());
}

TEST(Fold, HeteroAtomsStayFixed) {
  Chain c = build_chain({"ALA", "ALA", "ALA"}, default_templates());
  Atom h;
  h.name = "ZN";
  h.element = "ZN";
  h.res_name = "ZN";
  h.hetero = true;
  h.link = 0;
  h.zp = Vec3(3.0, 6.0, 2.0);
  c.atoms.push_back(h);
  c.links[0].atoms.push_back(static_cast<int>(c.atoms.size()) - 1);
  const System sys = System::make(c, default_params());
  StepConfig st;
  st.max_iters = 5;
  const auto tr = fold(sys, uniform_conformation(sys.chain, -60, -40), vacuum(), st);
  EXPECT_TRUE(tr.error.empty());
  EXPECT_EQ(forward_kinematics(sys.chain, tr.final_conf).back(), Vec3(3.0, 6.0, 2.0));
}

TEST(Evaluate, EnergyBreakdownSums) {
  const System sys = make_system({"SER", "ALA", "CYS", "GLY"});
  std::mt19937_64 rng(67);
  const auto ev = evaluate(sys, pft::random_conformation(sys.chain, rng), FieldConfig{});
  const auto& e = ev.energy;
  EXPECT_NEAR(e.g_total, e.g_elec + e.g_vdw + e.g_cav, 1e-12 * std::max(1.0, std::abs(e.g_total)));
  EXPECT_NE(e.g_cav, 0.0);
}

TEST(Evaluate, HashAndBruteForceAgree) {
  const System sys = make_system({"SER", "ALA", "CYS", "GLY", "ALA", "ALA"});
  std::mt19937_64 rng(69);
  const auto conf = pft::random_conformation(sys.chain, rng);
  FieldConfig a;
  FieldConfig b;
  b.use_hash = false;
  const auto ea = evaluate(sys, conf, a), eb = evaluate(sys, conf, b);
  EXPECT_EQ(ea.energy.g_cav, eb.energy.g_cav);
  EXPECT_EQ(ea.f_cav, eb.f_cav);
  EXPECT_NEAR(ea.energy.g_elec, eb.energy.g_elec, 1e-10 * std::abs(eb.energy.g_elec));
  EXPECT_NEAR(ea.energy.g_vdw, eb.energy.g_vdw, 1e-10 * std::max(1.0, std::abs(eb.energy.g_vdw)));
}

TEST(Evaluate, PolyglycineMirrorSymmetry) {
  const System sys = make_system(std::vector<std::string>(6, "GLY"));
  std::mt19937_64 rng(71);
  for (int t = 0; t < 20; ++t) {
    const auto conf = pft::random_conformation(sys.chain, rng);
    Conformation mir = conf;
    for (auto& th : mir.theta) th = wrap360(-th);
    const double a = evaluate(sys, conf, vacuum()).energy.g_total;
    const double b = evaluate(sys, mir, vacuum()).energy.g_total;
    EXPECT_LE(std::abs(a - b), 1e-8 * std::max(1.0, std::abs(a)));
  }
}

TEST(Scan, SmallGridAndPointwiseOracle) {
  const System sys = make_system({"ALA", "ALA"});
  const auto pts = ramachandran_scan(sys, 1, 2, vacuum());
  ASSERT_EQ(pts.size(), 4u);
  for (const auto& p : pts) {
    Conformation c = zero_conformation(sys.chain);
    set_joint_dihedral(sys.chain, c, sys.chain.residues[1].phi_joint, p.angles[0]);
    set_joint_dihedral(sys.chain, c, sys.chain.residues[1].psi_joint, p.angles[1]);
    EXPECT_EQ(evaluate(sys, c, vacuum()).energy.g_total, p.energy.g_total);
  }
  EXPECT_DOUBLE_EQ(pts[0].angles[0], -180.0);
  EXPECT_DOUBLE_EQ(pts[3].angles[1], 0.0);
  EXPECT_THROW(ramachandran_scan(sys, 2, 8, vacuum()), ConfigError);
}

TEST(Scan, HingeScan) {
  const System sys = make_system({"ALA", "GLY", "SER", "ALA"});
  const Conformation native = uniform_conformation(sys.chain, -65, -40);
  const std::vector<int> hinges{sys.chain.residues[1].psi_joint, sys.chain.residues[2].phi_joint};
  const auto one = hinge_scan(sys, native, hinges, 0.0, 1.0, vacuum());
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].energy.g_total, evaluate(sys, native, vacuum()).energy.g_total);
  const auto grid = hinge_scan(sys, native, hinges, 10.0, 5.0, vacuum());
  ASSERT_EQ(grid.size(), 25u);
  for (const auto& p : grid) {
    Conformation c = native;
    for (std::size_t q = 0; q < hinges.size(); ++q)
      set_joint_dihedral(sys.chain, c, hinges[q], joint_dihedral(sys.chain, native, hinges[q]) + p.angles[q]);
    EXPECT_NEAR(evaluate(sys, c, vacuum()).energy.g_total, p.energy.g_total, 1e-9);
  }
  EXPECT_THROW(hinge_scan(sys, native, {sys.chain.dof()}, 10.0, 5.0, vacuum()), ConfigError);
}

TEST(Evaluate, ThreadCountDoesNotChangeResults) {
  if (!openmp_enabled()) GTEST_SKIP() << "built without OpenMP";
  const System sys = make_system(std::vector<std::string>(12, "SER"));
  std::mt19937_64 rng(73);
  const auto conf = pft::random_conformation(sys.chain, rng);
  FieldConfig a, b;
  a.exec.threads = 1;
  b.exec.threads = 3;
  const auto ea = evaluate(sys, conf, a), eb = evaluate(sys, conf, b);
  EXPECT_EQ(ea.energy.g_total, eb.energy.g_total);
  EXPECT_EQ(ea.total, eb.total);
}
