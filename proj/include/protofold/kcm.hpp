#pragma once

#include "protofold/chain.hpp"
#include "protofold/forcefield.hpp"
#include "protofold/params.hpp"
#include "protofold/solvation.hpp"
#include "protofold/spatial.hpp"
#include "protofold/topology.hpp"
#include "protofold/tree_scan.hpp"

#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace protofold {

/// Chain plus everything the force field needs that does not change with the conformation.
struct System {
  Chain chain;
  std::vector<AtomParams> params;
  std::shared_ptr<const BondTree> tree;
  PairWeights weights;

  static System make(Chain chain, const ParamSet& ps, SolvColumn col = SolvColumn::Sharp) {
    System s;
    s.params = assign_params(chain, ps, col);
    s.tree = std::make_shared<const BondTree>(build_tree(chain));
    s.weights = PairWeights(s.tree, chain, ps.weights);
    s.chain = std::move(chain);
    return s;
  }
};

struct FieldConfig {
  GridConfig grid;
  Dielectric dielectric;
  bool solvation = true;
  SolvationConfig solv;
  bool use_hash = true;
  Exec exec;
};

struct PhaseTimes {
  double kinematics = 0, grid = 0, nonbonded = 0, solvation = 0, torques = 0, step = 0;
  double force_total() const { return grid + nonbonded + solvation; }
};

struct Evaluation {
  EnergyBreakdown energy;
  std::vector<RigidTransform> transforms;
  Positions positions;
  Forces f_elec, f_vdw, f_cav, total;
  SasaResult sasa;
  PhaseTimes times;
};

namespace detail {
using Clock = std::chrono::steady_clock;
inline double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}
}  // namespace detail

/// Per-term forces and energies for given coordinates.
inline Evaluation evaluate_positions(const System& sys, Positions pos, const FieldConfig& cfg,
                                     const SampleSphere* sphere = nullptr) {
  Evaluation ev;
  ev.positions = std::move(pos);
  const auto& r = ev.positions;
  auto t0 = detail::Clock::now();
  cfg.grid.validate();
  // vacuum runs need no table: the pair loops walk the grid (or all pairs)
  std::optional<HashGrid> grid;
  NeighborTable cav;
  if (cfg.use_hash) grid = build_grid(r, cfg.grid);
  if (cfg.solvation) cav = grid ? grid_neighbors(*grid, r, cfg.grid.d_cav) : brute_force_neighbors(r, cfg.grid.d_cav);
  ev.times.grid = detail::seconds_since(t0);

  t0 = detail::Clock::now();
  auto nbr = grid ? nonbonded_cells(r, sys.params, *grid, sys.weights, cfg.dielectric, cfg.grid.d_elec, cfg.grid.d_vdw)
                  : nonbonded_all_pairs(r, sys.params, sys.weights, cfg.dielectric, cfg.grid.d_elec, cfg.grid.d_vdw);
  ev.energy.g_elec = nbr.g_elec;
  ev.energy.g_vdw = nbr.g_vdw;
  ev.f_elec = std::move(nbr.f_elec);
  ev.f_vdw = std::move(nbr.f_vdw);
  ev.times.nonbonded = detail::seconds_since(t0);

  t0 = detail::Clock::now();
  const std::size_t n = r.size();
  ev.f_cav.assign(n, Vec3::Zero());
  if (cfg.solvation) {
    cfg.solv.validate();
    check_cav_cutoff(sys.params, cfg.solv, cfg.grid.d_cav);
    std::optional<SampleSphere> own;
    if (!sphere) {
      own = generate_samples(cfg.solv.samples, cfg.solv.mode, cfg.solv.seed);
      sphere = &*own;
    }
    ExposureState st;
    ev.sasa = sasa_pass(r, sys.params, cav, *sphere, cfg.solv, &st, cfg.exec);
    ev.energy.g_cav = ev.sasa.g_cav;
    ev.f_cav = solvation_forces(r, sys.params, cav, *sphere, st, cfg.solv, cfg.exec);
  }
  ev.times.solvation = detail::seconds_since(t0);
  ev.energy.sum();
  ev.total.resize(n);
  for (std::size_t i = 0; i < n; ++i) ev.total[i] = ev.f_elec[i] + ev.f_vdw[i] + ev.f_cav[i];
  return ev;
}

inline Evaluation evaluate(const System& sys, const Conformation& conf, const FieldConfig& cfg,
                           const SampleSphere* sphere = nullptr) {
  auto t0 = detail::Clock::now();
  auto m = link_transforms(sys.chain, conf);
  auto pos = positions_from_transforms(sys.chain, m);
  const double tk = detail::seconds_since(t0);
  Evaluation ev = evaluate_positions(sys, std::move(pos), cfg, sphere);
  ev.transforms = std::move(m);
  ev.times.kinematics = tk;
  return ev;
}

// ---- torques ----

struct LinkWrench {
  Vec3 F = Vec3::Zero();
  Vec3 T = Vec3::Zero();  // moment about the origin (N-terminal N)

  LinkWrench& operator+=(const LinkWrench& o) {
    F += o.F;
    T += o.T;
    return *this;
  }
};

inline std::vector<LinkWrench> link_wrenches(const Chain& chain, const Positions& r, const Forces& f) {
  std::vector<LinkWrench> w(chain.links.size());
  for (std::size_t a = 0; a < chain.atoms.size(); ++a) {
    auto& lw = w[static_cast<std::size_t>(chain.atoms[a].link)];
    lw.F += f[a];
    lw.T += r[a].cross(f[a]);
  }
  return w;
}

/// Column of the manipulator Jacobian for joint j with the origin as end point:
/// [u ; u x (0 - p)].
inline Vec6 jacobian_column(const JointFrames& fr, std::size_t j) {
  Vec6 c;
  c.head<3>() = fr.axis[j];
  c.tail<3>() = fr.axis[j].cross(-fr.point[j]);
  return c;
}

/// tau_k = J_k^T P_k with P_k the wrench [T; F] aggregated over the subtree of
/// joint k's link (suffix sums along the linkage tree).
inline std::vector<double> joint_torques(const Chain& chain, const JointFrames& fr, const std::vector<LinkWrench>& w) {
  const auto agg = tree_suffix(chain.link_parents(), w);
  std::vector<double> tau(static_cast<std::size_t>(chain.dof()));
  for (std::size_t j = 0; j < tau.size(); ++j) {
    const auto& P = agg[j + 1];
    tau[j] = fr.axis[j].dot(P.T) + fr.axis[j].cross(-fr.point[j]).dot(P.F);
  }
  return tau;
}

inline std::vector<double> joint_torques(const Chain& chain, const Evaluation& ev) {
  const auto fr = joint_frames(chain, ev.transforms, ev.positions);
  return joint_torques(chain, fr, link_wrenches(chain, ev.positions, ev.total));
}

// ---- compliance step ----

struct StepConfig {
  double kappa = 0.5;         // degrees
  int max_iters = 1000;
  double torque_tol = 1e-4;   // relative to the initial max torque
  int energy_window = 20;
  double energy_tol = 1e-2;   // kcal/mol over the window
  int snapshot_every = 0;     // 0: no intermediate snapshots

  void validate() const {
    if (!(kappa > 0.0)) throw ConfigError("kappa must be positive");
    if (torque_tol < 0.0 || energy_tol < 0.0) throw ConfigError("tolerances must be non-negative");
    if (max_iters < 1) throw ConfigError("max_iters must be at least 1");
    if (energy_window < 1) throw ConfigError("energy_window must be at least 1");
  }
};

/// Largest |tau| over unfrozen joints.
inline double max_torque(const std::vector<double>& tau, const Conformation& conf) {
  double m = 0.0;
  for (std::size_t j = 0; j < tau.size(); ++j)
    if (!conf.frozen[j]) m = std::max(m, std::abs(tau[j]));
  return m;
}

struct StepResult {
  Conformation conf;
  std::vector<double> deltas;
  bool converged = false;  // all unfrozen torques zero
};

/// dtheta_j = kappa tau_j / |tau_max| over unfrozen joints.
inline StepResult kcm_step(const std::vector<double>& tau, const Conformation& conf, const StepConfig& cfg) {
  if (tau.size() != conf.theta.size()) throw ConfigError("kcm_step: torque length mismatch");
  bool any = false;
  for (char f : conf.frozen) any = any || !f;
  if (!any) throw ConfigError("kcm_step: every joint is frozen");
  StepResult s;
  s.deltas.assign(tau.size(), 0.0);
  const double tmax = max_torque(tau, conf);
  if (tmax == 0.0) {
    s.conf = conf;
    s.converged = true;
    return s;
  }
  for (std::size_t j = 0; j < tau.size(); ++j)
    if (!conf.frozen[j]) s.deltas[j] = cfg.kappa * tau[j] / tmax;
  s.conf = apply_deltas(conf, s.deltas);
  return s;
}

// ---- folding loop ----

struct IterationRecord {
  int iteration = 0;
  EnergyBreakdown energy;
  double tau_max = 0.0;
  PhaseTimes times;
};

struct Trajectory {
  std::vector<IterationRecord> rows;
  std::vector<std::pair<int, Conformation>> snapshots;
  Conformation final_conf;
  bool converged = false;
  std::string reason;  // torque, plateau, zero-torque, max-iters, error
  std::string error;
  int error_iteration = -1;
};

/// Runs the compliance loop. The conformation of the last row is final_conf.
/// Field errors end the run with `error` set instead of propagating.
inline Trajectory fold(const System& sys, const Conformation& start, const FieldConfig& field, const StepConfig& step,
                       const std::function<void(const IterationRecord&, const Conformation&)>& on_iteration = {}) {
  step.validate();
  Trajectory tr;
  std::optional<SampleSphere> sphere;
  if (field.solvation) sphere = generate_samples(field.solv.samples, field.solv.mode, field.solv.seed);
  Conformation conf = start;
  double tau0 = -1.0;
  for (int t = 0; t < step.max_iters; ++t) {
    IterationRecord rec;
    rec.iteration = t;
    std::vector<double> tau;
    try {
      const Evaluation ev = evaluate(sys, conf, field, sphere ? &*sphere : nullptr);
      rec.energy = ev.energy;
      rec.times = ev.times;
      auto t0 = detail::Clock::now();
      tau = joint_torques(sys.chain, ev);
      rec.times.torques = detail::seconds_since(t0);
    } catch (const Error& e) {
      tr.error = e.what();
      tr.error_iteration = t;
      tr.reason = "error";
      break;
    }
    rec.tau_max = max_torque(tau, conf);
    if (tau0 < 0.0) tau0 = rec.tau_max;
    if (step.snapshot_every > 0 && t % step.snapshot_every == 0) tr.snapshots.emplace_back(t, conf);

    std::string stop;
    if (rec.tau_max == 0.0) stop = "zero-torque";
    else if (rec.tau_max < step.torque_tol * tau0) stop = "torque";
    else if (t >= step.energy_window &&
             std::abs(rec.energy.g_total - tr.rows[static_cast<std::size_t>(t - step.energy_window)].energy.g_total) <
                 step.energy_tol)
      stop = "plateau";
    else if (t + 1 == step.max_iters) stop = "max-iters";

    std::optional<Conformation> next;
    if (stop.empty()) {
      auto t0 = detail::Clock::now();
      next = kcm_step(tau, conf, step).conf;
      rec.times.step = detail::seconds_since(t0);
    }
    tr.rows.push_back(rec);
    if (on_iteration) on_iteration(rec, conf);  // the conformation this row describes
    if (next) conf = std::move(*next);
    if (!stop.empty()) {
      tr.reason = stop;
      tr.converged = stop != "max-iters";
      break;
    }
  }
  tr.final_conf = conf;
  if (step.snapshot_every > 0 && (tr.snapshots.empty() || tr.snapshots.back().first != static_cast<int>(tr.rows.size()) - 1))
    tr.snapshots.emplace_back(static_cast<int>(tr.rows.size()) - 1, conf);
  return tr;
}

// ---- scans ----

struct ScanPoint {
  std::vector<double> angles;  // dihedral values (deg) of the scanned joints
  EnergyBreakdown energy;
};

/// Energies over the cartesian product of dihedral values for the given joints;
/// all other joints keep their values in `base`.
inline std::vector<ScanPoint> scan_dihedrals(const System& sys, const Conformation& base, const std::vector<int>& joints,
                                             const std::vector<std::vector<double>>& values, const FieldConfig& field) {
  if (joints.size() != values.size()) throw ConfigError("scan: joints/values mismatch");
  for (int j : joints)
    if (j < 0 || j >= sys.chain.dof()) throw ConfigError("scan: joint index " + std::to_string(j) + " out of range");
  std::optional<SampleSphere> sphere;
  if (field.solvation) sphere = generate_samples(field.solv.samples, field.solv.mode, field.solv.seed);
  std::vector<ScanPoint> out;
  std::vector<std::size_t> idx(joints.size(), 0);
  for (const auto& v : values)
    if (v.empty()) return out;
  for (;;) {
    Conformation c = base;
    ScanPoint sp;
    for (std::size_t q = 0; q < joints.size(); ++q) {
      const double a = values[q][idx[q]];
      set_joint_dihedral(sys.chain, c, joints[q], a);
      sp.angles.push_back(a);
    }
    sp.energy = evaluate(sys, c, field, sphere ? &*sphere : nullptr).energy;
    out.push_back(sp);
    std::size_t q = joints.size();
    while (q > 0) {
      --q;
      if (++idx[q] < values[q].size()) break;
      idx[q] = 0;
      if (q == 0) return out;
    }
    if (joints.empty()) return out;
  }
}

/// (phi, psi) grid of `resolution` x `resolution` points from -180 deg for one residue.
inline std::vector<ScanPoint> ramachandran_scan(const System& sys, int residue, int resolution, const FieldConfig& field,
                                                std::optional<Conformation> base = std::nullopt) {
  if (resolution < 2) throw ConfigError("ramachandran_scan: resolution must be at least 2");
  if (residue < 0 || residue >= sys.chain.residue_count()) throw ConfigError("ramachandran_scan: residue out of range");
  std::vector<double> grid;
  for (int k = 0; k < resolution; ++k) grid.push_back(-180.0 + 360.0 * k / resolution);
  const auto& r = sys.chain.residues[static_cast<std::size_t>(residue)];
  return scan_dihedrals(sys, base ? *base : zero_conformation(sys.chain), {r.phi_joint, r.psi_joint}, {grid, grid},
                        field);
}

/// Sweeps hinge joints over [-half_range, +half_range] about their values in
/// `native`, with the given step. Angles in the result are offsets from native.
inline std::vector<ScanPoint> hinge_scan(const System& sys, const Conformation& native, const std::vector<int>& hinges,
                                         double half_range, double step, const FieldConfig& field) {
  if (half_range < 0.0) throw ConfigError("hinge_scan: negative range");
  if (half_range > 0.0 && !(step > 0.0)) throw ConfigError("hinge_scan: step must be positive");
  std::vector<double> offs;
  if (half_range == 0.0) offs.push_back(0.0);
  else {
    const int k = static_cast<int>(std::floor(half_range / step + 1e-9));
    for (int s = -k; s <= k; ++s) offs.push_back(s * step);
  }
  std::vector<std::vector<double>> values;
  for (int j : hinges) {
    if (j < 0 || j >= sys.chain.dof()) throw ConfigError("hinge_scan: joint index " + std::to_string(j) + " out of range");
    const double v0 = joint_dihedral(sys.chain, native, j);
    std::vector<double> v;
    for (double o : offs) v.push_back(v0 + o);
    values.push_back(v);
  }
  auto pts = scan_dihedrals(sys, native, hinges, values, field);
  for (auto& p : pts)
    for (std::size_t q = 0; q < p.angles.size(); ++q) p.angles[q] = wrap180(p.angles[q] - values[q][offs.size() / 2]);
  return pts;
}

}  // namespace protofold
