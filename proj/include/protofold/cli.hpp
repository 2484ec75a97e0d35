#pragma once

// Command-line driver: fold, scan-rama, scan-hinge, sasa, bench.

#include "protofold/protofold.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace protofold::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

struct Options {
  std::string command;

  // input
  std::string seq;
  std::string pdb;
  std::string templates;
  std::string params;

  // field
  bool vacuum = false;
  bool water = false;
  std::string cutoffs;  // "elec,vdw,cav"
  double alpha = 1.0;
  bool brute = false;
  std::string dielectric = "distance";
  double dielectric_const = 1.0;
  std::string solv_column = "sharp";
  std::string plane = "ideal";
  int samples = 1024;
  double delta_r = 0.01;
  double probe = 1.4;
  std::string sampling = "geodesic";

  // stepping
  double kappa = 0.5;
  int max_iters = 1000;
  double torque_tol = 1e-4;
  int energy_window = 20;
  double energy_tol = 1e-2;
  int snapshot_every = 0;
  std::string freeze;

  // initial conditions
  std::string init;  // zp | uniform | random | native
  double phi = -60.0, psi = -45.0;
  double perturb = 0.0;
  double angle_range = 90.0;
  int batch = 0;
  std::uint64_t seed = 0;
  bool seed_given = false;

  // scans
  int residue = 0;  // 1-based; 0 picks a default
  int resolution = 36;
  std::string hinges;
  double range = 10.0;
  double step = 1.0;

  // bench
  std::string sizes = "50,100,200,400";
  int repeats = 3;
  std::string bench_residue = "ALA";
  std::string shape = "zp";

  int threads = 0;
  std::string out = "protofold_out";
};

namespace detail {

template <typename T>
std::vector<T> parse_list(const std::string& s, const char* what) {
  std::vector<T> v;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = protofold::detail::trim(tok);
    if (tok.empty()) continue;
    std::istringstream ts(tok);
    T x{};
    if (!(ts >> x) || !ts.eof()) throw ConfigError(std::string("bad value '") + tok + "' in " + what);
    v.push_back(x);
  }
  return v;
}

inline std::string fmt(double x) {
  char b[32];
  std::snprintf(b, sizeof b, "%.10g", x);
  return b;
}

struct Loaded {
  System sys;
  std::optional<Conformation> native;
  std::vector<std::string> warnings;
  std::string source;
};

inline Loaded load_input(const Options& o) {
  const TemplateLibrary lib = o.templates.empty() ? default_templates() : TemplateLibrary::load(o.templates);
  const ParamSet ps = o.params.empty() ? default_params() : ParamSet::load(o.params);
  const SolvColumn col = o.solv_column == "kyte" ? SolvColumn::Kyte : SolvColumn::Sharp;
  Loaded l;
  if (!o.pdb.empty()) {
    const StructureRecord s = read_pdb(o.pdb);
    ImportedChain imp = chain_from_structure(s, lib);
    l.warnings = s.notes;
    if (s.waters_removed) l.warnings.push_back(std::to_string(s.waters_removed) + " water atoms removed");
    l.warnings.insert(l.warnings.end(), imp.chain.warnings.begin(), imp.chain.warnings.end());
    l.native = imp.native;
    l.sys = System::make(std::move(imp.chain), ps, col);
    l.source = "pdb";
  } else {
    l.sys = System::make(build_chain(read_sequence(o.seq), lib, {},
                                       o.plane == "table" ? PlaneModel::Table : PlaneModel::Ideal),
                           ps, col);
    l.source = "sequence";
  }
  return l;
}

inline FieldConfig field_config(const Options& o) {
  FieldConfig f;
  f.solvation = !o.vacuum;
  f.use_hash = !o.brute;
  f.grid.alpha = o.alpha;
  if (!o.cutoffs.empty()) {
    const auto c = parse_list<double>(o.cutoffs, "--cutoffs");
    if (c.size() != 3) throw ConfigError("--cutoffs needs three values: elec,vdw,cav");
    f.grid.d_elec = c[0];
    f.grid.d_vdw = c[1];
    f.grid.d_cav = c[2];
  }
  f.grid.validate();
  if (o.dielectric == "constant") {
    f.dielectric.mode = Dielectric::Mode::Constant;
    f.dielectric.kappa = o.dielectric_const;
    if (!(o.dielectric_const > 0.0)) throw ConfigError("--dielectric-constant must be positive");
  }
  f.solv.samples = o.samples;
  f.solv.delta_r = o.delta_r;
  f.solv.probe_radius = o.probe;
  f.solv.mode = o.sampling == "random" ? SamplingMode::Random : SamplingMode::Geodesic;
  f.solv.seed = o.seed;
  f.solv.validate();
  f.exec.threads = o.threads;
  return f;
}

inline StepConfig step_config(const Options& o) {
  StepConfig s;
  s.kappa = o.kappa;
  s.max_iters = o.max_iters;
  s.torque_tol = o.torque_tol;
  s.energy_window = o.energy_window;
  s.energy_tol = o.energy_tol;
  s.snapshot_every = o.snapshot_every;
  s.validate();
  return s;
}

/// Joint tokens: an index (0-based) or a name such as phi_3, psi_3, chi1_2.
inline std::vector<int> resolve_joints(const Chain& c, const std::string& spec) {
  std::vector<int> out;
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = protofold::detail::trim(tok);
    if (tok.empty()) continue;
    int j = -1;
    if (std::all_of(tok.begin(), tok.end(), [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); })) {
      j = std::stoi(tok);
    } else {
      for (int k = 0; k < c.dof(); ++k)
        if (joint_name(c, k) == tok) j = k;
      if (j < 0) throw ConfigError("unknown joint '" + tok + "'");
    }
    if (j < 0 || j >= c.dof()) throw ConfigError("joint index " + tok + " out of range (dof " + std::to_string(c.dof()) + ")");
    out.push_back(j);
  }
  return out;
}

inline Conformation random_start(const Chain& c, double range, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-range, range);
  Conformation conf = zero_conformation(c);
  for (const auto& r : c.residues) {
    set_joint_dihedral(c, conf, r.phi_joint, u(rng));
    set_joint_dihedral(c, conf, r.psi_joint, u(rng));
  }
  return conf;
}

inline std::string init_mode(const Options& o) {
  if (!o.init.empty()) return o.init;
  return o.pdb.empty() ? "zp" : "native";
}

inline Conformation initial_conformation(const Options& o, const Loaded& l, std::uint64_t seed) {
  const Chain& c = l.sys.chain;
  const std::string mode = init_mode(o);
  Conformation conf;
  if (mode == "zp") {
    conf = zero_conformation(c);
  } else if (mode == "uniform") {
    conf = uniform_conformation(c, o.phi, o.psi);
  } else if (mode == "random") {
    std::mt19937_64 rng(seed);
    conf = random_start(c, o.angle_range, rng);
  } else if (mode == "native") {
    if (!l.native) throw ConfigError("--init native needs --pdb");
    conf = *l.native;
    if (o.perturb > 0.0) {
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<double> u(-o.perturb, o.perturb);
      std::vector<double> d(conf.theta.size());
      for (auto& x : d) x = u(rng);
      conf = apply_deltas(conf, d);
    }
  } else {
    throw ConfigError("unknown --init mode '" + mode + "'");
  }
  for (int j : resolve_joints(c, o.freeze)) conf.frozen[static_cast<std::size_t>(j)] = 1;
  return conf;
}

inline json field_json(const FieldConfig& f) {
  return json{{"solvation", f.solvation},
              {"use_hash", f.use_hash},
              {"alpha", f.grid.alpha},
              {"min_cell_size", f.grid.min_cell_size},
              {"cutoffs", {{"elec", f.grid.d_elec}, {"vdw", f.grid.d_vdw}, {"cav", f.grid.d_cav}}},
              {"dielectric", f.dielectric.mode == Dielectric::Mode::Distance ? "distance" : "constant"},
              {"dielectric_constant", f.dielectric.kappa},
              {"samples", f.solv.samples},
              {"delta_r", f.solv.delta_r},
              {"probe_radius", f.solv.probe_radius},
              {"sampling", f.solv.mode == SamplingMode::Geodesic ? "geodesic" : "random"},
              {"threads", f.exec.threads}};
}

inline json step_json(const StepConfig& s) {
  return json{{"kappa", s.kappa},
              {"max_iters", s.max_iters},
              {"torque_tol", s.torque_tol},
              {"energy_window", s.energy_window},
              {"energy_tol", s.energy_tol},
              {"snapshot_every", s.snapshot_every}};
}

inline json input_json(const Options& o, const Loaded& l) {
  const Chain& c = l.sys.chain;
  std::vector<std::string> seq;
  for (const auto& r : c.residues) seq.push_back(r.name);
  return json{{"source", l.source},
              {"pdb", o.pdb},
              {"sequence", seq},
              {"templates", o.templates.empty() ? "builtin" : o.templates},
              {"params", o.params.empty() ? "builtin" : o.params},
              {"solvation_column", o.solv_column},
              {"plane", o.plane},
              {"residues", c.residue_count()},
              {"atoms", c.atom_count()},
              {"dof", c.dof()},
              {"warnings", l.warnings}};
}

inline void write_text(const fs::path& p, const std::string& s) {
  std::ofstream f(p);
  if (!f) throw Error("cannot write " + p.string());
  f << s;
  if (!f) throw Error("write failed for " + p.string());
}

inline void write_manifest(const fs::path& dir, const json& j) { write_text(dir / "manifest.json", j.dump(2) + "\n"); }

inline std::pair<double, double> mean_interior_phi_psi(const Chain& c, const Conformation& conf) {
  const auto d = to_dihedrals(c, conf);
  const std::size_t m = d.phi.size();
  const std::size_t lo = m > 2 ? 1 : 0, hi = m > 2 ? m - 1 : m;
  double sp = 0, ss = 0;
  for (std::size_t i = lo; i < hi; ++i) {
    sp += d.phi[i];
    ss += d.psi[i];
  }
  const double k = static_cast<double>(hi - lo);
  return {sp / k, ss / k};
}

// ---- commands ----

inline int cmd_fold(const Options& o, std::ostream& out, std::ostream& err) {
  Loaded l = load_input(o);
  const FieldConfig field = field_config(o);
  const StepConfig step = step_config(o);
  const fs::path dir(o.out);
  fs::create_directories(dir);
  const Chain& c = l.sys.chain;

  json man{{"program", "protofold"}, {"command", "fold"}, {"input", input_json(o, l)}, {"field", field_json(field)},
           {"step", step_json(step)}};
  json init{{"mode", init_mode(o)}, {"seed", o.seed}};
  if (init_mode(o) == "uniform") init["phi"] = o.phi, init["psi"] = o.psi;
  if (init_mode(o) == "random") init["angle_range"] = o.angle_range;
  if (init_mode(o) == "native") init["perturb"] = o.perturb;

  if (o.batch > 0) {
    // many random starts, one summary row each
    init["mode"] = "random";
    init["angle_range"] = o.angle_range;
    init["batch"] = o.batch;
    const fs::path bdir = dir / "batch";
    fs::create_directories(bdir);
    std::ofstream csv(dir / "batch.csv");
    csv << "run,seed,iterations,reason,g_total,mean_phi,mean_psi\n";
    int failures = 0;
    for (int b = 0; b < o.batch; ++b) {
      const std::uint64_t sd = o.seed + static_cast<std::uint64_t>(b);
      std::mt19937_64 rng(sd);
      Conformation start = random_start(c, o.angle_range, rng);
      for (int j : resolve_joints(c, o.freeze)) start.frozen[static_cast<std::size_t>(j)] = 1;
      const Trajectory tr = fold(l.sys, start, field, step);
      if (!tr.error.empty()) {
        ++failures;
        err << "run " << b << ": " << tr.error << " (iteration " << tr.error_iteration << ")\n";
        csv << b << ',' << sd << ',' << tr.rows.size() << ",error,,,\n";
        continue;
      }
      const auto [mp, ms] = mean_interior_phi_psi(c, tr.final_conf);
      char name[32];
      std::snprintf(name, sizeof name, "run_%04d.pdb", b);
      write_pdb(c, forward_kinematics(c, tr.final_conf), (bdir / name).string());
      csv << b << ',' << sd << ',' << tr.rows.size() << ',' << tr.reason << ',' << fmt(tr.rows.back().energy.g_total)
          << ',' << fmt(mp) << ',' << fmt(ms) << '\n';
    }
    man["init"] = init;
    man["result"] = {{"runs", o.batch}, {"failures", failures}};
    man["files"] = {"batch.csv", "batch/"};
    write_manifest(dir, man);
    out << "batch of " << o.batch << " runs written to " << (dir / "batch.csv").string() << '\n';
    return failures ? 1 : 0;
  }

  const Conformation start = initial_conformation(o, l, o.seed);
  std::vector<std::string> frozen;
  for (std::size_t j = 0; j < start.frozen.size(); ++j)
    if (start.frozen[j]) frozen.push_back(joint_name(c, static_cast<int>(j)));
  init["frozen"] = frozen;
  man["init"] = init;

  RunLog log((dir / "log.csv").string());
  std::ofstream tim(dir / "timings.csv");
  std::ofstream dih(dir / "dihedrals.csv");
  tim << timing_header() << '\n';
  dih << dihedral_header(c) << '\n';
  const Trajectory tr = fold(l.sys, start, field, step, [&](const IterationRecord& r, const Conformation& conf) {
    log.append(r);
    tim << timing_row(r) << '\n';
    dih << dihedral_row(c, r.iteration, conf) << '\n';
  });

  std::vector<std::string> files{"log.csv", "timings.csv", "dihedrals.csv"};
  json snaps = json::array();
  if (!tr.snapshots.empty()) {
    fs::create_directories(dir / "snapshots");
    for (const auto& [it, conf] : tr.snapshots) {
      char name[48];
      std::snprintf(name, sizeof name, "snapshots/iter_%06d.pdb", it);
      write_pdb(c, forward_kinematics(c, conf), (dir / name).string());
      snaps.push_back({{"iteration", it}, {"path", name}});
    }
  }
  if (tr.error.empty()) {
    write_pdb(c, forward_kinematics(c, tr.final_conf), (dir / "final.pdb").string());
    files.push_back("final.pdb");
  }
  json res{{"iterations", tr.rows.size()}, {"converged", tr.converged}, {"reason", tr.reason}};
  if (!tr.rows.empty()) {
    const auto& e = tr.rows.back().energy;
    res["energy"] = {{"g_elec", e.g_elec}, {"g_vdw", e.g_vdw}, {"g_cav", e.g_cav}, {"g_total", e.g_total}};
    const auto [mp, ms] = mean_interior_phi_psi(c, tr.final_conf);
    res["mean_interior_phi"] = mp;
    res["mean_interior_psi"] = ms;
  }
  if (!tr.error.empty()) res["error"] = {{"message", tr.error}, {"iteration", tr.error_iteration}};
  man["result"] = res;
  man["snapshots"] = snaps;
  man["files"] = files;
  write_manifest(dir, man);

  if (!tr.error.empty()) {
    err << "error at iteration " << tr.error_iteration << ": " << tr.error << '\n';
    return 1;
  }
  out << "fold: " << tr.rows.size() << " iterations (" << tr.reason << "), G_total = " << fmt(tr.rows.back().energy.g_total)
      << " kcal/mol, output in " << dir.string() << '\n';
  return 0;
}

inline std::string scan_row(const std::vector<double>& angles, const EnergyBreakdown& e) {
  std::string s;
  for (double a : angles) s += fmt(a) + ",";
  return s + fmt(e.g_elec) + "," + fmt(e.g_vdw) + "," + fmt(e.g_cav) + "," + fmt(e.g_total);
}

inline int cmd_scan_rama(const Options& o, std::ostream& out, std::ostream&) {
  Loaded l = load_input(o);
  const FieldConfig field = field_config(o);
  const Chain& c = l.sys.chain;
  const int res = o.residue > 0 ? o.residue : std::min(2, c.residue_count());
  if (res > c.residue_count()) throw ConfigError("--residue out of range");
  if (o.resolution < 2) throw ConfigError("--resolution must be at least 2");
  const Conformation base = initial_conformation(o, l, o.seed);
  const auto pts = ramachandran_scan(l.sys, res - 1, o.resolution, field, base);
  const fs::path dir(o.out);
  fs::create_directories(dir);
  std::ofstream csv(dir / "rama.csv");
  csv << "phi,psi,g_elec,g_vdw,g_cav,g_total\n";
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> at;
  for (const auto& p : pts) {
    csv << scan_row(p.angles, p.energy) << '\n';
    if (p.energy.g_total < best) {
      best = p.energy.g_total;
      at = p.angles;
    }
  }
  json man{{"program", "protofold"}, {"command", "scan-rama"}, {"input", input_json(o, l)}, {"field", field_json(field)},
           {"scan", {{"residue", res}, {"resolution", o.resolution}, {"init", init_mode(o)}, {"seed", o.seed}}},
           {"result", {{"points", pts.size()}, {"min_g_total", best}, {"min_phi", at[0]}, {"min_psi", at[1]}}},
           {"files", {"rama.csv"}}};
  write_manifest(dir, man);
  out << "scan-rama: " << pts.size() << " points, minimum " << fmt(best) << " kcal/mol at (" << at[0] << ", " << at[1]
      << ")\n";
  return 0;
}

inline int cmd_scan_hinge(const Options& o, std::ostream& out, std::ostream&) {
  Loaded l = load_input(o);
  const FieldConfig field = field_config(o);
  const Chain& c = l.sys.chain;
  const auto hinges = resolve_joints(c, o.hinges);
  if (hinges.empty()) throw ConfigError("--hinges is required");
  const Conformation native = initial_conformation(o, l, o.seed);
  const auto pts = hinge_scan(l.sys, native, hinges, o.range, o.step, field);
  const fs::path dir(o.out);
  fs::create_directories(dir);
  std::ofstream csv(dir / "hinge.csv");
  std::vector<std::string> names;
  for (int j : hinges) {
    names.push_back(joint_name(c, j));
    csv << "d_" << names.back() << ',';
  }
  csv << "g_elec,g_vdw,g_cav,g_total\n";
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> at;
  for (const auto& p : pts) {
    csv << scan_row(p.angles, p.energy) << '\n';
    if (p.energy.g_total < best) {
      best = p.energy.g_total;
      at = p.angles;
    }
  }
  json man{{"program", "protofold"}, {"command", "scan-hinge"}, {"input", input_json(o, l)}, {"field", field_json(field)},
           {"scan", {{"hinges", names}, {"half_range", o.range}, {"step", o.step}, {"init", init_mode(o)}}},
           {"result", {{"points", pts.size()}, {"min_g_total", best}, {"min_offsets", at}}},
           {"files", {"hinge.csv"}}};
  write_manifest(dir, man);
  out << "scan-hinge: " << pts.size() << " points, minimum " << fmt(best) << " kcal/mol\n";
  return 0;
}

inline int cmd_sasa(const Options& o, std::ostream& out, std::ostream&) {
  Loaded l = load_input(o);
  Options oo = o;
  oo.vacuum = false;
  const FieldConfig field = field_config(oo);
  const Chain& c = l.sys.chain;
  const Conformation conf = initial_conformation(o, l, o.seed);
  const Evaluation ev = evaluate(l.sys, conf, field);
  const fs::path dir(o.out);
  fs::create_directories(dir);
  std::ofstream csv(dir / "sasa.csv");
  csv << "atom,name,res_name,res_seq,solv_class,gamma,f_exp,a_exp,g_cav\n";
  double total = 0.0;
  for (std::size_t a = 0; a < c.atoms.size(); ++a) {
    const auto& p = l.sys.params[a];
    total += ev.sasa.a_exp[a];
    csv << a << ',' << c.atoms[a].name << ',' << c.atoms[a].res_name << ',' << c.atoms[a].res_seq << ',' << p.solv_class
        << ',' << fmt(p.gamma) << ',' << fmt(ev.sasa.f_exp[a]) << ',' << fmt(ev.sasa.a_exp[a]) << ','
        << fmt(p.gamma * ev.sasa.a_exp[a]) << '\n';
  }
  json man{{"program", "protofold"}, {"command", "sasa"}, {"input", input_json(o, l)}, {"field", field_json(field)},
           {"init", {{"mode", init_mode(o)}, {"seed", o.seed}}},
           {"result", {{"total_sasa", total}, {"g_cav", ev.energy.g_cav}}},
           {"files", {"sasa.csv"}}};
  write_manifest(dir, man);
  out << "sasa: total " << fmt(total) << " A^2, G_cav " << fmt(ev.energy.g_cav) << " kcal/mol\n";
  return 0;
}

inline int cmd_bench(const Options& o, std::ostream& out, std::ostream&) {
  const auto sizes = parse_list<int>(o.sizes, "--sizes");
  if (sizes.empty()) throw ConfigError("--sizes is empty");
  if (o.repeats < 1) throw ConfigError("--repeats must be at least 1");
  const TemplateLibrary lib = o.templates.empty() ? default_templates() : TemplateLibrary::load(o.templates);
  const ParamSet ps = o.params.empty() ? default_params() : ParamSet::load(o.params);
  FieldConfig hashed = field_config(o);
  hashed.use_hash = true;
  FieldConfig brute = hashed;
  brute.use_hash = false;
  std::optional<SampleSphere> sphere;
  if (hashed.solvation) sphere = generate_samples(hashed.solv.samples, hashed.solv.mode, hashed.solv.seed);
  const fs::path dir(o.out);
  fs::create_directories(dir);
  std::ofstream csv(dir / "bench.csv");
  const std::string head =
      "residues,atoms,hash_grid,hash_nonbonded,hash_solvation,hash_force,brute_grid,brute_nonbonded,brute_solvation,"
      "brute_force,speedup";
  csv << head << '\n';
  out << head << '\n';
  json rows = json::array();
  for (int m : sizes) {
    if (m < 1) throw ConfigError("--sizes entries must be positive");
    const System sys = System::make(build_chain(std::vector<std::string>(static_cast<std::size_t>(m), o.bench_residue), lib), ps);
    const Conformation conf =
        o.shape == "helix" ? uniform_conformation(sys.chain, -57.0, -47.0) : zero_conformation(sys.chain);
    PhaseTimes best_h, best_b;
    best_h.grid = best_b.grid = std::numeric_limits<double>::infinity();
    auto keep = [](PhaseTimes& best, const PhaseTimes& t) {
      if (t.force_total() < best.force_total() || !std::isfinite(best.grid)) best = t;
    };
    for (int r = 0; r < o.repeats; ++r) {
      keep(best_h, evaluate(sys, conf, hashed, sphere ? &*sphere : nullptr).times);
      keep(best_b, evaluate(sys, conf, brute, sphere ? &*sphere : nullptr).times);
    }
    const double sp = best_b.force_total() / best_h.force_total();
    std::ostringstream row;
    row << m << ',' << sys.chain.atom_count() << ',' << fmt(best_h.grid) << ',' << fmt(best_h.nonbonded) << ','
        << fmt(best_h.solvation) << ',' << fmt(best_h.force_total()) << ',' << fmt(best_b.grid) << ','
        << fmt(best_b.nonbonded) << ',' << fmt(best_b.solvation) << ',' << fmt(best_b.force_total()) << ',' << fmt(sp);
    csv << row.str() << '\n';
    out << row.str() << '\n';
    rows.push_back({{"residues", m}, {"atoms", sys.chain.atom_count()}, {"hash_force", best_h.force_total()},
                    {"brute_force", best_b.force_total()}, {"speedup", sp}});
  }
  json man{{"program", "protofold"}, {"command", "bench"}, {"field", field_json(hashed)},
           {"bench", {{"sizes", sizes}, {"repeats", o.repeats}, {"residue", o.bench_residue}, {"shape", o.shape}}},
           {"result", rows}, {"files", {"bench.csv"}}};
  write_manifest(dir, man);
  return 0;
}

inline void add_input(CLI::App* s, Options& o) {
  auto* g = s->add_option_group("input");
  g->add_option("--seq", o.seq, "residue sequence, one-letter or three-letter codes");
  g->add_option("--pdb", o.pdb, "PDB structure to import");
  g->require_option(1);
  s->add_option("--plane", o.plane, "peptide plane placement for --seq builds: ideal or table")
      ->check(CLI::IsMember({"ideal", "table"}));
}

inline void add_common(CLI::App* s, Options& o) {
  s->add_option("--templates", o.templates, "residue template file (default: built-in)");
  s->add_option("--params", o.params, "force-field parameter file (default: built-in)");
  s->add_option("--solvation-column", o.solv_column, "atomic solvation parameter column")
      ->check(CLI::IsMember({"sharp", "kyte"}));
  auto* vac = s->add_flag("--vacuum,--no-solvation", o.vacuum, "disable the solvation term");
  s->add_flag("--water", o.water, "enable the solvation term (default)")->excludes(vac);
  s->add_option("--cutoffs", o.cutoffs, "elec,vdw,cav cutoff distances in Angstrom (default 9,5,8)");
  s->add_option("--alpha", o.alpha, "grid density constant")->check(CLI::PositiveNumber);
  s->add_flag("--brute-force", o.brute, "all-pairs neighbor search instead of the hash grid");
  s->add_option("--dielectric", o.dielectric, "distance or constant")->check(CLI::IsMember({"distance", "constant"}));
  s->add_option("--dielectric-constant", o.dielectric_const, "relative permittivity for --dielectric constant");
  s->add_option("--samples", o.samples, "sample points per atom sphere")->check(CLI::Range(12, 1 << 24));
  s->add_option("--delta-r", o.delta_r, "finite-difference displacement (Angstrom)")->check(CLI::PositiveNumber);
  s->add_option("--probe-radius", o.probe, "water probe radius (Angstrom)")->check(CLI::PositiveNumber);
  s->add_option("--sampling", o.sampling, "geodesic or random sphere samples")
      ->check(CLI::IsMember({"geodesic", "random"}));
  s->add_option("--seed", o.seed, "64-bit random seed (recorded in the manifest)");
  s->add_option("--threads", o.threads, "thread cap for parallel phases (0: runtime default)")->check(CLI::NonNegativeNumber);
  s->add_option("--out", o.out, "output directory");
}

inline void add_init(CLI::App* s, Options& o) {
  s->add_option("--init", o.init, "initial conformation: zp, uniform, random, native")
      ->check(CLI::IsMember({"zp", "uniform", "random", "native"}));
  s->add_option("--phi", o.phi, "phi for --init uniform (deg)");
  s->add_option("--psi", o.psi, "psi for --init uniform (deg)");
  s->add_option("--angle-range", o.angle_range, "random phi/psi drawn from [-range, range] (deg)")
      ->check(CLI::Range(0.0, 180.0));
  s->add_option("--perturb", o.perturb, "uniform perturbation of native angles (deg)")->check(CLI::NonNegativeNumber);
  s->add_option("--freeze", o.freeze, "comma-separated joints to hold fixed (index or name, e.g. phi_3)");
}

}  // namespace detail

/// Parses arguments and runs one command. Returns the process exit status.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  Options o;
  CLI::App app{"protofold: kinetostatic compliance folding of peptide chains"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "protofold 1.0");

  auto* fold_cmd = app.add_subcommand("fold", "run the compliance folding loop");
  detail::add_input(fold_cmd, o);
  detail::add_common(fold_cmd, o);
  detail::add_init(fold_cmd, o);
  fold_cmd->add_option("--kappa", o.kappa, "largest joint step per iteration (deg)")->check(CLI::PositiveNumber);
  fold_cmd->add_option("--max-iters", o.max_iters, "iteration limit")->check(CLI::PositiveNumber);
  fold_cmd->add_option("--torque-tol", o.torque_tol, "stop when max torque falls below this fraction of the first");
  fold_cmd->add_option("--energy-window", o.energy_window, "plateau window (iterations)")->check(CLI::PositiveNumber);
  fold_cmd->add_option("--energy-tol", o.energy_tol, "plateau threshold (kcal/mol over the window)");
  fold_cmd->add_option("--snapshot-every", o.snapshot_every, "write a PDB snapshot every k iterations (0: none)")
      ->check(CLI::NonNegativeNumber);
  fold_cmd->add_option("--batch", o.batch, "run this many random starts instead of a single fold")
      ->check(CLI::NonNegativeNumber);

  auto* rama = app.add_subcommand("scan-rama", "(phi, psi) energy grid for one residue");
  detail::add_input(rama, o);
  detail::add_common(rama, o);
  detail::add_init(rama, o);
  rama->add_option("--residue", o.residue, "residue number (1-based, default 2)");
  rama->add_option("--resolution", o.resolution, "grid points per angle")->check(CLI::Range(2, 3600));

  auto* hinge = app.add_subcommand("scan-hinge", "energy grid over hinge dihedrals about the start conformation");
  detail::add_input(hinge, o);
  detail::add_common(hinge, o);
  detail::add_init(hinge, o);
  hinge->add_option("--hinges", o.hinges, "comma-separated hinge joints (index or name)")->required();
  hinge->add_option("--range", o.range, "half range of each sweep (deg)")->check(CLI::NonNegativeNumber);
  hinge->add_option("--step", o.step, "sweep step (deg)")->check(CLI::PositiveNumber);

  auto* sasa = app.add_subcommand("sasa", "per-atom solvent accessible surface area");
  detail::add_input(sasa, o);
  detail::add_common(sasa, o);
  detail::add_init(sasa, o);

  auto* bench = app.add_subcommand("bench", "force-computation time against chain length, hashed and all-pairs");
  detail::add_common(bench, o);
  bench->add_option("--sizes", o.sizes, "comma-separated residue counts");
  bench->add_option("--repeats", o.repeats, "evaluations per size (fastest kept)");
  bench->add_option("--residue", o.bench_residue, "residue type of the test chains");
  bench->add_option("--shape", o.shape, "zp (fold starting point) or helix (phi -57, psi -47)")
      ->check(CLI::IsMember({"zp", "helix"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }
  if (!app.get_subcommands().empty()) o.command = app.get_subcommands().front()->get_name();
  for (auto* s : app.get_subcommands())
    if (auto* opt = s->get_option_no_throw("--seed"); opt && opt->count() > 0) o.seed_given = true;
  if (!o.seed_given) {
    std::random_device rd;
    o.seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  }

  try {
    if (o.command == "fold") return detail::cmd_fold(o, out, err);
    if (o.command == "scan-rama") return detail::cmd_scan_rama(o, out, err);
    if (o.command == "scan-hinge") return detail::cmd_scan_hinge(o, out, err);
    if (o.command == "sasa") return detail::cmd_sasa(o, out, err);
    if (o.command == "bench") return detail::cmd_bench(o, out, err);
  } catch (const std::exception& e) {
    err << "protofold " << o.command << ": " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace protofold::cli
