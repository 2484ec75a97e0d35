#pragma once

#include "protofold/params.hpp"
#include "protofold/parallel.hpp"
#include "protofold/spatial.hpp"
#include "protofold/topology.hpp"

#include <atomic>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

namespace protofold {

inline constexpr double kCoulomb = 332.06;  // kcal A / (mol e^2)
inline constexpr double kMinDistance = 1e-6;

struct Dielectric {
  enum class Mode { Distance, Constant };
  Mode mode = Mode::Distance;
  double kappa = 1.0;  // constant mode only

  /// Relative permittivity at distance d (Angstrom).
  double at(double d) const { return mode == Mode::Distance ? d : kappa; }
};

struct EnergyBreakdown {
  double g_elec = 0.0;
  double g_vdw = 0.0;
  double g_cav = 0.0;
  double g_total = 0.0;

  void sum() { g_total = g_elec + g_vdw + g_cav; }
};

struct NonbondedResult {
  double g_elec = 0.0;
  double g_vdw = 0.0;
  Forces f_elec;
  Forces f_vdw;
};

/// Electrostatic and Lennard-Jones terms over a neighbor table, with exact
/// cutoff filtering (d^2 <= cut^2). Forces are accumulated per atom over its
/// own list, so there are no cross-atom writes; each unordered pair counts
/// once in the energies.
inline NonbondedResult nonbonded(const Positions& r, const std::vector<AtomParams>& p, const NeighborTable& nb,
                                 const PairWeights& w, const Dielectric& diel, double d_elec, double d_vdw,
                                 bool want_elec = true, bool want_vdw = true, Exec exec = {}) {
  const std::size_t n = r.size();
  NonbondedResult out;
  out.f_elec.assign(n, Vec3::Zero());
  out.f_vdw.assign(n, Vec3::Zero());
  std::vector<double> pe(n, 0.0), pv(n, 0.0), q(n), R(n), se(n), x(n), y(n), z(n);
  for (std::size_t i = 0; i < n; ++i) {
    q[i] = p[i].q;
    R[i] = p[i].R;
    se[i] = std::sqrt(p[i].eps);
    x[i] = r[i].x();
    y[i] = r[i].y();
    z[i] = r[i].z();
  }
  const bool distance_diel = diel.mode == Dielectric::Mode::Distance;
  const double inv_kappa = 1.0 / diel.kappa;
  const double ce2 = want_elec ? d_elec * d_elec : -1.0;
  const double cv2 = want_vdw ? d_vdw * d_vdw : -1.0;
  const auto& exc = w.exceptions();
  const bool has_exc = exc.offset.size() == n + 1;
  const double w_full_e = w.full_elec(), w_full_v = w.full_vdw();
  std::atomic<long long> bad{-1};
  const long long nn = static_cast<long long>(n);
#pragma omp parallel num_threads(exec.resolved())
  {
    // mark[j] = exception slot of j in the current row, -1 otherwise
    std::vector<int> mark(has_exc ? n : 0, -1);
#pragma omp for schedule(dynamic, 64)
    for (long long ii = 0; ii < nn; ++ii) {
      const auto i = static_cast<std::size_t>(ii);
      double fex = 0, fey = 0, fez = 0, fvx = 0, fvy = 0, fvz = 0;
      double ee = 0.0, ev = 0.0;
      const double xi = x[i], yi = y[i], zi = z[i], qi = q[i], Ri = R[i], sei = se[i];
      const bool het_i = w.hetero(i);
      const int k0 = has_exc ? exc.offset[i] : 0, k1 = has_exc ? exc.offset[i + 1] : 0;
      for (int k = k0; k < k1; ++k) mark[static_cast<std::size_t>(exc.partner[static_cast<std::size_t>(k)])] = k;
      for (const int* it = nb.begin(i); it != nb.end(i); ++it) {
        const auto j = static_cast<std::size_t>(*it);
        const double dx = xi - x[j], dy = yi - y[j], dz = zi - z[j];
        const double d2 = dx * dx + dy * dy + dz * dz;
        const bool in_e = d2 <= ce2;
        const bool in_v = d2 <= cv2;
        if (!in_e && !in_v) continue;
        if (het_i && w.hetero(j)) continue;
        double we = w_full_e, wv = w_full_v;
        if (k1 > k0) {
          if (const int k = mark[j]; k >= 0) {
            we = exc.w_elec[static_cast<std::size_t>(k)];
            wv = exc.w_vdw[static_cast<std::size_t>(k)];
          }
        }
        if (we == 0.0 && wv == 0.0) continue;
        if (d2 < kMinDistance * kMinDistance) {
          bad = static_cast<long long>(i);
          continue;
        }
        const double inv_d2 = 1.0 / d2;
        if (in_e && we != 0.0) {
          const double qq = qi * q[j];
          // 1/(kappa(d) d) with kappa = d; the force magnitude is then 2E/d
          double energy, f;
          if (distance_diel) {
            energy = we * kCoulomb * qq * inv_d2;
            f = 2.0 * energy * inv_d2;
          } else {
            const double inv_d = std::sqrt(inv_d2);
            energy = we * kCoulomb * qq * inv_d * inv_kappa;
            f = energy * inv_d2;
          }
          fex += f * dx;
          fey += f * dy;
          fez += f * dz;
          if (j > i) ee += energy;
        }
        if (in_v && wv != 0.0) {
          const double eps = sei * se[j];
          const double D = Ri + R[j];
          const double s2 = D * D * inv_d2;
          const double s6 = s2 * s2 * s2;
          const double s12 = s6 * s6;
          const double f = wv * 12.0 * eps * (s12 - s6) * inv_d2;
          fvx += f * dx;
          fvy += f * dy;
          fvz += f * dz;
          if (j > i) ev += wv * eps * (s12 - 2.0 * s6);
        }
      }
      for (int k = k0; k < k1; ++k) mark[static_cast<std::size_t>(exc.partner[static_cast<std::size_t>(k)])] = -1;
      out.f_elec[i] = Vec3(fex, fey, fez);
      out.f_vdw[i] = Vec3(fvx, fvy, fvz);
      pe[i] = ee;
      pv[i] = ev;
    }
  }
  if (bad >= 0) throw GeometryError("coincident atom centers near atom " + std::to_string(bad.load()));
  for (std::size_t i = 0; i < n; ++i) {
    out.g_elec += pe[i];
    out.g_vdw += pv[i];
  }
  return out;
}

namespace detail {

/// State of the fused pair loops. Atoms are stored in a caller-given order
/// (cell order for the grid), so every span is a contiguous slot range.
/// Pair weights for the current first atom live in per-slot arrays: full
/// weights everywhere except its topological exceptions. Each unordered pair
/// is added once and its force applied to both atoms.
class PairAccumulator {
 public:
  /// `order[k]` is the atom at local slot k; empty means identity.
  PairAccumulator(const Positions& r, const std::vector<AtomParams>& p, const PairWeights& w, const Dielectric& diel,
                  double d_elec, double d_vdw, std::vector<int> order = {})
      : n_(r.size()), exc_(w.exceptions()), order_(std::move(order)) {
    if (order_.empty()) {
      order_.resize(n_);
      std::iota(order_.begin(), order_.end(), 0);
    }
    slot_.resize(n_);
    for (std::size_t k = 0; k < n_; ++k) slot_[static_cast<std::size_t>(order_[k])] = static_cast<int>(k);
    for (auto* v : {&x_, &y_, &z_, &q_, &R_, &se_, &het_}) v->resize(n_);
    for (std::size_t k = 0; k < n_; ++k) {
      const auto i = static_cast<std::size_t>(order_[k]);
      x_[k] = r[i].x();
      y_[k] = r[i].y();
      z_[k] = r[i].z();
      q_[k] = p[i].q;
      R_[k] = p[i].R;
      se_[k] = std::sqrt(p[i].eps);
      het_[k] = w.hetero(i) ? 1.0 : 0.0;
    }
    for (auto* v : {&fex_, &fey_, &fez_, &fvx_, &fvy_, &fvz_}) v->assign(n_, 0.0);
    keep_.resize(n_);
    keep_v_.resize(n_);
    has_exc_ = exc_.offset.size() == n_ + 1;
    we_full_ = w.full_elec();
    wv_full_ = w.full_vdw();
    we_.assign(n_, we_full_);
    wv_.assign(n_, wv_full_);
    ce2_ = d_elec * d_elec;
    cv2_ = d_vdw * d_vdw;
    cmax2_ = std::max(ce2_, cv2_);
    distance_diel_ = diel.mode == Dielectric::Mode::Distance;
    inv_kappa_ = 1.0 / diel.kappa;
  }

  /// Local slot of an atom.
  int slot(int atom) const { return slot_[static_cast<std::size_t>(atom)]; }

  void begin(int k) { set_weights(k, true); }
  void end(int k) { set_weights(k, false); }

  /// Pairs (k, l) for slots l in [lb, le). In-range slots are compacted
  /// first; electrostatics then runs on those and Lennard-Jones on the
  /// (usually far fewer) slots inside its own cutoff.
  void span(int ka, int lb, int le) {
    const auto i = static_cast<std::size_t>(ka);
    const double* __restrict x = x_.data();
    const double* __restrict y = y_.data();
    const double* __restrict z = z_.data();
    const double* __restrict q = q_.data();
    const double* __restrict R = R_.data();
    const double* __restrict se = se_.data();
    const double* __restrict wel = we_.data();
    const double* __restrict wvl = wv_.data();
    const double* __restrict het = het_.data();
    double* __restrict fex = fex_.data();
    double* __restrict fey = fey_.data();
    double* __restrict fez = fez_.data();
    double* __restrict fvx = fvx_.data();
    double* __restrict fvy = fvy_.data();
    double* __restrict fvz = fvz_.data();
    int* __restrict keep = keep_.data();
    int* __restrict keep_v = keep_v_.data();
    const double ce2 = ce2_, cv2 = cv2_, cmax2 = cmax2_, inv_kappa = inv_kappa_;
    const bool distance_diel = distance_diel_, het_i = het_[i] != 0.0;
    const double xi = x[i], yi = y[i], zi = z[i], qi = q[i], Ri = R[i], sei = se[i];
    double axe = 0, aye = 0, aze = 0, axv = 0, ayv = 0, azv = 0, ge = 0, gv = 0;
    std::size_t nk = 0;
    for (int j = lb; j < le; ++j) {
      const double dx = xi - x[j], dy = yi - y[j], dz = zi - z[j];
      keep[nk] = j;
      nk += (dx * dx + dy * dy + dz * dz <= cmax2) ? 1 : 0;
    }
    std::size_t nv = 0;
    for (std::size_t m = 0; m < nk; ++m) {
      const auto j = static_cast<std::size_t>(keep[m]);
      const double dx = xi - x[j], dy = yi - y[j], dz = zi - z[j];
      const double d2 = dx * dx + dy * dy + dz * dz;
      double we = wel[j], wv = wvl[j];
      if (het_i && het[j] != 0.0) we = wv = 0.0;
      we = d2 <= ce2 ? we : 0.0;
      wv = d2 <= cv2 ? wv : 0.0;
      if (d2 < kMinDistance * kMinDistance) {
        if (we != 0.0 || wv != 0.0) bad_ = order_[i];
        continue;
      }
      keep_v[nv] = keep[m];
      nv += wv != 0.0 ? 1 : 0;
      const double inv_d2 = 1.0 / d2;
      double energy, fel;
      if (distance_diel) {
        energy = we * kCoulomb * qi * q[j] * inv_d2;
        fel = 2.0 * energy * inv_d2;
      } else {
        const double inv_d = std::sqrt(inv_d2);
        energy = we * kCoulomb * qi * q[j] * inv_d * inv_kappa;
        fel = energy * inv_d2;
      }
      axe += fel * dx;
      aye += fel * dy;
      aze += fel * dz;
      fex[j] -= fel * dx;
      fey[j] -= fel * dy;
      fez[j] -= fel * dz;
      ge += energy;
    }
    for (std::size_t m = 0; m < nv; ++m) {
      const auto j = static_cast<std::size_t>(keep_v[m]);
      const double dx = xi - x[j], dy = yi - y[j], dz = zi - z[j];
      const double inv_d2 = 1.0 / (dx * dx + dy * dy + dz * dz);
      const double wv = wvl[j];
      const double eps = sei * se[j];
      const double D = Ri + R[j];
      const double s2 = D * D * inv_d2;
      const double s6 = s2 * s2 * s2;
      const double s12 = s6 * s6;
      const double fvd = wv * 12.0 * eps * (s12 - s6) * inv_d2;
      axv += fvd * dx;
      ayv += fvd * dy;
      azv += fvd * dz;
      fvx[j] -= fvd * dx;
      fvy[j] -= fvd * dy;
      fvz[j] -= fvd * dz;
      gv += wv * eps * (s12 - 2.0 * s6);
    }
    add(i, axe, aye, aze, axv, ayv, azv, ge, gv);
  }

  NonbondedResult finish() const {
    if (bad_ >= 0) throw GeometryError("coincident atom centers near atom " + std::to_string(bad_));
    NonbondedResult out;
    out.g_elec = g_elec_;
    out.g_vdw = g_vdw_;
    out.f_elec.resize(n_);
    out.f_vdw.resize(n_);
    for (std::size_t k = 0; k < n_; ++k) {
      const auto i = static_cast<std::size_t>(order_[k]);
      out.f_elec[i] = Vec3(fex_[k], fey_[k], fez_[k]);
      out.f_vdw[i] = Vec3(fvx_[k], fvy_[k], fvz_[k]);
    }
    return out;
  }

 private:
  void add(std::size_t i, double axe, double aye, double aze, double axv, double ayv, double azv, double ge,
           double gv) {
    fex_[i] += axe;
    fey_[i] += aye;
    fez_[i] += aze;
    fvx_[i] += axv;
    fvy_[i] += ayv;
    fvz_[i] += azv;
    g_elec_ += ge;
    g_vdw_ += gv;
  }

  void set_weights(int k, bool on) {
    if (!has_exc_) return;
    const auto i = static_cast<std::size_t>(order_[static_cast<std::size_t>(k)]);
    for (int e = exc_.offset[i]; e < exc_.offset[i + 1]; ++e) {
      const auto l = static_cast<std::size_t>(slot(exc_.partner[static_cast<std::size_t>(e)]));
      we_[l] = on ? exc_.w_elec[static_cast<std::size_t>(e)] : we_full_;
      wv_[l] = on ? exc_.w_vdw[static_cast<std::size_t>(e)] : wv_full_;
    }
  }

  std::size_t n_;
  const PairWeights::Exceptions& exc_;
  std::vector<int> order_, slot_, keep_, keep_v_;
  std::vector<double> x_, y_, z_, q_, R_, se_, het_, we_, wv_;
  std::vector<double> fex_, fey_, fez_, fvx_, fvy_, fvz_;
  bool has_exc_ = false, distance_diel_ = true;
  double ce2_ = 0, cv2_ = 0, cmax2_ = 0, inv_kappa_ = 1, we_full_ = 1, wv_full_ = 1;
  double g_elec_ = 0.0, g_vdw_ = 0.0;
  long long bad_ = -1;
};

}  // namespace detail

/// Both nonbonded terms in one sequential pass over the grid's candidate
/// pairs, without building a neighbor table.
inline NonbondedResult nonbonded_cells(const Positions& r, const std::vector<AtomParams>& p, const HashGrid& g,
                                       const PairWeights& w, const Dielectric& diel, double d_elec, double d_vdw) {
  detail::PairAccumulator acc(r, p, w, diel, d_elec, d_vdw, g.cell_atoms);
  const int* base = g.cell_atoms.data();
  for_each_candidate_pair(
      g, std::max(d_elec, d_vdw), [&](int i) { acc.begin(acc.slot(i)); },
      [&](int i, const int* first, const int* last) {
        acc.span(acc.slot(i), static_cast<int>(first - base), static_cast<int>(last - base));
      },
      [&](int i) { acc.end(acc.slot(i)); }, true);
  return acc.finish();
}

/// Brute-force counterpart of nonbonded_cells: every unordered pair is tested.
inline NonbondedResult nonbonded_all_pairs(const Positions& r, const std::vector<AtomParams>& p, const PairWeights& w,
                                           const Dielectric& diel, double d_elec, double d_vdw) {
  detail::PairAccumulator acc(r, p, w, diel, d_elec, d_vdw);
  const int n = static_cast<int>(r.size());
  for (int i = 0; i < n; ++i) {
    acc.begin(i);
    acc.span(i, i + 1, n);
    acc.end(i);
  }
  return acc.finish();
}

inline Forces elec_forces(const Positions& r, const std::vector<AtomParams>& p, const NeighborTable& nb,
                          const PairWeights& w, const Dielectric& diel = {},
                          double d_elec = std::numeric_limits<double>::infinity()) {
  return nonbonded(r, p, nb, w, diel, d_elec, 0.0, true, false).f_elec;
}

inline double elec_energy(const Positions& r, const std::vector<AtomParams>& p, const NeighborTable& nb,
                          const PairWeights& w, const Dielectric& diel = {},
                          double d_elec = std::numeric_limits<double>::infinity()) {
  return nonbonded(r, p, nb, w, diel, d_elec, 0.0, true, false).g_elec;
}

inline Forces vdw_forces(const Positions& r, const std::vector<AtomParams>& p, const NeighborTable& nb,
                         const PairWeights& w, double d_vdw = std::numeric_limits<double>::infinity()) {
  return nonbonded(r, p, nb, w, {}, 0.0, d_vdw, false, true).f_vdw;
}

inline double vdw_energy(const Positions& r, const std::vector<AtomParams>& p, const NeighborTable& nb,
                         const PairWeights& w, double d_vdw = std::numeric_limits<double>::infinity()) {
  return nonbonded(r, p, nb, w, {}, 0.0, d_vdw, false, true).g_vdw;
}

}  // namespace protofold
