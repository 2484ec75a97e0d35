#pragma once

#include "protofold/params.hpp"
#include "protofold/parallel.hpp"
#include "protofold/spatial.hpp"

#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

namespace protofold {

enum class SamplingMode { Geodesic, Random };

struct SampleSphere {
  std::vector<Vec3> points;
  std::vector<int> orbit_counts;  // geodesic mode only

  std::size_t size() const { return points.size(); }
};

/// Polar geodesic points: latitude orbits at even polar spacing, each holding
/// a share of the N points proportional to its circumference (largest
/// remainder rounding), staggered in azimuth between neighboring orbits.
inline SampleSphere generate_samples(int N, SamplingMode mode = SamplingMode::Geodesic, std::uint64_t seed = 1) {
  if (N < 12) throw ConfigError("sample count must be at least 12");
  SampleSphere s;
  if (mode == SamplingMode::Random) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    while (static_cast<int>(s.points.size()) < N) {
      Vec3 v(g(rng), g(rng), g(rng));
      const double nv = v.norm();
      if (nv > 1e-9) s.points.push_back(v / nv);
    }
    return s;
  }
  const int M = std::max(1, static_cast<int>(std::lround(std::sqrt(kPi * N) / 2.0)));
  std::vector<double> share(static_cast<std::size_t>(M));
  double tot = 0.0;
  for (int j = 0; j < M; ++j) {
    share[static_cast<std::size_t>(j)] = std::sin(kPi * (j + 0.5) / M);
    tot += share[static_cast<std::size_t>(j)];
  }
  std::vector<int> cnt(static_cast<std::size_t>(M));
  std::vector<std::pair<double, int>> rem;
  int used = 0;
  for (int j = 0; j < M; ++j) {
    const double exact = N * share[static_cast<std::size_t>(j)] / tot;
    cnt[static_cast<std::size_t>(j)] = static_cast<int>(std::floor(exact));
    used += cnt[static_cast<std::size_t>(j)];
    rem.emplace_back(exact - std::floor(exact), j);
  }
  // ties broken by orbit index for determinism
  std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (int k = 0; used < N; ++k, ++used) ++cnt[static_cast<std::size_t>(rem[static_cast<std::size_t>(k % M)].second)];
  s.orbit_counts = cnt;
  for (int j = 0; j < M; ++j) {
    const double th = kPi * (j + 0.5) / M;
    const int c = cnt[static_cast<std::size_t>(j)];
    const double shift = (j % 2) ? 0.5 : 0.0;
    for (int k = 0; k < c; ++k) {
      const double ph = 2.0 * kPi * (k + shift) / c;
      s.points.emplace_back(std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th));
    }
  }
  return s;
}

struct SolvationConfig {
  double probe_radius = 1.4;
  double delta_r = 0.01;
  int samples = 1024;
  SamplingMode mode = SamplingMode::Geodesic;
  std::uint64_t seed = 1;

  void validate() const {
    if (!(probe_radius > 0.0 && delta_r > 0.0)) throw ConfigError("solvation radii must be positive");
    if (samples < 12) throw ConfigError("sample count must be at least 12");
  }
};

/// Startup check that the cavity cutoff cannot truncate any offset-sphere overlap.
inline void check_cav_cutoff(const std::vector<AtomParams>& p, const SolvationConfig& cfg, double d_cav) {
  double rmax = 0.0;
  for (const auto& a : p) rmax = std::max(rmax, a.R);
  if (2.0 * (rmax + cfg.probe_radius) > d_cav)
    throw ConfigError("cavity cutoff " + std::to_string(d_cav) + " A is below 2(R_max + R_probe) = " +
                      std::to_string(2.0 * (rmax + cfg.probe_radius)) + " A");
}

enum class Coverage : std::uint8_t { Zero = 0, One = 1, TwoPlus = 2 };

/// Per (atom, sample) coverage state, row-major [atom][sample].
struct ExposureState {
  std::size_t samples = 0;
  std::vector<Coverage> count;
  std::vector<std::int32_t> j_over;  // critical neighbor when count == One, else -1

  Coverage at(std::size_t i, std::size_t k) const { return count[i * samples + k]; }
  std::int32_t over(std::size_t i, std::size_t k) const { return j_over[i * samples + k]; }
};

struct SasaResult {
  std::vector<double> f_exp;
  std::vector<double> a_exp;
  double g_cav = 0.0;
};

inline double offset_radius(const AtomParams& p, const SolvationConfig& c) { return p.R + c.probe_radius; }

/// Coverage counts, exposure ratios and the cavity energy. The critical
/// neighbor is only recorded when it is unique, so row order does not matter.
inline SasaResult sasa_pass(const Positions& r, const std::vector<AtomParams>& p, const NeighborTable& nb,
                            const SampleSphere& sphere, const SolvationConfig& cfg, ExposureState* state = nullptr,
                            Exec exec = {}) {
  const std::size_t n = r.size();
  const std::size_t N = sphere.size();
  SasaResult res;
  res.f_exp.assign(n, 0.0);
  res.a_exp.assign(n, 0.0);
  if (state) {
    state->samples = N;
    state->count.assign(n * N, Coverage::Zero);
    state->j_over.assign(n * N, -1);
  }
  std::vector<double> roff(n);
  for (std::size_t i = 0; i < n; ++i) roff[i] = offset_radius(p[i], cfg);
  const long long nn = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 16) num_threads(exec.resolved())
  for (long long ii = 0; ii < nn; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    std::size_t exposed = 0;
    for (std::size_t k = 0; k < N; ++k) {
      const Vec3 q = r[i] + roff[i] * sphere.points[k];
      int c = 0;
      std::int32_t first = -1;
      for (const int* it = nb.begin(i); it != nb.end(i); ++it) {
        const auto j = static_cast<std::size_t>(*it);
        if ((q - r[j]).squaredNorm() <= roff[j] * roff[j]) {
          if (++c == 1) first = *it;
          else break;
        }
      }
      if (c == 0) ++exposed;
      if (state) {
        state->count[i * N + k] = static_cast<Coverage>(c);
        state->j_over[i * N + k] = c == 1 ? first : -1;
      }
    }
    res.f_exp[i] = static_cast<double>(exposed) / static_cast<double>(N);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double area = 4.0 * kPi * roff[i] * roff[i];
    res.a_exp[i] = res.f_exp[i] * area;
    res.g_cav += p[i].gamma * res.a_exp[i];
  }
  return res;
}

/// Fixed-point scale for solvation force accumulation (2^-32 kcal/mol/A).
inline constexpr double kFixedScale = 4294967296.0;

namespace detail {

/// Force quantum per flipped sample of atom i: G0_i / (N dr), in fixed point.
inline std::vector<std::int64_t> flip_units(const std::vector<AtomParams>& p, const SolvationConfig& cfg, std::size_t N) {
  std::vector<std::int64_t> u(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double ro = offset_radius(p[i], cfg);
    const double g0 = 4.0 * kPi * p[i].gamma * ro * ro;
    u[i] = std::llround(g0 / (static_cast<double>(N) * cfg.delta_r) * kFixedScale);
  }
  return u;
}

/// tally[off[i] + 3*slot + axis]: net number of samples of atom i that become
/// covered (+1) or exposed (-1) when neighbor nb(i)[slot] moves by +dr along axis.
inline Forces scatter_tallies(const NeighborTable& nb, const std::vector<std::int32_t>& tally,
                              const std::vector<std::int64_t>& unit) {
  const std::size_t n = nb.atoms();
  std::vector<std::array<std::int64_t, 3>> acc(n, {0, 0, 0});
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t base = 3 * static_cast<std::size_t>(nb.offset[i]);
    for (std::size_t s = 0; s < nb.count(i); ++s) {
      const auto j = static_cast<std::size_t>(nb.index[static_cast<std::size_t>(nb.offset[i]) + s]);
      for (std::size_t a = 0; a < 3; ++a) {
        const std::int64_t v = static_cast<std::int64_t>(tally[base + 3 * s + a]) * unit[i];
        acc[i][a] -= v;
        acc[j][a] += v;
      }
    }
  }
  Forces f(n);
  for (std::size_t i = 0; i < n; ++i)
    f[i] = Vec3(static_cast<double>(acc[i][0]), static_cast<double>(acc[i][1]), static_cast<double>(acc[i][2])) /
           kFixedScale;
  return f;
}

inline bool covered_by(const Vec3& q, const Vec3& rj, double roff_j) { return (q - rj).squaredNorm() <= roff_j * roff_j; }

}  // namespace detail

/// Finite-difference solvation forces from the coverage state. For an
/// uncovered sample of atom i, every neighbor j is displaced by +dr along
/// each axis and tested; for a critically covered sample only the covering
/// neighbor is tested. Each flip moves G0_i/(N dr) between atoms i and j.
inline Forces solvation_forces(const Positions& r, const std::vector<AtomParams>& p, const NeighborTable& nb,
                               const SampleSphere& sphere, const ExposureState& st, const SolvationConfig& cfg,
                               Exec exec = {}) {
  const std::size_t n = r.size();
  const std::size_t N = sphere.size();
  std::vector<double> roff(n);
  for (std::size_t i = 0; i < n; ++i) roff[i] = offset_radius(p[i], cfg);
  std::vector<std::int32_t> tally(3 * nb.index.size(), 0);
  const double dr = cfg.delta_r;
  const std::array<Vec3, 3> step{Vec3(dr, 0, 0), Vec3(0, dr, 0), Vec3(0, 0, dr)};
  const long long nn = static_cast<long long>(n);
#pragma omp parallel num_threads(exec.resolved())
  {
    // slot_of[j] = position of j in the current row
    std::vector<std::int32_t> slot_of(n, -1);
#pragma omp for schedule(dynamic, 16)
    for (long long ii = 0; ii < nn; ++ii) {
      const auto i = static_cast<std::size_t>(ii);
      const std::size_t deg = nb.count(i);
      if (deg == 0) continue;
      std::int32_t* t = tally.data() + 3 * static_cast<std::size_t>(nb.offset[i]);
      const int* list = nb.begin(i);
      for (std::size_t s = 0; s < deg; ++s) slot_of[static_cast<std::size_t>(list[s])] = static_cast<std::int32_t>(s);
      for (std::size_t k = 0; k < N; ++k) {
        const Coverage c = st.count[i * N + k];
        if (c == Coverage::TwoPlus) continue;
        const Vec3 q = r[i] + roff[i] * sphere.points[k];
        if (c == Coverage::Zero) {
          for (std::size_t s = 0; s < deg; ++s) {
            const auto j = static_cast<std::size_t>(list[s]);
            for (std::size_t a = 0; a < 3; ++a)
              if (detail::covered_by(q, r[j] + step[a], roff[j])) ++t[3 * s + a];
          }
        } else {
          const std::int32_t jo = st.j_over[i * N + k];
          const auto j = static_cast<std::size_t>(jo);
          const auto s = static_cast<std::size_t>(slot_of[j]);
          for (std::size_t a = 0; a < 3; ++a)
            if (!detail::covered_by(q, r[j] + step[a], roff[j])) --t[3 * s + a];
        }
    }
    for (std::size_t s = 0; s < deg; ++s) slot_of[static_cast<std::size_t>(list[s])] = -1;
    }
  }
  return detail::scatter_tallies(nb, tally, detail::flip_units(p, cfg, N));
}

/// Reference variant: displace every atom along every axis and recount the
/// full coverage of each affected sample (cubic in the neighbor count).
inline Forces solvation_forces_recount(const Positions& r, const std::vector<AtomParams>& p, const NeighborTable& nb,
                                       const SampleSphere& sphere, const SolvationConfig& cfg) {
  const std::size_t n = r.size();
  const std::size_t N = sphere.size();
  std::vector<double> roff(n);
  for (std::size_t i = 0; i < n; ++i) roff[i] = offset_radius(p[i], cfg);
  std::vector<std::int32_t> tally(3 * nb.index.size(), 0);
  auto covered = [&](std::size_t i, const Vec3& q, std::size_t moved, const Vec3& shift) {
    for (const int* it = nb.begin(i); it != nb.end(i); ++it) {
      const auto j = static_cast<std::size_t>(*it);
      const Vec3 rj = j == moved ? Vec3(r[j] + shift) : r[j];
      if (detail::covered_by(q, rj, roff[j])) return true;
    }
    return false;
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t s = 0; s < nb.count(i); ++s) {
      const auto j = static_cast<std::size_t>(nb.begin(i)[s]);
      for (std::size_t a = 0; a < 3; ++a) {
        Vec3 shift = Vec3::Zero();
        shift[static_cast<Eigen::Index>(a)] = cfg.delta_r;
        for (std::size_t k = 0; k < N; ++k) {
          const Vec3 q = r[i] + roff[i] * sphere.points[k];
          const bool before = covered(i, q, n, Vec3::Zero());
          const bool after = covered(i, q, j, shift);
          if (before != after) tally[3 * static_cast<std::size_t>(nb.offset[i]) + 3 * s + a] += after ? 1 : -1;
        }
      }
    }
  return detail::scatter_tallies(nb, tally, detail::flip_units(p, cfg, N));
}

/// Cavity energy only (used by finite-difference checks).
inline double cavity_energy(const Positions& r, const std::vector<AtomParams>& p, const NeighborTable& nb,
                            const SampleSphere& sphere, const SolvationConfig& cfg) {
  return sasa_pass(r, p, nb, sphere, cfg).g_cav;
}

}  // namespace protofold
