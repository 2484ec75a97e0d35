#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace protofold {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;

using Positions = std::vector<Vec3>;
using Forces = std::vector<Vec3>;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text (PDB records, template or parameter files, sequences).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent molecular geometry (missing backbone atoms, coincident atoms, ...).
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration values or combinations.
class ConfigError : public Error {
 public:
  using Error::Error;
};

inline constexpr double kPi = std::numbers::pi;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Wraps an angle in degrees into [0, 360).
inline double wrap360(double deg) {
  double r = std::fmod(deg, 360.0);
  if (r < 0.0) r += 360.0;
  // fmod of a tiny negative value can round up to exactly 360
  if (r >= 360.0) r -= 360.0;
  return r;
}

/// Wraps an angle in degrees into [-180, 180).
inline double wrap180(double deg) {
  double r = wrap360(deg + 180.0) - 180.0;
  if (r >= 180.0) r -= 360.0;
  return r;
}

/// IUPAC dihedral a-b-c-d in degrees, in (-180, 180].
inline double dihedral(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  const Vec3 b0 = a - b;
  Vec3 b1 = c - b;
  const Vec3 b2 = d - c;
  b1.normalize();
  const Vec3 v = b0 - b0.dot(b1) * b1;
  const Vec3 w = b2 - b2.dot(b1) * b1;
  const double x = v.dot(w);
  const double y = b1.cross(v).dot(w);
  return rad2deg(std::atan2(y, x));
}

/// Bond angle a-b-c in degrees.
inline double bond_angle(const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 u = (a - b).normalized();
  const Vec3 v = (c - b).normalized();
  return rad2deg(std::acos(std::clamp(u.dot(v), -1.0, 1.0)));
}

/// Places atom d from internal coordinates: |cd| = bond, angle b-c-d, dihedral a-b-c-d.
inline Vec3 place_atom(const Vec3& a, const Vec3& b, const Vec3& c, double bond,
                       double angle_deg, double dihedral_deg) {
  const Vec3 bc = (c - b).normalized();
  Vec3 n = (b - a).cross(bc);
  const double nn = n.norm();
  if (nn < 1e-12) throw GeometryError("place_atom: collinear reference atoms");
  n /= nn;
  const Vec3 m = n.cross(bc);
  const double ang = deg2rad(angle_deg);
  const double tor = deg2rad(dihedral_deg);
  const double x = -bond * std::cos(ang);
  const double y = bond * std::sin(ang) * std::cos(tor);
  const double z = bond * std::sin(ang) * std::sin(tor);
  return c + x * bc + y * m + z * n;
}

}  // namespace protofold
