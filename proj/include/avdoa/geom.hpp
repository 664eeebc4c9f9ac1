#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "avdoa/rng.hpp"

namespace avdoa {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
  friend bool operator==(Vec3 a, Vec3 b) = default;
};

inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
double norm(Vec3 a);

// Row-major 3x3.
using Mat3 = std::array<double, 9>;

inline constexpr Mat3 kIdentity3 = {1, 0, 0, 0, 1, 0, 0, 0, 1};

Vec3 multiply(const Mat3& m, Vec3 v);

// Rotation about an axis through the origin, angle in degrees (right-handed).
Mat3 rotation_x(double deg);
Mat3 rotation_y(double deg);
Mat3 rotation_z(double deg);
Mat3 multiply(const Mat3& a, const Mat3& b);

using WorldPoint = Vec3;
using CameraPoint = Vec3;

struct Intrinsics {
  double fu = 500.0;
  double fv = 500.0;
  double cu = 320.0;
  double cv = 240.0;
  double width = 640.0;
  double height = 480.0;
};

// Extrinsics map world -> camera: p_c = R * p + t.
struct CameraCalibration {
  Mat3 rotation = kIdentity3;
  Vec3 translation{};
  Intrinsics intrinsics{};

  void validate() const;

  static CameraCalibration load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  // Camera at `position` looking along world azimuth `yaw_deg` in the
  // horizontal plane, image u to the right and v downward.
  static CameraCalibration looking_along(Vec3 position, double yaw_deg, Intrinsics intr);
};

// Per-axis variances in m^2.
struct NoiseCov3 {
  double var_x = 0.2;
  double var_y = 0.2;
  double var_z = 0.2;

  void validate() const;
};

struct FaceSize {
  double width = 0.14;
  double height = 0.18;

  void validate() const;
};

struct Pixel {
  double u = 0.0;
  double v = 0.0;
};

struct BoundingBox {
  double u = 0.0;
  double v = 0.0;
  double w = 0.0;
  double h = 0.0;

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

struct MicArray {
  std::vector<Vec3> mics;  // array frame, meters
  Vec3 origin{};           // world frame
  double yaw_deg = 0.0;    // rotation of the array forward axis about world z
  double speed_of_sound = 343.0;

  void validate() const;

  std::size_t size() const { return mics.size(); }

  // Largest inter-microphone distance.
  double aperture() const;

  static MicArray square(double side_m);
  static MicArray load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

// Wraps an angle in degrees into [-180, 180).
double wrap_degrees(double deg);

WorldPoint perturb_location(WorldPoint p, const NoiseCov3& cov, Rng& rng);
WorldPoint perturb_location(WorldPoint p, const NoiseCov3& cov, std::uint64_t seed);

CameraPoint world_to_camera(WorldPoint p, const CameraCalibration& cal);

// Throws BehindCamera for z <= 0.
Pixel project_point(CameraPoint pc, const CameraCalibration& cal);

bool inside_image(Pixel px, const Intrinsics& intr);

// Face box for a target at `p`, or nullopt when the (perturbed) target is
// behind the camera or its projected center falls outside the image.
std::optional<BoundingBox> synthesize_bbox(WorldPoint p, const CameraCalibration& cal, const FaceSize& face,
                                           const NoiseCov3& cov, Rng& rng);
std::optional<BoundingBox> synthesize_bbox(WorldPoint p, const CameraCalibration& cal, const FaceSize& face,
                                           const NoiseCov3& cov, std::uint64_t seed);

// Zero-noise visibility test used for scenario sampling.
bool in_field_of_view(WorldPoint p, const CameraCalibration& cal);

// Azimuth of `p` seen from the array, 0 = array forward axis, counter-clockwise
// positive viewed from above, in [-180, 180).
double doa_from_position(WorldPoint p, const MicArray& array);

}  // namespace avdoa
