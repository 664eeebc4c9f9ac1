#include "avdoa/geom.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "avdoa/error.hpp"
#include "avdoa/kv_file.hpp"

namespace avdoa {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

std::string join(const double* values, std::size_t n) {
  std::ostringstream out;
  out.precision(17);
  for (std::size_t i = 0; i < n; ++i) out << (i ? " " : "") << values[i];
  return out.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
}

}  // namespace

double norm(Vec3 a) { return std::sqrt(dot(a, a)); }

Vec3 multiply(const Mat3& m, Vec3 v) {
  return {m[0] * v.x + m[1] * v.y + m[2] * v.z, m[3] * v.x + m[4] * v.y + m[5] * v.z,
          m[6] * v.x + m[7] * v.y + m[8] * v.z};
}

Mat3 rotation_x(double deg) {
  const double c = std::cos(deg * kDegToRad), s = std::sin(deg * kDegToRad);
  return {1, 0, 0, 0, c, -s, 0, s, c};
}

Mat3 rotation_y(double deg) {
  const double c = std::cos(deg * kDegToRad), s = std::sin(deg * kDegToRad);
  return {c, 0, s, 0, 1, 0, -s, 0, c};
}

Mat3 rotation_z(double deg) {
  const double c = std::cos(deg * kDegToRad), s = std::sin(deg * kDegToRad);
  return {c, -s, 0, s, c, 0, 0, 0, 1};
}

Mat3 multiply(const Mat3& a, const Mat3& b) {
  Mat3 out{};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c)
      for (int k = 0; k < 3; ++k) out[r * 3 + c] += a[r * 3 + k] * b[k * 3 + c];
  return out;
}

void CameraCalibration::validate() const {
  for (double v : rotation) require(std::isfinite(v), ErrorCode::InvalidArgument, "rotation not finite");
  const Mat3& r = rotation;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double d = 0.0;
      for (int k = 0; k < 3; ++k) d += r[i * 3 + k] * r[j * 3 + k];
      require(std::abs(d - (i == j ? 1.0 : 0.0)) <= 1e-9, ErrorCode::InvalidArgument,
              "rotation is not orthonormal");
    }
  }
  const double det = r[0] * (r[4] * r[8] - r[5] * r[7]) - r[1] * (r[3] * r[8] - r[5] * r[6]) +
                     r[2] * (r[3] * r[7] - r[4] * r[6]);
  require(std::abs(det - 1.0) <= 1e-9, ErrorCode::InvalidArgument, "rotation determinant is not +1");
  const Intrinsics& in = intrinsics;
  require(in.fu > 0 && in.fv > 0, ErrorCode::InvalidArgument, "focal lengths must be positive");
  require(in.width > 0 && in.height > 0, ErrorCode::InvalidArgument, "image dimensions must be positive");
  require(std::isfinite(in.cu) && std::isfinite(in.cv), ErrorCode::InvalidArgument, "principal point not finite");
}

CameraCalibration CameraCalibration::load(const std::filesystem::path& path) {
  const auto kv = KeyValueFile::load(path);
  CameraCalibration cal;
  const auto rot = kv.get_doubles("rotation");
  const auto trans = kv.get_doubles("translation");
  require(rot.size() == 9, ErrorCode::FormatError, "rotation needs 9 numbers");
  require(trans.size() == 3, ErrorCode::FormatError, "translation needs 3 numbers");
  std::copy(rot.begin(), rot.end(), cal.rotation.begin());
  cal.translation = {trans[0], trans[1], trans[2]};
  cal.intrinsics = {kv.get_double("f_u"),   kv.get_double("f_v"),   kv.get_double("c_u"),
                    kv.get_double("c_v"),   kv.get_double("width"), kv.get_double("height")};
  cal.validate();
  return cal;
}

void CameraCalibration::save(const std::filesystem::path& path) const {
  const double t[3] = {translation.x, translation.y, translation.z};
  const Intrinsics& in = intrinsics;
  const double scalars[6] = {in.fu, in.fv, in.cu, in.cv, in.width, in.height};
  const char* names[6] = {"f_u", "f_v", "c_u", "c_v", "width", "height"};
  std::ostringstream out;
  out << "rotation = " << join(rotation.data(), 9) << "\n";
  out << "translation = " << join(t, 3) << "\n";
  for (int i = 0; i < 6; ++i) out << names[i] << " = " << join(&scalars[i], 1) << "\n";
  write_text(path, out.str());
}

CameraCalibration CameraCalibration::looking_along(Vec3 position, double yaw_deg, Intrinsics intr) {
  // Camera axes in a world frame yawed by 0: x_c = -y_w, y_c = -z_w, z_c = +x_w.
  const Mat3 base = {0, -1, 0, 0, 0, -1, 1, 0, 0};
  CameraCalibration cal;
  cal.rotation = multiply(base, rotation_z(-yaw_deg));
  const Vec3 rc = multiply(cal.rotation, position);
  cal.translation = {-rc.x, -rc.y, -rc.z};
  cal.intrinsics = intr;
  return cal;
}

void NoiseCov3::validate() const {
  require(var_x >= 0 && var_y >= 0 && var_z >= 0, ErrorCode::InvalidArgument, "noise variances must be >= 0");
}

void FaceSize::validate() const {
  require(width > 0 && height > 0, ErrorCode::InvalidArgument, "face size must be positive");
}

void MicArray::validate() const {
  require(mics.size() >= 2, ErrorCode::InvalidArgument, "array needs at least 2 microphones");
  require(speed_of_sound > 0, ErrorCode::InvalidArgument, "speed of sound must be positive");
  for (std::size_t i = 0; i < mics.size(); ++i)
    for (std::size_t j = i + 1; j < mics.size(); ++j)
      require(norm(mics[i] - mics[j]) > 1e-9, ErrorCode::InvalidArgument, "coincident microphones");
}

double MicArray::aperture() const {
  double best = 0.0;
  for (std::size_t i = 0; i < mics.size(); ++i)
    for (std::size_t j = i + 1; j < mics.size(); ++j) best = std::max(best, norm(mics[i] - mics[j]));
  return best;
}

MicArray MicArray::square(double side_m) {
  const double h = side_m / 2.0;
  MicArray a;
  a.mics = {{h, h, 0.0}, {-h, h, 0.0}, {-h, -h, 0.0}, {h, -h, 0.0}};
  return a;
}

MicArray MicArray::load(const std::filesystem::path& path) {
  const auto kv = KeyValueFile::load(path);
  MicArray a;
  const auto flat = kv.get_doubles("mics");
  require(!flat.empty() && flat.size() % 3 == 0, ErrorCode::FormatError, "mics needs x y z triples");
  for (std::size_t i = 0; i < flat.size(); i += 3) a.mics.push_back({flat[i], flat[i + 1], flat[i + 2]});
  a.speed_of_sound = kv.get_double("speed_of_sound", 343.0);
  a.yaw_deg = kv.get_double("yaw_deg", 0.0);
  if (kv.has("origin")) {
    const auto o = kv.get_doubles("origin");
    require(o.size() == 3, ErrorCode::FormatError, "origin needs 3 numbers");
    a.origin = {o[0], o[1], o[2]};
  }
  a.validate();
  return a;
}

void MicArray::save(const std::filesystem::path& path) const {
  std::vector<double> flat;
  for (const Vec3& m : mics) flat.insert(flat.end(), {m.x, m.y, m.z});
  const double o[3] = {origin.x, origin.y, origin.z};
  std::ostringstream out;
  out << "mics = " << join(flat.data(), flat.size()) << "\n";
  out << "origin = " << join(o, 3) << "\n";
  out << "yaw_deg = " << join(&yaw_deg, 1) << "\n";
  out << "speed_of_sound = " << join(&speed_of_sound, 1) << "\n";
  write_text(path, out.str());
}

double wrap_degrees(double deg) {
  double w = deg - 360.0 * std::floor((deg + 180.0) / 360.0);
  if (w >= 180.0) w -= 360.0;
  if (w < -180.0) w += 360.0;
  return w;
}

WorldPoint perturb_location(WorldPoint p, const NoiseCov3& cov, Rng& rng) {
  cov.validate();
  // Always draw three variates so the stream position does not depend on cov.
  const double nx = rng.normal(), ny = rng.normal(), nz = rng.normal();
  return {p.x + std::sqrt(cov.var_x) * nx, p.y + std::sqrt(cov.var_y) * ny, p.z + std::sqrt(cov.var_z) * nz};
}

WorldPoint perturb_location(WorldPoint p, const NoiseCov3& cov, std::uint64_t seed) {
  Rng rng(seed);
  return perturb_location(p, cov, rng);
}

CameraPoint world_to_camera(WorldPoint p, const CameraCalibration& cal) {
  return multiply(cal.rotation, p) + cal.translation;
}

Pixel project_point(CameraPoint pc, const CameraCalibration& cal) {
  if (!(pc.z > 0.0)) throw Error(ErrorCode::BehindCamera, "point has z <= 0 in camera frame");
  const Intrinsics& in = cal.intrinsics;
  return {in.fu * pc.x / pc.z + in.cu, in.fv * pc.y / pc.z + in.cv};
}

bool inside_image(Pixel px, const Intrinsics& intr) {
  return px.u >= 0.0 && px.u < intr.width && px.v >= 0.0 && px.v < intr.height;
}

std::optional<BoundingBox> synthesize_bbox(WorldPoint p, const CameraCalibration& cal, const FaceSize& face,
                                           const NoiseCov3& cov, Rng& rng) {
  face.validate();
  const CameraPoint pc = world_to_camera(perturb_location(p, cov, rng), cal);
  if (!(pc.z > 0.0)) return std::nullopt;
  if (!inside_image(project_point(pc, cal), cal.intrinsics)) return std::nullopt;
  // The face plane is perpendicular to the optical axis, so the corner
  // offsets are applied in camera coordinates.
  const Pixel tl = project_point(pc + Vec3{-face.width / 2, -face.height / 2, 0.0}, cal);
  const Pixel br = project_point(pc + Vec3{face.width / 2, face.height / 2, 0.0}, cal);
  return BoundingBox{tl.u, tl.v, br.u - tl.u, br.v - tl.v};
}

std::optional<BoundingBox> synthesize_bbox(WorldPoint p, const CameraCalibration& cal, const FaceSize& face,
                                           const NoiseCov3& cov, std::uint64_t seed) {
  Rng rng(seed);
  return synthesize_bbox(p, cal, face, cov, rng);
}

bool in_field_of_view(WorldPoint p, const CameraCalibration& cal) {
  const CameraPoint pc = world_to_camera(p, cal);
  return pc.z > 0.0 && inside_image(project_point(pc, cal), cal.intrinsics);
}

double doa_from_position(WorldPoint p, const MicArray& array) {
  const Vec3 d = p - array.origin;
  if (std::hypot(d.x, d.y) <= 1e-6) {
    throw Error(ErrorCode::DegenerateGeometry, "target coincides with array origin in the horizontal plane");
  }
  return wrap_degrees(std::atan2(d.y, d.x) / kDegToRad - array.yaw_deg);
}

}  // namespace avdoa
