#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "poselift/numerics.hpp"

namespace poselift {

// Pinhole camera: extrinsics map world points (mm) into the camera frame,
// intrinsics project camera-frame points to pixels. `t` is the camera
// centre expressed in world coordinates, so p_cam = R * (p_world - t).
struct Camera {
  std::string id;
  Eigen::Matrix3d r = Eigen::Matrix3d::Identity();  // world -> camera
  Eigen::Vector3d t = Eigen::Vector3d::Zero();      // camera centre, mm
  Eigen::Vector2d f = Eigen::Vector2d::Ones();      // focal lengths, px
  Eigen::Vector2d c = Eigen::Vector2d::Zero();      // principal point, px

  // Throws ArgumentError unless r is a proper rotation (r^T r = I and
  // det(r) = +1, both within 1e-9) and the intrinsics are finite with
  // positive focal lengths.
  void validate() const;
};

Matrix world_to_camera(const Matrix& p_world, const Camera& cam);
Matrix camera_to_world(const Matrix& p_cam, const Camera& cam);

// Perspective projection of camera-frame points: u = fx*x/z + cx,
// v = fy*y/z + cy. Any z <= 0 means the point is behind (or on) the
// image plane and raises NumericError.
Matrix project(const Matrix& p_cam, const Camera& cam);

// Translates the pose so the root joint lands exactly at the origin.
Matrix root_center(const Matrix& pose, Index root_idx);

// Per-coordinate z-score statistics for the flattened 2d inputs and the
// flattened root-excluded 3d targets. Fitted on the training split only.
struct NormStats {
  Vector mean2d, std2d;
  Vector mean3d, std3d;
};

// Column mean/std over a rows-are-observations matrix. Standard deviations
// below 1e-8 (constant coordinates) are floored to 1e-8 and reported via a
// single warning line on stderr.
Vector column_mean(const Matrix& rows);
Vector column_std(const Matrix& rows, const Vector& mean);

NormStats fit_stats(const Matrix& x2d, const Matrix& y3d);

// The one normalization code path shared by training and evaluation.
Matrix normalize(const Matrix& rows, const Vector& mean, const Vector& std);
Matrix denormalize(const Matrix& rows, const Vector& mean, const Vector& std);

// Adds i.i.d. N(0, sigma^2) to every coordinate, sampling in row-major
// element order. sigma = 0 returns the input unchanged.
Matrix add_noise(const Matrix& x2d, double sigma, Rng& rng);

// Camera file: a version header, '#' comment lines, then one
// "camera <id> r00..r22 tx ty tz fx fy cx cy" record per camera.
extern const char kCameraFileMagic[];  // "poselift.cameras.v"
extern const int kCameraFileVersion;   // 1

void save_cameras(const std::string& path, const std::vector<Camera>& cams,
                  const std::vector<std::string>& comments = {});
std::vector<Camera> load_cameras(const std::string& path);

}  // namespace poselift
