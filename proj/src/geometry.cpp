#include "poselift/geometry.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <string>

#include "poselift/textio.hpp"

namespace poselift {

const char kCameraFileMagic[] = "poselift.cameras.v";
const int kCameraFileVersion = 1;

namespace {

constexpr double kRotationTol = 1e-9;
constexpr double kStdFloor = 1e-8;

void check_points3(const Matrix& p, const char* who) {
  if (p.cols() != 3) {
    throw ShapeError(std::string(who) + ": expected n x 3 points, got " +
                     std::to_string(p.rows()) + " x " +
                     std::to_string(p.cols()));
  }
}

}  // namespace

void Camera::validate() const {
  if (!r.allFinite() || !t.allFinite() || !f.allFinite() || !c.allFinite()) {
    throw ArgumentError("Camera '" + id + "': non-finite parameter");
  }
  const double ortho_err = (r.transpose() * r - Eigen::Matrix3d::Identity())
                               .cwiseAbs()
                               .maxCoeff();
  if (ortho_err > kRotationTol) {
    throw ArgumentError("Camera '" + id + "': rotation is not orthonormal (|R^T R - I| = " +
                        format_double(ortho_err) + ")");
  }
  if (std::abs(r.determinant() - 1.0) > kRotationTol) {
    throw ArgumentError("Camera '" + id + "': rotation determinant is " +
                        format_double(r.determinant()) + ", not +1");
  }
  if (f.x() <= 0.0 || f.y() <= 0.0) {
    throw ArgumentError("Camera '" + id + "': focal lengths must be positive");
  }
}

Matrix world_to_camera(const Matrix& p_world, const Camera& cam) {
  check_points3(p_world, "world_to_camera");
  cam.validate();
  // p_cam = R (p - t), written for row vectors: (p - t) R^T.
  return (p_world.rowwise() - cam.t.transpose()) * cam.r.transpose();
}

Matrix camera_to_world(const Matrix& p_cam, const Camera& cam) {
  check_points3(p_cam, "camera_to_world");
  cam.validate();
  return (p_cam * cam.r).rowwise() + cam.t.transpose();
}

Matrix project(const Matrix& p_cam, const Camera& cam) {
  check_points3(p_cam, "project");
  for (Index i = 0; i < p_cam.rows(); ++i) {
    if (!(p_cam(i, 2) > 0.0)) {
      throw NumericError("project: joint " + std::to_string(i) +
                         " is behind camera '" + cam.id +
                         "' (z = " + format_double(p_cam(i, 2)) + ")");
    }
  }
  Matrix uv(p_cam.rows(), 2);
  uv.col(0) =
      cam.f.x() * (p_cam.col(0).array() / p_cam.col(2).array()) + cam.c.x();
  uv.col(1) =
      cam.f.y() * (p_cam.col(1).array() / p_cam.col(2).array()) + cam.c.y();
  return uv;
}

Matrix root_center(const Matrix& pose, Index root_idx) {
  check_points3(pose, "root_center");
  if (root_idx < 0 || root_idx >= pose.rows()) {
    throw ArgumentError("root_center: root index " + std::to_string(root_idx) +
                        " out of range for " + std::to_string(pose.rows()) +
                        " joints");
  }
  const Eigen::RowVector3d root = pose.row(root_idx);
  return pose.rowwise() - root;
}

Vector column_mean(const Matrix& rows) {
  if (rows.rows() == 0) {
    throw ArgumentError("column_mean: no observations");
  }
  return rows.colwise().mean();
}

Vector column_std(const Matrix& rows, const Vector& mean) {
  if (rows.rows() == 0) {
    throw ArgumentError("column_std: no observations");
  }
  if (mean.size() != rows.cols()) {
    throw ShapeError("column_std: mean length does not match column count");
  }
  Matrix centered = rows.rowwise() - mean.transpose();
  Vector var = centered.array().square().colwise().mean();
  Vector std = var.array().sqrt();
  Index floored = 0;
  for (Index j = 0; j < std.size(); ++j) {
    if (std[j] < kStdFloor) {
      std[j] = kStdFloor;
      ++floored;
    }
  }
  if (floored > 0) {
    std::cerr << "warning: " << floored
              << " near-constant coordinate(s); std floored to "
              << format_double(kStdFloor) << "\n";
  }
  return std;
}

NormStats fit_stats(const Matrix& x2d, const Matrix& y3d) {
  if (x2d.rows() != y3d.rows()) {
    throw ShapeError("fit_stats: 2d and 3d observation counts differ");
  }
  NormStats stats;
  stats.mean2d = column_mean(x2d);
  stats.std2d = column_std(x2d, stats.mean2d);
  stats.mean3d = column_mean(y3d);
  stats.std3d = column_std(y3d, stats.mean3d);
  return stats;
}

Matrix normalize(const Matrix& rows, const Vector& mean, const Vector& std) {
  if (rows.cols() != mean.size() || rows.cols() != std.size()) {
    throw ShapeError("normalize: stats length " + std::to_string(mean.size()) +
                     " does not match row width " + std::to_string(rows.cols()));
  }
  return (rows.rowwise() - mean.transpose()).array().rowwise() /
         std.transpose().array();
}

Matrix denormalize(const Matrix& rows, const Vector& mean, const Vector& std) {
  if (rows.cols() != mean.size() || rows.cols() != std.size()) {
    throw ShapeError("denormalize: stats length " +
                     std::to_string(mean.size()) +
                     " does not match row width " + std::to_string(rows.cols()));
  }
  return (rows.array().rowwise() * std.transpose().array()).matrix().rowwise() +
         mean.transpose();
}

Matrix add_noise(const Matrix& x2d, double sigma, Rng& rng) {
  if (sigma < 0.0) {
    throw ArgumentError("add_noise: sigma must be nonnegative, got " +
                        format_double(sigma));
  }
  if (sigma == 0.0) {
    return x2d;
  }
  Matrix out = x2d;
  for (Index i = 0; i < out.rows(); ++i) {
    for (Index j = 0; j < out.cols(); ++j) {
      out(i, j) += rng.gauss(0.0, sigma);
    }
  }
  return out;
}

void save_cameras(const std::string& path, const std::vector<Camera>& cams,
                  const std::vector<std::string>& comments) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot open '" + path + "' for writing");
  }
  out << kCameraFileMagic << kCameraFileVersion << "\n";
  for (const auto& line : comments) {
    out << "# " << line << "\n";
  }
  for (const auto& cam : cams) {
    cam.validate();
    out << "camera " << cam.id;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        out << " " << format_double(cam.r(i, j));
      }
    }
    for (int i = 0; i < 3; ++i) out << " " << format_double(cam.t[i]);
    out << " " << format_double(cam.f.x()) << " " << format_double(cam.f.y());
    out << " " << format_double(cam.c.x()) << " " << format_double(cam.c.y());
    out << "\n";
  }
  if (!out.flush()) {
    throw IoError("failed writing '" + path + "'");
  }
}

std::vector<Camera> load_cameras(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open camera file '" + path + "'");
  }
  std::string line;
  std::int64_t line_no = 0;
  auto where = [&] { return path + ":" + std::to_string(line_no); };

  if (!std::getline(in, line)) {
    throw ParseError(path + ": empty camera file");
  }
  ++line_no;
  check_schema_header(line, kCameraFileMagic, kCameraFileVersion, where());

  std::vector<Camera> cams;
  while (std::getline(in, line)) {
    ++line_no;
    auto tokens = split_tokens(line);
    if (tokens.empty() || tokens[0].starts_with('#')) continue;
    if (tokens[0] != "camera") {
      throw ParseError(where() + ": unknown record '" + std::string(tokens[0]) +
                       "'");
    }
    // camera <id> + 9 rotation + 3 translation + 2 focal + 2 principal.
    if (tokens.size() != 18) {
      throw ParseError(where() + ": camera record needs 18 fields, got " +
                       std::to_string(tokens.size()));
    }
    Camera cam;
    cam.id = std::string(tokens[1]);
    std::size_t k = 2;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        cam.r(i, j) = parse_double(tokens[k++], where());
      }
    }
    for (int i = 0; i < 3; ++i) cam.t[i] = parse_double(tokens[k++], where());
    cam.f.x() = parse_double(tokens[k++], where());
    cam.f.y() = parse_double(tokens[k++], where());
    cam.c.x() = parse_double(tokens[k++], where());
    cam.c.y() = parse_double(tokens[k++], where());
    try {
      cam.validate();
    } catch (const ArgumentError& e) {
      throw SchemaError(where() + ": " + e.what());
    }
    cams.push_back(std::move(cam));
  }
  return cams;
}

}  // namespace poselift
