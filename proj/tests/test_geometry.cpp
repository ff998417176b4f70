#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "poselift/geometry.hpp"
#include "poselift/numerics.hpp"

using namespace poselift;

namespace {

// Proper rotation from three angles, for building arbitrary test cameras.
Eigen::Matrix3d rotation_zyx(double az, double ay, double ax) {
  return (Eigen::AngleAxisd(az, Eigen::Vector3d::UnitZ()) *
          Eigen::AngleAxisd(ay, Eigen::Vector3d::UnitY()) *
          Eigen::AngleAxisd(ax, Eigen::Vector3d::UnitX()))
      .toRotationMatrix();
}

Camera test_camera() {
  Camera cam;
  cam.id = "cam0";
  cam.r = rotation_zyx(0.3, -0.8, 1.1);
  cam.t = Eigen::Vector3d(2500.0, -1200.0, 900.0);
  cam.f = Eigen::Vector2d(1100.0, 1150.0);
  cam.c = Eigen::Vector2d(512.0, 488.0);
  return cam;
}

const char* kTmpCameras = "test_geometry_cameras.tmp";

struct FileGuard {
  std::string path;
  ~FileGuard() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("projection matches the worked example") {
  Camera cam;
  cam.f = Eigen::Vector2d(1000.0, 1000.0);
  cam.c = Eigen::Vector2d(500.0, 500.0);
  Matrix p(1, 3);
  p << 100.0, 0.0, 1000.0;
  const Matrix uv = project(p, cam);
  CHECK(uv(0, 0) == 600.0);
  CHECK(uv(0, 1) == 500.0);
}

TEST_CASE("projection refuses points at or behind the image plane") {
  Camera cam;
  Matrix p(1, 3);
  p << 0.0, 0.0, 0.0;
  CHECK_THROWS_AS(project(p, cam), NumericError);
  p << 10.0, 10.0, -5.0;
  CHECK_THROWS_AS(project(p, cam), NumericError);
}

TEST_CASE("world/camera transforms invert each other") {
  const Camera cam = test_camera();
  Rng rng(3);
  const Matrix p = rng.gauss_matrix(17, 3, 0.0, 500.0);
  const Matrix back = camera_to_world(world_to_camera(p, cam), cam);
  CHECK((back - p).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("camera centre maps to the camera-frame origin") {
  const Camera cam = test_camera();
  Matrix centre(1, 3);
  centre << cam.t.x(), cam.t.y(), cam.t.z();
  const Matrix mapped = world_to_camera(centre, cam);
  CHECK(mapped.cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("world_to_camera preserves pairwise distances") {
  const Camera cam = test_camera();
  Rng rng(4);
  const Matrix p = rng.gauss_matrix(12, 3, 0.0, 800.0);
  const Matrix q = world_to_camera(p, cam);
  double drift = 0.0;
  for (Index i = 0; i < p.rows(); ++i) {
    for (Index j = i + 1; j < p.rows(); ++j) {
      const double dp = (p.row(i) - p.row(j)).norm();
      const double dq = (q.row(i) - q.row(j)).norm();
      drift = std::max(drift, std::abs(dp - dq));
    }
  }
  CHECK(drift <= 1e-9);
}

TEST_CASE("camera validation rejects improper extrinsics and intrinsics") {
  Camera cam = test_camera();
  CHECK_NOTHROW(cam.validate());

  Camera skewed = cam;
  skewed.r(0, 1) += 1e-6;
  CHECK_THROWS_AS(skewed.validate(), ArgumentError);

  // Orthonormal but a reflection: det = -1.
  Camera mirrored = cam;
  mirrored.r.row(0) *= -1.0;
  CHECK_THROWS_AS(mirrored.validate(), ArgumentError);

  Camera flat = cam;
  flat.f.x() = 0.0;
  CHECK_THROWS_AS(flat.validate(), ArgumentError);
}

TEST_CASE("root_center zeroes the chosen row and bounds the index") {
  Rng rng(5);
  Matrix p = rng.gauss_matrix(6, 3, 10.0, 30.0);
  const Matrix centered = root_center(p, 2);
  CHECK(centered.row(2).cwiseAbs().maxCoeff() == 0.0);
  // Every row moved by the same offset: differences survive.
  CHECK(((centered.row(0) - centered.row(4)) - (p.row(0) - p.row(4)))
            .cwiseAbs()
            .maxCoeff() < 1e-12);
  CHECK_THROWS_AS(root_center(p, -1), ArgumentError);
  CHECK_THROWS_AS(root_center(p, 6), ArgumentError);
}

TEST_CASE("fit_stats produces column-wise moments of both blocks") {
  Matrix x(4, 2);
  x << 1, 10, 2, 20, 3, 30, 4, 40;
  Matrix y(4, 3);
  y << 0, 5, -1, 0, 5, 1, 0, 5, 3, 0, 5, 5;
  const NormStats st = fit_stats(x, y);
  CHECK(st.mean2d[0] == doctest::Approx(2.5));
  CHECK(st.mean2d[1] == doctest::Approx(25.0));
  // Population standard deviation: sqrt(mean((x - mean)^2)).
  CHECK(st.std2d[0] == doctest::Approx(std::sqrt(1.25)));
  CHECK(st.mean3d[1] == doctest::Approx(5.0));
  // Constant columns get the floor instead of zero.
  CHECK(st.std3d[0] == 1e-8);
  CHECK(st.std3d[1] == 1e-8);
  CHECK(st.mean3d[2] == doctest::Approx(2.0));
}

TEST_CASE("normalize and denormalize are exact inverses") {
  Rng rng(6);
  const Matrix x = rng.gauss_matrix(50, 8, -3.0, 12.0);
  const Matrix y = rng.gauss_matrix(50, 6, 100.0, 40.0);
  const NormStats st = fit_stats(x, y);
  const Matrix back = denormalize(normalize(x, st.mean2d, st.std2d),
                                  st.mean2d, st.std2d);
  CHECK((back - x).cwiseAbs().maxCoeff() < 1e-9);

  // Normalized training data has zero mean and unit (population) variance.
  const Matrix nx = normalize(x, st.mean2d, st.std2d);
  for (Index j = 0; j < nx.cols(); ++j) {
    const double mean = nx.col(j).mean();
    const double var = (nx.col(j).array() - mean).square().mean();
    CHECK(std::abs(mean) < 1e-12);
    CHECK(var == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("normalize rejects mismatched widths") {
  Matrix x = Matrix::Zero(3, 4);
  Vector mean = Vector::Zero(3), std = Vector::Ones(3);
  CHECK_THROWS_AS(normalize(x, mean, std), ShapeError);
}

TEST_CASE("add_noise: zero sigma is the identity, negative refuses") {
  Rng rng(7);
  const Matrix x = rng.gauss_matrix(20, 4, 0.0, 5.0);
  Rng noise_rng(8);
  const Matrix same = add_noise(x, 0.0, noise_rng);
  CHECK((same - x).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(add_noise(x, -1.0, noise_rng), ArgumentError);
}

TEST_CASE("add_noise perturbs with the requested spread") {
  Matrix x = Matrix::Zero(500, 10);
  Rng rng(9);
  const Matrix noisy = add_noise(x, 4.0, rng);
  const double mean = noisy.mean();
  const double var = (noisy.array() - mean).square().mean();
  CHECK(std::abs(mean) < 0.2);
  CHECK(std::sqrt(var) == doctest::Approx(4.0).epsilon(0.02));
}

TEST_CASE("camera files round-trip bit-exactly") {
  FileGuard guard{kTmpCameras};
  std::vector<Camera> cams;
  Rng rng(10);
  for (int i = 0; i < 3; ++i) {
    Camera cam;
    cam.id = "ring" + std::to_string(i);
    cam.r = rotation_zyx(rng.uniform(), rng.uniform(), rng.uniform());
    cam.t = Eigen::Vector3d(rng.gauss(0, 1000), rng.gauss(0, 1000),
                            rng.gauss(1500, 200));
    cam.f = Eigen::Vector2d(1000 + rng.uniform(), 1000 + rng.uniform());
    cam.c = Eigen::Vector2d(500 + rng.uniform(), 500 + rng.uniform());
    cams.push_back(cam);
  }
  save_cameras(kTmpCameras, cams, {"roundtrip check"});
  const auto loaded = load_cameras(kTmpCameras);
  REQUIRE(loaded.size() == cams.size());
  for (std::size_t i = 0; i < cams.size(); ++i) {
    CHECK(loaded[i].id == cams[i].id);
    CHECK((loaded[i].r - cams[i].r).cwiseAbs().maxCoeff() == 0.0);
    CHECK((loaded[i].t - cams[i].t).cwiseAbs().maxCoeff() == 0.0);
    CHECK((loaded[i].f - cams[i].f).cwiseAbs().maxCoeff() == 0.0);
    CHECK((loaded[i].c - cams[i].c).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("camera file loading rejects bad headers and bad records") {
  FileGuard guard{kTmpCameras};

  {
    std::ofstream out(kTmpCameras);
    out << "poselift.dataset.v1\n";
  }
  CHECK_THROWS_AS(load_cameras(kTmpCameras), SchemaError);

  {
    std::ofstream out(kTmpCameras);
    out << "poselift.cameras.v1\n";
    out << "camera c0 1 0 0 0 1 0 0 0 1 0 0 0 1000 1000 500\n";  // short
  }
  CHECK_THROWS_AS(load_cameras(kTmpCameras), ParseError);

  {
    std::ofstream out(kTmpCameras);
    out << "poselift.cameras.v1\n";
    // Right token count but not a rotation matrix.
    out << "camera c0 1 0 0 0 2 0 0 0 1 0 0 0 1000 1000 500 500\n";
  }
  CHECK_THROWS_AS(load_cameras(kTmpCameras), SchemaError);

  CHECK_THROWS_AS(load_cameras("does_not_exist.cameras"), IoError);
}
