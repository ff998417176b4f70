#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "poselift/data.hpp"
#include "poselift/geometry.hpp"

using namespace poselift;

namespace {

const char* kTmpDataset = "test_data_dataset.tmp";
const char* kTmpCameras = "test_data_cameras.tmp";

// Exact (bitwise-value) equality for Eigen blocks, empty-safe.
template <typename A, typename B>
bool same(const A& a, const B& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  return a.size() == 0 || (a - b).cwiseAbs().maxCoeff() == 0.0;
}

struct FileGuard {
  std::string path;
  ~FileGuard() { std::remove(path.c_str()); }
};

Dataset small_synth(std::uint64_t seed, std::int64_t frames = 60,
                    int cameras = 2) {
  Rng rng(seed);
  return synth_generate(Skeleton::human17(), frames, cameras, rng);
}

}  // namespace

TEST_CASE("human17 has the documented shape") {
  const Skeleton sk = Skeleton::human17();
  CHECK(sk.n_joints() == 17);
  CHECK(sk.root_idx == 0);
  CHECK(sk.joints[0].parent == -1);
  CHECK(sk.joints[0].name == "hip");
  CHECK(sk.n_input_joints() == 16);
  CHECK(sk.n_output_joints() == 16);
  CHECK_NOTHROW(sk.validate());

  // The 2d input set drops exactly the spine.
  std::set<Index> in(sk.input_joint_map.begin(), sk.input_joint_map.end());
  CHECK(in.size() == 16);
  Index spine = -1;
  for (Index j = 0; j < sk.n_joints(); ++j) {
    if (sk.joints[static_cast<std::size_t>(j)].name == "spine") spine = j;
  }
  REQUIRE(spine >= 0);
  CHECK(in.count(spine) == 0);
  CHECK(in.count(sk.root_idx) == 1);

  // Bone lengths: root entry zero, all others positive.
  CHECK(sk.bone_lengths[static_cast<std::size_t>(sk.root_idx)] == 0.0);
  for (Index j = 0; j < sk.n_joints(); ++j) {
    if (j == sk.root_idx) continue;
    CHECK(sk.bone_lengths[static_cast<std::size_t>(j)] > 0.0);
  }

  // output_joint_map: every joint but the root, in order.
  const auto out = sk.output_joint_map();
  REQUIRE(static_cast<Index>(out.size()) == 16);
  for (Index idx : out) CHECK(idx != sk.root_idx);
}

TEST_CASE("skeleton validation catches structural defects") {
  Skeleton sk = Skeleton::human17();

  Skeleton cyc = sk;
  cyc.joints[3].parent = 3;  // self-loop
  CHECK_THROWS_AS(cyc.validate(), ArgumentError);

  Skeleton orphan = sk;
  orphan.joints[5].parent = 99;
  CHECK_THROWS_AS(orphan.validate(), ArgumentError);

  Skeleton flat = sk;
  flat.bone_lengths[4] = 0.0;
  CHECK_THROWS_AS(flat.validate(), ArgumentError);

  Skeleton dup = sk;
  dup.input_joint_map[1] = dup.input_joint_map[0];
  CHECK_THROWS_AS(dup.validate(), ArgumentError);
}

TEST_CASE("synth_generate emits the exact frame count, per camera") {
  const Dataset ds = small_synth(1, 61, 3);
  CHECK(ds.samples.size() == 61);
  CHECK(ds.cameras.size() == 3);
  CHECK_NOTHROW(ds.validate());

  // Pose-major emission: consecutive samples cycle through the cameras
  // with the same 3d pose until frames run out.
  CHECK(same(ds.samples[0].joints3d_world, ds.samples[1].joints3d_world));
  CHECK(same(ds.samples[0].joints3d_world, ds.samples[2].joints3d_world));
  CHECK(ds.samples[0].camera_id != ds.samples[1].camera_id);
  CHECK_FALSE(same(ds.samples[3].joints3d_world, ds.samples[0].joints3d_world));
}

TEST_CASE("synth poses honor the subject's bone lengths") {
  const Dataset ds = small_synth(2, 40, 1);
  const Skeleton& sk = ds.skeleton;
  // Subject identity scales each bone by its own fixed factor in
  // [0.9, 1.1]: every length stays inside that band around the base
  // skeleton, and within one subject it is constant across all samples.
  std::map<std::string, std::vector<double>> seen;
  for (const auto& s : ds.samples) {
    std::vector<double> lens;
    for (Index j = 0; j < sk.n_joints(); ++j) {
      const int parent = sk.joints[static_cast<std::size_t>(j)].parent;
      if (parent < 0) continue;
      const double len =
          (s.joints3d_world.row(j) - s.joints3d_world.row(parent)).norm();
      const double base = sk.bone_lengths[static_cast<std::size_t>(j)];
      CHECK(len >= 0.9 * base * (1.0 - 1e-9));
      CHECK(len <= 1.1 * base * (1.0 + 1e-9));
      lens.push_back(len);
    }
    const auto [it, fresh] = seen.try_emplace(s.subject, lens);
    if (!fresh) {
      REQUIRE(it->second.size() == lens.size());
      for (std::size_t k = 0; k < lens.size(); ++k) {
        CHECK(lens[k] == doctest::Approx(it->second[k]).epsilon(1e-9));
      }
    }
  }
  CHECK(seen.size() > 1);  // more than one subject actually checked
}

TEST_CASE("synth 2d observations are exact projections") {
  const Dataset ds = small_synth(3, 30, 2);
  const Skeleton& sk = ds.skeleton;
  for (const auto& s : ds.samples) {
    REQUIRE(s.has_2d());
    const Camera& cam = ds.camera(s.camera_id);
    const Matrix cam3d = world_to_camera(s.joints3d_world, cam);
    Matrix in3d(sk.n_input_joints(), 3);
    for (Index k = 0; k < sk.n_input_joints(); ++k) {
      in3d.row(k) = cam3d.row(sk.input_joint_map[static_cast<std::size_t>(k)]);
    }
    const Matrix uv = project(in3d, cam);
    CHECK((uv - s.joints2d).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("synth is deterministic per seed and varies across seeds") {
  const Dataset a = small_synth(5, 20, 2);
  const Dataset b = small_synth(5, 20, 2);
  const Dataset c = small_synth(6, 20, 2);
  CHECK(same(a.samples[7].joints3d_world, b.samples[7].joints3d_world));
  CHECK(same(a.samples[7].joints2d, b.samples[7].joints2d));
  CHECK(same(a.cameras[0].t, b.cameras[0].t));
  CHECK_FALSE(same(a.samples[7].joints3d_world, c.samples[7].joints3d_world));
}

TEST_CASE("synth covers all seven subjects and the three action styles") {
  const Dataset ds = small_synth(4, 420, 2);
  std::set<std::string> subjects, actions;
  for (const auto& s : ds.samples) {
    subjects.insert(s.subject);
    actions.insert(s.action);
  }
  CHECK(subjects.size() == 7);
  CHECK(actions == std::set<std::string>{"calm", "gesture", "walk"});
}

TEST_CASE("dataset files round-trip every field bit-exactly") {
  FileGuard g1{kTmpDataset}, g2{kTmpCameras};
  const Dataset ds = small_synth(7, 25, 2);
  save_dataset(ds, kTmpDataset, {"round trip"});
  save_cameras(kTmpCameras, ds.cameras, {});
  const Dataset back = load_dataset(kTmpDataset, kTmpCameras);

  CHECK(back.skeleton == ds.skeleton);
  REQUIRE(back.samples.size() == ds.samples.size());
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    const auto& a = ds.samples[i];
    const auto& b = back.samples[i];
    CHECK(a.subject == b.subject);
    CHECK(a.action == b.action);
    CHECK(a.camera_id == b.camera_id);
    CHECK(a.frame == b.frame);
    CHECK(same(a.joints3d_world, b.joints3d_world));
    CHECK(same(a.joints2d, b.joints2d));
  }
}

TEST_CASE("samples without 2d survive the file format") {
  FileGuard g1{kTmpDataset}, g2{kTmpCameras};
  Dataset ds = small_synth(8, 10, 1);
  ds.samples[3].joints2d = Matrix();
  save_dataset(ds, kTmpDataset, {});
  save_cameras(kTmpCameras, ds.cameras, {});
  const Dataset back = load_dataset(kTmpDataset, kTmpCameras);
  CHECK_FALSE(back.samples[3].has_2d());
  CHECK(back.samples[4].has_2d());
}

TEST_CASE("dataset loading rejects unresolvable cameras and bad records") {
  FileGuard g1{kTmpDataset}, g2{kTmpCameras};
  const Dataset ds = small_synth(9, 8, 2);
  save_dataset(ds, kTmpDataset, {});
  // Camera file that lacks the ids the samples reference.
  Camera other;
  other.id = "unrelated";
  other.f = Eigen::Vector2d(1000, 1000);
  save_cameras(kTmpCameras, {other}, {});
  CHECK_THROWS_AS(load_dataset(kTmpDataset, kTmpCameras), SchemaError);

  save_cameras(kTmpCameras, ds.cameras, {});
  {
    std::ofstream out(kTmpDataset, std::ios::app);
    out << "sample S1 calm cam0 99 not-a-number\n";
  }
  CHECK_THROWS_AS(load_dataset(kTmpDataset, kTmpCameras), ParseError);

  CHECK_THROWS_AS(load_dataset("missing.dataset", kTmpCameras), IoError);
}

TEST_CASE("split_by_subject partitions and drops the rest") {
  const Dataset ds = small_synth(10, 140, 2);
  const Split split = split_by_subject(ds, {"S1", "S5"}, {"S9"});
  for (const auto& s : split.train.samples) {
    CHECK((s.subject == "S1" || s.subject == "S5"));
  }
  for (const auto& s : split.test.samples) CHECK(s.subject == "S9");
  CHECK(split.train.samples.size() + split.test.samples.size() <
        ds.samples.size());
  CHECK(split.train.cameras.size() == ds.cameras.size());
  CHECK(split.train.skeleton == ds.skeleton);

  CHECK_THROWS_AS(split_by_subject(ds, {"S1"}, {"S1"}), ArgumentError);
}

TEST_CASE("build_pairs matches the manual preprocessing chain") {
  const Dataset ds = small_synth(11, 12, 2);
  const Skeleton& sk = ds.skeleton;
  const PairSet pairs = build_pairs(ds, {true});
  REQUIRE(pairs.x2d.rows() == static_cast<Index>(ds.samples.size()));
  REQUIRE(pairs.x2d.cols() == 2 * sk.n_input_joints());
  REQUIRE(pairs.y3d.cols() == 3 * (sk.n_joints() - 1));

  const auto& s = ds.samples[5];
  const Camera& cam = ds.camera(s.camera_id);
  const Matrix cam3d =
      root_center(world_to_camera(s.joints3d_world, cam), sk.root_idx);
  const auto out_map = sk.output_joint_map();
  for (std::size_t k = 0; k < out_map.size(); ++k) {
    for (Index c = 0; c < 3; ++c) {
      CHECK(pairs.y3d(5, static_cast<Index>(3 * k) + c) ==
            doctest::Approx(cam3d(out_map[k], c)).epsilon(1e-12));
    }
  }
  for (Index k = 0; k < sk.n_input_joints(); ++k) {
    CHECK(pairs.x2d(5, 2 * k) == s.joints2d(k, 0));
    CHECK(pairs.x2d(5, 2 * k + 1) == s.joints2d(k, 1));
  }
}

TEST_CASE("build_pairs world-frame mode skips the camera transform") {
  const Dataset ds = small_synth(12, 10, 2);
  const Skeleton& sk = ds.skeleton;
  const PairSet pairs = build_pairs(ds, {false});
  const auto& s = ds.samples[2];
  const Matrix world = root_center(s.joints3d_world, sk.root_idx);
  const auto out_map = sk.output_joint_map();
  for (std::size_t k = 0; k < out_map.size(); ++k) {
    CHECK(pairs.y3d(2, static_cast<Index>(3 * k)) ==
          doctest::Approx(world(out_map[k], 0)).epsilon(1e-12));
  }
}

TEST_CASE("batch_indices covers every row once with the documented sizes") {
  Rng rng(13);
  const auto batches = batch_indices(200, 64, rng);
  REQUIRE(batches.size() == 4);
  CHECK(batches[0].size() == 64);
  CHECK(batches[1].size() == 64);
  CHECK(batches[2].size() == 64);
  CHECK(batches[3].size() == 8);  // a remainder >= 2 stands on its own
  std::set<Index> seen;
  for (const auto& b : batches) {
    for (Index i : b) seen.insert(i);
  }
  CHECK(seen.size() == 200);
  CHECK(*seen.begin() == 0);
  CHECK(*seen.rbegin() == 199);
}

TEST_CASE("batch_indices merges a lone trailing row into the last batch") {
  Rng rng(14);
  const auto batches = batch_indices(129, 64, rng);
  REQUIRE(batches.size() == 2);
  CHECK(batches[0].size() == 64);
  CHECK(batches[1].size() == 65);

  CHECK_THROWS_AS(batch_indices(1, 64, rng), ArgumentError);
  CHECK_THROWS_AS(batch_indices(10, 1, rng), ArgumentError);
}

TEST_CASE("take_rows gathers in order") {
  Matrix m(4, 2);
  m << 0, 1, 10, 11, 20, 21, 30, 31;
  const Matrix t = take_rows(m, {3, 0, 2});
  REQUIRE(t.rows() == 3);
  CHECK(t(0, 0) == 30);
  CHECK(t(1, 0) == 0);
  CHECK(t(2, 1) == 21);
}
