#ifndef RELMAP_SCENE_HPP_
#define RELMAP_SCENE_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "relmap/geometry.hpp"

namespace relmap {

struct Supervoxel;  // supervoxel.hpp

enum class Shape { kSphere, kBox };

// Table surface: a rectangle in the z=0 plane centered at the origin.
// Point colors are drawn uniformly between color_a and color_b.
struct TableSpec {
  double extent_x = 1.0;
  double extent_y = 1.0;
  Vec3 color_a = Vec3(0.85, 0.55, 0.20);
  Vec3 color_b = Vec3(0.95, 0.75, 0.35);
};

struct ObjectSpec {
  std::string name;
  Shape shape = Shape::kSphere;
  double radius = 0.05;                   // spheres
  Vec3 box_size = Vec3(0.1, 0.06, 0.05);  // boxes: x/y/z edge lengths
  Vec3 color = Vec3(0.2, 0.3, 0.9);
  Vec3 color_jitter = Vec3::Zero();  // uniform per-point color perturbation
  bool moveable = true;
  std::optional<Eigen::Vector2d> home;  // placement center; table center if unset

  double smallest_dimension() const;
  double footprint_radius() const;
};

struct PoseJitter {
  double translation = 1.0;  // +/- meters around the home position
  double rotation = 3.14159265358979323846;  // +/- radians of yaw (boxes)
};

struct SceneConfig {
  TableSpec table;
  std::vector<ObjectSpec> objects;
  double sampling_density = 3000.0;  // points per square meter
  PoseJitter pose_jitter;
  double noise_sigma = 0.0;  // Gaussian position noise, meters

  // Checks invariants; supervoxel seed radius is needed for the
  // object-size constraint. Throws std::invalid_argument on violation.
  void validate(double r_seed) const;
};

// Per-point provenance of a generated scene. The static part of the scene
// (table and non-moveable objects) counts as background: delta = 1.
struct GroundTruth {
  PointCloud background_cloud;         // static part, noiseless, pose-invariant
  std::vector<std::uint8_t> membership;  // delta per scene point, 1 = background
  std::vector<int> object_of_point;      // -1 = table, else object index

  bool is_background(int point_index) const { return membership[point_index] != 0; }
};

// Samples the scene surfaces into a colored, normal-equipped cloud.
// The static part of the scene depends only on the config; object poses,
// object surface sampling and position noise derive from `seed`.
std::pair<PointCloud, GroundTruth> generate_scene(const SceneConfig& config,
                                                  std::uint64_t seed);

// Expert label for a supervoxel: 1 (moveable) iff the majority of its member
// points lies outside the background.
int oracle_label(const std::vector<int>& member_indices, const GroundTruth& gt);
int oracle_label(const Supervoxel& sv, const GroundTruth& gt);

// Rigidly translates one moveable object's points; everything else is
// bit-identical to the input.
PointCloud displace_object(const PointCloud& cloud, const GroundTruth& gt, int object_id,
                           const Vec3& translation);

}  // namespace relmap

#endif  // RELMAP_SCENE_HPP_
