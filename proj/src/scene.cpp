#include "relmap/scene.hpp"

#include <cmath>
#include <stdexcept>

#include "relmap/rng.hpp"
#include "relmap/supervoxel.hpp"

namespace relmap {

namespace {

constexpr std::uint64_t kBackgroundStream = 0x6261636b67726eULL;  // static-part sampling
constexpr int kPlacementRetries = 100;

Vec3 clamp01(const Vec3& c) {
  return Vec3(std::min(std::max(c.x(), 0.0), 1.0), std::min(std::max(c.y(), 0.0), 1.0),
              std::min(std::max(c.z(), 0.0), 1.0));
}

void sample_table(const TableSpec& table, double density, Rng& rng, PointCloud& out) {
  const double area = table.extent_x * table.extent_y;
  const auto n = static_cast<long long>(std::llround(area * density));
  for (long long i = 0; i < n; ++i) {
    Point p;
    p.position = Vec3((rng.uniform() - 0.5) * table.extent_x,
                      (rng.uniform() - 0.5) * table.extent_y, 0.0);
    p.color = table.color_a + rng.uniform() * (table.color_b - table.color_a);
    p.normal = Vec3::UnitZ();
    out.points.push_back(p);
  }
}

Vec3 jittered_color(const ObjectSpec& spec, Rng& rng) {
  Vec3 c = spec.color;
  if (spec.color_jitter.squaredNorm() > 0.0) {
    c += Vec3(spec.color_jitter.x() * (rng.uniform() - 0.5) * 2.0,
              spec.color_jitter.y() * (rng.uniform() - 0.5) * 2.0,
              spec.color_jitter.z() * (rng.uniform() - 0.5) * 2.0);
  }
  return clamp01(c);
}

// Uniform sampling of a sphere resting on the table at `center_xy`.
void sample_sphere(const ObjectSpec& spec, const Eigen::Vector2d& center_xy, double density,
                   Rng& rng, PointCloud& out) {
  const double r = spec.radius;
  const Vec3 center(center_xy.x(), center_xy.y(), r);
  const double area = 4.0 * M_PI * r * r;
  const auto n = static_cast<long long>(std::llround(area * density));
  for (long long i = 0; i < n; ++i) {
    Vec3 dir;
    do {
      dir = Vec3(rng.normal(), rng.normal(), rng.normal());
    } while (dir.squaredNorm() < 1e-12);
    dir.normalize();
    Point p;
    p.position = center + r * dir;
    p.normal = dir;
    p.color = jittered_color(spec, rng);
    out.points.push_back(p);
  }
}

// Uniform sampling of a box resting on the table: top and four side faces.
// The bottom face is coincident with the table plane and is not a visible
// surface, so it is not sampled.
void sample_box(const ObjectSpec& spec, const Eigen::Vector2d& center_xy, double yaw,
                double density, Rng& rng, PointCloud& out) {
  const double sx = spec.box_size.x();
  const double sy = spec.box_size.y();
  const double sz = spec.box_size.z();
  const double cy = std::cos(yaw);
  const double sn = std::sin(yaw);
  const Vec3 base(center_xy.x(), center_xy.y(), 0.0);

  auto emit = [&](const Vec3& local, const Vec3& local_normal) {
    Point p;
    p.position = base + Vec3(cy * local.x() - sn * local.y(),
                             sn * local.x() + cy * local.y(), local.z());
    p.normal = Vec3(cy * local_normal.x() - sn * local_normal.y(),
                    sn * local_normal.x() + cy * local_normal.y(), local_normal.z());
    p.color = jittered_color(spec, rng);
    out.points.push_back(p);
  };

  struct Face {
    double area;
    Vec3 normal;
  };
  const Face faces[5] = {
      {sx * sy, Vec3::UnitZ()},           // top
      {sy * sz, Vec3(1.0, 0.0, 0.0)},     // +x
      {sy * sz, Vec3(-1.0, 0.0, 0.0)},    // -x
      {sx * sz, Vec3(0.0, 1.0, 0.0)},     // +y
      {sx * sz, Vec3(0.0, -1.0, 0.0)},    // -y
  };
  for (int f = 0; f < 5; ++f) {
    const auto n = static_cast<long long>(std::llround(faces[f].area * density));
    for (long long i = 0; i < n; ++i) {
      const double u = rng.uniform();
      const double v = rng.uniform();
      Vec3 local;
      switch (f) {
        case 0:
          local = Vec3((u - 0.5) * sx, (v - 0.5) * sy, sz);
          break;
        case 1:
          local = Vec3(0.5 * sx, (u - 0.5) * sy, v * sz);
          break;
        case 2:
          local = Vec3(-0.5 * sx, (u - 0.5) * sy, v * sz);
          break;
        case 3:
          local = Vec3((u - 0.5) * sx, 0.5 * sy, v * sz);
          break;
        default:
          local = Vec3((u - 0.5) * sx, -0.5 * sy, v * sz);
          break;
      }
      emit(local, faces[f].normal);
    }
  }
}

struct Placement {
  Eigen::Vector2d center;
  double yaw = 0.0;
};

// Rejection-samples a pose on the table that avoids previously placed
// footprints. Throws a configuration error after the retry budget.
Placement place_object(const SceneConfig& config, const ObjectSpec& spec, int object_index,
                       const std::vector<std::pair<Eigen::Vector2d, double>>& taken,
                       Rng& rng) {
  const Eigen::Vector2d home = spec.home.value_or(Eigen::Vector2d::Zero());
  const double fr = spec.footprint_radius();
  const double lim_x = 0.5 * config.table.extent_x - fr;
  const double lim_y = 0.5 * config.table.extent_y - fr;
  for (int attempt = 0; attempt < kPlacementRetries; ++attempt) {
    Placement pose;
    const double t = config.pose_jitter.translation;
    pose.center = home + Eigen::Vector2d(rng.uniform(-t, t), rng.uniform(-t, t));
    pose.yaw = rng.uniform(-config.pose_jitter.rotation, config.pose_jitter.rotation);
    if (std::fabs(pose.center.x()) > lim_x || std::fabs(pose.center.y()) > lim_y) continue;
    bool overlaps = false;
    for (const auto& [c, r] : taken) {
      if ((pose.center - c).norm() < fr + r) {
        overlaps = true;
        break;
      }
    }
    if (!overlaps) return pose;
  }
  throw std::invalid_argument("scene: failed to place object #" + std::to_string(object_index) +
                              " (" + (spec.name.empty() ? "unnamed" : spec.name) +
                              ") after " + std::to_string(kPlacementRetries) + " retries");
}

}  // namespace

double ObjectSpec::smallest_dimension() const {
  if (shape == Shape::kSphere) return 2.0 * radius;
  return box_size.minCoeff();
}

double ObjectSpec::footprint_radius() const {
  if (shape == Shape::kSphere) return radius;
  return 0.5 * std::hypot(box_size.x(), box_size.y());
}

void SceneConfig::validate(double r_seed) const {
  if (table.extent_x <= 0.0 || table.extent_y <= 0.0) {
    throw std::invalid_argument("scene.table extent must be positive");
  }
  if (sampling_density <= 0.0) {
    throw std::invalid_argument("scene.density must be positive");
  }
  if (noise_sigma < 0.0) {
    throw std::invalid_argument("scene.noise_sigma must be nonnegative");
  }
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const auto& o = objects[i];
    if (o.smallest_dimension() <= r_seed) {
      throw std::invalid_argument(
          "scene.object #" + std::to_string(i) + " (" + (o.name.empty() ? "unnamed" : o.name) +
          "): smallest dimension must exceed the supervoxel seed radius");
    }
    if (o.footprint_radius() >= 0.5 * std::min(table.extent_x, table.extent_y)) {
      throw std::invalid_argument("scene.object #" + std::to_string(i) +
                                  ": footprint does not fit on the table");
    }
  }
}

std::pair<PointCloud, GroundTruth> generate_scene(const SceneConfig& config,
                                                  std::uint64_t seed) {
  // The static part (table + fixed objects) is a pure function of the
  // config, so it is identical across iterations and seeds.
  Rng bg_rng(seed_stream(kBackgroundStream, 1));
  PointCloud background;
  std::vector<int> background_object;  // -1 table, else object index
  sample_table(config.table, config.sampling_density, bg_rng, background);
  background_object.assign(background.size(), -1);

  std::vector<std::pair<Eigen::Vector2d, double>> taken;
  for (std::size_t i = 0; i < config.objects.size(); ++i) {
    const auto& spec = config.objects[i];
    if (spec.moveable) continue;
    const Placement pose =
        place_object(config, spec, static_cast<int>(i), taken, bg_rng);
    taken.emplace_back(pose.center, spec.footprint_radius());
    if (spec.shape == Shape::kSphere) {
      sample_sphere(spec, pose.center, config.sampling_density, bg_rng, background);
    } else {
      sample_box(spec, pose.center, pose.yaw, config.sampling_density, bg_rng, background);
    }
    background_object.resize(background.size(), static_cast<int>(i));
  }

  // Moveable objects: poses and surface sampling depend on the seed.
  Rng rng(seed_stream(seed, 2));
  PointCloud cloud = background;
  GroundTruth gt;
  gt.background_cloud = background;
  gt.membership.assign(cloud.size(), 1);
  gt.object_of_point = background_object;

  for (std::size_t i = 0; i < config.objects.size(); ++i) {
    const auto& spec = config.objects[i];
    if (!spec.moveable) continue;
    const Placement pose = place_object(config, spec, static_cast<int>(i), taken, rng);
    taken.emplace_back(pose.center, spec.footprint_radius());
    if (spec.shape == Shape::kSphere) {
      sample_sphere(spec, pose.center, config.sampling_density, rng, cloud);
    } else {
      sample_box(spec, pose.center, pose.yaw, config.sampling_density, rng, cloud);
    }
    gt.membership.resize(cloud.size(), 0);
    gt.object_of_point.resize(cloud.size(), static_cast<int>(i));
  }

  if (cloud.empty()) {
    throw std::invalid_argument("scene: generated cloud is empty (zero-area table?)");
  }

  if (config.noise_sigma > 0.0) {
    for (auto& p : cloud.points) {
      p.position += config.noise_sigma * Vec3(rng.normal(), rng.normal(), rng.normal());
    }
  }

  return {std::move(cloud), std::move(gt)};
}

int oracle_label(const std::vector<int>& member_indices, const GroundTruth& gt) {
  if (member_indices.empty()) {
    throw std::invalid_argument("oracle_label: empty supervoxel");
  }
  int object_points = 0;
  for (int idx : member_indices) {
    if (!gt.is_background(idx)) ++object_points;
  }
  return 2 * object_points > static_cast<int>(member_indices.size()) ? 1 : 0;
}

int oracle_label(const Supervoxel& sv, const GroundTruth& gt) {
  return oracle_label(sv.member_indices, gt);
}

PointCloud displace_object(const PointCloud& cloud, const GroundTruth& gt, int object_id,
                           const Vec3& translation) {
  if (object_id < 0) throw std::invalid_argument("displace_object: unknown object id");
  bool seen = false;
  bool moveable = false;
  for (std::size_t i = 0; i < gt.object_of_point.size(); ++i) {
    if (gt.object_of_point[i] == object_id) {
      seen = true;
      moveable = !gt.is_background(static_cast<int>(i));
      break;
    }
  }
  if (!seen) throw std::invalid_argument("displace_object: unknown object id");
  if (!moveable) throw std::invalid_argument("displace_object: object is not moveable");

  PointCloud out = cloud;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (gt.object_of_point[i] == object_id) out.points[i].position += translation;
  }
  return out;
}

}  // namespace relmap
