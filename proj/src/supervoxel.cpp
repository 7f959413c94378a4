#include "relmap/supervoxel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace relmap {

namespace {

constexpr int kMaxGrowthPasses = 10;

struct SeedState {
  Vec3 position = Vec3::Zero();
  Lab lab;
  Eigen::VectorXd fpfh;
  std::vector<int> members;
  bool active = true;
};

}  // namespace

void SupervoxelParams::validate() const {
  if (!(r_seed > 0.0)) throw std::invalid_argument("supervoxel.r_seed must be > 0");
  if (lambda < 0.0 || mu < 0.0 || epsilon < 0.0) {
    throw std::invalid_argument("supervoxel weights must be nonnegative");
  }
  if (!(lambda + mu + epsilon > 0.0)) {
    throw std::invalid_argument("supervoxel weights must not all be zero");
  }
  if (!(color_norm > 0.0)) throw std::invalid_argument("supervoxel.color_norm must be > 0");
  if (!(voxel_resolution > 0.0)) {
    throw std::invalid_argument("supervoxel.voxel_resolution must be > 0");
  }
}

double vccs_distance(const Vec3& pos_a, const Lab& lab_a,
                     Eigen::Ref<const Eigen::VectorXd> fpfh_a, const Vec3& pos_b,
                     const Lab& lab_b, Eigen::Ref<const Eigen::VectorXd> fpfh_b,
                     const SupervoxelParams& params) {
  const double dc2 = (lab_a.l - lab_b.l) * (lab_a.l - lab_b.l) +
                     (lab_a.a - lab_b.a) * (lab_a.a - lab_b.a) +
                     (lab_a.b - lab_b.b) * (lab_a.b - lab_b.b);
  const double ds2 = (pos_a - pos_b).squaredNorm();
  const double df2 = (fpfh_a - fpfh_b).squaredNorm();
  const double m2 = params.color_norm * params.color_norm;
  const double r2 = params.r_seed * params.r_seed;
  return std::sqrt(params.lambda * dc2 / m2 + params.mu * ds2 / (3.0 * r2) +
                   params.epsilon * df2);
}

double vccs_distance(const VccsPoint& a, const VccsPoint& b, const SupervoxelParams& params) {
  return vccs_distance(a.position, a.lab, a.fpfh, b.position, b.lab, b.fpfh, params);
}

Segmentation segment(const PointCloud& cloud, const SupervoxelParams& params,
                     const PointFeatureCache* cache) {
  params.validate();
  if (cloud.empty()) throw std::invalid_argument("segment: empty cloud");

  PointFeatureCache local;
  if (!cache) {
    local = compute_point_features(cloud, 2.0 * params.r_seed);
    cache = &local;
  }
  const int n = static_cast<int>(cloud.size());

  // Seeding: one seed per occupied r_seed grid cell, snapped to the member
  // point closest to the cell center.
  std::vector<Vec3> positions = positions_of(cloud);
  const SpatialGrid seed_grid(params.r_seed, positions);
  std::vector<GridCell> cells;
  cells.reserve(seed_grid.cells().size());
  for (const auto& [cell, pts] : seed_grid.cells()) cells.push_back(cell);
  std::sort(cells.begin(), cells.end(), [](const GridCell& a, const GridCell& b) {
    if (a.x != b.x) return a.x < b.x;
    if (a.y != b.y) return a.y < b.y;
    return a.z < b.z;
  });

  std::vector<SeedState> seeds;
  seeds.reserve(cells.size());
  for (const auto& cell : cells) {
    const Vec3 center((cell.x + 0.5) * params.r_seed, (cell.y + 0.5) * params.r_seed,
                      (cell.z + 0.5) * params.r_seed);
    const auto& members = seed_grid.cells().at(cell);
    int best = members.front();
    double best_d = (positions[best] - center).squaredNorm();
    for (int idx : members) {
      const double d = (positions[idx] - center).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = idx;
      }
    }
    SeedState s;
    s.position = positions[best];
    s.lab = cache->lab[best];
    s.fpfh = cache->fpfh.col(best);
    seeds.push_back(std::move(s));
  }

  const double reach = params.r_seed * std::sqrt(3.0);
  std::vector<int> assignment(n, -1);
  std::vector<int> previous(n, -2);

  for (int pass = 0; pass < kMaxGrowthPasses; ++pass) {
    // Index the active seeds for the radius-limited search.
    std::vector<Vec3> seed_positions;
    std::vector<int> seed_ids;
    for (int s = 0; s < static_cast<int>(seeds.size()); ++s) {
      if (!seeds[s].active) continue;
      seed_positions.push_back(seeds[s].position);
      seed_ids.push_back(s);
    }
    const SpatialGrid grid(reach, seed_positions);

    for (int i = 0; i < n; ++i) {
      int best_seed = -1;
      double best_d = std::numeric_limits<double>::infinity();
      grid.for_each_in_radius(positions[i], reach, [&](int k) {
        const int s = seed_ids[k];
        const double d = vccs_distance(positions[i], cache->lab[i], cache->fpfh.col(i),
                                       seeds[s].position, seeds[s].lab, seeds[s].fpfh, params);
        if (d < best_d || (d == best_d && s < best_seed)) {
          best_d = d;
          best_seed = s;
        }
      });
      assignment[i] = best_seed;
    }

    if (assignment == previous) break;
    previous = assignment;

    // Recompute centroids; seeds that lost all members are retired.
    for (auto& s : seeds) s.members.clear();
    for (int i = 0; i < n; ++i) {
      if (assignment[i] >= 0) seeds[assignment[i]].members.push_back(i);
    }
    for (auto& s : seeds) {
      if (s.members.empty()) {
        s.active = false;
        continue;
      }
      Vec3 pos = Vec3::Zero();
      Lab lab;
      Eigen::VectorXd f = Eigen::VectorXd::Zero(kFpfhBins);
      for (int i : s.members) {
        pos += positions[i];
        lab.l += cache->lab[i].l;
        lab.a += cache->lab[i].a;
        lab.b += cache->lab[i].b;
        f += cache->fpfh.col(i);
      }
      const double inv = 1.0 / static_cast<double>(s.members.size());
      s.position = pos * inv;
      s.lab = Lab{lab.l * inv, lab.a * inv, lab.b * inv};
      s.fpfh = f * inv;
    }
  }

  // Unassigned points cannot occur: the seed of a point's own grid cell is
  // within r_seed*sqrt(3). Guard anyway.
  for (int i = 0; i < n; ++i) {
    if (assignment[i] < 0) throw std::logic_error("segment: unassigned point");
  }

  Segmentation seg;
  std::vector<int> compact_id(seeds.size(), -1);
  for (int s = 0; s < static_cast<int>(seeds.size()); ++s) {
    if (!seeds[s].active || seeds[s].members.empty()) continue;
    compact_id[s] = seg.size();
    Supervoxel sv;
    sv.id = compact_id[s];
    seg.supervoxels.push_back(std::move(sv));
  }
  for (int i = 0; i < n; ++i) {
    seg.supervoxels[compact_id[assignment[i]]].member_indices.push_back(i);
  }

  for (auto& sv : seg.supervoxels) {
    Vec3 pos = Vec3::Zero();
    Vec3 color = Vec3::Zero();
    Vec3 normal = Vec3::Zero();
    for (int i : sv.member_indices) {
      pos += cloud[i].position;
      color += cloud[i].color;
      normal += cloud[i].normal;
    }
    const double inv = 1.0 / static_cast<double>(sv.member_indices.size());
    sv.centroid.position = pos * inv;
    sv.centroid.color = color * inv;
    if (normal.norm() > 1e-12) {
      sv.centroid.normal = normal.normalized();
    } else {
      sv.centroid.normal = Vec3::UnitZ();
    }
  }

  // Adjacency: supervoxels with member points within voxel_resolution.
  std::vector<int> point_sv(n);
  for (const auto& sv : seg.supervoxels) {
    for (int i : sv.member_indices) point_sv[i] = sv.id;
  }
  const SpatialGrid adj_grid(params.voxel_resolution, positions);
  std::vector<std::vector<int>> adjacency(seg.size());
  for (int i = 0; i < n; ++i) {
    adj_grid.for_each_in_radius(positions[i], params.voxel_resolution, [&](int j) {
      const int a = point_sv[i];
      const int b = point_sv[j];
      if (a != b) {
        adjacency[a].push_back(b);
        adjacency[b].push_back(a);
      }
    });
  }
  for (auto& sv : seg.supervoxels) {
    auto& nb = adjacency[sv.id];
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    sv.neighbors = std::move(nb);
  }

  return seg;
}

}  // namespace relmap
