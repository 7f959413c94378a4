#ifndef RELMAP_GEOMETRY_HPP_
#define RELMAP_GEOMETRY_HPP_

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <vector>

namespace relmap {

using Vec3 = Eigen::Vector3d;

// One colored, normal-equipped 3D point. Colors are RGB in [0,1], normals
// are unit length.
struct Point {
  Vec3 position = Vec3::Zero();
  Vec3 color = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
};

struct PointCloud {
  std::vector<Point> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  const Point& operator[](std::size_t i) const { return points[i]; }
  Point& operator[](std::size_t i) { return points[i]; }
};

// Integer cell coordinate of a uniform grid.
struct GridCell {
  int x = 0;
  int y = 0;
  int z = 0;
  bool operator==(const GridCell&) const = default;
};

struct GridCellHash {
  std::size_t operator()(const GridCell& c) const {
    std::uint64_t h = static_cast<std::uint32_t>(c.x);
    h = h * 0x9e3779b97f4a7c15ULL + static_cast<std::uint32_t>(c.y);
    h = h * 0x9e3779b97f4a7c15ULL + static_cast<std::uint32_t>(c.z);
    h ^= h >> 29;
    return static_cast<std::size_t>(h * 0xbf58476d1ce4e5b9ULL);
  }
};

inline GridCell cell_of(const Vec3& p, double cell) {
  return GridCell{static_cast<int>(std::floor(p.x() / cell)),
                  static_cast<int>(std::floor(p.y() / cell)),
                  static_cast<int>(std::floor(p.z() / cell))};
}

// Uniform-grid spatial index over a set of positions. Cells are exact
// (no hash folding), so cell membership queries are reliable.
class SpatialGrid {
 public:
  SpatialGrid(double cell_size, const std::vector<Vec3>& positions)
      : cell_(cell_size), positions_(positions) {
    for (int i = 0; i < static_cast<int>(positions_.size()); ++i) {
      cells_[cell_of(positions_[i], cell_)].push_back(i);
    }
  }

  double cell_size() const { return cell_; }

  bool cell_occupied(const GridCell& c) const { return cells_.count(c) > 0; }

  // Calls fn(index) for every stored position within `radius` of q.
  template <typename Fn>
  void for_each_in_radius(const Vec3& q, double radius, Fn&& fn) const {
    const int reach = static_cast<int>(std::ceil(radius / cell_));
    const GridCell c0 = cell_of(q, cell_);
    const double r2 = radius * radius;
    for (int dx = -reach; dx <= reach; ++dx) {
      for (int dy = -reach; dy <= reach; ++dy) {
        for (int dz = -reach; dz <= reach; ++dz) {
          const auto it = cells_.find(GridCell{c0.x + dx, c0.y + dy, c0.z + dz});
          if (it == cells_.end()) continue;
          for (int idx : it->second) {
            if ((positions_[idx] - q).squaredNorm() <= r2) fn(idx);
          }
        }
      }
    }
  }

  std::vector<int> radius_search(const Vec3& q, double radius) const {
    std::vector<int> out;
    for_each_in_radius(q, radius, [&](int i) { out.push_back(i); });
    return out;
  }

  const std::unordered_map<GridCell, std::vector<int>, GridCellHash>& cells() const {
    return cells_;
  }

 private:
  double cell_;
  std::vector<Vec3> positions_;
  std::unordered_map<GridCell, std::vector<int>, GridCellHash> cells_;
};

inline std::vector<Vec3> positions_of(const PointCloud& cloud) {
  std::vector<Vec3> out;
  out.reserve(cloud.size());
  for (const auto& p : cloud.points) out.push_back(p.position);
  return out;
}

}  // namespace relmap

#endif  // RELMAP_GEOMETRY_HPP_
