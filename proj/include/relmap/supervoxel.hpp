#ifndef RELMAP_SUPERVOXEL_HPP_
#define RELMAP_SUPERVOXEL_HPP_

#include <Eigen/Core>
#include <vector>

#include "relmap/features.hpp"
#include "relmap/geometry.hpp"

namespace relmap {

struct SupervoxelParams {
  double r_seed = 0.05;            // seed spacing / max clustering distance, meters
  double lambda = 0.2;             // color weight
  double mu = 0.4;                 // spatial weight
  double epsilon = 1.0;            // shape weight
  double color_norm = 10.0;        // m, color normalization constant
  double voxel_resolution = 0.008; // adjacency distance, meters

  void validate() const;
};

// Cluster of points with centroid and adjacency; the smallest perceptual and
// interaction unit.
struct Supervoxel {
  int id = 0;
  std::vector<int> member_indices;
  Point centroid;  // mean position, mean color, mean (renormalized) normal
  std::vector<int> neighbors;  // adjacent supervoxel ids, sorted
};

struct Segmentation {
  std::vector<Supervoxel> supervoxels;

  int size() const { return static_cast<int>(supervoxels.size()); }
  const Supervoxel& operator[](int i) const { return supervoxels[i]; }
};

// View of a point (or running centroid) for distance evaluation.
struct VccsPoint {
  Vec3 position = Vec3::Zero();
  Lab lab;
  Eigen::VectorXd fpfh;
};

// Combined color/spatial/shape clustering distance:
//   D = sqrt(lambda Dc^2 / m^2 + mu Ds^2 / (3 R^2) + epsilon Df^2)
double vccs_distance(const Vec3& pos_a, const Lab& lab_a, Eigen::Ref<const Eigen::VectorXd> fpfh_a,
                     const Vec3& pos_b, const Lab& lab_b, Eigen::Ref<const Eigen::VectorXd> fpfh_b,
                     const SupervoxelParams& params);
double vccs_distance(const VccsPoint& a, const VccsPoint& b, const SupervoxelParams& params);

// Seeded region growing under the combined distance. Seeds sit on an
// r_seed-spaced grid snapped to the nearest occupied point; each point joins
// the best seed within radius r_seed*sqrt(3); centroids are recomputed until
// the assignment reaches a fixpoint (at most 10 passes). Adjacent supervoxels
// are those with member points within voxel_resolution of each other.
Segmentation segment(const PointCloud& cloud, const SupervoxelParams& params,
                     const PointFeatureCache* cache = nullptr);

}  // namespace relmap

#endif  // RELMAP_SUPERVOXEL_HPP_
