#ifndef RELMAP_FEATURES_HPP_
#define RELMAP_FEATURES_HPP_

#include <Eigen/Core>
#include <vector>

#include "relmap/geometry.hpp"

namespace relmap {

struct Supervoxel;  // supervoxel.hpp

inline constexpr int kLabHistogramBins = 15;  // 3 channels x 5 bins
inline constexpr int kFpfhBins = 33;          // 3 angles x 11 bins
inline constexpr int kFeatureDim = kLabHistogramBins + kFpfhBins;

struct Lab {
  double l = 0.0;
  double a = 0.0;
  double b = 0.0;
};

// Standard sRGB (D65) to CIELab conversion; input channels in [0,1].
Lab rgb_to_cielab(const Vec3& rgb);

// 15-bin color histogram: 5 equal-width bins per CIELab channel over the
// fixed ranges L in [0,100], a and b in [-110,110]; each channel block is
// normalized to sum 1.
Eigen::VectorXd cielab_histogram(const std::vector<Lab>& colors);
Eigen::VectorXd cielab_histogram(const PointCloud& cloud, const std::vector<int>& members);

struct PairAngles {
  double alpha = 0.0;  // v . n_t
  double phi = 0.0;    // u . d_hat
  double theta = 0.0;  // atan2(w . n_t, u . n_t)
};

// Darboux-frame angle triplet between a source and a target point.
// Throws std::invalid_argument on coincident points.
PairAngles pair_angles(const Point& source, const Point& target);

// Per-point CIELab values plus FPFH descriptors for a whole cloud, shared by
// the segmentation and by per-supervoxel feature extraction.
struct PointFeatureCache {
  double radius = 0.0;
  std::vector<Lab> lab;
  Eigen::MatrixXd fpfh;  // kFpfhBins x N, column per point
};

PointFeatureCache compute_point_features(const PointCloud& cloud, double radius);

// FPFH descriptor of one point: SPFH of the query combined with the
// distance-weighted SPFHs of its radius neighbors, each 11-bin angle block
// renormalized to sum 1. Throws std::runtime_error for an isolated query.
Eigen::VectorXd fpfh(const PointCloud& cloud, int query_index, double radius);

// 48-dim supervoxel descriptor: CIELab histogram over the supervoxel's own
// points, FPFH averaged over the points of the supervoxel and its neighbors.
Eigen::VectorXd supervoxel_feature(const Supervoxel& sv,
                                   const std::vector<const Supervoxel*>& neighbors,
                                   const PointCloud& cloud, const PointFeatureCache& cache);
Eigen::VectorXd supervoxel_feature(const Supervoxel& sv,
                                   const std::vector<const Supervoxel*>& neighbors,
                                   const PointCloud& cloud, double radius);

// Feature dump for offline analysis: supervoxel_id, label, 48 value columns.
void write_feature_csv(const std::string& path, const std::vector<int>& supervoxel_ids,
                       const std::vector<int>& labels,
                       const std::vector<Eigen::VectorXd>& features);

}  // namespace relmap

#endif  // RELMAP_FEATURES_HPP_
