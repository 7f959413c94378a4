#include "relmap/features.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

#include "relmap/supervoxel.hpp"

namespace relmap {

namespace {

constexpr int kBinsPerAngle = 11;
constexpr double kPi = 3.14159265358979323846;

double srgb_to_linear(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double lab_f(double t) {
  constexpr double kDelta3 = 216.0 / 24389.0;  // (6/29)^3
  constexpr double kSlope = 841.0 / 108.0;     // 1 / (3 (6/29)^2)
  return t > kDelta3 ? std::cbrt(t) : kSlope * t + 4.0 / 29.0;
}

int channel_bin(double value, double lo, double hi) {
  const int bin = static_cast<int>(std::floor((value - lo) / (hi - lo) * 5.0));
  return std::min(std::max(bin, 0), 4);
}

int angle_bin(double value, double lo, double hi) {
  const int bin = static_cast<int>(std::floor((value - lo) / (hi - lo) * kBinsPerAngle));
  return std::min(std::max(bin, 0), kBinsPerAngle - 1);
}

// Accumulates one pair-angle triplet into a 33-bin histogram. Returns false
// for coincident points, which carry no angle information.
bool accumulate_pair(const Point& source, const Point& target, Eigen::VectorXd& hist) {
  const Vec3 d = target.position - source.position;
  const double dist = d.norm();
  if (dist < 1e-12) return false;
  const Vec3 d_hat = d / dist;
  const Vec3 u = source.normal;
  const Vec3 v = u.cross(d_hat);
  const Vec3 w = u.cross(v);
  const double alpha = v.dot(target.normal);
  const double phi = u.dot(d_hat);
  const double theta = std::atan2(w.dot(target.normal), u.dot(target.normal));
  hist[angle_bin(alpha, -1.0, 1.0)] += 1.0;
  hist[kBinsPerAngle + angle_bin(phi, -1.0, 1.0)] += 1.0;
  hist[2 * kBinsPerAngle + angle_bin(theta, -kPi, kPi)] += 1.0;
  return true;
}

void normalize_blocks(Eigen::VectorXd& hist, int block) {
  for (int b = 0; b * block < hist.size(); ++b) {
    const double s = hist.segment(b * block, block).sum();
    if (s > 0.0) hist.segment(b * block, block) /= s;
  }
}

// SPFH of one point over a fixed neighbor list: three 11-bin histograms of
// pair angles, each normalized to sum 1. Returns false if no valid pair.
bool spfh(const PointCloud& cloud, int query, const std::vector<int>& neighbors,
          Eigen::VectorXd& out) {
  out = Eigen::VectorXd::Zero(kFpfhBins);
  int pairs = 0;
  for (int n : neighbors) {
    if (n == query) continue;
    if (accumulate_pair(cloud[query], cloud[n], out)) ++pairs;
  }
  if (pairs == 0) return false;
  normalize_blocks(out, kBinsPerAngle);
  return true;
}

Eigen::VectorXd combine_fpfh(const PointCloud& cloud, int query,
                             const std::vector<int>& neighbors,
                             const Eigen::MatrixXd& spfh_table,
                             const std::vector<std::uint8_t>& spfh_valid) {
  if (!spfh_valid[query]) {
    throw std::runtime_error("fpfh: point " + std::to_string(query) +
                             " has no neighbors within the radius");
  }
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(kFpfhBins);
  int k = 0;
  for (int n : neighbors) {
    if (n == query || !spfh_valid[n]) continue;
    const double w = (cloud[n].position - cloud[query].position).norm();
    if (w < 1e-12) continue;
    acc += spfh_table.col(n) / w;
    ++k;
  }
  Eigen::VectorXd out = spfh_table.col(query);
  if (k > 0) out += acc / static_cast<double>(k);
  normalize_blocks(out, kBinsPerAngle);
  return out;
}

}  // namespace

Lab rgb_to_cielab(const Vec3& rgb) {
  const double r = srgb_to_linear(rgb.x());
  const double g = srgb_to_linear(rgb.y());
  const double b = srgb_to_linear(rgb.z());
  // sRGB to XYZ, D65 white.
  const double x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
  const double y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
  const double z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
  const double fx = lab_f(x / 0.95047);
  const double fy = lab_f(y / 1.0);
  const double fz = lab_f(z / 1.08883);
  Lab lab;
  lab.l = 116.0 * fy - 16.0;
  lab.a = 500.0 * (fx - fy);
  lab.b = 200.0 * (fy - fz);
  return lab;
}

Eigen::VectorXd cielab_histogram(const std::vector<Lab>& colors) {
  if (colors.empty()) throw std::invalid_argument("cielab_histogram: no points");
  Eigen::VectorXd hist = Eigen::VectorXd::Zero(kLabHistogramBins);
  for (const auto& c : colors) {
    hist[channel_bin(c.l, 0.0, 100.0)] += 1.0;
    hist[5 + channel_bin(c.a, -110.0, 110.0)] += 1.0;
    hist[10 + channel_bin(c.b, -110.0, 110.0)] += 1.0;
  }
  normalize_blocks(hist, 5);
  return hist;
}

Eigen::VectorXd cielab_histogram(const PointCloud& cloud, const std::vector<int>& members) {
  std::vector<Lab> labs;
  labs.reserve(members.size());
  for (int i : members) labs.push_back(rgb_to_cielab(cloud[i].color));
  return cielab_histogram(labs);
}

PairAngles pair_angles(const Point& source, const Point& target) {
  const Vec3 d = target.position - source.position;
  const double dist = d.norm();
  if (dist < 1e-12) throw std::invalid_argument("pair_angles: coincident points");
  const Vec3 d_hat = d / dist;
  const Vec3 u = source.normal;
  const Vec3 v = u.cross(d_hat);
  const Vec3 w = u.cross(v);
  PairAngles out;
  out.alpha = v.dot(target.normal);
  out.phi = u.dot(d_hat);
  out.theta = std::atan2(w.dot(target.normal), u.dot(target.normal));
  return out;
}

PointFeatureCache compute_point_features(const PointCloud& cloud, double radius) {
  const int n = static_cast<int>(cloud.size());
  PointFeatureCache cache;
  cache.radius = radius;
  cache.lab.reserve(n);
  for (const auto& p : cloud.points) cache.lab.push_back(rgb_to_cielab(p.color));

  const SpatialGrid grid(radius, positions_of(cloud));
  std::vector<std::vector<int>> neighbors(n);
  for (int i = 0; i < n; ++i) {
    grid.for_each_in_radius(cloud[i].position, radius, [&](int j) {
      if (j != i) neighbors[i].push_back(j);
    });
  }

  Eigen::MatrixXd spfh_table(kFpfhBins, n);
  std::vector<std::uint8_t> valid(n, 0);
  Eigen::VectorXd h;
  for (int i = 0; i < n; ++i) {
    valid[i] = spfh(cloud, i, neighbors[i], h) ? 1 : 0;
    spfh_table.col(i) = h;
  }

  cache.fpfh.resize(kFpfhBins, n);
  for (int i = 0; i < n; ++i) {
    if (!valid[i]) {
      // Isolated point: keep a zero column; consumers fall back per spec.
      cache.fpfh.col(i).setZero();
      continue;
    }
    cache.fpfh.col(i) = combine_fpfh(cloud, i, neighbors[i], spfh_table, valid);
  }
  return cache;
}

Eigen::VectorXd fpfh(const PointCloud& cloud, int query_index, double radius) {
  if (query_index < 0 || query_index >= static_cast<int>(cloud.size())) {
    throw std::invalid_argument("fpfh: query index out of range");
  }
  const SpatialGrid grid(radius, positions_of(cloud));
  // Collect the query's neighbors and enough context for their SPFHs.
  std::vector<int> q_neighbors;
  grid.for_each_in_radius(cloud[query_index].position, radius, [&](int j) {
    if (j != query_index) q_neighbors.push_back(j);
  });
  const int n = static_cast<int>(cloud.size());
  Eigen::MatrixXd spfh_table(kFpfhBins, n);
  std::vector<std::uint8_t> valid(n, 0);
  Eigen::VectorXd h;
  auto compute_spfh = [&](int i) {
    std::vector<int> nb;
    grid.for_each_in_radius(cloud[i].position, radius, [&](int j) {
      if (j != i) nb.push_back(j);
    });
    valid[i] = spfh(cloud, i, nb, h) ? 1 : 0;
    spfh_table.col(i) = h;
  };
  compute_spfh(query_index);
  if (!valid[query_index]) {
    throw std::runtime_error("fpfh: isolated query point");
  }
  for (int j : q_neighbors) compute_spfh(j);
  return combine_fpfh(cloud, query_index, q_neighbors, spfh_table, valid);
}

Eigen::VectorXd supervoxel_feature(const Supervoxel& sv,
                                   const std::vector<const Supervoxel*>& neighbors,
                                   const PointCloud& cloud,
                                   const PointFeatureCache& cache) {
  if (sv.member_indices.empty()) {
    throw std::invalid_argument("supervoxel_feature: empty supervoxel");
  }
  Eigen::VectorXd feature(kFeatureDim);

  std::vector<Lab> labs;
  labs.reserve(sv.member_indices.size());
  for (int i : sv.member_indices) labs.push_back(cache.lab[i]);
  feature.head<kLabHistogramBins>() = cielab_histogram(labs);

  Eigen::VectorXd mean_fpfh = Eigen::VectorXd::Zero(kFpfhBins);
  int used = 0;
  auto add_points = [&](const std::vector<int>& ids) {
    for (int i : ids) {
      if (cache.fpfh.col(i).sum() <= 0.0) continue;  // isolated points carry no shape
      mean_fpfh += cache.fpfh.col(i);
      ++used;
    }
  };
  add_points(sv.member_indices);
  for (const Supervoxel* nb : neighbors) add_points(nb->member_indices);

  if (used == 0) {
    // Fall back to the SPFH of the centroid neighborhood: angle histograms
    // of centroid-to-member pairs.
    Eigen::VectorXd hist = Eigen::VectorXd::Zero(kFpfhBins);
    Point centroid = sv.centroid;
    int pairs = 0;
    for (int i : sv.member_indices) {
      if (accumulate_pair(centroid, cloud[i], hist)) ++pairs;
    }
    if (pairs == 0) {
      throw std::runtime_error("supervoxel_feature: no shape information available");
    }
    normalize_blocks(hist, kBinsPerAngle);
    feature.tail<kFpfhBins>() = hist;
    return feature;
  }

  mean_fpfh /= static_cast<double>(used);
  normalize_blocks(mean_fpfh, kBinsPerAngle);
  feature.tail<kFpfhBins>() = mean_fpfh;
  return feature;
}

Eigen::VectorXd supervoxel_feature(const Supervoxel& sv,
                                   const std::vector<const Supervoxel*>& neighbors,
                                   const PointCloud& cloud, double radius) {
  return supervoxel_feature(sv, neighbors, cloud, compute_point_features(cloud, radius));
}

void write_feature_csv(const std::string& path, const std::vector<int>& supervoxel_ids,
                       const std::vector<int>& labels,
                       const std::vector<Eigen::VectorXd>& features) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("write_feature_csv: cannot open " + path);
  std::fprintf(f, "supervoxel_id,label");
  for (int i = 0; i < kFeatureDim; ++i) std::fprintf(f, ",f%d", i);
  std::fprintf(f, "\n");
  for (std::size_t r = 0; r < features.size(); ++r) {
    std::fprintf(f, "%d,%d", supervoxel_ids[r], labels[r]);
    for (int i = 0; i < features[r].size(); ++i) {
      std::fprintf(f, ",%.12g", features[r][i]);
    }
    std::fprintf(f, "\n");
  }
  std::fclose(f);
}

}  // namespace relmap
