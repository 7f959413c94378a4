#include "relmap/explorer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace relmap {

namespace {

constexpr std::uint64_t kSceneStream = 11;
constexpr std::uint64_t kPickStream = 12;
constexpr std::uint64_t kPushStream = 13;
constexpr std::uint64_t kNoiseStream = 14;
constexpr std::uint64_t kCmmStream = 15;
constexpr std::uint64_t kEvalStream = 16;

}  // namespace

double uncertainty_fn(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 0.5) {
    return -2.0 * x * (std::log(2.0 * x) - 1.0);
  }
  const double x2 = 4.0 * x * x;
  return -x2 * (std::log(x2) - 1.0);
}

double uncertainty(const CmmClassifier& clf, const Eigen::VectorXd& x, int n0, int n1) {
  const double p = clf.classify(x);
  return n1 <= n0 ? uncertainty_fn(p) : uncertainty_fn(1.0 - p);
}

double confidence(const CmmClassifier& clf, const Eigen::VectorXd& x) {
  // Locate the closest component over both models, then take the maximum
  // membership probability within that component's model.
  int best_model = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (int l = 0; l < 2; ++l) {
    for (const auto& c : clf.model(l).components) {
      const double d = (x - c.mean).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best_model = l;
      }
    }
  }
  if (best_model < 0) return 0.0;  // untrained classifier
  const Eigen::VectorXd membership = component_membership(clf.model(best_model), x);
  return membership.maxCoeff();
}

RelevanceMap relevance_map(const CmmClassifier& clf,
                           const std::vector<Eigen::VectorXd>& features) {
  RelevanceMap map;
  map.values.reserve(features.size());
  for (const auto& f : features) map.values.push_back(clf.classify(f));
  return map;
}

ChoiceMap choice_map(const CmmClassifier& clf, const std::vector<Eigen::VectorXd>& features) {
  if (features.empty()) throw std::invalid_argument("choice_map: no supervoxels");
  const int n0 = clf.count(0);
  const int n1 = clf.count(1);
  ChoiceMap map;
  map.probabilities.reserve(features.size());
  double total = 0.0;
  for (const auto& f : features) {
    const double raw = uncertainty(clf, f, n0, n1) * (1.0 - confidence(clf, f));
    map.probabilities.push_back(raw);
    total += raw;
  }
  if (total <= 0.0) {
    const double uniform = 1.0 / static_cast<double>(features.size());
    std::fill(map.probabilities.begin(), map.probabilities.end(), uniform);
  } else {
    for (auto& p : map.probabilities) p /= total;
  }
  return map;
}

int pick_supervoxel(const ChoiceMap& map, Rng& rng) {
  if (map.probabilities.empty()) throw std::invalid_argument("pick_supervoxel: empty map");
  const double u = rng.uniform();
  double cum = 0.0;
  int last_positive = -1;
  for (int i = 0; i < static_cast<int>(map.probabilities.size()); ++i) {
    const double p = map.probabilities[i];
    if (p <= 0.0) continue;
    last_positive = i;
    cum += p;
    if (u < cum) return i;
  }
  // Rounding left cum slightly below 1: fall back to the last valid entry.
  if (last_positive < 0) throw std::invalid_argument("pick_supervoxel: all-zero map");
  return last_positive;
}

bool detect_change(const PointCloud& before, const PointCloud& after, const Supervoxel& target,
                   double cell, int min_points) {
  if (!(cell > 0.0)) throw std::invalid_argument("detect_change: cell must be > 0");

  std::unordered_set<GridCell, GridCellHash> before_cells;
  for (const auto& p : before.points) before_cells.insert(cell_of(p.position, cell));
  std::unordered_set<GridCell, GridCellHash> after_cells;
  for (const auto& p : after.points) after_cells.insert(cell_of(p.position, cell));

  std::unordered_map<GridCell, std::vector<Vec3>, GridCellHash> diff_cells;
  for (const auto& p : after.points) {
    const GridCell c = cell_of(p.position, cell);
    if (!before_cells.count(c)) diff_cells[c].push_back(p.position);
  }
  for (const auto& p : before.points) {
    const GridCell c = cell_of(p.position, cell);
    if (!after_cells.count(c)) diff_cells[c].push_back(p.position);
  }

  // Sparse diff cells stand in for statistical outlier removal.
  std::vector<Vec3> diff;
  for (const auto& [c, pts] : diff_cells) {
    if (static_cast<int>(pts.size()) >= min_points) {
      diff.insert(diff.end(), pts.begin(), pts.end());
    }
  }
  if (diff.empty()) return false;

  const SpatialGrid grid(cell, diff);
  int near = 0;
  for (int idx : target.member_indices) {
    bool found = false;
    grid.for_each_in_radius(before.points[idx].position, cell, [&](int) { found = true; });
    if (found) ++near;
  }
  return 4 * near >= static_cast<int>(target.member_indices.size());
}

std::vector<Eigen::VectorXd> extract_features(const PointCloud& cloud, const Segmentation& seg,
                                              const PointFeatureCache& cache) {
  std::vector<Eigen::VectorXd> features;
  features.reserve(seg.size());
  for (const auto& sv : seg.supervoxels) {
    std::vector<const Supervoxel*> neighbors;
    neighbors.reserve(sv.neighbors.size());
    for (int nb : sv.neighbors) neighbors.push_back(&seg.supervoxels[nb]);
    features.push_back(supervoxel_feature(sv, neighbors, cloud, cache));
  }
  return features;
}

Explorer::Explorer(const SceneConfig& scene, const SupervoxelParams& sv_params,
                   const CmmParams& cmm_params, const ExplorerOptions& options,
                   std::uint64_t replication_seed)
    : scene_(scene),
      sv_params_(sv_params),
      options_(options),
      seed_(replication_seed),
      clf_(cmm_params, seed_stream(replication_seed, kCmmStream)),
      pick_rng_(seed_stream(replication_seed, kPickStream)),
      push_rng_(seed_stream(replication_seed, kPushStream)),
      noise_rng_(seed_stream(replication_seed, kNoiseStream)) {
  scene_.validate(sv_params_.r_seed);
  sv_params_.validate();
  if (cmm_params.dim != kFeatureDim) {
    throw std::invalid_argument("explorer: cmm dimension must match the 48-dim features");
  }
  prepare_eval_scene();
}

void Explorer::prepare_eval_scene() {
  if (options_.eval_on_training_scene) return;
  auto [cloud, gt] = generate_scene(scene_, seed_stream(seed_, kEvalStream));
  eval_cloud_ = std::move(cloud);
  eval_gt_ = std::move(gt);
  const PointFeatureCache cache = compute_point_features(eval_cloud_, 2.0 * sv_params_.r_seed);
  eval_seg_ = segment(eval_cloud_, sv_params_, &cache);
  eval_features_ = extract_features(eval_cloud_, eval_seg_, cache);
  choice_accumulator_.assign(eval_seg_.size(), 0.0);
}

InteractionOutcome Explorer::run_iteration() {
  const std::uint64_t scene_seed =
      seed_stream(seed_, kSceneStream, options_.static_scene ? 0 : iteration_);
  auto [cloud, gt] = generate_scene(scene_, scene_seed);
  const PointFeatureCache cache = compute_point_features(cloud, 2.0 * sv_params_.r_seed);
  const Segmentation seg = segment(cloud, sv_params_, &cache);
  const std::vector<Eigen::VectorXd> features = extract_features(cloud, seg, cache);

  const ChoiceMap choice = choice_map(clf_, features);
  const int target = pick_supervoxel(choice, pick_rng_);
  const int oracle = oracle_label(seg[target], gt);

  int label = oracle;
  switch (options_.mode) {
    case LabelMode::kIdeal:
      break;
    case LabelMode::kNoisy:
      if (noise_rng_.uniform() < options_.eta) label = 1 - oracle;
      break;
    case LabelMode::kCloudDiff: {
      // The push moves whatever dominates the target supervoxel.
      std::unordered_map<int, int> votes;
      for (int idx : seg[target].member_indices) ++votes[gt.object_of_point[idx]];
      int winner = -1;
      int winner_votes = -1;
      for (const auto& [obj, v] : votes) {
        if (v > winner_votes || (v == winner_votes && obj < winner)) {
          winner = obj;
          winner_votes = v;
        }
      }
      bool winner_moveable = winner >= 0 && scene_.objects[winner].moveable;
      if (winner_moveable) {
        const double angle = push_rng_.uniform(0.0, 2.0 * M_PI);
        const double dist = push_rng_.uniform(options_.push_min, options_.push_max);
        const Vec3 push(dist * std::cos(angle), dist * std::sin(angle), 0.0);
        const PointCloud after = displace_object(cloud, gt, winner, push);
        label = detect_change(cloud, after, seg[target], options_.change_cell,
                              options_.change_min_points)
                    ? 1
                    : 0;
      } else {
        label = 0;  // nothing moves: before and after coincide
      }
      break;
    }
  }

  // Accumulate the choice distribution on the held-out scene with the same
  // pre-update classifier that produced the actual choice.
  if (!options_.eval_on_training_scene) {
    const ChoiceMap eval_choice = choice_map(clf_, eval_features_);
    for (int i = 0; i < eval_seg_.size(); ++i) {
      choice_accumulator_[i] += eval_choice.probabilities[i];
    }
    ++choice_accumulated_;
  }

  const bool mislabeled = label != oracle;
  if (mislabeled) ++mislabel_count_;
  clf_.add_sample(Sample{features[target], label});

  MetricsRecord rec;
  if (options_.eval_on_training_scene) {
    rec = evaluate(clf_, seg, features, gt);
  } else {
    rec = evaluate(clf_, eval_seg_, eval_features_, eval_gt_);
  }
  rec.iteration = iteration_ + 1;
  rec.mislabel_count = mislabel_count_;
  rec.chosen_id = target;
  rec.chosen_label = label;
  history_.push_back(rec);

  ++iteration_;
  return InteractionOutcome{target, label, mislabeled};
}

std::vector<double> Explorer::mean_choice_distribution() const {
  std::vector<double> out = choice_accumulator_;
  if (choice_accumulated_ > 0) {
    for (auto& v : out) v /= static_cast<double>(choice_accumulated_);
  }
  return out;
}

RelevanceMap Explorer::eval_relevance() const {
  return relevance_map(clf_, eval_features_);
}

}  // namespace relmap
