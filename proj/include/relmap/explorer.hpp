#ifndef RELMAP_EXPLORER_HPP_
#define RELMAP_EXPLORER_HPP_

#include <Eigen/Core>
#include <cstdint>
#include <memory>
#include <vector>

#include "relmap/cmm.hpp"
#include "relmap/metrics.hpp"
#include "relmap/rng.hpp"
#include "relmap/scene.hpp"
#include "relmap/supervoxel.hpp"

namespace relmap {

// Uncertainty transform of a class probability; peaks at 1 for p = 0.5.
double uncertainty_fn(double x);

// Uncertainty of a feature given the current class sample counts: the
// minority class drives which side of the probability is transformed.
double uncertainty(const CmmClassifier& clf, const Eigen::VectorXd& x, int n0, int n1);

// Membership probability of the closest component's model: a density proxy
// for how well-sampled the feature-space region is. Zero when untrained.
double confidence(const CmmClassifier& clf, const Eigen::VectorXd& x);

struct RelevanceMap {
  std::vector<double> values;  // per supervoxel, in (0,1)
};

struct ChoiceMap {
  std::vector<double> probabilities;  // per supervoxel, sums to 1
};

RelevanceMap relevance_map(const CmmClassifier& clf,
                           const std::vector<Eigen::VectorXd>& features);

// Choice distribution: uncertainty * (1 - confidence) per supervoxel,
// normalized; uniform when every raw score is zero.
ChoiceMap choice_map(const CmmClassifier& clf, const std::vector<Eigen::VectorXd>& features);

// Categorical draw from the choice distribution.
int pick_supervoxel(const ChoiceMap& map, Rng& rng);

// Occupancy-diff change test: true iff at least a quarter of the target's
// member points lie within `cell` of the before/after occupancy difference
// (cells with fewer than min_points differing points are discarded).
bool detect_change(const PointCloud& before, const PointCloud& after, const Supervoxel& target,
                   double cell, int min_points = 3);

enum class LabelMode { kIdeal, kCloudDiff, kNoisy };

struct InteractionOutcome {
  int supervoxel_id = -1;
  int label = 0;
  bool mislabeled = false;
};

struct ExplorerOptions {
  LabelMode mode = LabelMode::kIdeal;
  double eta = 0.0;            // label flip probability in noisy mode
  double push_min = 0.05;      // meters, simulated push displacement
  double push_max = 0.10;
  double change_cell = 0.02;   // occupancy cell of the change detector
  int change_min_points = 3;
  bool static_scene = false;   // keep object poses fixed across iterations
  bool eval_on_training_scene = false;
};

// One replication of the exploration loop: generate a scene, segment it,
// extract features, sample a supervoxel from the choice distribution,
// label it through the simulated interaction, update the classifier and
// record the classification-quality metrics.
class Explorer {
 public:
  Explorer(const SceneConfig& scene, const SupervoxelParams& sv_params,
           const CmmParams& cmm_params, const ExplorerOptions& options,
           std::uint64_t replication_seed);

  InteractionOutcome run_iteration();

  int iteration() const { return iteration_; }
  const CmmClassifier& classifier() const { return clf_; }
  CmmClassifier& mutable_classifier() { return clf_; }
  const std::vector<MetricsRecord>& history() const { return history_; }
  int mislabel_count() const { return mislabel_count_; }

  // Held-out evaluation scene (training scene when eval_on_training_scene).
  const PointCloud& eval_cloud() const { return eval_cloud_; }
  const Segmentation& eval_segmentation() const { return eval_seg_; }
  const std::vector<Eigen::VectorXd>& eval_features() const { return eval_features_; }
  const GroundTruth& eval_ground_truth() const { return eval_gt_; }

  // Mean choice probability per eval-scene supervoxel over the run so far.
  std::vector<double> mean_choice_distribution() const;

  // Relevance of every eval-scene supervoxel under the current classifier.
  RelevanceMap eval_relevance() const;

 private:
  void prepare_eval_scene();

  SceneConfig scene_;
  SupervoxelParams sv_params_;
  ExplorerOptions options_;
  std::uint64_t seed_;
  CmmClassifier clf_;
  Rng pick_rng_;
  Rng push_rng_;
  Rng noise_rng_;
  int iteration_ = 0;
  int mislabel_count_ = 0;
  std::vector<MetricsRecord> history_;

  PointCloud eval_cloud_;
  GroundTruth eval_gt_;
  Segmentation eval_seg_;
  std::vector<Eigen::VectorXd> eval_features_;
  std::vector<double> choice_accumulator_;
  int choice_accumulated_ = 0;
};

// Per-supervoxel features for a segmented cloud, sharing one feature cache.
std::vector<Eigen::VectorXd> extract_features(const PointCloud& cloud, const Segmentation& seg,
                                              const PointFeatureCache& cache);

}  // namespace relmap

#endif  // RELMAP_EXPLORER_HPP_
