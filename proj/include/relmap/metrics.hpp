#ifndef RELMAP_METRICS_HPP_
#define RELMAP_METRICS_HPP_

#include <Eigen/Core>
#include <vector>

#include "relmap/cmm.hpp"
#include "relmap/scene.hpp"
#include "relmap/supervoxel.hpp"

namespace relmap {

// Probabilistic classification-quality record for one iteration.
// tp/tn/fp/fn are expected counts accumulated from the class-1 probability
// of every supervoxel against the expert's background flag.
struct MetricsRecord {
  int iteration = 0;
  double tp = 0.0;
  double tn = 0.0;
  double fp = 0.0;
  double fn = 0.0;
  double g_obj = 0.0;
  double g_back = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double accuracy = 0.0;
  bool precision_defined = true;
  bool recall_defined = true;
  int n0 = 0;
  int n1 = 0;
  int k0 = 0;
  int k1 = 0;
  int mislabel_count = 0;
  int chosen_id = -1;
  int chosen_label = -1;
};

// Evaluates the classifier over one segmented scene. Supervoxel ground truth
// comes from the same majority rule the expert uses for labeling.
MetricsRecord evaluate(const CmmClassifier& clf, const Segmentation& seg,
                       const std::vector<Eigen::VectorXd>& features, const GroundTruth& gt);

}  // namespace relmap

#endif  // RELMAP_METRICS_HPP_
