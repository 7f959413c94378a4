#include "relmap/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace relmap {

MetricsRecord evaluate(const CmmClassifier& clf, const Segmentation& seg,
                       const std::vector<Eigen::VectorXd>& features, const GroundTruth& gt) {
  if (static_cast<int>(features.size()) != seg.size()) {
    throw std::invalid_argument("evaluate: features do not match the segmentation");
  }
  MetricsRecord rec;
  for (int i = 0; i < seg.size(); ++i) {
    const double p1 = clf.classify(features[i]);
    const double p0 = 1.0 - p1;
    const double delta = oracle_label(seg[i], gt) == 0 ? 1.0 : 0.0;
    rec.tp += p1 * (1.0 - delta);
    rec.tn += p0 * delta;
    rec.fp += p1 * delta;
    rec.fn += p0 * (1.0 - delta);
    rec.g_obj += 1.0 - delta;
    rec.g_back += delta;
  }

  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (rec.tp + rec.fp > 0.0) {
    rec.precision = rec.tp / (rec.tp + rec.fp);
  } else {
    rec.precision = nan;
    rec.precision_defined = false;
  }
  if (rec.g_obj > 0.0) {
    rec.recall = rec.tp / (rec.tp + rec.fn);
  } else {
    rec.recall = nan;
    rec.recall_defined = false;
  }
  if (rec.g_obj > 0.0 && rec.g_back > 0.0) {
    rec.accuracy = 0.5 * (rec.tp / rec.g_obj + rec.tn / rec.g_back);
  } else if (rec.g_obj > 0.0) {
    rec.accuracy = rec.tp / rec.g_obj;  // background half undefined
  } else if (rec.g_back > 0.0) {
    rec.accuracy = rec.tn / rec.g_back;  // object half undefined
  } else {
    rec.accuracy = nan;
  }

  rec.n0 = clf.count(0);
  rec.n1 = clf.count(1);
  rec.k0 = clf.component_count(0);
  rec.k1 = clf.component_count(1);
  return rec;
}

}  // namespace relmap
