#ifndef RELMAP_CMM_HPP_
#define RELMAP_CMM_HPP_

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <map>
#include <optional>
#include <vector>

#include "relmap/rng.hpp"

namespace relmap {

using FeatureVector = Eigen::VectorXd;

struct Sample {
  FeatureVector x;
  int label = 0;
};

struct CmmParams {
  double alpha = 0.25;        // tolerance level of the intersection test
  int dim = 48;               // feature dimension p
  double initial_cov = 0.01;  // isotropic covariance scale c for 1-sample components
  int n_inner = 1;            // passes of the add-sample body per arriving sample
  double cov_reg = 1e-9;      // absolute floor of the covariance ridge
  bool disable_split_merge = false;

  void validate() const;
};

// One weighted multivariate Gaussian together with the labeled samples that
// parameterize it.
struct Component {
  int id = 0;
  int label = 0;
  std::vector<int> sample_ids;  // indices into the classifier database
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;  // regularized, symmetric positive definite
  double weight = 1.0;

  int count() const { return static_cast<int>(sample_ids.size()); }

  // log N(x; mean, cov), using the cached Cholesky factor.
  double log_density(const Eigen::VectorXd& x) const;

  // Squared Mahalanobis distance (x-mean)' cov^-1 (x-mean).
  double mahalanobis_sq(const Eigen::VectorXd& x) const;

  // Recomputes the Cholesky factor and normalization constant from cov.
  void refresh_cache();

  Eigen::LLT<Eigen::MatrixXd> chol;
  double log_norm = 0.0;  // -0.5 * (p log 2pi + log det cov)
};

struct ClassModel {
  int label = 0;
  std::vector<Component> components;

  bool empty() const { return components.empty(); }
  int size() const { return static_cast<int>(components.size()); }
};

// Mixture weights from component sample counts: w_k = |C_k| / sum |C_i|.
void update_weights(ClassModel& model);

// Membership probabilities P(k = i | x) across the model's components.
// Falls back to a uniform vector if every density underflows; the fallback
// is counted by the caller-visible flag when provided.
Eigen::VectorXd component_membership(const ClassModel& model, const Eigen::VectorXd& x,
                                     bool* underflow = nullptr);

// Sum over samples of log(sum_k w_k G_k(x)), densities floored at 1e-300.
double loglikelihood(const ClassModel& model, const std::vector<const Eigen::VectorXd*>& samples);

// Tolerance-ellipsoid intersection test between a candidate component and
// another component's mean. Returns nullopt when the candidate does not yet
// have more samples than the feature dimension (the test is undefined there).
std::optional<bool> intersects(const Component& candidate, const Component& other,
                               double alpha);

// The two-class online mixture classifier. Each class is a Gaussian mixture
// whose component structure adapts through intersection-triggered,
// likelihood-gated split and merge operations.
class CmmClassifier {
 public:
  explicit CmmClassifier(const CmmParams& params, std::uint64_t rng_seed = 0);

  // Probability that x belongs to class 1.
  double classify(const Eigen::VectorXd& x) const;

  // Adds one labeled sample and runs the structure-adaptation pass(es).
  void add_sample(const Sample& s);

  // Index of the component of `model` whose mean is closest to x in
  // Euclidean distance; ties resolved toward the lowest component id.
  static int closest_component(const ClassModel& model, const Eigen::VectorXd& x);

  const CmmParams& params() const { return params_; }
  const ClassModel& model(int label) const { return models_[label]; }
  ClassModel& mutable_model(int label) { return models_[label]; }
  const std::vector<Sample>& database() const { return database_; }
  std::vector<Sample>& mutable_database() { return database_; }

  int count(int label) const { return counts_[label]; }
  int component_count(int label) const { return models_[label].size(); }
  // Largest per-component sample count over both models.
  int max_component_size() const;

  Rng& rng() { return rng_; }
  int next_component_id() const { return next_component_id_; }

  // Re-estimates mean/cov of a component from its samples (1-sample
  // components get c*I) and refreshes cached factors.
  void reestimate(Component& c) const;

  // Cached F_{1-alpha}(p, n-p) scaled threshold of the intersection test.
  double intersection_threshold(int n) const;
  std::optional<bool> intersects_cached(const Component& candidate,
                                        const Component& other) const;

  // Split / merge attempts on models_[label].components[index]; return
  // whether the model changed. Exposed for tests; add_sample drives them.
  bool try_split(int label, int index);
  bool try_merge(int label, int index);

  // Restores derived state after external reconstruction (checkpoint load).
  void rebuild_derived_state();
  void set_next_component_id(int id) { next_component_id_ = id; }

 private:
  double class_log_density(const ClassModel& model, const Eigen::VectorXd& x) const;
  std::vector<const Eigen::VectorXd*> class_samples(int label) const;
  // Two-set partition of a component's samples: symmetric 1-NN graph,
  // connected sets, average-linkage agglomeration down to two.
  std::optional<std::pair<std::vector<int>, std::vector<int>>> split_partition(
      const std::vector<int>& ids) const;

  CmmParams params_;
  ClassModel models_[2];
  std::vector<Sample> database_;
  int counts_[2] = {0, 0};
  int next_component_id_ = 0;
  Rng rng_;
  mutable std::map<int, double> fisher_cache_;

  friend struct CheckpointAccess;
};

}  // namespace relmap

#endif  // RELMAP_CMM_HPP_
