#include "relmap/cmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "relmap/fisher.hpp"

namespace relmap {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;
constexpr double kDensityFloorLog = -690.77552789821368;  // log(1e-300)

double logsumexp(const std::vector<double>& v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace

void CmmParams::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("cmm.alpha must be in (0,1)");
  if (dim < 1) throw std::invalid_argument("cmm.dim must be >= 1");
  if (!(initial_cov > 0.0)) throw std::invalid_argument("cmm.initial_cov must be > 0");
  if (n_inner < 1) throw std::invalid_argument("cmm.n_inner must be >= 1");
  if (cov_reg < 0.0) throw std::invalid_argument("cmm.cov_reg must be >= 0");
}

void Component::refresh_cache() {
  chol.compute(cov);
  if (chol.info() != Eigen::Success) {
    // Progressively inflate the diagonal until the factorization succeeds.
    Eigen::MatrixXd fixed = cov;
    double bump = std::max(1e-12, 1e-9 * fixed.trace() / fixed.rows());
    for (int k = 0; k < 40; ++k) {
      fixed.diagonal().array() += bump;
      chol.compute(fixed);
      if (chol.info() == Eigen::Success) {
        cov = fixed;
        break;
      }
      bump *= 10.0;
    }
    if (chol.info() != Eigen::Success) {
      throw std::runtime_error("component covariance could not be factorized");
    }
  }
  const auto& l = chol.matrixLLT();
  double log_det = 0.0;
  for (int i = 0; i < l.rows(); ++i) log_det += std::log(l(i, i));
  log_det *= 2.0;
  log_norm = -0.5 * (static_cast<double>(cov.rows()) * kLog2Pi + log_det);
}

double Component::mahalanobis_sq(const Eigen::VectorXd& x) const {
  Eigen::VectorXd d = x - mean;
  chol.matrixL().solveInPlace(d);
  return d.squaredNorm();
}

double Component::log_density(const Eigen::VectorXd& x) const {
  return log_norm - 0.5 * mahalanobis_sq(x);
}

void update_weights(ClassModel& model) {
  if (model.components.empty()) return;
  double total = 0.0;
  for (const auto& c : model.components) total += c.count();
  for (auto& c : model.components) c.weight = c.count() / total;
}

Eigen::VectorXd component_membership(const ClassModel& model, const Eigen::VectorXd& x,
                                     bool* underflow) {
  const int k = model.size();
  if (k == 0) throw std::invalid_argument("component_membership requires a non-empty model");
  if (underflow) *underflow = false;
  std::vector<double> logs(k);
  for (int i = 0; i < k; ++i) {
    logs[i] = std::log(model.components[i].weight) + model.components[i].log_density(x);
  }
  const double lse = logsumexp(logs);
  Eigen::VectorXd out(k);
  if (!std::isfinite(lse)) {
    if (underflow) *underflow = true;
    out.setConstant(1.0 / k);
    return out;
  }
  for (int i = 0; i < k; ++i) out[i] = std::exp(logs[i] - lse);
  return out;
}

double loglikelihood(const ClassModel& model,
                     const std::vector<const Eigen::VectorXd*>& samples) {
  if (model.empty()) throw std::invalid_argument("loglikelihood requires a non-empty model");
  const int k = model.size();
  std::vector<double> logs(k);
  double total = 0.0;
  for (const Eigen::VectorXd* s : samples) {
    for (int i = 0; i < k; ++i) {
      logs[i] = std::log(model.components[i].weight) + model.components[i].log_density(*s);
    }
    total += std::max(logsumexp(logs), kDensityFloorLog);
  }
  return total;
}

double loglikelihood(const ClassModel& model, const std::vector<Eigen::VectorXd>& samples) {
  std::vector<const Eigen::VectorXd*> ptrs;
  ptrs.reserve(samples.size());
  for (const auto& s : samples) ptrs.push_back(&s);
  return loglikelihood(model, ptrs);
}

std::optional<bool> intersects(const Component& candidate, const Component& other,
                               double alpha) {
  const int n = candidate.count();
  const int p = static_cast<int>(candidate.mean.size());
  if (n <= p) return std::nullopt;
  const double f = fisher_quantile(1.0 - alpha, p, n - p);
  const double threshold = (static_cast<double>(n - 1) * p / (n - p)) *
                           (static_cast<double>(n + 1) / n) * f;
  return candidate.mahalanobis_sq(other.mean) <= threshold;
}

CmmClassifier::CmmClassifier(const CmmParams& params, std::uint64_t rng_seed)
    : params_(params), rng_(rng_seed) {
  params_.validate();
  models_[0].label = 0;
  models_[1].label = 1;
}

void CmmClassifier::reestimate(Component& c) const {
  const int n = c.count();
  const int p = params_.dim;
  if (n < 1) throw std::logic_error("cannot estimate an empty component");
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(p);
  for (int id : c.sample_ids) mean += database_[id].x;
  mean /= n;
  c.mean = mean;
  if (n == 1) {
    c.cov = params_.initial_cov * Eigen::MatrixXd::Identity(p, p);
  } else {
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(p, p);
    for (int id : c.sample_ids) {
      const Eigen::VectorXd d = database_[id].x - mean;
      cov.selfadjointView<Eigen::Lower>().rankUpdate(d);
    }
    cov /= static_cast<double>(n - 1);
    cov = cov.selfadjointView<Eigen::Lower>();
    const double ridge = params_.cov_reg + 1e-6 * cov.trace() / p;
    cov.diagonal().array() += ridge;
    c.cov = std::move(cov);
  }
  c.refresh_cache();
}

double CmmClassifier::class_log_density(const ClassModel& model,
                                        const Eigen::VectorXd& x) const {
  if (model.empty()) return -std::numeric_limits<double>::infinity();
  std::vector<double> logs(model.size());
  for (int i = 0; i < model.size(); ++i) {
    logs[i] = std::log(model.components[i].weight) + model.components[i].log_density(x);
  }
  return logsumexp(logs);
}

double CmmClassifier::classify(const Eigen::VectorXd& x) const {
  if (x.size() != params_.dim) {
    throw std::invalid_argument("classify: feature dimension mismatch");
  }
  const double a = class_log_density(models_[1], x);  // log Gamma_1
  const double b = class_log_density(models_[0], x);  // log Gamma_0
  double m = std::max(0.0, std::max(a, b));
  const double num = std::exp(-m) + std::exp(a - m);    // e^-m (1 + Gamma_1)
  const double other = std::exp(-m) + std::exp(b - m);  // e^-m (1 + Gamma_0)
  double p = num / (num + other);
  p = std::min(std::max(p, 1e-15), 1.0 - 1e-15);
  return p;
}

int CmmClassifier::closest_component(const ClassModel& model, const Eigen::VectorXd& x) {
  if (model.empty()) throw std::invalid_argument("closest_component on empty model");
  int best = 0;
  double best_d = (x - model.components[0].mean).squaredNorm();
  for (int i = 1; i < model.size(); ++i) {
    const double d = (x - model.components[i].mean).squaredNorm();
    if (d < best_d) {  // ties keep the earlier (lowest-id) component
      best_d = d;
      best = i;
    }
  }
  return best;
}

int CmmClassifier::max_component_size() const {
  int m = 0;
  for (int l = 0; l < 2; ++l) {
    for (const auto& c : models_[l].components) m = std::max(m, c.count());
  }
  return m;
}

double CmmClassifier::intersection_threshold(int n) const {
  const int p = params_.dim;
  auto it = fisher_cache_.find(n);
  double f;
  if (it != fisher_cache_.end()) {
    f = it->second;
  } else {
    f = fisher_quantile(1.0 - params_.alpha, p, n - p);
    fisher_cache_.emplace(n, f);
  }
  return (static_cast<double>(n - 1) * p / (n - p)) * (static_cast<double>(n + 1) / n) * f;
}

std::optional<bool> CmmClassifier::intersects_cached(const Component& candidate,
                                                     const Component& other) const {
  const int n = candidate.count();
  if (n <= params_.dim) return std::nullopt;
  return candidate.mahalanobis_sq(other.mean) <= intersection_threshold(n);
}

std::vector<const Eigen::VectorXd*> CmmClassifier::class_samples(int label) const {
  std::vector<const Eigen::VectorXd*> out;
  out.reserve(counts_[label]);
  for (const auto& s : database_) {
    if (s.label == label) out.push_back(&s.x);
  }
  return out;
}

std::optional<std::pair<std::vector<int>, std::vector<int>>> CmmClassifier::split_partition(
    const std::vector<int>& ids) const {
  const int n = static_cast<int>(ids.size());
  if (n < 4) return std::nullopt;  // two sets of at least two samples each

  Eigen::MatrixXd dist(n, n);
  for (int i = 0; i < n; ++i) {
    dist(i, i) = 0.0;
    for (int j = i + 1; j < n; ++j) {
      const double d = (database_[ids[i]].x - database_[ids[j]].x).norm();
      dist(i, j) = d;
      dist(j, i) = d;
    }
  }

  // Symmetric 1-NN graph, then connected sets via union-find.
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  };
  for (int i = 0; i < n; ++i) {
    int nn = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      if (dist(i, j) < best) {
        best = dist(i, j);
        nn = j;
      }
    }
    const int ra = find(i);
    const int rb = find(nn);
    if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
  }

  std::vector<int> set_of(n, -1);
  std::vector<std::vector<int>> sets;
  for (int i = 0; i < n; ++i) {
    const int r = find(i);
    if (set_of[r] < 0) {
      set_of[r] = static_cast<int>(sets.size());
      sets.emplace_back();
    }
    sets[set_of[r]].push_back(i);
  }
  if (sets.size() == 1) return std::nullopt;

  // Average-linkage agglomeration down to two sets. S(a,b) holds the sum of
  // pairwise distances so merges are O(k) Lance-Williams updates.
  const int k0 = static_cast<int>(sets.size());
  Eigen::MatrixXd pair_sum = Eigen::MatrixXd::Zero(k0, k0);
  for (int a = 0; a < k0; ++a) {
    for (int b = a + 1; b < k0; ++b) {
      double s = 0.0;
      for (int i : sets[a]) {
        for (int j : sets[b]) s += dist(i, j);
      }
      pair_sum(a, b) = s;
      pair_sum(b, a) = s;
    }
  }
  std::vector<bool> alive(k0, true);
  int alive_count = k0;
  while (alive_count > 2) {
    int ma = -1, mb = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int a = 0; a < k0; ++a) {
      if (!alive[a]) continue;
      for (int b = a + 1; b < k0; ++b) {
        if (!alive[b]) continue;
        const double avg = pair_sum(a, b) /
                           (static_cast<double>(sets[a].size()) * sets[b].size());
        if (avg < best) {
          best = avg;
          ma = a;
          mb = b;
        }
      }
    }
    for (int c = 0; c < k0; ++c) {
      if (!alive[c] || c == ma || c == mb) continue;
      pair_sum(ma, c) += pair_sum(mb, c);
      pair_sum(c, ma) = pair_sum(ma, c);
    }
    sets[ma].insert(sets[ma].end(), sets[mb].begin(), sets[mb].end());
    alive[mb] = false;
    --alive_count;
  }

  std::vector<std::vector<int>*> finals;
  for (int a = 0; a < k0; ++a) {
    if (alive[a]) finals.push_back(&sets[a]);
  }
  std::pair<std::vector<int>, std::vector<int>> out;
  for (int i : *finals[0]) out.first.push_back(ids[i]);
  for (int i : *finals[1]) out.second.push_back(ids[i]);
  if (out.first.size() <= 1 || out.second.size() <= 1) return std::nullopt;
  return out;
}

bool CmmClassifier::try_split(int label, int index) {
  if (params_.disable_split_merge) return false;
  ClassModel& model = models_[label];
  Component& cand = model.components[index];
  if (cand.count() <= params_.dim) return false;

  const ClassModel& opposite = models_[1 - label];
  bool any_intersection = false;
  for (const auto& other : opposite.components) {
    const auto res = intersects_cached(cand, other);
    if (res && *res) {
      any_intersection = true;
      break;
    }
  }
  if (!any_intersection) return false;

  const auto parts = split_partition(cand.sample_ids);
  if (!parts) return false;

  const auto samples = class_samples(label);
  const double current_ll = loglikelihood(model, samples);

  ClassModel candidate = model;
  candidate.components.erase(candidate.components.begin() + index);
  Component c1, c2;
  c1.label = label;
  c2.label = label;
  c1.id = next_component_id_;
  c2.id = next_component_id_ + 1;
  c1.sample_ids = parts->first;
  c2.sample_ids = parts->second;
  reestimate(c1);
  reestimate(c2);
  candidate.components.push_back(std::move(c1));
  candidate.components.push_back(std::move(c2));
  update_weights(candidate);

  if (loglikelihood(candidate, samples) > current_ll) {
    next_component_id_ += 2;
    models_[label] = std::move(candidate);
    return true;
  }
  return false;
}

bool CmmClassifier::try_merge(int label, int index) {
  if (params_.disable_split_merge) return false;
  ClassModel& model = models_[label];
  Component& cand = model.components[index];
  if (cand.count() <= params_.dim) return false;
  if (model.size() < 2) return false;

  bool have_ll = false;
  double current_ll = 0.0;
  std::vector<const Eigen::VectorXd*> samples;

  for (int j = 0; j < model.size(); ++j) {
    if (j == index) continue;
    const auto res = intersects_cached(cand, model.components[j]);
    if (!res || !*res) continue;

    if (!have_ll) {
      samples = class_samples(label);
      current_ll = loglikelihood(model, samples);
      have_ll = true;
    }

    Component merged;
    merged.label = label;
    merged.id = next_component_id_;
    merged.sample_ids = cand.sample_ids;
    merged.sample_ids.insert(merged.sample_ids.end(),
                             model.components[j].sample_ids.begin(),
                             model.components[j].sample_ids.end());
    reestimate(merged);

    ClassModel candidate = model;
    candidate.components.erase(candidate.components.begin() + std::max(index, j));
    candidate.components.erase(candidate.components.begin() + std::min(index, j));
    candidate.components.push_back(std::move(merged));
    update_weights(candidate);

    if (loglikelihood(candidate, samples) > current_ll) {
      ++next_component_id_;
      models_[label] = std::move(candidate);
      return true;
    }
  }
  return false;
}

void CmmClassifier::add_sample(const Sample& s) {
  if (s.x.size() != params_.dim) {
    throw std::invalid_argument("add_sample: feature dimension mismatch");
  }
  if (s.label != 0 && s.label != 1) {
    throw std::invalid_argument("add_sample: label must be 0 or 1");
  }
  const int idx = static_cast<int>(database_.size());
  database_.push_back(s);
  ++counts_[s.label];
  const int l = s.label;

  for (int pass = 0; pass < params_.n_inner; ++pass) {
    ClassModel& model = models_[l];
    if (model.empty()) {
      Component c;
      c.label = l;
      c.id = next_component_id_++;
      c.sample_ids = {idx};
      reestimate(c);
      model.components.push_back(std::move(c));
    } else {
      if (pass > 0) {
        // Later passes may move the sample to the now-closest component.
        for (int ci = 0; ci < model.size(); ++ci) {
          auto& ids = model.components[ci].sample_ids;
          const auto it = std::find(ids.begin(), ids.end(), idx);
          if (it == ids.end()) continue;
          ids.erase(it);
          if (ids.empty()) {
            model.components.erase(model.components.begin() + ci);
          } else {
            reestimate(model.components[ci]);
          }
          break;
        }
      }
      if (model.empty()) {
        Component c;
        c.label = l;
        c.id = next_component_id_++;
        c.sample_ids = {idx};
        reestimate(c);
        model.components.push_back(std::move(c));
      } else {
        const int ci = closest_component(model, s.x);
        model.components[ci].sample_ids.push_back(idx);
        reestimate(model.components[ci]);
        update_weights(model);
        if (!try_split(l, ci)) try_merge(l, ci);
      }
    }

    // One random structure-adaptation attempt per class model.
    for (int cls = 0; cls < 2; ++cls) {
      ClassModel& m = models_[cls];
      if (m.empty() || params_.disable_split_merge) continue;
      const int r = rng_.uniform_int(m.size());
      if (!try_split(cls, r)) try_merge(cls, r);
    }

    update_weights(models_[0]);
    update_weights(models_[1]);
  }
}

void CmmClassifier::rebuild_derived_state() {
  counts_[0] = 0;
  counts_[1] = 0;
  for (const auto& s : database_) ++counts_[s.label];
  for (int l = 0; l < 2; ++l) {
    models_[l].label = l;
    for (auto& c : models_[l].components) c.refresh_cache();
    update_weights(models_[l]);
  }
  fisher_cache_.clear();
}

}  // namespace relmap
