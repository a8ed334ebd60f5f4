#pragma once

#include "rolnn/manifolds.hpp"

namespace rolnn::opt {

using num::Mat;
using num::Vec;

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 100.0;  // global-norm gradient clip before the update
};

/// Named slice of the product point with its own learning rate.
struct ParamGroup {
  std::string name;
  std::vector<size_t> comps;
  double lr = 1e-3;
};

/// Adam over a product of Euclidean, SPD and biorthogonal components.
/// Euclidean components carry per-coordinate second moments and reduce
/// exactly to standard Adam; manifold components keep the first moment in
/// the current tangent space (transported after each step) and a scalar
/// second moment from the tangent norm.
class RiemannianAdam {
 public:
  RiemannianAdam(std::vector<ParamGroup> groups, AdamConfig cfg, const geo::ProductPoint& init);

  /// One update; `grad` must already be Riemannian (SPD-converted,
  /// biorthogonal-projected). Throws TrainingDivergence on non-finite input.
  geo::ProductPoint step(const geo::ProductPoint& params, const geo::ProductTangent& grad);

  int64_t step_count() const { return step_count_; }
  int halved_steps() const { return halved_steps_; }
  const std::vector<ParamGroup>& groups() const { return groups_; }
  void set_group_lr(const std::string& name, double lr);

  struct CompState {
    geo::Component m;   // first moment (tangent layout)
    Mat v;              // per-coordinate second moment (Euclidean only)
    double v2 = 0.0;    // scalar second moment (manifold components)
  };
  std::vector<CompState>& state() { return state_; }
  const std::vector<CompState>& state() const { return state_; }
  void set_step_count(int64_t t) { step_count_ = t; }
  const AdamConfig& config() const { return cfg_; }

 private:
  std::vector<ParamGroup> groups_;
  AdamConfig cfg_;
  std::vector<CompState> state_;
  std::vector<double> comp_lr_;
  int64_t step_count_ = 0;
  int halved_steps_ = 0;
};

/// Reference Euclidean Adam used by the equivalence tests.
Vec reference_adam_step(Vec theta, const Vec& g, Vec& m, Vec& v, int64_t t, double lr,
                        const AdamConfig& cfg);

}  // namespace rolnn::opt
