#pragma once

#include <vector>

#include "secomm/tensor.hpp"

namespace secomm {

/// Standard Adam defaults (lr 1e-3, beta1 0.9, beta2 0.999, eps 1e-8).
struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias correction over a fixed set of parameters. step() consumes
/// the accumulated gradients and zeroes them.
class AdamOptimizer {
 public:
  explicit AdamOptimizer(std::vector<Parameter*> params, AdamConfig cfg = {});

  void step();
  int step_count() const { return step_; }

 private:
  struct Moments {
    Matrix m;
    Matrix v;
  };

  std::vector<Parameter*> params_;
  std::vector<Moments> moments_;
  AdamConfig cfg_;
  int step_ = 0;
};

}  // namespace secomm
