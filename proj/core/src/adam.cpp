#include "secomm/adam.hpp"

#include <cmath>

#include "secomm/errors.hpp"

namespace secomm {

AdamOptimizer::AdamOptimizer(std::vector<Parameter*> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
  moments_.reserve(params_.size());
  for (Parameter* p : params_) {
    require(p != nullptr, "AdamOptimizer: null parameter");
    moments_.push_back({Matrix::Zero(p->value.rows(), p->value.cols()),
                        Matrix::Zero(p->value.rows(), p->value.cols())});
  }
}

void AdamOptimizer::step() {
  ++step_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, step_);
  const double bc2 = 1.0 - std::pow(cfg_.beta2, step_);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Parameter& p = *params_[i];
    Moments& mom = moments_[i];
    require(p.grad.rows() == p.value.rows() && p.grad.cols() == p.value.cols(),
            "AdamOptimizer: gradient shape does not match parameter");
    mom.m = cfg_.beta1 * mom.m + (1.0 - cfg_.beta1) * p.grad;
    mom.v = cfg_.beta2 * mom.v + (1.0 - cfg_.beta2) * p.grad.cwiseProduct(p.grad);
    const Matrix m_hat = mom.m / bc1;
    const Matrix v_hat = mom.v / bc2;
    p.value.array() -=
        cfg_.learning_rate * m_hat.array() / (v_hat.array().sqrt() + cfg_.epsilon);
    p.zero_grad();
  }
}

}  // namespace secomm
