#include "secomm/tensor.hpp"

#include <cmath>
#include <string>

#include "secomm/errors.hpp"

namespace secomm {

namespace {

constexpr double kNormEps = 1e-12;

std::string shape_of(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

// Row norms guarded as sqrt(|row|^2 + eps); keeps zeroed rows differentiable.
Vector guarded_inv_row_norms(const Matrix& m) {
  Vector inv(m.rows());
  for (Index i = 0; i < m.rows(); ++i)
    inv(i) = 1.0 / std::sqrt(m.row(i).squaredNorm() + kNormEps);
  return inv;
}

}  // namespace

double Tensor::scalar() const {
  require(node_ != nullptr, "scalar(): empty tensor");
  require_shape(rows() == 1 && cols() == 1,
                "scalar(): tensor is " + shape_of(node_->value));
  return node_->value(0, 0);
}

detail::Node* Tape::make_node(Matrix value, bool requires_grad) {
  nodes_.emplace_back();
  detail::Node& n = nodes_.back();
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  return &n;
}

Tensor Tape::leaf(Parameter& p) {
  detail::Node* n = make_node(p.value, true);
  n->bound = &p;
  n->backprop = [](Tape&, detail::Node& self) { self.bound->grad += self.grad; };
  return wrap(n);
}

Tensor Tape::constant(Matrix value) { return wrap(make_node(std::move(value), false)); }

const SparseMatrix& Tape::intern(SparseMatrix m) {
  sparse_pool_.push_back(std::move(m));
  return sparse_pool_.back();
}

Tensor Tape::spmm(const SparseMatrix& lhs, Tensor rhs) {
  require_shape(lhs.cols() == rhs.rows(),
                "spmm: " + std::to_string(lhs.rows()) + "x" + std::to_string(lhs.cols()) +
                    " * " + shape_of(rhs.node_->value));
  detail::Node* n = make_node(lhs * rhs.node_->value, rhs.requires_grad());
  if (n->requires_grad) {
    detail::Node* r = rhs.node_;
    const SparseMatrix* s = &lhs;
    n->backprop = [r, s](Tape&, detail::Node& self) { accum(r, s->transpose() * self.grad); };
  }
  return wrap(n);
}

Tensor Tape::matmul(Tensor a, Tensor b) {
  require_shape(a.cols() == b.rows(),
                "matmul: " + shape_of(a.node_->value) + " * " + shape_of(b.node_->value));
  detail::Node* n =
      make_node(a.node_->value * b.node_->value, a.requires_grad() || b.requires_grad());
  if (n->requires_grad) {
    detail::Node* na = a.node_;
    detail::Node* nb = b.node_;
    n->backprop = [na, nb](Tape&, detail::Node& self) {
      accum(na, self.grad * nb->value.transpose());
      accum(nb, na->value.transpose() * self.grad);
    };
  }
  return wrap(n);
}

Tensor Tape::transpose_matmul(Tensor a, Tensor b) {
  require_shape(a.rows() == b.rows(), "transpose_matmul: " + shape_of(a.node_->value) +
                                          "^T * " + shape_of(b.node_->value));
  detail::Node* n = make_node(a.node_->value.transpose() * b.node_->value,
                              a.requires_grad() || b.requires_grad());
  if (n->requires_grad) {
    detail::Node* na = a.node_;
    detail::Node* nb = b.node_;
    n->backprop = [na, nb](Tape&, detail::Node& self) {
      accum(na, nb->value * self.grad.transpose());
      accum(nb, na->value * self.grad);
    };
  }
  return wrap(n);
}

Tensor Tape::add(Tensor a, Tensor b) {
  require_shape(a.rows() == b.rows() && a.cols() == b.cols(),
                "add: " + shape_of(a.node_->value) + " + " + shape_of(b.node_->value));
  detail::Node* n =
      make_node(a.node_->value + b.node_->value, a.requires_grad() || b.requires_grad());
  if (n->requires_grad) {
    detail::Node* na = a.node_;
    detail::Node* nb = b.node_;
    n->backprop = [na, nb](Tape&, detail::Node& self) {
      accum(na, self.grad);
      accum(nb, self.grad);
    };
  }
  return wrap(n);
}

Tensor Tape::add_row_bias(Tensor a, Tensor bias) {
  require_shape(bias.rows() == 1 && bias.cols() == a.cols(),
                "add_row_bias: bias " + shape_of(bias.node_->value) + " for " +
                    shape_of(a.node_->value));
  Matrix out = a.node_->value;
  out.rowwise() += bias.node_->value.row(0);
  detail::Node* n = make_node(std::move(out), a.requires_grad() || bias.requires_grad());
  if (n->requires_grad) {
    detail::Node* na = a.node_;
    detail::Node* nb = bias.node_;
    n->backprop = [na, nb](Tape&, detail::Node& self) {
      accum(na, self.grad);
      accum(nb, self.grad.colwise().sum());
    };
  }
  return wrap(n);
}

Tensor Tape::scale(Tensor a, double factor) {
  detail::Node* n = make_node(a.node_->value * factor, a.requires_grad());
  if (n->requires_grad) {
    detail::Node* na = a.node_;
    n->backprop = [na, factor](Tape&, detail::Node& self) { accum(na, factor * self.grad); };
  }
  return wrap(n);
}

Tensor Tape::relu(Tensor a) {
  detail::Node* n = make_node(a.node_->value.cwiseMax(0.0), a.requires_grad());
  if (n->requires_grad) {
    detail::Node* na = a.node_;
    n->backprop = [na](Tape&, detail::Node& self) {
      accum(na, (na->value.array() > 0.0).cast<double>().matrix().cwiseProduct(self.grad));
    };
  }
  return wrap(n);
}

Tensor Tape::row_softmax(Tensor a) {
  Matrix out(a.rows(), a.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    const double m = a.node_->value.row(i).maxCoeff();
    out.row(i) = (a.node_->value.row(i).array() - m).exp();
    out.row(i) /= out.row(i).sum();
  }
  detail::Node* n = make_node(std::move(out), a.requires_grad());
  if (n->requires_grad) {
    detail::Node* na = a.node_;
    n->backprop = [na](Tape&, detail::Node& self) {
      Matrix dx(self.value.rows(), self.value.cols());
      for (Index i = 0; i < self.value.rows(); ++i) {
        const double dot = self.grad.row(i).dot(self.value.row(i));
        dx.row(i) =
            self.value.row(i).cwiseProduct(self.grad.row(i) - Matrix::Constant(1, self.value.cols(), dot));
      }
      accum(na, dx);
    };
  }
  return wrap(n);
}

Tensor Tape::cosine_rows(Tensor a, Tensor b) {
  require_shape(a.rows() == b.rows() && a.cols() == b.cols(),
                "cosine_rows: " + shape_of(a.node_->value) + " vs " + shape_of(b.node_->value));
  const Vector inv_na = guarded_inv_row_norms(a.node_->value);
  const Vector inv_nb = guarded_inv_row_norms(b.node_->value);
  Matrix out(a.rows(), 1);
  for (Index i = 0; i < a.rows(); ++i)
    out(i, 0) = a.node_->value.row(i).dot(b.node_->value.row(i)) * inv_na(i) * inv_nb(i);
  detail::Node* n = make_node(std::move(out), a.requires_grad() || b.requires_grad());
  if (n->requires_grad) {
    detail::Node* na = a.node_;
    detail::Node* nb = b.node_;
    n->backprop = [na, nb, inv_na, inv_nb](Tape&, detail::Node& self) {
      Matrix da = Matrix::Zero(na->value.rows(), na->value.cols());
      Matrix db = Matrix::Zero(nb->value.rows(), nb->value.cols());
      for (Index i = 0; i < na->value.rows(); ++i) {
        const double u = self.grad(i, 0);
        if (u == 0.0) continue;
        const double c = self.value(i, 0);
        da.row(i) = u * (nb->value.row(i) * inv_na(i) * inv_nb(i) -
                         c * inv_na(i) * inv_na(i) * na->value.row(i));
        db.row(i) = u * (na->value.row(i) * inv_na(i) * inv_nb(i) -
                         c * inv_nb(i) * inv_nb(i) * nb->value.row(i));
      }
      accum(na, da);
      accum(nb, db);
    };
  }
  return wrap(n);
}

Tensor Tape::log_sum_exp(Tensor a) {
  Matrix out(a.rows(), 1);
  for (Index i = 0; i < a.rows(); ++i) {
    const double m = a.node_->value.row(i).maxCoeff();
    out(i, 0) = m + std::log((a.node_->value.row(i).array() - m).exp().sum());
  }
  detail::Node* n = make_node(std::move(out), a.requires_grad());
  if (n->requires_grad) {
    detail::Node* na = a.node_;
    n->backprop = [na](Tape&, detail::Node& self) {
      Matrix dx(na->value.rows(), na->value.cols());
      for (Index i = 0; i < na->value.rows(); ++i)
        dx.row(i) = self.grad(i, 0) * (na->value.row(i).array() - self.value(i, 0)).exp().matrix();
      accum(na, dx);
    };
  }
  return wrap(n);
}

Tensor Tape::frobenius_sq(Tensor a) {
  Matrix out(1, 1);
  out(0, 0) = a.node_->value.squaredNorm();
  detail::Node* n = make_node(std::move(out), a.requires_grad());
  if (n->requires_grad) {
    detail::Node* na = a.node_;
    n->backprop = [na](Tape&, detail::Node& self) {
      accum(na, 2.0 * self.grad(0, 0) * na->value);
    };
  }
  return wrap(n);
}

Tensor Tape::gather_rows(Tensor a, std::vector<int> indices) {
  Matrix out(static_cast<Index>(indices.size()), a.cols());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    require(indices[k] >= 0 && indices[k] < a.rows(), "gather_rows: index out of range");
    out.row(static_cast<Index>(k)) = a.node_->value.row(indices[k]);
  }
  detail::Node* n = make_node(std::move(out), a.requires_grad());
  if (n->requires_grad) {
    detail::Node* na = a.node_;
    n->backprop = [na, indices = std::move(indices)](Tape&, detail::Node& self) {
      Matrix dx = Matrix::Zero(na->value.rows(), na->value.cols());
      for (std::size_t k = 0; k < indices.size(); ++k)
        dx.row(indices[k]) += self.grad.row(static_cast<Index>(k));
      accum(na, dx);
    };
  }
  return wrap(n);
}

Tensor Tape::hstack(const std::vector<Tensor>& parts) {
  require(!parts.empty(), "hstack: no inputs");
  Index cols = 0;
  bool needs_grad = false;
  for (const Tensor& t : parts) {
    require_shape(t.rows() == parts.front().rows(), "hstack: row counts differ");
    cols += t.cols();
    needs_grad = needs_grad || t.requires_grad();
  }
  Matrix out(parts.front().rows(), cols);
  Index at = 0;
  for (const Tensor& t : parts) {
    out.middleCols(at, t.cols()) = t.node_->value;
    at += t.cols();
  }
  detail::Node* n = make_node(std::move(out), needs_grad);
  if (needs_grad) {
    std::vector<detail::Node*> inputs;
    inputs.reserve(parts.size());
    for (const Tensor& t : parts) inputs.push_back(t.node_);
    n->backprop = [inputs](Tape&, detail::Node& self) {
      Index at = 0;
      for (detail::Node* in : inputs) {
        accum(in, self.grad.middleCols(at, in->value.cols()));
        at += in->value.cols();
      }
    };
  }
  return wrap(n);
}

Tensor Tape::sum(Tensor a) {
  Matrix out(1, 1);
  out(0, 0) = a.node_->value.sum();
  detail::Node* n = make_node(std::move(out), a.requires_grad());
  if (n->requires_grad) {
    detail::Node* na = a.node_;
    n->backprop = [na](Tape&, detail::Node& self) {
      accum(na, Matrix::Constant(na->value.rows(), na->value.cols(), self.grad(0, 0)));
    };
  }
  return wrap(n);
}

Tensor Tape::contrastive_nce(Tensor z1, Tensor z2, const IndexMatrix& negatives, double tau) {
  require_shape(z1.rows() == z2.rows() && z1.cols() == z2.cols(),
                "contrastive_nce: view shapes differ");
  require(tau > 0.0, "contrastive_nce: tau must be positive");
  const Index n_rows = z1.rows();
  require(negatives.rows() == n_rows && negatives.cols() >= 1,
          "contrastive_nce: need at least one negative per node");
  const Index n_neg = negatives.cols();
  for (Index i = 0; i < n_rows; ++i)
    for (Index k = 0; k < n_neg; ++k)
      require(negatives(i, k) >= 0 && negatives(i, k) < n_rows && negatives(i, k) != i,
              "contrastive_nce: negative index out of range or self");

  const Vector inv_n1 = guarded_inv_row_norms(z1.node_->value);
  const Vector inv_n2 = guarded_inv_row_norms(z2.node_->value);
  // Row-major normalized copies: the hot loops walk rows.
  auto hat1 = std::make_shared<RowMatrix>(inv_n1.asDiagonal() * z1.node_->value);
  auto hat2 = std::make_shared<RowMatrix>(inv_n2.asDiagonal() * z2.node_->value);

  auto cos_a = std::make_shared<RowMatrix>(n_rows, n_neg);  // anchor vs view-1 negatives
  auto cos_b = std::make_shared<RowMatrix>(n_rows, n_neg);  // anchor vs view-2 negatives
  auto lse = std::make_shared<Vector>(n_rows);
  Vector pos(n_rows);

  double total = 0.0;
  for (Index i = 0; i < n_rows; ++i) {
    const auto anchor = hat1->row(i);
    pos(i) = anchor.dot(hat2->row(i));
    double row_max = -std::numeric_limits<double>::infinity();
    for (Index k = 0; k < n_neg; ++k) {
      const int j = negatives(i, k);
      (*cos_a)(i, k) = anchor.dot(hat1->row(j)) / tau;
      (*cos_b)(i, k) = anchor.dot(hat2->row(j)) / tau;
      row_max = std::max({row_max, (*cos_a)(i, k), (*cos_b)(i, k)});
    }
    double acc = 0.0;
    for (Index k = 0; k < n_neg; ++k)
      acc += std::exp((*cos_a)(i, k) - row_max) + std::exp((*cos_b)(i, k) - row_max);
    (*lse)(i) = row_max + std::log(acc);
    total += -pos(i) / tau + (*lse)(i);
  }

  detail::Node* n = make_node(Matrix::Constant(1, 1, total),
                              z1.requires_grad() || z2.requires_grad());
  if (n->requires_grad) {
    detail::Node* n1 = z1.node_;
    detail::Node* n2 = z2.node_;
    IndexMatrix neg = negatives;
    n->backprop = [n1, n2, neg = std::move(neg), tau, hat1, hat2, cos_a, cos_b, lse, inv_n1,
                   inv_n2](Tape&, detail::Node& self) {
      const double up = self.grad(0, 0);
      const Index rows = hat1->rows();
      const Index n_neg = neg.cols();
      RowMatrix dh1 = RowMatrix::Zero(rows, hat1->cols());
      RowMatrix dh2 = RowMatrix::Zero(rows, hat2->cols());
      const double inv_tau = 1.0 / tau;
      for (Index i = 0; i < rows; ++i) {
        dh1.row(i) -= (up * inv_tau) * hat2->row(i);
        dh2.row(i) -= (up * inv_tau) * hat1->row(i);
        for (Index k = 0; k < n_neg; ++k) {
          const int j = neg(i, k);
          const double wa = std::exp((*cos_a)(i, k) - (*lse)(i));
          const double wb = std::exp((*cos_b)(i, k) - (*lse)(i));
          const double ca = up * wa * inv_tau;
          const double cb = up * wb * inv_tau;
          dh1.row(i) += ca * hat1->row(j) + cb * hat2->row(j);
          dh1.row(j) += ca * hat1->row(i);
          dh2.row(j) += cb * hat1->row(i);
        }
      }
      // Chain through row normalization: dz_i = (dh_i - (h_i . dh_i) h_i) / n_i.
      Matrix dz1(rows, hat1->cols());
      Matrix dz2(rows, hat2->cols());
      for (Index i = 0; i < rows; ++i) {
        dz1.row(i) = (dh1.row(i) - hat1->row(i).dot(dh1.row(i)) * hat1->row(i)) * inv_n1(i);
        dz2.row(i) = (dh2.row(i) - hat2->row(i).dot(dh2.row(i)) * hat2->row(i)) * inv_n2(i);
      }
      accum(n1, dz1);
      accum(n2, dz2);
    };
  }
  return wrap(n);
}

Tensor Tape::pair_constraint_loss(Tensor memberships, std::span<const PairConstraint> pairs,
                                  bool mean) {
  const Matrix& c = memberships.node_->value;
  for (const auto& p : pairs)
    require(p.i >= 0 && p.j >= 0 && p.i < c.rows() && p.j < c.rows() && p.i != p.j,
            "pair_constraint_loss: pair index out of range or self-pair");
  const double norm = mean && !pairs.empty() ? 1.0 / static_cast<double>(pairs.size()) : 1.0;
  double total = 0.0;
  for (const auto& p : pairs) {
    const double diff = c.row(p.i).dot(c.row(p.j)) - p.s;
    total += diff * diff;
  }
  detail::Node* n = make_node(Matrix::Constant(1, 1, total * norm), memberships.requires_grad());
  if (n->requires_grad) {
    detail::Node* nc = memberships.node_;
    std::vector<PairConstraint> owned(pairs.begin(), pairs.end());
    n->backprop = [nc, owned = std::move(owned), norm](Tape&, detail::Node& self) {
      const double up = self.grad(0, 0) * norm;
      Matrix dc = Matrix::Zero(nc->value.rows(), nc->value.cols());
      for (const auto& p : owned) {
        const double diff = nc->value.row(p.i).dot(nc->value.row(p.j)) - p.s;
        const double coef = 2.0 * up * diff;
        dc.row(p.i) += coef * nc->value.row(p.j);
        dc.row(p.j) += coef * nc->value.row(p.i);
      }
      accum(nc, dc);
    };
  }
  return wrap(n);
}

Tensor Tape::orthogonality_penalty(Tensor memberships) {
  const Matrix& c = memberships.node_->value;
  const Index k = c.cols();
  Matrix gram = c.transpose() * c;
  const double gram_norm = std::max(gram.norm(), 1e-30);
  Matrix centered = gram / gram_norm - Matrix::Identity(k, k) / std::sqrt(static_cast<double>(k));
  detail::Node* n =
      make_node(Matrix::Constant(1, 1, centered.squaredNorm()), memberships.requires_grad());
  if (n->requires_grad) {
    detail::Node* nc = memberships.node_;
    auto gram_p = std::make_shared<Matrix>(std::move(gram));
    auto centered_p = std::make_shared<Matrix>(std::move(centered));
    n->backprop = [nc, gram_p, centered_p, gram_norm](Tape&, detail::Node& self) {
      const double up = self.grad(0, 0);
      const double ag = centered_p->cwiseProduct(*gram_p).sum();
      Matrix dgram = (2.0 / gram_norm) * (*centered_p) -
                     (2.0 * ag / (gram_norm * gram_norm * gram_norm)) * (*gram_p);
      // gram is symmetric in C, so dC = C (dG + dG^T) = 2 C dG here.
      accum(nc, up * 2.0 * (nc->value * dgram));
    };
  }
  return wrap(n);
}

void Tape::backward(Tensor loss) {
  require(loss.node_ != nullptr, "backward: empty tensor");
  if (loss.rows() != 1 || loss.cols() != 1)
    throw ContractError("backward: loss must be scalar, got " + shape_of(loss.node_->value));
  if (!std::isfinite(loss.node_->value(0, 0)))
    throw NumericError("backward: loss is not finite");

  loss.node_->grad = Matrix::Constant(1, 1, 1.0);
  loss.node_->has_grad = true;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    if (it->has_grad && it->backprop) it->backprop(*this, *it);
  }
  nodes_.clear();
  sparse_pool_.clear();
}

}  // namespace secomm
