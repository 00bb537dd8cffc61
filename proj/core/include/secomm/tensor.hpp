#pragma once

#include <deque>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "secomm/constraints.hpp"
#include "secomm/matrix.hpp"

namespace secomm {

class Tape;

/// A trainable matrix. Gradients accumulate into `grad` when a Tape that
/// references the parameter runs backward; the optimizer consumes and
/// clears them.
struct Parameter {
  Matrix value;
  Matrix grad;

  Parameter() = default;
  explicit Parameter(Matrix v)
      : value(std::move(v)), grad(Matrix::Zero(value.rows(), value.cols())) {}

  void zero_grad() { grad.setZero(); }
};

namespace detail {

struct Node {
  Matrix value;
  Matrix grad;  // allocated lazily on first contribution
  bool requires_grad = false;
  bool has_grad = false;
  Parameter* bound = nullptr;                 // leaves only
  std::function<void(Tape&, Node&)> backprop;  // pulls grad, pushes into inputs
};

}  // namespace detail

/// Handle to a node on a Tape. Valid until Tape::backward (which clears the
/// tape) or the tape's destruction, whichever comes first.
class Tensor {
 public:
  Tensor() = default;

  const Matrix& value() const { return node_->value; }
  Index rows() const { return node_->value.rows(); }
  Index cols() const { return node_->value.cols(); }
  bool requires_grad() const { return node_->requires_grad; }

  /// Value of a 1x1 tensor.
  double scalar() const;

 private:
  friend class Tape;
  explicit Tensor(detail::Node* n) : node_(n) {}
  detail::Node* node_ = nullptr;
};

/// Indices of the negative samples per anchor node: entry (i, k) is the k-th
/// negative for node i.
using IndexMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Records a forward pass of differentiable matrix operations in topological
/// order and replays it in reverse to accumulate gradients.
///
/// Single-threaded by design; independent tapes may run concurrently.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // ----- leaves ------------------------------------------------------------
  Tensor leaf(Parameter& p);
  Tensor constant(Matrix value);

  /// Takes ownership of a sparse matrix so ops can reference it for the
  /// lifetime of the tape.
  const SparseMatrix& intern(SparseMatrix m);

  // ----- primitive operations ----------------------------------------------
  Tensor spmm(const SparseMatrix& lhs, Tensor rhs);
  Tensor matmul(Tensor a, Tensor b);
  /// a^T * b without materializing the transpose.
  Tensor transpose_matmul(Tensor a, Tensor b);
  Tensor add(Tensor a, Tensor b);
  /// Adds a 1 x C bias row to every row of a.
  Tensor add_row_bias(Tensor a, Tensor bias);
  Tensor scale(Tensor a, double factor);
  Tensor relu(Tensor a);
  Tensor row_softmax(Tensor a);
  /// Row-paired cosine similarity; returns N x 1. Norms are guarded with
  /// eps = 1e-12 inside the square root so zeroed rows stay finite.
  Tensor cosine_rows(Tensor a, Tensor b);
  /// Row-wise log(sum(exp(x))), numerically stable; returns N x 1.
  Tensor log_sum_exp(Tensor a);
  /// Squared Frobenius norm; returns 1 x 1.
  Tensor frobenius_sq(Tensor a);
  Tensor gather_rows(Tensor a, std::vector<int> indices);
  Tensor hstack(const std::vector<Tensor>& parts);
  /// Sum of all entries; returns 1 x 1.
  Tensor sum(Tensor a);

  // ----- fused objectives ----------------------------------------------------
  // Composable routes through the primitives above exist for all three (the
  // tests use them as cross-checks); the fused forms avoid materializing the
  // N x N cosine matrix and the gathered pair rows.

  /// Noise-contrastive embedding loss over two views, anchored at view 1:
  /// sum_i [ -cos(z1_i, z2_i)/tau + log sum_{j in neg_i} (e^{cos(z1_i,z1_j)/tau}
  ///         + e^{cos(z1_i,z2_j)/tau}) ].
  Tensor contrastive_nce(Tensor z1, Tensor z2, const IndexMatrix& negatives, double tau);

  /// sum over constraints of (c_i . c_j - s_ij)^2, optionally averaged.
  Tensor pair_constraint_loss(Tensor memberships, std::span<const PairConstraint> pairs,
                              bool mean);

  /// || C^T C / ||C^T C||_F - I_K / sqrt(K) ||_F^2 ; returns 1 x 1.
  Tensor orthogonality_penalty(Tensor memberships);

  // ----- reverse pass --------------------------------------------------------

  /// Accumulates d(loss)/d(parameter) into every bound Parameter's grad.
  /// The loss must be a scalar produced through this tape. Gradients from
  /// repeated uses of a tensor sum. Clears the tape afterward, invalidating
  /// all Tensor handles.
  void backward(Tensor loss);

  std::size_t size() const { return nodes_.size(); }

 private:
  friend class Tensor;

  detail::Node* make_node(Matrix value, bool requires_grad);
  Tensor wrap(detail::Node* n) { return Tensor(n); }

  // Lazily initializes and accumulates a gradient contribution.
  template <typename Expr>
  static void accum(detail::Node* n, const Expr& g) {
    if (!n->requires_grad) return;
    if (!n->has_grad) {
      n->grad = g;
      n->has_grad = true;
    } else {
      n->grad += g;
    }
  }

  std::deque<detail::Node> nodes_;
  std::deque<SparseMatrix> sparse_pool_;
};

}  // namespace secomm
