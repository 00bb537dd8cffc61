#include "secomm/self_expressive.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <sstream>

#include "secomm/adam.hpp"
#include "secomm/errors.hpp"
#include "secomm/rng.hpp"
#include "secomm/tensor.hpp"

namespace secomm {

std::uint64_t SimilarityStore::key(int i, int j) {
  const auto lo = static_cast<std::uint64_t>(std::min(i, j));
  const auto hi = static_cast<std::uint64_t>(std::max(i, j));
  return (lo << 32) | hi;
}

void SimilarityStore::insert(int i, int j, double s, int batch, bool average_duplicates) {
  require(i != j, "SimilarityStore: self-pairs are not stored");
  require(i >= 0 && j >= 0, "SimilarityStore: negative node id");
  require(s >= 0.0 && s <= 1.0, "SimilarityStore: similarity outside [0,1]");
  auto [it, fresh] = values_.try_emplace(key(i, j), Entry{s, batch});
  if (!fresh) {
    if (average_duplicates)
      it->second = Entry{0.5 * (it->second.s + s), batch};
    else
      it->second = Entry{s, batch};  // last write wins
  }
}

bool SimilarityStore::contains(int i, int j) const { return values_.count(key(i, j)) > 0; }

double SimilarityStore::at(int i, int j) const {
  auto it = values_.find(key(i, j));
  require(it != values_.end(), "SimilarityStore: pair not present");
  return it->second.s;
}

std::vector<PairConstraint> SimilarityStore::sorted_pairs() const {
  std::vector<PairConstraint> out;
  out.reserve(values_.size());
  for (const auto& [k, entry] : values_)  // std::map iterates in key order
    out.push_back({static_cast<int>(k >> 32), static_cast<int>(k & 0xffffffffULL), entry.s});
  return out;
}

std::string SimilarityStore::to_tsv() const {
  std::ostringstream os;
  os.precision(17);
  for (const auto& p : sorted_pairs()) os << p.i << '\t' << p.j << '\t' << p.s << '\n';
  return os.str();
}

std::vector<std::vector<int>> sample_batches(int num_nodes, int batch_size, int num_batches,
                                             std::uint64_t seed) {
  require(batch_size >= 1 && batch_size <= num_nodes,
          "sample_batches: batch size must be in [1, N]");
  require(num_batches >= 1, "sample_batches: need at least one batch");
  Rng rng(mix_seed(seed));
  std::vector<std::vector<int>> batches;
  batches.reserve(static_cast<std::size_t>(num_batches));
  if (static_cast<long long>(batch_size) * num_batches <= num_nodes) {
    // Disjoint batches: one global shuffle, consecutive slices.
    std::vector<int> perm(static_cast<std::size_t>(num_nodes));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (int b = 0; b < num_batches; ++b)
      batches.emplace_back(perm.begin() + static_cast<long>(b) * batch_size,
                           perm.begin() + static_cast<long>(b + 1) * batch_size);
  } else {
    for (int b = 0; b < num_batches; ++b)
      batches.push_back(sample_without_replacement(num_nodes, batch_size, rng));
  }
  return batches;
}

double self_expressive_objective(const Matrix& q, const Matrix& z, double lambda1) {
  return (z - q * z).squaredNorm() + lambda1 * q.squaredNorm();
}

namespace {

// Exact minimizer with diag(Q) = 0: per-row ridge regression with the
// self-coefficient removed, folded into one Cholesky solve via the KKT
// multiplier. With H = (ZZ^T + l1 I)^{-1} and GH = I - l1 H:
//   Q = GH - diag((GH)_ii / H_ii) H.
CoefficientMatrix solve_exact(const Matrix& z, double lambda1) {
  const Index m = z.rows();
  const Matrix gram = z * z.transpose();
  Matrix reg = gram;
  reg.diagonal().array() += lambda1;
  const Matrix h = Eigen::LLT<Matrix>(reg).solve(Matrix::Identity(m, m));
  Matrix gh = -lambda1 * h;
  gh.diagonal().array() += 1.0;
  Matrix q = gh;
  for (Index i = 0; i < m; ++i) q.row(i) -= (gh(i, i) / h(i, i)) * h.row(i);
  q.diagonal().setZero();  // exact by construction; clear rounding residue
  return {std::move(q)};
}

CoefficientMatrix solve_adam_masked(const Matrix& z, double lambda1,
                                    const AdamSolveOptions& opts) {
  const Index m = z.rows();
  Parameter q(Matrix::Zero(m, m));
  AdamOptimizer opt({&q}, AdamConfig{.learning_rate = opts.learning_rate});
  double window_start = self_expressive_objective(q.value, z, lambda1);
  for (int step = 0; step < opts.max_steps; ++step) {
    Tape tape;
    Tensor qt = tape.leaf(q);
    Tensor zt = tape.constant(z);
    Tensor residual = tape.add(zt, tape.scale(tape.matmul(qt, zt), -1.0));
    Tensor loss =
        tape.add(tape.frobenius_sq(residual), tape.scale(tape.frobenius_sq(qt), lambda1));
    const double value = loss.scalar();
    tape.backward(loss);
    opt.step();
    q.value.diagonal().setZero();
    if ((step + 1) % opts.saturation_window == 0) {
      const double rel = (window_start - value) / std::max(std::abs(window_start), 1e-30);
      if (rel < opts.saturation_rel_tol) break;
      window_start = value;
    }
  }
  return {std::move(q.value)};
}

}  // namespace

CoefficientMatrix solve_coefficients(const Matrix& batch_embeddings, double lambda1,
                                     CoefficientSolver solver, const AdamSolveOptions& adam) {
  require(batch_embeddings.rows() >= 2, "solve_coefficients: need at least two rows");
  require(lambda1 > 0.0, "solve_coefficients: lambda1 must be positive");
  switch (solver) {
    case CoefficientSolver::kExact:
      return solve_exact(batch_embeddings, lambda1);
    case CoefficientSolver::kAdamMasked:
      return solve_adam_masked(batch_embeddings, lambda1, adam);
  }
  throw ContractError("solve_coefficients: unknown solver");
}

Matrix build_similarity(const CoefficientMatrix& coeffs, int num_communities, int subspace_dim) {
  const Matrix& q = coeffs.q;
  const Index m = q.rows();
  require_shape(q.cols() == m, "build_similarity: coefficient matrix must be square");
  const int r = subspace_dim * num_communities + 1;
  require(r >= 1 && r <= m, "build_similarity: rank d*K+1 = " + std::to_string(r) +
                                " exceeds batch size " + std::to_string(m));

  // Step 1: symmetrize.
  const Matrix q_sym = 0.5 * (q + q.transpose());
  if (q_sym.cwiseAbs().maxCoeff() == 0.0) return Matrix::Zero(m, m);

  // Step 2: rank-r factorization of the symmetric matrix; eigenpairs sorted
  // by |eigenvalue|, singular values are the magnitudes.
  Eigen::SelfAdjointEigenSolver<Matrix> eig(q_sym);
  require(eig.info() == Eigen::Success, "build_similarity: eigendecomposition failed");
  std::vector<int> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double fa = std::abs(eig.eigenvalues()(a));
    const double fb = std::abs(eig.eigenvalues()(b));
    if (fa != fb) return fa > fb;
    if (eig.eigenvalues()(a) != eig.eigenvalues()(b))
      return eig.eigenvalues()(a) > eig.eigenvalues()(b);
    return a < b;
  });

  // Step 3: L = U sqrt(Sigma), rows scaled to unit norm (zero rows stay zero).
  Matrix l(m, r);
  for (int c = 0; c < r; ++c) {
    Vector u = eig.eigenvectors().col(order[static_cast<std::size_t>(c)]);
    // Deterministic sign: largest-magnitude entry is positive.
    Index arg_max = 0;
    u.cwiseAbs().maxCoeff(&arg_max);
    if (u(arg_max) < 0.0) u = -u;
    l.col(c) = u * std::sqrt(std::abs(eig.eigenvalues()(order[static_cast<std::size_t>(c)])));
  }
  for (Index i = 0; i < m; ++i) {
    const double norm = l.row(i).norm();
    if (norm > 0.0) l.row(i) /= norm;
  }

  // Step 4: clip negatives.
  const Matrix l_pos = l.cwiseMax(0.0);

  // Step 5: S = L'L'^T scaled by the largest |entry| of L, clamped into [0,1].
  const double max_abs = l.cwiseAbs().maxCoeff();
  if (max_abs == 0.0) return Matrix::Zero(m, m);
  Matrix s = (l_pos * l_pos.transpose()) / max_abs;
  s = s.cwiseMax(0.0).cwiseMin(1.0);
  return s;
}

SimilarityStore learn_similarities(const Matrix& embeddings, const SelfExpressConfig& cfg) {
  const int n = static_cast<int>(embeddings.rows());
  const int m = cfg.batch_size > 0 ? cfg.batch_size : n;
  require(cfg.num_communities >= 1, "learn_similarities: number of communities not set");
  require(cfg.subspace_dim * cfg.num_communities + 1 <= m,
          "learn_similarities: rank d*K+1 must not exceed the batch size");

  const auto batches = sample_batches(n, m, cfg.num_batches, cfg.seed);
  SimilarityStore store;
  for (std::size_t b = 0; b < batches.size(); ++b) {
    const auto& ids = batches[b];
    Matrix zb(static_cast<Index>(ids.size()), embeddings.cols());
    for (std::size_t k = 0; k < ids.size(); ++k)
      zb.row(static_cast<Index>(k)) = embeddings.row(ids[k]);
    const CoefficientMatrix q = solve_coefficients(zb, cfg.lambda1, cfg.solver, cfg.adam);
    const Matrix s = build_similarity(q, cfg.num_communities, cfg.subspace_dim);
    for (std::size_t a = 0; a < ids.size(); ++a)
      for (std::size_t c = a + 1; c < ids.size(); ++c)
        store.insert(ids[a], ids[c], s(static_cast<Index>(a), static_cast<Index>(c)),
                     static_cast<int>(b), cfg.average_duplicates);
  }
  return store;
}

std::vector<PairConstraint> filter_extreme(const SimilarityStore& store, double theta_low) {
  require(theta_low > 0.0 && theta_low <= 0.5, "filter_extreme: theta_low must be in (0, 0.5]");
  const double theta_high = 1.0 - theta_low;
  std::vector<PairConstraint> out;
  for (const auto& p : store.sorted_pairs())
    if (p.s <= theta_low || p.s >= theta_high) out.push_back(p);
  if (out.empty())
    std::cerr << "[secomm] warning: no similarities at or beyond theta_low = " << theta_low
              << "; training would have no pair constraints\n";
  return out;
}

}  // namespace secomm
