#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>
#include <unsupported/Eigen/IterativeSolvers>
#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <set>
#include <spdlog/spdlog.h>

#include "ttlcache/errors.hpp"
#include "ttlcache/map.hpp"

namespace ttl {

LabeledMap empty_map() {
  LabeledMap m;
  m.d0.resize(1, 1);
  m.d1.resize(1, 1);
  m.labels.push_back({});
  return m;
}

SpMat sparse_from_dense(const Eigen::MatrixXd& m) {
  std::vector<Triplet> t;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (m(i, j) != 0.0) t.emplace_back(i, j, m(i, j));
  SpMat s(m.rows(), m.cols());
  s.setFromTriplets(t.begin(), t.end());
  return s;
}

std::vector<Violation> validate_map(const LabeledMap& m, const NumericSettings& s) {
  std::vector<Violation> v;
  const auto n = static_cast<Eigen::Index>(m.labels.size());
  if (n < 1) {
    v.push_back({"empty state space", 0, 0.0});
    return v;
  }
  if (m.d0.rows() != n || m.d0.cols() != n || m.d1.rows() != n || m.d1.cols() != n) {
    v.push_back({"dimension mismatch", 0,
                 static_cast<double>(std::max({m.d0.rows(), m.d0.cols(), m.d1.rows(), m.d1.cols()}))});
    return v;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    double row = 0.0;
    double scale = 0.0;
    for (SpMat::InnerIterator it(m.d0, i); it; ++it) {
      row += it.value();
      scale = std::max(scale, std::abs(it.value()));
      if (it.col() == i) {
        if (it.value() > 0.0) v.push_back({"positive hidden diagonal", static_cast<std::size_t>(i), it.value()});
      } else if (it.value() < 0.0) {
        v.push_back({"negative hidden rate", static_cast<std::size_t>(i), it.value()});
      }
    }
    for (SpMat::InnerIterator it(m.d1, i); it; ++it) {
      row += it.value();
      scale = std::max(scale, std::abs(it.value()));
      if (it.value() < 0.0) v.push_back({"negative active rate", static_cast<std::size_t>(i), it.value()});
    }
    if (std::abs(row) > s.rowSumTol * std::max(1.0, scale))
      v.push_back({"row sum nonzero", static_cast<std::size_t>(i), row});
  }
  std::set<StateLabel> seen;
  for (std::size_t i = 0; i < m.labels.size(); ++i)
    if (!seen.insert(m.labels[i]).second) v.push_back({"duplicate label", i, 0.0});
  return v;
}

namespace {

void kron_sum_into(const SpMat& a, const SpMat& b, std::vector<Triplet>& out) {
  const Eigen::Index na = a.rows();
  const Eigen::Index nb = b.rows();
  for (Eigen::Index i = 0; i < na; ++i)
    for (SpMat::InnerIterator it(a, i); it; ++it)
      for (Eigen::Index k = 0; k < nb; ++k) out.emplace_back(i * nb + k, it.col() * nb + k, it.value());
  for (Eigen::Index i = 0; i < na; ++i)
    for (Eigen::Index k = 0; k < nb; ++k)
      for (SpMat::InnerIterator it(b, k); it; ++it) out.emplace_back(i * nb + k, i * nb + it.col(), it.value());
}

}  // namespace

LabeledMap kronecker_sum(const LabeledMap& m1, const LabeledMap& m2, const NumericSettings& s) {
  const std::size_t n1 = m1.size();
  const std::size_t n2 = m2.size();
  if (n1 != 0 && n2 > s.stateCap / n1) throw CapacityError(n1 * n2, s.stateCap);
  if (n1 * n2 > s.stateCap) throw CapacityError(n1 * n2, s.stateCap);
  const auto n = static_cast<Eigen::Index>(n1 * n2);

  LabeledMap r;
  std::vector<Triplet> t;
  kron_sum_into(m1.d0, m2.d0, t);
  r.d0.resize(n, n);
  r.d0.setFromTriplets(t.begin(), t.end());
  t.clear();
  kron_sum_into(m1.d1, m2.d1, t);
  r.d1.resize(n, n);
  r.d1.setFromTriplets(t.begin(), t.end());
  r.d0.prune(0.0);
  r.d1.prune(0.0);

  r.labels.reserve(n1 * n2);
  for (const auto& a : m1.labels)
    for (const auto& b : m2.labels) {
      StateLabel l = a;
      l.caches.insert(l.caches.end(), b.caches.begin(), b.caches.end());
      l.arrivalPhases.insert(l.arrivalPhases.end(), b.arrivalPhases.begin(), b.arrivalPhases.end());
      r.labels.push_back(std::move(l));
    }
  r.caches = m1.caches;
  r.caches.insert(r.caches.end(), m2.caches.begin(), m2.caches.end());
  r.groups = m1.groups;
  r.groups.insert(r.groups.end(), m2.groups.begin(), m2.groups.end());
  return r;
}

void recompute_diagonal(SpMat& d0, const SpMat& d1) {
  const Eigen::Index n = d0.rows();
  std::vector<Triplet> t;
  t.reserve(d0.nonZeros() + n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double out = 0.0;
    for (SpMat::InnerIterator it(d0, i); it; ++it) {
      if (it.col() == i || it.value() == 0.0) continue;
      out += it.value();
      t.emplace_back(i, it.col(), it.value());
    }
    for (SpMat::InnerIterator it(d1, i); it; ++it) out += it.value();
    if (out != 0.0) t.emplace_back(i, i, -out);
  }
  SpMat r(n, n);
  r.setFromTriplets(t.begin(), t.end());
  d0 = std::move(r);
}

LabeledMap scale_rates(const LabeledMap& m, double c) {
  LabeledMap r = m;
  r.d0 *= c;
  r.d1 *= c;
  return r;
}

namespace {

// Strongly connected components of the transition graph (iterative Tarjan).
std::vector<int> scc(const SpMat& q, int& count) {
  const int n = static_cast<int>(q.rows());
  std::vector<int> index(n, -1), low(n, 0), comp(n, -1), stack;
  std::vector<char> onStack(n, 0);
  struct Frame {
    int v;
    SpMat::InnerIterator it;
  };
  int next = 0;
  count = 0;
  for (int root = 0; root < n; ++root) {
    if (index[root] >= 0) continue;
    std::vector<Frame> call;
    call.push_back({root, SpMat::InnerIterator(q, root)});
    index[root] = low[root] = next++;
    stack.push_back(root);
    onStack[root] = 1;
    while (!call.empty()) {
      auto& f = call.back();
      bool descended = false;
      for (; f.it; ++f.it) {
        int w = static_cast<int>(f.it.col());
        if (w == f.v || f.it.value() <= 0.0) continue;
        if (index[w] < 0) {
          index[w] = low[w] = next++;
          stack.push_back(w);
          onStack[w] = 1;
          ++f.it;
          call.push_back({w, SpMat::InnerIterator(q, w)});
          descended = true;
          break;
        }
        if (onStack[w]) low[f.v] = std::min(low[f.v], index[w]);
      }
      if (descended) continue;
      int v = f.v;
      if (low[v] == index[v]) {
        int w;
        do {
          w = stack.back();
          stack.pop_back();
          onStack[w] = 0;
          comp[w] = count;
        } while (w != v);
        ++count;
      }
      call.pop_back();
      if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[v]);
    }
  }
  return comp;
}

}  // namespace

SteadyState steady_state(const LabeledMap& m, const NumericSettings& s) {
  const Eigen::Index n = static_cast<Eigen::Index>(m.size());
  if (n == 1) return {Eigen::VectorXd::Ones(1)};
  SpMat q = m.d0 + m.d1;
  q.makeCompressed();

  int ncomp = 0;
  auto comp = scc(q, ncomp);
  std::vector<char> leaves(ncomp, 1);
  for (Eigen::Index i = 0; i < n; ++i)
    for (SpMat::InnerIterator it(q, i); it; ++it)
      if (it.col() != i && it.value() > 0.0 && comp[i] != comp[it.col()]) leaves[comp[i]] = 0;
  int closed = 0;
  int closedId = -1;
  for (int c = 0; c < ncomp; ++c)
    if (leaves[c]) {
      ++closed;
      closedId = c;
    }
  if (closed != 1)
    throw ReducibleChainError(fmt::format("generator has {} recurrent classes; steady state is not unique", closed));

  // pi Q = 0 with one balance equation replaced by normalization.
  Eigen::Index replaced = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    if (comp[i] == closedId) {
      replaced = i;
      break;
    }
  std::vector<Triplet> t;
  t.reserve(q.nonZeros() + n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (SpMat::InnerIterator it(q, i); it; ++it)
      if (it.col() != replaced) t.emplace_back(it.col(), i, it.value());
  for (Eigen::Index i = 0; i < n; ++i) t.emplace_back(replaced, i, 1.0);
  Eigen::SparseMatrix<double> a(n, n);
  a.setFromTriplets(t.begin(), t.end());
  a.makeCompressed();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs(replaced) = 1.0;

  if (static_cast<std::size_t>(n) <= s.denseConditionMax) {
    Eigen::MatrixXd dense(a);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(dense);
    double rc = lu.rcond();
    if (!(rc > 1.0 / s.conditionLimit))
      throw NumericalError(fmt::format("steady-state system is ill-conditioned (condition estimate {:.3g})",
                                       rc > 0 ? 1.0 / rc : INFINITY));
  }
  Eigen::VectorXd pi;
  bool solved = false;
  // Sparse LU fill-in explodes on large Kronecker-structured chains; Jacobi-preconditioned
  // GMRES converges in a few hundred iterations there. LU stays the fallback.
  if (static_cast<std::size_t>(n) > s.directSolveMax) {
    Eigen::GMRES<Eigen::SparseMatrix<double>, Eigen::DiagonalPreconditioner<double>> it;
    it.set_restart(200);
    it.setTolerance(1e-14);
    it.setMaxIterations(20000);
    it.compute(a);
    pi = it.solve(rhs);
    solved = it.info() == Eigen::Success && pi.allFinite();
    if (!solved) spdlog::info("GMRES did not converge on {} states, falling back to sparse LU", n);
  }
  if (!solved) {
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> solver;
    solver.compute(a);
    if (solver.info() != Eigen::Success) throw NumericalError("steady-state factorization failed: " + solver.lastErrorMessage());
    pi = solver.solve(rhs);
    if (solver.info() != Eigen::Success || !pi.allFinite()) throw NumericalError("steady-state solve failed");
  }

  double maxRate = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (SpMat::InnerIterator it(q, i); it; ++it) maxRate = std::max(maxRate, std::abs(it.value()));
  for (Eigen::Index i = 0; i < n; ++i) {
    if (pi(i) < -1e-10) throw NumericalError(fmt::format("negative steady-state probability {} at state {}", pi(i), i));
    if (pi(i) < 0.0) pi(i) = 0.0;
  }
  pi /= pi.sum();
  Eigen::VectorXd res = (pi.transpose() * q).transpose();
  double worst = res.cwiseAbs().maxCoeff();
  if (worst > s.residualTol * std::max(1.0, maxRate))
    throw NumericalError(fmt::format("steady-state residual {:.3g} exceeds tolerance", worst));
  return {pi};
}

double event_rate(const LabeledMap& m, const SteadyState& ss) {
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(m.size()));
  double r = ss.pi.dot(m.d1 * ones);
  return std::max(0.0, r);
}

}  // namespace ttl
