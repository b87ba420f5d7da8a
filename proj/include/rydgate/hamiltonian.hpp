#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <utility>
#include <vector>

#include "rydgate/core.hpp"

namespace rydgate {

/// H(t) = H_static + sum_k [c_k(t) M_k + h.c.] over a fixed sparsity pattern.
///
/// Evaluation writes one value per pattern slot, which is what the
/// propagators consume; dense() is for inspection and tests.
class TimeDependentHamiltonian {
 public:
  using Coefficient = std::function<cplx(double)>;

  struct Slot {
    std::uint32_t row;
    std::uint32_t col;
  };

  TimeDependentHamiltonian() = default;
  explicit TimeDependentHamiltonian(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  const std::vector<Slot>& pattern() const { return pattern_; }

  /// Adds a constant matrix (taken as-is, no Hermitian completion).
  void add_static(const Operator& m) {
    check(m);
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j)
        if (m(i, j) != cplx{}) static_dense_[slot(i, j)] += m(i, j);
  }

  void add_static_entry(std::size_t i, std::size_t j, cplx v) { static_dense_[slot(i, j)] += v; }

  /// Adds c(t) M, plus conj(c(t)) M^dagger when `with_conjugate`.
  void add_term(const Operator& m, Coefficient c, bool with_conjugate = true) {
    check(m);
    Term term;
    term.coeff = std::move(c);
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        if (m(i, j) == cplx{}) continue;
        term.direct.push_back({slot(i, j), m(i, j)});
        if (with_conjugate) term.conjugate.push_back({slot(j, i), std::conj(m(i, j))});
      }
    terms_.push_back(std::move(term));
  }

  /// Real time-dependent coefficient multiplying a Hermitian matrix.
  void add_real_term(const Operator& m, std::function<double(double)> c) {
    add_term(m, [c = std::move(c)](double t) { return cplx{c(t), 0.0}; }, false);
  }

  void evaluate(double t, std::vector<cplx>& values) const {
    values = static_dense_;
    for (const auto& term : terms_) {
      const cplx c = term.coeff(t);
      if (c == cplx{}) continue;
      for (const auto& [s, v] : term.direct) values[s] += c * v;
      const cplx cc = std::conj(c);
      for (const auto& [s, v] : term.conjugate) values[s] += cc * v;
    }
  }

  Operator dense(double t) const {
    std::vector<cplx> values;
    evaluate(t, values);
    const auto d = static_cast<Eigen::Index>(dim_);
    Operator h = Operator::Zero(d, d);
    for (std::size_t k = 0; k < pattern_.size(); ++k) h(pattern_[k].row, pattern_[k].col) += values[k];
    return h;
  }

  Operator operator()(double t) const { return dense(t); }

  /// Times where a coefficient may jump; propagators never step across them.
  void add_breakpoints(const std::vector<double>& b) { breakpoints_.insert(breakpoints_.end(), b.begin(), b.end()); }
  const std::vector<double>& breakpoints() const { return breakpoints_; }

  /// Upper bound on ||H(t)|| (max absolute row sum) over sample times.
  double norm_bound(double t0, double t1, std::size_t samples = 64) const {
    std::vector<cplx> values;
    double best = 0.0;
    for (std::size_t k = 0; k <= samples; ++k) {
      const double t = t0 + (t1 - t0) * static_cast<double>(k) / static_cast<double>(samples);
      evaluate(t, values);
      std::vector<double> rows(dim_, 0.0);
      for (std::size_t s = 0; s < pattern_.size(); ++s) rows[pattern_[s].row] += std::abs(values[s]);
      for (double r : rows) best = std::max(best, r);
    }
    return best;
  }

 private:
  struct Term {
    Coefficient coeff;
    std::vector<std::pair<std::size_t, cplx>> direct;
    std::vector<std::pair<std::size_t, cplx>> conjugate;
  };

  void check(const Operator& m) const {
    if (m.rows() != static_cast<Eigen::Index>(dim_) || m.cols() != m.rows())
      throw DimensionError("TimeDependentHamiltonian: operator dimension mismatch");
  }

  std::size_t slot(Eigen::Index i, Eigen::Index j) { return slot(static_cast<std::size_t>(i), static_cast<std::size_t>(j)); }
  std::size_t slot(std::size_t i, std::size_t j) {
    if (i >= dim_ || j >= dim_) throw DimensionError("TimeDependentHamiltonian: index out of range");
    auto key = std::make_pair(i, j);
    auto it = index_.find(key);
    if (it != index_.end()) return it->second;
    const std::size_t s = pattern_.size();
    index_.emplace(key, s);
    pattern_.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j)});
    static_dense_.push_back(cplx{});
    return s;
  }

  std::size_t dim_ = 0;
  std::vector<Slot> pattern_;
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> index_;
  std::vector<cplx> static_dense_;
  std::vector<Term> terms_;
  std::vector<double> breakpoints_;
};

}  // namespace rydgate
