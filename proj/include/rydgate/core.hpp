#pragma once

// Dense complex linear algebra on labeled finite Hilbert spaces.
//
// Operators, states and density matrices are plain Eigen dynamic matrices;
// the HilbertSpace carries the labeling (tensor factors plus optional extra
// direct-sum states used for leakage channels).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rydgate {

using cplx = std::complex<double>;
using Operator = Eigen::MatrixXcd;
using StateVector = Eigen::VectorXcd;
using DensityMatrix = Eigen::MatrixXcd;

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;
inline constexpr cplx I_unit{0.0, 1.0};

/// Angular frequency in rad/us for a value quoted as "2pi x f MHz".
constexpr double mhz(double f) { return two_pi * f; }
/// Angular frequency in rad/us for a value quoted as "2pi x f kHz".
constexpr double khz(double f) { return two_pi * f * 1e-3; }
/// Inverse of mhz().
constexpr double to_mhz(double omega) { return omega / two_pi; }

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class HilbertSpace {
 public:
  HilbertSpace() = default;

  explicit HilbertSpace(std::vector<std::vector<std::string>> factor_labels,
                        std::vector<std::string> extra_labels = {})
      : factors_(std::move(factor_labels)), extras_(std::move(extra_labels)) {
    if (factors_.empty()) throw Error("HilbertSpace: at least one factor required");
    for (const auto& f : factors_) {
      if (f.empty()) throw Error("HilbertSpace: empty factor");
      check_unique(f, "factor");
    }
    check_unique(extras_, "extra");
  }

  std::size_t product_dim() const {
    std::size_t d = 1;
    for (const auto& f : factors_) d *= f.size();
    return d;
  }
  std::size_t dim() const { return product_dim() + extras_.size(); }
  std::size_t factor_count() const { return factors_.size(); }
  std::size_t factor_dim(std::size_t k) const { return factors_.at(k).size(); }
  const std::vector<std::string>& labels(std::size_t k) const { return factors_.at(k); }
  const std::vector<std::string>& extra_labels() const { return extras_; }

  std::size_t level(std::size_t factor, std::string_view label) const {
    const auto& f = factors_.at(factor);
    auto it = std::find(f.begin(), f.end(), label);
    if (it == f.end()) throw Error("HilbertSpace: unknown label '" + std::string(label) + "'");
    return static_cast<std::size_t>(it - f.begin());
  }
  bool has_level(std::size_t factor, std::string_view label) const {
    const auto& f = factors_.at(factor);
    return std::find(f.begin(), f.end(), label) != f.end();
  }

  /// Row-major product index, first factor most significant.
  std::size_t index(const std::vector<std::size_t>& levels) const {
    if (levels.size() != factors_.size()) throw DimensionError("HilbertSpace: wrong number of levels");
    std::size_t idx = 0;
    for (std::size_t k = 0; k < factors_.size(); ++k) {
      if (levels[k] >= factors_[k].size()) throw DimensionError("HilbertSpace: level out of range");
      idx = idx * factors_[k].size() + levels[k];
    }
    return idx;
  }
  std::size_t index(const std::vector<std::string>& labels) const {
    std::vector<std::size_t> levels(labels.size());
    if (labels.size() != factors_.size()) throw DimensionError("HilbertSpace: wrong number of labels");
    for (std::size_t k = 0; k < labels.size(); ++k) levels[k] = level(k, labels[k]);
    return index(levels);
  }
  std::size_t extra_index(std::string_view label) const {
    auto it = std::find(extras_.begin(), extras_.end(), label);
    if (it == extras_.end()) throw Error("HilbertSpace: unknown extra state '" + std::string(label) + "'");
    return product_dim() + static_cast<std::size_t>(it - extras_.begin());
  }

  std::vector<std::size_t> levels_of(std::size_t idx) const {
    std::vector<std::size_t> levels(factors_.size());
    for (std::size_t k = factors_.size(); k-- > 0;) {
      levels[k] = idx % factors_[k].size();
      idx /= factors_[k].size();
    }
    return levels;
  }

  /// "R'r" style label for product states, the extra label otherwise.
  std::string label_of(std::size_t idx) const {
    if (idx >= dim()) throw DimensionError("HilbertSpace: index out of range");
    if (idx >= product_dim()) return extras_[idx - product_dim()];
    std::string s;
    auto levels = levels_of(idx);
    for (std::size_t k = 0; k < levels.size(); ++k) s += factors_[k][levels[k]];
    return s;
  }

  /// Indices of the qubit states (labels "0"/"1" in every factor), ordered
  /// lexicographically with the first factor most significant.
  std::vector<std::size_t> computational_indices() const {
    std::vector<std::size_t> out;
    const std::size_t n = factors_.size();
    const std::size_t count = std::size_t{1} << n;
    for (std::size_t bits = 0; bits < count; ++bits) {
      std::vector<std::size_t> levels(n);
      for (std::size_t k = 0; k < n; ++k) {
        const bool one = (bits >> (n - 1 - k)) & 1U;
        levels[k] = level(k, one ? "1" : "0");
      }
      out.push_back(index(levels));
    }
    return out;
  }

  HilbertSpace with_extra(std::string label) const {
    auto extras = extras_;
    extras.push_back(std::move(label));
    return HilbertSpace(factors_, std::move(extras));
  }

  bool operator==(const HilbertSpace&) const = default;

 private:
  static void check_unique(const std::vector<std::string>& v, const char* what) {
    for (std::size_t i = 0; i < v.size(); ++i)
      for (std::size_t j = i + 1; j < v.size(); ++j)
        if (v[i] == v[j]) throw Error(std::string("HilbertSpace: duplicate ") + what + " label '" + v[i] + "'");
  }

  std::vector<std::vector<std::string>> factors_;
  std::vector<std::string> extras_;
};

inline Operator tensor_product(const Operator& a, const Operator& b) {
  if (a.rows() != a.cols() || b.rows() != b.cols()) throw DimensionError("tensor_product: operands must be square");
  const Eigen::Index da = a.rows(), db = b.rows();
  Operator out(da * db, da * db);
  for (Eigen::Index i = 0; i < da; ++i)
    for (Eigen::Index j = 0; j < da; ++j) out.block(i * db, j * db, db, db) = a(i, j) * b;
  return out;
}

inline cplx expectation_value(const Operator& op, const StateVector& state) {
  if (op.rows() != op.cols() || op.rows() != state.size())
    throw DimensionError("expectation_value: dimension mismatch");
  return state.dot(op * state);
}

inline Operator basis_op(std::size_t dim, std::size_t i, std::size_t j) {
  Operator m = Operator::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 1.0;
  return m;
}

inline StateVector basis_state(std::size_t dim, std::size_t i) {
  StateVector v = StateVector::Zero(static_cast<Eigen::Index>(dim));
  v(static_cast<Eigen::Index>(i)) = 1.0;
  return v;
}

/// Embeds a single-factor operator as I x .. x op x .. x I on the product
/// part of the space; extra states are annihilated.
inline Operator embed_local(const HilbertSpace& space, std::size_t factor, const Operator& local) {
  if (local.rows() != static_cast<Eigen::Index>(space.factor_dim(factor)) || local.cols() != local.rows())
    throw DimensionError("embed_local: operator does not match factor dimension");
  Operator acc = Operator::Identity(1, 1);
  for (std::size_t k = 0; k < space.factor_count(); ++k) {
    const auto dk = static_cast<Eigen::Index>(space.factor_dim(k));
    acc = tensor_product(acc, k == factor ? local : Operator(Operator::Identity(dk, dk)));
  }
  const auto d = static_cast<Eigen::Index>(space.dim());
  Operator out = Operator::Zero(d, d);
  out.topLeftCorner(acc.rows(), acc.cols()) = acc;
  return out;
}

/// |a><b| on one factor given by labels.
inline Operator local_transition(const HilbertSpace& space, std::size_t factor, std::string_view to,
                                 std::string_view from) {
  const auto dk = static_cast<Eigen::Index>(space.factor_dim(factor));
  Operator local = Operator::Zero(dk, dk);
  local(static_cast<Eigen::Index>(space.level(factor, to)), static_cast<Eigen::Index>(space.level(factor, from))) = 1.0;
  return embed_local(space, factor, local);
}

inline double hermiticity_residual(const Operator& m) { return (m - m.adjoint()).cwiseAbs().maxCoeff(); }

inline bool is_hermitian(const Operator& m, double tol = 1e-12) {
  return m.rows() == m.cols() && hermiticity_residual(m) <= tol;
}

/// Smallest eigenvalue of the Hermitian part.
inline double min_eigenvalue(const Operator& m) {
  const Operator h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<Operator> solver(h, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

inline Eigen::VectorXd hermitian_eigenvalues(const Operator& m) {
  Eigen::SelfAdjointEigenSolver<Operator> solver(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly);
  return solver.eigenvalues();
}

struct DensityDiagnostics {
  double trace = 0.0;
  double hermiticity = 0.0;
  double min_eigenvalue = 0.0;
};

inline DensityDiagnostics diagnose(const DensityMatrix& rho) {
  return {rho.trace().real(), hermiticity_residual(rho), min_eigenvalue(rho)};
}

/// Checks the physical-state invariants; returns an empty string when all
/// hold, a description of the first violation otherwise.
inline std::string density_violation(const DensityMatrix& rho, double expected_trace = 1.0,
                                     double herm_tol = 1e-10, double trace_tol = 1e-8, double eig_tol = 1e-8) {
  const auto d = diagnose(rho);
  if (d.hermiticity > herm_tol) return "hermiticity residual " + std::to_string(d.hermiticity);
  if (std::abs(d.trace - expected_trace) > trace_tol) return "trace " + std::to_string(d.trace);
  if (d.min_eigenvalue < -eig_tol) return "negative eigenvalue " + std::to_string(d.min_eigenvalue);
  return {};
}

/// Restricts a full-space operator to the qubit block (trace deficit of a
/// density matrix is the leaked population).
inline Operator project_to_computational(const Operator& rho, const HilbertSpace& space) {
  if (rho.rows() != static_cast<Eigen::Index>(space.dim()) || rho.cols() != rho.rows())
    throw DimensionError("project_to_computational: dimension mismatch");
  const auto idx = space.computational_indices();
  const auto n = static_cast<Eigen::Index>(idx.size());
  Operator out(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b)
      out(a, b) = rho(static_cast<Eigen::Index>(idx[a]), static_cast<Eigen::Index>(idx[b]));
  return out;
}

/// Inverse of project_to_computational: places a qubit-block operator into
/// the full space, zero elsewhere.
inline Operator embed_computational(const Operator& block, const HilbertSpace& space) {
  const auto idx = space.computational_indices();
  if (block.rows() != static_cast<Eigen::Index>(idx.size()) || block.cols() != block.rows())
    throw DimensionError("embed_computational: dimension mismatch");
  const auto d = static_cast<Eigen::Index>(space.dim());
  Operator out = Operator::Zero(d, d);
  for (std::size_t a = 0; a < idx.size(); ++a)
    for (std::size_t b = 0; b < idx.size(); ++b)
      out(static_cast<Eigen::Index>(idx[a]), static_cast<Eigen::Index>(idx[b])) =
          block(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
  return out;
}

namespace pauli {
inline Operator identity() { return Operator::Identity(2, 2); }
inline Operator x() {
  Operator m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}
inline Operator y() {
  Operator m(2, 2);
  m << 0, -I_unit, I_unit, 0;
  return m;
}
inline Operator z() {
  Operator m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}
inline std::vector<Operator> all() { return {identity(), x(), y(), z()}; }
}  // namespace pauli

}  // namespace rydgate
