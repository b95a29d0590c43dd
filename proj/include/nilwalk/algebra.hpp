#ifndef NILWALK__ALGEBRA_HPP_
#define NILWALK__ALGEBRA_HPP_

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"

namespace nilwalk {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Coordinates over the full basis of the algebra, ordered layer by layer.
using AlgebraVector = Vector;

/// Which group law to use: the original one, or the one of the limit group
/// (whose bracket keeps only the graded part of the structure constants).
enum class Product { original, limit };

/// One structure constant: [X_i, X_j] has coefficient `value` on X_k.
struct BracketEntry
{
  int i;
  int j;
  int k;
  double value;
};

/**
 * @brief Nilpotent Lie algebra with a fixed layer decomposition
 * g = g(1) + ... + g(r).
 *
 * The bracket table must be compatible with the filtration: the bracket of a
 * layer-a and a layer-b basis vector may only have support in layers >= a+b.
 * This makes the algebra nilpotent of step at most r, and makes the graded
 * part of the table (support exactly in layer a+b) a stratified Lie algebra,
 * the one of the limit group.
 */
class StratifiedAlgebra
{
public:
  static constexpr int max_supported_step = 4;

  StratifiedAlgebra(std::vector<int> layer_dims, const std::vector<BracketEntry> & brackets)
      : layer_dims_(std::move(layer_dims))
  {
    if (layer_dims_.empty()) { throw InvalidAlgebra("at least one layer is required"); }
    for (int d : layer_dims_) {
      if (d <= 0) { throw InvalidAlgebra("layer dimensions must be positive"); }
    }
    offsets_.resize(layer_dims_.size() + 1, 0);
    for (std::size_t l = 0; l < layer_dims_.size(); ++l) {
      offsets_[l + 1] = offsets_[l] + layer_dims_[l];
      for (int m = 0; m < layer_dims_[l]; ++m) { layer_of_.push_back(static_cast<int>(l) + 1); }
    }
    dim_ = offsets_.back();
    table_.assign(static_cast<std::size_t>(dim_) * dim_ * dim_, 0.0);
    std::vector<char> assigned(table_.size(), 0);

    for (const auto & b : brackets) {
      if (b.i < 0 || b.j < 0 || b.k < 0 || b.i >= dim_ || b.j >= dim_ || b.k >= dim_) {
        throw InvalidAlgebra("bracket entry index out of range: (" + std::to_string(b.i) + ", "
                             + std::to_string(b.j) + ", " + std::to_string(b.k) + ")");
      }
      if (!std::isfinite(b.value)) { throw InvalidAlgebra("non-finite structure constant"); }
      if (b.i == b.j) {
        if (b.value != 0.0) { throw InvalidAlgebra("antisymmetry violated: [X_i, X_i] != 0"); }
        continue;
      }
      set_entry(assigned, b.i, b.j, b.k, b.value);
      set_entry(assigned, b.j, b.i, b.k, -b.value);
    }

    for (int i = 0; i < dim_; ++i) {
      for (int j = 0; j < dim_; ++j) {
        for (int k = 0; k < dim_; ++k) {
          const double c = at(i, j, k);
          if (c == 0.0) { continue; }
          const int target = layer_of_[i] + layer_of_[j];
          if (layer_of_[k] < target) {
            throw InvalidAlgebra("bracket of layers " + std::to_string(layer_of_[i]) + " and "
                                 + std::to_string(layer_of_[j]) + " has support in layer "
                                 + std::to_string(layer_of_[k]));
          }
          entries_.push_back({i, j, k, c});
          if (layer_of_[k] == target) { graded_entries_.push_back({i, j, k, c}); }
        }
      }
    }
    check_jacobi();
  }

  static StratifiedAlgebra abelian(int d) { return StratifiedAlgebra({d}, {}); }

  /// The 3-dimensional Heisenberg algebra, [X, Y] = Z.
  static StratifiedAlgebra heisenberg() { return StratifiedAlgebra({2, 1}, {{0, 1, 2, 1.0}}); }

  int dim() const { return dim_; }
  int step() const { return static_cast<int>(layer_dims_.size()); }
  int first_dim() const { return layer_dims_.front(); }
  const std::vector<int> & layer_dims() const { return layer_dims_; }

  /// 1-based layer of basis index `index`.
  int layer_of(int index) const { return layer_of_.at(index); }
  /// Offset of the first basis vector of the 1-based layer `layer`.
  int layer_begin(int layer) const { return offsets_.at(layer - 1); }

  double constant(int i, int j, int k) const { return at(i, j, k); }

  const std::vector<BracketEntry> & entries(Product p = Product::original) const
  {
    return p == Product::original ? entries_ : graded_entries_;
  }

  /// Entries with i < j; the others follow by antisymmetry.
  std::vector<BracketEntry> generating_entries() const
  {
    std::vector<BracketEntry> out;
    for (const auto & e : entries_) {
      if (e.i < e.j) { out.push_back(e); }
    }
    return out;
  }

  bool is_abelian() const { return entries_.empty(); }

  /// True when the table already equals its graded part.
  bool is_graded() const { return entries_.size() == graded_entries_.size(); }

  void check_vector(const AlgebraVector & v, const char * what = "vector") const
  {
    if (v.size() != dim_) {
      throw DimensionMismatch(std::string(what) + " has length " + std::to_string(v.size())
                              + ", algebra dimension is " + std::to_string(dim_));
    }
  }

  void bracket_into(const AlgebraVector & a, const AlgebraVector & b, AlgebraVector & out,
                    Product p = Product::original) const
  {
    out.setZero(dim_);
    for (const auto & e : entries(p)) { out[e.k] += e.value * a[e.i] * b[e.j]; }
  }

  AlgebraVector bracket(const AlgebraVector & a, const AlgebraVector & b,
                        Product p = Product::original) const
  {
    check_vector(a);
    check_vector(b);
    AlgebraVector out(dim_);
    bracket_into(a, b, out, p);
    return out;
  }

  /// The algebra of the limit group: same layers, graded bracket table.
  StratifiedAlgebra limit_algebra() const
  {
    std::vector<BracketEntry> graded;
    for (const auto & e : graded_entries_) {
      if (e.i < e.j) { graded.push_back(e); }
    }
    return StratifiedAlgebra(layer_dims_, graded);
  }

  /// Layer slice Z^(k) of a coordinate vector, k 1-based.
  auto layer(const AlgebraVector & z, int k) const
  {
    return z.segment(layer_begin(k), layer_dims_.at(k - 1));
  }
  auto layer(AlgebraVector & z, int k) const
  {
    return z.segment(layer_begin(k), layer_dims_.at(k - 1));
  }

  /// First-layer vector embedded into the full algebra with zero higher layers.
  AlgebraVector embed_first_layer(const Vector & v) const
  {
    if (v.size() != first_dim()) {
      throw DimensionMismatch("first-layer vector has length " + std::to_string(v.size())
                              + ", expected " + std::to_string(first_dim()));
    }
    AlgebraVector z = AlgebraVector::Zero(dim_);
    z.head(first_dim()) = v;
    return z;
  }

private:
  double & at(int i, int j, int k)
  {
    return table_[(static_cast<std::size_t>(i) * dim_ + j) * dim_ + k];
  }
  double at(int i, int j, int k) const
  {
    return table_[(static_cast<std::size_t>(i) * dim_ + j) * dim_ + k];
  }

  void set_entry(std::vector<char> & assigned, int i, int j, int k, double value)
  {
    const std::size_t idx = (static_cast<std::size_t>(i) * dim_ + j) * dim_ + k;
    if (assigned[idx] && table_[idx] != value) {
      throw InvalidAlgebra("conflicting structure constants for (" + std::to_string(i) + ", "
                           + std::to_string(j) + ", " + std::to_string(k) + ")");
    }
    assigned[idx] = 1;
    table_[idx]   = value;
  }

  void check_jacobi() const
  {
    double scale = 1.0;
    for (double c : table_) { scale = std::max(scale, c * c); }
    const double tol = 1e-12 * scale;
    for (int i = 0; i < dim_; ++i) {
      for (int j = i + 1; j < dim_; ++j) {
        for (int l = j + 1; l < dim_; ++l) {
          for (int m = 0; m < dim_; ++m) {
            double s = 0.0;
            for (int q = 0; q < dim_; ++q) {
              s += at(i, j, q) * at(q, l, m) + at(j, l, q) * at(q, i, m)
                 + at(l, i, q) * at(q, j, m);
            }
            if (std::abs(s) > tol) {
              throw InvalidAlgebra("Jacobi identity fails on basis triple (" + std::to_string(i)
                                   + ", " + std::to_string(j) + ", " + std::to_string(l) + ")");
            }
          }
        }
      }
    }
  }

  std::vector<int> layer_dims_;
  std::vector<int> offsets_;
  std::vector<int> layer_of_;
  int dim_{0};
  std::vector<double> table_;
  std::vector<BracketEntry> entries_;
  std::vector<BracketEntry> graded_entries_;
};

/// Element exp(Z) of the simply connected group, stored by Z = log(g).
struct GroupElement
{
  AlgebraVector log;

  static GroupElement identity(int dim) { return {AlgebraVector::Zero(dim)}; }
  static GroupElement exp(AlgebraVector z) { return {std::move(z)}; }

  /// Xi = log(g) restricted to the first layer.
  auto first_layer(int d1) const { return log.head(d1); }

  friend bool operator==(const GroupElement & a, const GroupElement & b)
  {
    return a.log.size() == b.log.size() && a.log == b.log;
  }
};

/**
 * Baker-Campbell-Hausdorff product in exponential coordinates, truncated at
 * the step of the algebra (exact for nilpotent algebras of step <= 4).
 *
 * Holds scratch vectors, so repeated products do not allocate. Not thread
 * safe; give each worker its own instance.
 */
class BchEvaluator
{
public:
  explicit BchEvaluator(const StratifiedAlgebra & alg, Product product = Product::original)
      : alg_(&alg), product_(product), step_(alg.step())
  {
    if (step_ > StratifiedAlgebra::max_supported_step) {
      throw UnsupportedStep("step " + std::to_string(step_) + " exceeds the supported maximum of "
                            + std::to_string(StratifiedAlgebra::max_supported_step));
    }
    const int n = alg.dim();
    xy_.setZero(n);
    xxy_.setZero(n);
    yxy_.setZero(n);
    yxxy_.setZero(n);
    trivial_ = alg.entries(product).empty();
  }

  /// out = log(exp(x) exp(y)); `out` must not alias x or y.
  void product_into(const AlgebraVector & x, const AlgebraVector & y, AlgebraVector & out)
  {
    out = x + y;
    if (trivial_ || step_ < 2) { return; }
    alg_->bracket_into(x, y, xy_, product_);
    out += 0.5 * xy_;
    if (step_ < 3) { return; }
    alg_->bracket_into(x, xy_, xxy_, product_);
    alg_->bracket_into(y, xy_, yxy_, product_);
    out += (xxy_ - yxy_) / 12.0;
    if (step_ < 4) { return; }
    alg_->bracket_into(y, xxy_, yxxy_, product_);
    out -= yxxy_ / 24.0;
  }

  /// In-place right multiplication: acc <- log(exp(acc) exp(y)).
  void right_multiply(AlgebraVector & acc, const AlgebraVector & y)
  {
    tmp_.resize(acc.size());
    product_into(acc, y, tmp_);
    acc.swap(tmp_);
  }

  GroupElement operator()(const GroupElement & a, const GroupElement & b)
  {
    alg_->check_vector(a.log, "left factor");
    alg_->check_vector(b.log, "right factor");
    GroupElement c{AlgebraVector(alg_->dim())};
    product_into(a.log, b.log, c.log);
    return c;
  }

private:
  const StratifiedAlgebra * alg_;
  Product product_;
  int step_;
  bool trivial_{false};
  AlgebraVector xy_, xxy_, yxy_, yxxy_, tmp_;
};

inline GroupElement bch_product(const StratifiedAlgebra & alg, const GroupElement & a,
                                const GroupElement & b)
{
  BchEvaluator bch(alg, Product::original);
  return bch(a, b);
}

/// Product g * h of the limit group.
inline GroupElement limit_product(const StratifiedAlgebra & alg, const GroupElement & g,
                                  const GroupElement & h)
{
  BchEvaluator bch(alg, Product::limit);
  return bch(g, h);
}

inline GroupElement group_product(const StratifiedAlgebra & alg, const GroupElement & a,
                                  const GroupElement & b, Product p)
{
  BchEvaluator bch(alg, p);
  return bch(a, b);
}

/// exp(-Z) is the inverse of exp(Z) in either group law.
inline GroupElement group_inverse(const StratifiedAlgebra & alg, const GroupElement & a)
{
  alg.check_vector(a.log);
  return {-a.log};
}

/// T_eps: scales layer k by eps^k.
inline AlgebraVector dilate_T(const StratifiedAlgebra & alg, double eps, const AlgebraVector & z)
{
  if (!(eps >= 0.0)) { throw NegativeEps("dilation parameter must be nonnegative"); }
  alg.check_vector(z);
  AlgebraVector out = z;
  double factor     = 1.0;
  for (int k = 1; k <= alg.step(); ++k) {
    factor *= eps;
    alg.layer(out, k) *= factor;
  }
  return out;
}

/// tau_eps(g) = exp(T_eps(log g)).
inline GroupElement dilate_tau(const StratifiedAlgebra & alg, double eps, const GroupElement & g)
{
  return {dilate_T(alg, eps, g.log)};
}

/// Graded bracket [[Z1, Z2]] of the limit algebra.
inline AlgebraVector limit_bracket(const StratifiedAlgebra & alg, const AlgebraVector & z1,
                                   const AlgebraVector & z2)
{
  return alg.bracket(z1, z2, Product::limit);
}

/// Canonical diffeomorphism G -> G_inf. Both groups share exponential
/// coordinates, so this is the identity on coordinates.
inline GroupElement phi_map(const StratifiedAlgebra & alg, const GroupElement & g)
{
  alg.check_vector(g.log);
  return g;
}

inline GroupElement phi_inverse(const StratifiedAlgebra & alg, const GroupElement & g)
{
  alg.check_vector(g.log);
  return g;
}

/// ||Z||_g: Euclidean norm of the first layer plus the sum of the Euclidean
/// norms of layers 2..r.
inline double g_norm(const StratifiedAlgebra & alg, const AlgebraVector & z)
{
  alg.check_vector(z);
  double total = 0.0;
  for (int k = 1; k <= alg.step(); ++k) { total += alg.layer(z, k).norm(); }
  return total;
}

}  // namespace nilwalk

#endif  // NILWALK__ALGEBRA_HPP_
