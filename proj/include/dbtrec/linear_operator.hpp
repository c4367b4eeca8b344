#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace dbtrec {

/// Linear map between flat double vectors, exposing the forward and the
/// exact algebraic adjoint. Operators are stateless after construction
/// except for a write-once cached norm estimate, so concurrent application
/// on distinct outputs is safe.
class LinearOperator {
  public:
    virtual ~LinearOperator() = default;
    virtual std::size_t domain_size() const = 0;
    virtual std::size_t range_size() const = 0;
    /// y must have range_size() elements; overwritten.
    virtual void forward(std::span<const double> x, std::span<double> y) const = 0;
    /// x must have domain_size() elements; overwritten.
    virtual void adjoint(std::span<const double> y, std::span<double> x) const = 0;

    /// 0 means "not estimated yet".
    double cached_norm() const { return norm_cache_; }
    void set_cached_norm(double n) const { norm_cache_ = n; }

  private:
    mutable double norm_cache_ = 0.0;
};

using OperatorPtr = std::shared_ptr<const LinearOperator>;

std::vector<double> apply_forward(const LinearOperator& op, std::span<const double> x);
std::vector<double> apply_adjoint(const LinearOperator& op, std::span<const double> y);

class IdentityOp final : public LinearOperator {
  public:
    explicit IdentityOp(std::size_t n) : n_(n) {}
    std::size_t domain_size() const override { return n_; }
    std::size_t range_size() const override { return n_; }
    void forward(std::span<const double> x, std::span<double> y) const override;
    void adjoint(std::span<const double> y, std::span<double> x) const override;

  private:
    std::size_t n_;
};

class DiagonalOp final : public LinearOperator {
  public:
    explicit DiagonalOp(std::vector<double> diag) : diag_(std::move(diag)) {}
    std::size_t domain_size() const override { return diag_.size(); }
    std::size_t range_size() const override { return diag_.size(); }
    void forward(std::span<const double> x, std::span<double> y) const override;
    void adjoint(std::span<const double> y, std::span<double> x) const override;

  private:
    std::vector<double> diag_;
};

/// Row-major dense matrix, mainly for small test and oracle problems.
class DenseOp final : public LinearOperator {
  public:
    DenseOp(std::size_t rows, std::size_t cols, std::vector<double> entries);
    std::size_t domain_size() const override { return cols_; }
    std::size_t range_size() const override { return rows_; }
    void forward(std::span<const double> x, std::span<double> y) const override;
    void adjoint(std::span<const double> y, std::span<double> x) const override;
    double entry(std::size_t r, std::size_t c) const { return a_[r * cols_ + c]; }

  private:
    std::size_t rows_, cols_;
    std::vector<double> a_;
};

/// ops.front() is applied first: (A_n ... A_1) x. Adjoint composes in
/// reverse order automatically.
class ComposeOp final : public LinearOperator {
  public:
    explicit ComposeOp(std::vector<OperatorPtr> chain);
    std::size_t domain_size() const override;
    std::size_t range_size() const override;
    void forward(std::span<const double> x, std::span<double> y) const override;
    void adjoint(std::span<const double> y, std::span<double> x) const override;

  private:
    std::vector<OperatorPtr> chain_;
    mutable std::vector<std::vector<double>> scratch_fw_, scratch_adj_;  // sized at construction
};

/// Vertical stack sharing one input: y = [A_1 x; A_2 x; ...].
class StackOp final : public LinearOperator {
  public:
    explicit StackOp(std::vector<OperatorPtr> parts);
    std::size_t domain_size() const override { return domain_; }
    std::size_t range_size() const override { return range_; }
    void forward(std::span<const double> x, std::span<double> y) const override;
    void adjoint(std::span<const double> y, std::span<double> x) const override;

  private:
    std::vector<OperatorPtr> parts_;
    std::size_t domain_ = 0, range_ = 0;
};

class ScaledOp final : public LinearOperator {
  public:
    ScaledOp(double scale, OperatorPtr op) : s_(scale), op_(std::move(op)) {}
    std::size_t domain_size() const override { return op_->domain_size(); }
    std::size_t range_size() const override { return op_->range_size(); }
    void forward(std::span<const double> x, std::span<double> y) const override;
    void adjoint(std::span<const double> y, std::span<double> x) const override;

  private:
    double s_;
    OperatorPtr op_;
};

struct NormEstimate {
    double value = 0.0;
    bool converged = false;
    int iterations = 0;
};

/// Power iteration on K^T K from a fixed-seed random start; returns the
/// square root of the dominant eigenvalue. Converged when the Rayleigh
/// residual bounds the relative eigenvalue error by 2*rel_tol, i.e. the
/// returned singular value is accurate to about rel_tol relative. On
/// non-convergence the last estimate is returned with converged=false.
NormEstimate estimate_norm(const LinearOperator& op, double rel_tol = 1e-4, int max_iters = 30000,
                           std::uint64_t seed = 20240601);

/// estimate_norm + write-once caching on the operator.
double cached_or_estimate_norm(const LinearOperator& op, double rel_tol = 1e-4, int max_iters = 30000,
                               std::uint64_t seed = 20240601);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

}  // namespace dbtrec
