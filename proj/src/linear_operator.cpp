#include "dbtrec/linear_operator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace dbtrec {

std::vector<double> apply_forward(const LinearOperator& op, std::span<const double> x) {
    std::vector<double> y(op.range_size());
    op.forward(x, y);
    return y;
}

std::vector<double> apply_adjoint(const LinearOperator& op, std::span<const double> y) {
    std::vector<double> x(op.domain_size());
    op.adjoint(y, x);
    return x;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void IdentityOp::forward(std::span<const double> x, std::span<double> y) const {
    std::copy(x.begin(), x.end(), y.begin());
}
void IdentityOp::adjoint(std::span<const double> y, std::span<double> x) const {
    std::copy(y.begin(), y.end(), x.begin());
}

void DiagonalOp::forward(std::span<const double> x, std::span<double> y) const {
    for (std::size_t i = 0; i < diag_.size(); ++i) y[i] = diag_[i] * x[i];
}
void DiagonalOp::adjoint(std::span<const double> y, std::span<double> x) const {
    for (std::size_t i = 0; i < diag_.size(); ++i) x[i] = diag_[i] * y[i];
}

DenseOp::DenseOp(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), a_(std::move(entries)) {
    if (a_.size() != rows_ * cols_) throw std::invalid_argument("DenseOp: entry count mismatch");
}

void DenseOp::forward(std::span<const double> x, std::span<double> y) const {
    for (std::size_t r = 0; r < rows_; ++r) {
        double s = 0.0;
        const double* row = a_.data() + r * cols_;
        for (std::size_t c = 0; c < cols_; ++c) s += row[c] * x[c];
        y[r] = s;
    }
}

void DenseOp::adjoint(std::span<const double> y, std::span<double> x) const {
    std::fill(x.begin(), x.end(), 0.0);
    for (std::size_t r = 0; r < rows_; ++r) {
        const double* row = a_.data() + r * cols_;
        const double yr = y[r];
        for (std::size_t c = 0; c < cols_; ++c) x[c] += row[c] * yr;
    }
}

ComposeOp::ComposeOp(std::vector<OperatorPtr> chain) : chain_(std::move(chain)) {
    if (chain_.empty()) throw std::invalid_argument("ComposeOp: empty chain");
    for (std::size_t i = 1; i < chain_.size(); ++i)
        if (chain_[i]->domain_size() != chain_[i - 1]->range_size())
            throw std::invalid_argument("ComposeOp: shape mismatch in chain");
    // intermediate buffers between stages, reused across calls
    for (std::size_t i = 0; i + 1 < chain_.size(); ++i) {
        scratch_fw_.emplace_back(chain_[i]->range_size());
        scratch_adj_.emplace_back(chain_[i]->range_size());
    }
}

std::size_t ComposeOp::domain_size() const { return chain_.front()->domain_size(); }
std::size_t ComposeOp::range_size() const { return chain_.back()->range_size(); }

void ComposeOp::forward(std::span<const double> x, std::span<double> y) const {
    if (chain_.size() == 1) {
        chain_[0]->forward(x, y);
        return;
    }
    chain_[0]->forward(x, scratch_fw_[0]);
    for (std::size_t i = 1; i + 1 < chain_.size(); ++i)
        chain_[i]->forward(scratch_fw_[i - 1], scratch_fw_[i]);
    chain_.back()->forward(scratch_fw_[chain_.size() - 2], y);
}

void ComposeOp::adjoint(std::span<const double> y, std::span<double> x) const {
    if (chain_.size() == 1) {
        chain_[0]->adjoint(y, x);
        return;
    }
    const std::size_t n = chain_.size();
    chain_[n - 1]->adjoint(y, scratch_adj_[n - 2]);
    for (std::size_t i = n - 2; i >= 1; --i)
        chain_[i]->adjoint(scratch_adj_[i], scratch_adj_[i - 1]);
    chain_[0]->adjoint(scratch_adj_[0], x);
}

StackOp::StackOp(std::vector<OperatorPtr> parts) : parts_(std::move(parts)) {
    if (parts_.empty()) throw std::invalid_argument("StackOp: empty");
    domain_ = parts_.front()->domain_size();
    for (const auto& p : parts_) {
        if (p->domain_size() != domain_) throw std::invalid_argument("StackOp: domain mismatch");
        range_ += p->range_size();
    }
}

void StackOp::forward(std::span<const double> x, std::span<double> y) const {
    std::size_t off = 0;
    for (const auto& p : parts_) {
        p->forward(x, y.subspan(off, p->range_size()));
        off += p->range_size();
    }
}

void StackOp::adjoint(std::span<const double> y, std::span<double> x) const {
    std::fill(x.begin(), x.end(), 0.0);
    std::vector<double> tmp(domain_);
    std::size_t off = 0;
    for (const auto& p : parts_) {
        p->adjoint(y.subspan(off, p->range_size()), tmp);
        for (std::size_t i = 0; i < domain_; ++i) x[i] += tmp[i];
        off += p->range_size();
    }
}

void ScaledOp::forward(std::span<const double> x, std::span<double> y) const {
    op_->forward(x, y);
    for (auto& v : y) v *= s_;
}
void ScaledOp::adjoint(std::span<const double> y, std::span<double> x) const {
    op_->adjoint(y, x);
    for (auto& v : x) v *= s_;
}

NormEstimate estimate_norm(const LinearOperator& op, double rel_tol, int max_iters,
                           std::uint64_t seed) {
    const std::size_t n = op.domain_size();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> v(n), u(op.range_size()), w(n);
    for (auto& e : v) e = gauss(rng);
    double vn = norm2(v);
    if (vn == 0.0) { v[0] = 1.0; vn = 1.0; }
    for (auto& e : v) e /= vn;

    NormEstimate est;
    for (int k = 1; k <= max_iters; ++k) {
        op.forward(v, u);
        op.adjoint(u, w);  // w = K^T K v for unit v
        const double rho = dot(v, w);
        est.value = std::sqrt(std::max(rho, 0.0));
        est.iterations = k;
        if (rho <= 0.0) {
            est.converged = true;  // zero operator (or v in its null space)
            return est;
        }
        // for a symmetric operator, |lambda_max - rho| <= ||K^T K v - rho v||,
        // so this bounds the relative error of the estimate directly
        double resid2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = w[i] - rho * v[i];
            resid2 += r * r;
        }
        if (std::sqrt(resid2) <= 2.0 * rel_tol * rho) {
            est.converged = true;
            return est;
        }
        const double wn = norm2(w);
        if (wn == 0.0) {
            est.converged = true;
            return est;
        }
        for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / wn;
    }
    return est;  // converged = false, last estimate reported
}

double cached_or_estimate_norm(const LinearOperator& op, double rel_tol, int max_iters,
                               std::uint64_t seed) {
    if (op.cached_norm() > 0.0) return op.cached_norm();
    const NormEstimate est = estimate_norm(op, rel_tol, max_iters, seed);
    op.set_cached_norm(est.value);
    return est.value;
}

}  // namespace dbtrec
