#pragma once

#include <span>
#include <vector>

#include "dbtrec/grid.hpp"

namespace dbtrec {

/// elementwise soft threshold sign(v) * max(|v| - t, 0)
void prox_l1(std::span<const double> v, double threshold, std::span<double> out);
std::vector<double> prox_l1(const std::vector<double>& v, double threshold);

/// radial projection onto { x : ||x - center|| <= radius }
void project_l2_ball(std::span<const double> y, std::span<const double> center, double radius,
                     std::span<double> out);

/// Euclidean projection onto the subspace { f1 - f2 - f3 = 0 }:
/// r = (a1 - a2 - a3)/3, f1 = a1 - r, f2 = a2 + r, f3 = a3 + r.
void project_coupling(std::span<const double> a1, std::span<const double> a2,
                      std::span<const double> a3, std::span<double> f1, std::span<double> f2,
                      std::span<double> f3);
void project_coupling(const ImageVolume& a1, const ImageVolume& a2, const ImageVolume& a3,
                      ImageVolume& f1, ImageVolume& f2, ImageVolume& f3);

enum class FunKind {
    L1,         // weight * ||y||_1
    L2Ball,     // indicator of ||y - center|| <= radius
    L2Squared,  // (weight/2) * ||y - center||^2
};

/// One separable convex term of a block objective. `scaled_argument(s)`
/// absorbs an argument scaling F(s y) into the parameters, which is how the
/// solver folds block normalization into the base prox formulas.
struct SeparableFunction {
    FunKind kind = FunKind::L1;
    double weight = 1.0;
    std::vector<double> center;  // empty = zero center (L2Ball / L2Squared)
    double radius = 0.0;         // L2Ball only; may be +infinity

    static SeparableFunction l1(double weight);
    static SeparableFunction l2_ball(std::vector<double> center, double radius);
    static SeparableFunction l2_squared(double weight, std::vector<double> center);

    SeparableFunction scaled_argument(double s) const;

    /// prox_{t F}(v)
    void prox(std::span<const double> v, double t, std::span<double> out) const;
    /// prox_{sigma F*}(y) via the Moreau identity
    /// prox_{sigma F*}(y) = y - sigma prox_{F / sigma}(y / sigma)
    void prox_conjugate(std::span<const double> y, double sigma, std::span<double> out) const;
    /// True when prox_conjugate is identically zero (L1 with weight 0, ball
    /// with infinite radius); such blocks keep their duals at zero and can
    /// be skipped by the solver.
    bool conjugate_is_zero() const;

    /// F evaluated at y; for L2Ball returns the constraint violation
    /// max(||y - center|| - radius, 0) instead of the 0/inf indicator.
    double value(std::span<const double> y) const;
};

void prox_conjugate(const SeparableFunction& f, std::span<const double> y, double sigma,
                    std::span<double> out);

}  // namespace dbtrec
