#include "dbtrec/prox.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "dbtrec/linear_operator.hpp"

namespace dbtrec {

void prox_l1(std::span<const double> v, double threshold, std::span<double> out) {
    if (threshold < 0.0) throw std::invalid_argument("prox_l1: negative threshold");
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double a = std::abs(v[i]) - threshold;
        out[i] = a > 0.0 ? (v[i] > 0.0 ? a : -a) : 0.0;
    }
}

std::vector<double> prox_l1(const std::vector<double>& v, double threshold) {
    std::vector<double> out(v.size());
    prox_l1(std::span<const double>(v), threshold, out);
    return out;
}

void project_l2_ball(std::span<const double> y, std::span<const double> center, double radius,
                     std::span<double> out) {
    if (radius < 0.0) throw std::invalid_argument("project_l2_ball: negative radius");
    if (!center.empty() && center.size() != y.size())
        throw std::invalid_argument("project_l2_ball: center size mismatch");
    double d2 = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double c = center.empty() ? 0.0 : center[i];
        d2 += (y[i] - c) * (y[i] - c);
    }
    const double d = std::sqrt(d2);
    if (d <= radius) {
        std::copy(y.begin(), y.end(), out.begin());
        return;
    }
    const double s = radius / d;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double c = center.empty() ? 0.0 : center[i];
        out[i] = c + s * (y[i] - c);
    }
}

void project_coupling(std::span<const double> a1, std::span<const double> a2,
                      std::span<const double> a3, std::span<double> f1, std::span<double> f2,
                      std::span<double> f3) {
    if (a1.size() != a2.size() || a1.size() != a3.size())
        throw std::invalid_argument("project_coupling: shape mismatch");
    for (std::size_t i = 0; i < a1.size(); ++i) {
        const double r = (a1[i] - a2[i] - a3[i]) / 3.0;
        f1[i] = a1[i] - r;
        f2[i] = a2[i] + r;
        f3[i] = a3[i] + r;
    }
}

void project_coupling(const ImageVolume& a1, const ImageVolume& a2, const ImageVolume& a3,
                      ImageVolume& f1, ImageVolume& f2, ImageVolume& f3) {
    if (!(a1.grid == a2.grid) || !(a1.grid == a3.grid))
        throw std::invalid_argument("project_coupling: grid mismatch");
    f1 = ImageVolume(a1.grid);
    f2 = ImageVolume(a1.grid);
    f3 = ImageVolume(a1.grid);
    project_coupling(std::span<const double>(a1.data), a2.data, a3.data, f1.data, f2.data, f3.data);
}

SeparableFunction SeparableFunction::l1(double weight) {
    if (weight < 0.0) throw std::invalid_argument("SeparableFunction::l1: negative weight");
    SeparableFunction f;
    f.kind = FunKind::L1;
    f.weight = weight;
    return f;
}

SeparableFunction SeparableFunction::l2_ball(std::vector<double> center, double radius) {
    if (radius < 0.0) throw std::invalid_argument("SeparableFunction::l2_ball: negative radius");
    SeparableFunction f;
    f.kind = FunKind::L2Ball;
    f.center = std::move(center);
    f.radius = radius;
    return f;
}

SeparableFunction SeparableFunction::l2_squared(double weight, std::vector<double> center) {
    if (weight < 0.0) throw std::invalid_argument("SeparableFunction::l2_squared: negative weight");
    SeparableFunction f;
    f.kind = FunKind::L2Squared;
    f.weight = weight;
    f.center = std::move(center);
    return f;
}

SeparableFunction SeparableFunction::scaled_argument(double s) const {
    if (!(s > 0.0)) throw std::invalid_argument("scaled_argument: scale must be positive");
    SeparableFunction f = *this;
    switch (kind) {
        case FunKind::L1:
            f.weight = weight * s;  // ||s y||_1 = s ||y||_1
            break;
        case FunKind::L2Ball:
            // ||s y - c|| <= r  <=>  ||y - c/s|| <= r/s
            for (auto& c : f.center) c /= s;
            f.radius = radius / s;
            break;
        case FunKind::L2Squared:
            // (w/2)||s y - c||^2 = (w s^2/2)||y - c/s||^2
            f.weight = weight * s * s;
            for (auto& c : f.center) c /= s;
            break;
    }
    return f;
}

void SeparableFunction::prox(std::span<const double> v, double t, std::span<double> out) const {
    if (t < 0.0) throw std::invalid_argument("SeparableFunction::prox: negative step");
    switch (kind) {
        case FunKind::L1:
            prox_l1(v, t * weight, out);
            return;
        case FunKind::L2Ball:
            if (std::isinf(radius)) {
                std::copy(v.begin(), v.end(), out.begin());
                return;
            }
            project_l2_ball(v, center, radius, out);  // indicator prox is step-independent
            return;
        case FunKind::L2Squared: {
            // argmin_x (t w / 2)||x - c||^2 + (1/2)||x - v||^2
            const double tw = t * weight;
            const double inv = 1.0 / (1.0 + tw);
            for (std::size_t i = 0; i < v.size(); ++i) {
                const double c = center.empty() ? 0.0 : center[i];
                out[i] = (v[i] + tw * c) * inv;
            }
            return;
        }
    }
}

void SeparableFunction::prox_conjugate(std::span<const double> y, double sigma,
                                       std::span<double> out) const {
    if (!(sigma > 0.0)) throw std::invalid_argument("prox_conjugate: step must be positive");
    if (conjugate_is_zero()) {
        std::fill(out.begin(), out.end(), 0.0);
        return;
    }
    if (kind == FunKind::L1) {
        // closed form: clip to [-weight, weight]
        const double a = weight;
        for (std::size_t i = 0; i < y.size(); ++i) out[i] = std::clamp(y[i], -a, a);
        return;
    }
    // Moreau: y - sigma * prox_{F/sigma}(y/sigma)
    std::vector<double> scaled(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) scaled[i] = y[i] / sigma;
    prox(scaled, 1.0 / sigma, out);
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = y[i] - sigma * out[i];
}

bool SeparableFunction::conjugate_is_zero() const {
    // F == 0 over the whole space => F* is the indicator of {0}
    if (kind == FunKind::L1 && weight == 0.0) return true;
    if (kind == FunKind::L2Ball && std::isinf(radius)) return true;
    return false;
}

double SeparableFunction::value(std::span<const double> y) const {
    switch (kind) {
        case FunKind::L1: {
            double s = 0.0;
            for (double v : y) s += std::abs(v);
            return weight * s;
        }
        case FunKind::L2Ball: {
            double d2 = 0.0;
            for (std::size_t i = 0; i < y.size(); ++i) {
                const double c = center.empty() ? 0.0 : center[i];
                d2 += (y[i] - c) * (y[i] - c);
            }
            const double d = std::sqrt(d2);
            return d > radius ? d - radius : 0.0;
        }
        case FunKind::L2Squared: {
            double d2 = 0.0;
            for (std::size_t i = 0; i < y.size(); ++i) {
                const double c = center.empty() ? 0.0 : center[i];
                d2 += (y[i] - c) * (y[i] - c);
            }
            return 0.5 * weight * d2;
        }
    }
    return 0.0;
}

void prox_conjugate(const SeparableFunction& f, std::span<const double> y, double sigma,
                    std::span<double> out) {
    f.prox_conjugate(y, sigma, out);
}

}  // namespace dbtrec
