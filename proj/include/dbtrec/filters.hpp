#pragma once

#include "dbtrec/grid.hpp"
#include "dbtrec/linear_operator.hpp"

namespace dbtrec {

/// Sampled Gaussian, truncated at +-3 sigma and renormalized to unit sum.
/// `fwhm` is the full width at half maximum in physical units; sigma =
/// fwhm / (2 sqrt(2 ln 2)). fwhm = 0 gives the identity kernel {1}.
std::vector<double> gaussian_kernel(double fwhm, double spacing);

/// 1D correlation of `line` with a symmetric kernel under half-sample
/// symmetric (reflect) boundary extension; this boundary keeps the operator
/// exactly self-adjoint and constant-preserving for any kernel radius.
void convolve_sym_reflect(std::span<const double> line, std::span<const double> kernel,
                          std::span<double> out);

/// Separable 3D Gaussian blur on a voxel grid. Self-adjoint.
class GaussianBlur3D final : public LinearOperator {
  public:
    GaussianBlur3D(const VolumeGrid& grid, Vec3 fwhm_cm);
    std::size_t domain_size() const override { return grid_.nvox(); }
    std::size_t range_size() const override { return grid_.nvox(); }
    void forward(std::span<const double> x, std::span<double> y) const override;
    void adjoint(std::span<const double> y, std::span<double> x) const override { forward(y, x); }

  private:
    VolumeGrid grid_;
    std::array<std::vector<double>, 3> kernels_;
};

/// Separable 2D Gaussian blur applied independently per view. Self-adjoint.
class GaussianBlurDet final : public LinearOperator {
  public:
    GaussianBlurDet(const DetectorGrid& det, Vec2 fwhm_cm);
    std::size_t domain_size() const override { return det_.npix(); }
    std::size_t range_size() const override { return det_.npix(); }
    void forward(std::span<const double> x, std::span<double> y) const override;
    void adjoint(std::span<const double> y, std::span<double> x) const override { forward(y, x); }

  private:
    DetectorGrid det_;
    std::vector<double> ku_, kv_;
};

/// Square-root ramp filter along u (the scan direction), per view and per
/// detector row: frequency response sqrt(|nu| / nu_Nyquist) up to the cutoff
/// fraction and 0 beyond, applied through a zero-padded FFT of length
/// 2 * next_pow2(nu). Real, even response => linear and self-adjoint.
class SqrtRampFilter final : public LinearOperator {
  public:
    SqrtRampFilter(const DetectorGrid& det, double cutoff_fraction);
    std::size_t domain_size() const override { return det_.npix(); }
    std::size_t range_size() const override { return det_.npix(); }
    void forward(std::span<const double> x, std::span<double> y) const override;
    void adjoint(std::span<const double> y, std::span<double> x) const override { forward(y, x); }

    double cutoff() const { return cutoff_; }
    /// frequency response per FFT bin (length 2 * next_pow2(nu))
    const std::vector<double>& response() const { return response_; }

  private:
    DetectorGrid det_;
    double cutoff_;
    std::size_t padded_;
    std::vector<double> response_;
};

enum class Axis : int { X = 0, Y = 1, Z = 2 };

/// Forward difference scaled by 1/spacing; the difference at the last
/// sample along the axis is zero (Neumann convention, the standard TV
/// discretization). Adjoint is the matching negative backward difference.
class FiniteDiff final : public LinearOperator {
  public:
    FiniteDiff(const VolumeGrid& grid, Axis axis);
    std::size_t domain_size() const override { return grid_.nvox(); }
    std::size_t range_size() const override { return grid_.nvox(); }
    void forward(std::span<const double> x, std::span<double> y) const override;
    void adjoint(std::span<const double> y, std::span<double> x) const override;

  private:
    VolumeGrid grid_;
    int axis_;
};

/// cos(theta) d/dx + sin(theta) d/dz, the oblique in-plane derivative.
class ObliqueDiff final : public LinearOperator {
  public:
    ObliqueDiff(const VolumeGrid& grid, double theta_deg);
    std::size_t domain_size() const override { return grid_.nvox(); }
    std::size_t range_size() const override { return grid_.nvox(); }
    void forward(std::span<const double> x, std::span<double> y) const override;
    void adjoint(std::span<const double> y, std::span<double> x) const override;
    double theta_deg() const { return theta_deg_; }

  private:
    VolumeGrid grid_;
    double theta_deg_, cos_, sin_;
};

ImageVolume gaussian_blur_3d(const ImageVolume& vol, Vec3 fwhm_cm);
ProjectionSet gaussian_blur_det(const ProjectionSet& p, Vec2 fwhm_cm);
ProjectionSet sqrt_ramp_filter(const ProjectionSet& p, double cutoff_fraction);
ImageVolume finite_diff(const ImageVolume& vol, Axis axis);
ImageVolume oblique_diff(const ImageVolume& vol, double theta_deg);

}  // namespace dbtrec
