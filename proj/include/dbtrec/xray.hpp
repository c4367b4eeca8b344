#pragma once

#include "dbtrec/grid.hpp"
#include "dbtrec/linear_operator.hpp"

namespace dbtrec {

/// Cone-beam X-ray transform between a voxel grid and a detector stack.
///
/// Forward model: for every (view, pixel) the ray from the source to the
/// pixel center is sampled on the voxel-center planes perpendicular to the
/// ray's dominant axis, with bilinear interpolation in the two transverse
/// axes and a per-plane step length (ray-driven Joseph model). Rays missing
/// the volume contribute 0. The adjoint scatters through exactly the same
/// interpolation taps, so <Xf, g> = <f, X^T g> holds to rounding.
class XrayTransform final : public LinearOperator {
  public:
    XrayTransform(const VolumeGrid& vol, const ScanGeometry& geom);

    std::size_t domain_size() const override { return vol_.nvox(); }
    std::size_t range_size() const override { return geom_.det.npix(); }
    void forward(std::span<const double> x, std::span<double> y) const override;
    void adjoint(std::span<const double> y, std::span<double> x) const override;

    const VolumeGrid& volume_grid() const { return vol_; }
    const ScanGeometry& geometry() const { return geom_; }

  private:
    VolumeGrid vol_;
    ScanGeometry geom_;
};

ProjectionSet xray_forward(const ImageVolume& vol, const ScanGeometry& geom);
ImageVolume xray_adjoint(const ProjectionSet& p, const ScanGeometry& geom, const VolumeGrid& vol_grid);

}  // namespace dbtrec
