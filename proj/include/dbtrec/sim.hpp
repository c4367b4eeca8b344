#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "dbtrec/grid.hpp"

namespace dbtrec {

struct Inclusion {
    enum class Shape { Sphere, Rod };
    Shape shape = Shape::Sphere;
    Vec3 center{0, 0, 0};   // cm
    double radius = 0.5;    // cm (rod: cross-section radius)
    double half_length = 0; // cm, rods only
    int axis = 0;           // rod axis (0=x, 1=y, 2=z)
    double contrast = 0.1;  // added attenuation, 1/cm
};

/// Breast-like phantom: a semi-ellipsoid envelope (flat face at y = center_y,
/// bulging towards +y) of uniform background attenuation, plus inclusions.
/// Voxelization averages `supersample`^3 sub-samples per voxel for partial
/// volume; supersample = 1 gives an exactly piecewise-constant phantom.
struct PhantomSpec {
    Vec3 envelope_half{2.0, 2.0, 1.5};  // cm
    Vec3 envelope_center{0, 0, 0};      // cm
    double background = 0.2;            // 1/cm
    std::vector<Inclusion> inclusions;
    int supersample = 2;
    std::uint64_t texture_seed = 0;  // 0 = no texture
    double texture_amplitude = 0.05; // fraction of background
    double texture_corr_cm = 0.5;

    void validate() const;  // inclusions inside envelope, attenuations >= 0
};

ImageVolume make_phantom(const PhantomSpec& spec, const VolumeGrid& grid);

/// Binary support of the inclusions only (ignores the envelope), voxelized
/// without supersampling; used for masked ground-truth comparisons.
ImageVolume inclusion_mask(const PhantomSpec& spec, const VolumeGrid& grid);

struct ArtifactSpec {
    enum class Kind {
        AdditiveSmoothProjection,  // smooth 2D field added to g, shared by all views
        FluenceGradient,           // counts scaled by 1 + amp * s(u) * ramp(v)
    };
    Kind kind = Kind::AdditiveSmoothProjection;
    double amplitude = 0.05;     // fraction of the mean in-shadow signal
    double correlation_cm = 2.0; // smoothness scale of the random field
    std::uint64_t seed = 7;
};

/// Smooth random fields: white noise filtered with a Gaussian of the given
/// FWHM, then normalized to zero mean and unit standard deviation.
std::vector<double> smooth_field_1d(int n, double spacing, double corr_cm, std::uint64_t seed);
std::vector<double> smooth_field_2d(int nu, int nv, double pu, double pv, double corr_cm,
                                    std::uint64_t seed);

struct AcquisitionOptions {
    double i0 = 1.0;          // incident photons per pixel
    bool poisson = false;     // apply Poisson noise to the counts
    std::uint64_t seed = 1;   // per-view RNG streams derive from this
};

/// Transmission measurement: counts = i0 * exp(-(X phantom + artifacts)),
/// optionally Poisson distributed. Artifact fields scale with the mean of
/// the noiseless line integrals over the object's projection support.
ProjectionSet simulate_acquisition(const ImageVolume& phantom, const ScanGeometry& geom,
                                   const std::vector<ArtifactSpec>& artifacts,
                                   const AcquisitionOptions& opt);

struct InverseCrimeData {
    ProjectionSet g;     // X G[d1] truth, on the reconstruction detector grid
    ImageVolume truth;
};

/// Ideal noiseless data generated with exactly the forward chain the
/// low-resolution problem assumes, so the phantom is feasible by
/// construction.
InverseCrimeData inverse_crime_dataset(const ImageVolume& phantom, const ScanGeometry& geom,
                                       Vec3 d1_fwhm_cm);

}  // namespace dbtrec
