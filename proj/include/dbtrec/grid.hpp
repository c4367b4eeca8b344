#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace dbtrec {

using Index3 = std::array<int, 3>;
using Vec3 = std::array<double, 3>;
using Vec2 = std::array<double, 2>;

inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 operator*(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }
inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
double norm(const Vec3& a);

/// Regular voxel grid. `origin` is the position of the low corner of the
/// volume (not the first voxel center); voxel (i,j,k) is centered at
/// origin + (i+1/2, j+1/2, k+1/2) * spacing. Storage is x-fastest, then y,
/// then z.
struct VolumeGrid {
    Index3 dims{0, 0, 0};
    Vec3 spacing{1.0, 1.0, 1.0};
    Vec3 origin{0.0, 0.0, 0.0};

    std::size_t nvox() const {
        return std::size_t(dims[0]) * std::size_t(dims[1]) * std::size_t(dims[2]);
    }
    std::size_t idx(int ix, int iy, int iz) const {
        return std::size_t(ix) + std::size_t(dims[0]) * (std::size_t(iy) + std::size_t(dims[1]) * std::size_t(iz));
    }
    double center_coord(int axis, int i) const {
        return origin[axis] + (i + 0.5) * spacing[axis];
    }
    Vec3 extent() const {
        return {dims[0] * spacing[0], dims[1] * spacing[1], dims[2] * spacing[2]};
    }
    bool operator==(const VolumeGrid&) const = default;
    void validate() const;  // throws std::invalid_argument
};

/// Centers the grid on the isocenter (origin of the scan coordinate frame).
VolumeGrid make_centered_grid(Index3 dims, Vec3 spacing);

/// Scalar field on a VolumeGrid; values are attenuation in 1/cm.
struct ImageVolume {
    VolumeGrid grid;
    std::vector<double> data;

    ImageVolume() = default;
    explicit ImageVolume(const VolumeGrid& g) : grid(g), data(g.nvox(), 0.0) {}
    ImageVolume(const VolumeGrid& g, double fill) : grid(g), data(g.nvox(), fill) {}

    double& at(int ix, int iy, int iz) { return data[grid.idx(ix, iy, iz)]; }
    double at(int ix, int iy, int iz) const { return data[grid.idx(ix, iy, iz)]; }
    std::size_t size() const { return data.size(); }
    bool all_finite() const;
    void validate() const;  // dims/data consistency + finiteness
};

/// Detector pixel layout shared by every view of a scan. Storage within a
/// ProjectionSet is u-fastest, then v, then view.
struct DetectorGrid {
    int nviews = 0;
    int nu = 0;
    int nv = 0;
    double pitch_u = 1.0;  // cm
    double pitch_v = 1.0;  // cm

    std::size_t npix() const { return std::size_t(nviews) * std::size_t(nu) * std::size_t(nv); }
    std::size_t idx(int view, int iu, int iv) const {
        return std::size_t(iu) + std::size_t(nu) * (std::size_t(iv) + std::size_t(nv) * std::size_t(view));
    }
    // pixel center offsets from the detector center, along the u/v axes
    double u_coord(int iu) const { return (iu - 0.5 * (nu - 1)) * pitch_u; }
    double v_coord(int iv) const { return (iv - 0.5 * (nv - 1)) * pitch_v; }
    bool operator==(const DetectorGrid&) const = default;
    void validate() const;
};

/// Stack of 2D detector images indexed by view; values are dimensionless
/// line integrals (or raw counts before log processing).
struct ProjectionSet {
    DetectorGrid det;
    std::vector<double> data;

    ProjectionSet() = default;
    explicit ProjectionSet(const DetectorGrid& d) : det(d), data(d.npix(), 0.0) {}

    double& at(int view, int iu, int iv) { return data[det.idx(view, iu, iv)]; }
    double at(int view, int iu, int iv) const { return data[det.idx(view, iu, iv)]; }
    std::size_t size() const { return data.size(); }
    bool all_finite() const;
    void validate() const;
};

struct DetectorFrame {
    Vec3 center{0, 0, 0};
    Vec3 u_dir{1, 0, 0};
    Vec3 v_dir{0, 1, 0};
};

/// Limited-arc cone-beam scan: the source swings through `arc_deg` in the
/// xz-plane (angles measured from +z, symmetric about 0), the detector is a
/// stationary flat panel below the volume with u parallel to x (the scan
/// direction) and v parallel to y. Isocenter is the coordinate origin.
struct ScanGeometry {
    int nviews = 0;
    double arc_deg = 0.0;
    double sid_cm = 0.0;  // source-to-isocenter
    double sdd_cm = 0.0;  // source-to-detector
    DetectorGrid det;
    std::vector<double> angles_deg;       // per view
    std::vector<Vec3> sources;            // per view, in cm
    std::vector<DetectorFrame> frames;    // per view (identical for this trajectory)

    Vec3 pixel_center(int view, int iu, int iv) const {
        const DetectorFrame& f = frames[view];
        return f.center + det.u_coord(iu) * f.u_dir + det.v_coord(iv) * f.v_dir;
    }
    /// Same trajectory, different detector sampling (used when projection
    /// data are downsampled to the reconstruction pixel grid).
    ScanGeometry with_detector(const DetectorGrid& d) const;
    void validate() const;
};

ScanGeometry make_arc_geometry(int nviews, double arc_deg, double sid_cm, double sdd_cm,
                               const DetectorGrid& det);

enum class ResampleMode { Up, Down };

/// Down: block average over fx*fy*fz cells (dims must divide).
/// Up: trilinear interpolation at the fine voxel centers with clamped
/// boundary. Both preserve the physical extent; spacing is rescaled.
ImageVolume resample_volume(const ImageVolume& vol, Index3 factor, ResampleMode mode);
ImageVolume upsample_volume(const ImageVolume& vol, Index3 factor);
ImageVolume downsample_volume(const ImageVolume& vol, Index3 factor);

/// Block-mean over fu x fv pixel groups per view; pitch is multiplied.
ProjectionSet downsample_projections(const ProjectionSet& p, int fu, int fv);

}  // namespace dbtrec
