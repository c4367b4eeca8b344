#include "dbtrec/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace dbtrec {

double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

void VolumeGrid::validate() const {
    if (dims[0] <= 0 || dims[1] <= 0 || dims[2] <= 0)
        throw std::invalid_argument("VolumeGrid: dims must be positive");
    for (int a = 0; a < 3; ++a)
        if (!(spacing[a] > 0.0))
            throw std::invalid_argument("VolumeGrid: spacing must be strictly positive");
}

VolumeGrid make_centered_grid(Index3 dims, Vec3 spacing) {
    VolumeGrid g;
    g.dims = dims;
    g.spacing = spacing;
    g.origin = {-0.5 * dims[0] * spacing[0], -0.5 * dims[1] * spacing[1], -0.5 * dims[2] * spacing[2]};
    g.validate();
    return g;
}

bool ImageVolume::all_finite() const {
    for (double v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

void ImageVolume::validate() const {
    grid.validate();
    if (data.size() != grid.nvox())
        throw std::invalid_argument("ImageVolume: data length does not match dims");
    if (!all_finite())
        throw std::invalid_argument("ImageVolume: non-finite values");
}

void DetectorGrid::validate() const {
    if (nviews <= 0 || nu <= 0 || nv <= 0)
        throw std::invalid_argument("DetectorGrid: counts must be positive");
    if (!(pitch_u > 0.0) || !(pitch_v > 0.0))
        throw std::invalid_argument("DetectorGrid: pitch must be strictly positive");
}

bool ProjectionSet::all_finite() const {
    for (double v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

void ProjectionSet::validate() const {
    det.validate();
    if (data.size() != det.npix())
        throw std::invalid_argument("ProjectionSet: data length does not match detector dims");
    if (!all_finite())
        throw std::invalid_argument("ProjectionSet: non-finite values");
}

ScanGeometry ScanGeometry::with_detector(const DetectorGrid& d) const {
    if (d.nviews != nviews)
        throw std::invalid_argument("with_detector: view count mismatch");
    ScanGeometry g = *this;
    g.det = d;
    return g;
}

void ScanGeometry::validate() const {
    det.validate();
    if (nviews != det.nviews || int(sources.size()) != nviews || int(frames.size()) != nviews)
        throw std::invalid_argument("ScanGeometry: inconsistent per-view arrays");
    if (!(sid_cm > 0.0) || !(sdd_cm > 0.0))
        throw std::invalid_argument("ScanGeometry: distances must be positive");
    // angles evenly spaced and symmetric about zero; sources in the xz-plane
    for (int i = 0; i < nviews; ++i) {
        if (std::abs(sources[i][1]) > 1e-12)
            throw std::invalid_argument("ScanGeometry: source positions must lie in the xz-plane");
        if (std::abs(angles_deg[i] + angles_deg[nviews - 1 - i]) > 1e-9)
            throw std::invalid_argument("ScanGeometry: view angles must be symmetric about 0");
    }
    if (nviews > 2) {
        const double step = angles_deg[1] - angles_deg[0];
        for (int i = 2; i < nviews; ++i)
            if (std::abs(angles_deg[i] - angles_deg[i - 1] - step) > 1e-9)
                throw std::invalid_argument("ScanGeometry: view angles must be evenly spaced");
    }
}

ScanGeometry make_arc_geometry(int nviews, double arc_deg, double sid_cm, double sdd_cm,
                               const DetectorGrid& det) {
    if (nviews <= 0) throw std::invalid_argument("make_arc_geometry: nviews must be positive");
    if (det.nviews != nviews)
        throw std::invalid_argument("make_arc_geometry: detector nviews mismatch");
    if (!(sid_cm > 0.0) || !(sdd_cm > sid_cm))
        throw std::invalid_argument("make_arc_geometry: need 0 < sid < sdd");

    ScanGeometry g;
    g.nviews = nviews;
    g.arc_deg = arc_deg;
    g.sid_cm = sid_cm;
    g.sdd_cm = sdd_cm;
    g.det = det;
    g.angles_deg.resize(nviews);
    g.sources.resize(nviews);
    g.frames.resize(nviews);

    const double did = sdd_cm - sid_cm;  // isocenter-to-detector
    for (int i = 0; i < nviews; ++i) {
        const double a = (nviews == 1) ? 0.0 : -0.5 * arc_deg + arc_deg * i / (nviews - 1);
        const double ar = a * std::numbers::pi / 180.0;
        g.angles_deg[i] = a;
        g.sources[i] = {sid_cm * std::sin(ar), 0.0, sid_cm * std::cos(ar)};
        g.frames[i] = DetectorFrame{{0.0, 0.0, -did}, {1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}};
    }
    g.validate();
    return g;
}

ImageVolume downsample_volume(const ImageVolume& vol, Index3 f) {
    vol.grid.validate();
    for (int a = 0; a < 3; ++a) {
        if (f[a] <= 0) throw std::invalid_argument("downsample_volume: factors must be >= 1");
        if (vol.grid.dims[a] % f[a] != 0)
            throw std::invalid_argument("downsample_volume: dims not divisible by factor on axis " +
                                        std::to_string(a));
    }
    VolumeGrid out_grid = vol.grid;
    for (int a = 0; a < 3; ++a) {
        out_grid.dims[a] = vol.grid.dims[a] / f[a];
        out_grid.spacing[a] = vol.grid.spacing[a] * f[a];
    }
    ImageVolume out(out_grid);
    const double inv_cells = 1.0 / (double(f[0]) * f[1] * f[2]);
    for (int oz = 0; oz < out_grid.dims[2]; ++oz)
        for (int oy = 0; oy < out_grid.dims[1]; ++oy)
            for (int ox = 0; ox < out_grid.dims[0]; ++ox) {
                double s = 0.0;
                for (int dz = 0; dz < f[2]; ++dz)
                    for (int dy = 0; dy < f[1]; ++dy)
                        for (int dx = 0; dx < f[0]; ++dx)
                            s += vol.at(ox * f[0] + dx, oy * f[1] + dy, oz * f[2] + dz);
                out.at(ox, oy, oz) = s * inv_cells;
            }
    return out;
}

namespace {
// clamped linear interpolation setup along one axis: fine voxel center ->
// coarse index pair (i0, i0+1) with weight w on i0+1
inline void lerp_coeff(double q, int n, int& i0, double& w) {
    if (q <= 0.0) { i0 = 0; w = 0.0; return; }
    if (q >= n - 1) { i0 = n - 2 >= 0 ? n - 2 : 0; w = n >= 2 ? 1.0 : 0.0; return; }
    i0 = int(q);
    w = q - i0;
}
}  // namespace

ImageVolume upsample_volume(const ImageVolume& vol, Index3 f) {
    vol.grid.validate();
    for (int a = 0; a < 3; ++a)
        if (f[a] <= 0) throw std::invalid_argument("upsample_volume: factors must be >= 1");
    VolumeGrid out_grid = vol.grid;
    for (int a = 0; a < 3; ++a) {
        out_grid.dims[a] = vol.grid.dims[a] * f[a];
        out_grid.spacing[a] = vol.grid.spacing[a] / f[a];
    }
    ImageVolume out(out_grid);
    const Index3 n = vol.grid.dims;
    for (int oz = 0; oz < out_grid.dims[2]; ++oz) {
        // continuous coarse-grid index of the fine voxel center
        const double qz = (oz + 0.5) / f[2] - 0.5;
        int z0; double wz; lerp_coeff(qz, n[2], z0, wz);
        for (int oy = 0; oy < out_grid.dims[1]; ++oy) {
            const double qy = (oy + 0.5) / f[1] - 0.5;
            int y0; double wy; lerp_coeff(qy, n[1], y0, wy);
            for (int ox = 0; ox < out_grid.dims[0]; ++ox) {
                const double qx = (ox + 0.5) / f[0] - 0.5;
                int x0; double wx; lerp_coeff(qx, n[0], x0, wx);
                const int x1 = std::min(x0 + 1, n[0] - 1);
                const int y1 = std::min(y0 + 1, n[1] - 1);
                const int z1 = std::min(z0 + 1, n[2] - 1);
                const double c00 = vol.at(x0, y0, z0) * (1 - wx) + vol.at(x1, y0, z0) * wx;
                const double c10 = vol.at(x0, y1, z0) * (1 - wx) + vol.at(x1, y1, z0) * wx;
                const double c01 = vol.at(x0, y0, z1) * (1 - wx) + vol.at(x1, y0, z1) * wx;
                const double c11 = vol.at(x0, y1, z1) * (1 - wx) + vol.at(x1, y1, z1) * wx;
                const double c0 = c00 * (1 - wy) + c10 * wy;
                const double c1 = c01 * (1 - wy) + c11 * wy;
                out.at(ox, oy, oz) = c0 * (1 - wz) + c1 * wz;
            }
        }
    }
    return out;
}

ImageVolume resample_volume(const ImageVolume& vol, Index3 factor, ResampleMode mode) {
    return mode == ResampleMode::Down ? downsample_volume(vol, factor) : upsample_volume(vol, factor);
}

ProjectionSet downsample_projections(const ProjectionSet& p, int fu, int fv) {
    p.det.validate();
    if (fu <= 0 || fv <= 0) throw std::invalid_argument("downsample_projections: factors must be >= 1");
    if (p.det.nu % fu != 0 || p.det.nv % fv != 0)
        throw std::invalid_argument("downsample_projections: detector dims not divisible by factors");
    DetectorGrid d = p.det;
    d.nu = p.det.nu / fu;
    d.nv = p.det.nv / fv;
    d.pitch_u = p.det.pitch_u * fu;
    d.pitch_v = p.det.pitch_v * fv;
    ProjectionSet out(d);
    const double inv = 1.0 / (double(fu) * fv);
    for (int view = 0; view < d.nviews; ++view)
        for (int ov = 0; ov < d.nv; ++ov)
            for (int ou = 0; ou < d.nu; ++ou) {
                double s = 0.0;
                for (int dv = 0; dv < fv; ++dv)
                    for (int du = 0; du < fu; ++du)
                        s += p.at(view, ou * fu + du, ov * fv + dv);
                out.at(view, ou, ov) = s * inv;
            }
    return out;
}

}  // namespace dbtrec
