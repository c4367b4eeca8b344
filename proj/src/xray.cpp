#include "dbtrec/xray.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dbtrec {

namespace {

struct RaySampler {
    // plane index range along the dominant axis and linear-in-j sample state
    int k = 0, a = 0, b = 0;       // dominant and transverse axes
    int j_lo = 0, j_hi = -1;       // inclusive plane range with t in [0,1]
    double qa0 = 0, dqa = 0;       // continuous transverse voxel index at j_lo, and per-plane step
    double qb0 = 0, dqb = 0;
    double step = 0;               // path length between consecutive planes
};

// Geometry setup shared verbatim by forward and adjoint so that the two are
// exact transposes.
inline bool setup_ray(const VolumeGrid& g, const Vec3& S, const Vec3& P, RaySampler& r) {
    const Vec3 d = P - S;
    int k = 0;
    if (std::abs(d[1]) > std::abs(d[k])) k = 1;
    if (std::abs(d[2]) > std::abs(d[k])) k = 2;
    if (d[k] == 0.0) return false;
    const int a = (k + 1) % 3, b = (k + 2) % 3;

    const double inv_dk = 1.0 / d[k];
    const double t0 = (g.center_coord(k, 0) - S[k]) * inv_dk;  // t at plane j = 0
    const double dt = g.spacing[k] * inv_dk;                   // t step per plane

    // planes with t in [0,1]
    double lo, hi;
    if (dt > 0) {
        lo = (0.0 - t0) / dt;
        hi = (1.0 - t0) / dt;
    } else {
        lo = (1.0 - t0) / dt;
        hi = (0.0 - t0) / dt;
    }
    r.j_lo = std::max(0, int(std::ceil(lo - 1e-12)));
    r.j_hi = std::min(g.dims[k] - 1, int(std::floor(hi + 1e-12)));
    if (r.j_lo > r.j_hi) return false;

    r.k = k;
    r.a = a;
    r.b = b;
    const double t_lo = t0 + r.j_lo * dt;
    r.qa0 = (S[a] + t_lo * d[a] - g.origin[a]) / g.spacing[a] - 0.5;
    r.qb0 = (S[b] + t_lo * d[b] - g.origin[b]) / g.spacing[b] - 0.5;
    r.dqa = dt * d[a] / g.spacing[a];
    r.dqb = dt * d[b] / g.spacing[b];
    r.step = g.spacing[k] * norm(d) * std::abs(inv_dk);
    return true;
}

inline void volume_strides(const VolumeGrid& g, std::size_t s[3]) {
    s[0] = 1;
    s[1] = std::size_t(g.dims[0]);
    s[2] = std::size_t(g.dims[0]) * std::size_t(g.dims[1]);
}

void check_sources_outside(const VolumeGrid& vol, const ScanGeometry& geom) {
    const Vec3 lo = vol.origin;
    const Vec3 hi = vol.origin + vol.extent();
    for (const Vec3& s : geom.sources) {
        if (s[0] > lo[0] && s[0] < hi[0] && s[1] > lo[1] && s[1] < hi[1] && s[2] > lo[2] && s[2] < hi[2])
            throw std::invalid_argument("XrayTransform: source position inside the volume");
    }
}

}  // namespace

XrayTransform::XrayTransform(const VolumeGrid& vol, const ScanGeometry& geom)
    : vol_(vol), geom_(geom) {
    vol_.validate();
    geom_.validate();
    check_sources_outside(vol_, geom_);
}

void XrayTransform::forward(std::span<const double> x, std::span<double> y) const {
    if (x.size() != domain_size() || y.size() != range_size())
        throw std::invalid_argument("XrayTransform::forward: shape mismatch");
    const VolumeGrid& g = vol_;
    std::size_t st[3];
    volume_strides(g, st);
    const int na = g.dims[0], nb_ = g.dims[1], nc = g.dims[2];
    const int dims[3] = {na, nb_, nc};
    const double* f = x.data();

#pragma omp parallel for schedule(static)
    for (int view = 0; view < geom_.nviews; ++view) {
        const Vec3 S = geom_.sources[view];
        double* out = y.data() + geom_.det.idx(view, 0, 0);
        for (int iv = 0; iv < geom_.det.nv; ++iv) {
            for (int iu = 0; iu < geom_.det.nu; ++iu) {
                const Vec3 P = geom_.pixel_center(view, iu, iv);
                RaySampler r;
                double acc = 0.0;
                if (setup_ray(g, S, P, r)) {
                    const std::size_t sk = st[r.k], sa = st[r.a], sb = st[r.b];
                    const int nA = dims[r.a], nB = dims[r.b];
                    double qa = r.qa0, qb = r.qb0;
                    for (int j = r.j_lo; j <= r.j_hi; ++j, qa += r.dqa, qb += r.dqb) {
                        const int ia = int(std::floor(qa));
                        const int ib = int(std::floor(qb));
                        const double wa = qa - ia, wb = qb - ib;
                        const std::size_t base = std::size_t(j) * sk;
                        if (ia >= 0 && ia + 1 < nA && ib >= 0 && ib + 1 < nB) {
                            const double* p0 = f + base + std::size_t(ia) * sa + std::size_t(ib) * sb;
                            acc += (1 - wb) * ((1 - wa) * p0[0] + wa * p0[sa]) +
                                   wb * ((1 - wa) * p0[sb] + wa * p0[sa + sb]);
                        } else {
                            const bool a0 = ia >= 0 && ia < nA, a1 = ia + 1 >= 0 && ia + 1 < nA;
                            const bool b0 = ib >= 0 && ib < nB, b1 = ib + 1 >= 0 && ib + 1 < nB;
                            if (a0 && b0) acc += (1 - wa) * (1 - wb) * f[base + std::size_t(ia) * sa + std::size_t(ib) * sb];
                            if (a1 && b0) acc += wa * (1 - wb) * f[base + std::size_t(ia + 1) * sa + std::size_t(ib) * sb];
                            if (a0 && b1) acc += (1 - wa) * wb * f[base + std::size_t(ia) * sa + std::size_t(ib + 1) * sb];
                            if (a1 && b1) acc += wa * wb * f[base + std::size_t(ia + 1) * sa + std::size_t(ib + 1) * sb];
                        }
                    }
                    acc *= r.step;
                }
                out[std::size_t(iv) * geom_.det.nu + iu] = acc;
            }
        }
    }
}

void XrayTransform::adjoint(std::span<const double> y, std::span<double> x) const {
    if (x.size() != domain_size() || y.size() != range_size())
        throw std::invalid_argument("XrayTransform::adjoint: shape mismatch");
    const VolumeGrid& g = vol_;
    std::size_t st[3];
    volume_strides(g, st);
    const int dims[3] = {g.dims[0], g.dims[1], g.dims[2]};
    std::fill(x.begin(), x.end(), 0.0);
    double* f = x.data();

    // serial scatter: accumulation order is fixed, so results are
    // reproducible bit for bit independent of thread configuration
    for (int view = 0; view < geom_.nviews; ++view) {
        const Vec3 S = geom_.sources[view];
        const double* in = y.data() + geom_.det.idx(view, 0, 0);
        for (int iv = 0; iv < geom_.det.nv; ++iv) {
            for (int iu = 0; iu < geom_.det.nu; ++iu) {
                const double val = in[std::size_t(iv) * geom_.det.nu + iu];
                if (val == 0.0) continue;
                const Vec3 P = geom_.pixel_center(view, iu, iv);
                RaySampler r;
                if (!setup_ray(g, S, P, r)) continue;
                const std::size_t sk = st[r.k], sa = st[r.a], sb = st[r.b];
                const int nA = dims[r.a], nB = dims[r.b];
                const double v = val * r.step;
                double qa = r.qa0, qb = r.qb0;
                for (int j = r.j_lo; j <= r.j_hi; ++j, qa += r.dqa, qb += r.dqb) {
                    const int ia = int(std::floor(qa));
                    const int ib = int(std::floor(qb));
                    const double wa = qa - ia, wb = qb - ib;
                    const std::size_t base = std::size_t(j) * sk;
                    if (ia >= 0 && ia + 1 < nA && ib >= 0 && ib + 1 < nB) {
                        double* p0 = f + base + std::size_t(ia) * sa + std::size_t(ib) * sb;
                        p0[0] += (1 - wa) * (1 - wb) * v;
                        p0[sa] += wa * (1 - wb) * v;
                        p0[sb] += (1 - wa) * wb * v;
                        p0[sa + sb] += wa * wb * v;
                    } else {
                        const bool a0 = ia >= 0 && ia < nA, a1 = ia + 1 >= 0 && ia + 1 < nA;
                        const bool b0 = ib >= 0 && ib < nB, b1 = ib + 1 >= 0 && ib + 1 < nB;
                        if (a0 && b0) f[base + std::size_t(ia) * sa + std::size_t(ib) * sb] += (1 - wa) * (1 - wb) * v;
                        if (a1 && b0) f[base + std::size_t(ia + 1) * sa + std::size_t(ib) * sb] += wa * (1 - wb) * v;
                        if (a0 && b1) f[base + std::size_t(ia) * sa + std::size_t(ib + 1) * sb] += (1 - wa) * wb * v;
                        if (a1 && b1) f[base + std::size_t(ia + 1) * sa + std::size_t(ib + 1) * sb] += wa * wb * v;
                    }
                }
            }
        }
    }
}

ProjectionSet xray_forward(const ImageVolume& vol, const ScanGeometry& geom) {
    vol.validate();
    const XrayTransform op(vol.grid, geom);
    ProjectionSet p(geom.det);
    op.forward(vol.data, p.data);
    return p;
}

ImageVolume xray_adjoint(const ProjectionSet& p, const ScanGeometry& geom, const VolumeGrid& vol_grid) {
    p.validate();
    if (p.det.nviews != geom.det.nviews || p.det.nu != geom.det.nu || p.det.nv != geom.det.nv)
        throw std::invalid_argument("xray_adjoint: projection dims do not match geometry detector");
    const XrayTransform op(vol_grid, geom);
    ImageVolume vol(vol_grid);
    op.adjoint(p.data, vol.data);
    return vol;
}

}  // namespace dbtrec
