#include "dbtrec/filters.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

#include "dbtrec/fft.hpp"

namespace dbtrec {

std::vector<double> gaussian_kernel(double fwhm, double spacing) {
    if (fwhm < 0.0) throw std::invalid_argument("gaussian_kernel: negative width");
    if (!(spacing > 0.0)) throw std::invalid_argument("gaussian_kernel: spacing must be positive");
    const double sigma = fwhm / (2.0 * std::sqrt(2.0 * std::log(2.0)));
    const int radius = sigma > 0.0 ? int(std::floor(3.0 * sigma / spacing)) : 0;
    if (radius == 0) return {1.0};
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double x = i * spacing;
        k[i + radius] = std::exp(-0.5 * x * x / (sigma * sigma));
        sum += k[i + radius];
    }
    for (auto& v : k) v /= sum;
    return k;
}

namespace {
// half-sample symmetric index fold with period 2n
inline int reflect(int i, int n) {
    if (n == 1) return 0;
    const int p = 2 * n;
    i %= p;
    if (i < 0) i += p;
    return i < n ? i : p - 1 - i;
}
}  // namespace

void convolve_sym_reflect(std::span<const double> line, std::span<const double> kernel,
                          std::span<double> out) {
    const int n = int(line.size());
    const int radius = int(kernel.size() / 2);
    if (kernel.size() == 1) {
        for (int i = 0; i < n; ++i) out[i] = kernel[0] * line[i];
        return;
    }
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        if (i - radius >= 0 && i + radius < n) {
            const double* p = line.data() + (i - radius);
            for (int j = 0; j < 2 * radius + 1; ++j) s += kernel[j] * p[j];
        } else {
            for (int j = -radius; j <= radius; ++j) s += kernel[j + radius] * line[reflect(i + j, n)];
        }
        out[i] = s;
    }
}

GaussianBlur3D::GaussianBlur3D(const VolumeGrid& grid, Vec3 fwhm_cm) : grid_(grid) {
    grid_.validate();
    for (int a = 0; a < 3; ++a) {
        if (fwhm_cm[a] < 0.0) throw std::invalid_argument("GaussianBlur3D: negative width");
        kernels_[a] = gaussian_kernel(fwhm_cm[a], grid_.spacing[a]);
    }
}

void GaussianBlur3D::forward(std::span<const double> x, std::span<double> y) const {
    if (x.size() != grid_.nvox() || y.size() != grid_.nvox())
        throw std::invalid_argument("GaussianBlur3D: shape mismatch");
    const int nx = grid_.dims[0], ny = grid_.dims[1], nz = grid_.dims[2];
    std::copy(x.begin(), x.end(), y.begin());

    // x-axis: contiguous lines
    if (kernels_[0].size() > 1) {
        std::vector<double> tmp(nx);
#pragma omp parallel for schedule(static) firstprivate(tmp)
        for (long long line = 0; line < (long long)ny * nz; ++line) {
            double* row = y.data() + std::size_t(line) * nx;
            convolve_sym_reflect(std::span<const double>(row, nx), kernels_[0], tmp);
            std::copy(tmp.begin(), tmp.end(), row);
        }
    }
    // y-axis
    if (kernels_[1].size() > 1) {
        std::vector<double> in(ny), outl(ny);
#pragma omp parallel for schedule(static) firstprivate(in, outl)
        for (long long line = 0; line < (long long)nx * nz; ++line) {
            const int ix = int(line % nx);
            const int iz = int(line / nx);
            double* base = y.data() + grid_.idx(ix, 0, iz);
            for (int iy = 0; iy < ny; ++iy) in[iy] = base[std::size_t(iy) * nx];
            convolve_sym_reflect(in, kernels_[1], outl);
            for (int iy = 0; iy < ny; ++iy) base[std::size_t(iy) * nx] = outl[iy];
        }
    }
    // z-axis
    if (kernels_[2].size() > 1) {
        const std::size_t sz = std::size_t(nx) * ny;
        std::vector<double> in(nz), outl(nz);
#pragma omp parallel for schedule(static) firstprivate(in, outl)
        for (long long line = 0; line < (long long)nx * ny; ++line) {
            double* base = y.data() + std::size_t(line);
            for (int iz = 0; iz < nz; ++iz) in[iz] = base[iz * sz];
            convolve_sym_reflect(in, kernels_[2], outl);
            for (int iz = 0; iz < nz; ++iz) base[iz * sz] = outl[iz];
        }
    }
}

GaussianBlurDet::GaussianBlurDet(const DetectorGrid& det, Vec2 fwhm_cm) : det_(det) {
    det_.validate();
    if (fwhm_cm[0] < 0.0 || fwhm_cm[1] < 0.0)
        throw std::invalid_argument("GaussianBlurDet: negative width");
    ku_ = gaussian_kernel(fwhm_cm[0], det_.pitch_u);
    kv_ = gaussian_kernel(fwhm_cm[1], det_.pitch_v);
}

void GaussianBlurDet::forward(std::span<const double> x, std::span<double> y) const {
    if (x.size() != det_.npix() || y.size() != det_.npix())
        throw std::invalid_argument("GaussianBlurDet: shape mismatch");
    const int nu = det_.nu, nv = det_.nv;
    std::copy(x.begin(), x.end(), y.begin());
    if (ku_.size() > 1) {
        std::vector<double> tmp(nu);
#pragma omp parallel for schedule(static) firstprivate(tmp)
        for (long long line = 0; line < (long long)det_.nviews * nv; ++line) {
            double* row = y.data() + std::size_t(line) * nu;
            convolve_sym_reflect(std::span<const double>(row, nu), ku_, tmp);
            std::copy(tmp.begin(), tmp.end(), row);
        }
    }
    if (kv_.size() > 1) {
        std::vector<double> in(nv), outl(nv);
#pragma omp parallel for schedule(static) firstprivate(in, outl)
        for (long long line = 0; line < (long long)det_.nviews * nu; ++line) {
            const int view = int(line / nu);
            const int iu = int(line % nu);
            double* base = y.data() + det_.idx(view, iu, 0);
            for (int iv = 0; iv < nv; ++iv) in[iv] = base[std::size_t(iv) * nu];
            convolve_sym_reflect(in, kv_, outl);
            for (int iv = 0; iv < nv; ++iv) base[std::size_t(iv) * nu] = outl[iv];
        }
    }
}

SqrtRampFilter::SqrtRampFilter(const DetectorGrid& det, double cutoff_fraction)
    : det_(det), cutoff_(cutoff_fraction) {
    det_.validate();
    if (cutoff_ < 0.0 || cutoff_ > 1.0)
        throw std::invalid_argument("SqrtRampFilter: cutoff must be in [0, 1]");
    padded_ = 2 * next_pow2(std::size_t(det_.nu));
    response_.resize(padded_);
    // bin k has |frequency| / nyquist = 2*min(k, L-k)/L
    for (std::size_t k = 0; k < padded_; ++k) {
        const std::size_t m = std::min(k, padded_ - k);
        const double frac = 2.0 * double(m) / double(padded_);
        response_[k] = frac <= cutoff_ + 1e-15 ? std::sqrt(frac) : 0.0;
    }
}

void SqrtRampFilter::forward(std::span<const double> x, std::span<double> y) const {
    if (x.size() != det_.npix() || y.size() != det_.npix())
        throw std::invalid_argument("SqrtRampFilter: shape mismatch");
    const int nu = det_.nu;
    std::vector<std::complex<double>> buf(padded_);
#pragma omp parallel for schedule(static) firstprivate(buf)
    for (long long line = 0; line < (long long)det_.nviews * det_.nv; ++line) {
        const double* row = x.data() + std::size_t(line) * nu;
        std::fill(buf.begin(), buf.end(), std::complex<double>(0.0, 0.0));
        for (int i = 0; i < nu; ++i) buf[i] = row[i];
        fft(buf, false);
        for (std::size_t k = 0; k < padded_; ++k) buf[k] *= response_[k];
        fft(buf, true);
        double* out = y.data() + std::size_t(line) * nu;
        for (int i = 0; i < nu; ++i) out[i] = buf[i].real();
    }
}

FiniteDiff::FiniteDiff(const VolumeGrid& grid, Axis axis) : grid_(grid), axis_(int(axis)) {
    grid_.validate();
}

void FiniteDiff::forward(std::span<const double> x, std::span<double> y) const {
    if (x.size() != grid_.nvox() || y.size() != grid_.nvox())
        throw std::invalid_argument("FiniteDiff: shape mismatch");
    const int n = grid_.dims[axis_];
    const double inv_h = 1.0 / grid_.spacing[axis_];
    std::size_t stride = 1;
    for (int a = 0; a < axis_; ++a) stride *= std::size_t(grid_.dims[a]);
    const std::size_t total = grid_.nvox();
    const std::size_t block = stride * std::size_t(n);  // one full axis span

#pragma omp parallel for schedule(static)
    for (long long outer = 0; outer < (long long)(total / block); ++outer) {
        const double* in = x.data() + std::size_t(outer) * block;
        double* out = y.data() + std::size_t(outer) * block;
        for (std::size_t off = 0; off < stride; ++off) {
            for (int i = 0; i + 1 < n; ++i)
                out[off + std::size_t(i) * stride] =
                    (in[off + std::size_t(i + 1) * stride] - in[off + std::size_t(i) * stride]) * inv_h;
            out[off + std::size_t(n - 1) * stride] = 0.0;
        }
    }
}

void FiniteDiff::adjoint(std::span<const double> y, std::span<double> x) const {
    if (x.size() != grid_.nvox() || y.size() != grid_.nvox())
        throw std::invalid_argument("FiniteDiff: shape mismatch");
    const int n = grid_.dims[axis_];
    const double inv_h = 1.0 / grid_.spacing[axis_];
    std::size_t stride = 1;
    for (int a = 0; a < axis_; ++a) stride *= std::size_t(grid_.dims[a]);
    const std::size_t total = grid_.nvox();
    const std::size_t block = stride * std::size_t(n);

#pragma omp parallel for schedule(static)
    for (long long outer = 0; outer < (long long)(total / block); ++outer) {
        const double* in = y.data() + std::size_t(outer) * block;
        double* out = x.data() + std::size_t(outer) * block;
        for (std::size_t off = 0; off < stride; ++off) {
            // transpose of the forward stencil: out_0 = -y_0/h,
            // out_i = (y_{i-1} - y_i)/h, out_{n-1} = y_{n-2}/h
            if (n == 1) {
                out[off] = 0.0;
                continue;
            }
            out[off] = -in[off] * inv_h;
            for (int i = 1; i + 1 < n; ++i)
                out[off + std::size_t(i) * stride] =
                    (in[off + std::size_t(i - 1) * stride] - in[off + std::size_t(i) * stride]) * inv_h;
            out[off + std::size_t(n - 1) * stride] = in[off + std::size_t(n - 2) * stride] * inv_h;
        }
    }
}

ObliqueDiff::ObliqueDiff(const VolumeGrid& grid, double theta_deg)
    : grid_(grid), theta_deg_(theta_deg) {
    grid_.validate();
    const double rad = theta_deg * std::acos(-1.0) / 180.0;
    cos_ = std::cos(rad);
    sin_ = std::sin(rad);
}

void ObliqueDiff::forward(std::span<const double> x, std::span<double> y) const {
    FiniteDiff dx(grid_, Axis::X), dz(grid_, Axis::Z);
    std::vector<double> tmp(grid_.nvox());
    dx.forward(x, y);
    for (auto& v : y) v *= cos_;
    dz.forward(x, tmp);
    for (std::size_t i = 0; i < tmp.size(); ++i) y[i] += sin_ * tmp[i];
}

void ObliqueDiff::adjoint(std::span<const double> y, std::span<double> x) const {
    FiniteDiff dx(grid_, Axis::X), dz(grid_, Axis::Z);
    std::vector<double> tmp(grid_.nvox());
    dx.adjoint(y, x);
    for (auto& v : x) v *= cos_;
    dz.adjoint(y, tmp);
    for (std::size_t i = 0; i < tmp.size(); ++i) x[i] += sin_ * tmp[i];
}

ImageVolume gaussian_blur_3d(const ImageVolume& vol, Vec3 fwhm_cm) {
    const GaussianBlur3D op(vol.grid, fwhm_cm);
    ImageVolume out(vol.grid);
    op.forward(vol.data, out.data);
    return out;
}

ProjectionSet gaussian_blur_det(const ProjectionSet& p, Vec2 fwhm_cm) {
    const GaussianBlurDet op(p.det, fwhm_cm);
    ProjectionSet out(p.det);
    op.forward(p.data, out.data);
    return out;
}

ProjectionSet sqrt_ramp_filter(const ProjectionSet& p, double cutoff_fraction) {
    const SqrtRampFilter op(p.det, cutoff_fraction);
    ProjectionSet out(p.det);
    op.forward(p.data, out.data);
    return out;
}

ImageVolume finite_diff(const ImageVolume& vol, Axis axis) {
    const FiniteDiff op(vol.grid, axis);
    ImageVolume out(vol.grid);
    op.forward(vol.data, out.data);
    return out;
}

ImageVolume oblique_diff(const ImageVolume& vol, double theta_deg) {
    const ObliqueDiff op(vol.grid, theta_deg);
    ImageVolume out(vol.grid);
    op.forward(vol.data, out.data);
    return out;
}

}  // namespace dbtrec
