#include "dbtrec/sim.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "dbtrec/filters.hpp"
#include "dbtrec/xray.hpp"

namespace dbtrec {

namespace {

bool inside_envelope(const PhantomSpec& s, const Vec3& p) {
    if (p[1] < s.envelope_center[1]) return false;  // flat chest-wall face
    double q = 0.0;
    for (int a = 0; a < 3; ++a) {
        const double d = (p[a] - s.envelope_center[a]) / s.envelope_half[a];
        q += d * d;
    }
    return q <= 1.0;
}

bool inside_inclusion(const Inclusion& inc, const Vec3& p) {
    if (inc.shape == Inclusion::Shape::Sphere) {
        const Vec3 d = p - inc.center;
        return dot(d, d) <= inc.radius * inc.radius;
    }
    // rod: cylinder of given radius and half-length along inc.axis
    const Vec3 d = p - inc.center;
    if (std::abs(d[inc.axis]) > inc.half_length) return false;
    double r2 = 0.0;
    for (int a = 0; a < 3; ++a)
        if (a != inc.axis) r2 += d[a] * d[a];
    return r2 <= inc.radius * inc.radius;
}

double attenuation_at(const PhantomSpec& s, const Vec3& p) {
    if (!inside_envelope(s, p)) return 0.0;
    double v = s.background;
    for (const auto& inc : s.inclusions)
        if (inside_inclusion(inc, p)) v += inc.contrast;
    return v;
}

}  // namespace

void PhantomSpec::validate() const {
    for (int a = 0; a < 3; ++a)
        if (!(envelope_half[a] > 0.0))
            throw std::invalid_argument("PhantomSpec: envelope half-widths must be positive");
    if (background < 0.0) throw std::invalid_argument("PhantomSpec: negative background attenuation");
    if (supersample < 1) throw std::invalid_argument("PhantomSpec: supersample must be >= 1");
    const double min_half = std::min({envelope_half[0], envelope_half[1], envelope_half[2]});
    for (const auto& inc : this->inclusions) {
        if (inc.contrast < -background)
            throw std::invalid_argument("PhantomSpec: inclusion would make attenuation negative");
        const double reach =
            inc.shape == Inclusion::Shape::Sphere
                ? inc.radius
                : std::sqrt(inc.radius * inc.radius + inc.half_length * inc.half_length);
        // conservative containment check
        double q = 0.0;
        for (int a = 0; a < 3; ++a) {
            const double d = (inc.center[a] - envelope_center[a]) / envelope_half[a];
            q += d * d;
        }
        if (std::sqrt(q) + reach / min_half > 1.0)
            throw std::invalid_argument("PhantomSpec: inclusion outside the envelope");
        if (inc.center[1] - reach < envelope_center[1])
            throw std::invalid_argument("PhantomSpec: inclusion crosses the flat envelope face");
    }
}

ImageVolume make_phantom(const PhantomSpec& spec, const VolumeGrid& grid) {
    spec.validate();
    grid.validate();
    ImageVolume vol(grid);
    const int ss = spec.supersample;
    const double inv_ss3 = 1.0 / double(ss * ss * ss);

#pragma omp parallel for schedule(static)
    for (int iz = 0; iz < grid.dims[2]; ++iz)
        for (int iy = 0; iy < grid.dims[1]; ++iy)
            for (int ix = 0; ix < grid.dims[0]; ++ix) {
                double acc = 0.0;
                for (int sz = 0; sz < ss; ++sz)
                    for (int sy = 0; sy < ss; ++sy)
                        for (int sx = 0; sx < ss; ++sx) {
                            const Vec3 p{
                                grid.origin[0] + (ix + (sx + 0.5) / ss) * grid.spacing[0],
                                grid.origin[1] + (iy + (sy + 0.5) / ss) * grid.spacing[1],
                                grid.origin[2] + (iz + (sz + 0.5) / ss) * grid.spacing[2]};
                            acc += attenuation_at(spec, p);
                        }
                vol.at(ix, iy, iz) = acc * inv_ss3;
            }

    if (spec.texture_seed != 0) {
        // seeded smooth multiplicative texture inside the envelope
        std::mt19937_64 rng(spec.texture_seed);
        std::normal_distribution<double> gauss(0.0, 1.0);
        ImageVolume noise(grid);
        for (auto& v : noise.data) v = gauss(rng);
        const double c = spec.texture_corr_cm;
        const ImageVolume smooth = gaussian_blur_3d(noise, {c, c, c});
        double mean = 0.0, m2 = 0.0;
        for (double v : smooth.data) mean += v;
        mean /= double(smooth.data.size());
        for (double v : smooth.data) m2 += (v - mean) * (v - mean);
        const double sd = std::sqrt(m2 / double(smooth.data.size()));
        if (sd > 0.0)
            for (std::size_t i = 0; i < vol.data.size(); ++i)
                if (vol.data[i] > 0.0)
                    vol.data[i] *= 1.0 + spec.texture_amplitude * (smooth.data[i] - mean) / sd;
    }
    return vol;
}

ImageVolume inclusion_mask(const PhantomSpec& spec, const VolumeGrid& grid) {
    ImageVolume mask(grid);
    for (int iz = 0; iz < grid.dims[2]; ++iz)
        for (int iy = 0; iy < grid.dims[1]; ++iy)
            for (int ix = 0; ix < grid.dims[0]; ++ix) {
                const Vec3 p{grid.center_coord(0, ix), grid.center_coord(1, iy),
                             grid.center_coord(2, iz)};
                for (const auto& inc : spec.inclusions)
                    if (inside_inclusion(inc, p)) {
                        mask.at(ix, iy, iz) = 1.0;
                        break;
                    }
            }
    return mask;
}

std::vector<double> smooth_field_1d(int n, double spacing, double corr_cm, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> noise(n);
    for (auto& v : noise) v = gauss(rng);
    const auto kernel = gaussian_kernel(corr_cm, spacing);
    std::vector<double> out(n);
    convolve_sym_reflect(noise, kernel, out);
    double mean = 0.0;
    for (double v : out) mean += v;
    mean /= double(n);
    double var = 0.0;
    for (double v : out) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / double(n));
    for (auto& v : out) v = sd > 0.0 ? (v - mean) / sd : 0.0;
    return out;
}

std::vector<double> smooth_field_2d(int nu, int nv, double pu, double pv, double corr_cm,
                                    std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    DetectorGrid det{1, nu, nv, pu, pv};
    ProjectionSet noise(det);
    for (auto& v : noise.data) v = gauss(rng);
    const ProjectionSet smooth = gaussian_blur_det(noise, {corr_cm, corr_cm});
    std::vector<double> out = smooth.data;
    double mean = 0.0;
    for (double v : out) mean += v;
    mean /= double(out.size());
    double var = 0.0;
    for (double v : out) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / double(out.size()));
    for (auto& v : out) v = sd > 0.0 ? (v - mean) / sd : 0.0;
    return out;
}

ProjectionSet simulate_acquisition(const ImageVolume& phantom, const ScanGeometry& geom,
                                   const std::vector<ArtifactSpec>& artifacts,
                                   const AcquisitionOptions& opt) {
    if (!(opt.i0 > 0.0)) throw std::invalid_argument("simulate_acquisition: i0 must be positive");
    geom.validate();
    ProjectionSet g = xray_forward(phantom, geom);

    // reference scale for artifact amplitudes: mean line integral over the
    // object's projection support
    double mean_signal = 0.0;
    std::size_t support = 0;
    for (double v : g.data)
        if (v > 1e-9) {
            mean_signal += v;
            ++support;
        }
    mean_signal = support > 0 ? mean_signal / double(support) : 0.0;

    std::vector<double> fluence_scale;  // multiplicative on counts, per (u, v)
    for (const auto& art : artifacts) {
        if (art.kind == ArtifactSpec::Kind::AdditiveSmoothProjection) {
            const auto field = smooth_field_2d(geom.det.nu, geom.det.nv, geom.det.pitch_u,
                                               geom.det.pitch_v, art.correlation_cm, art.seed);
            const double amp = art.amplitude * mean_signal;
            for (int view = 0; view < geom.det.nviews; ++view)
                for (int iv = 0; iv < geom.det.nv; ++iv)
                    for (int iu = 0; iu < geom.det.nu; ++iu)
                        g.at(view, iu, iv) += amp * field[std::size_t(iv) * geom.det.nu + iu];
        } else {
            // u-smooth illumination error with a v gradient, so the strip
            // estimate cannot cancel it completely
            const auto su = smooth_field_1d(geom.det.nu, geom.det.pitch_u, art.correlation_cm, art.seed);
            if (fluence_scale.empty()) fluence_scale.assign(std::size_t(geom.det.nu) * geom.det.nv, 1.0);
            for (int iv = 0; iv < geom.det.nv; ++iv) {
                const double ramp = geom.det.nv > 1 ? (2.0 * iv / (geom.det.nv - 1) - 1.0) : 0.0;
                for (int iu = 0; iu < geom.det.nu; ++iu)
                    fluence_scale[std::size_t(iv) * geom.det.nu + iu] *=
                        std::max(0.05, 1.0 + art.amplitude * su[iu] * ramp);
            }
        }
    }

    ProjectionSet counts(geom.det);
    for (int view = 0; view < geom.det.nviews; ++view) {
        for (int iv = 0; iv < geom.det.nv; ++iv)
            for (int iu = 0; iu < geom.det.nu; ++iu) {
                double c = opt.i0 * std::exp(-g.at(view, iu, iv));
                if (!fluence_scale.empty()) c *= fluence_scale[std::size_t(iv) * geom.det.nu + iu];
                counts.at(view, iu, iv) = c;
            }
    }

    if (opt.poisson) {
        // independent stream per view keeps results stable under any
        // parallel split of the view loop
        for (int view = 0; view < geom.det.nviews; ++view) {
            std::seed_seq seq{opt.seed, std::uint64_t(view)};
            std::mt19937_64 rng(seq);
            for (int iv = 0; iv < geom.det.nv; ++iv)
                for (int iu = 0; iu < geom.det.nu; ++iu) {
                    std::poisson_distribution<long long> pois(counts.at(view, iu, iv));
                    counts.at(view, iu, iv) = double(pois(rng));
                }
        }
    }
    return counts;
}

InverseCrimeData inverse_crime_dataset(const ImageVolume& phantom, const ScanGeometry& geom,
                                       Vec3 d1_fwhm_cm) {
    InverseCrimeData out;
    out.truth = phantom;
    out.g = xray_forward(gaussian_blur_3d(phantom, d1_fwhm_cm), geom);
    return out;
}

}  // namespace dbtrec
