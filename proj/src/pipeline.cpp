#include "dbtrec/pipeline.hpp"

#include <cmath>
#include <stdexcept>

#include "dbtrec/filters.hpp"
#include "dbtrec/xray.hpp"

namespace dbtrec {

void CoupledProblemConfig::validate() const {
    const double sum = alpha_x + alpha_y + alpha_a + alpha_b + alpha_1;
    if (std::abs(sum - 1.0) > 1e-6)
        throw std::invalid_argument("CoupledProblemConfig: sparsity weights must sum to 1 (got " +
                                    std::to_string(sum) + ")");
    if (alpha_x < 0 || alpha_y < 0 || alpha_a < 0 || alpha_b < 0 || alpha_1 < 0 || alpha_3 < 0)
        throw std::invalid_argument("CoupledProblemConfig: negative weight");
    if (!(eps1 > 0.0) || !(eps2 > 0.0))
        throw std::invalid_argument("CoupledProblemConfig: eps1 and eps2 must be positive");
    if (ramp_cutoff < 0.0 || ramp_cutoff > 1.0)
        throw std::invalid_argument("CoupledProblemConfig: ramp cutoff must be in [0, 1]");
}

void TikhonovConfig::validate() const {
    if (alpha_tik < 0.0) throw std::invalid_argument("TikhonovConfig: alpha_tik must be >= 0");
    if (steps < 1) throw std::invalid_argument("TikhonovConfig: step count must be >= 1");
}

void DisplayConfig::validate() const {
    if (!(support_threshold > 0.0))
        throw std::invalid_argument("DisplayConfig: support threshold must be positive");
    if (dz < 0.0) throw std::invalid_argument("DisplayConfig: negative depth blur width");
}

ProjectionSet preprocess_transmission(const ProjectionSet& counts, int strip_v0, int strip_v1,
                                      double log_floor) {
    counts.det.validate();
    if (strip_v0 > strip_v1 || strip_v0 < 0 || strip_v1 >= counts.det.nv)
        throw std::invalid_argument("preprocess_transmission: empty or out-of-range strip");
    if (!(log_floor > 0.0))
        throw std::invalid_argument("preprocess_transmission: log floor must be positive");

    ProjectionSet g(counts.det);
    const int nrows = strip_v1 - strip_v0 + 1;
    std::vector<double> i0(counts.det.nu);
    for (int view = 0; view < counts.det.nviews; ++view) {
        for (int iu = 0; iu < counts.det.nu; ++iu) {
            double s = 0.0;
            for (int iv = strip_v0; iv <= strip_v1; ++iv) s += counts.at(view, iu, iv);
            i0[iu] = s / nrows;
            if (!(i0[iu] > 0.0))
                throw std::invalid_argument(
                    "preprocess_transmission: zero air fluence in the strip (all-zero counts?)");
        }
        for (int iv = 0; iv < counts.det.nv; ++iv)
            for (int iu = 0; iu < counts.det.nu; ++iu) {
                const double ratio = std::max(counts.at(view, iu, iv) / i0[iu], log_floor);
                g.at(view, iu, iv) = -std::log(ratio);
            }
    }
    return g;
}

ProblemSpec build_coupled_problem(const ProjectionSet& g, const ScanGeometry& geom,
                                  const VolumeGrid& vol, const CoupledProblemConfig& cfg) {
    cfg.validate();
    g.validate();
    vol.validate();
    if (g.det.nviews != geom.det.nviews || g.det.nu != geom.det.nu || g.det.nv != geom.det.nv)
        throw std::invalid_argument("build_coupled_problem: data does not match geometry detector");

    const std::size_t nvox = vol.nvox();
    const double sqrt_n = std::sqrt(double(g.size()));

    auto xray = std::make_shared<XrayTransform>(vol, geom);
    auto ramp = std::make_shared<SqrtRampFilter>(g.det, cfg.ramp_cutoff);
    auto blur1 = std::make_shared<GaussianBlur3D>(vol, cfg.d1);
    auto blur2 = std::make_shared<GaussianBlur3D>(vol, cfg.d2);
    auto data1 = std::make_shared<ComposeOp>(std::vector<OperatorPtr>{blur1, xray, ramp});
    auto data2 = std::make_shared<ComposeOp>(std::vector<OperatorPtr>{blur2, xray, ramp});

    // shared derivative/identity operators (one instance per kind; the norm
    // cache is then estimated once and reused by the f1 and f2 blocks)
    auto dx = std::make_shared<FiniteDiff>(vol, Axis::X);
    auto dy = std::make_shared<FiniteDiff>(vol, Axis::Y);
    auto da = std::make_shared<ObliqueDiff>(vol, -cfg.oblique_deg);
    auto db = std::make_shared<ObliqueDiff>(vol, +cfg.oblique_deg);
    auto id = std::make_shared<IdentityOp>(nvox);
    id->set_cached_norm(1.0);

    std::vector<double> center1 = apply_forward(*ramp, g.data);
    const GaussianBlurDet det_blur(g.det, cfg.dd);
    std::vector<double> blurred_g(g.size());
    det_blur.forward(g.data, blurred_g);
    std::vector<double> center2 = apply_forward(*ramp, blurred_g);

    ProblemSpec p;
    p.components = {nvox, nvox, nvox};
    p.coupling = CouplingKind::DifferenceCoupling;

    auto add_image_blocks = [&](int comp, OperatorPtr data_op, std::vector<double> center,
                                double eps, const std::string& tag) {
        BlockSpec data;
        data.op = std::move(data_op);
        data.component = comp;
        data.fun = SeparableFunction::l2_ball(std::move(center), eps * sqrt_n);
        data.has_xray = true;
        data.label = "data_" + tag;
        p.blocks.push_back(std::move(data));
        const std::pair<OperatorPtr, double> l1_blocks[] = {
            {dx, cfg.alpha_x}, {dy, cfg.alpha_y}, {da, cfg.alpha_a}, {db, cfg.alpha_b}, {id, cfg.alpha_1}};
        const char* names[] = {"dx", "dy", "da", "db", "id"};
        for (int i = 0; i < 5; ++i) {
            BlockSpec b;
            b.op = l1_blocks[i].first;
            b.component = comp;
            b.fun = SeparableFunction::l1(l1_blocks[i].second);
            b.label = std::string(names[i]) + "_" + tag;
            p.blocks.push_back(std::move(b));
        }
    };
    add_image_blocks(0, data1, std::move(center1), cfg.eps1, "f1");
    add_image_blocks(1, data2, std::move(center2), cfg.eps2, "f2");

    BlockSpec diff;
    diff.op = id;
    diff.component = 2;
    diff.fun = SeparableFunction::l1(cfg.alpha_3);
    diff.label = "l1_f3";
    p.blocks.push_back(std::move(diff));

    p.validate();
    return p;
}

LowresResult reconstruct_lowres(const ProjectionSet& g, const ScanGeometry& geom,
                                const VolumeGrid& vol, const CoupledProblemConfig& cfg,
                                const SolverConfig& solver) {
    ProblemSpec problem = build_coupled_problem(g, geom, vol, cfg);
    StepSizeConfig steps = compute_step_sizes(problem, solver.gamma, solver.beta, solver.power);
    steps.rho = solver.rho;
    SolveResult sol = solve(problem, steps, solver.stopping);

    LowresResult out;
    out.f1 = ImageVolume(vol);
    out.f2 = ImageVolume(vol);
    out.f3 = ImageVolume(vol);
    out.f1.data = std::move(sol.x[0]);
    out.f2.data = std::move(sol.x[1]);
    out.f3.data = std::move(sol.x[2]);
    out.report = std::move(sol.report);
    out.steps = std::move(steps);
    return out;
}

HighresResult reconstruct_highres(const ProjectionSet& g, const ScanGeometry& geom,
                                  const ImageVolume& h0, const TikhonovConfig& cfg) {
    cfg.validate();
    g.validate();
    h0.validate();
    if (g.det.nviews != geom.det.nviews || g.det.nu != geom.det.nu || g.det.nv != geom.det.nv)
        throw std::invalid_argument("reconstruct_highres: data does not match geometry detector");

    const GaussianBlur3D blur(h0.grid, cfg.d);
    const XrayTransform xray(h0.grid, geom);
    const SqrtRampFilter ramp(g.det, cfg.ramp_cutoff);
    const std::size_t nvox = h0.grid.nvox();
    const std::size_t npix = g.size();

    std::vector<double> b = apply_forward(ramp, g.data);

    HighresResult out;
    out.h = h0;
    std::vector<double> q(nvox), proj(npix), resid(npix), grad(nvox), tmp_v(nvox), tmp_p(npix);

    auto objective = [&](const std::vector<double>& q_of_h) {
        xray.forward(q_of_h, proj);
        ramp.forward(proj, resid);
        double data_term = 0.0;
        for (std::size_t i = 0; i < npix; ++i) {
            const double d = resid[i] - b[i];
            data_term += d * d;
        }
        double tik = 0.0;
        for (std::size_t i = 0; i < nvox; ++i) {
            const double d = q_of_h[i] - h0.data[i];
            tik += d * d;
        }
        return 0.5 * data_term + 0.5 * cfg.alpha_tik * tik;
    };

    blur.forward(out.h.data, q);
    out.objective_history.push_back(objective(q));

    for (int step = 0; step < cfg.steps; ++step) {
        // gradient = G^T [ X^T R (R X q - b) + alpha (q - h0) ],  q = G h
        xray.forward(q, proj);
        ramp.forward(proj, resid);
        for (std::size_t i = 0; i < npix; ++i) resid[i] -= b[i];
        ramp.forward(resid, tmp_p);  // R is self-adjoint
        xray.adjoint(tmp_p, tmp_v);
        for (std::size_t i = 0; i < nvox; ++i)
            tmp_v[i] += cfg.alpha_tik * (q[i] - h0.data[i]);
        blur.forward(tmp_v, grad);  // G is self-adjoint

        double g2 = 0.0;
        for (double v : grad) g2 += v * v;
        if (g2 == 0.0) {
            out.objective_history.push_back(out.objective_history.back());
            continue;
        }

        // exact line search along -grad for the quadratic objective
        blur.forward(grad, tmp_v);  // G p (direction sign handled below)
        xray.forward(tmp_v, proj);
        ramp.forward(proj, tmp_p);  // A p
        double denom = 0.0;
        for (double v : tmp_p) denom += v * v;
        double gp2 = 0.0;
        for (double v : tmp_v) gp2 += v * v;
        denom += cfg.alpha_tik * gp2;
        if (denom <= 0.0) {
            out.objective_history.push_back(out.objective_history.back());
            continue;
        }
        const double t = g2 / denom;
        for (std::size_t i = 0; i < nvox; ++i) out.h.data[i] -= t * grad[i];

        blur.forward(out.h.data, q);
        out.objective_history.push_back(objective(q));
    }
    return out;
}

SupportModel estimate_display_support(const ImageVolume& h2, double threshold) {
    SupportModel m;
    m.h_sup = ImageVolume(h2.grid);
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < h2.data.size(); ++i) {
        if (h2.data[i] > threshold) {
            m.h_sup.data[i] = 1.0;
            sum += h2.data[i];
            ++count;
        }
    }
    if (count == 0)
        throw std::runtime_error("estimate_display_support: empty support (threshold too high)");
    m.b = sum / double(count);
    return m;
}

ImageVolume form_display_fixed(const ImageVolume& h, const ImageVolume& h2,
                               const ImageVolume& h_sup, double b, double dz_fwhm) {
    if (!(h.grid == h2.grid) || !(h.grid == h_sup.grid))
        throw std::invalid_argument("form_display_fixed: grid mismatch");
    ImageVolume pre(h.grid);
    for (std::size_t i = 0; i < pre.data.size(); ++i)
        pre.data[i] = (h.data[i] - h2.data[i]) + b * h_sup.data[i];
    return gaussian_blur_3d(pre, {0.0, 0.0, dz_fwhm});
}

DisplayResult form_display(const ImageVolume& h, const ImageVolume& f2_low,
                           const DisplayConfig& cfg, Index3 up_factors) {
    cfg.validate();
    DisplayResult r;
    r.h2 = upsample_volume(f2_low, up_factors);
    if (!(r.h2.grid.dims == h.grid.dims))
        throw std::invalid_argument("form_display: upsampled background does not match h dims");
    SupportModel m = estimate_display_support(r.h2, cfg.support_threshold);
    r.h_sup = std::move(m.h_sup);
    r.b = m.b;
    r.h_disp = form_display_fixed(h, r.h2, r.h_sup, r.b, cfg.dz);
    return r;
}

}  // namespace dbtrec
