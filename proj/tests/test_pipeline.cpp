#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "dbtrec/config.hpp"
#include "dbtrec/filters.hpp"
#include "dbtrec/sim.hpp"
#include "dbtrec/xray.hpp"

using namespace dbtrec;

namespace {

// small coupled instance that solves in seconds
struct SmallSetup {
    ScanGeometry geom_low;
    VolumeGrid grid;
    PhantomSpec phantom;
    CoupledProblemConfig cfg;
};

SmallSetup small_setup() {
    SmallSetup s;
    DetectorGrid det_low{9, 16, 8, 0.2, 0.2};
    s.geom_low = make_arc_geometry(9, 50.0, 10.0, 12.0, det_low);
    s.grid = make_centered_grid({16, 16, 8}, {0.2, 0.2, 0.4});
    s.phantom.envelope_half = {0.6, 1.0, 0.5};
    s.phantom.envelope_center = {0.0, -0.5, 0.0};
    s.phantom.background = 0.25;
    s.phantom.supersample = 1;
    s.phantom.inclusions = {{Inclusion::Shape::Sphere, {0.1, -0.2, 0.1}, 0.2, 0.0, 0, 0.15}};
    s.cfg.d1 = s.grid.spacing;
    s.cfg.d2 = {1.0, 1.0, s.grid.spacing[2]};
    s.cfg.dd = {1.2, 1.2};
    s.cfg.oblique_deg = 25.0;
    return s;
}

const char* kDeskConfigText = R"(
[geometry]
nviews = 25
arc_deg = 50
sid_cm = 30
sdd_cm = 34.5
det_nu = 256
det_nv = 128
det_pitch_u_cm = 0.034
det_pitch_v_cm = 0.034

[lowres]
nx = 64
ny = 64
nz = 32
voxel_cm = 0.136 0.136 0.272
down_u = 4
down_v = 4
strip_v0 = 116
strip_v1 = 127
alpha_x = 5/9
alpha_y = 1/9
alpha_a = 1/9
alpha_b = 1/9
alpha_1 = 1/9
alpha_3 = 0.1
eps1 = 0.015
eps2 = 0.015
d1 = 0.136 0.136 0.272
d2 = 1.5 1.5 0.272
dd = 2.0 2.0
c = 1.0

[solver]
gamma = 5
beta = 100
rho = 1.75
max_iters = 2000

[highres]
alpha_tik = 0.1
steps = 10
up_x = 4
up_y = 4
up_z = 2

[display]
threshold = 0.1
dz = 0.085
)";

}  // namespace

TEST_CASE("preprocessing: flat field maps to zero, object factors survive the log") {
    DetectorGrid det{2, 8, 12, 0.1, 0.1};
    ProjectionSet counts(det);
    for (int view = 0; view < 2; ++view)
        for (int iv = 0; iv < 12; ++iv)
            for (int iu = 0; iu < 8; ++iu) counts.at(view, iu, iv) = 500.0 * (1.0 + 0.1 * iu);
    const ProjectionSet g = preprocess_transmission(counts, 9, 11);
    for (double v : g.data) CHECK(std::abs(v) < 1e-12);

    // attenuated region recovers its line integral
    ProjectionSet counts2 = counts;
    counts2.at(0, 3, 4) *= std::exp(-0.7);
    const ProjectionSet g2 = preprocess_transmission(counts2, 9, 11);
    CHECK(g2.at(0, 3, 4) == doctest::Approx(0.7).epsilon(1e-9));
}

TEST_CASE("preprocessing rejects empty strips and all-zero counts; clamps zeros") {
    DetectorGrid det{1, 4, 6, 0.1, 0.1};
    ProjectionSet counts(det);
    for (auto& v : counts.data) v = 100.0;
    CHECK_THROWS_AS((void)preprocess_transmission(counts, 4, 2), std::invalid_argument);
    CHECK_THROWS_AS((void)preprocess_transmission(counts, 2, 6), std::invalid_argument);

    ProjectionSet zeros(det);
    CHECK_THROWS_AS((void)preprocess_transmission(zeros, 4, 5), std::invalid_argument);

    // an isolated dead pixel hits the log floor instead of -inf
    ProjectionSet dead = counts;
    dead.at(0, 1, 1) = 0.0;
    const ProjectionSet g = preprocess_transmission(dead, 4, 5, 1e-6);
    CHECK(g.at(0, 1, 1) == doctest::Approx(-std::log(1e-6)));
}

TEST_CASE("coupled problem: 13 blocks in the documented layout") {
    SmallSetup s = small_setup();
    const ImageVolume phantom = make_phantom(s.phantom, s.grid);
    const InverseCrimeData data = inverse_crime_dataset(phantom, s.geom_low, s.cfg.d1);
    const ProblemSpec p = build_coupled_problem(data.g, s.geom_low, s.grid, s.cfg);

    REQUIRE(p.blocks.size() == 13);
    CHECK(p.components == std::vector<std::size_t>(3, s.grid.nvox()));
    CHECK(p.coupling == CouplingKind::DifferenceCoupling);

    // blocks 1-6 act on f1, 7-12 on f2, 13 on f3
    for (int i = 0; i < 6; ++i) CHECK(p.blocks[i].component == 0);
    for (int i = 6; i < 12; ++i) CHECK(p.blocks[i].component == 1);
    CHECK(p.blocks[12].component == 2);

    // data balls with radius eps * sqrt(N_data)
    const double sqrt_n = std::sqrt(double(data.g.size()));
    CHECK(p.blocks[0].fun.kind == FunKind::L2Ball);
    CHECK(p.blocks[6].fun.kind == FunKind::L2Ball);
    CHECK(p.blocks[0].fun.radius == doctest::Approx(s.cfg.eps1 * sqrt_n));
    CHECK(p.blocks[6].fun.radius == doctest::Approx(s.cfg.eps2 * sqrt_n));
    CHECK(p.blocks[0].has_xray);
    CHECK(p.blocks[6].has_xray);
    CHECK(p.blocks[0].op->range_size() == data.g.size());

    // l1 weights follow the config in (x, y, a, b, identity) order
    const double weights[5] = {s.cfg.alpha_x, s.cfg.alpha_y, s.cfg.alpha_a, s.cfg.alpha_b,
                               s.cfg.alpha_1};
    for (int k = 0; k < 5; ++k) {
        CHECK(p.blocks[1 + k].fun.kind == FunKind::L1);
        CHECK(p.blocks[1 + k].fun.weight == doctest::Approx(weights[k]));
        CHECK(p.blocks[7 + k].fun.weight == doctest::Approx(weights[k]));
        CHECK(!p.blocks[1 + k].has_xray);
    }
    CHECK(p.blocks[12].fun.weight == doctest::Approx(s.cfg.alpha_3));

    // centers: R g for block 1, R G_det[dd] g for block 7
    const SqrtRampFilter ramp(data.g.det, s.cfg.ramp_cutoff);
    const auto rg = apply_forward(ramp, data.g.data);
    for (std::size_t i = 0; i < rg.size(); ++i)
        CHECK(p.blocks[0].fun.center[i] == doctest::Approx(rg[i]).epsilon(1e-12));
    const auto blurred = gaussian_blur_det(data.g, s.cfg.dd);
    const auto rbg = apply_forward(ramp, blurred.data);
    for (std::size_t i = 0; i < rbg.size(); ++i)
        CHECK(p.blocks[6].fun.center[i] == doctest::Approx(rbg[i]).epsilon(1e-12));
}

TEST_CASE("coupled config validation enforces the weight normalization") {
    CoupledProblemConfig cfg;
    cfg.alpha_x = 0.5;  // sum now != 1
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    CoupledProblemConfig ok;
    ok.validate();
    CHECK(ok.alpha_x == doctest::Approx(5.0 / 9.0));
    CHECK(ok.alpha_3 == doctest::Approx(0.1));
    CHECK(ok.eps1 == doctest::Approx(0.015));
}

TEST_CASE("lowres solve: with identical data blocks and alpha_3 = 0, f1 equals f2") {
    SmallSetup s = small_setup();
    ImageVolume phantom = make_phantom(s.phantom, s.grid);
    CoupledProblemConfig cfg = s.cfg;
    cfg.alpha_3 = 0.0;
    cfg.d2 = cfg.d1;   // identical image model
    cfg.dd = {0.0, 0.0};  // identical data
    cfg.eps1 = cfg.eps2 = 0.01;
    const InverseCrimeData data = inverse_crime_dataset(phantom, s.geom_low, cfg.d1);

    SolverConfig solver;
    solver.stopping.max_iters = 600;
    solver.power.rel_tol = 1e-3;
    const LowresResult res = reconstruct_lowres(data.g, s.geom_low, s.grid, cfg, solver);

    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < res.f1.data.size(); ++i) {
        num += (res.f1.data[i] - res.f2.data[i]) * (res.f1.data[i] - res.f2.data[i]);
        den += res.f1.data[i] * res.f1.data[i];
    }
    CHECK(den > 0.0);
    CHECK(std::sqrt(num / den) < 1e-3);
    // coupling holds exactly on the returned volumes
    for (std::size_t i = 0; i < res.f1.data.size(); ++i)
        CHECK(std::abs(res.f1.data[i] - res.f2.data[i] - res.f3.data[i]) < 1e-12);
}

TEST_CASE("lowres solve: slack constraints with all-l1 objective give zero volumes") {
    SmallSetup s = small_setup();
    ImageVolume phantom = make_phantom(s.phantom, s.grid);
    CoupledProblemConfig cfg = s.cfg;
    cfg.eps1 = cfg.eps2 = 50.0;  // far above the zero-image residual
    const InverseCrimeData data = inverse_crime_dataset(phantom, s.geom_low, cfg.d1);
    SolverConfig solver;
    solver.stopping.max_iters = 100;
    solver.power.rel_tol = 1e-3;
    const LowresResult res = reconstruct_lowres(data.g, s.geom_low, s.grid, cfg, solver);
    for (double v : res.f1.data) CHECK(v == 0.0);
    for (double v : res.f2.data) CHECK(v == 0.0);
    for (double v : res.f3.data) CHECK(v == 0.0);
}

TEST_CASE("highres stage: zero data and zero start stay zero; objective never increases") {
    DetectorGrid det{5, 24, 12, 0.1, 0.1};
    const ScanGeometry geom = make_arc_geometry(5, 40.0, 8.0, 10.0, det);
    const VolumeGrid hr = make_centered_grid({16, 12, 8}, {0.1, 0.1, 0.2});
    TikhonovConfig cfg;
    cfg.d = {0.1, 0.1, 0.2};
    cfg.steps = 10;

    const ProjectionSet zero_g(det);
    const ImageVolume zero_h(hr);
    const HighresResult res0 = reconstruct_highres(zero_g, geom, zero_h, cfg);
    for (double v : res0.h.data) CHECK(v == 0.0);

    // generic data: exact line search cannot increase the quadratic objective
    PhantomSpec ps;
    ps.envelope_half = {0.5, 0.8, 0.5};
    ps.envelope_center = {0.0, -0.4, 0.0};
    ps.background = 0.3;
    const ImageVolume phantom = make_phantom(ps, hr);
    const ProjectionSet g = xray_forward(phantom, geom);
    const HighresResult res = reconstruct_highres(g, geom, zero_h, cfg);
    REQUIRE(res.objective_history.size() == 11);
    for (std::size_t i = 1; i < res.objective_history.size(); ++i)
        CHECK(res.objective_history[i] <= res.objective_history[i - 1] * (1.0 + 1e-12));
    CHECK(res.objective_history.back() < res.objective_history.front());
}

TEST_CASE("highres stage: analytic gradient matches central differences of the objective") {
    DetectorGrid det{3, 12, 8, 0.15, 0.15};
    const ScanGeometry geom = make_arc_geometry(3, 30.0, 6.0, 8.0, det);
    const VolumeGrid hr = make_centered_grid({8, 6, 4}, {0.15, 0.15, 0.3});
    TikhonovConfig cfg;
    cfg.d = {0.2, 0.2, 0.4};
    cfg.alpha_tik = 0.1;

    std::mt19937_64 rng(55);
    std::normal_distribution<double> gauss(0.0, 1.0);
    ProjectionSet g(det);
    for (auto& v : g.data) v = 0.1 * gauss(rng);
    ImageVolume h0(hr);
    for (auto& v : h0.data) v = 0.1 * gauss(rng);
    ImageVolume h(hr);
    for (auto& v : h.data) v = 0.1 * gauss(rng);

    const GaussianBlur3D blur(hr, cfg.d);
    const XrayTransform xray(hr, geom);
    const SqrtRampFilter ramp(det, cfg.ramp_cutoff);
    const auto b = apply_forward(ramp, g.data);
    auto objective = [&](const std::vector<double>& hv) {
        auto q = apply_forward(blur, hv);
        auto proj = apply_forward(xray, q);
        auto rp = apply_forward(ramp, proj);
        double data = 0.0;
        for (std::size_t i = 0; i < rp.size(); ++i) data += (rp[i] - b[i]) * (rp[i] - b[i]);
        double tik = 0.0;
        for (std::size_t i = 0; i < q.size(); ++i) tik += (q[i] - h0.data[i]) * (q[i] - h0.data[i]);
        return 0.5 * data + 0.5 * cfg.alpha_tik * tik;
    };
    // analytic gradient: G^T [X^T R (R X G h - b) + alpha (G h - h0)]
    auto q = apply_forward(blur, h.data);
    auto proj = apply_forward(xray, q);
    auto rp = apply_forward(ramp, proj);
    for (std::size_t i = 0; i < rp.size(); ++i) rp[i] -= b[i];
    auto rr = apply_forward(ramp, rp);
    auto bp = apply_adjoint(xray, rr);
    for (std::size_t i = 0; i < bp.size(); ++i) bp[i] += cfg.alpha_tik * (q[i] - h0.data[i]);
    const auto grad = apply_forward(blur, bp);

    // central differences along random directions are exact for quadratics
    for (int rep = 0; rep < 4; ++rep) {
        std::vector<double> dir(h.data.size());
        for (auto& v : dir) v = gauss(rng);
        const double step = 1e-4;
        std::vector<double> hp = h.data, hm = h.data;
        for (std::size_t i = 0; i < dir.size(); ++i) {
            hp[i] += step * dir[i];
            hm[i] -= step * dir[i];
        }
        const double fd = (objective(hp) - objective(hm)) / (2.0 * step);
        double an = 0.0;
        for (std::size_t i = 0; i < dir.size(); ++i) an += grad[i] * dir[i];
        CHECK(std::abs(fd - an) <= 1e-5 * std::max(1.0, std::abs(an)));
    }
}

TEST_CASE("display formation: h equal to the background gives the support level") {
    const VolumeGrid low = make_centered_grid({4, 4, 2}, {0.2, 0.2, 0.4});
    ImageVolume f2(low);
    for (int z = 0; z < 2; ++z)
        for (int y = 1; y < 3; ++y)
            for (int x = 1; x < 3; ++x) f2.at(x, y, z) = 0.3;
    DisplayConfig cfg;
    cfg.support_threshold = 0.1;
    cfg.dz = 0.0;  // no depth blur: the identity on z
    const Index3 up{2, 2, 2};
    const ImageVolume h = upsample_volume(f2, up);  // h == h2 exactly
    const DisplayResult res = form_display(h, f2, cfg, up);
    for (std::size_t i = 0; i < res.h_disp.data.size(); ++i) {
        const double expect = res.h_sup.data[i] > 0.5 ? res.b : 0.0;
        CHECK(res.h_disp.data[i] == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("display formation fails on an empty support") {
    const VolumeGrid low = make_centered_grid({4, 4, 2}, {0.2, 0.2, 0.4});
    const ImageVolume f2(low, 0.05);  // everywhere below the 0.1 threshold
    DisplayConfig cfg;
    const ImageVolume h = upsample_volume(f2, {2, 2, 2});
    CHECK_THROWS_AS((void)form_display(h, f2, cfg, {2, 2, 2}), std::runtime_error);
}

TEST_CASE("display formation with a fixed support model is constant-invariant") {
    const VolumeGrid low = make_centered_grid({4, 4, 4}, {0.2, 0.2, 0.2});
    std::mt19937_64 rng(8);
    std::normal_distribution<double> gauss(0.2, 0.1);
    ImageVolume f2(low);
    for (auto& v : f2.data) v = gauss(rng);
    const Index3 up{2, 2, 2};
    const ImageVolume h2 = upsample_volume(f2, up);
    const SupportModel m = estimate_display_support(h2, 0.1);
    VolumeGrid hrg = h2.grid;
    ImageVolume h(hrg);
    for (auto& v : h.data) v = gauss(rng);

    const ImageVolume base = form_display_fixed(h, h2, m.h_sup, m.b, 0.3);
    ImageVolume h_shift = h, h2_shift = h2;
    const double c = 0.37;
    for (auto& v : h_shift.data) v += c;
    for (auto& v : h2_shift.data) v += c;
    const ImageVolume shifted = form_display_fixed(h_shift, h2_shift, m.h_sup, m.b, 0.3);
    for (std::size_t i = 0; i < base.data.size(); ++i)
        CHECK(shifted.data[i] == doctest::Approx(base.data[i]).epsilon(1e-12));
}

TEST_CASE("pipeline config: fractions, defaults and derived values") {
    const PipelineConfig cfg = PipelineConfig::from_text(kDeskConfigText);
    CHECK(cfg.geometry.nviews == 25);
    CHECK(cfg.geometry.arc_deg == doctest::Approx(50.0));
    CHECK(cfg.coupled.alpha_x == doctest::Approx(5.0 / 9.0));
    CHECK(cfg.coupled.alpha_y == doctest::Approx(1.0 / 9.0));
    CHECK(cfg.coupled.alpha_3 == doctest::Approx(0.1));
    CHECK(cfg.coupled.eps1 == doctest::Approx(0.015));
    CHECK(cfg.coupled.oblique_deg == doctest::Approx(25.0));
    CHECK(cfg.solver.gamma == doctest::Approx(5.0));
    CHECK(cfg.solver.beta == doctest::Approx(100.0));
    CHECK(cfg.solver.rho == doctest::Approx(1.75));
    CHECK(cfg.tikhonov.alpha_tik == doctest::Approx(0.1));
    CHECK(cfg.tikhonov.steps == 10);
    CHECK(cfg.tikhonov.up_factors == Index3{4, 4, 2});
    // high-res blur width defaults to the refined voxel size
    CHECK(cfg.tikhonov.d[0] == doctest::Approx(0.034));
    CHECK(cfg.tikhonov.d[2] == doctest::Approx(0.136));
    CHECK(cfg.display.support_threshold == doctest::Approx(0.1));
    CHECK(cfg.display.dz == doctest::Approx(0.085));
    CHECK(cfg.preprocess.strip_v0 == 116);
    CHECK(cfg.preprocess.strip_v1 == 127);
}

TEST_CASE("pipeline config: errors are reported as config errors") {
    CHECK_THROWS_AS((void)PipelineConfig::from_file("missing_config.cfg"), ConfigError);
    CHECK_THROWS_AS((void)PipelineConfig::from_text("[geometry]\nnviews = 25\n"), ConfigError);
    CHECK_THROWS_AS((void)parse_number("abc"), ConfigError);
    CHECK(parse_number("5/9") == doctest::Approx(5.0 / 9.0));
    CHECK(parse_number("1e-3") == doctest::Approx(1e-3));
}

TEST_CASE("problem assembly rejects data that does not match the geometry") {
    SmallSetup s = small_setup();
    ProjectionSet wrong(DetectorGrid{9, 8, 8, 0.2, 0.2});  // nu mismatch
    CHECK_THROWS_AS((void)build_coupled_problem(wrong, s.geom_low, s.grid, s.cfg),
                    std::invalid_argument);
}

TEST_CASE("the shipped example configs parse and agree with the code defaults") {
    const std::string dir = std::string(DBTREC_SOURCE_DIR) + "/configs/";
    const PipelineConfig cfg = PipelineConfig::from_file(dir + "desk.cfg");
    CHECK(cfg.geometry.nviews == 25);
    CHECK(cfg.geometry.det.nu == 256);
    CHECK(cfg.coupled.alpha_x == doctest::Approx(5.0 / 9.0));
    CHECK(cfg.solver.rho == doctest::Approx(1.75));
    CHECK(!cfg.simulate.phantom_path.empty());
    const PhantomSpec phantom = load_phantom_spec(cfg.simulate.phantom_path);
    CHECK(phantom.inclusions.size() == 2);
    const auto artifacts = load_artifact_specs(cfg.simulate.artifact_path);
    CHECK(artifacts.size() == 1);

    // the clinical-scale config carries the published scan numbers
    const PipelineConfig full = PipelineConfig::from_file(dir + "fullscale.cfg");
    CHECK(full.geometry.det.nu == 3584);
    CHECK(full.geometry.det.nv == 2816);
    CHECK(full.geometry.det.pitch_u == doctest::Approx(0.0085));
    CHECK(full.preprocess.strip_v0 == 2000);
    CHECK(full.preprocess.strip_v1 == 2500);
    CHECK(full.lowres_grid.spacing[0] == doctest::Approx(0.034));
    CHECK(full.lowres_grid.spacing[2] == doctest::Approx(0.068));
    // refined voxels come out at 85 x 85 x 340 microns
    CHECK(full.tikhonov.d[0] == doctest::Approx(0.0085));
    CHECK(full.tikhonov.d[2] == doctest::Approx(0.034));
    CHECK(full.display.dz == doctest::Approx(0.085));
}

TEST_CASE("background-coupled initialization allows tighter display windows than zeroinit") {
    // end-to-end two-stage comparison on a small instance with an injected
    // smooth background artifact: the coupled path subtracts the estimated
    // background, so the displayed image varies less where the tissue is
    // actually uniform
    DetectorGrid det{9, 32, 32, 0.1, 0.1};
    const ScanGeometry geom = make_arc_geometry(9, 50.0, 10.0, 12.0, det);
    const VolumeGrid grid = make_centered_grid({16, 16, 8}, {0.2, 0.2, 0.4});

    PhantomSpec ps;
    ps.envelope_half = {0.7, 1.2, 0.7};
    ps.envelope_center = {0.0, -0.6, 0.0};
    ps.background = 0.3;
    ps.supersample = 1;
    const ImageVolume phantom = make_phantom(ps, grid);

    ArtifactSpec art;
    art.kind = ArtifactSpec::Kind::AdditiveSmoothProjection;
    art.amplitude = 0.15;
    art.correlation_cm = 1.5;
    art.seed = 23;
    AcquisitionOptions opt;
    opt.i0 = 1e5;
    const ProjectionSet counts = simulate_acquisition(phantom, geom, {art}, opt);
    const ProjectionSet g_full = preprocess_transmission(counts, 28, 31);
    const ProjectionSet g_low = downsample_projections(g_full, 2, 2);
    const ScanGeometry geom_low = geom.with_detector(g_low.det);

    CoupledProblemConfig cfg;
    cfg.d1 = grid.spacing;
    cfg.d2 = {1.0, 1.0, grid.spacing[2]};
    cfg.dd = {1.2, 1.2};
    cfg.eps1 = 0.004;
    cfg.eps2 = 0.006;
    SolverConfig solver;
    solver.power.rel_tol = 1e-3;
    solver.stopping.max_iters = 800;
    const LowresResult low = reconstruct_lowres(g_low, geom_low, grid, cfg, solver);

    TikhonovConfig tik;
    tik.up_factors = {2, 2, 1};
    tik.d = {0.1, 0.1, 0.4};
    const ImageVolume h0 = upsample_volume(low.f1, tik.up_factors);
    const HighresResult coupled = reconstruct_highres(g_full, geom, h0, tik);
    const ImageVolume h0_zero(h0.grid);
    const HighresResult zeroinit = reconstruct_highres(g_full, geom, h0_zero, tik);

    DisplayConfig disp;
    disp.support_threshold = 0.1;
    disp.dz = 0.0;
    const DisplayResult dtv = form_display(coupled.h, low.f2, disp, tik.up_factors);
    const ImageVolume zero_disp = zeroinit.h;  // no background model to subtract

    // uniform-tissue region: the envelope interior, well away from edges,
    // voxelized directly from the phantom description on the refined grid
    PhantomSpec interior = ps;
    for (int a = 0; a < 3; ++a) interior.envelope_half[a] -= 0.25;
    interior.envelope_center[1] += 0.25;
    const ImageVolume region = make_phantom(interior, dtv.h_disp.grid);

    // the displayed background should be flat there relative to its mean
    auto relative_spread = [&](const ImageVolume& img) {
        double sum = 0.0, sum2 = 0.0;
        std::size_t n = 0;
        for (std::size_t i = 0; i < img.data.size(); ++i) {
            if (region.data[i] > 0.0) {
                sum += img.data[i];
                sum2 += img.data[i] * img.data[i];
                ++n;
            }
        }
        const double mean = sum / double(n);
        return std::sqrt(std::max(sum2 / double(n) - mean * mean, 0.0)) / std::abs(mean);
    };
    const double coupled_spread = relative_spread(dtv.h_disp);
    const double zero_spread = relative_spread(zero_disp);
    CHECK(coupled_spread < 0.8 * zero_spread);
}

TEST_CASE("phantom and artifact spec files parse") {
    const ConfigFile phantom_cfg = ConfigFile::parse(R"(
[envelope]
half_widths = 1.4 2.4 1.3
center = 0 -1.3 0
background = 0.2
supersample = 1
[sphere]
center = 0.55 -0.55 0.45
radius = 0.42
contrast = 0.10
[rod]
center = 0 -0.5 0
radius = 0.1
half_length = 0.4
axis = x
contrast = 0.2
)");
    const PhantomSpec spec = parse_phantom_spec(phantom_cfg);
    CHECK(spec.envelope_half[1] == doctest::Approx(2.4));
    REQUIRE(spec.inclusions.size() == 2);
    CHECK(spec.inclusions[0].shape == Inclusion::Shape::Sphere);
    CHECK(spec.inclusions[1].shape == Inclusion::Shape::Rod);
    CHECK(spec.inclusions[1].axis == 0);

    const ConfigFile artifact_cfg = ConfigFile::parse(R"(
[artifact]
kind = additive-smooth-projection
amplitude = 0.05
correlation_cm = 2.5
seed = 11
)");
    const auto artifacts = parse_artifact_specs(artifact_cfg);
    REQUIRE(artifacts.size() == 1);
    CHECK(artifacts[0].kind == ArtifactSpec::Kind::AdditiveSmoothProjection);
    CHECK(artifacts[0].amplitude == doctest::Approx(0.05));
}
