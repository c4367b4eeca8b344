#include "dbtrec/verify.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "dbtrec/filters.hpp"
#include "dbtrec/prox.hpp"
#include "dbtrec/xray.hpp"

namespace dbtrec {

namespace {

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> v(n);
    for (auto& e : v) e = gauss(rng);
    return v;
}

double now_seconds() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

template <class F>
CheckResult timed_check(const std::string& name, F&& body) {
    CheckResult r;
    r.name = name;
    const double t0 = now_seconds();
    try {
        r.detail = body(r.pass);
    } catch (const std::exception& e) {
        r.pass = false;
        r.detail = std::string("exception: ") + e.what();
    }
    r.seconds = now_seconds() - t0;
    return r;
}

}  // namespace

double adjoint_test(const LinearOperator& op, int n_pairs, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    double worst = 0.0;
    for (int k = 0; k < n_pairs; ++k) {
        const auto x = random_vector(op.domain_size(), rng);
        const auto y = random_vector(op.range_size(), rng);
        const auto kx = apply_forward(op, x);
        const auto kty = apply_adjoint(op, y);
        const double lhs = dot(kx, y);
        const double rhs = dot(x, kty);
        const double scale = std::max({std::abs(lhs), std::abs(rhs), 1e-30});
        worst = std::max(worst, std::abs(lhs - rhs) / scale);
    }
    return worst;
}

double self_adjoint_test(const LinearOperator& op, int n_pairs, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    double worst = 0.0;
    for (int k = 0; k < n_pairs; ++k) {
        const auto x = random_vector(op.domain_size(), rng);
        const auto y = random_vector(op.domain_size(), rng);
        const auto ax = apply_forward(op, x);
        const auto ay = apply_forward(op, y);
        const double lhs = dot(ax, y);
        const double rhs = dot(x, ay);
        const double scale = std::max({std::abs(lhs), std::abs(rhs), 1e-30});
        worst = std::max(worst, std::abs(lhs - rhs) / scale);
    }
    return worst;
}

DeskInstance make_desk_instance() {
    DeskInstance d;
    DetectorGrid det{25, 256, 128, 0.034, 0.034};
    d.geometry = make_arc_geometry(25, 50.0, 30.0, 34.5, det);
    DetectorGrid det_low{25, 64, 32, 0.136, 0.136};
    d.geometry_low = d.geometry.with_detector(det_low);
    d.lowres_grid = make_centered_grid({64, 64, 32}, {0.136, 0.136, 0.272});

    d.phantom.envelope_half = {1.4, 2.4, 1.3};
    d.phantom.envelope_center = {0.0, -1.3, 0.0};
    d.phantom.background = 0.2;
    d.phantom.supersample = 1;
    d.phantom.inclusions = {
        {Inclusion::Shape::Sphere, {0.55, -0.55, 0.45}, 0.42, 0.0, 0, 0.10},
        {Inclusion::Shape::Sphere, {-0.55, -0.35, -0.40}, 0.34, 0.0, 0, -0.08},
    };

    d.coupled = CoupledProblemConfig{};
    d.coupled.d1 = d.lowres_grid.spacing;
    d.coupled.d2 = {1.5, 1.5, d.lowres_grid.spacing[2]};
    d.coupled.dd = {2.0, 2.0};
    d.coupled.oblique_deg = 25.0;

    d.solver = SolverConfig{};
    d.solver.power.rel_tol = 1e-3;  // +-0.2% singular values, ample for the 1% condition band
    d.solver.power.max_iters = 30000;
    return d;
}

namespace {

CheckResult check_adjoints(bool small_only) {
    return timed_check("operator adjoint suite", [&](bool& pass) {
        const VolumeGrid vol = make_centered_grid({8, 8, 8}, {0.1, 0.12, 0.2});
        DetectorGrid det{5, 12, 10, 0.11, 0.13};
        const ScanGeometry geom = make_arc_geometry(5, 40.0, 6.0, 8.0, det);

        std::ostringstream detail;
        double worst = 0.0;
        auto record = [&](const std::string& name, double err) {
            worst = std::max(worst, err);
            if (err >= 1e-6) detail << name << " rel err " << err << "; ";
        };
        record("xray", adjoint_test(XrayTransform(vol, geom)));
        record("blur3d", adjoint_test(GaussianBlur3D(vol, {0.25, 0.3, 0.4})));
        record("blur3d self", self_adjoint_test(GaussianBlur3D(vol, {0.25, 0.3, 0.4})));
        record("blurdet", adjoint_test(GaussianBlurDet(det, {0.3, 0.35})));
        record("blurdet self", self_adjoint_test(GaussianBlurDet(det, {0.3, 0.35})));
        record("sqrt_ramp", adjoint_test(SqrtRampFilter(det, 0.8)));
        record("sqrt_ramp self", self_adjoint_test(SqrtRampFilter(det, 0.8)));
        record("fd_x", adjoint_test(FiniteDiff(vol, Axis::X)));
        record("fd_y", adjoint_test(FiniteDiff(vol, Axis::Y)));
        record("fd_z", adjoint_test(FiniteDiff(vol, Axis::Z)));
        record("oblique_a", adjoint_test(ObliqueDiff(vol, -25.0)));
        record("oblique_b", adjoint_test(ObliqueDiff(vol, 25.0)));
        {
            auto chain = std::make_shared<ComposeOp>(std::vector<OperatorPtr>{
                std::make_shared<GaussianBlur3D>(vol, Vec3{0.2, 0.2, 0.3}),
                std::make_shared<XrayTransform>(vol, geom),
                std::make_shared<SqrtRampFilter>(det, 1.0)});
            record("ramp*xray*blur chain", adjoint_test(*chain));
        }
        if (!small_only) {
            // a medium grid as well, where accumulated rounding would show
            const VolumeGrid vol2 = make_centered_grid({24, 24, 12}, {0.15, 0.15, 0.3});
            DetectorGrid det2{9, 32, 16, 0.12, 0.12};
            const ScanGeometry geom2 = make_arc_geometry(9, 50.0, 10.0, 12.5, det2);
            record("xray medium", adjoint_test(XrayTransform(vol2, geom2)));
        }
        pass = worst < 1e-6;
        std::ostringstream os;
        os << "worst relative error " << worst << (detail.str().empty() ? "" : " [" + detail.str() + "]");
        return os.str();
    });
}

CheckResult check_prox() {
    return timed_check("prox oracle suite", [&](bool& pass) {
        std::mt19937_64 rng(4242);
        std::normal_distribution<double> gauss(0.0, 1.0);
        double worst = 0.0;

        // closed-form soft threshold spots
        {
            std::vector<double> v{2.0, -0.5, 1.0};
            const auto out = prox_l1(v, 1.0);
            worst = std::max(worst, std::abs(out[0] - 1.0));
            worst = std::max(worst, std::abs(out[1] - 0.0));
            worst = std::max(worst, std::abs(out[2] - 0.0));
        }
        // ball projection radial scaling
        {
            std::vector<double> center{1.0, 2.0, -1.0};
            std::vector<double> y{1.0, 2.0 + 2.0, -1.0};  // center + 2r along e2 with r = 1
            std::vector<double> out(3);
            project_l2_ball(y, center, 1.0, out);
            worst = std::max(worst, std::abs(out[1] - 3.0));
        }
        // coupling projection voxelwise example and constraint
        {
            std::vector<double> a1{1.0}, a2{0.0}, a3{0.0}, f1(1), f2(1), f3(1);
            project_coupling(a1, a2, a3, f1, f2, f3);
            worst = std::max(worst, std::abs(f1[0] - 2.0 / 3.0));
            worst = std::max(worst, std::abs(f2[0] - 1.0 / 3.0));
            worst = std::max(worst, std::abs(f3[0] - 1.0 / 3.0));
        }
        // Moreau identity for every kind, 100 random vectors
        double moreau_worst = 0.0;
        for (int rep = 0; rep < 100; ++rep) {
            const int n = 6;
            std::vector<double> y(n), cen(n);
            for (auto& v : y) v = 3.0 * gauss(rng);
            for (auto& v : cen) v = gauss(rng);
            const double sigma = std::exp(gauss(rng));
            const SeparableFunction funs[] = {
                SeparableFunction::l1(0.7),
                SeparableFunction::l2_ball(cen, 1.3),
                SeparableFunction::l2_squared(0.9, cen),
            };
            for (const auto& f : funs) {
                std::vector<double> conj(n), base(n), scaled(n);
                f.prox_conjugate(y, sigma, conj);
                for (int i = 0; i < n; ++i) scaled[i] = y[i] / sigma;
                f.prox(scaled, 1.0 / sigma, base);
                for (int i = 0; i < n; ++i) {
                    const double lhs = conj[i] + sigma * base[i];
                    moreau_worst = std::max(moreau_worst, std::abs(lhs - y[i]) /
                                                              std::max(1.0, std::abs(y[i])));
                }
            }
        }
        pass = worst < 1e-12 && moreau_worst < 1e-10;
        std::ostringstream os;
        os << "closed-form err " << worst << ", Moreau err " << moreau_worst;
        return os.str();
    });
}

CheckResult check_step_condition_small() {
    return timed_check("step-size condition (small problem)", [&](bool& pass) {
        const VolumeGrid vol = make_centered_grid({16, 16, 8}, {0.2, 0.2, 0.4});
        DetectorGrid det{9, 16, 8, 0.2, 0.2};
        const ScanGeometry geom = make_arc_geometry(9, 50.0, 10.0, 12.0, det);
        ProjectionSet g(det);  // zero data is fine for the condition check
        CoupledProblemConfig cfg;
        cfg.d1 = vol.spacing;
        cfg.d2 = {1.0, 1.0, vol.spacing[2]};
        cfg.dd = {1.2, 1.2};
        ProblemSpec problem = build_coupled_problem(g, geom, vol, cfg);
        const StepSizeConfig steps = compute_step_sizes(problem, 5.0, 100.0);
        const double cond = evaluate_step_condition(problem, steps);
        pass = cond > 0.99 && cond < 1.01;
        std::ostringstream os;
        os << "tau * ||sum sigma nu^2 Khat^T Khat|| = " << cond;
        return os.str();
    });
}

CheckResult check_step_condition_desk() {
    return timed_check("step-size condition (desk scale, gamma=5 beta=100)", [&](bool& pass) {
        DeskInstance d = make_desk_instance();
        const ImageVolume phantom = make_phantom(d.phantom, d.lowres_grid);
        const InverseCrimeData data = inverse_crime_dataset(phantom, d.geometry_low, d.coupled.d1);
        ProblemSpec problem = build_coupled_problem(data.g, d.geometry_low, d.lowres_grid, d.coupled);
        const StepSizeConfig steps = compute_step_sizes(problem, 5.0, 100.0, d.solver.power);
        const double cond = evaluate_step_condition(problem, steps, d.solver.power);
        pass = cond > 0.99 && cond < 1.01;
        std::ostringstream os;
        os << "tau * ||sum sigma nu^2 Khat^T Khat|| = " << cond;
        return os.str();
    });
}

CheckResult check_desk_recovery() {
    return timed_check("noiseless desk-scale recovery", [&](bool& pass) {
        DeskInstance d = make_desk_instance();
        const ImageVolume phantom = make_phantom(d.phantom, d.lowres_grid);
        const InverseCrimeData data = inverse_crime_dataset(phantom, d.geometry_low, d.coupled.d1);

        CoupledProblemConfig cfg = d.coupled;
        cfg.alpha_3 = 0.0;
        cfg.eps1 = 1e-4;
        cfg.eps2 = std::numeric_limits<double>::infinity();  // background path disabled

        SolverConfig solver = d.solver;
        solver.stopping.max_iters = 2000;

        const LowresResult res = reconstruct_lowres(data.g, d.geometry_low, d.lowres_grid, cfg, solver);
        double mn = phantom.data[0], mx = phantom.data[0], err2 = 0.0;
        for (std::size_t i = 0; i < phantom.data.size(); ++i) {
            mn = std::min(mn, phantom.data[i]);
            mx = std::max(mx, phantom.data[i]);
            const double e = res.f1.data[i] - phantom.data[i];
            err2 += e * e;
        }
        const double rmse = std::sqrt(err2 / double(phantom.data.size()));
        const double range = mx - mn;
        pass = rmse < 0.01 * range;
        std::ostringstream os;
        os << "image RMSE " << rmse << " vs 1% of dynamic range " << 0.01 * range << " ("
           << res.report.iterations << " iterations)";
        return os.str();
    });
}

}  // namespace

std::vector<CheckResult> run_quick_checks() {
    std::vector<CheckResult> out;
    out.push_back(check_adjoints(false));
    out.push_back(check_prox());
    out.push_back(check_step_condition_small());
    return out;
}

std::vector<CheckResult> run_full_checks() {
    std::vector<CheckResult> out = run_quick_checks();
    out.push_back(check_step_condition_desk());
    out.push_back(check_desk_recovery());
    return out;
}

}  // namespace dbtrec
