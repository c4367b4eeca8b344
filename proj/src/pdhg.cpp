#include "dbtrec/pdhg.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace dbtrec {

std::size_t ProblemSpec::total_primal() const {
    std::size_t n = 0;
    for (auto s : components) n += s;
    return n;
}

void ProblemSpec::validate() const {
    if (components.empty()) throw std::invalid_argument("ProblemSpec: no primal components");
    if (blocks.empty()) throw std::invalid_argument("ProblemSpec: no blocks");
    for (const auto& b : blocks) {
        if (!b.op) throw std::invalid_argument("ProblemSpec: block without operator");
        if (b.component < 0 || b.component >= int(components.size()))
            throw std::invalid_argument("ProblemSpec: block component out of range");
        if (b.op->domain_size() != components[b.component])
            throw std::invalid_argument("ProblemSpec: block operator domain mismatch for '" + b.label + "'");
        if (!b.fun.center.empty() && b.fun.center.size() != b.op->range_size())
            throw std::invalid_argument("ProblemSpec: block function center size mismatch for '" + b.label + "'");
    }
    if (coupling == CouplingKind::DifferenceCoupling) {
        if (components.size() != 3 || components[0] != components[1] || components[0] != components[2])
            throw std::invalid_argument("ProblemSpec: difference coupling needs three equal components");
    }
    if (coupling == CouplingKind::L1 && components.size() != 1)
        throw std::invalid_argument("ProblemSpec: l1 coupling expects a single component");
}

namespace {

/// sum_i c_i Khat_i^T Khat_i over the stacked primal vector; symmetric, so
/// its operator norm is the dominant eigenvalue.
class WeightedNormalOp final : public LinearOperator {
  public:
    WeightedNormalOp(const ProblemSpec& problem, std::vector<double> coeff)
        : problem_(problem), coeff_(std::move(coeff)), total_(problem.total_primal()) {
        offsets_.resize(problem_.components.size());
        std::size_t off = 0;
        for (std::size_t c = 0; c < problem_.components.size(); ++c) {
            offsets_[c] = off;
            off += problem_.components[c];
        }
    }
    std::size_t domain_size() const override { return total_; }
    std::size_t range_size() const override { return total_; }
    void forward(std::span<const double> x, std::span<double> y) const override {
        std::fill(y.begin(), y.end(), 0.0);
        for (std::size_t i = 0; i < problem_.blocks.size(); ++i) {
            const BlockSpec& b = problem_.blocks[i];
            if (coeff_[i] == 0.0) continue;
            const std::size_t off = offsets_[b.component];
            const std::size_t n = problem_.components[b.component];
            std::vector<double> mid(b.op->range_size()), back(n);
            b.op->forward(x.subspan(off, n), mid);
            b.op->adjoint(mid, back);
            const double c = coeff_[i] / (b.norm * b.norm);
            for (std::size_t j = 0; j < n; ++j) y[off + j] += c * back[j];
        }
    }
    void adjoint(std::span<const double> y, std::span<double> x) const override { forward(y, x); }

  private:
    const ProblemSpec& problem_;
    std::vector<double> coeff_;
    std::size_t total_;
    std::vector<std::size_t> offsets_;
};

void ensure_norms(ProblemSpec& problem, const PowerOpts& opts) {
    for (auto& b : problem.blocks) {
        if (b.norm > 0.0) continue;
        if (b.op->cached_norm() > 0.0) {
            b.norm = b.op->cached_norm();
            continue;
        }
        const NormEstimate est = estimate_norm(*b.op, opts.rel_tol, opts.max_iters, opts.seed);
        if (est.value <= 0.0)
            throw std::runtime_error("compute_step_sizes: block '" + b.label + "' has zero norm");
        if (!est.converged)
            throw std::runtime_error("compute_step_sizes: power iteration did not converge for block '" +
                                     b.label + "'");
        b.op->set_cached_norm(est.value);
        b.norm = est.value;
    }
}

}  // namespace

StepSizeConfig resolve_step_sizes(ProblemSpec& problem, double gamma, double beta, double w) {
    if (!(w > 0.0)) throw std::invalid_argument("resolve_step_sizes: w must be positive");
    StepSizeConfig cfg;
    cfg.gamma = gamma;
    cfg.beta = beta;
    cfg.w = w;
    cfg.tau = std::sqrt(w / beta);
    cfg.sigma.assign(problem.blocks.size(), std::sqrt(w * beta));
    cfg.nu.resize(problem.blocks.size());
    for (std::size_t i = 0; i < problem.blocks.size(); ++i) {
        if (!(problem.blocks[i].norm > 0.0))
            throw std::invalid_argument("resolve_step_sizes: block norms not set");
        problem.blocks[i].weight_hat = problem.blocks[i].has_xray ? gamma : 1.0;
        problem.blocks[i].nu = std::sqrt(problem.blocks[i].weight_hat);
        cfg.nu[i] = problem.blocks[i].nu;
    }
    return cfg;
}

void copy_block_norms(const ProblemSpec& from, ProblemSpec& to) {
    if (from.blocks.size() != to.blocks.size())
        throw std::invalid_argument("copy_block_norms: block count mismatch");
    for (std::size_t i = 0; i < from.blocks.size(); ++i) {
        if (from.blocks[i].label != to.blocks[i].label ||
            from.blocks[i].op->range_size() != to.blocks[i].op->range_size())
            throw std::invalid_argument("copy_block_norms: block structure mismatch");
        to.blocks[i].norm = from.blocks[i].norm;
        to.blocks[i].op->set_cached_norm(from.blocks[i].norm);
    }
}

StepSizeConfig compute_step_sizes(ProblemSpec& problem, double gamma, double beta,
                                  const PowerOpts& opts) {
    problem.validate();
    if (gamma < 1.0) throw std::invalid_argument("compute_step_sizes: gamma must be >= 1");
    if (!(beta > 0.0)) throw std::invalid_argument("compute_step_sizes: beta must be positive");
    ensure_norms(problem, opts);

    std::vector<double> what(problem.blocks.size());
    for (std::size_t i = 0; i < problem.blocks.size(); ++i) {
        problem.blocks[i].weight_hat = problem.blocks[i].has_xray ? gamma : 1.0;
        what[i] = problem.blocks[i].weight_hat;
    }

    const WeightedNormalOp assembled(problem, what);
    const NormEstimate est = estimate_norm(assembled, opts.rel_tol, opts.max_iters, opts.seed);
    if (est.value <= 0.0 || !est.converged)
        throw std::runtime_error("compute_step_sizes: power method failed on the assembled operator");
    return resolve_step_sizes(problem, gamma, beta, 1.0 / est.value);
}

double evaluate_step_condition(const ProblemSpec& problem, const StepSizeConfig& steps,
                               const PowerOpts& opts) {
    std::vector<double> coeff(problem.blocks.size());
    for (std::size_t i = 0; i < problem.blocks.size(); ++i)
        coeff[i] = steps.sigma[i] * steps.nu[i] * steps.nu[i];
    const WeightedNormalOp assembled(problem, coeff);
    // different seed than compute_step_sizes so the check is not vacuous
    PowerOpts check = opts;
    check.seed = opts.seed ^ 0x9e3779b97f4a7c15ull;
    const NormEstimate est = estimate_norm(assembled, check.rel_tol, check.max_iters, check.seed);
    return steps.tau * est.value;
}

SolverState SolverState::zeros(const ProblemSpec& problem) {
    SolverState s;
    for (auto n : problem.components) {
        s.x.emplace_back(n, 0.0);
        s.x_cand.emplace_back(n, 0.0);
        s.x_tilde.emplace_back(n, 0.0);
        s.kty.emplace_back(n, 0.0);
    }
    std::size_t max_len = 0;
    for (auto n : problem.components) max_len = std::max(max_len, n);
    for (const auto& b : problem.blocks) {
        s.duals.emplace_back(b.op->range_size(), 0.0);
        max_len = std::max(max_len, b.op->range_size());
    }
    s.block_out.resize(max_len);
    s.block_out2.resize(max_len);
    return s;
}

namespace {

void apply_g_prox(const ProblemSpec& problem, double tau,
                  const std::vector<std::vector<double>>& v, std::vector<std::vector<double>>& out) {
    switch (problem.coupling) {
        case CouplingKind::None:
            for (std::size_t c = 0; c < v.size(); ++c) out[c] = v[c];
            return;
        case CouplingKind::L1:
            prox_l1(std::span<const double>(v[0]), tau * problem.g_weight, out[0]);
            return;
        case CouplingKind::DifferenceCoupling:
            project_coupling(v[0], v[1], v[2], out[0], out[1], out[2]);
            return;
    }
}

}  // namespace

void pdhg_iterate(SolverState& state, const ProblemSpec& problem, const StepSizeConfig& steps) {
    const std::size_t ncomp = problem.components.size();

    // primal step: x_cand = prox_{tau G}(x - tau sum_i nu_i Khat_i^T lambda_i)
    for (std::size_t c = 0; c < ncomp; ++c)
        std::fill(state.kty[c].begin(), state.kty[c].end(), 0.0);
    for (std::size_t i = 0; i < problem.blocks.size(); ++i) {
        const BlockSpec& b = problem.blocks[i];
        const std::vector<double>& lam = state.duals[i];
        bool all_zero = true;
        for (double v : lam)
            if (v != 0.0) { all_zero = false; break; }
        if (all_zero) continue;
        auto& acc = state.kty[b.component];
        std::span<double> back(state.block_out.data(), acc.size());
        b.op->adjoint(lam, back);
        const double scale = b.nu / b.norm;
        for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += scale * back[j];
    }
    for (std::size_t c = 0; c < ncomp; ++c) {
        auto& xt = state.x_tilde[c];  // reuse as the pre-prox buffer
        for (std::size_t j = 0; j < xt.size(); ++j) xt[j] = state.x[c][j] - steps.tau * state.kty[c][j];
    }
    apply_g_prox(problem, steps.tau, state.x_tilde, state.x_cand);

    // extrapolation: x~ = 2 x_cand - x
    for (std::size_t c = 0; c < ncomp; ++c)
        for (std::size_t j = 0; j < state.x[c].size(); ++j)
            state.x_tilde[c][j] = 2.0 * state.x_cand[c][j] - state.x[c][j];

    // dual step + relaxation per block
    double dual_step2 = 0.0;
    for (std::size_t i = 0; i < problem.blocks.size(); ++i) {
        const BlockSpec& b = problem.blocks[i];
        std::vector<double>& lam = state.duals[i];
        const double sigma = steps.sigma[i];
        const SeparableFunction scaled = b.fun.scaled_argument(b.norm / b.nu);
        if (scaled.conjugate_is_zero()) {
            // dual stays at zero; skip the operator applications entirely
            for (double v : lam) dual_step2 += steps.rho * steps.rho * v * v;
            if (steps.rho != 1.0)
                for (auto& v : lam) v *= (1.0 - steps.rho);
            else
                std::fill(lam.begin(), lam.end(), 0.0);
            continue;
        }
        const std::size_t m = b.op->range_size();
        std::span<double> kx(state.block_out.data(), m);
        b.op->forward(state.x_tilde[b.component], kx);
        const double snu = sigma * b.nu / b.norm;
        for (std::size_t j = 0; j < m; ++j) kx[j] = lam[j] + snu * kx[j];
        std::span<double> cand(state.block_out2.data(), m);
        scaled.prox_conjugate(kx, sigma, cand);
        for (std::size_t j = 0; j < m; ++j) {
            const double d = steps.rho * (cand[j] - lam[j]);
            dual_step2 += d * d;
            lam[j] += d;
        }
    }

    // primal relaxation
    double primal_step2 = 0.0, xnorm2 = 0.0;
    for (std::size_t c = 0; c < ncomp; ++c) {
        auto& x = state.x[c];
        const auto& xc = state.x_cand[c];
        for (std::size_t j = 0; j < x.size(); ++j) {
            const double d = steps.rho * (xc[j] - x[j]);
            primal_step2 += d * d;
            x[j] += d;
            xnorm2 += x[j] * x[j];
        }
    }
    state.last_primal_step = std::sqrt(primal_step2);
    state.last_dual_step = std::sqrt(dual_step2);
    state.iteration += 1;
    if (!std::isfinite(xnorm2) || !std::isfinite(dual_step2))
        throw std::runtime_error("pdhg_iterate: non-finite iterate at iteration " +
                                 std::to_string(state.iteration));
}

IterationStats evaluate_stats(const ProblemSpec& problem,
                              const std::vector<std::vector<double>>& x) {
    IterationStats s;
    std::vector<double> out;
    for (const auto& b : problem.blocks) {
        out.resize(b.op->range_size());
        b.op->forward(x[b.component], out);
        if (b.fun.kind == FunKind::L2Ball) {
            double d2 = 0.0;
            for (std::size_t j = 0; j < out.size(); ++j) {
                const double c = b.fun.center.empty() ? 0.0 : b.fun.center[j];
                d2 += (out[j] - c) * (out[j] - c);
            }
            s.ball_residual_rmse.push_back(std::sqrt(d2 / double(out.size())));
        } else {
            s.objective += b.fun.value(out);
        }
    }
    if (problem.coupling == CouplingKind::L1) {
        double l1 = 0.0;
        for (double v : x[0]) l1 += std::abs(v);
        s.objective += problem.g_weight * l1;
    }
    return s;
}

SolveResult solve(const ProblemSpec& problem, const StepSizeConfig& steps,
                  const StoppingRule& stopping) {
    problem.validate();
    if (!(steps.tau > 0.0)) throw std::invalid_argument("solve: step sizes not computed");
    SolverState state = SolverState::zeros(problem);
    ConvergenceReport report;

    double x_scale = 0.0;  // first nonzero primal norm, for the divergence guard
    std::vector<double> eps_rmse;  // per ball block, radius / sqrt(N)
    for (const auto& b : problem.blocks)
        if (b.fun.kind == FunKind::L2Ball)
            eps_rmse.push_back(b.fun.radius / std::sqrt(double(b.op->range_size())));

    for (int k = 0; k < stopping.max_iters; ++k) {
        pdhg_iterate(state, problem, steps);

        double xn2 = 0.0;
        for (const auto& xc : state.x)
            for (double v : xc) xn2 += v * v;
        const double xn = std::sqrt(xn2);
        if (x_scale == 0.0 && xn > 0.0) x_scale = xn;
        if (x_scale > 0.0 && xn > stopping.divergence_factor * x_scale)
            throw std::runtime_error("solve: primal norm grew by more than the divergence factor");

        const bool stats_now = (state.iteration % stopping.stats_interval == 0) ||
                               state.iteration == stopping.max_iters;
        if (!stats_now) continue;

        IterationStats stats = evaluate_stats(problem, state.x);
        stats.iteration = state.iteration;
        stats.primal_step_norm = state.last_primal_step;
        stats.dual_step_norm = state.last_dual_step;
        double sigma0 = steps.sigma.empty() ? 1.0 : steps.sigma[0];
        stats.combined_residual =
            state.last_primal_step / steps.tau + state.last_dual_step / sigma0;
        report.history.push_back(stats);

        bool feasible = true;
        for (std::size_t i = 0; i < stats.ball_residual_rmse.size(); ++i)
            if (stats.ball_residual_rmse[i] > eps_rmse[i] + stopping.residual_tol) feasible = false;
        const double rel_step = xn > 0.0 ? state.last_primal_step / xn : state.last_primal_step;
        if (feasible && rel_step < stopping.primal_change_tol) {
            report.converged = true;
            report.stop_reason = "residuals within tolerance and primal step below threshold";
            break;
        }
    }
    report.iterations = state.iteration;
    if (!report.converged) report.stop_reason = "max iterations reached";

    SolveResult result;
    result.x = std::move(state.x);
    result.report = std::move(report);
    return result;
}

std::string report_to_tsv(const ConvergenceReport& report) {
    std::ostringstream os;
    os.precision(10);
    std::size_t nballs = 0;
    for (const auto& h : report.history) nballs = std::max(nballs, h.ball_residual_rmse.size());
    os << "iteration\tobjective";
    for (std::size_t i = 0; i < nballs; ++i) os << "\tresidual_rmse_" << (i + 1);
    os << "\tprimal_step\tdual_step\tcombined_residual\n";
    for (const auto& h : report.history) {
        os << h.iteration << '\t' << h.objective;
        for (std::size_t i = 0; i < nballs; ++i)
            os << '\t' << (i < h.ball_residual_rmse.size() ? h.ball_residual_rmse[i] : 0.0);
        os << '\t' << h.primal_step_norm << '\t' << h.dual_step_norm << '\t' << h.combined_residual
           << '\n';
    }
    os << "# converged = " << (report.converged ? "yes" : "no") << "\n";
    os << "# iterations = " << report.iterations << "\n";
    os << "# stop_reason = " << report.stop_reason << "\n";
    return os.str();
}

}  // namespace dbtrec
