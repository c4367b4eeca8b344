#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "dbtrec/linear_operator.hpp"
#include "dbtrec/prox.hpp"

namespace dbtrec {

/// One objective/constraint block of min F(Kx) + G(x): a linear operator
/// chain acting on one primal component, the convex function applied to its
/// output, and the normalization bookkeeping (estimated norm ||K_i||, block
/// weight w_hat_i and scaling nu_i).
struct BlockSpec {
    OperatorPtr op;
    int component = 0;
    SeparableFunction fun;
    bool has_xray = false;  // gets the heavier step-size weight gamma
    double weight_hat = 1.0;
    double nu = 1.0;
    double norm = 0.0;  // ||K_i||_2, estimated if left at 0
    std::string label;
};

enum class CouplingKind {
    None,                // G = 0
    L1,                  // G = g_weight * ||x||_1 (single component)
    DifferenceCoupling,  // G = indicator of f1 - f2 - f3 = 0 (three components)
};

struct ProblemSpec {
    std::vector<std::size_t> components;  // primal component sizes
    std::vector<BlockSpec> blocks;
    CouplingKind coupling = CouplingKind::None;
    double g_weight = 0.0;  // for CouplingKind::L1

    std::size_t total_primal() const;
    void validate() const;
};

struct PowerOpts {
    double rel_tol = 1e-4;
    int max_iters = 30000;
    std::uint64_t seed = 20240601;
};

/// Scalar step sizes of the normalized scheme: tau ||sum_i sigma_i nu_i^2
/// Khat_i^T Khat_i||_2 = 1 with Khat_i = K_i/||K_i||, resolved as
/// nu_i = sqrt(w_hat_i), tau = sqrt(w/beta), sigma_i = sqrt(w beta),
/// w = ||sum_i w_hat_i Khat_i^T Khat_i||^{-1}.
struct StepSizeConfig {
    double gamma = 5.0;
    double beta = 100.0;
    double rho = 1.75;  // over-relaxation in (0, 2)
    double w = 0.0;
    double tau = 0.0;
    std::vector<double> sigma;  // per block
    std::vector<double> nu;     // per block (mirrors blocks[i].nu)
};

/// Estimates missing block norms, assigns weights (gamma to X-ray blocks,
/// 1 elsewhere), and resolves (w, tau, sigma_i, nu_i). Updates blocks in
/// place (norm, weight_hat, nu).
StepSizeConfig compute_step_sizes(ProblemSpec& problem, double gamma, double beta,
                                  const PowerOpts& opts = {});

/// Step-size resolution with a known weight magnitude w (e.g. carried over
/// from an identical operator configuration); block norms must already be
/// set. No power method involved.
StepSizeConfig resolve_step_sizes(ProblemSpec& problem, double gamma, double beta, double w);

/// Copies estimated norms between structurally identical problems (same
/// block list over the same operators, e.g. rebuilt with different data).
void copy_block_norms(const ProblemSpec& from, ProblemSpec& to);

/// Independent power-method evaluation of tau * ||sum_i sigma_i nu_i^2
/// Khat_i^T Khat_i||_2 (should be 1 within the power-method tolerance).
double evaluate_step_condition(const ProblemSpec& problem, const StepSizeConfig& steps,
                               const PowerOpts& opts = {});

struct IterationStats {
    int iteration = 0;
    double objective = 0.0;                 // sum of physical l1/quadratic terms
    std::vector<double> ball_residual_rmse; // per ball block: ||K x - center|| / sqrt(N)
    double primal_step_norm = 0.0;          // ||x_k - x_{k-1}||
    double dual_step_norm = 0.0;
    double combined_residual = 0.0;         // primal/tau + dual/sigma step norms
};

struct ConvergenceReport {
    std::vector<IterationStats> history;
    bool converged = false;
    int iterations = 0;
    std::string stop_reason;
};

struct StoppingRule {
    int max_iters = 2000;
    double residual_tol = 1e-3;      // ball residuals within eps + tol
    double primal_change_tol = 1e-7; // relative primal step
    int stats_interval = 25;
    double divergence_factor = 1e6;
};

struct SolverState {
    std::vector<std::vector<double>> x;       // per component
    std::vector<std::vector<double>> duals;   // per block
    int iteration = 0;

    // scratch reused across iterations
    std::vector<std::vector<double>> x_cand, x_tilde, kty;
    std::vector<double> block_out, block_out2;
    double last_primal_step = 0.0, last_dual_step = 0.0;

    static SolverState zeros(const ProblemSpec& problem);
};

/// One relaxed PDHG update:
///   x+      = prox_{tau G}(x - tau sum_i nu_i Khat_i^T lambda_i)
///   x~      = 2 x+ - x
///   lambda+ = prox_{sigma_i Fhat_i*}(lambda_i + sigma_i nu_i Khat_i x~)
///   (x, lambda) <- (x, lambda) + rho ((x+, lambda+) - (x, lambda))
/// Throws on non-finite iterates.
void pdhg_iterate(SolverState& state, const ProblemSpec& problem, const StepSizeConfig& steps);

struct SolveResult {
    std::vector<std::vector<double>> x;
    ConvergenceReport report;
};

SolveResult solve(const ProblemSpec& problem, const StepSizeConfig& steps,
                  const StoppingRule& stopping);

/// Physical (unnormalized) objective and ball residuals at x.
IterationStats evaluate_stats(const ProblemSpec& problem,
                              const std::vector<std::vector<double>>& x);

std::string report_to_tsv(const ConvergenceReport& report);

}  // namespace dbtrec
