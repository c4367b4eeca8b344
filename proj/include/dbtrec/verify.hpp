#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dbtrec/config.hpp"
#include "dbtrec/linear_operator.hpp"
#include "dbtrec/pipeline.hpp"
#include "dbtrec/sim.hpp"

namespace dbtrec {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

/// Randomized dot-product test <K x, y> vs <x, K^T y>; returns the worst
/// relative error over n_pairs seeded random pairs.
double adjoint_test(const LinearOperator& op, int n_pairs = 10, std::uint64_t seed = 99);

/// Self-adjointness check <A x, y> vs <x, A y> for square operators.
double self_adjoint_test(const LinearOperator& op, int n_pairs = 10, std::uint64_t seed = 99);

/// Canonical desk-scale instance used by the verification suites: the
/// 25-view 50 degree arc, 256x128 detector at 0.034 cm pitch, 64x64x32
/// low-resolution grid, and a piecewise-constant phantom inside the
/// field of view.
struct DeskInstance {
    ScanGeometry geometry;       // full-resolution detector
    ScanGeometry geometry_low;   // detector downsampled 4x4
    VolumeGrid lowres_grid;
    PhantomSpec phantom;
    CoupledProblemConfig coupled;
    SolverConfig solver;
};
DeskInstance make_desk_instance();

/// Operator adjoint suite, prox oracles and a small-scale step-size
/// condition check. Finishes in well under a minute.
std::vector<CheckResult> run_quick_checks();

/// Quick checks plus the desk-scale step-size condition and the desk-scale
/// noiseless recovery run.
std::vector<CheckResult> run_full_checks();

}  // namespace dbtrec
