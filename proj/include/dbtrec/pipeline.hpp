#pragma once

#include <optional>
#include <string>

#include "dbtrec/grid.hpp"
#include "dbtrec/pdhg.hpp"

namespace dbtrec {

/// Parameters of the coupled low-resolution problem: one data-RMSE ball per
/// image (raw f1 against g, background f2 against detector-blurred g), five
/// l1 sparsity terms per image with weights summing to 1, and an l1 penalty
/// on the difference image f3 = f1 - f2.
struct CoupledProblemConfig {
    double alpha_x = 5.0 / 9.0;
    double alpha_y = 1.0 / 9.0;
    double alpha_a = 1.0 / 9.0;
    double alpha_b = 1.0 / 9.0;
    double alpha_1 = 1.0 / 9.0;
    double alpha_3 = 0.1;
    double eps1 = 0.015;
    double eps2 = 0.015;
    Vec3 d1{0.136, 0.136, 0.272};  // raw-image blur FWHM, cm
    Vec3 d2{1.5, 1.5, 0.272};      // background-image blur FWHM, cm
    Vec2 dd{2.0, 2.0};             // detector-data blur FWHM, cm
    double ramp_cutoff = 1.0;      // fraction of Nyquist
    double oblique_deg = 25.0;     // a/b derivative directions are -+ this angle

    void validate() const;  // weights normalized, eps positive
};

struct SolverConfig {
    double gamma = 5.0;
    double beta = 100.0;
    double rho = 1.75;
    StoppingRule stopping;
    PowerOpts power;
};

struct TikhonovConfig {
    double alpha_tik = 0.1;
    Vec3 d{0.034, 0.034, 0.136};  // blur FWHM = high-res voxel dims, cm
    int steps = 10;
    Index3 up_factors{4, 4, 2};   // low-res -> high-res refinement
    double ramp_cutoff = 1.0;

    void validate() const;
};

struct DisplayConfig {
    double support_threshold = 0.1;  // 1/cm
    double dz = 0.085;               // depth blur FWHM, cm

    void validate() const;
};

/// Flat-field correction and negative-log processing: the per-view air
/// fluence profile I0(u) is the mean of the counts over the detector strip
/// rows [strip_v0, strip_v1] (which must lie outside the object shadow);
/// g = -ln(I / I0) with the ratio clamped to log_floor before the log.
ProjectionSet preprocess_transmission(const ProjectionSet& counts, int strip_v0, int strip_v1,
                                      double log_floor = 1e-6);

/// Emits the 13-block coupled problem: blocks 1 and 7 are the data balls
/// with operators R[c] X G[d1] (on f1) and R[c] X G[d2] (on f2) and centers
/// R[c] g and R[c] G_det[dd] g; blocks 2-6 / 8-12 are the l1 terms
/// (d/dx, d/dy, oblique a, oblique b, identity) on f1 / f2; block 13 is
/// alpha_3 ||f3||_1; G couples f1 - f2 - f3 = 0.
ProblemSpec build_coupled_problem(const ProjectionSet& g, const ScanGeometry& geom,
                                  const VolumeGrid& vol, const CoupledProblemConfig& cfg);

struct LowresResult {
    ImageVolume f1, f2, f3;
    ConvergenceReport report;
    StepSizeConfig steps;
};

LowresResult reconstruct_lowres(const ProjectionSet& g, const ScanGeometry& geom,
                                const VolumeGrid& vol, const CoupledProblemConfig& cfg,
                                const SolverConfig& solver);

struct HighresResult {
    ImageVolume h;
    std::vector<double> objective_history;  // steps + 1 entries, starting at h0
};

/// Quadratic refinement 1/2 ||R(X G[d] h - g)||^2 + alpha_tik/2 ||G[d] h -
/// h0||^2 by steepest descent with exact line search, initialized at h0 and
/// truncated at cfg.steps iterations.
HighresResult reconstruct_highres(const ProjectionSet& g, const ScanGeometry& geom,
                                  const ImageVolume& h0, const TikhonovConfig& cfg);

struct DisplayResult {
    ImageVolume h_disp;
    ImageVolume h2;     // upsampled background image
    ImageVolume h_sup;  // binary support from thresholding h2
    double b = 0.0;     // mean of h2 over the support
};

/// h_disp = G_z[dz]((h - h2) + b * h_sup) with h2 the upsampled background,
/// h_sup its thresholded support and b the support mean.
DisplayResult form_display(const ImageVolume& h, const ImageVolume& f2_low,
                           const DisplayConfig& cfg, Index3 up_factors);

/// Display formation with a fixed support model; exactly invariant to
/// adding the same constant to h and h2.
ImageVolume form_display_fixed(const ImageVolume& h, const ImageVolume& h2,
                               const ImageVolume& h_sup, double b, double dz_fwhm);

struct SupportModel {
    ImageVolume h_sup;
    double b = 0.0;
};
SupportModel estimate_display_support(const ImageVolume& h2, double threshold);

}  // namespace dbtrec
