#include "dbtrec/cli.hpp"

#include <cmath>
#include <filesystem>
#include <iostream>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "dbtrec/config.hpp"
#include "dbtrec/filters.hpp"
#include "dbtrec/io.hpp"
#include "dbtrec/manifest.hpp"
#include "dbtrec/verify.hpp"
#include "dbtrec/xray.hpp"

namespace dbtrec {

namespace fs = std::filesystem;

void set_max_threads(int n) {
#ifdef _OPENMP
    if (n > 0) omp_set_num_threads(n);
#else
    (void)n;
#endif
}

namespace {

int effective_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

std::string path_join(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

void ensure_out_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory: " + dir);
}

}  // namespace

int run_simulate(const CommonOptions& opt) {
    try {
        PipelineConfig cfg = PipelineConfig::from_file(opt.config_path);
        if (cfg.simulate.phantom_path.empty())
            throw ConfigError("config has no [simulate] phantom entry");
        if (opt.seed) cfg.simulate.seed = *opt.seed;
        set_max_threads(opt.threads);

        const PhantomSpec phantom_spec = load_phantom_spec(cfg.simulate.phantom_path);
        std::vector<ArtifactSpec> artifacts;
        if (!cfg.simulate.artifact_path.empty())
            artifacts = load_artifact_specs(cfg.simulate.artifact_path);

        // ground truth on the reconstruction grid; acquisition optionally on
        // a 2x finer grid to avoid the inverse crime
        const ImageVolume truth = make_phantom(phantom_spec, cfg.lowres_grid);
        ImageVolume acq_vol = truth;
        if (cfg.simulate.fine_grid) {
            VolumeGrid fine = cfg.lowres_grid;
            for (int a = 0; a < 3; ++a) {
                fine.dims[a] *= 2;
                fine.spacing[a] *= 0.5;
            }
            acq_vol = make_phantom(phantom_spec, fine);
        }

        AcquisitionOptions acq;
        acq.i0 = cfg.simulate.i0;
        acq.poisson = cfg.simulate.poisson;
        acq.seed = cfg.simulate.seed;
        const ProjectionSet counts = simulate_acquisition(acq_vol, cfg.geometry, artifacts, acq);

        ensure_out_dir(opt.out_dir);
        RunManifest manifest(cfg.raw_text, cfg.simulate.seed, effective_threads());
        manifest.set_note("command", "simulate");
        manifest.add_input(opt.config_path);

        const std::string counts_path = path_join(opt.out_dir, "counts.f32");
        const std::string truth_path = path_join(opt.out_dir, "truth.f32");
        write_projections(counts, counts_path);
        write_volume(truth, truth_path);
        manifest.add_output(counts_path);
        manifest.add_output(truth_path);
        manifest.write(path_join(opt.out_dir, "manifest.txt"));
        std::cout << "simulate: wrote " << counts_path << " and " << truth_path << "\n";
        return kExitOk;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIoError;
    } catch (const std::runtime_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfigError;
    }
}

int run_reconstruct(const CommonOptions& opt, ReconStage stage, bool zeroinit) {
    try {
        PipelineConfig cfg = PipelineConfig::from_file(opt.config_path);
        set_max_threads(opt.threads);
        if (opt.seed) cfg.solver.power.seed = *opt.seed;

        if (cfg.counts_path.empty()) throw ConfigError("config has no [io] counts entry");
        const ProjectionSet counts = read_projections(cfg.counts_path);
        if (counts.det.nviews != cfg.geometry.det.nviews || counts.det.nu != cfg.geometry.det.nu ||
            counts.det.nv != cfg.geometry.det.nv ||
            std::abs(counts.det.pitch_u - cfg.geometry.det.pitch_u) > 1e-12 ||
            std::abs(counts.det.pitch_v - cfg.geometry.det.pitch_v) > 1e-12)
            throw ConfigError("counts detector geometry does not match [geometry]");

        ensure_out_dir(opt.out_dir);
        RunManifest manifest(cfg.raw_text, cfg.solver.power.seed, effective_threads());
        manifest.set_note("command", "reconstruct");
        manifest.set_note("stage", stage == ReconStage::Lowres ? "lowres"
                                   : stage == ReconStage::Highres ? "highres" : "all");
        manifest.set_note("zeroinit", zeroinit ? "1" : "0");
        manifest.add_input(opt.config_path);
        manifest.add_input(cfg.counts_path);
        std::vector<std::string> outputs;
        auto persist_volume = [&](const ImageVolume& v, const std::string& name) {
            const std::string p = path_join(opt.out_dir, name);
            write_volume(v, p);
            outputs.push_back(p);
        };

        const ProjectionSet g_full =
            preprocess_transmission(counts, cfg.preprocess.strip_v0, cfg.preprocess.strip_v1,
                                    cfg.preprocess.log_floor);
        const ProjectionSet g_low =
            downsample_projections(g_full, cfg.preprocess.down_u, cfg.preprocess.down_v);
        const ScanGeometry geom_low = cfg.geometry.with_detector(g_low.det);

        ImageVolume f1, f2;
        bool have_lowres = false;
        if (!zeroinit && stage != ReconStage::Highres) {
            LowresResult low =
                reconstruct_lowres(g_low, geom_low, cfg.lowres_grid, cfg.coupled, cfg.solver);
            persist_volume(low.f1, "f1.f32");
            persist_volume(low.f2, "f2.f32");
            persist_volume(low.f3, "f3.f32");
            const std::string rep = path_join(opt.out_dir, "lowres_report.tsv");
            write_text_file(rep, report_to_tsv(low.report));
            outputs.push_back(rep);
            // continue from the persisted volumes so a staged run (lowres
            // then highres) produces byte-identical results
            f1 = read_volume(path_join(opt.out_dir, "f1.f32"));
            f2 = read_volume(path_join(opt.out_dir, "f2.f32"));
            have_lowres = true;
        }

        if (stage != ReconStage::Lowres) {
            if (stage == ReconStage::All || zeroinit) {
                const std::string gp = path_join(opt.out_dir, "g.f32");
                write_projections(g_full, gp);
                outputs.push_back(gp);
                const std::string glp = path_join(opt.out_dir, "g_low.f32");
                write_projections(g_low, glp);
                outputs.push_back(glp);
            }
            if (!zeroinit && !have_lowres) {
                // highres-only run continues from persisted low-res results
                f1 = read_volume(path_join(opt.out_dir, "f1.f32"));
                f2 = read_volume(path_join(opt.out_dir, "f2.f32"));
                have_lowres = true;
            }

            VolumeGrid hr = cfg.lowres_grid;
            for (int a = 0; a < 3; ++a) {
                hr.dims[a] *= cfg.tikhonov.up_factors[a];
                hr.spacing[a] /= cfg.tikhonov.up_factors[a];
            }
            ImageVolume h0(hr);
            if (!zeroinit) {
                h0 = upsample_volume(f1, cfg.tikhonov.up_factors);
                persist_volume(h0, "h0.f32");
            }
            HighresResult hres = reconstruct_highres(g_full, cfg.geometry, h0, cfg.tikhonov);
            persist_volume(hres.h, "h.f32");
            {
                std::ostringstream os;
                os.precision(12);
                os << "step\tobjective\n";
                for (std::size_t i = 0; i < hres.objective_history.size(); ++i)
                    os << i << '\t' << hres.objective_history[i] << '\n';
                const std::string p = path_join(opt.out_dir, "highres_report.tsv");
                write_text_file(p, os.str());
                outputs.push_back(p);
            }

            if (!zeroinit) {
                DisplayResult disp = form_display(hres.h, f2, cfg.display, cfg.tikhonov.up_factors);
                persist_volume(disp.h2, "h2.f32");
                persist_volume(disp.h_sup, "h_sup.f32");
                persist_volume(disp.h_disp, "h_disp.f32");
            } else {
                // no background model: depth regularization only
                const ImageVolume h_disp = gaussian_blur_3d(hres.h, {0.0, 0.0, cfg.display.dz});
                persist_volume(h_disp, "h_disp.f32");
            }
        }

        for (const auto& p : outputs) manifest.add_output(p);
        manifest.write(path_join(opt.out_dir, "manifest.txt"));
        std::cout << "reconstruct: wrote " << outputs.size() << " artifacts to " << opt.out_dir << "\n";
        return kExitOk;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIoError;
    } catch (const std::runtime_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfigError;
    }
}

int run_slice(const SliceOptions& opt) {
    try {
        const ImageVolume vol = read_volume(opt.volume_path);
        if (opt.axis < 0 || opt.axis > 2) throw ConfigError("slice axis must be 0, 1 or 2");
        const int n = vol.grid.dims[opt.axis];
        if (opt.index < 0 || opt.index >= n)
            throw ConfigError("slice index " + std::to_string(opt.index) + " out of range [0, " +
                              std::to_string(n) + ")");

        const int a0 = opt.axis == 0 ? 1 : 0;          // in-slice horizontal axis
        const int a1 = opt.axis == 2 ? 1 : 2;          // in-slice vertical axis
        const int w = vol.grid.dims[a0], h = vol.grid.dims[a1];
        std::vector<double> slice(std::size_t(w) * h);
        for (int j = 0; j < h; ++j)
            for (int i = 0; i < w; ++i) {
                Index3 idx{};
                idx[opt.axis] = opt.index;
                idx[a0] = i;
                idx[a1] = j;
                slice[std::size_t(j) * w + i] = vol.at(idx[0], idx[1], idx[2]);
            }

        double lo = opt.window_lo, hi = opt.window_hi;
        if (lo == hi) {
            lo = slice[0];
            hi = slice[0];
            for (double v : slice) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            if (lo == hi) hi = lo + 1.0;
        }
        std::vector<std::uint16_t> pixels(slice.size());
        for (std::size_t i = 0; i < slice.size(); ++i) {
            const double t = std::clamp((slice[i] - lo) / (hi - lo), 0.0, 1.0);
            pixels[i] = std::uint16_t(std::lround(t * 65535.0));
        }
        write_pgm16(opt.out_path, w, h, pixels);

        if (opt.profile_axis >= 0) {
            if (opt.profile_axis == opt.axis)
                throw ConfigError("profile axis must lie within the slice");
            const int other = (opt.profile_axis == a0) ? a1 : a0;
            if (opt.profile_index < 0 || opt.profile_index >= vol.grid.dims[other])
                throw ConfigError("profile index out of range");
            std::ostringstream os;
            os.precision(10);
            os << "position_cm\tvalue\n";
            for (int i = 0; i < vol.grid.dims[opt.profile_axis]; ++i) {
                Index3 idx{};
                idx[opt.axis] = opt.index;
                idx[opt.profile_axis] = i;
                idx[other] = opt.profile_index;
                os << vol.grid.center_coord(opt.profile_axis, i) << '\t'
                   << vol.at(idx[0], idx[1], idx[2]) << '\n';
            }
            write_text_file(opt.profile_path.empty() ? opt.out_path + ".profile.tsv"
                                                     : opt.profile_path,
                            os.str());
        }
        return kExitOk;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIoError;
    }
}

int run_verify(const std::string& level) {
    std::vector<CheckResult> results;
    if (level == "quick")
        results = run_quick_checks();
    else if (level == "full")
        results = run_full_checks();
    else {
        std::cerr << "config error: verify level must be 'quick' or 'full'\n";
        return kExitConfigError;
    }
    bool all_pass = true;
    for (const auto& r : results) {
        std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << r.name << ": " << r.detail << " ("
                  << r.seconds << " s)\n";
        if (!r.pass) all_pass = false;
    }
    if (!all_pass) {
        for (const auto& r : results)
            if (!r.pass) std::cerr << "verification failed: " << r.name << "\n";
        return kExitVerifyFailed;
    }
    return kExitOk;
}

}  // namespace dbtrec
