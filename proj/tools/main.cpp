#include <CLI11.hpp>

#include "dbtrec/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"dbtrec - limited-arc tomosynthesis reconstruction toolkit"};
    app.require_subcommand(1);

    dbtrec::CommonOptions common;
    std::uint64_t seed_value = 0;

    auto add_common = [&](CLI::App* sub, bool needs_config) {
        auto* c = sub->add_option("--config", common.config_path, "run configuration file");
        if (needs_config) c->required();
        sub->add_option("--out-dir", common.out_dir, "output directory");
        sub->add_option("--seed", seed_value, "override the config seed")
            ->each([&](const std::string&) { common.seed = seed_value; });
        sub->add_option("--threads", common.threads, "thread cap (0 = default)");
    };

    auto* sim = app.add_subcommand("simulate", "generate phantom data and raw counts");
    add_common(sim, true);

    auto* rec = app.add_subcommand("reconstruct", "run the reconstruction pipeline");
    add_common(rec, true);
    std::string stage = "all";
    rec->add_option("--stage", stage, "lowres | highres | all")
        ->check(CLI::IsMember({"lowres", "highres", "all"}));
    bool zeroinit = false;
    rec->add_flag("--zeroinit", zeroinit, "zero-initialized refinement, no background removal");

    auto* slc = app.add_subcommand("slice", "export a slice image and optional profile");
    dbtrec::SliceOptions slice_opt;
    slc->add_option("volume", slice_opt.volume_path, "volume payload path")->required();
    std::string axis = "z";
    slc->add_option("--axis", axis, "slice axis: x | y | z")
        ->check(CLI::IsMember({"x", "y", "z"}));
    slc->add_option("--index", slice_opt.index, "slice index")->required();
    slc->add_option("--window", [&](const std::vector<std::string>& vals) {
            slice_opt.window_lo = std::stod(vals[0]);
            slice_opt.window_hi = std::stod(vals[1]);
            return true;
        }, "gray window lo hi")->expected(2);
    slc->add_option("--out", slice_opt.out_path, "output .pgm path")->required();
    std::string profile_axis;
    slc->add_option("--profile-axis", profile_axis, "in-slice profile axis: x | y | z");
    slc->add_option("--profile-index", slice_opt.profile_index, "fixed index of the other in-slice axis");
    slc->add_option("--profile-out", slice_opt.profile_path, "profile .tsv path");

    auto* ver = app.add_subcommand("verify", "run the invariant suites");
    std::string level = "quick";
    ver->add_option("--level", level, "quick | full")->check(CLI::IsMember({"quick", "full"}));
    ver->add_option("--threads", common.threads, "thread cap (0 = default)");

    CLI11_PARSE(app, argc, argv);

    if (sim->parsed()) return dbtrec::run_simulate(common);
    if (rec->parsed()) {
        const dbtrec::ReconStage s = stage == "lowres" ? dbtrec::ReconStage::Lowres
                                     : stage == "highres" ? dbtrec::ReconStage::Highres
                                                          : dbtrec::ReconStage::All;
        return dbtrec::run_reconstruct(common, s, zeroinit);
    }
    if (slc->parsed()) {
        slice_opt.axis = axis == "x" ? 0 : axis == "y" ? 1 : 2;
        if (!profile_axis.empty())
            slice_opt.profile_axis = profile_axis == "x" ? 0 : profile_axis == "y" ? 1 : 2;
        return dbtrec::run_slice(slice_opt);
    }
    if (ver->parsed()) {
        dbtrec::set_max_threads(common.threads);
        return dbtrec::run_verify(level);
    }
    return dbtrec::kExitConfigError;
}
