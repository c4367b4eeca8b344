#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dbtrec/pipeline.hpp"
#include "dbtrec/sim.hpp"

namespace dbtrec {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Minimal structured-text format: `[section]` headers, `key = value`
/// entries, `#` comments. Sections may repeat (used for phantom inclusion
/// lists). Scalar values accept plain numbers and `p/q` fractions.
struct ConfigSection {
    std::string name;
    std::vector<std::pair<std::string, std::string>> entries;

    const std::string* find(const std::string& key) const;
    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key) const;
    int get_int(const std::string& key, int fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    Vec3 get_vec3(const std::string& key) const;
    Vec3 get_vec3(const std::string& key, Vec3 fallback) const;
    Vec2 get_vec2(const std::string& key, Vec2 fallback) const;
};

struct ConfigFile {
    std::vector<ConfigSection> sections;
    std::string raw_text;

    static ConfigFile parse(const std::string& text);
    static ConfigFile load(const std::string& path);

    const ConfigSection* find(const std::string& name) const;
    const ConfigSection& require(const std::string& name) const;
    std::vector<const ConfigSection*> all(const std::string& name) const;
};

double parse_number(const std::string& text);  // handles "5/9"

struct PreprocessConfig {
    int strip_v0 = 0;
    int strip_v1 = 0;
    double log_floor = 1e-6;
    int down_u = 4;
    int down_v = 4;
};

struct SimulateConfig {
    std::string phantom_path;
    std::string artifact_path;  // empty = no artifacts
    double i0 = 1e5;
    bool poisson = false;
    bool fine_grid = false;  // voxelize the phantom on a 2x finer grid
    std::uint64_t seed = 1;
};

/// Everything a reconstruction or simulation run needs, parsed from one
/// config file with sections [geometry], [lowres], [highres], [display],
/// [solver] (+ [simulate], [io]).
struct PipelineConfig {
    ScanGeometry geometry;
    VolumeGrid lowres_grid;
    PreprocessConfig preprocess;
    CoupledProblemConfig coupled;
    SolverConfig solver;
    TikhonovConfig tikhonov;
    DisplayConfig display;
    SimulateConfig simulate;
    std::string counts_path;  // [io] counts, for reconstruction runs
    std::string raw_text;

    static PipelineConfig from_file(const std::string& path);
    static PipelineConfig from_text(const std::string& text, const std::string& base_dir = "");
};

PhantomSpec load_phantom_spec(const std::string& path);
std::vector<ArtifactSpec> load_artifact_specs(const std::string& path);
PhantomSpec parse_phantom_spec(const ConfigFile& cfg);
std::vector<ArtifactSpec> parse_artifact_specs(const ConfigFile& cfg);

}  // namespace dbtrec
