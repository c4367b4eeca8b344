#include "dbtrec/config.hpp"

#include <cmath>
#include <sstream>

#include "dbtrec/io.hpp"

namespace dbtrec {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    const auto e = s.find_last_not_of(" \t\r\n");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

std::string dirname(const std::string& path) {
    const auto pos = path.find_last_of('/');
    return pos == std::string::npos ? std::string{} : path.substr(0, pos + 1);
}

std::string join_path(const std::string& base, const std::string& rel) {
    if (rel.empty() || rel.front() == '/' || base.empty()) return rel;
    return base + rel;
}

}  // namespace

double parse_number(const std::string& text) {
    const std::string t = trim(text);
    const auto slash = t.find('/');
    if (slash != std::string::npos) {
        const double num = parse_number(t.substr(0, slash));
        const double den = parse_number(t.substr(slash + 1));
        if (den == 0.0) throw ConfigError("division by zero in fraction: " + text);
        return num / den;
    }
    std::size_t pos = 0;
    double v;
    try {
        v = std::stod(t, &pos);
    } catch (const std::exception&) {
        throw ConfigError("not a number: '" + text + "'");
    }
    if (pos != t.size()) throw ConfigError("trailing characters in number: '" + text + "'");
    return v;
}

const std::string* ConfigSection::find(const std::string& key) const {
    for (const auto& [k, v] : entries)
        if (k == key) return &v;
    return nullptr;
}

std::string ConfigSection::get_string(const std::string& key) const {
    const std::string* v = find(key);
    if (!v) throw ConfigError("[" + name + "] missing key: " + key);
    return *v;
}

std::string ConfigSection::get_string(const std::string& key, const std::string& fallback) const {
    const std::string* v = find(key);
    return v ? *v : fallback;
}

double ConfigSection::get_double(const std::string& key) const {
    return parse_number(get_string(key));
}

double ConfigSection::get_double(const std::string& key, double fallback) const {
    const std::string* v = find(key);
    return v ? parse_number(*v) : fallback;
}

int ConfigSection::get_int(const std::string& key) const {
    const double v = get_double(key);
    const int i = int(std::llround(v));
    if (std::abs(v - i) > 1e-9) throw ConfigError("[" + name + "] " + key + " must be an integer");
    return i;
}

int ConfigSection::get_int(const std::string& key, int fallback) const {
    return find(key) ? get_int(key) : fallback;
}

std::uint64_t ConfigSection::get_u64(const std::string& key, std::uint64_t fallback) const {
    const std::string* v = find(key);
    if (!v) return fallback;
    try {
        return std::stoull(trim(*v));
    } catch (const std::exception&) {
        throw ConfigError("[" + name + "] " + key + " must be a non-negative integer");
    }
}

bool ConfigSection::get_bool(const std::string& key, bool fallback) const {
    const std::string* v = find(key);
    if (!v) return fallback;
    const std::string t = trim(*v);
    if (t == "1" || t == "true" || t == "yes") return true;
    if (t == "0" || t == "false" || t == "no") return false;
    throw ConfigError("[" + name + "] " + key + " must be a boolean");
}

namespace {
std::vector<double> split_numbers(const std::string& s) {
    std::istringstream ss(s);
    std::vector<double> out;
    std::string tok;
    while (ss >> tok) out.push_back(parse_number(tok));
    return out;
}
}  // namespace

Vec3 ConfigSection::get_vec3(const std::string& key) const {
    const auto v = split_numbers(get_string(key));
    if (v.size() != 3) throw ConfigError("[" + name + "] " + key + " must have 3 components");
    return {v[0], v[1], v[2]};
}

Vec3 ConfigSection::get_vec3(const std::string& key, Vec3 fallback) const {
    return find(key) ? get_vec3(key) : fallback;
}

Vec2 ConfigSection::get_vec2(const std::string& key, Vec2 fallback) const {
    const std::string* s = find(key);
    if (!s) return fallback;
    const auto v = split_numbers(*s);
    if (v.size() != 2) throw ConfigError("[" + name + "] " + key + " must have 2 components");
    return {v[0], v[1]};
}

ConfigFile ConfigFile::parse(const std::string& text) {
    ConfigFile cfg;
    cfg.raw_text = text;
    std::istringstream ss(text);
    std::string line;
    ConfigSection* current = nullptr;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("line " + std::to_string(lineno) + ": malformed section header");
            cfg.sections.push_back(ConfigSection{trim(line.substr(1, line.size() - 2)), {}});
            current = &cfg.sections.back();
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        if (!current) throw ConfigError("line " + std::to_string(lineno) + ": entry before any section");
        current->entries.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return cfg;
}

ConfigFile ConfigFile::load(const std::string& path) {
    std::string text;
    try {
        text = read_text_file(path);
    } catch (const IoError& e) {
        throw ConfigError("cannot read config file '" + path + "': " + e.what());
    }
    return parse(text);
}

const ConfigSection* ConfigFile::find(const std::string& name) const {
    for (const auto& s : sections)
        if (s.name == name) return &s;
    return nullptr;
}

const ConfigSection& ConfigFile::require(const std::string& name) const {
    const ConfigSection* s = find(name);
    if (!s) throw ConfigError("missing config section [" + name + "]");
    return *s;
}

std::vector<const ConfigSection*> ConfigFile::all(const std::string& name) const {
    std::vector<const ConfigSection*> out;
    for (const auto& s : sections)
        if (s.name == name) out.push_back(&s);
    return out;
}

PipelineConfig PipelineConfig::from_text(const std::string& text, const std::string& base_dir) {
    const ConfigFile cfg = ConfigFile::parse(text);
    PipelineConfig p;
    p.raw_text = text;

    const ConfigSection& geo = cfg.require("geometry");
    DetectorGrid det;
    det.nviews = geo.get_int("nviews");
    det.nu = geo.get_int("det_nu");
    det.nv = geo.get_int("det_nv");
    det.pitch_u = geo.get_double("det_pitch_u_cm");
    det.pitch_v = geo.get_double("det_pitch_v_cm");
    p.geometry = make_arc_geometry(det.nviews, geo.get_double("arc_deg"), geo.get_double("sid_cm"),
                                   geo.get_double("sdd_cm"), det);

    const ConfigSection& low = cfg.require("lowres");
    p.lowres_grid = make_centered_grid({low.get_int("nx"), low.get_int("ny"), low.get_int("nz")},
                                       low.get_vec3("voxel_cm"));
    p.preprocess.down_u = low.get_int("down_u", 4);
    p.preprocess.down_v = low.get_int("down_v", 4);
    p.preprocess.strip_v0 = low.get_int("strip_v0");
    p.preprocess.strip_v1 = low.get_int("strip_v1");
    p.preprocess.log_floor = low.get_double("log_floor", 1e-6);

    p.coupled.alpha_x = low.get_double("alpha_x", p.coupled.alpha_x);
    p.coupled.alpha_y = low.get_double("alpha_y", p.coupled.alpha_y);
    p.coupled.alpha_a = low.get_double("alpha_a", p.coupled.alpha_a);
    p.coupled.alpha_b = low.get_double("alpha_b", p.coupled.alpha_b);
    p.coupled.alpha_1 = low.get_double("alpha_1", p.coupled.alpha_1);
    p.coupled.alpha_3 = low.get_double("alpha_3", p.coupled.alpha_3);
    p.coupled.eps1 = low.get_double("eps1", p.coupled.eps1);
    p.coupled.eps2 = low.get_double("eps2", p.coupled.eps2);
    p.coupled.d1 = low.get_vec3("d1", p.lowres_grid.spacing);
    p.coupled.d2 = low.get_vec3("d2", {1.5, 1.5, p.lowres_grid.spacing[2]});
    p.coupled.dd = low.get_vec2("dd", {2.0, 2.0});
    p.coupled.ramp_cutoff = low.get_double("c", 1.0);
    p.coupled.oblique_deg = low.get_double("oblique_deg", 0.5 * p.geometry.arc_deg);
    p.coupled.validate();

    const ConfigSection& sol = cfg.require("solver");
    p.solver.gamma = sol.get_double("gamma", 5.0);
    p.solver.beta = sol.get_double("beta", 100.0);
    p.solver.rho = sol.get_double("rho", 1.75);
    p.solver.stopping.max_iters = sol.get_int("max_iters", 2000);
    p.solver.stopping.residual_tol = sol.get_double("residual_tol", 1e-3);
    p.solver.stopping.primal_change_tol = sol.get_double("primal_change_tol", 1e-7);
    p.solver.stopping.stats_interval = sol.get_int("stats_interval", 25);
    p.solver.power.rel_tol = sol.get_double("power_tol", 1e-4);
    p.solver.power.max_iters = sol.get_int("power_max_iters", 30000);
    p.solver.power.seed = sol.get_u64("power_seed", 20240601);

    const ConfigSection& hi = cfg.require("highres");
    p.tikhonov.alpha_tik = hi.get_double("alpha_tik", 0.1);
    p.tikhonov.steps = hi.get_int("steps", 10);
    p.tikhonov.up_factors = {hi.get_int("up_x", 4), hi.get_int("up_y", 4), hi.get_int("up_z", 2)};
    const Vec3 hr_voxel = {p.lowres_grid.spacing[0] / p.tikhonov.up_factors[0],
                           p.lowres_grid.spacing[1] / p.tikhonov.up_factors[1],
                           p.lowres_grid.spacing[2] / p.tikhonov.up_factors[2]};
    p.tikhonov.d = hi.get_vec3("d", hr_voxel);
    p.tikhonov.ramp_cutoff = hi.get_double("c", p.coupled.ramp_cutoff);
    p.tikhonov.validate();

    const ConfigSection& disp = cfg.require("display");
    p.display.support_threshold = disp.get_double("threshold", 0.1);
    p.display.dz = disp.get_double("dz", 0.085);
    p.display.validate();

    if (const ConfigSection* s = cfg.find("simulate")) {
        p.simulate.phantom_path = join_path(base_dir, s->get_string("phantom", ""));
        p.simulate.artifact_path = join_path(base_dir, s->get_string("artifact", ""));
        p.simulate.i0 = s->get_double("i0", 1e5);
        p.simulate.poisson = s->get_bool("poisson", false);
        p.simulate.fine_grid = s->get_bool("fine_grid", false);
        p.simulate.seed = s->get_u64("seed", 1);
    }
    if (const ConfigSection* s = cfg.find("io"))
        p.counts_path = join_path(base_dir, s->get_string("counts", ""));
    return p;
}

PipelineConfig PipelineConfig::from_file(const std::string& path) {
    std::string text;
    try {
        text = read_text_file(path);
    } catch (const IoError& e) {
        throw ConfigError("cannot read config file '" + path + "': " + e.what());
    }
    return from_text(text, dirname(path));
}

PhantomSpec parse_phantom_spec(const ConfigFile& cfg) {
    PhantomSpec spec;
    const ConfigSection& env = cfg.require("envelope");
    spec.envelope_half = env.get_vec3("half_widths");
    spec.envelope_center = env.get_vec3("center", {0, 0, 0});
    spec.background = env.get_double("background", 0.2);
    spec.supersample = env.get_int("supersample", 2);
    spec.texture_seed = env.get_u64("texture_seed", 0);
    spec.texture_amplitude = env.get_double("texture_amplitude", 0.05);
    spec.texture_corr_cm = env.get_double("texture_corr_cm", 0.5);
    for (const ConfigSection* s : cfg.all("sphere")) {
        Inclusion inc;
        inc.shape = Inclusion::Shape::Sphere;
        inc.center = s->get_vec3("center");
        inc.radius = s->get_double("radius");
        inc.contrast = s->get_double("contrast");
        spec.inclusions.push_back(inc);
    }
    for (const ConfigSection* s : cfg.all("rod")) {
        Inclusion inc;
        inc.shape = Inclusion::Shape::Rod;
        inc.center = s->get_vec3("center");
        inc.radius = s->get_double("radius");
        inc.half_length = s->get_double("half_length");
        const std::string axis = s->get_string("axis", "x");
        if (axis == "x") inc.axis = 0;
        else if (axis == "y") inc.axis = 1;
        else if (axis == "z") inc.axis = 2;
        else throw ConfigError("[rod] axis must be x, y or z");
        inc.contrast = s->get_double("contrast");
        spec.inclusions.push_back(inc);
    }
    spec.validate();
    return spec;
}

PhantomSpec load_phantom_spec(const std::string& path) {
    return parse_phantom_spec(ConfigFile::load(path));
}

std::vector<ArtifactSpec> parse_artifact_specs(const ConfigFile& cfg) {
    std::vector<ArtifactSpec> out;
    for (const ConfigSection* s : cfg.all("artifact")) {
        ArtifactSpec a;
        const std::string kind = s->get_string("kind");
        if (kind == "additive-smooth-projection")
            a.kind = ArtifactSpec::Kind::AdditiveSmoothProjection;
        else if (kind == "fluence-gradient")
            a.kind = ArtifactSpec::Kind::FluenceGradient;
        else
            throw ConfigError("[artifact] unknown kind: " + kind);
        a.amplitude = s->get_double("amplitude");
        if (a.amplitude < 0.0) throw ConfigError("[artifact] amplitude must be >= 0");
        a.correlation_cm = s->get_double("correlation_cm", 2.0);
        a.seed = s->get_u64("seed", 7);
        out.push_back(a);
    }
    return out;
}

std::vector<ArtifactSpec> load_artifact_specs(const std::string& path) {
    return parse_artifact_specs(ConfigFile::load(path));
}

}  // namespace dbtrec
