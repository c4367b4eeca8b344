#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace dbtrec {

/// OpenMP thread cap for the elementwise/per-ray parallel loops; 0 keeps
/// the runtime default. Reductions are order-fixed, so results do not
/// depend on this setting.
void set_max_threads(int n);

inline constexpr int kExitOk = 0;
inline constexpr int kExitVerifyFailed = 1;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitIoError = 3;

struct CommonOptions {
    std::string config_path;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;  // overrides the config seed
    int threads = 0;
};

enum class ReconStage { Lowres, Highres, All };

/// simulate: phantom voxelization, acquisition, counts + ground truth +
/// manifest under out_dir.
int run_simulate(const CommonOptions& opt);

/// reconstruct: preprocess -> downsample -> coupled low-res solve ->
/// Tikhonov refinement -> display image, persisting every stage product.
/// zeroinit skips the low-res stage and the background subtraction.
int run_reconstruct(const CommonOptions& opt, ReconStage stage, bool zeroinit);

struct SliceOptions {
    std::string volume_path;
    int axis = 2;  // 0=x, 1=y, 2=z
    int index = 0;
    double window_lo = 0.0;
    double window_hi = 0.0;  // lo == hi: auto window from slice min/max
    std::string out_path;
    int profile_axis = -1;   // in-slice axis for an optional line profile
    int profile_index = -1;
    std::string profile_path;
};

/// slice: writes a 16-bit graymap of one in-plane slice and optionally a
/// tab-separated line profile.
int run_slice(const SliceOptions& opt);

/// verify: runs the invariant suites; exit 1 if any check fails.
int run_verify(const std::string& level);

}  // namespace dbtrec
