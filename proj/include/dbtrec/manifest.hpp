#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dbtrec {

std::uint64_t fnv1a64(const void* data, std::size_t len);
std::uint64_t fnv1a64(const std::string& s);
std::uint64_t checksum_file(const std::string& path);

/// Provenance record for one run: config hash, seed, tool version, and a
/// checksum for every output file.
class RunManifest {
  public:
    RunManifest(std::string config_text, std::uint64_t seed, int threads);

    void add_input(const std::string& path);
    void add_output(const std::string& path);  // checksummed on write
    void set_note(const std::string& key, const std::string& value);

    void write(const std::string& path) const;

  private:
    std::uint64_t config_hash_;
    std::uint64_t seed_;
    int threads_;
    std::string created_;
    std::vector<std::pair<std::string, std::string>> notes_;
    std::vector<std::string> inputs_;
    std::vector<std::string> outputs_;
};

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace dbtrec
