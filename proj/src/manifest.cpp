#include "dbtrec/manifest.hpp"

#include <chrono>
#include <ctime>
#include <iomanip>
#include <sstream>

#include "dbtrec/io.hpp"

namespace dbtrec {

std::uint64_t fnv1a64(const void* data, std::size_t len) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

std::uint64_t checksum_file(const std::string& path) {
    const std::string bytes = read_text_file(path);  // binary-safe read
    return fnv1a64(bytes);
}

namespace {
std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << v;
    return os.str();
}
}  // namespace

RunManifest::RunManifest(std::string config_text, std::uint64_t seed, int threads)
    : config_hash_(fnv1a64(config_text)), seed_(seed), threads_(threads) {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    created_ = buf;
}

void RunManifest::add_input(const std::string& path) { inputs_.push_back(path); }
void RunManifest::add_output(const std::string& path) { outputs_.push_back(path); }
void RunManifest::set_note(const std::string& key, const std::string& value) {
    notes_.emplace_back(key, value);
}

void RunManifest::write(const std::string& path) const {
    std::ostringstream os;
    os << "tool = dbtrec " << kToolVersion << '\n';
    os << "created = " << created_ << '\n';
    os << "config_hash = " << hex64(config_hash_) << '\n';
    os << "seed = " << seed_ << '\n';
    os << "threads = " << threads_ << '\n';
    for (const auto& [k, v] : notes_) os << k << " = " << v << '\n';
    for (const auto& p : inputs_) os << "input " << p << " = " << hex64(checksum_file(p)) << '\n';
    for (const auto& p : outputs_) os << "output " << p << " = " << hex64(checksum_file(p)) << '\n';
    write_text_file(path, os.str());
}

}  // namespace dbtrec
