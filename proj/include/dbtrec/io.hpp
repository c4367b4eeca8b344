#pragma once

#include <stdexcept>
#include <string>

#include "dbtrec/grid.hpp"

namespace dbtrec {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Volumes and projection stacks are stored as a raw little-endian float32
/// payload at `path` plus a structured-text sidecar at `path + ".meta"`
/// carrying dims, spacing, origin, units and storage order. Round trips are
/// bit-exact at the file level.
void write_volume(const ImageVolume& vol, const std::string& path);
ImageVolume read_volume(const std::string& path);

void write_projections(const ProjectionSet& p, const std::string& path);
ProjectionSet read_projections(const std::string& path);

/// 16-bit binary PGM (P5, maxval 65535, big-endian samples per the format).
void write_pgm16(const std::string& path, int width, int height,
                 const std::vector<std::uint16_t>& pixels);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace dbtrec
