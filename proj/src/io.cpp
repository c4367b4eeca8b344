#include "dbtrec/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <map>

namespace dbtrec {

namespace {

void write_f32_le(std::ofstream& os, const std::vector<double>& data) {
    std::vector<unsigned char> buf(data.size() * 4);
    for (std::size_t i = 0; i < data.size(); ++i) {
        const float f = float(data[i]);
        std::uint32_t u;
        std::memcpy(&u, &f, 4);
        buf[4 * i + 0] = u & 0xff;
        buf[4 * i + 1] = (u >> 8) & 0xff;
        buf[4 * i + 2] = (u >> 16) & 0xff;
        buf[4 * i + 3] = (u >> 24) & 0xff;
    }
    os.write(reinterpret_cast<const char*>(buf.data()), std::streamsize(buf.size()));
}

std::vector<double> read_f32_le(std::ifstream& is, std::size_t count) {
    std::vector<unsigned char> buf(count * 4);
    is.read(reinterpret_cast<char*>(buf.data()), std::streamsize(buf.size()));
    if (std::size_t(is.gcount()) != buf.size())
        throw IoError("payload shorter than sidecar dims require");
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint32_t u = std::uint32_t(buf[4 * i]) | (std::uint32_t(buf[4 * i + 1]) << 8) |
                                (std::uint32_t(buf[4 * i + 2]) << 16) | (std::uint32_t(buf[4 * i + 3]) << 24);
        float f;
        std::memcpy(&f, &u, 4);
        out[i] = double(f);
    }
    return out;
}

std::map<std::string, std::string> read_sidecar(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open sidecar: " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(is, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
        };
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

const std::string& require(const std::map<std::string, std::string>& kv, const std::string& key,
                           const std::string& path) {
    auto it = kv.find(key);
    if (it == kv.end()) throw IoError("sidecar " + path + " missing key: " + key);
    return it->second;
}

}  // namespace

void write_volume(const ImageVolume& vol, const std::string& path) {
    if (vol.data.size() != vol.grid.nvox())
        throw IoError("write_volume: data length does not match dims");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    write_f32_le(os, vol.data);
    if (!os) throw IoError("write failed: " + path);

    std::ostringstream meta;
    meta << "format = volume\n";
    meta << "dims = " << vol.grid.dims[0] << ' ' << vol.grid.dims[1] << ' ' << vol.grid.dims[2] << '\n';
    meta.precision(17);
    meta << "spacing_cm = " << vol.grid.spacing[0] << ' ' << vol.grid.spacing[1] << ' ' << vol.grid.spacing[2] << '\n';
    meta << "origin_cm = " << vol.grid.origin[0] << ' ' << vol.grid.origin[1] << ' ' << vol.grid.origin[2] << '\n';
    meta << "units = 1/cm\n";
    meta << "order = x-fastest\n";
    meta << "dtype = float32-le\n";
    write_text_file(path + ".meta", meta.str());
}

ImageVolume read_volume(const std::string& path) {
    const auto kv = read_sidecar(path + ".meta");
    if (require(kv, "format", path) != "volume") throw IoError(path + ": sidecar format is not 'volume'");
    ImageVolume vol;
    {
        std::istringstream ss(require(kv, "dims", path));
        ss >> vol.grid.dims[0] >> vol.grid.dims[1] >> vol.grid.dims[2];
        if (!ss) throw IoError(path + ": bad dims");
    }
    {
        std::istringstream ss(require(kv, "spacing_cm", path));
        ss >> vol.grid.spacing[0] >> vol.grid.spacing[1] >> vol.grid.spacing[2];
        if (!ss) throw IoError(path + ": bad spacing");
    }
    {
        std::istringstream ss(require(kv, "origin_cm", path));
        ss >> vol.grid.origin[0] >> vol.grid.origin[1] >> vol.grid.origin[2];
        if (!ss) throw IoError(path + ": bad origin");
    }
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open: " + path);
    vol.data = read_f32_le(is, vol.grid.nvox());
    return vol;
}

void write_projections(const ProjectionSet& p, const std::string& path) {
    if (p.data.size() != p.det.npix())
        throw IoError("write_projections: data length does not match detector dims");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    write_f32_le(os, p.data);
    if (!os) throw IoError("write failed: " + path);

    std::ostringstream meta;
    meta << "format = projections\n";
    meta << "nviews = " << p.det.nviews << '\n';
    meta << "detector = " << p.det.nu << ' ' << p.det.nv << '\n';
    meta.precision(17);
    meta << "pitch_cm = " << p.det.pitch_u << ' ' << p.det.pitch_v << '\n';
    meta << "units = dimensionless\n";
    meta << "order = u-fastest\n";
    meta << "dtype = float32-le\n";
    write_text_file(path + ".meta", meta.str());
}

ProjectionSet read_projections(const std::string& path) {
    const auto kv = read_sidecar(path + ".meta");
    if (require(kv, "format", path) != "projections")
        throw IoError(path + ": sidecar format is not 'projections'");
    ProjectionSet p;
    {
        std::istringstream ss(require(kv, "nviews", path));
        ss >> p.det.nviews;
        if (!ss) throw IoError(path + ": bad nviews");
    }
    {
        std::istringstream ss(require(kv, "detector", path));
        ss >> p.det.nu >> p.det.nv;
        if (!ss) throw IoError(path + ": bad detector dims");
    }
    {
        std::istringstream ss(require(kv, "pitch_cm", path));
        ss >> p.det.pitch_u >> p.det.pitch_v;
        if (!ss) throw IoError(path + ": bad pitch");
    }
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open: " + path);
    p.data = read_f32_le(is, p.det.npix());
    return p;
}

void write_pgm16(const std::string& path, int width, int height,
                 const std::vector<std::uint16_t>& pixels) {
    if (pixels.size() != std::size_t(width) * std::size_t(height))
        throw IoError("write_pgm16: pixel count mismatch");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    os << "P5\n" << width << ' ' << height << "\n65535\n";
    std::vector<unsigned char> row(std::size_t(width) * 2);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const std::uint16_t v = pixels[std::size_t(y) * width + x];
            row[2 * x] = (v >> 8) & 0xff;  // PGM stores MSB first
            row[2 * x + 1] = v & 0xff;
        }
        os.write(reinterpret_cast<const char*>(row.data()), std::streamsize(row.size()));
    }
    if (!os) throw IoError("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open: " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    os << content;
    if (!os) throw IoError("write failed: " + path);
}

}  // namespace dbtrec
