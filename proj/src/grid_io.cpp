#include "mfhjb/grid_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace mfhjb {

static_assert(std::endian::native == std::endian::little,
              "dump format assumes a little-endian host");

namespace {

constexpr std::uint32_t format_version = 1;

void put_u32(std::ofstream& f, std::uint32_t v) {
    f.write(reinterpret_cast<const char*>(&v), 4);
}
void put_u64(std::ofstream& f, std::uint64_t v) {
    f.write(reinterpret_cast<const char*>(&v), 8);
}
std::uint32_t get_u32(std::ifstream& f) {
    std::uint32_t v = 0;
    f.read(reinterpret_cast<char*>(&v), 4);
    return v;
}
std::uint64_t get_u64(std::ifstream& f) {
    std::uint64_t v = 0;
    f.read(reinterpret_cast<char*>(&v), 8);
    return v;
}

struct Header {
    std::uint32_t d = 0, N = 0, M = 0, has_z = 0;
    char tag[5] = {0};
    std::uint64_t count = 0;
};

void write_header(std::ofstream& f, const Header& h) {
    f.write("MFHJ", 4);
    put_u32(f, format_version);
    put_u32(f, h.d);
    put_u32(f, h.N);
    put_u32(f, h.M);
    put_u32(f, h.has_z);
    f.write(h.tag, 4);
    put_u64(f, h.count);
}

Header read_header(std::ifstream& f, const std::string& path) {
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, "MFHJ", 4) != 0)
        throw invalid_input_error(path + ": not a grid dump (bad magic)");
    const std::uint32_t version = get_u32(f);
    if (version != format_version)
        throw invalid_input_error(path + ": unsupported dump version " +
                                  std::to_string(version));
    Header h;
    h.d = get_u32(f);
    h.N = get_u32(f);
    h.M = get_u32(f);
    h.has_z = get_u32(f);
    f.read(h.tag, 4);
    h.count = get_u64(f);
    if (!f) throw invalid_input_error(path + ": truncated header");
    if (std::memcmp(h.tag, "REAL", 4) != 0 && std::memcmp(h.tag, "CPLX", 4) != 0)
        throw invalid_input_error(path + ": unknown payload tag");
    return h;
}

} // namespace

void write_grid_dump(const std::string& path, const GridFn& f) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw invalid_input_error("cannot open for writing: " + path);
    Header h;
    h.d = static_cast<std::uint32_t>(f.spec.d);
    h.N = static_cast<std::uint32_t>(f.spec.N);
    h.M = static_cast<std::uint32_t>(f.spec.M);
    h.has_z = f.spec.has_z ? 1 : 0;
    std::memcpy(h.tag, "REAL", 4);
    h.count = f.v.size();
    write_header(out, h);
    out.write(reinterpret_cast<const char*>(f.v.data()),
              static_cast<std::streamsize>(f.v.size() * sizeof(double)));
    if (!out) throw invalid_input_error("write failed: " + path);
}

GridFn read_grid_dump(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw invalid_input_error("cannot open: " + path);
    const Header h = read_header(in, path);
    if (std::memcmp(h.tag, "REAL", 4) != 0)
        throw invalid_input_error(path + ": expected REAL payload");
    GridSpec spec{static_cast<int>(h.d), static_cast<int>(h.N), static_cast<int>(h.M),
                  h.has_z != 0};
    GridFn f(spec);
    if (h.count != f.v.size())
        throw invalid_input_error(path + ": payload count does not match grid");
    in.read(reinterpret_cast<char*>(f.v.data()),
            static_cast<std::streamsize>(f.v.size() * sizeof(double)));
    if (!in) throw invalid_input_error(path + ": truncated payload");
    return f;
}

void write_coeffs_dump(const std::string& path, const SignedMeasureCoeffs& q) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw invalid_input_error("cannot open for writing: " + path);
    Header h;
    h.d = static_cast<std::uint32_t>(q.d);
    h.N = 0;
    h.M = static_cast<std::uint32_t>(q.Xi);
    h.has_z = 0;
    std::memcpy(h.tag, "CPLX", 4);
    h.count = q.c.size();
    write_header(out, h);
    for (const auto& z : q.c) {
        const double re = z.real(), im = z.imag();
        out.write(reinterpret_cast<const char*>(&re), 8);
        out.write(reinterpret_cast<const char*>(&im), 8);
    }
    if (!out) throw invalid_input_error("write failed: " + path);
}

SignedMeasureCoeffs read_coeffs_dump(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw invalid_input_error("cannot open: " + path);
    const Header h = read_header(in, path);
    if (std::memcmp(h.tag, "CPLX", 4) != 0)
        throw invalid_input_error(path + ": expected CPLX payload");
    if (h.N != 0) throw invalid_input_error(path + ": coefficient dumps use N = 0");
    SignedMeasureCoeffs q;
    q.d = static_cast<int>(h.d);
    q.Xi = static_cast<int>(h.M);
    q.c.resize(q.box_count());
    if (h.count != q.c.size())
        throw invalid_input_error(path + ": payload count does not match box");
    for (auto& z : q.c) {
        double re = 0.0, im = 0.0;
        in.read(reinterpret_cast<char*>(&re), 8);
        in.read(reinterpret_cast<char*>(&im), 8);
        z = {re, im};
    }
    if (!in) throw invalid_input_error(path + ": truncated payload");
    return q;
}

void write_sidecar(const std::string& path,
                   const std::vector<std::pair<std::string, std::string>>& kv) {
    std::ofstream out(path);
    if (!out) throw invalid_input_error("cannot open for writing: " + path);
    for (const auto& [k, v] : kv) out << k << "=" << v << "\n";
    if (!out) throw invalid_input_error("write failed: " + path);
}

std::vector<std::pair<std::string, std::string>> read_sidecar(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw invalid_input_error("cannot open: " + path);
    std::vector<std::pair<std::string, std::string>> kv;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw invalid_input_error(path + ": malformed sidecar line: " + line);
        kv.emplace_back(line.substr(0, eq), line.substr(eq + 1));
    }
    return kv;
}

} // namespace mfhjb
