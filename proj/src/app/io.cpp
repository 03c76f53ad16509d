#include "sedqm/io.hpp"

#include <bit>
#include <cmath>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace sedqm::io {

static_assert(std::endian::native == std::endian::little, "binary grid writer assumes a little-endian host");

namespace {

constexpr char magic[8] = {'S', 'E', 'D', 'Q', 'M', 'G', 'R', 'D'};

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, mode | std::ios::trunc);
    if (!f) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
    return f;
}

template <class T>
void put(std::ofstream& f, T v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::ifstream& f, const std::filesystem::path& path) {
    T v;
    if (!f.read(reinterpret_cast<char*>(&v), sizeof v)) throw Error(ErrorCode::Io, "truncated grid file " + path.string());
    return v;
}

void finish(std::ofstream& f, const std::filesystem::path& path) {
    f.flush();
    if (!f) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

}  // namespace

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::span<const double>>& columns) {
    if (header.size() != columns.size()) throw Error(ErrorCode::InvalidArgument, "header and column counts differ");
    const std::size_t rows = columns.empty() ? 0 : columns.front().size();
    for (const auto& c : columns)
        if (c.size() != rows) throw Error(ErrorCode::InvalidArgument, "CSV columns differ in length");
    auto f = open_out(path);
    for (std::size_t k = 0; k < header.size(); ++k) f << (k ? "," : "") << header[k];
    f << '\n';
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t k = 0; k < columns.size(); ++k) f << (k ? "," : "") << format_double(columns[k][r]);
        f << '\n';
    }
    finish(f, path);
}

void write_grid_csv(const std::filesystem::path& path, const Grid1D& x, const Grid1D& p,
                    const std::vector<std::string>& names, const std::vector<std::span<const double>>& values) {
    if (names.size() != values.size()) throw Error(ErrorCode::InvalidArgument, "name and grid counts differ");
    for (const auto& v : values)
        if (v.size() != x.n * p.n) throw Error(ErrorCode::GridMismatch, "grid values do not match the axes");
    auto f = open_out(path);
    f << "x,p";
    for (const auto& n : names) f << ',' << n;
    f << '\n';
    for (std::size_t i = 0; i < x.n; ++i)
        for (std::size_t j = 0; j < p.n; ++j) {
            f << format_double(x[i]) << ',' << format_double(p[j]);
            for (const auto& v : values) f << ',' << format_double(v[i * p.n + j]);
            f << '\n';
        }
    finish(f, path);
}

void write_grid(const std::filesystem::path& path, const Grid1D& x, const Grid1D& p, std::span<const double> values) {
    if (values.size() != x.n * p.n) throw Error(ErrorCode::GridMismatch, "grid values do not match the axes");
    auto f = open_out(path, std::ios::out | std::ios::binary);
    f.write(magic, sizeof magic);
    put<std::uint32_t>(f, 1);
    put<std::uint32_t>(f, 2);
    put<std::uint64_t>(f, x.n);
    put<std::uint64_t>(f, p.n);
    put(f, x.min);
    put(f, x.max());
    put(f, p.min);
    put(f, p.max());
    f.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)));
    finish(f, path);
}

GridFile read_grid(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::Io, "cannot open " + path.string());
    char m[8];
    if (!f.read(m, sizeof m) || std::memcmp(m, magic, sizeof m) != 0)
        throw Error(ErrorCode::Io, path.string() + " is not a grid file");
    if (get<std::uint32_t>(f, path) != 1) throw Error(ErrorCode::Io, "unsupported grid file version");
    if (get<std::uint32_t>(f, path) != 2) throw Error(ErrorCode::Io, "grid file is not two-dimensional");
    GridFile g;
    g.nx = get<std::uint64_t>(f, path);
    g.np = get<std::uint64_t>(f, path);
    g.x_min = get<double>(f, path);
    g.x_max = get<double>(f, path);
    g.p_min = get<double>(f, path);
    g.p_max = get<double>(f, path);
    g.values.resize(g.nx * g.np);
    if (!f.read(reinterpret_cast<char*>(g.values.data()), static_cast<std::streamsize>(g.values.size() * sizeof(double))))
        throw Error(ErrorCode::Io, "truncated grid file " + path.string());
    return g;
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw Error(ErrorCode::Io, "cannot open " + path.string());
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    auto f = open_out(path);
    f << text;
    finish(f, path);
}

}  // namespace sedqm::io
