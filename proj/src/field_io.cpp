#include "eklab/field_io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace eklab {

namespace {

constexpr const char* kMagic = "EKLAB-FIELD";
constexpr int kVersion = 1;

void write_header(std::ostream& os, const char* kind, const Grid2& g) {
    os << kMagic << ' ' << kVersion << '\n';
    os << kind << ' ' << g.nx << ' ' << g.ny << ' ' << format_double(g.x0) << ' ' << format_double(g.y0)
       << ' ' << format_double(g.hx) << ' ' << format_double(g.hy) << '\n';
}

void write_rows(std::ostream& os, const Grid2& g, const std::vector<double>& v, const Mask& m) {
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            const auto k = g.index(i, j);
            if (i) os << ' ';
            os << (m[k] ? format_double(v[k]) : std::string("nan"));
        }
        os << '\n';
    }
}

double parse_number(const std::string& tok) {
    const char* begin = tok.c_str();
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0') throw ParseError("EKF1: bad number '" + tok + "'");
    return v;
}

struct Header {
    std::string kind;
    Grid2 grid;
};

Header read_header(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw ParseError("EKF1: missing magic line");
    std::istringstream l1(line);
    std::string magic;
    int version = 0;
    if (!(l1 >> magic >> version) || magic != kMagic) throw ParseError("EKF1: bad magic line '" + line + "'");
    if (version != kVersion) {
        throw ParseError("EKF1: unsupported version " + std::to_string(version));
    }
    if (!std::getline(is, line)) throw ParseError("EKF1: missing header line");
    std::istringstream l2(line);
    Header h;
    std::string x0, y0, hx, hy;
    if (!(l2 >> h.kind >> h.grid.nx >> h.grid.ny >> x0 >> y0 >> hx >> hy)) {
        throw ParseError("EKF1: malformed header line '" + line + "'");
    }
    h.grid.x0 = parse_number(x0);
    h.grid.y0 = parse_number(y0);
    h.grid.hx = parse_number(hx);
    h.grid.hy = parse_number(hy);
    try {
        h.grid.validate();
    } catch (const PreconditionError& e) {
        throw ParseError(std::string("EKF1: ") + e.what());
    }
    return h;
}

// Reads ny rows of `per_row` values each.
std::vector<double> read_rows(std::istream& is, const Grid2& g, int per_row) {
    std::vector<double> out;
    out.reserve(g.size() * static_cast<std::size_t>(per_row));
    std::string line, tok;
    for (int j = 0; j < g.ny; ++j) {
        if (!std::getline(is, line)) throw ParseError("EKF1: missing row " + std::to_string(j));
        std::istringstream ls(line);
        int n = 0;
        while (ls >> tok) {
            out.push_back(parse_number(tok));
            ++n;
        }
        if (n != g.nx * per_row) {
            throw ParseError("EKF1: row " + std::to_string(j) + " has " + std::to_string(n) +
                             " values, expected " + std::to_string(g.nx * per_row));
        }
    }
    return out;
}

Mask mask_from(const Grid2& g, const std::vector<double>& v, int stride) {
    Mask m(g, false);
    for (std::size_t k = 0; k < g.size(); ++k) {
        bool any_nan = false, all_nan = true;
        for (int c = 0; c < stride; ++c) {
            const double x = v[k * static_cast<std::size_t>(stride) + static_cast<std::size_t>(c)];
            if (std::isnan(x)) any_nan = true;
            else all_nan = false;
            if (std::isinf(x)) throw ParseError("EKF1: non-finite value on an active cell");
        }
        if (any_nan && !all_nan) throw ParseError("EKF1: partially masked vector cell");
        m.set(k, !any_nan);
    }
    return m;
}

}  // namespace

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_field(std::ostream& os, const ScalarField& f) {
    write_header(os, "scalar", f.grid);
    write_rows(os, f.grid, f.values, f.mask);
}

void write_field(std::ostream& os, const AngleField& f) {
    write_header(os, "angle", f.grid);
    write_rows(os, f.grid, f.theta, f.mask);
}

void write_field(std::ostream& os, const VectorField2& f) {
    write_header(os, "vector2", f.grid);
    const Grid2& g = f.grid;
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            const auto k = g.index(i, j);
            if (i) os << ' ';
            if (f.mask[k]) os << format_double(f.vx[k]) << ' ' << format_double(f.vy[k]);
            else os << "nan nan";
        }
        os << '\n';
    }
}

AnyField read_field(std::istream& is) {
    const Header h = read_header(is);
    const Grid2& g = h.grid;
    if (h.kind == "scalar" || h.kind == "angle") {
        auto vals = read_rows(is, g, 1);
        Mask m = mask_from(g, vals, 1);
        if (h.kind == "scalar") {
            ScalarField f(g, m);
            f.values = std::move(vals);
            return f;
        }
        AngleField f(g, m);
        for (std::size_t k = 0; k < vals.size(); ++k) {
            if (m[k] && !(vals[k] > -kPi && vals[k] <= kPi)) {
                throw ParseError("EKF1: angle outside (-pi, pi]");
            }
        }
        f.theta = std::move(vals);
        return f;
    }
    if (h.kind == "vector2") {
        const auto vals = read_rows(is, g, 2);
        Mask m = mask_from(g, vals, 2);
        VectorField2 f(g, m);
        for (std::size_t k = 0; k < g.size(); ++k) {
            f.vx[k] = vals[2 * k];
            f.vy[k] = vals[2 * k + 1];
        }
        return f;
    }
    throw ParseError("EKF1: unknown field kind '" + h.kind + "'");
}

void save_field(const std::filesystem::path& path, const AnyField& f) {
    std::ofstream os(path);
    if (!os) throw ParseError("cannot open " + path.string() + " for writing");
    std::visit([&](const auto& field) { write_field(os, field); }, f);
}

AnyField load_field(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ParseError("cannot open " + path.string());
    return read_field(is);
}

void write_stack(std::ostream& os, const FieldStack& st) {
    write_header(os, "stack", st.grid);
    os << "ns " << st.blocks.size() << ' ' << format_double(st.s0) << ' ' << format_double(st.ds) << '\n';
    for (const auto& b : st.blocks) write_rows(os, st.grid, b, st.mask);
}

FieldStack read_stack(std::istream& is) {
    const Header h = read_header(is);
    if (h.kind != "stack") throw ParseError("EKF1: expected a stack, got '" + h.kind + "'");
    std::string line, tag, s0, ds;
    std::size_t ns = 0;
    if (!std::getline(is, line)) throw ParseError("EKF1: missing ns line");
    std::istringstream ls(line);
    if (!(ls >> tag >> ns >> s0 >> ds) || tag != "ns" || ns == 0) throw ParseError("EKF1: malformed ns line");
    FieldStack st;
    st.grid = h.grid;
    st.s0 = parse_number(s0);
    st.ds = parse_number(ds);
    for (std::size_t b = 0; b < ns; ++b) {
        auto vals = read_rows(is, h.grid, 1);
        Mask m = mask_from(h.grid, vals, 1);
        if (b == 0) st.mask = m;
        else if (!(m == st.mask)) throw ParseError("EKF1: stack blocks disagree on the mask");
        st.blocks.push_back(std::move(vals));
    }
    return st;
}

}  // namespace eklab
