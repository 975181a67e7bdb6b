#include "cardmv/instance_io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "cardmv/errors.hpp"

namespace cardmv::model {

namespace {

constexpr const char* kMagic = "cardmv instance 1";

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_vector(std::ostream& os, const char* key, const Eigen::VectorXd& v) {
    os << key;
    for (Eigen::Index j = 0; j < v.size(); ++j) os << ' ' << fmt17(v[j]);
    os << '\n';
}

double parse_double(const std::string& tok, int line, int col) {
    const char* begin = tok.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0') {
        throw ParseError("expected a number, got '" + tok + "'", line, col);
    }
    return v;
}

long parse_int(const std::string& tok, int line, int col) {
    const char* begin = tok.c_str();
    char* end = nullptr;
    const long v = std::strtol(begin, &end, 10);
    if (end == begin || *end != '\0') {
        throw ParseError("expected an integer, got '" + tok + "'", line, col);
    }
    return v;
}

std::vector<std::string> tokens_of(const std::string& line) {
    std::istringstream is(line);
    std::vector<std::string> toks;
    std::string t;
    while (is >> t) toks.push_back(t);
    return toks;
}

} // namespace

void save_instance(const Instance& inst, std::ostream& os) {
    os << kMagic << '\n';
    os << "n " << inst.n << '\n';
    os << "card " << inst.card << '\n';
    os << "R " << fmt17(inst.R) << '\n';
    write_vector(os, "r", inst.r);
    write_vector(os, "a", inst.a);
    write_vector(os, "b", inst.b);
    write_vector(os, "c_b", inst.c_b);
    write_vector(os, "c_s", inst.c_s);
    write_vector(os, "P", inst.P);
    write_vector(os, "x_bar", inst.x_bar);
    for (int i = 0; i < inst.n; ++i) {
        os << "Q";
        for (int j = 0; j < inst.n; ++j) os << ' ' << fmt17(inst.Q(i, j));
        os << '\n';
    }
}

void save_instance(const Instance& inst, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw ParseError("cannot open '" + path + "' for writing");
    save_instance(inst, os);
    if (!os) throw ParseError("write to '" + path + "' failed");
}

std::string instance_to_string(const Instance& inst) {
    std::ostringstream os;
    save_instance(inst, os);
    return os.str();
}

bool looks_like_instance_file(const std::string& first_line) {
    return first_line.rfind("cardmv instance", 0) == 0;
}

Instance load_instance(std::istream& is) {
    std::string line;
    int lineno = 0;
    if (!std::getline(is, line)) throw ParseError("empty instance file", 1);
    ++lineno;
    if (!looks_like_instance_file(line)) {
        throw ParseError("missing instance header '" + std::string(kMagic) + "'", lineno);
    }

    Instance inst;
    bool have_n = false;
    std::map<std::string, int> seen;
    int q_rows = 0;

    auto read_vector = [&](const std::vector<std::string>& toks, int ln) {
        if (!have_n) throw ParseError("field '" + toks[0] + "' before n", ln);
        if (static_cast<int>(toks.size()) != inst.n + 1) {
            throw ParseError("field '" + toks[0] + "' has " +
                                 std::to_string(toks.size() - 1) + " values, expected " +
                                 std::to_string(inst.n),
                             ln);
        }
        Eigen::VectorXd v(inst.n);
        for (int j = 0; j < inst.n; ++j) v[j] = parse_double(toks[j + 1], ln, j + 2);
        return v;
    };

    while (std::getline(is, line)) {
        ++lineno;
        const auto toks = tokens_of(line);
        if (toks.empty()) continue;
        const std::string& key = toks[0];
        if (key != "Q") ++seen[key];

        if (key == "n") {
            if (toks.size() != 2) throw ParseError("n takes one value", lineno);
            const long n = parse_int(toks[1], lineno, 2);
            if (n < 1) throw ParseError("n must be positive", lineno);
            inst.n = static_cast<int>(n);
            inst.Q.setZero(inst.n, inst.n);
            have_n = true;
        } else if (key == "card") {
            if (toks.size() != 2) throw ParseError("card takes one value", lineno);
            inst.card = static_cast<int>(parse_int(toks[1], lineno, 2));
        } else if (key == "R") {
            if (toks.size() != 2) throw ParseError("R takes one value", lineno);
            inst.R = parse_double(toks[1], lineno, 2);
        } else if (key == "r") {
            inst.r = read_vector(toks, lineno);
        } else if (key == "a") {
            inst.a = read_vector(toks, lineno);
        } else if (key == "b") {
            inst.b = read_vector(toks, lineno);
        } else if (key == "c_b") {
            inst.c_b = read_vector(toks, lineno);
        } else if (key == "c_s") {
            inst.c_s = read_vector(toks, lineno);
        } else if (key == "P") {
            inst.P = read_vector(toks, lineno);
        } else if (key == "x_bar") {
            inst.x_bar = read_vector(toks, lineno);
        } else if (key == "Q") {
            if (!have_n) throw ParseError("Q before n", lineno);
            if (q_rows >= inst.n) throw ParseError("too many Q rows", lineno);
            const auto row = read_vector(toks, lineno);
            inst.Q.row(q_rows++) = row.transpose();
        } else {
            throw ParseError("unknown field '" + key + "'", lineno);
        }
    }

    if (!have_n) throw ParseError("missing field n", lineno);
    const char* required[] = {"card", "R", "r", "a", "b", "c_b", "c_s", "P", "x_bar"};
    for (const char* k : required) {
        if (seen[k] == 0) throw ParseError(std::string("missing field ") + k, lineno);
        if (seen[k] > 1) throw ParseError(std::string("duplicate field ") + k, lineno);
    }
    if (q_rows != inst.n) {
        throw ParseError("expected " + std::to_string(inst.n) + " Q rows, got " +
                             std::to_string(q_rows),
                         lineno);
    }
    return inst;
}

Instance load_instance(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ParseError("cannot open '" + path + "'");
    return load_instance(is);
}

} // namespace cardmv::model
