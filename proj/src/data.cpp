#include "cardmv/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "cardmv/errors.hpp"

namespace cardmv::data {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',' || ch == ';' || ch == '\t' || ch == ' ' || ch == '\r') {
            if (!cur.empty()) out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

bool parse_number(const std::string& tok, double* out) {
    const char* begin = tok.c_str();
    char* end = nullptr;
    *out = std::strtod(begin, &end);
    return end != begin && *end == '\0';
}

} // namespace

PriceSeries load_prices(std::istream& is) {
    PriceSeries ps;
    std::string line;
    int lineno = 0;

    // header row of asset identifiers
    while (std::getline(is, line)) {
        ++lineno;
        auto fields = split_fields(line);
        if (fields.empty()) continue;
        ps.assets = std::move(fields);
        break;
    }
    if (ps.assets.empty()) throw ParseError("price file has no header row", lineno);
    const int n = static_cast<int>(ps.assets.size());

    std::vector<Eigen::VectorXd> rows;
    while (std::getline(is, line)) {
        ++lineno;
        const auto fields = split_fields(line);
        if (fields.empty()) continue;
        if (static_cast<int>(fields.size()) != n) {
            std::ostringstream msg;
            msg << "row " << lineno << " has " << fields.size() << " columns, expected " << n;
            throw ParseError(msg.str(), lineno);
        }
        Eigen::VectorXd row(n);
        for (int j = 0; j < n; ++j) {
            double v = 0.0;
            if (!parse_number(fields[static_cast<size_t>(j)], &v)) {
                std::ostringstream msg;
                msg << "row " << lineno << ", column " << (j + 1) << ": '"
                    << fields[static_cast<size_t>(j)] << "' is not a number";
                throw ParseError(msg.str(), lineno, j + 1);
            }
            if (!(v > 0.0) || !std::isfinite(v)) {
                std::ostringstream msg;
                msg << "row " << lineno << ", column " << (j + 1)
                    << ": prices must be positive, got " << fields[static_cast<size_t>(j)];
                throw ParseError(msg.str(), lineno, j + 1);
            }
            row[j] = v;
        }
        rows.push_back(std::move(row));
    }
    if (rows.size() < 3) {
        throw ParseError("T >= 3 price rows required for at least 2 return observations, got " +
                             std::to_string(rows.size()),
                         lineno);
    }
    ps.prices.resize(static_cast<Eigen::Index>(rows.size()), n);
    for (size_t t = 0; t < rows.size(); ++t) ps.prices.row(static_cast<Eigen::Index>(t)) = rows[t];
    return ps;
}

PriceSeries load_prices(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ParseError("cannot open '" + path + "'");
    return load_prices(is);
}

MomentEstimate estimate_moments(const PriceSeries& ps) {
    const Eigen::Index T = ps.periods();
    const Eigen::Index n = ps.num_assets();
    if (T < 3) throw std::invalid_argument("price series must have at least 3 periods");

    const Eigen::Index Tr = T - 1; // return observations
    Eigen::MatrixXd returns(Tr, n);
    for (Eigen::Index t = 0; t < Tr; ++t)
        returns.row(t) =
            (ps.prices.row(t + 1) - ps.prices.row(t)).cwiseQuotient(ps.prices.row(t));

    MomentEstimate m;
    m.T_used = static_cast<int>(Tr);
    m.r = returns.colwise().mean();
    const Eigen::MatrixXd centered = returns.rowwise() - m.r.transpose();
    m.Q = (centered.transpose() * centered) / static_cast<double>(Tr - 1);
    m.Q = model::symmetrized(m.Q);
    return m;
}

MomentEstimate load_orlib(std::istream& is) {
    std::vector<std::string> toks;
    {
        std::string tok;
        while (is >> tok) toks.push_back(tok);
    }
    size_t pos = 0;
    auto next = [&](const char* what) -> const std::string& {
        if (pos >= toks.size())
            throw ParseError(std::string("unexpected end of file, expected ") + what);
        return toks[pos++];
    };

    double nd = 0.0;
    if (!parse_number(next("asset count"), &nd) || nd < 1.0 || nd != std::floor(nd))
        throw ParseError("first token must be the positive asset count");
    const int n = static_cast<int>(nd);

    Eigen::VectorXd mean(n), stddev(n);
    for (int j = 0; j < n; ++j) {
        if (!parse_number(next("mean"), &mean[j]))
            throw ParseError("bad mean for asset " + std::to_string(j + 1));
        if (!parse_number(next("stddev"), &stddev[j]))
            throw ParseError("bad stddev for asset " + std::to_string(j + 1));
        if (stddev[j] < 0.0)
            throw ParseError("stddev must be nonnegative for asset " + std::to_string(j + 1));
    }

    const long expected = static_cast<long>(n) * (n + 1) / 2;
    const long remaining = static_cast<long>(toks.size() - pos);
    if (remaining != 3 * expected) {
        std::ostringstream msg;
        msg << "expected " << expected << " correlation entries (i j corr), found "
            << remaining / 3 << (remaining % 3 ? " and a partial entry" : "");
        throw ParseError(msg.str());
    }

    Eigen::MatrixXd corr = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd seen = Eigen::MatrixXd::Zero(n, n);
    for (long k = 0; k < expected; ++k) {
        double di = 0.0, dj = 0.0, c = 0.0;
        if (!parse_number(next("i"), &di) || !parse_number(next("j"), &dj) ||
            !parse_number(next("corr"), &c))
            throw ParseError("bad correlation entry " + std::to_string(k + 1));
        const int i = static_cast<int>(di), j = static_cast<int>(dj);
        if (di != std::floor(di) || dj != std::floor(dj) || i < 1 || j < 1 || i > n || j > n)
            throw ParseError("correlation indices out of range in entry " + std::to_string(k + 1));
        if (i > j)
            throw ParseError("correlation entry " + std::to_string(k + 1) +
                             " has i > j; only the upper triangle is accepted");
        if (c < -1.0 || c > 1.0)
            throw ParseError("correlation outside [-1, 1] in entry " + std::to_string(k + 1));
        if (seen(i - 1, j - 1) != 0.0)
            throw ParseError("duplicate correlation entry for (" + std::to_string(i) + ", " +
                             std::to_string(j) + ")");
        seen(i - 1, j - 1) = 1.0;
        corr(i - 1, j - 1) = c;
        corr(j - 1, i - 1) = c;
    }

    MomentEstimate m;
    m.r = mean;
    m.Q = stddev.asDiagonal() * corr * stddev.asDiagonal();
    m.Q = model::symmetrized(m.Q);
    m.T_used = 0;
    return m;
}

MomentEstimate load_orlib(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ParseError("cannot open '" + path + "'");
    return load_orlib(is);
}

double pick_return_target(const Eigen::VectorXd& r, const Eigen::VectorXd& c_b,
                          const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                          double fraction) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < r.size(); ++j) {
        if (a[j] > b[j]) continue; // asset can never be held
        const double net = r[j] - c_b[j];
        lo = std::min(lo, net);
        hi = std::max(hi, net);
    }
    if (!std::isfinite(lo)) throw std::invalid_argument("no asset is eligible for holding");
    return lo + fraction * (hi - lo);
}

model::Instance build_instance(const MomentEstimate& m, const InstanceConfig& cfg) {
    const int n = static_cast<int>(m.r.size());
    if (n < 1) throw std::invalid_argument("moment estimate is empty");

    model::Instance inst;
    inst.n = n;
    inst.r = m.r;
    inst.Q = model::symmetrized(m.Q);
    inst.card = cfg.card;

    auto vec_or = [n](const std::optional<Eigen::VectorXd>& v, double fill) {
        return v ? *v : Eigen::VectorXd::Constant(n, fill).eval();
    };
    inst.a = vec_or(cfg.a, 0.05);
    inst.b = vec_or(cfg.b, 1.0);
    inst.c_b = vec_or(cfg.c_b, 0.001);
    inst.c_s = vec_or(cfg.c_s, 0.001);
    inst.P = vec_or(cfg.P, 0.0);
    inst.x_bar = vec_or(cfg.x_bar, 1.0 / n);

    if (cfg.R) {
        inst.R = *cfg.R;
    } else {
        // The fractional rule ignores the benchmark; with an equal-weight
        // benchmark and broadly positive returns it can overshoot what any
        // portfolio earns net of the benchmark. Rule-derived targets are
        // therefore capped at the net return of a greedy card-sized
        // portfolio (everything bought, so costs are pessimistic); explicit
        // targets are never touched.
        const double rule =
            pick_return_target(inst.r, inst.c_b, inst.a, inst.b, cfg.r_fraction);
        std::vector<int> order(static_cast<size_t>(n));
        std::iota(order.begin(), order.end(), 0);
        const Eigen::VectorXd net = inst.r - inst.c_b;
        std::sort(order.begin(), order.end(),
                  [&net](int i, int j) { return net[i] > net[j]; });
        double budget = 1.0;
        double value = 0.0;
        for (int k = 0; k < cfg.card && k < n; ++k) budget -= inst.a[order[static_cast<size_t>(k)]];
        for (int k = 0; k < cfg.card && k < n; ++k) {
            const int j = order[static_cast<size_t>(k)];
            double w = inst.a[j];
            const double extra = std::clamp(budget, 0.0, inst.b[j] - inst.a[j]);
            w += extra;
            budget -= extra;
            value += w * net[j];
        }
        if (budget > 1e-12 || budget < -1e-12) {
            inst.R = rule; // greedy support cannot absorb the budget; let
                           // validation judge the assembled instance
        } else {
            inst.R = std::min(rule, value - inst.x_bar.dot(inst.r));
        }
    }

    const model::ValidationReport rep = model::validate_instance(inst);
    if (!rep.ok()) {
        std::ostringstream msg;
        msg << "assembled instance fails validation:";
        for (const auto& issue : rep.issues) msg << "\n  - " << issue;
        throw ValidationError(msg.str());
    }
    return inst;
}

} // namespace cardmv::data
