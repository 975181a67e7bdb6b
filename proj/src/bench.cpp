#include "cardmv/bench.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "cardmv/errors.hpp"

namespace cardmv::bench {

namespace {

double now_seconds() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

double binom(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    k = std::min(k, n - k);
    double v = 1.0;
    for (int i = 1; i <= k; ++i) v = v * (n - k + i) / i;
    return v;
}

std::string fmt(double v, const char* spec) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

} // namespace

BenchReport run_sweep(const model::Instance& base, int card_lo, int card_hi,
                      const BenchConfig& cfg) {
    if (card_lo > card_hi) throw std::invalid_argument("empty card range");
    if (card_lo < 1 || card_hi > base.n)
        throw std::invalid_argument("card range must lie within [1, n]");

    BenchReport report;
    report.n = base.n;

    for (int card = card_lo; card <= card_hi; ++card) {
        BenchRow row;
        row.card = card;
        model::Instance inst = base;
        inst.card = card;

        const auto validation = model::validate_instance(inst);
        if (!validation.ok()) {
            row.error = validation.issues.front();
            report.rows.push_back(std::move(row));
            continue;
        }

        const double t0 = now_seconds();
        dca::DcaResult dres;
        try {
            dres = dca::run_dca(inst, cfg.solver);
        } catch (const std::exception& ex) {
            row.error = ex.what();
            report.rows.push_back(std::move(row));
            continue;
        }
        row.dca_seconds = now_seconds() - t0;
        row.dca_iterations = dres.iterations;
        if (dres.polished) {
            row.dca_ok = true;
            row.dca_objective = dres.polished->objective;
        } else {
            row.error = dres.message.empty() ? "no feasible solution" : dres.message;
        }

        if (cfg.exact != ExactMode::Off) {
            const double t1 = now_seconds();
            try {
                exact::ExactResult eres;
                if (binom(inst.n, card) <= cfg.enumerate_threshold) {
                    eres = exact::enumerate_supports(inst, cfg.solver.qp);
                } else {
                    eres = exact::solve_exact_bb(inst, cfg.limits, cfg.solver.qp);
                }
                row.exact_run = true;
                row.exact_status = to_string(eres.status);
                if (eres.best) {
                    row.exact_objective = eres.best->objective;
                    if (row.dca_ok) row.gap = row.dca_objective - eres.best->objective;
                }
            } catch (const std::exception& ex) {
                row.exact_status = std::string("error: ") + ex.what();
            }
            row.exact_seconds = now_seconds() - t1;
        }
        report.rows.push_back(std::move(row));
    }
    return report;
}

void write_text(const BenchReport& report, std::ostream& os) {
    os << "card  dca_objective  dca_cpu_s  iters  exact_objective  exact_cpu_s  "
          "exact_status     gap\n";
    char line[256];
    for (const auto& row : report.rows) {
        if (!row.error.empty() && !row.dca_ok) {
            std::snprintf(line, sizeof(line), "%4d  %-63s\n", row.card,
                          ("error: " + row.error).c_str());
            os << line;
            continue;
        }
        std::snprintf(line, sizeof(line), "%4d  %13.6e  %9.3f  %5d", row.card,
                      row.dca_objective, row.dca_seconds, row.dca_iterations);
        os << line;
        if (row.exact_run) {
            std::snprintf(line, sizeof(line), "  %15.6e  %11.3f  %-15s  %10.2e",
                          row.exact_objective, row.exact_seconds, row.exact_status.c_str(),
                          row.gap);
            os << line;
        } else {
            std::snprintf(line, sizeof(line), "  %15s  %11s  %-15s  %10s", "-", "-", "-", "-");
            os << line;
        }
        os << '\n';
    }
}

void write_dsv(const BenchReport& report, std::ostream& os) {
    os << "card\tdca_objective\tdca_cpu_s\tdca_iterations\texact_objective\t"
          "exact_cpu_s\texact_status\tgap\terror\n";
    for (const auto& row : report.rows) {
        os << row.card << '\t';
        os << (row.dca_ok ? fmt(row.dca_objective, "%.12e") : "") << '\t';
        os << fmt(row.dca_seconds, "%.3f") << '\t';
        os << row.dca_iterations << '\t';
        os << (row.exact_run ? fmt(row.exact_objective, "%.12e") : "") << '\t';
        os << (row.exact_run ? fmt(row.exact_seconds, "%.3f") : "") << '\t';
        os << row.exact_status << '\t';
        os << (row.exact_run && row.dca_ok ? fmt(row.gap, "%.6e") : "") << '\t';
        os << row.error << '\n';
    }
}

void write_dsv(const BenchReport& report, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw ParseError("cannot open '" + path + "' for writing");
    write_dsv(report, os);
}

} // namespace cardmv::bench
