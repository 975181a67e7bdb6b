// cardmv: cardinality-constrained mean-variance portfolios with linear
// transaction costs. Solves instances with a penalty-based DC iteration,
// benchmarks cardinality sweeps against an exact oracle, generates seeded
// random instances, and validates instance files.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <json.hpp>

#include "cardmv/bench.hpp"
#include "cardmv/data.hpp"
#include "cardmv/dca.hpp"
#include "cardmv/errors.hpp"
#include "cardmv/exact.hpp"
#include "cardmv/gen.hpp"
#include "cardmv/instance_io.hpp"
#include "cardmv/model.hpp"

namespace {

using namespace cardmv;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInput = 2;   // parse or validation failures
constexpr int kExitInfeasible = 3;
constexpr int kExitLimit = 4;

double now_seconds() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

std::string detect_format(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ParseError("cannot open '" + path + "'");
    std::string line;
    while (std::getline(is, line)) {
        std::istringstream ls(line);
        std::string tok;
        if (!(ls >> tok)) continue;
        if (model::looks_like_instance_file(line)) return "instance";
        std::string rest;
        char* end = nullptr;
        std::strtod(tok.c_str(), &end);
        const bool numeric = end != tok.c_str() && *end == '\0';
        if (!numeric) return "prices"; // identifier header row
        if (!(ls >> rest)) return "orlib"; // a lone leading count
        return "prices";
    }
    throw ParseError("'" + path + "' is empty");
}

struct InputOptions {
    std::string path;
    std::string format = "auto";
    std::optional<int> card;
    std::optional<double> R;
    double r_fraction = 0.5;
};

model::Instance load_input(const InputOptions& in) {
    std::string format = in.format;
    if (format == "auto") format = detect_format(in.path);

    if (format == "instance") {
        model::Instance inst = model::load_instance(in.path);
        if (in.card) inst.card = *in.card;
        if (in.R) inst.R = *in.R;
        const auto rep = model::validate_instance(inst);
        if (!rep.ok()) {
            std::ostringstream msg;
            msg << "instance fails validation:";
            for (const auto& issue : rep.issues) msg << "\n  - " << issue;
            throw ValidationError(msg.str());
        }
        return inst;
    }

    data::MomentEstimate moments;
    if (format == "orlib") {
        moments = data::load_orlib(in.path);
    } else if (format == "prices") {
        moments = data::estimate_moments(data::load_prices(in.path));
    } else {
        throw ParseError("unknown format '" + format + "'");
    }
    if (!in.card) {
        throw CLI::ValidationError("--card", "a dataset input needs --card");
    }
    data::InstanceConfig cfg;
    cfg.card = *in.card;
    cfg.R = in.R;
    cfg.r_fraction = in.r_fraction;
    return data::build_instance(moments, cfg);
}

void add_input_options(CLI::App* cmd, InputOptions& in, bool card_option = true) {
    cmd->add_option("input", in.path, "instance, statistics, or price file")->required();
    cmd->add_option("--format", in.format, "input format")
        ->check(CLI::IsMember({"auto", "instance", "orlib", "prices"}))
        ->capture_default_str();
    if (card_option) cmd->add_option("--card", in.card, "number of assets to select");
    cmd->add_option("--return-target,--R", in.R, "required net portfolio return");
    cmd->add_option("--return-fraction", in.r_fraction,
                    "placement of the automatic return target inside the net band")
        ->capture_default_str();
}

void add_solver_options(CLI::App* cmd, dca::SolverConfig& cfg) {
    cmd->add_option("--theta", cfg.theta, "penalty weight")->capture_default_str();
    cmd->add_option("--epsilon", cfg.epsilon, "step-norm stopping tolerance")
        ->capture_default_str();
    cmd->add_option("--max-iter", cfg.max_iter, "iteration cap per penalty phase")
        ->capture_default_str();
    cmd->add_option("--qp-tol", cfg.qp.tol, "subproblem residual tolerance")
        ->capture_default_str();
}

int cmd_solve(const InputOptions& in, const dca::SolverConfig& scfg, bool with_exact,
              bool as_json, const std::string& trace_path) {
    const model::Instance inst = load_input(in);

    const double t0 = now_seconds();
    const dca::DcaResult result = dca::run_dca(inst, scfg);
    const double seconds = now_seconds() - t0;

    if (!trace_path.empty()) dca::write_trace(result, trace_path);

    std::optional<exact::ExactResult> oracle;
    double exact_seconds = 0.0;
    if (with_exact) {
        const double t1 = now_seconds();
        double subsets = 1.0;
        for (int i = 1; i <= inst.card; ++i)
            subsets = subsets * (inst.n - inst.card + i) / i;
        if (subsets <= 1e5) {
            oracle = exact::enumerate_supports(inst, scfg.qp);
        } else {
            oracle = exact::solve_exact_bb(inst, {}, scfg.qp);
        }
        exact_seconds = now_seconds() - t1;
    }

    if (as_json) {
        nlohmann::json out;
        out["termination"] = dca::to_string(result.termination);
        out["iterations"] = result.iterations;
        out["seconds"] = seconds;
        out["theta_used"] = result.theta_used;
        if (result.polished) {
            out["objective"] = result.polished->objective;
            out["support"] = result.polished->support;
            out["x"] = std::vector<double>(result.polished->x.begin(),
                                           result.polished->x.end());
        }
        if (!result.message.empty()) out["message"] = result.message;
        if (oracle) {
            out["exact"]["status"] = exact::to_string(oracle->status);
            out["exact"]["seconds"] = exact_seconds;
            if (oracle->best) out["exact"]["objective"] = oracle->best->objective;
            if (oracle->best && result.polished)
                out["exact"]["gap"] = result.polished->objective - oracle->best->objective;
        }
        std::cout << out.dump(2) << '\n';
    } else {
        std::printf("termination: %s\n", dca::to_string(result.termination));
        if (!result.message.empty()) std::printf("note: %s\n", result.message.c_str());
        if (result.polished) {
            std::printf("objective: %.9e\n", result.polished->objective);
            std::printf("support (0-based):");
            for (int j : result.polished->support) std::printf(" %d", j);
            std::printf("\nweights:\n");
            for (int j : result.polished->support)
                std::printf("  asset %3d: %.6f\n", j, result.polished->x[j]);
        }
        std::printf("iterations: %d\n", result.iterations);
        std::printf("seconds: %.3f\n", seconds);
        std::printf("theta: %g  epsilon: %g\n", result.theta_used, scfg.epsilon);
        if (oracle) {
            std::printf("exact: %s", exact::to_string(oracle->status));
            if (oracle->best) std::printf("  objective %.9e", oracle->best->objective);
            if (oracle->best && result.polished)
                std::printf("  gap %.3e", result.polished->objective - oracle->best->objective);
            std::printf("  seconds %.3f\n", exact_seconds);
        }
    }

    if (result.termination == dca::Termination::SubproblemInfeasible || !result.polished)
        return kExitInfeasible;
    if (result.termination == dca::Termination::MaxIterations) return kExitLimit;
    if (oracle && (oracle->status == exact::ExactStatus::NodeLimit ||
                   oracle->status == exact::ExactStatus::TimeLimit))
        return kExitLimit;
    return kExitOk;
}

int parse_card_range(const std::string& text, int* lo, int* hi) {
    const auto pos = text.find("..");
    try {
        if (pos == std::string::npos) {
            *lo = *hi = std::stoi(text);
        } else {
            *lo = std::stoi(text.substr(0, pos));
            *hi = std::stoi(text.substr(pos + 2));
        }
    } catch (const std::exception&) {
        return -1;
    }
    return 0;
}

int cmd_bench(const InputOptions& in, const dca::SolverConfig& scfg,
              const std::string& cards, const std::string& exact_mode,
              double time_limit, const std::string& out_path) {
    int lo = 0, hi = 0;
    if (parse_card_range(cards, &lo, &hi) != 0) {
        std::fprintf(stderr, "error: bad card range '%s' (expected LO..HI)\n", cards.c_str());
        return kExitUsage;
    }

    InputOptions base = in;
    if (!base.card) base.card = lo;
    const model::Instance inst = load_input(base);

    bench::BenchConfig bcfg;
    bcfg.solver = scfg;
    bcfg.limits.time_cap_seconds = time_limit;
    bcfg.exact = exact_mode == "off" ? bench::ExactMode::Off : bench::ExactMode::Auto;

    const bench::BenchReport report = bench::run_sweep(inst, lo, hi, bcfg);
    bench::write_text(report, std::cout);
    if (!out_path.empty()) {
        bench::write_dsv(report, out_path);
        std::printf("wrote %s\n", out_path.c_str());
    }

    for (const auto& row : report.rows) {
        if (!row.dca_ok) return kExitInfeasible;
    }
    return kExitOk;
}

int cmd_gen(const std::string& out_path, const gen::GenConfig& gcfg) {
    const model::Instance inst = gen::random_instance(gcfg);
    model::save_instance(inst, out_path);
    std::printf("wrote %s (n=%d, card=%d, seed=%llu)\n", out_path.c_str(), inst.n, inst.card,
                static_cast<unsigned long long>(gcfg.seed));
    return kExitOk;
}

int cmd_validate(const InputOptions& in) {
    std::string format = in.format;
    if (format == "auto") format = detect_format(in.path);
    if (format != "instance") {
        // datasets validate through assembly
        load_input(in);
        std::printf("ok: dataset assembles into a valid instance\n");
        return kExitOk;
    }
    const model::Instance inst = model::load_instance(in.path);
    const auto rep = model::validate_instance(inst);
    if (rep.ok()) {
        std::printf("ok: instance with n=%d, card=%d\n", inst.n, inst.card);
        return kExitOk;
    }
    std::printf("invalid instance:\n");
    for (const auto& issue : rep.issues) std::printf("  - %s\n", issue.c_str());
    return kExitInput;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"cardinality-constrained mean-variance portfolio selection"};
    app.require_subcommand(1);

    // solve
    auto* solve = app.add_subcommand("solve", "solve one instance with the DC iteration");
    InputOptions solve_in;
    dca::SolverConfig solve_cfg;
    bool solve_exact = false;
    bool solve_json = false;
    std::string trace_path;
    add_input_options(solve, solve_in);
    add_solver_options(solve, solve_cfg);
    solve->add_flag("--exact", solve_exact, "also run the exact oracle and report the gap");
    solve->add_flag("--json", solve_json, "machine-readable output");
    solve->add_option("--trace", trace_path, "write the iteration trace to this file");

    // bench
    auto* bench_cmd = app.add_subcommand("bench", "sweep the cardinality and tabulate");
    InputOptions bench_in;
    dca::SolverConfig bench_cfg;
    std::string cards = "5..15";
    std::string exact_mode = "auto";
    std::string bench_out;
    double time_limit = 1200.0;
    add_input_options(bench_cmd, bench_in);
    add_solver_options(bench_cmd, bench_cfg);
    bench_cmd->add_option("--cards", cards, "cardinality range LO..HI")->capture_default_str();
    bench_cmd->add_option("--exact", exact_mode, "exact baseline: auto (on) or off")
        ->check(CLI::IsMember({"auto", "on", "off"}))
        ->capture_default_str();
    bench_cmd->add_option("--time-limit", time_limit, "exact solver time cap in seconds")
        ->capture_default_str();
    bench_cmd->add_option("--out", bench_out, "also write the report as tab-separated values");

    // gen
    auto* gen_cmd = app.add_subcommand("gen", "generate a seeded random instance");
    std::string gen_out;
    gen::GenConfig gcfg;
    bool zero_benchmark = false;
    gen_cmd->add_option("output", gen_out, "instance file to write")->required();
    gen_cmd->add_option("--n", gcfg.n, "asset count")->required();
    gen_cmd->add_option("--seed", gcfg.seed, "random seed")->capture_default_str();
    gen_cmd->add_option("--card", gcfg.card, "cardinality (default min(5, n))");
    gen_cmd->add_option("--factors", gcfg.factors, "factor count of the covariance model")
        ->capture_default_str();
    gen_cmd->add_option("--r-lo", gcfg.r_lo, "lower mean-return bound")->capture_default_str();
    gen_cmd->add_option("--r-hi", gcfg.r_hi, "upper mean-return bound")->capture_default_str();
    gen_cmd->add_option("--vol-lo", gcfg.vol_lo, "lower volatility bound")->capture_default_str();
    gen_cmd->add_option("--vol-hi", gcfg.vol_hi, "upper volatility bound")->capture_default_str();
    gen_cmd->add_option("--lower", gcfg.a, "holding lower bound a_j")->capture_default_str();
    gen_cmd->add_option("--upper", gcfg.b, "holding upper bound b_j")->capture_default_str();
    gen_cmd->add_option("--cost", gcfg.cost, "buy/sell cost rate")->capture_default_str();
    gen_cmd->add_option("--return-fraction", gcfg.r_fraction,
                        "placement of the return target inside the net band")
        ->capture_default_str();
    gen_cmd->add_flag("--zero-benchmark", zero_benchmark,
                      "use a zero benchmark instead of equal weights");

    // validate
    auto* validate = app.add_subcommand("validate", "check an input file");
    InputOptions validate_in;
    add_input_options(validate, validate_in);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (solve->parsed())
            return cmd_solve(solve_in, solve_cfg, solve_exact, solve_json, trace_path);
        if (bench_cmd->parsed())
            return cmd_bench(bench_in, bench_cfg, cards, exact_mode, time_limit, bench_out);
        if (gen_cmd->parsed()) {
            gcfg.benchmark_equal_weight = !zero_benchmark;
            return cmd_gen(gen_out, gcfg);
        }
        if (validate->parsed()) return cmd_validate(validate_in);
    } catch (const CLI::ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const ParseError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitInput;
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitInput;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitInput;
    }
    return kExitUsage;
}
