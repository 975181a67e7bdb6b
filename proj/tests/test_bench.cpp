#include <doctest.h>

#include <sstream>

#include "cardmv/bench.hpp"
#include "cardmv/gen.hpp"
#include "cardmv/instance_io.hpp"

using namespace cardmv;

TEST_CASE("generator is deterministic per seed") {
    gen::GenConfig cfg;
    cfg.n = 4;
    cfg.seed = 7;
    const auto a = gen::random_instance(cfg);
    const auto b = gen::random_instance(cfg);
    CHECK(model::instance_to_string(a) == model::instance_to_string(b));

    cfg.seed = 8;
    const auto c = gen::random_instance(cfg);
    CHECK(model::instance_to_string(a) != model::instance_to_string(c));
}

TEST_CASE("generated instances always validate") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        gen::GenConfig cfg;
        cfg.n = 1 + static_cast<int>(seed % 9);
        cfg.seed = seed;
        const auto inst = gen::random_instance(cfg);
        const auto rep = model::validate_instance(inst);
        CAPTURE(seed);
        CAPTURE(rep.issues.empty() ? "" : rep.issues.front());
        CHECK(rep.ok());
    }
}

TEST_CASE("a single-asset instance forces the full budget") {
    gen::GenConfig cfg;
    cfg.n = 1;
    cfg.seed = 3;
    const auto inst = gen::random_instance(cfg);
    CHECK(inst.card == 1);
    const auto result = dca::run_dca(inst);
    REQUIRE(result.polished.has_value());
    CHECK(result.polished->x[0] == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("sweep produces one row per cardinality with exact gaps") {
    gen::GenConfig gcfg;
    gcfg.n = 4;
    gcfg.seed = 42;
    const auto inst = gen::random_instance(gcfg);
    bench::BenchConfig bcfg;
    bcfg.exact = bench::ExactMode::Auto;
    const auto report = bench::run_sweep(inst, 1, 3, bcfg);
    REQUIRE(report.rows.size() == 3);
    for (size_t i = 0; i < report.rows.size(); ++i) {
        const auto& row = report.rows[i];
        CHECK(row.card == static_cast<int>(i) + 1);
        CHECK(row.dca_ok);
        CHECK(row.exact_run);
        CHECK(row.exact_status == "proved-optimal");
        CHECK(row.gap >= -1e-8); // the heuristic is an upper bound
    }
}

TEST_CASE("sweep rows are deterministic apart from timings") {
    gen::GenConfig gcfg;
    gcfg.n = 5;
    gcfg.seed = 9;
    const auto inst = gen::random_instance(gcfg);
    bench::BenchConfig bcfg;
    bcfg.exact = bench::ExactMode::Auto;
    const auto r1 = bench::run_sweep(inst, 1, 4, bcfg);
    const auto r2 = bench::run_sweep(inst, 1, 4, bcfg);
    REQUIRE(r1.rows.size() == r2.rows.size());
    for (size_t i = 0; i < r1.rows.size(); ++i) {
        CHECK(r1.rows[i].dca_objective == r2.rows[i].dca_objective); // bitwise
        CHECK(r1.rows[i].dca_iterations == r2.rows[i].dca_iterations);
        CHECK(r1.rows[i].exact_objective == r2.rows[i].exact_objective);
        CHECK(r1.rows[i].gap == r2.rows[i].gap);
    }
}

TEST_CASE("sweep rejects empty or out-of-range card ranges") {
    gen::GenConfig gcfg;
    gcfg.n = 3;
    gcfg.seed = 1;
    const auto inst = gen::random_instance(gcfg);
    CHECK_THROWS_AS(bench::run_sweep(inst, 2, 1, {}), std::invalid_argument);
    CHECK_THROWS_AS(bench::run_sweep(inst, 0, 2, {}), std::invalid_argument);
    CHECK_THROWS_AS(bench::run_sweep(inst, 1, 4, {}), std::invalid_argument);
}

TEST_CASE("per-row failures are recorded and the sweep continues") {
    gen::GenConfig gcfg;
    gcfg.n = 5;
    gcfg.seed = 2;
    gcfg.card = 3;
    gcfg.a = 0.25; // five lower bounds cannot share the unit budget
    const auto inst = gen::random_instance(gcfg);
    bench::BenchConfig bcfg;
    bcfg.exact = bench::ExactMode::Off;
    const auto report = bench::run_sweep(inst, 3, 5, bcfg);
    REQUIRE(report.rows.size() == 3);
    CHECK(report.rows[0].dca_ok); // card 3: lower bounds fit with slack
    CHECK_FALSE(report.rows[2].dca_ok); // card 5: bounds cannot share the budget
    CHECK_FALSE(report.rows[2].error.empty());
}

TEST_CASE("the exact column can come from branch and bound") {
    gen::GenConfig gcfg;
    gcfg.n = 6;
    gcfg.seed = 77;
    gcfg.card = 3;
    const auto inst = gen::random_instance(gcfg);
    bench::BenchConfig bcfg;
    bcfg.exact = bench::ExactMode::Auto;
    bcfg.enumerate_threshold = 0; // force the branch-and-bound branch
    const auto report = bench::run_sweep(inst, 3, 3, bcfg);
    REQUIRE(report.rows.size() == 1);
    CHECK(report.rows[0].exact_run);
    CHECK(report.rows[0].exact_status == "proved-optimal");
    CHECK(report.rows[0].gap >= -1e-8);
}

TEST_CASE("report writers emit a table per row") {
    gen::GenConfig gcfg;
    gcfg.n = 4;
    gcfg.seed = 5;
    const auto inst = gen::random_instance(gcfg);
    bench::BenchConfig bcfg;
    bcfg.exact = bench::ExactMode::Off;
    const auto report = bench::run_sweep(inst, 1, 3, bcfg);

    std::ostringstream text;
    bench::write_text(report, text);
    std::ostringstream dsv;
    bench::write_dsv(report, dsv);

    int text_lines = 0, dsv_lines = 0;
    for (char ch : text.str()) text_lines += (ch == '\n');
    for (char ch : dsv.str()) dsv_lines += (ch == '\n');
    CHECK(text_lines == 4); // header + 3 rows
    CHECK(dsv_lines == 4);
    CHECK(dsv.str().find("card\tdca_objective") == 0);
}
