#include <doctest.h>

#include <Eigen/Dense>
#include <sstream>
#include <thread>
#include <vector>

#include "cardmv/dca.hpp"
#include "cardmv/exact.hpp"
#include "cardmv/gen.hpp"
#include "cardmv/model.hpp"

using namespace cardmv;

namespace {

model::Instance diag_instance(const Eigen::VectorXd& qdiag, int card,
                              double lower = 0.05) {
    const int n = static_cast<int>(qdiag.size());
    model::Instance inst;
    inst.n = n;
    inst.r = Eigen::VectorXd::Constant(n, 0.1);
    inst.Q = qdiag.asDiagonal();
    inst.R = 0.0;
    inst.card = card;
    inst.a = Eigen::VectorXd::Constant(n, lower);
    inst.b = Eigen::VectorXd::Ones(n);
    inst.c_b = Eigen::VectorXd::Zero(n);
    inst.c_s = Eigen::VectorXd::Zero(n);
    inst.P = Eigen::VectorXd::Zero(n);
    inst.x_bar = Eigen::VectorXd::Zero(n);
    return inst;
}

} // namespace

TEST_CASE("penalty is zero exactly on binary selections") {
    Eigen::Vector3d z(1.0, 0.0, 1.0);
    CHECK(dca::penalty_alpha(z) == doctest::Approx(0.0));
    CHECK(dca::penalty_alpha(Eigen::Vector2d(0.5, 0.5)) == doctest::Approx(0.5));
    CHECK(dca::penalty_alpha(Eigen::VectorXd::Constant(1, 0.25)) == doctest::Approx(0.1875));
    CHECK_THROWS_AS(dca::penalty_alpha(Eigen::Vector2d(1.5, 0.0)), std::invalid_argument);
}

TEST_CASE("penalized objective adds theta times the penalty") {
    auto inst = diag_instance(Eigen::Vector2d(1.0, 1.0), 1, 0.0);
    model::Point p;
    p.x = inst.x_bar;
    p.x_b = p.x_s = Eigen::Vector2d::Zero();

    p.z = Eigen::Vector2d(1.0, 0.0);
    CHECK(dca::penalized_objective(inst, 2.0, p) == doctest::Approx(0.0));

    p.z = Eigen::Vector2d(0.5, 0.5);
    CHECK(dca::penalized_objective(inst, 2.0, p) == doctest::Approx(1.0));

    p.x = Eigen::Vector2d(1.0, 0.0);
    p.z = Eigen::Vector2d(1.0, 0.0);
    CHECK(dca::penalized_objective(inst, 2.0, p) == doctest::Approx(1.0));
}

TEST_CASE("subgradient follows theta (2z - 1)") {
    CHECK(dca::subgradient_h(2.0, Eigen::Vector2d(1.0, 0.0)).isApprox(Eigen::Vector2d(2.0, -2.0)));
    CHECK(dca::subgradient_h(2.0, Eigen::Vector2d(0.5, 0.5)).cwiseAbs().maxCoeff() ==
          doctest::Approx(0.0));
    CHECK(dca::subgradient_h(0.0, Eigen::Vector2d(0.3, 0.9)).cwiseAbs().maxCoeff() ==
          doctest::Approx(0.0));
}

TEST_CASE("subproblem assembly has the documented shape") {
    const auto inst = diag_instance(Eigen::Vector2d(1.0, 4.0), 1);
    const auto p = dca::build_subproblem(inst, Eigen::Vector2d::Zero());
    CHECK(p.num_vars() == 8);
    CHECK(p.A_eq.rows() == 4);  // budget, cardinality, 2 rebalancing rows
    CHECK(p.A_in.rows() == 5);  // return floor, 2x2 holding links
    CHECK(p.lb.minCoeff() == 0.0);
    CHECK(p.ub.tail(2).maxCoeff() == 1.0);
}

TEST_CASE("zero subgradient reproduces the continuous relaxation") {
    // symmetric two-asset instance: the relaxation spreads evenly
    const auto inst = diag_instance(Eigen::Vector2d(1.0, 1.0), 1, 0.05);
    const auto p = dca::build_subproblem(inst, Eigen::Vector2d::Zero());
    const auto sol = qp::solve_qp(p);
    REQUIRE(sol.status == qp::QpStatus::Optimal);
    CHECK(sol.y[0] == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(sol.y[1] == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("uniform shifts of the selection cost leave the argmin unchanged") {
    const auto inst = diag_instance(Eigen::Vector3d(1.0, 2.0, 4.0), 2);
    const Eigen::Vector3d v(0.4, -0.2, 0.1);
    const auto sol1 = qp::solve_qp(dca::build_subproblem(inst, v));
    const auto sol2 = qp::solve_qp(dca::build_subproblem(
        inst, Eigen::VectorXd(v.array() + 0.7)));
    REQUIRE(sol1.status == qp::QpStatus::Optimal);
    REQUIRE(sol2.status == qp::QpStatus::Optimal);
    CHECK((sol1.y - sol2.y).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("initialization rounds the relaxed holdings") {
    SUBCASE("symmetric relaxation keeps both assets") {
        const auto inst = diag_instance(Eigen::Vector2d(1.0, 1.0), 1);
        const auto p0 = dca::initial_point(inst, {});
        REQUIRE(p0.has_value());
        CHECK(p0->z[0] == 1.0);
        CHECK(p0->z[1] == 1.0); // sum z != card is permitted here
    }
    SUBCASE("corner relaxation selects a single asset") {
        // relaxed optimum is exactly x = (1, 0): the unconstrained minimizer
        // of 2t^2 - 5t + 4 over the segment sits at t = 1.25, clipped to 1
        auto inst = diag_instance(Eigen::Vector2d(1.0, 4.0), 1);
        inst.Q(0, 1) = inst.Q(1, 0) = 1.5;
        // independent check of the relaxation optimum along x = (t, 1-t)
        double best_t = -1.0, best_val = 1e100;
        for (int k = 0; k <= 1000; ++k) {
            const double t = k / 1000.0;
            const Eigen::Vector2d x(t, 1.0 - t);
            const double val = x.dot(inst.Q * x);
            if (val < best_val) {
                best_val = val;
                best_t = t;
            }
        }
        CHECK(best_t == doctest::Approx(1.0));

        const auto p0 = dca::initial_point(inst, {});
        REQUIRE(p0.has_value());
        CHECK(p0->z[0] == 1.0);
        CHECK(p0->z[1] == 0.0);
    }
    SUBCASE("unreachable return target is reported at initialization") {
        auto inst = diag_instance(Eigen::Vector2d(1.0, 4.0), 1);
        inst.R = 1.0; // far above the achievable 0.1
        std::string why;
        const auto p0 = dca::initial_point(inst, {}, &why);
        CHECK_FALSE(p0.has_value());
        CHECK(why.find("infeasible") != std::string::npos);
    }
}

TEST_CASE("dca selects the low-risk asset on the two-asset benchmark") {
    const auto inst = diag_instance(Eigen::Vector2d(1.0, 4.0), 1);
    const auto result = dca::run_dca(inst);
    REQUIRE(result.polished.has_value());
    CHECK(result.polished->support == std::vector<int>{0});
    CHECK(result.polished->objective == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(result.polished->x[0] == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(result.termination == dca::Termination::StepTolerance);

    // exhaustive support enumeration agrees: {0} costs 1, {1} costs 4
    const auto oracle = exact::enumerate_supports(inst);
    REQUIRE(oracle.best.has_value());
    CHECK(oracle.best->objective == doctest::Approx(result.polished->objective));
}

TEST_CASE("penalized objective decreases along the trace") {
    const auto inst = diag_instance(Eigen::Vector4d(1.0, 2.0, 3.0, 4.0), 2);
    const auto result = dca::run_dca(inst);
    REQUIRE(result.polished.has_value());
    for (size_t k = 1; k < result.trace.size(); ++k) {
        if (result.trace[k].theta != result.trace[k - 1].theta) continue;
        CHECK(result.trace[k].penalized_objective <=
              result.trace[k - 1].penalized_objective + 1e-9);
    }
    // every iterate is relaxed-feasible at 10x the subproblem tolerance
    for (const auto& rec : result.trace) {
        const auto rep = model::check_feasibility(inst, rec.point, 1e-7, false);
        CHECK(rep.feasible);
    }
}

TEST_CASE("restarting from a stationary polished point terminates in one iteration") {
    // binding return floor with positive costs pins the trades, so the
    // subproblem optimum is unique and the polished point is stationary
    auto inst = diag_instance(Eigen::Vector2d(1.0, 4.0), 1);
    inst.c_b = inst.c_s = Eigen::Vector2d::Constant(0.01);
    inst.R = 0.09; // exactly the net return of holding asset 0 outright
    const auto first = dca::run_dca(inst);
    REQUIRE(first.polished.has_value());
    CHECK(first.polished->support == std::vector<int>{0});

    model::Point restart;
    restart.x = first.polished->x;
    restart.x_b = first.polished->x_b;
    restart.x_s = first.polished->x_s;
    restart.z = Eigen::VectorXd::Zero(inst.n);
    for (int j : first.polished->support) restart.z[j] = 1.0;

    const auto again = dca::run_dca(inst, {}, restart);
    CHECK(again.iterations == 1);
    CHECK(again.termination == dca::Termination::StepTolerance);
}

TEST_CASE("restarting from any polished point never worsens the objective") {
    // zero costs leave a flat face of equivalent trades, so the point is
    // not stationary in the step-norm sense; the weaker guarantee applies
    const auto inst = diag_instance(Eigen::Vector2d(1.0, 4.0), 1);
    const auto first = dca::run_dca(inst);
    REQUIRE(first.polished.has_value());
    const double f_before = model::objective(inst, first.polished->x);

    model::Point restart;
    restart.x = first.polished->x;
    restart.x_b = first.polished->x_b;
    restart.x_s = first.polished->x_s;
    restart.z = Eigen::VectorXd::Zero(inst.n);
    for (int j : first.polished->support) restart.z[j] = 1.0;

    const auto again = dca::run_dca(inst, {}, restart);
    CHECK(again.termination == dca::Termination::StepTolerance);
    REQUIRE(again.polished.has_value());
    CHECK(model::objective(inst, again.polished->x) <= f_before + 1e-9);
    CHECK(again.polished->support == first.polished->support);
}

TEST_CASE("polish ranks by z, then x, then index") {
    auto inst = diag_instance(Eigen::Vector3d(1.0, 1.0, 1.0), 2, 0.0);
    model::Point p;
    p.x = Eigen::Vector3d(0.5, 0.3, 0.2);
    p.x_b = p.x;
    p.x_s = Eigen::Vector3d::Zero();

    p.z = Eigen::Vector3d(0.9, 0.6, 0.1);
    auto sol = dca::repair_and_polish(inst, p, {});
    REQUIRE(sol.has_value());
    CHECK(sol->support == std::vector<int>{0, 1});

    // tie on z broken by larger x
    inst.card = 1;
    p.z = Eigen::Vector3d(0.5, 0.5, 0.0);
    p.x = Eigen::Vector3d(0.3, 0.7, 0.0);
    sol = dca::repair_and_polish(inst, p, {});
    REQUIRE(sol.has_value());
    CHECK(sol->support == std::vector<int>{1});
}

TEST_CASE("polish falls back to the next support window when needed") {
    // top-ranked asset alone cannot absorb the budget (b too small)
    auto inst = diag_instance(Eigen::Vector2d(1.0, 4.0), 1);
    inst.b = Eigen::Vector2d(0.3, 1.0);
    model::Point p;
    p.x = Eigen::Vector2d(0.3, 0.7);
    p.x_b = p.x;
    p.x_s = Eigen::Vector2d::Zero();
    p.z = Eigen::Vector2d(1.0, 0.9); // ranks asset 0 first
    const auto sol = dca::repair_and_polish(inst, p, {});
    REQUIRE(sol.has_value());
    CHECK(sol->support == std::vector<int>{1});
}

TEST_CASE("polished solutions are certified binary-feasible") {
    const auto inst = diag_instance(Eigen::Vector4d(1.0, 2.0, 3.0, 4.0), 2);
    const auto result = dca::run_dca(inst);
    REQUIRE(result.polished.has_value());
    const auto& sol = *result.polished;
    CHECK(static_cast<int>(sol.support.size()) == inst.card);
    for (int j = 0; j < inst.n; ++j) {
        const bool on = std::find(sol.support.begin(), sol.support.end(), j) !=
                        sol.support.end();
        if (on) {
            CHECK(sol.x[j] >= inst.a[j] - 1e-9);
            CHECK(sol.x[j] <= inst.b[j] + 1e-9);
        } else {
            CHECK(sol.x[j] == doctest::Approx(0.0).epsilon(1e-12));
        }
    }
    CHECK(sol.feasibility.feasible);
    CHECK(sol.feasibility.tol == doctest::Approx(1e-9));
}

TEST_CASE("selecting every asset degenerates to one convex solve") {
    const auto inst = diag_instance(Eigen::Vector3d(1.0, 2.0, 3.0), 3, 0.05);
    const auto result = dca::run_dca(inst);
    CHECK(result.iterations == 1);
    REQUIRE(result.polished.has_value());
    CHECK(result.polished->support == std::vector<int>{0, 1, 2});
}

TEST_CASE("penalty escalation recovers a binary selection from a tiny theta") {
    auto cfg = dca::SolverConfig{};
    cfg.theta = 1e-6; // far below any exactness threshold
    const auto inst = diag_instance(Eigen::Vector3d(1.0, 1.0, 1.0), 2, 0.0);
    const auto result = dca::run_dca(inst, cfg);
    REQUIRE(result.polished.has_value());
    CHECK(result.theta_used > cfg.theta);
    const Eigen::ArrayXd z = result.final_point.z.array();
    CHECK(z.min(1.0 - z).maxCoeff() <= cfg.binariness_tol);
    CHECK(dca::penalty_alpha(result.final_point.z) <= cfg.binariness_tol);
}

TEST_CASE("degenerate single-selection instances with a held book still solve") {
    // with card = 1 and unit upper bounds the linking rows are linearly
    // dependent on the budget rows, which starves the subproblem duals;
    // the iterate-acceptance policy must carry the run to a certified
    // polished solution regardless
    gen::GenConfig cfg;
    cfg.n = 7;
    cfg.card = 1;
    cfg.seed = 90004;
    cfg.r_fraction = 0.5;
    model::Instance inst = gen::random_instance(cfg);
    inst.P = Eigen::VectorXd::Constant(inst.n, 1.0 / inst.n);
    REQUIRE(model::validate_instance(inst).ok());

    const auto result = dca::run_dca(inst);
    REQUIRE(result.polished.has_value());
    CHECK(result.polished->feasibility.feasible);

    const auto oracle = exact::enumerate_supports(inst);
    REQUIRE(oracle.best.has_value());
    CHECK(result.polished->objective >= oracle.best->objective - 1e-9);
    CHECK(result.polished->objective - oracle.best->objective <= 1e-4);
}

TEST_CASE("concurrent solves of one instance agree bitwise") {
    const auto inst = diag_instance(Eigen::Vector4d(1.0, 2.0, 3.0, 4.0), 2);
    std::vector<dca::DcaResult> results(4);
    std::vector<std::thread> workers;
    for (auto& slot : results) {
        workers.emplace_back([&inst, &slot] { slot = dca::run_dca(inst); });
    }
    for (auto& w : workers) w.join();
    REQUIRE(results[0].polished.has_value());
    for (size_t i = 1; i < results.size(); ++i) {
        REQUIRE(results[i].polished.has_value());
        CHECK(results[i].polished->x == results[0].polished->x); // bitwise
        CHECK(results[i].polished->support == results[0].polished->support);
        CHECK(results[i].iterations == results[0].iterations);
    }
}

TEST_CASE("rebalancing an existing book sells the dropped assets") {
    auto inst = diag_instance(Eigen::Vector3d(1.0, 2.0, 4.0), 2, 0.05);
    inst.P = Eigen::Vector3d::Constant(1.0 / 3); // equal-weight current book
    inst.c_b = inst.c_s = Eigen::Vector3d::Constant(0.001);
    inst.r = Eigen::Vector3d(0.01, 0.01, 0.01);
    inst.R = -1.0; // return floor inactive, rebalancing driven by risk
    const auto result = dca::run_dca(inst);
    REQUIRE(result.polished.has_value());
    CHECK(result.polished->support == std::vector<int>{0, 1});
    // asset 2 must be sold out of the book entirely (net of any churn)
    const double net_sale = result.polished->x_s[2] - result.polished->x_b[2];
    CHECK(net_sale == doctest::Approx(1.0 / 3).epsilon(1e-6));
    CHECK(result.polished->x[2] == doctest::Approx(0.0));
    CHECK(result.polished->feasibility.feasible);
}

TEST_CASE("trace export writes one record per iteration") {
    const auto inst = diag_instance(Eigen::Vector2d(1.0, 4.0), 1);
    const auto result = dca::run_dca(inst);
    std::ostringstream os;
    dca::write_trace(result, os);
    std::istringstream is(os.str());
    std::string header;
    std::getline(is, header);
    CHECK(header == "k\tF\tobjective\talpha\tstep_norm\tsolve_seconds");
    int rows = 0;
    std::string line;
    while (std::getline(is, line)) {
        if (!line.empty()) ++rows;
    }
    CHECK(rows == static_cast<int>(result.trace.size()));
}
