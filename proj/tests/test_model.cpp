#include <doctest.h>

#include <Eigen/Dense>
#include <random>
#include <sstream>

#include "cardmv/errors.hpp"
#include "cardmv/instance_io.hpp"
#include "cardmv/model.hpp"

using namespace cardmv;

namespace {

model::Instance two_asset_instance() {
    model::Instance inst;
    inst.n = 2;
    inst.r = Eigen::Vector2d(0.1, 0.1);
    inst.Q = Eigen::Matrix2d::Identity();
    inst.R = 0.0;
    inst.card = 1;
    inst.a = Eigen::Vector2d(0.0, 0.0);
    inst.b = Eigen::Vector2d(1.0, 1.0);
    inst.c_b = Eigen::Vector2d::Zero();
    inst.c_s = Eigen::Vector2d::Zero();
    inst.P = Eigen::Vector2d::Zero();
    inst.x_bar = Eigen::Vector2d::Zero();
    return inst;
}

bool mentions(const model::ValidationReport& rep, const std::string& needle) {
    for (const auto& issue : rep.issues) {
        if (issue.find(needle) != std::string::npos) return true;
    }
    return false;
}

} // namespace

TEST_CASE("validation accepts a plain identity-covariance instance") {
    const auto rep = model::validate_instance(two_asset_instance());
    CAPTURE(rep.issues.empty() ? "" : rep.issues.front());
    CHECK(rep.ok());
}

TEST_CASE("validation flags card > n") {
    auto inst = two_asset_instance();
    inst.card = 3;
    const auto rep = model::validate_instance(inst);
    CHECK_FALSE(rep.ok());
    CHECK(mentions(rep, "card > n"));
}

TEST_CASE("validation flags lower bounds that cannot fit the budget") {
    auto inst = two_asset_instance();
    inst.a = Eigen::Vector2d(0.6, 0.6);
    inst.card = 2;
    const auto rep = model::validate_instance(inst);
    CHECK_FALSE(rep.ok());
    CHECK(mentions(rep, "exceeds budget 1"));
}

TEST_CASE("validation flags asymmetric and indefinite covariance") {
    auto inst = two_asset_instance();
    inst.Q(0, 1) = 0.5; // Q(1,0) stays 0
    CHECK(mentions(model::validate_instance(inst), "asymmetric"));

    inst = two_asset_instance();
    inst.Q << 1.0, 2.0, 2.0, 1.0; // eigenvalues 3, -1
    CHECK(mentions(model::validate_instance(inst), "positive semidefinite"));
}

TEST_CASE("validation flags an unreachable return target") {
    auto inst = two_asset_instance();
    inst.R = 2.0 * inst.r.maxCoeff();
    CHECK(mentions(model::validate_instance(inst), "return constraint unsatisfiable"));
}

TEST_CASE("objective evaluates the tracking risk") {
    auto inst = two_asset_instance();
    CHECK(model::objective(inst, inst.x_bar) == doctest::Approx(0.0));
    CHECK(model::objective(inst, Eigen::Vector2d(0.5, 0.5)) == doctest::Approx(0.5));

    inst.Q << 2.0, 1.0, 1.0, 2.0;
    CHECK(model::objective(inst, Eigen::Vector2d(1.0, 0.0)) == doctest::Approx(2.0));

    CHECK_THROWS_AS(model::objective(inst, Eigen::Vector3d::Zero()), std::invalid_argument);
}

TEST_CASE("objective is permutation invariant and nonnegative on PSD instances") {
    std::mt19937_64 rng(20240811);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 5);
        Eigen::MatrixXd F(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) F(i, j) = unif(rng);
        model::Instance inst;
        inst.n = n;
        inst.Q = model::symmetrized(F * F.transpose());
        inst.r = Eigen::VectorXd::Zero(n);
        inst.R = -1.0;
        inst.card = 1;
        inst.a = Eigen::VectorXd::Zero(n);
        inst.b = Eigen::VectorXd::Ones(n);
        inst.c_b = inst.c_s = Eigen::VectorXd::Zero(n);
        inst.P = Eigen::VectorXd::Zero(n);
        inst.x_bar = Eigen::VectorXd::Constant(n, 1.0 / n);

        Eigen::VectorXd x(n);
        for (int j = 0; j < n; ++j) x[j] = unif(rng) + 1.0;
        CHECK(model::objective(inst, x) >= -1e-10);

        // simultaneous permutation of all fields and of x
        std::vector<int> perm(static_cast<size_t>(n));
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        model::Instance pinst = inst;
        Eigen::VectorXd px(n);
        for (int j = 0; j < n; ++j) {
            const int pj = perm[static_cast<size_t>(j)];
            px[j] = x[pj];
            pinst.x_bar[j] = inst.x_bar[pj];
            for (int i = 0; i < n; ++i)
                pinst.Q(j, i) = inst.Q(pj, perm[static_cast<size_t>(i)]);
        }
        CHECK(model::objective(pinst, px) ==
              doctest::Approx(model::objective(inst, x)).epsilon(1e-12));
    }
}

TEST_CASE("feasibility report matches the constraint definitions") {
    const auto inst = two_asset_instance();

    model::Point p;
    p.x = Eigen::Vector2d(1.0, 0.0);
    p.x_b = Eigen::Vector2d(1.0, 0.0);
    p.x_s = Eigen::Vector2d::Zero();
    p.z = Eigen::Vector2d(1.0, 0.0);

    SUBCASE("a constructed feasible point has zero violations") {
        const auto rep = model::check_feasibility(inst, p, 0.0, true);
        CHECK(rep.feasible);
        CHECK(rep.max_violation == doctest::Approx(0.0));
    }

    SUBCASE("fractional z is rejected only in binary mode") {
        p.x = Eigen::Vector2d(0.5, 0.5);
        p.x_b = p.x;
        p.z = Eigen::Vector2d(0.5, 0.5);
        const auto relaxed = model::check_feasibility(inst, p, 1e-9, false);
        CHECK(relaxed.feasible);
        const auto binary = model::check_feasibility(inst, p, 1e-9, true);
        CHECK_FALSE(binary.feasible);
        CHECK(binary.binariness_violation == doctest::Approx(0.5));
    }

    SUBCASE("budget violation is the distance of sum x from one") {
        p.x = Eigen::Vector2d(0.6, 0.6);
        p.x_b = p.x;
        p.z = Eigen::Vector2d(1.0, 1.0); // avoid link violations
        const auto rep = model::check_feasibility(inst, p, 1e-9, false);
        CHECK(rep.budget_violation == doctest::Approx(0.2));
        CHECK_FALSE(rep.feasible);
    }
}

TEST_CASE("instance serialization round-trips bit-exactly") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 1 + static_cast<int>(rng() % 7);
        model::Instance inst;
        inst.n = n;
        inst.card = 1 + static_cast<int>(rng() % n);
        inst.R = unif(rng) * 1e-3;
        auto rand_vec = [&] {
            Eigen::VectorXd v(n);
            for (int j = 0; j < n; ++j) v[j] = unif(rng);
            return v;
        };
        inst.r = rand_vec();
        inst.a = rand_vec();
        inst.b = rand_vec();
        inst.c_b = rand_vec();
        inst.c_s = rand_vec();
        inst.P = rand_vec();
        inst.x_bar = rand_vec();
        Eigen::MatrixXd F(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) F(i, j) = unif(rng) - 0.5;
        inst.Q = model::symmetrized(F * F.transpose());

        const std::string text = model::instance_to_string(inst);
        std::istringstream is(text);
        const model::Instance back = model::load_instance(is);

        REQUIRE(back.n == inst.n);
        CHECK(back.card == inst.card);
        CHECK(back.R == inst.R); // bitwise
        CHECK(back.r == inst.r);
        CHECK(back.a == inst.a);
        CHECK(back.b == inst.b);
        CHECK(back.c_b == inst.c_b);
        CHECK(back.c_s == inst.c_s);
        CHECK(back.P == inst.P);
        CHECK(back.x_bar == inst.x_bar);
        CHECK(back.Q == inst.Q);

        // and the text itself is reproduced exactly
        CHECK(model::instance_to_string(back) == text);
    }
}

TEST_CASE("instance parser reports malformed documents") {
    SUBCASE("missing header") {
        std::istringstream is("n 2\n");
        CHECK_THROWS_AS(model::load_instance(is), ParseError);
    }
    SUBCASE("wrong vector length") {
        std::istringstream is("cardmv instance 1\nn 2\nr 0.1\n");
        CHECK_THROWS_AS(model::load_instance(is), ParseError);
    }
    SUBCASE("missing field") {
        auto inst = two_asset_instance();
        std::string text = model::instance_to_string(inst);
        const auto pos = text.find("\nR ");
        text.erase(pos, text.find('\n', pos + 1) - pos);
        std::istringstream is(text);
        CHECK_THROWS_AS(model::load_instance(is), ParseError);
    }
    SUBCASE("missing Q row") {
        auto inst = two_asset_instance();
        std::string text = model::instance_to_string(inst);
        text.erase(text.rfind("Q "));
        std::istringstream is(text);
        CHECK_THROWS_AS(model::load_instance(is), ParseError);
    }
}
