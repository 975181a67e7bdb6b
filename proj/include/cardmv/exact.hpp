#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "cardmv/dca.hpp"
#include "cardmv/model.hpp"
#include "cardmv/qp.hpp"

namespace cardmv::exact {

/// Resource caps for the branch-and-bound search.
struct BnbLimits {
    long node_cap = 1000000;
    double time_cap_seconds = 1200.0;
    double gap_tol = 1e-9; ///< absolute optimality gap accepted as proof
};

enum class ExactStatus {
    ProvedOptimal,
    GapLimit,
    NodeLimit,
    TimeLimit,
    Infeasible,
};

const char* to_string(ExactStatus s);

struct ExactResult {
    std::optional<dca::Solution> best;
    double lower_bound = 0.0;
    double upper_bound = 0.0;
    ExactStatus status = ExactStatus::Infeasible;
    long nodes = 0;
};

/// Brute-force oracle: solves the restricted convex problem on every
/// card-subset and returns the best feasible solution with proved-optimal
/// status. Guarded to C(n, card) <= 1e6 subsets; beyond that it throws
/// std::invalid_argument.
ExactResult enumerate_supports(const model::Instance& inst,
                               const qp::QpConfig& qp_cfg = {});

/// Best-first branch and bound on the selection indicators. Each node
/// relaxes the unfixed z to [0,1] and solves the convex relaxation for a
/// lower bound; branching picks the most fractional z (ties to the lowest
/// index); incumbents come from repair_and_polish at the node point. The
/// cardinality equality prunes partial assignments that overshoot or can
/// no longer reach `card`. Deterministic node order. Pass `node_log` to
/// get one line per node (id, depth, bound, incumbent).
ExactResult solve_exact_bb(const model::Instance& inst,
                           const BnbLimits& limits = {},
                           const qp::QpConfig& qp_cfg = {},
                           std::ostream* node_log = nullptr);

} // namespace cardmv::exact
