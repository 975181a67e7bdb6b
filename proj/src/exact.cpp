#include "cardmv/exact.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace cardmv::exact {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kIntegralityTol = 1e-6;

double binom(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    k = std::min(k, n - k);
    double v = 1.0;
    for (int i = 1; i <= k; ++i) v = v * (n - k + i) / i;
    return v;
}

double now_seconds() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

struct Node {
    long id = 0;
    int depth = 0;
    double bound = -kInf;
    std::vector<signed char> fixing; // -1 free, 0 fixed to zero, 1 fixed to one
    Eigen::VectorXd warm;            // parent relaxation point
};

struct NodeOrder {
    bool operator()(const Node& a, const Node& b) const {
        if (a.bound != b.bound) return a.bound > b.bound; // min-heap on bound
        return a.id > b.id;                               // then FIFO
    }
};

int count_fixed(const std::vector<signed char>& fixing, signed char v) {
    int c = 0;
    for (signed char f : fixing) c += (f == v);
    return c;
}

} // namespace

const char* to_string(ExactStatus s) {
    switch (s) {
        case ExactStatus::ProvedOptimal: return "proved-optimal";
        case ExactStatus::GapLimit: return "gap-limit";
        case ExactStatus::NodeLimit: return "node-limit";
        case ExactStatus::TimeLimit: return "time-limit";
        case ExactStatus::Infeasible: return "infeasible";
    }
    return "unknown";
}

ExactResult enumerate_supports(const model::Instance& inst, const qp::QpConfig& qp_cfg) {
    const int n = inst.n;
    const int card = inst.card;
    if (card < 1 || card > n) throw std::invalid_argument("card out of range");
    if (binom(n, card) > 1e6) {
        std::ostringstream msg;
        msg << "C(" << n << ", " << card << ") = " << binom(n, card)
            << " exceeds the 1e6 enumeration guard";
        throw std::invalid_argument(msg.str());
    }

    ExactResult result;
    result.lower_bound = kInf;
    result.upper_bound = kInf;

    // lexicographic combinations, deterministic tie-break to the first best
    std::vector<int> support(static_cast<size_t>(card));
    for (int i = 0; i < card; ++i) support[static_cast<size_t>(i)] = i;
    while (true) {
        ++result.nodes;
        if (auto sol = dca::solve_support_qp(inst, support, qp_cfg)) {
            if (!result.best || sol->objective < result.best->objective) {
                result.best = std::move(sol);
            }
        }
        // advance
        int i = card - 1;
        while (i >= 0 && support[static_cast<size_t>(i)] == n - card + i) --i;
        if (i < 0) break;
        ++support[static_cast<size_t>(i)];
        for (int j = i + 1; j < card; ++j)
            support[static_cast<size_t>(j)] = support[static_cast<size_t>(j - 1)] + 1;
    }

    if (result.best) {
        result.status = ExactStatus::ProvedOptimal;
        result.lower_bound = result.upper_bound = result.best->objective;
    } else {
        result.status = ExactStatus::Infeasible;
    }
    return result;
}

ExactResult solve_exact_bb(const model::Instance& inst, const BnbLimits& limits,
                           const qp::QpConfig& qp_cfg, std::ostream* node_log) {
    if (limits.node_cap <= 0 || limits.time_cap_seconds <= 0.0)
        throw std::invalid_argument("branch-and-bound caps must be positive");
    const int n = inst.n;
    const double t_start = now_seconds();

    ExactResult result;
    result.lower_bound = -kInf;
    result.upper_bound = kInf;

    const auto relaxation_template = dca::build_subproblem(inst, Eigen::VectorXd::Zero(n));

    auto solve_node = [&](const Node& node) {
        qp::QpProblem p = relaxation_template;
        for (int j = 0; j < n; ++j) {
            const int zj = 3 * n + j;
            if (node.fixing[static_cast<size_t>(j)] == 0) {
                p.lb[zj] = p.ub[zj] = 0.0;
                p.ub[j] = 0.0;
            } else if (node.fixing[static_cast<size_t>(j)] == 1) {
                p.lb[zj] = p.ub[zj] = 1.0;
            }
        }
        qp::QpConfig cfg = qp_cfg;
        if (node.warm.size() > 0) cfg.warm_start = node.warm;
        return qp::solve_qp(p, cfg);
    };

    long next_id = 0;
    std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
    {
        Node root;
        root.id = next_id++;
        root.fixing.assign(static_cast<size_t>(n), -1);
        open.push(std::move(root));
    }

    double incumbent = kInf;
    auto frontier_bound = [&]() { return open.empty() ? incumbent : open.top().bound; };

    while (!open.empty()) {
        if (result.nodes >= limits.node_cap) {
            result.status = ExactStatus::NodeLimit;
            result.lower_bound = std::min(frontier_bound(), incumbent);
            result.upper_bound = incumbent;
            return result;
        }
        if (now_seconds() - t_start > limits.time_cap_seconds) {
            result.status = ExactStatus::TimeLimit;
            result.lower_bound = std::min(frontier_bound(), incumbent);
            result.upper_bound = incumbent;
            return result;
        }

        Node node = open.top();
        open.pop();
        if (node.bound >= incumbent - limits.gap_tol && result.best) continue;

        ++result.nodes;
        const qp::QpSolution rel = solve_node(node);

        // children never undercut the parent: relaxations only tighten. A
        // relaxation that hit the iteration limit yields no usable bound, so
        // the parent bound is kept (sound, merely weaker).
        const double bound = rel.status == qp::QpStatus::Optimal
                                 ? std::max(rel.objective, node.bound)
                                 : (rel.status == qp::QpStatus::Infeasible ? kInf : node.bound);
        if (node_log) {
            (*node_log) << node.id << '\t' << node.depth << '\t' << bound << '\t'
                        << (result.best ? incumbent : kInf) << '\n';
        }
        if (rel.status == qp::QpStatus::Infeasible) continue; // subtree empty

        result.lower_bound = std::max(result.lower_bound, std::min(frontier_bound(), bound));

        const model::Point pt{rel.y.segment(0, n), rel.y.segment(n, n),
                              rel.y.segment(2 * n, n), rel.y.segment(3 * n, n)};

        // primal side: polish the relaxation point into a feasible support
        if (auto polished = dca::repair_and_polish(inst, pt, qp_cfg)) {
            if (!result.best || polished->objective < incumbent) {
                incumbent = polished->objective;
                result.best = std::move(polished);
            }
        }
        if (bound >= incumbent - limits.gap_tol) continue;

        // branching variable: most fractional z, ties to the lowest index
        int branch_j = -1;
        double best_frac = kIntegralityTol;
        for (int j = 0; j < n; ++j) {
            if (node.fixing[static_cast<size_t>(j)] != -1) continue;
            const double frac = std::min(pt.z[j], 1.0 - pt.z[j]);
            if (frac > best_frac) {
                best_frac = frac;
                branch_j = j;
            }
        }
        if (branch_j < 0) {
            // An integral certified relaxation is a leaf: its value equals the
            // bound and the polish above has already recorded it.
            if (rel.status == qp::QpStatus::Optimal) continue;
            // Uncertified relaxation: branch on the first free variable so the
            // subtree is still searched exactly.
            for (int j = 0; j < n && branch_j < 0; ++j)
                if (node.fixing[static_cast<size_t>(j)] == -1) branch_j = j;
            if (branch_j < 0) continue; // fully fixed single point, handled by polish
        }

        const int ones = count_fixed(node.fixing, 1);
        const int zeros = count_fixed(node.fixing, 0);
        for (const signed char value : {static_cast<signed char>(1), static_cast<signed char>(0)}) {
            // cardinality reachability of the child
            const int child_ones = ones + (value == 1);
            const int child_zeros = zeros + (value == 0);
            if (child_ones > inst.card) continue;
            if (n - child_zeros < inst.card) continue;
            Node child;
            child.id = next_id++;
            child.depth = node.depth + 1;
            child.bound = bound;
            child.fixing = node.fixing;
            child.fixing[static_cast<size_t>(branch_j)] = value;
            // complete forced assignments
            if (child_ones == inst.card) {
                for (auto& f : child.fixing)
                    if (f == -1) f = 0;
            } else if (n - child_zeros == inst.card) {
                for (auto& f : child.fixing)
                    if (f == -1) f = 1;
            }
            child.warm = rel.y;
            open.push(std::move(child));
        }
    }

    if (result.best) {
        result.status = ExactStatus::ProvedOptimal;
        result.lower_bound = result.upper_bound = incumbent;
    } else {
        result.status = ExactStatus::Infeasible;
        result.lower_bound = result.upper_bound = kInf;
    }
    return result;
}

} // namespace cardmv::exact
