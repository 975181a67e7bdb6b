#include "cardmv/gen.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cardmv/data.hpp"

namespace cardmv::gen {

namespace {

// splitmix64: tiny, fast, and identical on every platform, unlike the
// std:: distributions whose output is implementation-defined.
struct SplitMix64 {
    std::uint64_t state;
    explicit SplitMix64(std::uint64_t seed) : state(seed) {}
    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    double uniform() { // in [0, 1)
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
};

} // namespace

model::Instance random_instance(const GenConfig& cfg) {
    if (cfg.n < 1) throw std::invalid_argument("n must be at least 1");
    if (cfg.r_hi < cfg.r_lo || cfg.vol_hi < cfg.vol_lo)
        throw std::invalid_argument("empty generator band");
    if (cfg.vol_lo < 0.0) throw std::invalid_argument("volatilities must be nonnegative");
    const int n = cfg.n;
    const int card = cfg.card > 0 ? cfg.card : std::min(5, n);
    if (card > n) throw std::invalid_argument("card exceeds n");

    SplitMix64 rng(cfg.seed);

    Eigen::VectorXd r(n), sigma(n);
    for (int j = 0; j < n; ++j) r[j] = rng.uniform(cfg.r_lo, cfg.r_hi);
    for (int j = 0; j < n; ++j) sigma[j] = rng.uniform(cfg.vol_lo, cfg.vol_hi);

    // factor-model correlation: C = normalize(L L' + diag(d)), then
    // Q = diag(sigma) C diag(sigma) = F F' + D, positive semidefinite.
    const int k = std::max(1, std::min(cfg.factors, n));
    Eigen::MatrixXd L(n, k);
    for (int j = 0; j < n; ++j)
        for (int f = 0; f < k; ++f) L(j, f) = rng.uniform(-1.0, 1.0);
    Eigen::VectorXd d(n);
    for (int j = 0; j < n; ++j) d[j] = rng.uniform(0.5, 2.0);

    Eigen::MatrixXd C = L * L.transpose();
    C += d.asDiagonal();
    const Eigen::VectorXd scale = C.diagonal().cwiseSqrt().cwiseInverse();
    C = scale.asDiagonal() * C * scale.asDiagonal();

    data::MomentEstimate m;
    m.r = r;
    m.Q = model::symmetrized(sigma.asDiagonal() * C * sigma.asDiagonal());
    m.T_used = 0;

    data::InstanceConfig icfg;
    icfg.card = card;
    icfg.a = Eigen::VectorXd::Constant(n, cfg.a);
    icfg.b = Eigen::VectorXd::Constant(n, cfg.b);
    icfg.c_b = Eigen::VectorXd::Constant(n, cfg.cost);
    icfg.c_s = Eigen::VectorXd::Constant(n, cfg.cost);
    icfg.P = Eigen::VectorXd::Zero(n);
    icfg.x_bar = Eigen::VectorXd::Constant(n, cfg.benchmark_equal_weight ? 1.0 / n : 0.0);

    icfg.r_fraction = cfg.r_fraction; // R comes from the data module's rule

    return data::build_instance(m, icfg);
}

} // namespace cardmv::gen
