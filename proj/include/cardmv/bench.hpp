#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "cardmv/dca.hpp"
#include "cardmv/exact.hpp"
#include "cardmv/model.hpp"

namespace cardmv::bench {

/// One cardinality sweep row. `gap` is DCA objective minus exact objective
/// and is only meaningful when `exact_run` is true.
struct BenchRow {
    int card = 0;
    bool dca_ok = false;
    double dca_objective = 0.0;
    double dca_seconds = 0.0;
    int dca_iterations = 0;
    bool exact_run = false;
    double exact_objective = 0.0;
    double exact_seconds = 0.0;
    std::string exact_status;
    double gap = 0.0;
    std::string error; ///< per-row failure note; the sweep continues
};

struct BenchReport {
    std::vector<BenchRow> rows; ///< ascending card
    int n = 0;
};

enum class ExactMode {
    Off,
    Auto, ///< enumerate when C(n, card) <= 1e5, else branch and bound
};

struct BenchConfig {
    dca::SolverConfig solver;
    ExactMode exact = ExactMode::Auto;
    exact::BnbLimits limits; ///< default 1200 s time cap
    double enumerate_threshold = 1e5;
};

/// Runs DCA (and optionally the exact baseline) for every card in
/// [card_lo, card_hi] on instances derived from `base` by replacing the
/// cardinality. Rows are ordered by ascending card; per-row failures are
/// recorded in the row and the sweep continues. Deterministic apart from
/// the timing columns. Throws std::invalid_argument on an empty or
/// out-of-range card range.
BenchReport run_sweep(const model::Instance& base, int card_lo, int card_hi,
                      const BenchConfig& cfg = {});

/// Aligned human-readable table (timings to 3 decimals).
void write_text(const BenchReport& report, std::ostream& os);

/// Tab-separated values with a header row, for regression diffing.
void write_dsv(const BenchReport& report, std::ostream& os);
void write_dsv(const BenchReport& report, const std::string& path);

} // namespace cardmv::bench
