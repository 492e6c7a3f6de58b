#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace spinlab {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
    double budget_seconds = 0.0;
};

// Runs the numbered acceptance criteria (all, or the listed subset).  Every
// tolerance is pinned in code; each criterion also enforces its runtime
// budget.  Results are deterministic for a fixed seed.
std::vector<CriterionResult> run_acceptance(const std::vector<int>& ids = {},
                                            std::uint64_t seed = 20260810);

// one line per criterion: "PASS criterion 3: mean_identity (12.3s) detail"
std::string format_result(const CriterionResult& r);

} // namespace spinlab
