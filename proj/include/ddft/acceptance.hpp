#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace ddft {

struct CriterionResult {
    std::string name;
    bool pass = false;
    std::string details;  // measured values against their thresholds
};

struct AcceptanceOptions {
    std::uint64_t seed = 20240101;
    bool inject_fault = false;  // test mode: corrupts one tolerance to force a FAIL
    std::ostream* progress = nullptr;
};

std::vector<std::string> acceptance_criteria_names();

/// Runs every acceptance criterion at its pinned tolerance and returns one
/// result per criterion, in order.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts = {});

}  // namespace ddft
