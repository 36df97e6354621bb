#pragma once

#include <kdvist/potential.hpp>
#include <kdvist/solver.hpp>

#include <json.hpp>

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace kdvist::cli {

// Everything a run needs. Loaded from --config, then overridden by flags.
struct RunConfig {
    std::string command;
    nlohmann::json potential_spec = {{"kind", "zero"}};
    std::string base_dir = ".";
    std::vector<Real> xs, ts, ks, ss, eps;
    std::vector<Real> bs;
    Real x0 = 0, t0 = 1;  // convergence point
    SolveOptions solve;
    std::string out_dir = ".";
    bool csv = false;        // scatter: also write CSV tables
    bool dump_kernel = false;
    std::string suite = "acceptance";
    nlohmann::json echo;  // merged configuration as run

    Potential potential() const;
    void validate() const;
};

// Grid spec: a list, a number, or {"from", "to", "step"} / {"from", "to", "count"}.
std::vector<Real> parse_grid(const nlohmann::json& j, const std::string& what);

// Parses argv into a config. Throws ConfigError on bad input.
RunConfig parse_args(int argc, const char* const* argv);

// Full CLI: 0 on success, 1 numerical failure, 2 configuration error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// CSV row formatting shared with the tests: 17 significant digits.
std::string format_real(Real v);

}  // namespace kdvist::cli
