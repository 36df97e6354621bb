#pragma once

#include <kdvist/solver.hpp>

#include <json.hpp>

#include <functional>
#include <string>
#include <vector>

namespace kdvist::acceptance {

// Worst-case operator diagnostics over every point a check evaluated.
struct Invariants {
    long points = 0;
    Real max_asymmetry = 0;
    Real min_det = std::numeric_limits<Real>::infinity();
    Real min_eig = std::numeric_limits<Real>::infinity();
    Real max_det_change = 0;
    bool margin_ok = true;

    void add(const PointResult& p);
    void merge(const Invariants& other);
    bool pass() const;
    nlohmann::json to_json() const;
};

struct CheckResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string summary;  // measured values against the thresholds
    double seconds = 0;
    nlohmann::json details;
};

using Logger = std::function<void(const std::string&)>;

// Names accepted by run_suite: each single check plus "acceptance" for all ten.
std::vector<std::string> suite_names();
std::vector<CheckResult> run_suite(const std::string& suite, const Logger& log = {});

nlohmann::json to_json(const std::vector<CheckResult>& results);

}  // namespace kdvist::acceptance
