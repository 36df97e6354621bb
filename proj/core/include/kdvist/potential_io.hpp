#pragma once

#include <kdvist/potential.hpp>
#include <kdvist/types.hpp>

#include <string>
#include <utility>
#include <vector>

namespace kdvist {

// Builds a potential from a JSON document with a "kind" discriminator.
// Relative sample-file paths resolve against base_dir.
Potential potential_from_json(const std::string& text, const std::string& base_dir = ".");
Potential load_potential(const std::string& path);

// Two whitespace- or comma-separated columns (x, q); '#' starts a comment.
// x must be strictly increasing.
std::pair<std::vector<Real>, std::vector<Real>> read_samples(const std::string& path);

}  // namespace kdvist
