#include <kdvist/potential_io.hpp>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace kdvist {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

Real num(const json& j, const char* key) {
    if (!j.contains(key)) throw ConfigError(std::string("potential: missing field '") + key + "'");
    if (!j[key].is_number()) throw ConfigError(std::string("potential: field '") + key + "' must be a number");
    return j[key].get<double>();
}

TailSpec tail(const json& j, const char* key, const char* exp_key) {
    TailSpec t;
    if (!j.contains(key)) return t;
    t.rule = tail_rule_from_string(j[key].get<std::string>());
    if (t.rule == TailRule::power) t.exponent = num(j, exp_key);
    return t;
}

Potential build(const json& j, const fs::path& base) {
    if (!j.is_object() || !j.contains("kind")) throw ConfigError("potential: expected an object with a 'kind' field");
    const std::string kind = j["kind"].get<std::string>();
    if (kind == "zero") return Potential::zero();
    if (kind == "soliton") return Potential::soliton(num(j, "kappa"), j.contains("x0") ? num(j, "x0") : 0);
    if (kind == "n_soliton") {
        if (!j.contains("solitons") || !j["solitons"].is_array())
            throw ConfigError("potential: n_soliton needs a 'solitons' array");
        std::vector<std::pair<Real, Real>> terms;
        for (const auto& s : j["solitons"]) terms.emplace_back(num(s, "kappa"), s.contains("x0") ? num(s, "x0") : 0);
        return Potential::n_soliton(std::move(terms));
    }
    if (kind == "pure_step") return Potential::pure_step(num(j, "h"));
    if (kind == "box") return Potential::box(num(j, "depth"), num(j, "left"), num(j, "right"));
    if (kind == "tabulated") {
        std::vector<Real> xs, qs;
        if (j.contains("file")) {
            fs::path p = j["file"].get<std::string>();
            if (p.is_relative()) p = base / p;
            std::tie(xs, qs) = read_samples(p.string());
        } else if (j.contains("samples")) {
            for (const auto& row : j["samples"]) {
                if (!row.is_array() || row.size() != 2) throw ConfigError("potential: samples must be [x, q] pairs");
                xs.push_back(row[0].get<double>());
                qs.push_back(row[1].get<double>());
            }
        } else {
            throw ConfigError("potential: tabulated needs 'file' or 'samples'");
        }
        return Potential::tabulated(std::move(xs), std::move(qs), tail(j, "left_tail", "left_exponent"),
                                    tail(j, "right_tail", "right_exponent"));
    }
    if (kind == "sum") {
        if (!j.contains("terms") || !j["terms"].is_array()) throw ConfigError("potential: sum needs a 'terms' array");
        std::vector<Potential> terms;
        for (const auto& t : j["terms"]) terms.push_back(build(t, base));
        return Potential::sum(std::move(terms));
    }
    if (kind == "truncated") {
        if (!j.contains("inner")) throw ConfigError("potential: truncated needs 'inner'");
        return build(j["inner"], base).truncate(num(j, "b"));
    }
    throw ConfigError("potential: unknown kind '" + kind + "'");
}

}  // namespace

Potential potential_from_json(const std::string& text, const std::string& base_dir) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("potential: invalid JSON: ") + e.what());
    }
    if (j.contains("potential")) j = j["potential"];
    try {
        return build(j, base_dir);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("potential: ") + e.what());
    }
}

Potential load_potential(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return potential_from_json(ss.str(), fs::path(path).parent_path().string());
}

std::pair<std::vector<Real>, std::vector<Real>> read_samples(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open sample file " + path);
    std::vector<Real> xs, qs;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        for (char& c : line)
            if (c == ',') c = ' ';
        std::istringstream ls(line);
        long double x, q;
        if (!(ls >> x)) continue;
        if (!(ls >> q)) throw ConfigError(path + ":" + std::to_string(lineno) + ": expected two columns");
        if (!xs.empty() && !(x > xs.back()))
            throw ConfigError(path + ":" + std::to_string(lineno) + ": x must be strictly increasing");
        xs.push_back(x);
        qs.push_back(q);
    }
    if (xs.size() < 2) throw ConfigError(path + ": need at least two samples");
    return {xs, qs};
}

}  // namespace kdvist
