#include <sstream>

#include <json.hpp>

#include "daeops/integrate.hpp"
#include "daeops/util.hpp"

namespace daeops::integrate {

using util::format_f64;
using util::require;

std::string to_csv(const Trajectory& tr) {
    std::ostringstream out;
    const std::size_t nx = tr.x.empty() ? 0 : tr.x[0].size();
    const std::size_t nz = tr.z.empty() ? 0 : tr.z[0].size();
    out << "t";
    for (std::size_t k = 0; k < nx; ++k) out << ",x" << k;
    for (std::size_t k = 0; k < nz; ++k) out << ",z" << k;
    out << "\n";
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
        out << format_f64(tr.times[i]);
        for (std::size_t k = 0; k < nx; ++k) out << "," << format_f64(tr.x[i][k]);
        for (std::size_t k = 0; k < nz; ++k) out << "," << format_f64(tr.z[i][k]);
        out << "\n";
    }
    return out.str();
}

Trajectory from_csv(const std::string& text) {
    Trajectory tr;
    std::istringstream in(text);
    std::string line;
    require(bool(std::getline(in, line)), "trajectory csv: empty input");
    std::size_t nx = 0, nz = 0;
    {
        std::istringstream hs(line);
        std::string col;
        bool first = true;
        while (std::getline(hs, col, ',')) {
            if (first) {
                require(col == "t", "trajectory csv: first column must be t");
                first = false;
            } else if (!col.empty() && col[0] == 'x') {
                ++nx;
            } else if (!col.empty() && col[0] == 'z') {
                ++nz;
            }
        }
    }
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
        require(row.size() == 1 + nx + nz, "trajectory csv: ragged row");
        tr.times.push_back(row[0]);
        tr.x.emplace_back(row.begin() + 1, row.begin() + 1 + nx);
        tr.z.emplace_back(row.begin() + 1 + nx, row.end());
    }
    return tr;
}

std::string to_json(const Trajectory& tr) {
    nlohmann::json j;
    j["system"] = tr.system_name;
    j["mu"] = tr.mu;
    j["notes"] = tr.notes;
    j["stats"] = tr.stats;
    j["times"] = tr.times;
    j["x"] = tr.x;
    j["z"] = tr.z;
    return j.dump(1);
}

Trajectory from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    Trajectory tr;
    tr.system_name = j.value("system", "");
    tr.mu = j.value("mu", Vec{});
    tr.notes = j.value("notes", "");
    if (j.contains("stats"))
        tr.stats = j["stats"].get<std::map<std::string, double>>();
    tr.times = j.at("times").get<std::vector<double>>();
    for (const auto& row : j.at("x")) tr.x.push_back(row.get<Vec>());
    for (const auto& row : j.at("z")) tr.z.push_back(row.get<Vec>());
    return tr;
}

}  // namespace daeops::integrate
