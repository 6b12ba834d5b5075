#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ezddc/model.hpp"

namespace ezddc {

struct PanelObs {
    int bus_id = 0;
    int month = 0;
    int x = 0;     // mileage bin at decision time
    int d = 0;     // 0 keep, 1 replace
    int delta = 0; // realized increment bin
};

struct PanelDataset {
    std::vector<PanelObs> rows;

    std::size_t size() const { return rows.size(); }

    void sort_by_bus_month() {
        std::stable_sort(rows.begin(), rows.end(), [](const PanelObs& a, const PanelObs& b) {
            return a.bus_id != b.bus_id ? a.bus_id < b.bus_id : a.month < b.month;
        });
    }
};

// Checks bin ranges, consecutive months per bus and the deterministic state
// update x' = (1-d) x + Delta (truncated at the top bin). Throws listing the
// first 10 offending rows.
inline void validate_panel(const PanelDataset& data, int n_bins) {
    std::vector<std::string> bad;
    auto flag = [&](std::size_t i, const std::string& why) {
        if (bad.size() < 10)
            bad.push_back("row " + std::to_string(i + 1) + ": " + why);
    };
    const StateGrid grid{n_bins, 1.0};
    for (std::size_t i = 0; i < data.rows.size(); ++i) {
        const auto& r = data.rows[i];
        if (r.x < 0 || r.x >= n_bins) flag(i, "x_bin " + std::to_string(r.x) + " out of range");
        if (r.d != 0 && r.d != 1) flag(i, "decision " + std::to_string(r.d) + " not in {0,1}");
        if (r.delta < 0) flag(i, "negative delta_bin");
        if (i + 1 < data.rows.size() && data.rows[i + 1].bus_id == r.bus_id) {
            const auto& nxt = data.rows[i + 1];
            if (nxt.month != r.month + 1)
                flag(i + 1, "month " + std::to_string(nxt.month) + " not consecutive");
            else if (r.d == 0 || r.d == 1) {
                const int expect = next_state(grid, r.d, r.x, r.delta);
                if (nxt.x != expect)
                    flag(i + 1, "x_bin " + std::to_string(nxt.x) + " != expected " +
                                    std::to_string(expect));
            }
        }
    }
    if (!bad.empty()) {
        std::string msg = "panel validation failed (" + std::to_string(bad.size()) +
                          " shown):";
        for (const auto& b : bad) msg += "\n  " + b;
        throw std::invalid_argument(msg);
    }
}

inline std::string panel_to_csv(const PanelDataset& data) {
    std::string out = "bus_id,month,x_bin,decision,delta_bin\n";
    char buf[96];
    for (const auto& r : data.rows) {
        std::snprintf(buf, sizeof(buf), "%d,%d,%d,%d,%d\n", r.bus_id, r.month, r.x, r.d, r.delta);
        out += buf;
    }
    return out;
}

inline PanelDataset panel_from_csv_text(const std::string& text) {
    PanelDataset data;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line))
        throw std::invalid_argument("panel CSV: empty file");
    if (line != "bus_id,month,x_bin,decision,delta_bin")
        throw std::invalid_argument("panel CSV: unexpected header '" + line + "'");
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        PanelObs r;
        char extra;
        if (std::sscanf(line.c_str(), "%d,%d,%d,%d,%d%c", &r.bus_id, &r.month, &r.x, &r.d,
                        &r.delta, &extra) != 5)
            throw std::invalid_argument("panel CSV: malformed line " + std::to_string(lineno) +
                                        ": '" + line + "'");
        data.rows.push_back(r);
    }
    data.sort_by_bus_month();
    return data;
}

inline PanelDataset load_panel_csv(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open panel CSV: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return panel_from_csv_text(ss.str());
}

inline void save_panel_csv(const PanelDataset& data, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write panel CSV: " + path);
    f << panel_to_csv(data);
}

} // namespace ezddc
