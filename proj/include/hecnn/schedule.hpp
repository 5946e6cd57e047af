#pragma once

// Deterministic simulation of gate-parallel circuit evaluation: gates whose
// inputs are ready form a level; each level's gates are divided among the
// workers. Models the speedup available to a worker pool evaluating
// encrypted bit operations; it does not itself run in parallel.

#include <iomanip>
#include <map>
#include <ostream>

#include "hecnn/circuit.hpp"

namespace hecnn {

struct GateCostTable {
    double xor_cost = 1.0, and_cost = 1.0, or_cost = 1.0, not_cost = 1.0;

    double cost(GateKind k) const {
        switch (k) {
            case GateKind::Xor: return xor_cost;
            case GateKind::And: return and_cost;
            case GateKind::Or: return or_cost;
            case GateKind::Not: return not_cost;
        }
        return 1.0;
    }
    void validate() const {
        if (xor_cost <= 0 || and_cost <= 0 || or_cost <= 0 || not_cost <= 0)
            throw std::invalid_argument("GateCostTable: costs must be positive");
    }
};

struct ScheduleReport {
    std::size_t workers = 0;
    GateCostTable costs;
    std::size_t gate_count = 0;
    std::size_t level_count = 0;
    double makespan = 0.0;          // sum over levels of ceil(size/workers) * max level cost
    double critical_path = 0.0;     // longest weighted dependency chain
    double total_cost = 0.0;        // sum of all gate costs
    double utilization = 0.0;       // total_cost / (workers * makespan)
    std::vector<std::size_t> level_widths;
    std::size_t min_level_width = 0;
};

namespace schedule_detail {

// ASAP level per gate (inputs are level 0).
inline std::vector<std::size_t> gate_levels(const Circuit& c) {
    std::vector<std::size_t> wire_level(c.wire_count(), 0);
    std::vector<std::size_t> out(c.gate_count());
    for (std::size_t i = 0; i < c.gates.size(); ++i) {
        const GateNode& g = c.gates[i];
        std::size_t lvl = wire_level[g.a];
        if (g.kind != GateKind::Not) lvl = std::max(lvl, wire_level[g.b]);
        lvl += 1;
        out[i] = lvl;
        wire_level[c.num_inputs + i] = lvl;
    }
    return out;
}

}  // namespace schedule_detail

inline ScheduleReport schedule(const Circuit& c, std::size_t workers, const GateCostTable& costs = {}) {
    if (workers == 0) throw std::invalid_argument("schedule: workers must be >= 1");
    costs.validate();
    ScheduleReport r;
    r.workers = workers;
    r.costs = costs;
    r.gate_count = c.gate_count();

    std::vector<std::size_t> levels = schedule_detail::gate_levels(c);
    std::map<std::size_t, std::pair<std::size_t, double>> per_level;  // level -> (size, max cost)
    for (std::size_t i = 0; i < levels.size(); ++i) {
        auto& [size, maxc] = per_level[levels[i]];
        size += 1;
        maxc = std::max(maxc, costs.cost(c.gates[i].kind));
        r.total_cost += costs.cost(c.gates[i].kind);
    }
    r.level_count = per_level.size();
    r.min_level_width = c.gate_count() ? SIZE_MAX : 0;
    for (const auto& [lvl, entry] : per_level) {
        auto [size, maxc] = entry;
        r.level_widths.push_back(size);
        r.min_level_width = std::min(r.min_level_width, size);
        r.makespan += static_cast<double>((size + workers - 1) / workers) * maxc;
    }

    // longest weighted path through the DAG
    std::vector<double> wire_cp(c.wire_count(), 0.0);
    for (std::size_t i = 0; i < c.gates.size(); ++i) {
        const GateNode& g = c.gates[i];
        double in_cp = wire_cp[g.a];
        if (g.kind != GateKind::Not) in_cp = std::max(in_cp, wire_cp[g.b]);
        double cp = in_cp + costs.cost(g.kind);
        wire_cp[c.num_inputs + i] = cp;
        r.critical_path = std::max(r.critical_path, cp);
    }

    r.utilization = r.makespan > 0 ? r.total_cost / (static_cast<double>(workers) * r.makespan) : 0.0;
    return r;
}

struct SpeedupRow {
    std::size_t workers;
    double makespan;
    double speedup;     // vs the same circuit at workers = 1
    double efficiency;  // speedup / workers
    std::size_t min_level_width;
};

// Makespan is monotone non-increasing in the worker count; speedup is
// capped by min(workers, total/critical-path).
inline std::vector<SpeedupRow> speedup_table(const Circuit& c, const std::vector<std::size_t>& workers,
                                             const GateCostTable& costs = {}) {
    if (workers.empty()) throw std::invalid_argument("speedup_table: empty worker list");
    double base = schedule(c, 1, costs).makespan;
    std::vector<SpeedupRow> rows;
    for (std::size_t w : workers) {
        ScheduleReport r = schedule(c, w, costs);
        rows.push_back({w, r.makespan, base / r.makespan, base / r.makespan / static_cast<double>(w),
                        r.min_level_width});
    }
    return rows;
}

// Aligned-column text plus machine-readable CSV rows.
inline void write_speedup_report(std::ostream& os, const Circuit& c, const std::vector<SpeedupRow>& rows,
                                 const std::string& title) {
    ScheduleReport base = schedule(c, 1);
    os << "# " << title << "\n";
    os << "# gates " << base.gate_count << ", levels " << base.level_count << ", critical path "
       << base.critical_path << ", total cost " << base.total_cost << "\n";
    os << std::left << std::setw(10) << "workers" << std::setw(14) << "makespan" << std::setw(12)
       << "speedup" << std::setw(12) << "efficiency" << "min-width\n";
    for (const auto& r : rows) {
        os << std::left << std::setw(10) << r.workers << std::setw(14) << r.makespan << std::setw(12)
           << std::fixed << std::setprecision(3) << r.speedup << std::setw(12) << r.efficiency
           << r.min_level_width << "\n";
        os.unsetf(std::ios::fixed);
        os << std::setprecision(6);
    }
    os << "csv,workers,makespan,speedup,efficiency,min_width\n";
    for (const auto& r : rows) {
        os << "csv," << r.workers << "," << r.makespan << "," << r.speedup << "," << r.efficiency << ","
           << r.min_level_width << "\n";
    }
}

}  // namespace hecnn
