#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lens/model.hpp"
#include "lens/neighborhood.hpp"
#include "lens/rng.hpp"

namespace lens {

/// The VRPTW induced by a neighborhood: parent depot, horizon and capacity,
/// the neighborhood's customers (parent ids kept), one vehicle per destroyed
/// route.
struct SubProblem {
    Instance instance;
    std::vector<int> route_indices;  // parent route of each warm-start route
};

struct RepairConfig {
    int regret_k = 2;
    bool relocate = true;
    bool swap = true;
    bool two_opt_star = true;
    int max_passes = 50;
    int ruin_rounds = 20;          // ruin-recreate rounds, best kept
    double ruin_fraction = 0.3;
    double insertion_noise = 0.2;  // relative to the mean distance, used on every other round
    std::optional<std::string> external_command;
    double external_timeout_seconds = 60.0;
};

struct Extracted {
    SubProblem sub;
    std::vector<Route> warm_start;
};

Extracted extract_subproblem(const Instance& instance, const Solution& solution, const Neighborhood& neighborhood);

/// Built-in ruin/regret-insertion/local-search repair. The result is feasible
/// and never costs more than warm_start. Throws WarmStartInfeasible.
std::vector<Route> repair(const SubProblem& sub, const std::vector<Route>& warm_start, const RepairConfig& config,
                          Rng& rng);

/// Dispatches to external_repair when config.external_command is set.
std::vector<Route> repair_any(const SubProblem& sub, const std::vector<Route>& warm_start,
                              const RepairConfig& config, Rng& rng);

double improvement(double cost_before, double cost_after);

/// Runs `command` through /bin/sh. Its standard input receives the
/// sub-instance document followed by a "ROUTES" line and the warm-start
/// routes; it answers with one line of space-separated customer ids per
/// route (anything before a "ROUTES" line in the answer is skipped). A plan
/// that is infeasible, incomplete or costlier than the warm start is
/// rejected in favor of warm_start. Throws ExternalFailure on nonzero exit,
/// timeout or unparseable output.
std::vector<Route> external_repair(const SubProblem& sub, const std::vector<Route>& warm_start,
                                   const std::string& command, double timeout_seconds = 60.0);

/// Regret insertion of every customer into an empty fleet, then local
/// search. Throws InfeasibleInitial if some customer cannot be placed.
Solution construct_initial(const Instance& instance, const RepairConfig& config);

/// Replace the neighborhood's routes by `repaired`, dropping empty routes.
Solution apply_repair(const Solution& solution, const Neighborhood& neighborhood, const std::vector<Route>& repaired);

}  // namespace lens
