#pragma once

#include <optional>
#include <vector>

#include "lens/model.hpp"
#include "lens/rng.hpp"

namespace lens {

struct SelectorConfig {
    int n2 = 4;               // companion routes added to the anchor
    double D = 4.0;           // rank-based probability exponent
    double tight_fraction = 0.05;
    double twd_penalty = 1000.0;
};

/// Anchor route plus sampled companions, all as indices into Solution::routes.
struct Neighborhood {
    int anchor = -1;
    std::vector<int> ordered_members;  // anchor first, then by distance rank

    std::vector<int> members() const;  // ascending
    std::size_t size() const { return ordered_members.size(); }
};

bool is_tight(const Instance& instance, const Customer& c, double tight_fraction);

/// Position in the route of the first visit arriving strictly after the
/// midpoint of u's window; nullopt means the ending depot.
std::optional<std::size_t> successor_node(const Instance& instance, const RouteSchedule& schedule,
                                          const Customer& u);

/// Throws EmptyRoute.
double point_route_distance(const Instance& instance, const Customer& u, const Route& route,
                            const RouteSchedule& schedule, double tight_fraction);

/// min over u in `from` of point_route_distance(u, to). Throws EmptyRoute.
double route_distance(const Instance& instance, const Route& from, const Route& to,
                      const RouteSchedule& to_schedule, double tight_fraction);

/// p_i proportional to (count - i)^D for ranks i = 1..count. Throws DegenerateCount.
std::vector<double> rbp_probabilities(int count, double D);

/// Draws k distinct ranks from p without replacement, renormalizing after
/// each draw. Returned ranks are in draw order.
std::vector<int> sample_without_replacement(const std::vector<double>& p, int k, Rng& rng);

/// Solution-wide cache of schedules, indexed like Solution::routes.
std::vector<RouteSchedule> compute_schedules(const Instance& instance, const Solution& solution);

/// Throws TooFewRoutes when fewer than n2 + 1 routes are nonempty.
Neighborhood create_neighborhood(const Solution& solution, const Instance& instance,
                                 const std::vector<RouteSchedule>& schedules, const SelectorConfig& config,
                                 Rng& rng);

Neighborhood create_neighborhood(const Solution& solution, const Instance& instance,
                                 const SelectorConfig& config, Rng& rng);

}  // namespace lens
