#include "lens/neighborhood.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace lens {

std::vector<int> Neighborhood::members() const {
    std::vector<int> m = ordered_members;
    std::sort(m.begin(), m.end());
    return m;
}

bool is_tight(const Instance& instance, const Customer& c, double tight_fraction) {
    return c.window.length() <= tight_fraction * instance.horizon().length();
}

std::optional<std::size_t> successor_node(const Instance&, const RouteSchedule& schedule, const Customer& u) {
    const double mid = u.window.midpoint();
    for (std::size_t k = 0; k < schedule.visits.size(); ++k)
        if (schedule.visits[k].arrival_time > mid) return k;
    return std::nullopt;
}

double point_route_distance(const Instance& instance, const Customer& u, const Route& route,
                            const RouteSchedule& schedule, double tight_fraction) {
    if (route.empty()) throw Error(ErrorKind::EmptyRoute, "distance to an empty route");
    if (is_tight(instance, u, tight_fraction)) {
        const auto succ = successor_node(instance, schedule, u);
        const Location& target =
            succ ? instance.customer(schedule.visits[*succ].id).location : instance.depot();
        return euclid(u.location, target);
    }
    return euclid(u.location, route_centroid(instance, route));
}

double route_distance(const Instance& instance, const Route& from, const Route& to,
                      const RouteSchedule& to_schedule, double tight_fraction) {
    if (from.empty() || to.empty()) throw Error(ErrorKind::EmptyRoute, "route distance with an empty route");
    double best = std::numeric_limits<double>::infinity();
    for (CustomerId id : from.customer_ids)
        best = std::min(best, point_route_distance(instance, instance.customer(id), to, to_schedule, tight_fraction));
    return best;
}

std::vector<double> rbp_probabilities(int count, double D) {
    if (count < 2) throw Error(ErrorKind::DegenerateCount, "rank-based probabilities need at least 2 routes");
    if (!(D > 0.0)) throw Error(ErrorKind::InvalidArgument, "D must be positive");
    std::vector<double> p(static_cast<std::size_t>(count));
    double total = 0.0;
    for (int i = 1; i <= count; ++i) {
        p[static_cast<std::size_t>(i - 1)] = std::pow(static_cast<double>(count - i), D);
        total += p[static_cast<std::size_t>(i - 1)];
    }
    for (double& v : p) v /= total;
    return p;
}

std::vector<int> sample_without_replacement(const std::vector<double>& p, int k, Rng& rng) {
    std::vector<double> mass = p;
    std::vector<int> picked;
    picked.reserve(static_cast<std::size_t>(k));
    for (int draw = 0; draw < k; ++draw) {
        const double total = std::accumulate(mass.begin(), mass.end(), 0.0);
        int choice = -1;
        if (total > 0.0) {
            const double u = uniform01(rng) * total;
            double acc = 0.0;
            for (std::size_t i = 0; i < mass.size(); ++i) {
                if (mass[i] <= 0.0) continue;
                acc += mass[i];
                choice = static_cast<int>(i);
                if (u < acc) break;
            }
        } else {
            // Only zero-mass ranks left: take them in rank order.
            for (std::size_t i = 0; i < mass.size(); ++i)
                if (std::find(picked.begin(), picked.end(), static_cast<int>(i)) == picked.end()) {
                    choice = static_cast<int>(i);
                    break;
                }
        }
        if (choice < 0) break;
        picked.push_back(choice);
        mass[static_cast<std::size_t>(choice)] = 0.0;
    }
    return picked;
}

std::vector<RouteSchedule> compute_schedules(const Instance& instance, const Solution& solution) {
    std::vector<RouteSchedule> out;
    out.reserve(solution.routes.size());
    for (const Route& r : solution.routes) out.push_back(compute_schedule(instance, r));
    return out;
}

Neighborhood create_neighborhood(const Solution& solution, const Instance& instance,
                                 const std::vector<RouteSchedule>& schedules, const SelectorConfig& config,
                                 Rng& rng) {
    if (config.n2 < 1) throw Error(ErrorKind::InvalidArgument, "n2 must be positive");
    std::vector<int> nonempty;
    for (std::size_t i = 0; i < solution.routes.size(); ++i)
        if (!solution.routes[i].empty()) nonempty.push_back(static_cast<int>(i));
    if (static_cast<int>(nonempty.size()) < config.n2 + 1)
        throw Error(ErrorKind::TooFewRoutes, std::to_string(nonempty.size()) + " nonempty routes for n2 = " +
                                                 std::to_string(config.n2));

    Neighborhood nh;
    nh.anchor = nonempty[uniform_index(rng, nonempty.size())];
    const Route& anchor = solution.routes[static_cast<std::size_t>(nh.anchor)];

    struct Ranked {
        double distance;
        int index;
    };
    std::vector<Ranked> others;
    for (int idx : nonempty) {
        if (idx == nh.anchor) continue;
        const auto u = static_cast<std::size_t>(idx);
        others.push_back({route_distance(instance, anchor, solution.routes[u], schedules[u], config.tight_fraction), idx});
    }
    std::sort(others.begin(), others.end(), [](const Ranked& a, const Ranked& b) {
        return a.distance != b.distance ? a.distance < b.distance : a.index < b.index;
    });

    const int count = static_cast<int>(others.size());
    std::vector<int> ranks;
    if (config.n2 >= count) {
        ranks.resize(static_cast<std::size_t>(count));
        std::iota(ranks.begin(), ranks.end(), 0);
    } else {
        ranks = sample_without_replacement(rbp_probabilities(count, config.D), config.n2, rng);
        std::sort(ranks.begin(), ranks.end());
    }
    nh.ordered_members.push_back(nh.anchor);
    for (int r : ranks) nh.ordered_members.push_back(others[static_cast<std::size_t>(r)].index);
    return nh;
}

Neighborhood create_neighborhood(const Solution& solution, const Instance& instance,
                                 const SelectorConfig& config, Rng& rng) {
    return create_neighborhood(solution, instance, compute_schedules(instance, solution), config, rng);
}

}  // namespace lens
