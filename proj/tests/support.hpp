#pragma once

// Shared fixtures and independent oracles for the test binaries.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "lens/model.hpp"
#include "lens/rng.hpp"

namespace lens::testing {

inline Customer make_customer(CustomerId id, double x, double y, double demand, double e, double l,
                              double service = 0.0) {
    return Customer{id, {x, y}, demand, service, {e, l}};
}

inline Instance make_instance(std::vector<Customer> customers, int fleet = 3, double capacity = 100.0,
                              TimeWindow horizon = {0.0, 1000.0}, Location depot = {0.0, 0.0},
                              std::string name = "t") {
    return Instance(std::move(name), depot, horizon, fleet, capacity, std::move(customers));
}

/// Small random instance: coordinates on a 0..50 grid, a mix of wide and
/// narrow windows, demands 1..40.
inline Instance random_small_instance(Rng& rng, int n, int fleet, double capacity = 80.0) {
    const TimeWindow horizon{0.0, 300.0};
    std::vector<Customer> cs;
    for (int i = 1; i <= n; ++i) {
        const double x = static_cast<double>(uniform_index(rng, 51));
        const double y = static_cast<double>(uniform_index(rng, 51));
        const double demand = 1.0 + static_cast<double>(uniform_index(rng, 40));
        double e = 0.0, l = horizon.latest;
        if (uniform01(rng) < 0.6) {
            const double mid = uniform_real(rng, 20.0, 260.0);
            const double half = uniform_real(rng, 5.0, 60.0);
            e = std::max(0.0, mid - half);
            l = std::min(horizon.latest, mid + half);
        }
        cs.push_back(make_customer(i, x, y, demand, e, l, 5.0));
    }
    return Instance("rand", {25.0, 25.0}, horizon, fleet, capacity, std::move(cs));
}

/// Constraint-by-constraint evaluation written against the model
/// formulation: earliest service times t_j >= t_i + tau_i + d_ij along each
/// route, e_j <= t_j <= l_j, load <= Q, return <= l_0, each customer exactly
/// once, at most m nonempty routes.
inline bool oracle_feasible(const Instance& inst, const Solution& s) {
    std::vector<int> seen;
    int used = 0;
    for (const Route& r : s.routes) {
        if (r.empty()) continue;
        ++used;
        double t = inst.horizon().earliest;
        double px = inst.depot().x, py = inst.depot().y;
        double q = 0.0, tau = 0.0;
        for (CustomerId id : r.customer_ids) {
            if (!inst.contains(id)) return false;
            const Customer& c = inst.customer(id);
            const double d = std::sqrt((c.location.x - px) * (c.location.x - px) +
                                       (c.location.y - py) * (c.location.y - py));
            t = std::max(t + tau + d, c.window.earliest);
            if (t > c.window.latest) return false;
            tau = c.service_duration;
            q += c.demand;
            px = c.location.x;
            py = c.location.y;
            seen.push_back(id);
        }
        const double back = std::sqrt((inst.depot().x - px) * (inst.depot().x - px) +
                                      (inst.depot().y - py) * (inst.depot().y - py));
        if (t + tau + back > inst.horizon().latest) return false;
        if (q > inst.capacity()) return false;
    }
    if (used > inst.fleet_size()) return false;
    std::sort(seen.begin(), seen.end());
    std::vector<int> all;
    for (const Customer& c : inst.customers()) all.push_back(c.id);
    std::sort(all.begin(), all.end());
    return seen == all;
}

/// Sum of edge lengths, depot to depot, in route order.
inline double oracle_cost(const Instance& inst, const Solution& s) {
    double total = 0.0;
    for (const Route& r : s.routes) {
        if (r.empty()) continue;
        Location prev = inst.depot();
        for (CustomerId id : r.customer_ids) {
            const Location& here = inst.customer(id).location;
            total += std::hypot(here.x - prev.x, here.y - prev.y);
            prev = here;
        }
        total += std::hypot(inst.depot().x - prev.x, inst.depot().y - prev.y);
    }
    return total;
}

/// Calls fn for every assignment of the instance's customers to `m` ordered
/// routes (empty routes allowed): every permutation, cut at every choice of
/// m-1 separators.
inline void for_each_solution(const Instance& inst, int m, const std::function<void(const Solution&)>& fn) {
    std::vector<CustomerId> ids;
    for (const Customer& c : inst.customers()) ids.push_back(c.id);
    std::sort(ids.begin(), ids.end());
    const int n = static_cast<int>(ids.size());
    // cuts[k] = number of customers in the first k+1 routes (nondecreasing)
    std::vector<int> cuts(static_cast<std::size_t>(std::max(0, m - 1)), 0);
    std::function<void(std::size_t, int)> place = [&](std::size_t k, int lo) {
        if (k == cuts.size()) {
            Solution s;
            int start = 0;
            for (std::size_t r = 0; r <= cuts.size(); ++r) {
                const int end = r < cuts.size() ? cuts[r] : n;
                s.routes.push_back(Route{{ids.begin() + start, ids.begin() + end}});
                start = end;
            }
            fn(s);
            return;
        }
        for (int c = lo; c <= n; ++c) {
            cuts[k] = c;
            place(k + 1, c);
        }
    };
    do {
        place(0, 0);
    } while (std::next_permutation(ids.begin(), ids.end()));
}

/// Cheapest feasible solution by exhaustive enumeration; infinity if none.
inline double brute_force_optimum(const Instance& inst, int m) {
    double best = std::numeric_limits<double>::infinity();
    for_each_solution(inst, m, [&](const Solution& s) {
        if (oracle_feasible(inst, s)) best = std::min(best, oracle_cost(inst, s));
    });
    return best;
}

}  // namespace lens::testing
