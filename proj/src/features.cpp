#include "lens/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace lens {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Location at_position(const Instance& instance, const Route& route, std::ptrdiff_t k) {
    if (k < 0 || k >= static_cast<std::ptrdiff_t>(route.size())) return instance.depot();
    return instance.customer(route.customer_ids[static_cast<std::size_t>(k)]).location;
}

// Greedy insertion of c into `route`: right before the first customer whose
// window opens later than c's, or at the end.
double greedy_addition_cost(const Instance& instance, const Route& route, const Customer& c) {
    std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(route.size());
    for (std::size_t k = 0; k < route.size(); ++k)
        if (instance.customer(route.customer_ids[k]).window.earliest > c.window.earliest) {
            pos = static_cast<std::ptrdiff_t>(k);
            break;
        }
    const Location prev = at_position(instance, route, pos - 1);
    const Location next = at_position(instance, route, pos);
    return euclid(prev, c.location) + euclid(c.location, next) - euclid(prev, next);
}

int route_of(const Solution& solution, const Neighborhood& nh, CustomerId c) {
    for (int idx : nh.ordered_members) {
        const auto& ids = solution.routes.at(static_cast<std::size_t>(idx)).customer_ids;
        if (std::find(ids.begin(), ids.end(), c) != ids.end()) return idx;
    }
    throw Error(ErrorKind::NotInNeighborhood, "customer " + std::to_string(c));
}

}  // namespace

const std::array<const char*, CustomerProperties::kCount>& CustomerProperties::names() {
    static const std::array<const char*, kCount> n = {
        "waiting_time",   "closeness", "temporal_closeness",       "centroid_closeness",
        "distance_contribution", "tw_length", "depot_distance", "load", "min_greedy_addition_cost",
        "max_gain",       "possible_delay"};
    return n;
}

std::array<double, CustomerProperties::kCount> CustomerProperties::values() const {
    return {waiting_time,   closeness, temporal_closeness, centroid_closeness, distance_contribution, tw_length,
            depot_distance, load,      min_greedy_addition_cost, max_gain,     possible_delay};
}

const std::array<const char*, RouteProperties::kCount>& RouteProperties::names() {
    static const std::array<const char*, kCount> n = {
        "route_distance", "avg_route_distance", "empty_distance", "worst_case_fraction", "route_duration",
        "avg_route_duration", "idle_time", "free_capacity", "fitting_candidates", "expected_fitting_candidates"};
    return n;
}

std::array<double, RouteProperties::kCount> RouteProperties::values() const {
    return {route_distance, avg_route_distance, empty_distance, worst_case_fraction, route_duration,
            avg_route_duration, idle_time, free_capacity, fitting_candidates, expected_fitting_candidates};
}

Aggregate aggregate(std::span<const double> values) {
    if (values.empty()) throw Error(ErrorKind::EmptySequence, "aggregate of nothing");
    Aggregate a;
    a.max = -kInf;
    a.min = kInf;
    for (double v : values) {
        a.sum += v;
        a.max = std::max(a.max, v);
        a.min = std::min(a.min, v);
    }
    const double n = static_cast<double>(values.size());
    a.avg = a.sum / n;
    double ss = 0.0;
    for (double v : values) ss += (v - a.avg) * (v - a.avg);
    a.std = std::sqrt(ss / n);
    // keep min <= avg <= max under rounding of the mean
    a.avg = std::clamp(a.avg, a.min, a.max);
    return a;
}

double time_window_difference(const Instance&, const Customer& a, const Customer& b, double penalty) {
    auto one_way = [](const Customer& first, const Customer& second) {
        const double arrival = first.window.earliest + first.service_duration + euclid(first.location, second.location);
        if (arrival > second.window.latest) return kInf;
        return std::max(0.0, second.window.earliest - arrival);
    };
    const double best = std::min(one_way(a, b), one_way(b, a));
    return best == kInf ? penalty : best;
}

CustomerProperties customer_properties(const Instance& instance, const Solution& solution,
                                       const Neighborhood& neighborhood, const std::vector<RouteSchedule>& schedules,
                                       CustomerId c, const SelectorConfig& config) {
    const int own = route_of(solution, neighborhood, c);
    const Route& route = solution.routes[static_cast<std::size_t>(own)];
    const RouteSchedule& sched = schedules.at(static_cast<std::size_t>(own));
    const Customer& cust = instance.customer(c);
    const auto pos = static_cast<std::ptrdiff_t>(
        std::find(route.customer_ids.begin(), route.customer_ids.end(), c) - route.customer_ids.begin());
    const Visit& visit = sched.visits[static_cast<std::size_t>(pos)];

    CustomerProperties p;
    p.waiting_time = std::max(0.0, cust.window.earliest - visit.arrival_time);
    const Location prev = at_position(instance, route, pos - 1);
    const Location next = at_position(instance, route, pos + 1);
    p.distance_contribution = euclid(prev, cust.location) + euclid(cust.location, next) - euclid(prev, next);
    p.tw_length = cust.window.length();
    p.depot_distance = euclid(cust.location, instance.depot());
    p.load = cust.demand;
    p.possible_delay = cust.window.latest - visit.arrival_time;

    double closeness = kInf;
    double temporal = kInf;
    double centroid = kInf;
    double greedy = kInf;
    for (int idx : neighborhood.ordered_members) {
        if (idx == own) continue;
        const Route& other = solution.routes[static_cast<std::size_t>(idx)];
        if (other.empty()) continue;
        for (CustomerId o : other.customer_ids) {
            const Customer& oc = instance.customer(o);
            const double d = euclid(cust.location, oc.location);
            closeness = std::min(closeness, d);
            temporal = std::min(temporal, d + time_window_difference(instance, cust, oc, config.twd_penalty));
        }
        centroid = std::min(centroid, euclid(cust.location, route_centroid(instance, other)));
        greedy = std::min(greedy, greedy_addition_cost(instance, other, cust));
    }
    // A neighborhood always has another nonempty route; guard anyway so the
    // vector stays finite.
    p.closeness = closeness == kInf ? 0.0 : closeness;
    p.temporal_closeness = temporal == kInf ? 0.0 : temporal;
    p.centroid_closeness = centroid == kInf ? 0.0 : centroid;
    p.min_greedy_addition_cost = greedy == kInf ? 0.0 : greedy;
    p.max_gain = p.distance_contribution - p.min_greedy_addition_cost;
    return p;
}

RouteProperties route_properties(const Instance& instance, const Solution& solution, const Neighborhood& neighborhood,
                                 const std::vector<RouteSchedule>& schedules, int route_index) {
    const auto& members = neighborhood.ordered_members;
    if (std::find(members.begin(), members.end(), route_index) == members.end())
        throw Error(ErrorKind::NotInNeighborhood, "route " + std::to_string(route_index));
    const Route& route = solution.routes.at(static_cast<std::size_t>(route_index));
    if (route.empty()) throw Error(ErrorKind::EmptyRoute, "route properties of an empty route");
    const RouteSchedule& s = schedules.at(static_cast<std::size_t>(route_index));
    const double count = static_cast<double>(route.size());

    RouteProperties p;
    p.route_distance = s.travel_distance;
    p.avg_route_distance = s.travel_distance / count;
    p.empty_distance = euclid(instance.customer(route.customer_ids.back()).location, instance.depot());
    double worst = 0.0;
    for (CustomerId id : route.customer_ids) worst += 2.0 * euclid(instance.depot(), instance.customer(id).location);
    p.worst_case_fraction = worst > 0.0 ? s.travel_distance / worst : 0.0;
    p.route_duration = s.travel_distance + s.waiting_total + s.service_total;
    p.avg_route_duration = p.route_duration / count;
    p.idle_time = s.waiting_total;
    p.free_capacity = std::max(0.0, instance.capacity() - s.load());

    double demand_sum = 0.0;
    std::size_t others = 0;
    for (int idx : members) {
        if (idx == route_index) continue;
        for (CustomerId id : solution.routes[static_cast<std::size_t>(idx)].customer_ids) {
            const double q = instance.customer(id).demand;
            if (q < p.free_capacity) p.fitting_candidates += 1.0;
            demand_sum += q;
            ++others;
        }
    }
    const double mean_demand = others ? demand_sum / static_cast<double>(others) : 0.0;
    p.expected_fitting_candidates = mean_demand > 0.0 ? p.free_capacity / mean_demand : 0.0;
    return p;
}

std::size_t feature_count(int n2) {
    const auto k = static_cast<std::size_t>(n2 + 1);
    return 1 + CustomerProperties::kCount * 5 + RouteProperties::kCount * 5 + k * (k - 1);
}

std::vector<std::string> feature_names(int n2) {
    static const char* stats[] = {"avg", "max", "min", "sum", "std"};
    std::vector<std::string> names{"customer_count"};
    for (const char* p : CustomerProperties::names())
        for (const char* s : stats) names.push_back(std::string("customer_") + p + "_" + s);
    for (const char* p : RouteProperties::names())
        for (const char* s : stats) names.push_back(std::string("route_") + p + "_" + s);
    const int k = n2 + 1;
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j)
            if (i != j) names.push_back("route_gap_" + std::to_string(i) + "_" + std::to_string(j));
    return names;
}

FeatureVector extract_features(const Instance& instance, const Solution& solution, const Neighborhood& neighborhood,
                               const std::vector<RouteSchedule>& schedules, const SelectorConfig& config) {
    if (static_cast<int>(neighborhood.size()) != config.n2 + 1)
        throw Error(ErrorKind::DimensionMismatch, "neighborhood has " + std::to_string(neighborhood.size()) +
                                                      " routes, expected " + std::to_string(config.n2 + 1));
    FeatureVector out;
    out.reserve(feature_count(config.n2));

    std::vector<std::array<double, CustomerProperties::kCount>> cprops;
    for (int idx : neighborhood.ordered_members)
        for (CustomerId c : solution.routes.at(static_cast<std::size_t>(idx)).customer_ids)
            cprops.push_back(customer_properties(instance, solution, neighborhood, schedules, c, config).values());
    std::vector<std::array<double, RouteProperties::kCount>> rprops;
    for (int idx : neighborhood.ordered_members)
        rprops.push_back(route_properties(instance, solution, neighborhood, schedules, idx).values());

    out.push_back(static_cast<double>(cprops.size()));
    std::vector<double> column;
    for (std::size_t f = 0; f < CustomerProperties::kCount; ++f) {
        column.clear();
        for (const auto& row : cprops) column.push_back(row[f]);
        const Aggregate a = aggregate(column);
        out.insert(out.end(), {a.avg, a.max, a.min, a.sum, a.std});
    }
    for (std::size_t f = 0; f < RouteProperties::kCount; ++f) {
        column.clear();
        for (const auto& row : rprops) column.push_back(row[f]);
        const Aggregate a = aggregate(column);
        out.insert(out.end(), {a.avg, a.max, a.min, a.sum, a.std});
    }
    for (int i : neighborhood.ordered_members)
        for (int j : neighborhood.ordered_members)
            if (i != j) {
                const auto ui = static_cast<std::size_t>(i);
                const auto uj = static_cast<std::size_t>(j);
                out.push_back(route_distance(instance, solution.routes[ui], solution.routes[uj], schedules[uj],
                                             config.tight_fraction));
            }
    return out;
}

FeatureVector extract_features(const Instance& instance, const Solution& solution, const Neighborhood& neighborhood,
                               const SelectorConfig& config) {
    return extract_features(instance, solution, neighborhood, compute_schedules(instance, solution), config);
}

}  // namespace lens
