#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "lens/error.hpp"

namespace lens {

struct Location {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Location&, const Location&) = default;
};

struct TimeWindow {
    double earliest = 0.0;
    double latest = 0.0;

    double length() const { return latest - earliest; }
    double midpoint() const { return 0.5 * (earliest + latest); }

    friend bool operator==(const TimeWindow&, const TimeWindow&) = default;
};

using CustomerId = int;

struct Customer {
    CustomerId id = 0;
    Location location;
    double demand = 0.0;
    double service_duration = 0.0;
    TimeWindow window;

    friend bool operator==(const Customer&, const Customer&) = default;
};

/// VRPTW problem data. The depot is implicit node 0 (start) and n+1 (end),
/// co-located, with zero demand and zero service duration. Customer ids are
/// arbitrary distinct positive integers; sub-problems keep their parent ids.
class Instance {
public:
    Instance() = default;
    Instance(std::string name, Location depot, TimeWindow horizon, int fleet_size, double capacity,
             std::vector<Customer> customers);

    const std::string& name() const { return name_; }
    const Location& depot() const { return depot_; }
    const TimeWindow& horizon() const { return horizon_; }
    int fleet_size() const { return fleet_size_; }
    double capacity() const { return capacity_; }
    std::span<const Customer> customers() const { return customers_; }
    std::size_t size() const { return customers_.size(); }

    bool contains(CustomerId id) const;
    /// Throws UnknownCustomer.
    const Customer& customer(CustomerId id) const;

    friend bool operator==(const Instance& a, const Instance& b) {
        return a.name_ == b.name_ && a.depot_ == b.depot_ && a.horizon_ == b.horizon_ &&
               a.fleet_size_ == b.fleet_size_ && a.capacity_ == b.capacity_ &&
               a.customers_ == b.customers_;
    }

private:
    std::string name_;
    Location depot_;
    TimeWindow horizon_;
    int fleet_size_ = 1;
    double capacity_ = 0.0;
    std::vector<Customer> customers_;
    std::vector<int> slot_;  // id -> position in customers_, -1 if absent
};

/// Customer ids in visiting order; the depot is implicit at both ends.
struct Route {
    std::vector<CustomerId> customer_ids;

    bool empty() const { return customer_ids.empty(); }
    std::size_t size() const { return customer_ids.size(); }

    friend bool operator==(const Route&, const Route&) = default;
};

struct Visit {
    CustomerId id = 0;
    double arrival_time = 0.0;
    double service_start = 0.0;
    double departure_time = 0.0;
    double cumulative_load = 0.0;
};

struct RouteSchedule {
    std::vector<Visit> visits;
    double travel_distance = 0.0;
    double waiting_total = 0.0;
    double service_total = 0.0;
    double return_arrival = 0.0;

    double load() const { return visits.empty() ? 0.0 : visits.back().cumulative_load; }
};

struct Solution {
    std::vector<Route> routes;

    friend bool operator==(const Solution&, const Solution&) = default;
};

double euclid(const Location& a, const Location& b);

/// Forward simulation from the depot at the horizon start. Throws UnknownCustomer.
RouteSchedule compute_schedule(const Instance& instance, const Route& route);

enum class ViolationKind {
    DuplicateVisit,
    MissingCustomer,
    FleetExceeded,
    CapacityExceeded,
    TimeWindowViolated,
    HorizonViolated,
};

std::string_view to_string(ViolationKind kind);

struct Violation {
    ViolationKind kind;
    int route_index = -1;  // -1 when not tied to one route
    CustomerId customer = 0;
    std::string detail;
};

struct FeasibilityReport {
    std::vector<Violation> violations;

    bool feasible() const { return violations.empty(); }
    std::size_t count(ViolationKind kind) const;
};

/// Lists every violated constraint; never throws. Ids unknown to the instance
/// are reported as MissingCustomer against the route they appear in.
FeasibilityReport check_feasibility(const Instance& instance, const Solution& solution);

/// Time and capacity feasibility of a single route (no coverage checks).
bool route_feasible(const Instance& instance, const Route& route);

double route_cost(const Instance& instance, const Route& route);
double solution_cost(const Instance& instance, const Solution& solution);

/// Throws EmptyRoute.
Location route_centroid(const Instance& instance, const Route& route);

}  // namespace lens
