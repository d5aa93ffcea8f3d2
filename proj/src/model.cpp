#include "lens/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace lens {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::UnknownCustomer: return "UnknownCustomer";
        case ErrorKind::EmptyRoute: return "EmptyRoute";
        case ErrorKind::ParseError: return "ParseError";
        case ErrorKind::InconsistentDepot: return "InconsistentDepot";
        case ErrorKind::InfeasibleCustomer: return "InfeasibleCustomer";
        case ErrorKind::DegenerateCount: return "DegenerateCount";
        case ErrorKind::TooFewRoutes: return "TooFewRoutes";
        case ErrorKind::WarmStartInfeasible: return "WarmStartInfeasible";
        case ErrorKind::ExternalFailure: return "ExternalFailure";
        case ErrorKind::NotInNeighborhood: return "NotInNeighborhood";
        case ErrorKind::EmptySequence: return "EmptySequence";
        case ErrorKind::SingleClass: return "SingleClass";
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::VersionMismatch: return "VersionMismatch";
        case ErrorKind::CorruptModel: return "CorruptModel";
        case ErrorKind::InfeasibleInitial: return "InfeasibleInitial";
        case ErrorKind::DegenerateBaseline: return "DegenerateBaseline";
        case ErrorKind::NoImprovingIterations: return "NoImprovingIterations";
        case ErrorKind::LengthMismatch: return "LengthMismatch";
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::IoError: return "IoError";
    }
    return "Unknown";
}

std::string_view to_string(ViolationKind kind) {
    switch (kind) {
        case ViolationKind::DuplicateVisit: return "DuplicateVisit";
        case ViolationKind::MissingCustomer: return "MissingCustomer";
        case ViolationKind::FleetExceeded: return "FleetExceeded";
        case ViolationKind::CapacityExceeded: return "CapacityExceeded";
        case ViolationKind::TimeWindowViolated: return "TimeWindowViolated";
        case ViolationKind::HorizonViolated: return "HorizonViolated";
    }
    return "Unknown";
}

Instance::Instance(std::string name, Location depot, TimeWindow horizon, int fleet_size,
                   double capacity, std::vector<Customer> customers)
    : name_(std::move(name)),
      depot_(depot),
      horizon_(horizon),
      fleet_size_(fleet_size),
      capacity_(capacity),
      customers_(std::move(customers)) {
    if (fleet_size_ < 1) throw Error(ErrorKind::InvalidArgument, "fleet size must be positive");
    if (!(horizon_.earliest <= horizon_.latest))
        throw Error(ErrorKind::InvalidArgument, "horizon start after horizon end");
    int max_id = 0;
    for (const auto& c : customers_) {
        if (c.id < 1) throw Error(ErrorKind::InvalidArgument, "customer ids must be positive");
        max_id = std::max(max_id, c.id);
    }
    slot_.assign(static_cast<std::size_t>(max_id) + 1, -1);
    for (std::size_t i = 0; i < customers_.size(); ++i) {
        auto& s = slot_[static_cast<std::size_t>(customers_[i].id)];
        if (s != -1)
            throw Error(ErrorKind::InvalidArgument,
                        "duplicate customer id " + std::to_string(customers_[i].id));
        s = static_cast<int>(i);
    }
}

bool Instance::contains(CustomerId id) const {
    return id >= 0 && static_cast<std::size_t>(id) < slot_.size() &&
           slot_[static_cast<std::size_t>(id)] >= 0;
}

const Customer& Instance::customer(CustomerId id) const {
    if (!contains(id))
        throw Error(ErrorKind::UnknownCustomer, "customer " + std::to_string(id));
    return customers_[static_cast<std::size_t>(slot_[static_cast<std::size_t>(id)])];
}

double euclid(const Location& a, const Location& b) { return std::hypot(a.x - b.x, a.y - b.y); }

RouteSchedule compute_schedule(const Instance& instance, const Route& route) {
    RouteSchedule s;
    s.visits.reserve(route.size());
    Location at = instance.depot();
    double clock = instance.horizon().earliest;
    double load = 0.0;
    for (CustomerId id : route.customer_ids) {
        const Customer& c = instance.customer(id);
        const double leg = euclid(at, c.location);
        Visit v;
        v.id = id;
        v.arrival_time = clock + leg;
        v.service_start = std::max(v.arrival_time, c.window.earliest);
        v.departure_time = v.service_start + c.service_duration;
        load += c.demand;
        v.cumulative_load = load;
        s.travel_distance += leg;
        s.waiting_total += v.service_start - v.arrival_time;
        s.service_total += c.service_duration;
        clock = v.departure_time;
        at = c.location;
        s.visits.push_back(v);
    }
    const double back = euclid(at, instance.depot());
    s.travel_distance += back;
    s.return_arrival = clock + back;
    return s;
}

std::size_t FeasibilityReport::count(ViolationKind kind) const {
    return static_cast<std::size_t>(std::count_if(violations.begin(), violations.end(),
                                                  [kind](const Violation& v) { return v.kind == kind; }));
}

namespace {

std::string fmt_num(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

// Schedule over the known ids only, so a route with a stray id still gets its
// remaining constraints checked.
Route known_part(const Instance& instance, const Route& route) {
    Route r;
    for (CustomerId id : route.customer_ids)
        if (instance.contains(id)) r.customer_ids.push_back(id);
    return r;
}

}  // namespace

FeasibilityReport check_feasibility(const Instance& instance, const Solution& solution) {
    FeasibilityReport report;
    auto add = [&](ViolationKind k, int route, CustomerId c, std::string detail) {
        report.violations.push_back({k, route, c, std::move(detail)});
    };

    std::map<CustomerId, int> seen;  // id -> first route index
    int used = 0;
    for (std::size_t ri = 0; ri < solution.routes.size(); ++ri) {
        const Route& route = solution.routes[ri];
        const int r = static_cast<int>(ri);
        if (!route.empty()) ++used;
        for (CustomerId id : route.customer_ids) {
            if (!instance.contains(id)) {
                add(ViolationKind::MissingCustomer, r, id, "id not in instance");
                continue;
            }
            auto [it, inserted] = seen.emplace(id, r);
            if (!inserted)
                add(ViolationKind::DuplicateVisit, r, id,
                    "also visited by route " + std::to_string(it->second));
        }

        const Route known = known_part(instance, route);
        if (known.empty()) continue;
        const RouteSchedule s = compute_schedule(instance, known);
        if (s.load() > instance.capacity())
            add(ViolationKind::CapacityExceeded, r, 0,
                "load " + fmt_num(s.load()) + " > " + fmt_num(instance.capacity()));
        for (const Visit& v : s.visits) {
            const Customer& c = instance.customer(v.id);
            if (v.service_start > c.window.latest)
                add(ViolationKind::TimeWindowViolated, r, v.id,
                    "service starts " + fmt_num(v.service_start) + " > " + fmt_num(c.window.latest));
        }
        if (s.return_arrival > instance.horizon().latest)
            add(ViolationKind::HorizonViolated, r, 0,
                "returns " + fmt_num(s.return_arrival) + " > " + fmt_num(instance.horizon().latest));
    }
    if (used > instance.fleet_size())
        add(ViolationKind::FleetExceeded, -1, 0,
            std::to_string(used) + " routes > fleet " + std::to_string(instance.fleet_size()));
    for (const Customer& c : instance.customers())
        if (!seen.contains(c.id)) add(ViolationKind::MissingCustomer, -1, c.id, "not visited");
    return report;
}

bool route_feasible(const Instance& instance, const Route& route) {
    const RouteSchedule s = compute_schedule(instance, route);
    if (s.load() > instance.capacity()) return false;
    if (s.return_arrival > instance.horizon().latest) return false;
    for (const Visit& v : s.visits)
        if (v.service_start > instance.customer(v.id).window.latest) return false;
    return true;
}

double route_cost(const Instance& instance, const Route& route) {
    return compute_schedule(instance, route).travel_distance;
}

double solution_cost(const Instance& instance, const Solution& solution) {
    double total = 0.0;
    for (const Route& r : solution.routes) {
        if (r.empty()) continue;
        Location prev = instance.depot();
        for (CustomerId id : r.customer_ids) {
            const Location& here = instance.customer(id).location;
            total += euclid(prev, here);
            prev = here;
        }
        total += euclid(prev, instance.depot());
    }
    return total;
}

Location route_centroid(const Instance& instance, const Route& route) {
    if (route.empty()) throw Error(ErrorKind::EmptyRoute, "centroid of an empty route");
    double sx = 0.0;
    double sy = 0.0;
    for (CustomerId id : route.customer_ids) {
        const Location& p = instance.customer(id).location;
        sx += p.x;
        sy += p.y;
    }
    const double n = static_cast<double>(route.size());
    return {sx / n, sy / n};
}

}  // namespace lens
