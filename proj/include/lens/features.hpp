#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "lens/model.hpp"
#include "lens/neighborhood.hpp"

namespace lens {

struct CustomerProperties {
    double waiting_time = 0;
    double closeness = 0;
    double temporal_closeness = 0;
    double centroid_closeness = 0;
    double distance_contribution = 0;
    double tw_length = 0;
    double depot_distance = 0;
    double load = 0;
    double min_greedy_addition_cost = 0;
    double max_gain = 0;
    double possible_delay = 0;

    static constexpr std::size_t kCount = 11;
    static const std::array<const char*, kCount>& names();
    std::array<double, kCount> values() const;
};

struct RouteProperties {
    double route_distance = 0;
    double avg_route_distance = 0;
    double empty_distance = 0;
    double worst_case_fraction = 0;
    double route_duration = 0;
    double avg_route_duration = 0;
    double idle_time = 0;
    double free_capacity = 0;
    double fitting_candidates = 0;
    double expected_fitting_candidates = 0;

    static constexpr std::size_t kCount = 10;
    static const std::array<const char*, kCount>& names();
    std::array<double, kCount> values() const;
};

struct Aggregate {
    double avg = 0;
    double max = 0;
    double min = 0;
    double sum = 0;
    double std = 0;  // population
};

/// Throws EmptySequence.
Aggregate aggregate(std::span<const double> values);

/// Smallest waiting time when serving one client directly after the other
/// (either order), taking service at the first to start at its window
/// start; `penalty` when neither order is feasible.
double time_window_difference(const Instance& instance, const Customer& a, const Customer& b, double penalty);

/// Customer-level properties of c inside the neighborhood; the "other routes"
/// are the neighborhood's routes not containing c. Throws NotInNeighborhood.
CustomerProperties customer_properties(const Instance& instance, const Solution& solution,
                                       const Neighborhood& neighborhood, const std::vector<RouteSchedule>& schedules,
                                       CustomerId c, const SelectorConfig& config);

/// Throws EmptyRoute, NotInNeighborhood.
RouteProperties route_properties(const Instance& instance, const Solution& solution, const Neighborhood& neighborhood,
                                 const std::vector<RouteSchedule>& schedules, int route_index);

using FeatureVector = std::vector<double>;

std::size_t feature_count(int n2);
/// Column names in vector order; its length is feature_count(n2).
std::vector<std::string> feature_names(int n2);

/// [customer count] ++ 11 customer properties x (avg,max,min,sum,std)
/// ++ 10 route properties x (avg,max,min,sum,std) ++ route distance for
/// every ordered member pair (i != j) in ordered_members order.
FeatureVector extract_features(const Instance& instance, const Solution& solution, const Neighborhood& neighborhood,
                               const std::vector<RouteSchedule>& schedules, const SelectorConfig& config);

FeatureVector extract_features(const Instance& instance, const Solution& solution, const Neighborhood& neighborhood,
                               const SelectorConfig& config);

}  // namespace lens
