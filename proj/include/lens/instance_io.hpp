#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "lens/model.hpp"

namespace lens {

/// Reads the Solomon/Homberger text layout: name, VEHICLE block with
/// "<m> <Q>", CUSTOMER block with one row per node, id 0 being the depot.
/// Throws ParseError (with the 1-based line number) or InconsistentDepot.
Instance parse_instance(std::string_view text);
Instance read_instance_file(const std::string& path);

/// Fixed-point with the fewest digits that read back to the same double, so
/// parse_instance(write_instance(x)) == x.
std::string write_instance(const Instance& instance);
void write_instance_file(const Instance& instance, const std::string& path);

struct FixedLength {
    double length = 0.0;
};
struct NormalLength {
    double mean = 0.0;
    double stddev = 0.0;
};

struct GenEntry {
    std::variant<FixedLength, NormalLength> length_rule;
    double fraction = 1.0;
};

struct BatchSpec {
    Instance base_instance;
    std::vector<GenEntry> entries;
    std::uint64_t seed = 0;
};

/// The ten (window length, restricted fraction) settings of the R1 family.
std::vector<GenEntry> r1_generation_entries();

/// Feasible range of the window midpoint for a customer: leaving the depot at
/// the horizon start and still being able to return by the horizon end.
std::pair<double, double> midpoint_bounds(const Instance& base, const Customer& c);

/// Throws InfeasibleCustomer when a customer cannot be served on its own.
std::map<CustomerId, double> sample_midpoints(const Instance& base, std::uint64_t seed);

/// Half-up rounding of fraction * n.
std::size_t restricted_count(double fraction, std::size_t n);

std::vector<Instance> generate_batch(const BatchSpec& spec);

/// Synthetic R1-like base instance (uniform integer grid, horizon 230,
/// capacity 200, service 10) for experiments without benchmark files.
Instance make_r1_like_instance(const std::string& name, std::size_t customers, std::uint64_t seed,
                               int fleet_size = 0);

}  // namespace lens
