#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lens/learning.hpp"

namespace lens {

struct GapInput {
    double alg_avg = 0.0;
    double oracle_avg = 0.0;
    double random_avg = 0.0;
};

/// 100 * (alg - oracle) / (random - oracle). Not clamped. Throws DegenerateBaseline.
double gap(const GapInput& input);

/// The samples of one (run_id, iteration), ordered by neighborhood index.
struct SampleGroup {
    std::string run_id;
    int iteration = 0;
    std::vector<const Sample*> samples;

    double max_improvement() const;
};

std::vector<SampleGroup> group_by_iteration(const Dataset& dataset);

struct ValidationReport {
    double avg_true_rank = 0.0;
    double fraction_improving = 0.0;
    double avg_improvement = 0.0;
    std::size_t iterations = 0;  // groups with at least one improving sample
};

/// Returns the 0-based position of the pick within the group.
using GroupSelector = std::function<std::size_t(const SampleGroup&)>;

/// Over groups whose best y is strictly positive: rank of the pick as
/// 1 + number of strictly better samples, whether it improved, and its y.
/// Throws NoImprovingIterations.
ValidationReport validate_selector(std::span<const SampleGroup> groups, const GroupSelector& selector);

/// The exact expectation of validate_selector under a uniform random pick.
ValidationReport validate_uniform(std::span<const SampleGroup> groups);

GroupSelector oracle_selector();
/// Highest predicted potential, lowest index on ties.
GroupSelector model_selector(const ForestModel& model);

/// Per-iteration mean of the series. Throws LengthMismatch, EmptySequence.
std::vector<double> convergence_series(std::span<const std::vector<double>> best_cost_series);

struct ResultRow {
    std::string instance;
    std::optional<double> bks;
    double oracle = 0.0;
    double random = 0.0;
    std::vector<double> algorithms;  // one average total distance per algorithm column
};

struct ResultTable {
    std::vector<std::string> algorithm_names;
    std::vector<ResultRow> rows;
    ResultRow average;
    std::vector<std::vector<double>> row_gaps;  // [row][algorithm]
    /// Average-row gap: mean of the row gaps.
    std::vector<double> average_gaps;
    /// Reference value: gap of the averaged totals.
    std::vector<double> gap_of_averages;
};

/// Throws InvalidArgument if rows disagree with the algorithm list, and
/// DegenerateBaseline through gap().
ResultTable result_table(std::vector<std::string> algorithm_names, std::vector<ResultRow> rows);

std::string render_tsv(const ResultTable& table);
std::string render_text(const ResultTable& table);

std::string render_validation_tsv(const std::vector<std::pair<std::string, ValidationReport>>& reports);

}  // namespace lens
