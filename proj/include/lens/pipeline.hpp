#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lens/learning.hpp"
#include "lens/model.hpp"
#include "lens/neighborhood.hpp"
#include "lens/repair.hpp"

namespace lens {

enum class SelectorKind { Random, Oracle, Model };

std::string_view to_string(SelectorKind kind);

struct IterationRecord {
    int iteration = 0;                // 1-based
    int chosen = 0;                   // 1-based index j* of the destroyed neighborhood
    std::vector<double> improvements; // y_1..y_n1; NaN where the candidate was not repaired
    bool accepted = false;
    double current_cost = 0.0;
    double best_cost = 0.0;
};

struct RunTrace {
    int n1 = 0;
    double initial_cost = 0.0;
    std::vector<IterationRecord> records;

    /// Best cost after each iteration, prefixed by the initial cost.
    std::vector<double> best_series() const;
};

using ProgressFn = std::function<void(const std::string& run_id, const IterationRecord& record)>;

struct RunConfig {
    int iterations = 100;
    int n1 = 10;
    SelectorKind selector = SelectorKind::Random;
    std::shared_ptr<const ForestModel> model;  // required for SelectorKind::Model
    std::uint64_t seed = 0;
    SelectorConfig selector_config;
    RepairConfig repair_config;
    int jobs = 1;  // concurrent repairs within an iteration; 0: all cores
    ProgressFn progress;
};

struct RunResult {
    Solution final_solution;
    Solution best_solution;
    RunTrace trace;
};

/// Hill-climbing acceptance: strictly cheaper only.
bool accept(double candidate_cost, double current_cost);

/// Uniform 1-based index in 1..n1.
int select_random(int n1, Rng& rng);
/// 1-based argmax; ties go to the lowest index. NaN entries never win.
int select_oracle(std::span<const double> improvements);

/// Creates n1 neighborhoods from `rng`, scores each with the model and
/// returns the one with the highest potential (lowest index on ties).
/// Throws DimensionMismatch if the model was trained on another layout.
Neighborhood lens_select(const Instance& instance, const Solution& solution, const ForestModel& model,
                         const SelectorConfig& config, int n1, Rng& rng);

/// Iterated destroy/repair from a feasible start. Oracle repairs every
/// candidate; Random and Model repair only the chosen one. Throws
/// InfeasibleInitial.
RunResult lns_run(const Instance& instance, const Solution& initial, const RunConfig& config);

/// Same loop, but every candidate is featurized and repaired and stored as
/// a sample tagged with `run_id`. Selection follows config.selector (Random
/// or Model).
RunResult collect_run(const Instance& instance, const Solution& initial, const RunConfig& config,
                      const std::string& run_id, Dataset& sink);

/// `runs` collection runs per instance, each from construct_initial and
/// seeded by derive_seed(config.seed, instance index, run). Samples are
/// ordered by instance, run, iteration, neighborhood index.
Dataset collect_data(std::span<const Instance> instances, const RunConfig& config, int runs);

struct TrainerConfig {
    ForestParams forest;
    double threshold = 0.0;
    std::uint64_t seed = 0;
};

struct GuidelinesResult {
    std::vector<std::shared_ptr<const ForestModel>> models;  // ML1..MLk
    std::vector<Dataset> round_datasets;
    Dataset cumulative;
};

/// Round 1 collects with Random and trains ML1; round k collects with
/// ML(k-1) and trains MLk on the union of all rounds. When `output_dir` is
/// set, round_<k>.tsv and ml<k>.model are written there as each round ends.
GuidelinesResult guidelines_loop(std::span<const Instance> instances, int rounds, const RunConfig& config, int runs,
                                 const TrainerConfig& trainer, const std::optional<std::string>& output_dir = {});

/// Columns: iteration, chosen_j, y_1..y_n1, accepted, current_cost,
/// best_cost. Row 0 holds the initial cost.
std::string write_trace(const RunTrace& trace);
RunTrace parse_trace(std::string_view text);

/// One line of space-separated customer ids per nonempty route.
std::string write_solution(const Solution& solution);

}  // namespace lens
