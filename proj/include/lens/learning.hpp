#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lens/features.hpp"

namespace lens {

struct Sample {
    std::string run_id;
    int iteration = 0;
    int neighborhood_index = 0;  // 1-based within its iteration
    FeatureVector features;
    double improvement = 0.0;
};

struct Dataset {
    std::vector<std::string> feature_names;
    std::vector<Sample> samples;

    std::size_t size() const { return samples.size(); }
    /// Throws DimensionMismatch if the manifests differ.
    void append(const Dataset& other);
};

/// Tab-separated: run_id, iteration, neighborhood_index, y, then one column
/// per feature name. Doubles are written in shortest round-trip form.
std::string write_dataset(const Dataset& dataset);
Dataset parse_dataset(std::string_view text);
void save_dataset(const Dataset& dataset, const std::string& path);
Dataset load_dataset(const std::string& path);

/// 1 iff improvement > threshold.
std::vector<int> label(const Dataset& dataset, double threshold);

struct DatasetSplit {
    Dataset training;
    Dataset validation;
};

/// Seeded partition into round(ratio * N) training samples and the rest.
DatasetSplit split(const Dataset& dataset, double ratio, std::uint64_t seed);

/// Same, but keeps the samples of one (run_id, iteration) together so the
/// validation side can be scored per iteration.
DatasetSplit split_by_iteration(const Dataset& dataset, double ratio, std::uint64_t seed);

/// N / (2 * count_c) for each sample's class c. Throws SingleClass.
std::vector<double> balance_weights(std::span<const int> labels);

struct Scaler {
    std::vector<double> mean;
    std::vector<double> stddev;

    FeatureVector transform(std::span<const double> x) const;
};

/// Per-feature z-score statistics; zero-variance features get stddev 1.
Scaler fit_scaler(std::span<const FeatureVector> training);
FeatureVector transform(const Scaler& scaler, std::span<const double> x);

struct ForestParams {
    int tree_count = 100;
    int max_depth = 16;
    int min_leaf = 5;
    int features_per_split = 0;  // 0: ceil(sqrt(F))
    bool weighted_bootstrap = true;
    int jobs = 0;                // 0: hardware concurrency
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double p_negative = 0.0;
    double p_positive = 0.0;
};

struct Tree {
    std::vector<TreeNode> nodes;  // root at 0

    /// Positive-class frequency of the leaf reached by an already scaled x.
    double leaf_positive(std::span<const double> scaled) const;
};

struct ForestModel {
    static constexpr int kVersion = 1;

    std::vector<std::string> feature_names;
    Scaler scaler;
    std::vector<Tree> trees;
    ForestParams params;
    std::size_t sample_count = 0;
    double threshold = 0.0;
    int version = kVersion;

    std::size_t feature_count() const { return scaler.mean.size(); }
};

/// Fits the scaler on `training`, then grows tree_count greedy Gini trees,
/// each on its own bootstrap resample and trying a random subset of
/// features per node. With weighted_bootstrap the resample is drawn in
/// proportion to `weights` and the Gini counts are plain; otherwise the
/// resample is uniform and the Gini counts are weighted. Throws SingleClass.
ForestModel train_forest(std::span<const FeatureVector> training, std::span<const int> labels,
                         std::span<const double> weights, const ForestParams& params, std::uint64_t seed,
                         std::vector<std::string> feature_names = {}, double threshold = 0.0);

/// Mean over trees of the leaf positive-class frequency. Throws DimensionMismatch.
double predict_potential(const ForestModel& model, std::span<const double> features);

std::string serialize_model(const ForestModel& model);
/// Throws VersionMismatch, CorruptModel.
ForestModel deserialize_model(std::string_view text);
void save_model(const ForestModel& model, const std::string& path);
ForestModel load_model(const std::string& path);

/// Label, weight and train on a dataset in one step.
ForestModel train_on_dataset(const Dataset& dataset, double threshold, const ForestParams& params, std::uint64_t seed);

double accuracy(const ForestModel& model, const Dataset& dataset, double threshold);

}  // namespace lens
