#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "lens/learning.hpp"
#include "lens/parallel.hpp"
#include "lens/rng.hpp"
#include "lens/text.hpp"

namespace lens {

namespace {

constexpr std::string_view kMagic = "lens-forest v";

struct Split {
    int feature = -1;
    double threshold = 0.0;
    double impurity = 0.0;
};

double gini(double neg, double pos) {
    const double total = neg + pos;
    if (total <= 0.0) return 0.0;
    const double a = neg / total;
    const double b = pos / total;
    return 1.0 - a * a - b * b;
}

class TreeBuilder {
public:
    TreeBuilder(const std::vector<FeatureVector>& x, std::span<const int> y, std::vector<double> w,
                const ForestParams& params, int features_per_split, Rng& rng)
        : x_(x), y_(y), w_(std::move(w)), params_(params), mtry_(features_per_split), rng_(rng) {
        feature_pool_.resize(x_.front().size());
        std::iota(feature_pool_.begin(), feature_pool_.end(), 0);
    }

    Tree build(std::vector<std::size_t> rows) {
        grow(rows, 0);
        return std::move(tree_);
    }

private:
    int grow(std::vector<std::size_t>& rows, int depth) {
        double neg = 0.0, pos = 0.0;
        for (std::size_t r : rows) (y_[r] ? pos : neg) += w_[r];
        const int id = static_cast<int>(tree_.nodes.size());
        TreeNode leaf;
        leaf.p_negative = neg / (neg + pos);
        leaf.p_positive = pos / (neg + pos);
        tree_.nodes.push_back(leaf);

        const bool pure = neg == 0.0 || pos == 0.0;
        if (pure || depth >= params_.max_depth || rows.size() < 2 * static_cast<std::size_t>(params_.min_leaf))
            return id;
        const Split s = best_split(rows, neg, pos);
        if (s.feature < 0) return id;

        std::vector<std::size_t> left, right;
        for (std::size_t r : rows) (x_[r][static_cast<std::size_t>(s.feature)] <= s.threshold ? left : right).push_back(r);
        rows.clear();
        rows.shrink_to_fit();
        const int l = grow(left, depth + 1);
        const int r = grow(right, depth + 1);
        TreeNode& node = tree_.nodes[static_cast<std::size_t>(id)];
        node.feature = s.feature;
        node.threshold = s.threshold;
        node.left = l;
        node.right = r;
        return id;
    }

    Split best_split(const std::vector<std::size_t>& rows, double neg_total, double pos_total) {
        // Partial Fisher-Yates: the first mtry entries become the candidates.
        const std::size_t F = feature_pool_.size();
        for (std::size_t i = 0; i < static_cast<std::size_t>(mtry_); ++i) {
            const auto j = i + static_cast<std::size_t>(uniform_index(rng_, F - i));
            std::swap(feature_pool_[i], feature_pool_[j]);
        }
        Split best;
        best.impurity = std::numeric_limits<double>::infinity();
        const std::size_t min_leaf = static_cast<std::size_t>(std::max(1, params_.min_leaf));
        std::vector<std::pair<double, std::size_t>> col(rows.size());
        for (int c = 0; c < mtry_; ++c) {
            const int f = feature_pool_[static_cast<std::size_t>(c)];
            for (std::size_t k = 0; k < rows.size(); ++k) col[k] = {x_[rows[k]][static_cast<std::size_t>(f)], rows[k]};
            std::sort(col.begin(), col.end());
            if (col.front().first == col.back().first) continue;
            double ln = 0.0, lp = 0.0;
            for (std::size_t k = 0; k + 1 < col.size(); ++k) {
                const std::size_t r = col[k].second;
                (y_[r] ? lp : ln) += w_[r];
                if (col[k].first == col[k + 1].first) continue;
                const std::size_t left_count = k + 1;
                if (left_count < min_leaf || col.size() - left_count < min_leaf) continue;
                const double rn = neg_total - ln, rp = pos_total - lp;
                const double impurity = (ln + lp) * gini(ln, lp) + (rn + rp) * gini(rn, rp);
                if (impurity < best.impurity) {
                    const double a = col[k].first, b = col[k + 1].first;
                    double t = a + (b - a) / 2.0;
                    if (!(t < b)) t = a;
                    best = {f, t, impurity};
                }
            }
        }
        return best;
    }

    const std::vector<FeatureVector>& x_;
    std::span<const int> y_;
    std::vector<double> w_;
    const ForestParams& params_;
    int mtry_;
    Rng& rng_;
    std::vector<int> feature_pool_;
    Tree tree_;
};

[[noreturn]] void corrupt(const std::string& what) { throw Error(ErrorKind::CorruptModel, what); }

class LineReader {
public:
    explicit LineReader(std::string_view text) : lines_(split_lines(text)) {}

    std::vector<std::string_view> next(std::string_view key, std::size_t expected_fields) {
        if (at_ >= lines_.size()) corrupt("model file ends before '" + std::string(key) + "'");
        auto fields = split_on(lines_[at_], '\t');
        if (fields.front() != key)
            corrupt("line " + std::to_string(at_ + 1) + ": expected '" + std::string(key) + "'");
        if (expected_fields != 0 && fields.size() != expected_fields + 1)
            corrupt("line " + std::to_string(at_ + 1) + ": wrong field count");
        ++at_;
        fields.erase(fields.begin());
        return fields;
    }

    std::string_view raw() {
        if (at_ >= lines_.size()) corrupt("model file is truncated");
        return lines_[at_++];
    }

private:
    std::vector<std::string_view> lines_;
    std::size_t at_ = 0;
};

double to_double(std::string_view s) {
    double v = 0.0;
    if (!parse_double(s, v)) corrupt("bad number '" + std::string(s) + "'");
    return v;
}

long long to_int(std::string_view s) {
    long long v = 0;
    if (!parse_int(s, v)) corrupt("bad integer '" + std::string(s) + "'");
    return v;
}

}  // namespace

double Tree::leaf_positive(std::span<const double> scaled) const {
    std::size_t at = 0;
    while (nodes[at].feature >= 0) {
        const TreeNode& n = nodes[at];
        at = static_cast<std::size_t>(scaled[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
    }
    return nodes[at].p_positive;
}

ForestModel train_forest(std::span<const FeatureVector> training, std::span<const int> labels,
                         std::span<const double> weights, const ForestParams& params, std::uint64_t seed,
                         std::vector<std::string> feature_names, double threshold) {
    if (training.size() != labels.size() || training.size() != weights.size())
        throw Error(ErrorKind::DimensionMismatch, "training rows, labels and weights differ in length");
    if (params.tree_count < 1) throw Error(ErrorKind::InvalidArgument, "tree_count must be at least 1");
    const bool has_pos = std::find(labels.begin(), labels.end(), 1) != labels.end();
    const bool has_neg = std::find(labels.begin(), labels.end(), 0) != labels.end();
    if (training.size() < 2 || !has_pos || !has_neg) throw Error(ErrorKind::SingleClass, "training needs both classes");

    ForestModel model;
    model.scaler = fit_scaler(training);
    const std::size_t F = model.feature_count();
    if (feature_names.empty())
        for (std::size_t f = 0; f < F; ++f) feature_names.push_back("f" + std::to_string(f));
    if (feature_names.size() != F) throw Error(ErrorKind::DimensionMismatch, "feature names do not match the data");
    model.feature_names = std::move(feature_names);
    model.params = params;
    model.sample_count = training.size();
    model.threshold = threshold;

    std::vector<FeatureVector> scaled;
    scaled.reserve(training.size());
    for (const auto& x : training) scaled.push_back(model.scaler.transform(x));

    const int mtry = std::clamp(params.features_per_split > 0
                                    ? params.features_per_split
                                    : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(F)))),
                                1, static_cast<int>(F));
    model.params.features_per_split = mtry;

    std::vector<double> cumulative(weights.size());
    std::partial_sum(weights.begin(), weights.end(), cumulative.begin());
    const double total = cumulative.back();
    if (!(total > 0.0)) throw Error(ErrorKind::InvalidArgument, "weights must have positive mass");

    const std::size_t N = training.size();
    model.trees.resize(static_cast<std::size_t>(params.tree_count));
    parallel_for(model.trees.size(), params.jobs, [&](std::size_t t) {
        Rng rng(derive_seed(seed, t));
        std::vector<std::size_t> rows(N);
        for (auto& r : rows) {
            if (params.weighted_bootstrap) {
                const double u = uniform01(rng) * total;
                const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
                r = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), N - 1);
            } else {
                r = static_cast<std::size_t>(uniform_index(rng, N));
            }
        }
        std::sort(rows.begin(), rows.end());
        std::vector<double> node_weights =
            params.weighted_bootstrap ? std::vector<double>(N, 1.0) : std::vector<double>(weights.begin(), weights.end());
        TreeBuilder builder(scaled, labels, std::move(node_weights), params, mtry, rng);
        model.trees[t] = builder.build(std::move(rows));
    });
    return model;
}

double predict_potential(const ForestModel& model, std::span<const double> features) {
    const FeatureVector scaled = model.scaler.transform(features);
    double sum = 0.0;
    for (const Tree& t : model.trees) sum += t.leaf_positive(scaled);
    return sum / static_cast<double>(model.trees.size());
}

std::string serialize_model(const ForestModel& model) {
    std::ostringstream os;
    os << kMagic << model.version << '\n';
    os << "features\t" << model.feature_count() << '\n';
    os << "names";
    for (const auto& n : model.feature_names) os << '\t' << n;
    os << "\nmean";
    for (double v : model.scaler.mean) os << '\t' << format_double(v);
    os << "\nstddev";
    for (double v : model.scaler.stddev) os << '\t' << format_double(v);
    const ForestParams& p = model.params;
    os << "\nparams\t" << p.tree_count << '\t' << p.max_depth << '\t' << p.min_leaf << '\t' << p.features_per_split
       << '\t' << (p.weighted_bootstrap ? 1 : 0) << '\n';
    os << "meta\t" << model.sample_count << '\t' << format_double(model.threshold) << '\n';
    for (const Tree& t : model.trees) {
        os << "tree\t" << t.nodes.size() << '\n';
        for (const TreeNode& n : t.nodes)
            os << n.feature << '\t' << format_double(n.threshold) << '\t' << n.left << '\t' << n.right << '\t'
               << format_double(n.p_negative) << '\t' << format_double(n.p_positive) << '\n';
    }
    os << "end\n";
    return os.str();
}

ForestModel deserialize_model(std::string_view text) {
    LineReader in(text);
    const std::string_view head = in.raw();
    if (head.substr(0, kMagic.size()) != kMagic) corrupt("not a forest model file");
    long long version = 0;
    if (!parse_int(head.substr(kMagic.size()), version)) corrupt("unreadable version tag");
    if (version != ForestModel::kVersion)
        throw Error(ErrorKind::VersionMismatch, "model version " + std::to_string(version) + ", expected " +
                                                    std::to_string(ForestModel::kVersion));
    ForestModel m;
    m.version = static_cast<int>(version);
    const long long F = to_int(in.next("features", 1)[0]);
    if (F < 1) corrupt("feature count must be positive");
    const auto uF = static_cast<std::size_t>(F);
    for (auto s : in.next("names", uF)) m.feature_names.emplace_back(s);
    for (auto s : in.next("mean", uF)) m.scaler.mean.push_back(to_double(s));
    for (auto s : in.next("stddev", uF)) m.scaler.stddev.push_back(to_double(s));
    const auto p = in.next("params", 5);
    m.params.tree_count = static_cast<int>(to_int(p[0]));
    m.params.max_depth = static_cast<int>(to_int(p[1]));
    m.params.min_leaf = static_cast<int>(to_int(p[2]));
    m.params.features_per_split = static_cast<int>(to_int(p[3]));
    m.params.weighted_bootstrap = to_int(p[4]) != 0;
    const auto meta = in.next("meta", 2);
    m.sample_count = static_cast<std::size_t>(to_int(meta[0]));
    m.threshold = to_double(meta[1]);
    if (m.params.tree_count < 1) corrupt("tree count must be positive");

    for (int t = 0; t < m.params.tree_count; ++t) {
        const long long count = to_int(in.next("tree", 1)[0]);
        if (count < 1) corrupt("empty tree");
        Tree tree;
        for (long long k = 0; k < count; ++k) {
            const auto f = split_on(in.raw(), '\t');
            if (f.size() != 6) corrupt("tree node with wrong field count");
            TreeNode n;
            n.feature = static_cast<int>(to_int(f[0]));
            n.threshold = to_double(f[1]);
            n.left = static_cast<int>(to_int(f[2]));
            n.right = static_cast<int>(to_int(f[3]));
            n.p_negative = to_double(f[4]);
            n.p_positive = to_double(f[5]);
            if (n.feature >= F) corrupt("split on unknown feature");
            if (n.feature >= 0 && (n.left <= k || n.right <= k || n.left >= count || n.right >= count))
                corrupt("child index out of range");
            tree.nodes.push_back(n);
        }
        m.trees.push_back(std::move(tree));
    }
    in.next("end", 0);
    return m;
}

void save_model(const ForestModel& model, const std::string& path) { write_file_atomic(path, serialize_model(model)); }

ForestModel load_model(const std::string& path) { return deserialize_model(read_file(path)); }

ForestModel train_on_dataset(const Dataset& dataset, double threshold, const ForestParams& params, std::uint64_t seed) {
    const std::vector<int> labels = label(dataset, threshold);
    const std::vector<double> weights = balance_weights(labels);
    std::vector<FeatureVector> x;
    x.reserve(dataset.size());
    for (const Sample& s : dataset.samples) x.push_back(s.features);
    return train_forest(x, labels, weights, params, seed, dataset.feature_names, threshold);
}

double accuracy(const ForestModel& model, const Dataset& dataset, double threshold) {
    if (dataset.size() == 0) throw Error(ErrorKind::EmptySequence, "accuracy of an empty dataset");
    std::size_t hits = 0;
    for (const Sample& s : dataset.samples) {
        const int predicted = predict_potential(model, s.features) > 0.5 ? 1 : 0;
        hits += predicted == (s.improvement > threshold ? 1 : 0) ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(dataset.size());
}

}  // namespace lens
