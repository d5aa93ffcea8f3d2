#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "lens/learning.hpp"
#include "lens/rng.hpp"
#include "lens/text.hpp"

namespace lens {

namespace {

constexpr std::string_view kFixedColumns[] = {"run_id", "iteration", "neighborhood_index", "y"};

[[noreturn]] void bad_row(std::size_t line, const std::string& what) {
    throw Error(ErrorKind::ParseError, "dataset line " + std::to_string(line) + ": " + what);
}

std::size_t half_up(double ratio, std::size_t n) {
    return std::min(n, static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n) + 0.5)));
}

Dataset subset(const Dataset& d, const std::vector<std::size_t>& idx) {
    Dataset out;
    out.feature_names = d.feature_names;
    out.samples.reserve(idx.size());
    for (std::size_t i : idx) out.samples.push_back(d.samples[i]);
    return out;
}

}  // namespace

void Dataset::append(const Dataset& other) {
    if (samples.empty() && feature_names.empty()) feature_names = other.feature_names;
    if (feature_names != other.feature_names)
        throw Error(ErrorKind::DimensionMismatch, "datasets have different feature manifests");
    samples.insert(samples.end(), other.samples.begin(), other.samples.end());
}

std::string write_dataset(const Dataset& dataset) {
    std::ostringstream os;
    for (std::size_t i = 0; i < std::size(kFixedColumns); ++i) os << (i ? "\t" : "") << kFixedColumns[i];
    for (const auto& n : dataset.feature_names) os << '\t' << n;
    os << '\n';
    for (const Sample& s : dataset.samples) {
        if (s.features.size() != dataset.feature_names.size())
            throw Error(ErrorKind::DimensionMismatch, "sample width differs from the manifest");
        os << s.run_id << '\t' << s.iteration << '\t' << s.neighborhood_index << '\t' << format_double(s.improvement);
        for (double v : s.features) os << '\t' << format_double(v);
        os << '\n';
    }
    return os.str();
}

Dataset parse_dataset(std::string_view text) {
    const auto lines = split_lines(text);
    if (lines.empty() || lines.front().empty()) throw Error(ErrorKind::ParseError, "dataset has no header");
    const auto header = split_on(lines.front(), '\t');
    if (header.size() < std::size(kFixedColumns)) bad_row(1, "header lacks the fixed columns");
    for (std::size_t i = 0; i < std::size(kFixedColumns); ++i)
        if (header[i] != kFixedColumns[i]) bad_row(1, "expected column '" + std::string(kFixedColumns[i]) + "'");

    Dataset d;
    for (std::size_t i = std::size(kFixedColumns); i < header.size(); ++i) d.feature_names.emplace_back(header[i]);
    for (std::size_t ln = 1; ln < lines.size(); ++ln) {
        if (lines[ln].empty()) continue;
        const auto cells = split_on(lines[ln], '\t');
        if (cells.size() != header.size())
            bad_row(ln + 1, "expected " + std::to_string(header.size()) + " cells, found " + std::to_string(cells.size()));
        Sample s;
        s.run_id = std::string(cells[0]);
        long long it = 0, j = 0;
        if (!parse_int(cells[1], it) || !parse_int(cells[2], j)) bad_row(ln + 1, "bad iteration or index");
        s.iteration = static_cast<int>(it);
        s.neighborhood_index = static_cast<int>(j);
        if (!parse_double(cells[3], s.improvement) || !(s.improvement >= 0.0)) bad_row(ln + 1, "bad improvement");
        s.features.resize(d.feature_names.size());
        for (std::size_t f = 0; f < s.features.size(); ++f)
            if (!parse_double(cells[f + std::size(kFixedColumns)], s.features[f])) bad_row(ln + 1, "bad feature value");
        d.samples.push_back(std::move(s));
    }
    return d;
}

void save_dataset(const Dataset& dataset, const std::string& path) { write_file_atomic(path, write_dataset(dataset)); }

Dataset load_dataset(const std::string& path) { return parse_dataset(read_file(path)); }

std::vector<int> label(const Dataset& dataset, double threshold) {
    std::vector<int> labels;
    labels.reserve(dataset.size());
    for (const Sample& s : dataset.samples) labels.push_back(s.improvement > threshold ? 1 : 0);
    return labels;
}

DatasetSplit split(const Dataset& dataset, double ratio, std::uint64_t seed) {
    if (!(ratio > 0.0 && ratio < 1.0)) throw Error(ErrorKind::InvalidArgument, "split ratio must lie in (0, 1)");
    std::vector<std::size_t> idx(dataset.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng(seed);
    shuffle(std::span<std::size_t>(idx), rng);
    const std::size_t cut = half_up(ratio, idx.size());
    std::vector<std::size_t> a(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(cut));
    std::vector<std::size_t> b(idx.begin() + static_cast<std::ptrdiff_t>(cut), idx.end());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    return {subset(dataset, a), subset(dataset, b)};
}

DatasetSplit split_by_iteration(const Dataset& dataset, double ratio, std::uint64_t seed) {
    if (!(ratio > 0.0 && ratio < 1.0)) throw Error(ErrorKind::InvalidArgument, "split ratio must lie in (0, 1)");
    std::map<std::pair<std::string, int>, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < dataset.size(); ++i)
        groups[{dataset.samples[i].run_id, dataset.samples[i].iteration}].push_back(i);
    std::vector<const std::vector<std::size_t>*> order;
    for (const auto& [key, members] : groups) order.push_back(&members);
    Rng rng(seed);
    shuffle(std::span<const std::vector<std::size_t>*>(order), rng);
    const std::size_t cut = half_up(ratio, order.size());
    std::vector<std::size_t> a, b;
    for (std::size_t g = 0; g < order.size(); ++g) {
        auto& dst = g < cut ? a : b;
        dst.insert(dst.end(), order[g]->begin(), order[g]->end());
    }
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    return {subset(dataset, a), subset(dataset, b)};
}

std::vector<double> balance_weights(std::span<const int> labels) {
    std::size_t pos = 0;
    for (int l : labels) pos += l == 1 ? 1 : 0;
    const std::size_t neg = labels.size() - pos;
    if (pos == 0 || neg == 0) throw Error(ErrorKind::SingleClass, "balancing needs both classes");
    const double n = static_cast<double>(labels.size());
    const double w_pos = n / (2.0 * static_cast<double>(pos));
    const double w_neg = n / (2.0 * static_cast<double>(neg));
    std::vector<double> w;
    w.reserve(labels.size());
    for (int l : labels) w.push_back(l == 1 ? w_pos : w_neg);
    return w;
}

FeatureVector Scaler::transform(std::span<const double> x) const {
    if (x.size() != mean.size())
        throw Error(ErrorKind::DimensionMismatch,
                    "vector has " + std::to_string(x.size()) + " features, scaler has " + std::to_string(mean.size()));
    FeatureVector out(x.size());
    for (std::size_t f = 0; f < x.size(); ++f) out[f] = (x[f] - mean[f]) / stddev[f];
    return out;
}

Scaler fit_scaler(std::span<const FeatureVector> training) {
    if (training.empty()) throw Error(ErrorKind::EmptySequence, "scaler needs training data");
    const std::size_t F = training.front().size();
    Scaler s;
    s.mean.assign(F, 0.0);
    s.stddev.assign(F, 0.0);
    const double n = static_cast<double>(training.size());
    for (const auto& x : training) {
        if (x.size() != F) throw Error(ErrorKind::DimensionMismatch, "ragged training matrix");
        for (std::size_t f = 0; f < F; ++f) s.mean[f] += x[f];
    }
    for (double& m : s.mean) m /= n;
    for (const auto& x : training)
        for (std::size_t f = 0; f < F; ++f) s.stddev[f] += (x[f] - s.mean[f]) * (x[f] - s.mean[f]);
    for (double& sd : s.stddev) {
        sd = std::sqrt(sd / n);
        if (!(sd > 0.0)) sd = 1.0;
    }
    return s;
}

FeatureVector transform(const Scaler& scaler, std::span<const double> x) { return scaler.transform(x); }

}  // namespace lens
