#include "lens/evaluation.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "lens/text.hpp"

namespace lens {

double gap(const GapInput& input) {
    const double span = input.random_avg - input.oracle_avg;
    if (span == 0.0) throw Error(ErrorKind::DegenerateBaseline, "random and oracle averages coincide");
    return 100.0 * (input.alg_avg - input.oracle_avg) / span;
}

double SampleGroup::max_improvement() const {
    double m = 0.0;
    for (const Sample* s : samples) m = std::max(m, s->improvement);
    return m;
}

std::vector<SampleGroup> group_by_iteration(const Dataset& dataset) {
    std::map<std::pair<std::string, int>, SampleGroup> groups;
    for (const Sample& s : dataset.samples) {
        SampleGroup& g = groups[{s.run_id, s.iteration}];
        g.run_id = s.run_id;
        g.iteration = s.iteration;
        g.samples.push_back(&s);
    }
    std::vector<SampleGroup> out;
    out.reserve(groups.size());
    for (auto& [key, g] : groups) {
        std::stable_sort(g.samples.begin(), g.samples.end(), [](const Sample* a, const Sample* b) {
            return a->neighborhood_index < b->neighborhood_index;
        });
        out.push_back(std::move(g));
    }
    return out;
}

namespace {

double true_rank(const SampleGroup& g, std::size_t pick) {
    const double y = g.samples[pick]->improvement;
    std::size_t better = 0;
    for (const Sample* s : g.samples) better += s->improvement > y ? 1 : 0;
    return 1.0 + static_cast<double>(better);
}

template <typename PerGroup>
ValidationReport accumulate(std::span<const SampleGroup> groups, PerGroup&& per_group) {
    ValidationReport r;
    for (const SampleGroup& g : groups) {
        if (g.samples.empty() || !(g.max_improvement() > 0.0)) continue;
        const auto [rank, improving, y] = per_group(g);
        r.avg_true_rank += rank;
        r.fraction_improving += improving;
        r.avg_improvement += y;
        ++r.iterations;
    }
    if (r.iterations == 0) throw Error(ErrorKind::NoImprovingIterations, "no iteration has an improving neighborhood");
    const double n = static_cast<double>(r.iterations);
    r.avg_true_rank /= n;
    r.fraction_improving /= n;
    r.avg_improvement /= n;
    return r;
}

struct Triple {
    double rank, improving, y;
};

}  // namespace

ValidationReport validate_selector(std::span<const SampleGroup> groups, const GroupSelector& selector) {
    return accumulate(groups, [&](const SampleGroup& g) {
        const std::size_t pick = selector(g);
        if (pick >= g.samples.size()) throw Error(ErrorKind::InvalidArgument, "selector picked outside its group");
        const double y = g.samples[pick]->improvement;
        return Triple{true_rank(g, pick), y > 0.0 ? 1.0 : 0.0, y};
    });
}

ValidationReport validate_uniform(std::span<const SampleGroup> groups) {
    return accumulate(groups, [](const SampleGroup& g) {
        Triple t{0.0, 0.0, 0.0};
        for (std::size_t j = 0; j < g.samples.size(); ++j) {
            const double y = g.samples[j]->improvement;
            t.rank += true_rank(g, j);
            t.improving += y > 0.0 ? 1.0 : 0.0;
            t.y += y;
        }
        const double n = static_cast<double>(g.samples.size());
        return Triple{t.rank / n, t.improving / n, t.y / n};
    });
}

GroupSelector oracle_selector() {
    return [](const SampleGroup& g) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < g.samples.size(); ++j)
            if (g.samples[j]->improvement > g.samples[best]->improvement) best = j;
        return best;
    };
}

GroupSelector model_selector(const ForestModel& model) {
    return [&model](const SampleGroup& g) {
        std::size_t best = 0;
        double best_p = -1.0;
        for (std::size_t j = 0; j < g.samples.size(); ++j) {
            const double p = predict_potential(model, g.samples[j]->features);
            if (p > best_p) {
                best_p = p;
                best = j;
            }
        }
        return best;
    };
}

std::vector<double> convergence_series(std::span<const std::vector<double>> series) {
    if (series.empty()) throw Error(ErrorKind::EmptySequence, "no traces to average");
    const std::size_t len = series.front().size();
    std::vector<double> mean(len, 0.0);
    for (const auto& s : series) {
        if (s.size() != len)
            throw Error(ErrorKind::LengthMismatch,
                        "trace lengths " + std::to_string(len) + " and " + std::to_string(s.size()) + " differ");
        for (std::size_t t = 0; t < len; ++t) mean[t] += s[t];
    }
    for (double& m : mean) m /= static_cast<double>(series.size());
    return mean;
}

ResultTable result_table(std::vector<std::string> algorithm_names, std::vector<ResultRow> rows) {
    if (rows.empty()) throw Error(ErrorKind::EmptySequence, "result table without rows");
    const std::size_t k = algorithm_names.size();
    ResultTable t;
    t.algorithm_names = std::move(algorithm_names);
    t.average.instance = "Average";
    t.average.algorithms.assign(k, 0.0);
    t.average_gaps.assign(k, 0.0);
    bool all_bks = true;
    double bks_sum = 0.0;
    for (const ResultRow& r : rows) {
        if (r.algorithms.size() != k)
            throw Error(ErrorKind::InvalidArgument, "row " + r.instance + " has the wrong number of columns");
        std::vector<double> gaps;
        for (std::size_t a = 0; a < k; ++a) {
            gaps.push_back(gap({r.algorithms[a], r.oracle, r.random}));
            t.average.algorithms[a] += r.algorithms[a];
            t.average_gaps[a] += gaps.back();
        }
        t.row_gaps.push_back(std::move(gaps));
        t.average.oracle += r.oracle;
        t.average.random += r.random;
        if (r.bks)
            bks_sum += *r.bks;
        else
            all_bks = false;
    }
    const double n = static_cast<double>(rows.size());
    t.average.oracle /= n;
    t.average.random /= n;
    if (all_bks) t.average.bks = bks_sum / n;
    for (std::size_t a = 0; a < k; ++a) {
        t.average.algorithms[a] /= n;
        t.average_gaps[a] /= n;
        t.gap_of_averages.push_back(gap({t.average.algorithms[a], t.average.oracle, t.average.random}));
    }
    t.rows = std::move(rows);
    return t;
}

namespace {

std::vector<std::vector<std::string>> cells(const ResultTable& t) {
    std::vector<std::vector<std::string>> out;
    std::vector<std::string> header{"instance", "bks", "oracle", "random"};
    for (const auto& a : t.algorithm_names) {
        header.push_back(a);
        header.push_back("gap_" + a);
    }
    out.push_back(header);
    auto row = [&](const ResultRow& r, const std::vector<double>& gaps) {
        std::vector<std::string> c{r.instance, r.bks ? format_fixed(*r.bks, 1) : "-", format_fixed(r.oracle, 1),
                                   format_fixed(r.random, 1)};
        for (std::size_t a = 0; a < r.algorithms.size(); ++a) {
            c.push_back(format_fixed(r.algorithms[a], 1));
            c.push_back(format_fixed(gaps[a], 2) + "%");
        }
        out.push_back(std::move(c));
    };
    for (std::size_t i = 0; i < t.rows.size(); ++i) row(t.rows[i], t.row_gaps[i]);
    row(t.average, t.average_gaps);
    std::vector<std::string> ref{"gap_of_averages", "", "", ""};
    for (double g : t.gap_of_averages) {
        ref.emplace_back("");
        ref.push_back(format_fixed(g, 2) + "%");
    }
    out.push_back(std::move(ref));
    return out;
}

}  // namespace

std::string render_tsv(const ResultTable& table) {
    std::ostringstream os;
    for (const auto& r : cells(table)) {
        for (std::size_t c = 0; c < r.size(); ++c) os << (c ? "\t" : "") << r[c];
        os << '\n';
    }
    return os.str();
}

std::string render_text(const ResultTable& table) {
    const auto rows = cells(table);
    std::vector<std::size_t> width(rows.front().size(), 0);
    for (const auto& r : rows)
        for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
    std::ostringstream os;
    for (const auto& r : rows) {
        std::string line;
        for (std::size_t c = 0; c < r.size(); ++c) {
            const std::string pad(width[c] - r[c].size(), ' ');
            line += c == 0 ? r[c] + pad : "  " + pad + r[c];
        }
        while (!line.empty() && line.back() == ' ') line.pop_back();
        os << line << '\n';
    }
    return os.str();
}

std::string render_validation_tsv(const std::vector<std::pair<std::string, ValidationReport>>& reports) {
    std::ostringstream os;
    os << "selector\titerations\tavg_true_rank\tfraction_improving\tavg_improvement\n";
    for (const auto& [name, r] : reports)
        os << name << '\t' << r.iterations << '\t' << format_double(r.avg_true_rank) << '\t'
           << format_double(r.fraction_improving) << '\t' << format_double(r.avg_improvement) << '\n';
    return os.str();
}

}  // namespace lens
