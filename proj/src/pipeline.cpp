#include "lens/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>

#include "lens/features.hpp"
#include "lens/parallel.hpp"
#include "lens/text.hpp"

namespace lens {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Stream tags for derive_seed, so candidate creation, selection and repair
// draw from unrelated sequences.
enum : std::uint64_t { kCreateStream = 1, kSelectStream = 2, kRepairStream = 3 };

struct Candidate {
    Neighborhood neighborhood;
    FeatureVector features;
    std::optional<Solution> repaired;
    double cost = kNaN;
    double y = kNaN;
};

void check_model_layout(const ForestModel& model, const SelectorConfig& config) {
    const std::size_t expected = feature_count(config.n2);
    if (model.feature_count() != expected)
        throw Error(ErrorKind::DimensionMismatch, "model expects " + std::to_string(model.feature_count()) +
                                                      " features, neighborhoods with n2 = " +
                                                      std::to_string(config.n2) + " give " + std::to_string(expected));
}

int argmax_lowest(std::span<const double> values) {
    int best = 0;
    for (std::size_t j = 1; j < values.size(); ++j)
        if (values[j] > values[static_cast<std::size_t>(best)] || std::isnan(values[static_cast<std::size_t>(best)]))
            if (!std::isnan(values[j])) best = static_cast<int>(j);
    return best;
}

void repair_candidate(const Instance& instance, const Solution& current, double current_cost, Candidate& cand,
                      const RepairConfig& config, std::uint64_t seed) {
    const Extracted ex = extract_subproblem(instance, current, cand.neighborhood);
    Rng rng(seed);
    std::vector<Route> routes = repair_any(ex.sub, ex.warm_start, config, rng);
    auto sorted_ids = [](std::vector<Route> rs) {
        std::vector<std::vector<CustomerId>> ids;
        for (auto& r : rs)
            if (!r.empty()) ids.push_back(std::move(r.customer_ids));
        std::sort(ids.begin(), ids.end());
        return ids;
    };
    // An unchanged plan keeps the current solution as is; reinserting the
    // same routes in another slot order would only add rounding noise.
    if (sorted_ids(routes) == sorted_ids(ex.warm_start)) {
        cand.repaired = current;
        cand.cost = current_cost;
        cand.y = 0.0;
        return;
    }
    cand.repaired = apply_repair(current, cand.neighborhood, routes);
    cand.cost = solution_cost(instance, *cand.repaired);
    cand.y = improvement(current_cost, cand.cost);
}

RunResult run_loop(const Instance& instance, const Solution& initial, const RunConfig& config,
                   const std::string& run_id, Dataset* sink) {
    if (config.n1 < 1) throw Error(ErrorKind::InvalidArgument, "n1 must be at least 1");
    if (config.iterations < 0) throw Error(ErrorKind::InvalidArgument, "iterations must be nonnegative");
    const FeasibilityReport report = check_feasibility(instance, initial);
    if (!report.feasible())
        throw Error(ErrorKind::InfeasibleInitial, "initial solution has " + std::to_string(report.violations.size()) +
                                                      " violations");
    const bool use_model = config.selector == SelectorKind::Model;
    if (use_model) {
        if (!config.model) throw Error(ErrorKind::InvalidArgument, "model selector without a model");
        check_model_layout(*config.model, config.selector_config);
    }
    if (sink && config.selector == SelectorKind::Oracle)
        throw Error(ErrorKind::InvalidArgument, "data collection runs with the random or model strategy");
    if (sink && sink->feature_names.empty()) sink->feature_names = feature_names(config.selector_config.n2);

    RunResult out;
    out.final_solution = initial;
    out.best_solution = initial;
    out.trace.n1 = config.n1;
    out.trace.initial_cost = solution_cost(instance, initial);
    double current_cost = out.trace.initial_cost;
    double best_cost = current_cost;
    Rng select_rng(derive_seed(config.seed, kSelectStream));
    const bool repair_all = sink || config.selector == SelectorKind::Oracle;
    const bool featurize = sink || use_model;

    for (int it = 1; it <= config.iterations; ++it) {
        const Solution& current = out.final_solution;
        const auto schedules = compute_schedules(instance, current);
        Rng create_rng(derive_seed(config.seed, kCreateStream, static_cast<std::uint64_t>(it)));
        std::vector<Candidate> cands(static_cast<std::size_t>(config.n1));
        for (auto& c : cands)
            c.neighborhood = create_neighborhood(current, instance, schedules, config.selector_config, create_rng);
        if (featurize)
            for (auto& c : cands)
                c.features = extract_features(instance, current, c.neighborhood, schedules, config.selector_config);

        auto repair_seed = [&](std::size_t j) {
            return derive_seed(derive_seed(config.seed, kRepairStream, static_cast<std::uint64_t>(it)), j);
        };
        if (repair_all)
            parallel_for(cands.size(), config.jobs, [&](std::size_t j) {
                repair_candidate(instance, current, current_cost, cands[j], config.repair_config, repair_seed(j));
            });

        int chosen = 0;
        switch (config.selector) {
            case SelectorKind::Random:
                chosen = select_random(config.n1, select_rng) - 1;
                break;
            case SelectorKind::Oracle: {
                std::vector<double> ys;
                for (const auto& c : cands) ys.push_back(c.y);
                chosen = select_oracle(ys) - 1;
                break;
            }
            case SelectorKind::Model: {
                std::vector<double> p;
                for (const auto& c : cands) p.push_back(predict_potential(*config.model, c.features));
                chosen = argmax_lowest(p);
                break;
            }
        }
        Candidate& pick = cands[static_cast<std::size_t>(chosen)];
        if (!pick.repaired)
            repair_candidate(instance, current, current_cost, pick, config.repair_config,
                             repair_seed(static_cast<std::size_t>(chosen)));

        IterationRecord rec;
        rec.iteration = it;
        rec.chosen = chosen + 1;
        for (const auto& c : cands) rec.improvements.push_back(c.y);
        rec.accepted = accept(pick.cost, current_cost);

        if (sink)
            for (std::size_t j = 0; j < cands.size(); ++j)
                sink->samples.push_back({run_id, it, static_cast<int>(j + 1), std::move(cands[j].features), cands[j].y});

        if (rec.accepted) {
            out.final_solution = std::move(*pick.repaired);
            current_cost = pick.cost;
            if (current_cost < best_cost) {
                best_cost = current_cost;
                out.best_solution = out.final_solution;
            }
        }
        rec.current_cost = current_cost;
        rec.best_cost = best_cost;
        if (config.progress) config.progress(run_id, rec);
        out.trace.records.push_back(std::move(rec));
    }
    return out;
}

}  // namespace

std::string_view to_string(SelectorKind kind) {
    switch (kind) {
        case SelectorKind::Random: return "random";
        case SelectorKind::Oracle: return "oracle";
        case SelectorKind::Model: return "model";
    }
    return "?";
}

std::vector<double> RunTrace::best_series() const {
    std::vector<double> s{initial_cost};
    for (const auto& r : records) s.push_back(r.best_cost);
    return s;
}

bool accept(double candidate_cost, double current_cost) { return candidate_cost < current_cost; }

int select_random(int n1, Rng& rng) {
    if (n1 < 1) throw Error(ErrorKind::InvalidArgument, "n1 must be at least 1");
    return static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(n1))) + 1;
}

int select_oracle(std::span<const double> improvements) {
    if (improvements.empty()) throw Error(ErrorKind::EmptySequence, "oracle over no candidates");
    return argmax_lowest(improvements) + 1;
}

Neighborhood lens_select(const Instance& instance, const Solution& solution, const ForestModel& model,
                         const SelectorConfig& config, int n1, Rng& rng) {
    if (n1 < 1) throw Error(ErrorKind::InvalidArgument, "n1 must be at least 1");
    check_model_layout(model, config);
    const auto schedules = compute_schedules(instance, solution);
    std::vector<Neighborhood> nhs;
    std::vector<double> p;
    for (int j = 0; j < n1; ++j) {
        nhs.push_back(create_neighborhood(solution, instance, schedules, config, rng));
        p.push_back(predict_potential(model, extract_features(instance, solution, nhs.back(), schedules, config)));
    }
    return nhs[static_cast<std::size_t>(argmax_lowest(p))];
}

RunResult lns_run(const Instance& instance, const Solution& initial, const RunConfig& config) {
    return run_loop(instance, initial, config, instance.name(), nullptr);
}

RunResult collect_run(const Instance& instance, const Solution& initial, const RunConfig& config,
                      const std::string& run_id, Dataset& sink) {
    return run_loop(instance, initial, config, run_id, &sink);
}

Dataset collect_data(std::span<const Instance> instances, const RunConfig& config, int runs) {
    if (runs < 1) throw Error(ErrorKind::InvalidArgument, "runs must be at least 1");
    std::vector<Solution> initial(instances.size());
    parallel_for(instances.size(), config.jobs,
                 [&](std::size_t i) { initial[i] = construct_initial(instances[i], config.repair_config); });

    const std::size_t total = instances.size() * static_cast<std::size_t>(runs);
    std::vector<Dataset> parts(total);
    parallel_for(total, config.jobs, [&](std::size_t k) {
        const std::size_t i = k / static_cast<std::size_t>(runs);
        const std::size_t r = k % static_cast<std::size_t>(runs);
        RunConfig rc = config;
        rc.seed = derive_seed(config.seed, i, r);
        rc.jobs = 1;
        collect_run(instances[i], initial[i], rc, instances[i].name() + ":" + std::to_string(r + 1), parts[k]);
    });
    Dataset out;
    out.feature_names = feature_names(config.selector_config.n2);
    for (const auto& p : parts) out.append(p);
    return out;
}

GuidelinesResult guidelines_loop(std::span<const Instance> instances, int rounds, const RunConfig& config, int runs,
                                 const TrainerConfig& trainer, const std::optional<std::string>& output_dir) {
    if (rounds < 1) throw Error(ErrorKind::InvalidArgument, "rounds must be at least 1");
    if (output_dir) std::filesystem::create_directories(*output_dir);
    GuidelinesResult out;
    out.cumulative.feature_names = feature_names(config.selector_config.n2);
    for (int k = 1; k <= rounds; ++k) {
        RunConfig rc = config;
        rc.seed = derive_seed(config.seed, 0x6775696465ull, static_cast<std::uint64_t>(k));
        if (k == 1) {
            rc.selector = SelectorKind::Random;
            rc.model.reset();
        } else {
            rc.selector = SelectorKind::Model;
            rc.model = out.models.back();
        }
        Dataset round = collect_data(instances, rc, runs);
        out.cumulative.append(round);
        auto model = std::make_shared<ForestModel>(train_on_dataset(
            out.cumulative, trainer.threshold, trainer.forest, derive_seed(trainer.seed, static_cast<std::uint64_t>(k))));
        if (output_dir) {
            const std::filesystem::path dir(*output_dir);
            save_dataset(round, (dir / ("round_" + std::to_string(k) + ".tsv")).string());
            save_model(*model, (dir / ("ml" + std::to_string(k) + ".model")).string());
        }
        out.round_datasets.push_back(std::move(round));
        out.models.push_back(std::move(model));
    }
    return out;
}

std::string write_trace(const RunTrace& trace) {
    std::ostringstream os;
    os << "iteration\tchosen_j";
    for (int j = 1; j <= trace.n1; ++j) os << "\ty_" << j;
    os << "\taccepted\tcurrent_cost\tbest_cost\n";
    os << 0 << '\t' << 0;
    for (int j = 0; j < trace.n1; ++j) os << '\t' << "nan";
    os << '\t' << 0 << '\t' << format_double(trace.initial_cost) << '\t' << format_double(trace.initial_cost) << '\n';
    for (const auto& r : trace.records) {
        os << r.iteration << '\t' << r.chosen;
        for (double y : r.improvements) os << '\t' << format_double(y);
        os << '\t' << (r.accepted ? 1 : 0) << '\t' << format_double(r.current_cost) << '\t'
           << format_double(r.best_cost) << '\n';
    }
    return os.str();
}

RunTrace parse_trace(std::string_view text) {
    const auto lines = split_lines(text);
    if (lines.size() < 2) throw Error(ErrorKind::ParseError, "trace needs a header and an initial row");
    const auto header = split_on(lines[0], '\t');
    if (header.size() < 5 || header[0] != "iteration" || header[1] != "chosen_j")
        throw Error(ErrorKind::ParseError, "trace header not recognized");
    RunTrace t;
    t.n1 = static_cast<int>(header.size()) - 5;
    auto bad = [](std::size_t ln) -> Error {
        return Error(ErrorKind::ParseError, "trace line " + std::to_string(ln + 1) + " is malformed");
    };
    for (std::size_t ln = 1; ln < lines.size(); ++ln) {
        if (lines[ln].empty()) continue;
        const auto cells = split_on(lines[ln], '\t');
        if (cells.size() != header.size()) throw bad(ln);
        long long it = 0, chosen = 0, acc = 0;
        IterationRecord r;
        if (!parse_int(cells[0], it) || !parse_int(cells[1], chosen)) throw bad(ln);
        r.improvements.resize(static_cast<std::size_t>(t.n1));
        for (int j = 0; j < t.n1; ++j)
            if (!parse_double(cells[static_cast<std::size_t>(2 + j)], r.improvements[static_cast<std::size_t>(j)]))
                throw bad(ln);
        const std::size_t tail = 2 + static_cast<std::size_t>(t.n1);
        if (!parse_int(cells[tail], acc) || !parse_double(cells[tail + 1], r.current_cost) ||
            !parse_double(cells[tail + 2], r.best_cost))
            throw bad(ln);
        r.iteration = static_cast<int>(it);
        r.chosen = static_cast<int>(chosen);
        r.accepted = acc != 0;
        if (it == 0)
            t.initial_cost = r.current_cost;
        else
            t.records.push_back(std::move(r));
    }
    return t;
}

std::string write_solution(const Solution& solution) {
    std::ostringstream os;
    for (const Route& r : solution.routes) {
        if (r.empty()) continue;
        for (std::size_t k = 0; k < r.size(); ++k) os << (k ? " " : "") << r.customer_ids[k];
        os << '\n';
    }
    return os.str();
}

}  // namespace lens
