// lens: batch driver for instance generation, data collection, training,
// solving and reporting.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "lens/evaluation.hpp"
#include "lens/features.hpp"
#include "lens/instance_io.hpp"
#include "lens/pipeline.hpp"
#include "lens/text.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr const char* kToolVersion = "1.0.0";
constexpr int kInputError = 2;
constexpr int kDataError = 3;

int exit_code_for(lens::ErrorKind kind) {
    switch (kind) {
        case lens::ErrorKind::SingleClass:
        case lens::ErrorKind::NoImprovingIterations:
        case lens::ErrorKind::DegenerateBaseline:
        case lens::ErrorKind::InfeasibleInitial:
        case lens::ErrorKind::InfeasibleCustomer:
        case lens::ErrorKind::TooFewRoutes:
            return kDataError;
        default:
            return kInputError;
    }
}

std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

// FNV-1a, used only to fingerprint inputs and configs in manifests.
std::string digest(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

struct Manifest {
    json doc;

    Manifest(std::string command, const json& config) {
        doc["command"] = std::move(command);
        doc["tool_version"] = kToolVersion;
        doc["config"] = config;
        doc["config_digest"] = digest(config.dump());
        doc["started"] = utc_now();
        doc["inputs"] = json::array();
        doc["outputs"] = json::array();
    }

    void input(const std::string& path) {
        doc["inputs"].push_back({{"path", path}, {"digest", digest(lens::read_file(path))}});
    }
    void output(const std::string& path) { doc["outputs"].push_back(path); }

    void write(const std::string& path) {
        doc["finished"] = utc_now();
        lens::write_file_atomic(path, doc.dump(2) + "\n");
    }
};

std::string manifest_path(const std::string& output) { return output + ".manifest.json"; }

std::vector<std::string> instance_files(const std::string& where) {
    std::vector<std::string> files;
    if (fs::is_directory(where)) {
        for (const auto& e : fs::directory_iterator(where))
            if (e.is_regular_file() && e.path().extension() == ".txt") files.push_back(e.path().string());
    } else if (fs::is_regular_file(where)) {
        files.push_back(where);
    }
    if (files.empty()) throw lens::Error(lens::ErrorKind::IoError, "no instance files at " + where);
    std::sort(files.begin(), files.end());
    return files;
}

void progress_line(const std::string& run_id, const lens::IterationRecord& r) {
    std::cerr << run_id << " iter " << r.iteration << " chosen " << r.chosen << (r.accepted ? " accepted" : " rejected")
              << " cost " << lens::format_fixed(r.current_cost, 3) << " best " << lens::format_fixed(r.best_cost, 3)
              << '\n';
}

// Options shared by collect and solve.
struct SearchOptions {
    int iterations = 100;
    int n1 = 10;
    int n2 = 4;
    double D = 4.0;
    int ruin_rounds = lens::RepairConfig{}.ruin_rounds;
    std::string external_repair;
    bool quiet = false;

    void attach(CLI::App* cmd) {
        cmd->add_option("--iters", iterations, "LNS iterations per run")->check(CLI::NonNegativeNumber);
        cmd->add_option("--n1", n1, "Neighborhoods created per iteration")->check(CLI::PositiveNumber);
        cmd->add_option("--n2", n2, "Companion routes per neighborhood")->check(CLI::PositiveNumber);
        cmd->add_option("--rbp-exponent", D, "Rank-based probability exponent");
        cmd->add_option("--ruin-rounds", ruin_rounds, "Ruin and recreate rounds per repair");
        cmd->add_option("--external-repair", external_repair, "Shell command used as the repair solver");
        cmd->add_flag("--quiet", quiet, "No per-iteration progress on stderr");
    }

    lens::RunConfig run_config(std::uint64_t seed, int jobs) const {
        lens::RunConfig rc;
        rc.iterations = iterations;
        rc.n1 = n1;
        rc.seed = seed;
        rc.jobs = jobs;
        rc.selector_config.n2 = n2;
        rc.selector_config.D = D;
        rc.repair_config.ruin_rounds = ruin_rounds;
        if (!external_repair.empty()) rc.repair_config.external_command = external_repair;
        if (!quiet) rc.progress = progress_line;
        return rc;
    }

    json to_json() const {
        return {{"iterations", iterations}, {"n1", n1}, {"n2", n2}, {"rbp_exponent", D},
                {"ruin_rounds", ruin_rounds}, {"external_repair", external_repair}};
    }
};

std::uint64_t default_seed() {
    if (const char* env = std::getenv("LENS_SEED")) {
        long long v = 0;
        if (lens::parse_int(env, v)) return static_cast<std::uint64_t>(v);
    }
    return 0;
}

// ---------------------------------------------------------------- generate

struct GenerateCmd {
    std::string base, out;
    std::uint64_t seed = default_seed();

    int run() {
        const lens::Instance inst = lens::read_instance_file(base);
        fs::create_directories(out);
        Manifest m("generate", {{"base", base}, {"seed", seed}});
        m.input(base);
        const auto batch = lens::generate_batch({inst, lens::r1_generation_entries(), seed});
        for (const auto& b : batch) {
            const std::string path = (fs::path(out) / (b.name() + ".txt")).string();
            lens::write_instance_file(b, path);
            m.output(path);
            std::cout << path << '\n';
        }
        m.write((fs::path(out) / "manifest.json").string());
        return 0;
    }
};

// ------------------------------------------------------------------- synth

struct SynthCmd {
    std::string name = "synthetic";
    std::string out;
    std::size_t customers = 100;
    int fleet = 0;
    std::uint64_t seed = default_seed();

    int run() {
        const auto inst = lens::make_r1_like_instance(name, customers, seed, fleet);
        lens::write_instance_file(inst, out);
        Manifest m("synth", {{"name", name}, {"customers", customers}, {"fleet", fleet}, {"seed", seed}});
        m.output(out);
        m.write(manifest_path(out));
        std::cout << out << '\n';
        return 0;
    }
};

// ----------------------------------------------------------------- collect

struct CollectCmd {
    std::string instances, strategy = "random", out;
    int runs = 1;
    std::uint64_t seed = default_seed();
    SearchOptions search;

    int run(int jobs) {
        const auto files = instance_files(instances);
        json cfg = search.to_json();
        cfg["instances"] = instances;
        cfg["strategy"] = strategy;
        cfg["runs"] = runs;
        cfg["seed"] = seed;
        Manifest m("collect", cfg);

        lens::RunConfig rc = search.run_config(seed, jobs);
        if (strategy != "random") {
            rc.selector = lens::SelectorKind::Model;
            rc.model = std::make_shared<lens::ForestModel>(lens::load_model(strategy));
            m.input(strategy);
            if (rc.model->feature_count() != lens::feature_count(search.n2))
                throw lens::Error(lens::ErrorKind::DimensionMismatch,
                                  "model " + strategy + " was trained on " +
                                      std::to_string(rc.model->feature_count()) + " features");
        }

        // One shard per instance; an existing shard from an identical
        // configuration is reused, so an interrupted collection resumes.
        const fs::path shard_dir = out + ".parts";
        fs::create_directories(shard_dir);
        const std::string cfg_digest = m.doc["config_digest"];
        lens::Dataset all;
        all.feature_names = lens::feature_names(search.n2);
        for (std::size_t i = 0; i < files.size(); ++i) {
            m.input(files[i]);
            const lens::Instance inst = lens::read_instance_file(files[i]);
            const fs::path shard = shard_dir / (inst.name() + ".tsv");
            const fs::path stamp = shard_dir / (inst.name() + ".digest");
            if (fs::exists(shard) && fs::exists(stamp) && lens::read_file(stamp.string()) == cfg_digest) {
                std::cerr << "reusing " << shard.string() << '\n';
                all.append(lens::load_dataset(shard.string()));
                continue;
            }
            lens::RunConfig ic = rc;
            ic.seed = lens::derive_seed(seed, i);
            const lens::Dataset d = lens::collect_data(std::span<const lens::Instance>(&inst, 1), ic, runs);
            lens::save_dataset(d, shard.string());
            lens::write_file_atomic(stamp.string(), cfg_digest);
            all.append(d);
        }
        lens::save_dataset(all, out);
        m.output(out);
        m.doc["samples"] = all.size();
        m.write(manifest_path(out));
        std::cout << "samples\t" << all.size() << '\n';
        return 0;
    }
};

// ------------------------------------------------------------------- train

struct TrainCmd {
    std::vector<std::string> samples;
    double threshold = 0.0;
    double split = 0.6;
    std::uint64_t seed = default_seed();
    std::string out;
    lens::ForestParams forest;

    int run(int jobs) {
        json cfg = {{"samples", samples},
                    {"threshold", threshold},
                    {"split", split},
                    {"seed", seed},
                    {"trees", forest.tree_count},
                    {"max_depth", forest.max_depth},
                    {"min_leaf", forest.min_leaf},
                    {"features_per_split", forest.features_per_split},
                    {"weighted_bootstrap", forest.weighted_bootstrap}};
        Manifest m("train", cfg);
        lens::Dataset data;
        for (const auto& s : samples) {
            m.input(s);
            data.append(lens::load_dataset(s));
        }
        if (data.size() == 0) throw lens::Error(lens::ErrorKind::SingleClass, "no samples to train on");
        const auto parts = lens::split(data, split, lens::derive_seed(seed, 1));
        lens::ForestParams p = forest;
        p.jobs = jobs;
        const lens::ForestModel model = lens::train_on_dataset(parts.training, threshold, p, lens::derive_seed(seed, 2));
        lens::save_model(model, out);
        m.output(out);
        const double acc = parts.validation.size() ? lens::accuracy(model, parts.validation, threshold) : 0.0;
        m.doc["training_samples"] = parts.training.size();
        m.doc["validation_samples"] = parts.validation.size();
        m.doc["validation_accuracy"] = acc;
        m.write(manifest_path(out));
        std::cout << "training_samples\t" << parts.training.size() << '\n';
        std::cout << "validation_samples\t" << parts.validation.size() << '\n';
        std::cout << "validation_accuracy\t" << lens::format_fixed(acc, 4) << '\n';
        return 0;
    }
};

// ------------------------------------------------------------------- solve

struct SolveCmd {
    std::string instance, selector = "random", out, label;
    std::uint64_t seed = default_seed();
    SearchOptions search;

    int run(int jobs) {
        json cfg = search.to_json();
        cfg["instance"] = instance;
        cfg["selector"] = selector;
        cfg["seed"] = seed;
        Manifest m("solve", cfg);
        m.input(instance);
        const lens::Instance inst = lens::read_instance_file(instance);

        lens::RunConfig rc = search.run_config(seed, jobs);
        std::string name = selector;
        if (selector == "random") {
            rc.selector = lens::SelectorKind::Random;
        } else if (selector == "oracle") {
            rc.selector = lens::SelectorKind::Oracle;
        } else {
            rc.selector = lens::SelectorKind::Model;
            rc.model = std::make_shared<lens::ForestModel>(lens::load_model(selector));
            m.input(selector);
            name = fs::path(selector).stem().string();
        }
        if (!label.empty()) name = label;

        const lens::Solution initial = lens::construct_initial(inst, rc.repair_config);
        const lens::RunResult result = lens::lns_run(inst, initial, rc);

        lens::write_file_atomic(out, lens::write_trace(result.trace));
        const std::string sol = out + ".solution";
        lens::write_file_atomic(sol, lens::write_solution(result.best_solution));
        m.output(out);
        m.output(sol);
        m.doc["instance_name"] = inst.name();
        m.doc["selector_label"] = name;
        m.doc["initial_cost"] = result.trace.initial_cost;
        m.doc["best_cost"] = result.trace.best_series().back();
        m.write(manifest_path(out));
        std::cout << "best_cost\t" << lens::format_double(result.trace.best_series().back()) << '\n';
        return 0;
    }
};

// ------------------------------------------------------------------ report

struct ReportCmd {
    std::string traces, bks, out;
    std::vector<std::string> samples, models;

    std::map<std::string, double> read_bks() const {
        std::map<std::string, double> values;
        if (bks.empty()) return values;
        const std::string text = lens::read_file(bks);
        std::istringstream in(text);
        std::string name, value;
        while (in >> name >> value) {
            double v = 0.0;
            if (!lens::parse_double(value, v)) throw lens::Error(lens::ErrorKind::ParseError, "bad BKS value for " + name);
            values[name] = v;
        }
        return values;
    }

    int run() {
        fs::create_directories(out);
        Manifest m("report", {{"traces", traces}, {"bks", bks}, {"samples", samples}, {"models", models}});

        // instance -> selector -> best-cost series per run
        std::map<std::string, std::map<std::string, std::vector<std::vector<double>>>> runs;
        std::vector<std::string> manifests;
        for (const auto& e : fs::directory_iterator(traces)) {
            const std::string p = e.path().string();
            if (p.size() > 14 && p.ends_with(".manifest.json")) manifests.push_back(p);
        }
        std::sort(manifests.begin(), manifests.end());
        std::optional<std::size_t> length;
        for (const auto& mp : manifests) {
            const json doc = json::parse(lens::read_file(mp), nullptr, false);
            if (doc.is_discarded()) throw lens::Error(lens::ErrorKind::ParseError, "unreadable manifest " + mp);
            if (doc.value("command", "") != "solve") continue;
            const std::string trace_path = mp.substr(0, mp.size() - std::string(".manifest.json").size());
            const lens::RunTrace t = lens::parse_trace(lens::read_file(trace_path));
            m.input(trace_path);
            const auto series = t.best_series();
            if (length && *length != series.size())
                throw lens::Error(lens::ErrorKind::LengthMismatch,
                                  trace_path + " has " + std::to_string(series.size() - 1) + " iterations, expected " +
                                      std::to_string(*length - 1));
            length = series.size();
            runs[doc.at("instance_name").get<std::string>()][doc.at("selector_label").get<std::string>()].push_back(
                series);
        }
        if (runs.empty()) throw lens::Error(lens::ErrorKind::IoError, "no solve traces under " + traces);
        const std::size_t iters = *length - 1;
        const auto bks_values = read_bks();

        std::set<std::string> selectors;
        for (const auto& [inst, by_sel] : runs)
            for (const auto& [sel, s] : by_sel) selectors.insert(sel);
        std::vector<std::string> algorithms;
        for (const auto& s : selectors)
            if (s != "oracle" && s != "random") algorithms.push_back(s);

        for (const auto& [inst, by_sel] : runs) {
            const std::string path = (fs::path(out) / ("convergence_" + inst + ".tsv")).string();
            std::ostringstream os;
            os << "iteration";
            std::vector<std::vector<double>> cols;
            for (const auto& [sel, series] : by_sel) {
                os << '\t' << sel;
                cols.push_back(lens::convergence_series(series));
            }
            os << '\n';
            for (std::size_t t = 0; t <= iters; ++t) {
                os << t;
                for (const auto& c : cols) os << '\t' << lens::format_double(c[t]);
                os << '\n';
            }
            lens::write_file_atomic(path, os.str());
            m.output(path);
        }

        auto final_avg = [](const std::vector<std::vector<double>>& series) {
            double s = 0.0;
            for (const auto& v : series) s += v.back();
            return s / static_cast<double>(series.size());
        };
        const std::string results = (fs::path(out) / ("results_" + std::to_string(iters) + ".tsv")).string();
        const bool baselines = selectors.count("oracle") && selectors.count("random");
        bool complete = baselines;
        for (const auto& [inst, by_sel] : runs)
            for (const auto& s : selectors) complete = complete && by_sel.count(s);
        std::string table_text;
        if (complete) {
            std::vector<lens::ResultRow> rows;
            for (const auto& [inst, by_sel] : runs) {
                lens::ResultRow r;
                r.instance = inst;
                if (auto it = bks_values.find(inst); it != bks_values.end()) r.bks = it->second;
                r.oracle = final_avg(by_sel.at("oracle"));
                r.random = final_avg(by_sel.at("random"));
                for (const auto& a : algorithms) r.algorithms.push_back(final_avg(by_sel.at(a)));
                rows.push_back(std::move(r));
            }
            const auto table = lens::result_table(algorithms, std::move(rows));
            lens::write_file_atomic(results, lens::render_tsv(table));
            table_text = lens::render_text(table);
        } else {
            // Without both baselines per instance there is nothing to
            // normalize against: list the averages and flag the omission.
            std::ostringstream os;
            os << "# gaps omitted: every instance needs oracle and random traces\n";
            os << "instance\tbks";
            for (const auto& s : selectors) os << '\t' << s;
            os << '\n';
            for (const auto& [inst, by_sel] : runs) {
                auto it = bks_values.find(inst);
                os << inst << '\t' << (it != bks_values.end() ? lens::format_fixed(it->second, 1) : "-");
                for (const auto& s : selectors)
                    os << '\t' << (by_sel.count(s) ? lens::format_fixed(final_avg(by_sel.at(s)), 1) : "-");
                os << '\n';
            }
            lens::write_file_atomic(results, os.str());
            table_text = os.str();
        }
        m.output(results);
        const std::string text_path = results.substr(0, results.size() - 4) + ".txt";
        lens::write_file_atomic(text_path, table_text);
        m.output(text_path);
        std::cout << table_text;

        if (!samples.empty()) {
            lens::Dataset data;
            for (const auto& s : samples) {
                m.input(s);
                data.append(lens::load_dataset(s));
            }
            const auto groups = lens::group_by_iteration(data);
            const auto oracle = lens::validate_selector(groups, lens::oracle_selector());
            const auto random = lens::validate_uniform(groups);
            for (const auto& mp : models) {
                m.input(mp);
                const lens::ForestModel model = lens::load_model(mp);
                const std::string name = fs::path(mp).stem().string();
                const auto rep = lens::validate_selector(groups, lens::model_selector(model));
                const std::string path = (fs::path(out) / ("validation_" + name + ".tsv")).string();
                lens::write_file_atomic(path,
                                        lens::render_validation_tsv({{"oracle", oracle}, {"random", random}, {name, rep}}));
                m.output(path);
            }
        }
        m.write((fs::path(out) / "manifest.json").string());
        return 0;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Learned neighborhood selection for large neighborhood search on VRPTW"};
    app.set_config("--config", "", "TOML or INI file with option values; flags override it");
    app.require_subcommand(1);
    int jobs = 1;
    app.add_option("--jobs", jobs, "Worker threads (0: all cores)")->check(CLI::NonNegativeNumber);

    GenerateCmd gen;
    auto* g = app.add_subcommand("generate", "Write the ten-instance batch derived from a base instance");
    g->add_option("--base", gen.base, "Base instance file")->required();
    g->add_option("--out", gen.out, "Output directory")->required();
    g->add_option("--seed", gen.seed, "Seed (default: $LENS_SEED or 0)");

    SynthCmd syn;
    auto* sy = app.add_subcommand("synth", "Write a synthetic R1-like base instance");
    sy->add_option("--out", syn.out, "Output file")->required();
    sy->add_option("--name", syn.name, "Instance name");
    sy->add_option("--customers", syn.customers, "Number of customers")->check(CLI::PositiveNumber);
    sy->add_option("--fleet", syn.fleet, "Fleet size (0: ceil(n / 3))");
    sy->add_option("--seed", syn.seed, "Seed (default: $LENS_SEED or 0)");

    CollectCmd col;
    auto* c = app.add_subcommand("collect", "Run data collection and write a sample table");
    c->add_option("--instances", col.instances, "Instance file or directory of .txt instances")->required();
    c->add_option("--strategy", col.strategy, "'random' or a model file");
    c->add_option("--runs", col.runs, "Runs per instance")->check(CLI::PositiveNumber);
    c->add_option("--seed", col.seed, "Seed (default: $LENS_SEED or 0)");
    c->add_option("--out", col.out, "Dataset file")->required();
    col.search.attach(c);

    TrainCmd tr;
    auto* t = app.add_subcommand("train", "Train a random forest on sample tables");
    t->add_option("--samples", tr.samples, "Sample tables")->required()->expected(1, -1);
    t->add_option("--threshold", tr.threshold, "Improvement above which a sample is positive");
    t->add_option("--split", tr.split, "Training fraction");
    t->add_option("--seed", tr.seed, "Seed (default: $LENS_SEED or 0)");
    t->add_option("--out", tr.out, "Model file")->required();
    t->add_option("--trees", tr.forest.tree_count, "Number of trees")->check(CLI::PositiveNumber);
    t->add_option("--max-depth", tr.forest.max_depth, "Maximum tree depth");
    t->add_option("--min-leaf", tr.forest.min_leaf, "Minimum samples per leaf");
    t->add_option("--features-per-split", tr.forest.features_per_split, "Candidates per split (0: ceil(sqrt F))");
    t->add_flag("!--uniform-bootstrap", tr.forest.weighted_bootstrap,
                "Resample uniformly and weight the impurity instead");

    SolveCmd sol;
    auto* s = app.add_subcommand("solve", "Run LNS on one instance and write its trace");
    s->add_option("--instance", sol.instance, "Instance file")->required();
    s->add_option("--selector", sol.selector, "'random', 'oracle' or a model file");
    s->add_option("--label", sol.label, "Selector name used in reports");
    s->add_option("--seed", sol.seed, "Seed (default: $LENS_SEED or 0)");
    s->add_option("--out", sol.out, "Trace file")->required();
    sol.search.attach(s);

    ReportCmd rep;
    auto* r = app.add_subcommand("report", "Build result tables and convergence series from traces");
    r->add_option("--traces", rep.traces, "Directory holding solve traces and their manifests")->required();
    r->add_option("--bks", rep.bks, "Whitespace-separated 'instance value' lines");
    r->add_option("--out", rep.out, "Output directory")->required();
    r->add_option("--samples", rep.samples, "Sample tables for offline validation");
    r->add_option("--models", rep.models, "Models to validate on --samples");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kInputError;
    }

    try {
        if (*g) return gen.run();
        if (*sy) return syn.run();
        if (*c) return col.run(jobs);
        if (*t) return tr.run(jobs);
        if (*s) return sol.run(jobs);
        if (*r) return rep.run();
    } catch (const lens::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInputError;
    }
    return 0;
}
