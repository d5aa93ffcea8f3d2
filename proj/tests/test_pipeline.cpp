#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "lens/instance_io.hpp"
#include "lens/pipeline.hpp"
#include "support.hpp"

using namespace lens;
using namespace lens::testing;

namespace {

struct Setup {
    Instance inst = make_r1_like_instance("p", 50, 12);
    Solution initial = construct_initial(inst, RepairConfig{});
};

const Setup& setup() {
    static const Setup s;
    return s;
}

RunConfig quick(SelectorKind kind, int iterations, std::uint64_t seed) {
    RunConfig c;
    c.iterations = iterations;
    c.n1 = 6;
    c.selector = kind;
    c.seed = seed;
    c.repair_config.ruin_rounds = 3;
    return c;
}

// One stump on customer_count: potential 1 above `cut`, 0 otherwise.
ForestModel count_stump(int n2, double cut) {
    ForestModel m;
    m.feature_names = feature_names(n2);
    m.scaler.mean.assign(m.feature_names.size(), 0.0);
    m.scaler.stddev.assign(m.feature_names.size(), 1.0);
    Tree t;
    t.nodes = {TreeNode{0, cut, 1, 2, 0, 0}, TreeNode{-1, 0, -1, -1, 1, 0}, TreeNode{-1, 0, -1, -1, 0, 1}};
    m.trees.push_back(t);
    return m;
}

}  // namespace

TEST_CASE("accept is strict") {
    CHECK(accept(9.0, 10.0));
    CHECK_FALSE(accept(10.0, 10.0));
    CHECK_FALSE(accept(11.0, 10.0));
}

TEST_CASE("select_oracle") {
    const std::vector<double> y{0, 3, 1, 3};
    CHECK(select_oracle(y) == 2);
    const double nan = std::nan("");
    CHECK(select_oracle(std::vector<double>{nan, 0.5, nan, 0.7}) == 4);
    CHECK(select_oracle(std::vector<double>{0, 0, 0}) == 1);
    CHECK_THROWS_AS(select_oracle(std::vector<double>{}), Error);
}

TEST_CASE("select_random is uniform") {
    Rng rng(77);
    const int n1 = 10, draws = 20000;
    std::vector<int> counts(n1, 0);
    for (int t = 0; t < draws; ++t) {
        const int j = select_random(n1, rng);
        REQUIRE(j >= 1);
        REQUIRE(j <= n1);
        ++counts[static_cast<std::size_t>(j - 1)];
    }
    const double expected = static_cast<double>(draws) / n1;
    double chi2 = 0;
    for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
    CHECK(chi2 < 27.88);  // 0.999 quantile, 9 degrees of freedom
}

TEST_CASE("lens_select returns the best scored neighborhood") {
    const Setup& s = setup();
    SelectorConfig cfg;
    for (double cut : {8.5, 10.5, 12.5, 1000.0}) {
        const ForestModel m = count_stump(cfg.n2, cut);
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            Rng a(seed), b(seed);
            std::vector<Neighborhood> pool;
            for (int j = 0; j < 8; ++j) pool.push_back(create_neighborhood(s.initial, s.inst, cfg, b));
            Neighborhood expected = pool.front();
            for (const Neighborhood& nh : pool) {
                std::size_t count = 0;
                for (int idx : nh.ordered_members) count += s.initial.routes[static_cast<std::size_t>(idx)].size();
                if (static_cast<double>(count) > cut) {
                    expected = nh;
                    break;
                }
            }
            CHECK(lens_select(s.inst, s.initial, m, cfg, 8, a).ordered_members == expected.ordered_members);
        }
    }
    SelectorConfig pairs;
    pairs.n2 = 1;
    Rng rng(1);
    CHECK_THROWS_WITH_AS(lens_select(s.inst, s.initial, count_stump(4, 1), pairs, 5, rng),
                         doctest::Contains("DimensionMismatch"), Error);
}

TEST_CASE("zero iterations return the initial solution") {
    const Setup& s = setup();
    const RunResult r = lns_run(s.inst, s.initial, quick(SelectorKind::Random, 0, 1));
    CHECK(r.final_solution == s.initial);
    CHECK(r.best_solution == s.initial);
    CHECK(r.trace.records.empty());
    CHECK(r.trace.best_series() == std::vector<double>{solution_cost(s.inst, s.initial)});
}

TEST_CASE("runs stay feasible and never get worse") {
    const Setup& s = setup();
    for (SelectorKind kind : {SelectorKind::Random, SelectorKind::Oracle}) {
        CAPTURE(to_string(kind));
        const RunResult r = lns_run(s.inst, s.initial, quick(kind, 15, 4));
        CHECK(check_feasibility(s.inst, r.final_solution).feasible());
        CHECK(check_feasibility(s.inst, r.best_solution).feasible());
        const auto series = r.trace.best_series();
        REQUIRE(series.size() == 16);
        for (std::size_t k = 1; k < series.size(); ++k) CHECK(series[k] <= series[k - 1]);
        double current = r.trace.initial_cost;
        for (const IterationRecord& rec : r.trace.records) {
            CHECK(rec.current_cost <= current);
            CHECK(rec.accepted == (rec.current_cost < current));
            CHECK(rec.chosen >= 1);
            CHECK(rec.chosen <= 6);
            const double y = rec.improvements[static_cast<std::size_t>(rec.chosen - 1)];
            CHECK(y == doctest::Approx(current - rec.current_cost));
            current = rec.current_cost;
        }
        CHECK(solution_cost(s.inst, r.final_solution) == doctest::Approx(current));
        CHECK(solution_cost(s.inst, r.best_solution) == doctest::Approx(series.back()));
    }
}

TEST_CASE("oracle picks the largest improvement") {
    const Setup& s = setup();
    const RunResult r = lns_run(s.inst, s.initial, quick(SelectorKind::Oracle, 12, 9));
    for (const IterationRecord& rec : r.trace.records) {
        const double best = *std::max_element(rec.improvements.begin(), rec.improvements.end());
        for (double y : rec.improvements) CHECK_FALSE(std::isnan(y));
        CHECK(rec.improvements[static_cast<std::size_t>(rec.chosen - 1)] == best);
        CHECK(rec.accepted == (best > 0));
    }
    const RunResult random = lns_run(s.inst, s.initial, quick(SelectorKind::Random, 12, 9));
    for (const IterationRecord& rec : random.trace.records) {
        std::size_t repaired = 0;
        for (double y : rec.improvements) repaired += std::isnan(y) ? 0 : 1;
        CHECK(repaired == 1);
    }
}

TEST_CASE("runs are reproducible") {
    const Setup& s = setup();
    RunConfig c = quick(SelectorKind::Oracle, 6, 21);
    const std::string a = write_trace(lns_run(s.inst, s.initial, c).trace);
    c.jobs = 3;
    CHECK(write_trace(lns_run(s.inst, s.initial, c).trace) == a);
    c.seed = 22;
    CHECK(write_trace(lns_run(s.inst, s.initial, c).trace) != a);
}

TEST_CASE("an infeasible start is rejected") {
    const Setup& s = setup();
    Solution broken = s.initial;
    broken.routes.front().customer_ids.pop_back();
    CHECK_THROWS_WITH_AS(lns_run(s.inst, broken, quick(SelectorKind::Random, 3, 1)),
                         doctest::Contains("InfeasibleInitial"), Error);
}

TEST_CASE("collection stores every candidate") {
    const Setup& s = setup();
    RunConfig c = quick(SelectorKind::Random, 5, 3);
    c.n1 = 10;
    Dataset d;
    collect_run(s.inst, s.initial, c, "p:1", d);
    REQUIRE(d.size() == 50);
    CHECK(d.feature_names.size() == 126);
    for (std::size_t k = 0; k < d.size(); ++k) {
        const Sample& x = d.samples[k];
        CHECK(x.run_id == "p:1");
        CHECK(x.iteration == static_cast<int>(k / 10) + 1);
        CHECK(x.neighborhood_index == static_cast<int>(k % 10) + 1);
        CHECK(x.features.size() == 126);
        CHECK(x.improvement >= 0.0);
    }

    c.selector = SelectorKind::Oracle;
    CHECK_THROWS_AS(collect_run(s.inst, s.initial, c, "p:1", d), Error);

    const std::vector<Instance> two{s.inst, make_r1_like_instance("q", 40, 13)};
    c.selector = SelectorKind::Random;
    c.iterations = 2;
    const Dataset all = collect_data(two, c, 2);
    CHECK(all.size() == 2 * 2 * 2 * 10);
    CHECK(all.samples.front().run_id == "p:1");
    CHECK(all.samples.back().run_id == "q:2");
}

TEST_CASE("model selection runs through the loop") {
    const Setup& s = setup();
    RunConfig c = quick(SelectorKind::Model, 5, 2);
    c.model = std::make_shared<ForestModel>(count_stump(4, 10.5));
    const RunResult r = lns_run(s.inst, s.initial, c);
    CHECK(r.trace.records.size() == 5);
    CHECK(check_feasibility(s.inst, r.final_solution).feasible());
    c.model = std::make_shared<ForestModel>(count_stump(2, 10.5));
    CHECK_THROWS_WITH_AS(lns_run(s.inst, s.initial, c), doctest::Contains("DimensionMismatch"), Error);
    c.model.reset();
    CHECK_THROWS_AS(lns_run(s.inst, s.initial, c), Error);
}

TEST_CASE("guidelines loop grows the data each round") {
    const std::vector<Instance> insts{setup().inst};
    RunConfig c = quick(SelectorKind::Random, 4, 5);
    c.n1 = 5;
    TrainerConfig t;
    t.forest.tree_count = 5;
    t.forest.jobs = 1;
    const auto dir = std::filesystem::temp_directory_path() / "lens_guidelines_test";
    std::filesystem::remove_all(dir);
    const GuidelinesResult g = guidelines_loop(insts, 2, c, 1, t, dir.string());
    REQUIRE(g.models.size() == 2);
    REQUIRE(g.round_datasets.size() == 2);
    CHECK(g.round_datasets[0].size() == 20);
    CHECK(g.round_datasets[1].size() == 20);
    CHECK(g.cumulative.size() == 40);
    CHECK(g.models[1]->sample_count == 40);
    CHECK(std::filesystem::exists(dir / "round_2.tsv"));
    CHECK(serialize_model(load_model((dir / "ml1.model").string())) == serialize_model(*g.models[0]));
    std::filesystem::remove_all(dir);
}

TEST_CASE("trace text round trip") {
    const Setup& s = setup();
    const RunTrace t = lns_run(s.inst, s.initial, quick(SelectorKind::Random, 4, 8)).trace;
    const std::string text = write_trace(t);
    const RunTrace back = parse_trace(text);
    CHECK(write_trace(back) == text);
    CHECK(back.best_series() == t.best_series());
    CHECK(back.n1 == 6);
    CHECK(std::isnan(back.records[0].improvements[static_cast<std::size_t>(back.records[0].chosen % 6)]));
}
