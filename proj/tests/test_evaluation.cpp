#include <doctest.h>

#include <cmath>
#include <sstream>

#include "lens/evaluation.hpp"
#include "support.hpp"
#include "table_data.hpp"

using namespace lens;
using namespace lens::testing;

namespace {

Dataset groups_of(const std::vector<std::vector<double>>& ys) {
    Dataset d;
    d.feature_names = {"x"};
    for (std::size_t g = 0; g < ys.size(); ++g)
        for (std::size_t j = 0; j < ys[g].size(); ++j)
            d.samples.push_back({"run", static_cast<int>(g) + 1, static_cast<int>(j) + 1,
                                 {static_cast<double>(j)}, ys[g][j]});
    return d;
}

GroupSelector fixed(std::vector<std::size_t> picks) {
    return [picks](const SampleGroup& g) { return picks.at(static_cast<std::size_t>(g.iteration - 1)); };
}

// Worst-case effect on a gap of rounding each of alg, oracle and random to 0.05.
double rounding_bound(double alg, double oracle, double random) {
    const double span = random - oracle;
    return 100.0 * 0.1 / std::abs(span) + std::abs(100.0 * (alg - oracle) / span) * 0.1 / std::abs(span) + 0.005;
}

std::vector<ResultRow> published_rows(const PublishedTable& t) {
    std::vector<ResultRow> rows;
    for (const PublishedRow& r : t.rows)
        rows.push_back({r.instance, r.bks, r.oracle, r.random, {r.avg[0], r.avg[1], r.avg[2]}});
    return rows;
}

}  // namespace

TEST_CASE("gap") {
    CHECK(gap({55367.5, 54711.2, 55183.8}) == doctest::Approx(138.87).epsilon(1e-4));
    CHECK(gap({10, 10, 20}) == 0.0);
    CHECK(gap({20, 10, 20}) == 100.0);
    CHECK(gap({5, 10, 20}) == -50.0);
    CHECK_THROWS_WITH_AS(gap({1, 7, 7}), doctest::Contains("DegenerateBaseline"), Error);
}

TEST_CASE("gap is invariant under a shared affine map") {
    Rng rng(3);
    for (int t = 0; t < 200; ++t) {
        const double a = uniform_real(rng, 0, 100), o = uniform_real(rng, 0, 100), r = o + uniform_real(rng, 1, 50);
        const double scale = uniform_real(rng, 0.1, 10), shift = uniform_real(rng, -1000, 1000);
        CHECK(gap({scale * a + shift, scale * o + shift, scale * r + shift}) == doctest::Approx(gap({a, o, r})));
    }
}

TEST_CASE("published gaps follow from the published averages") {
    for (const PublishedTable* t : {&kTable500, &kTable200}) {
        CAPTURE(t->iterations);
        for (const PublishedRow& r : t->rows)
            for (std::size_t a = 0; a < 3; ++a) {
                CAPTURE(r.instance);
                CHECK(std::abs(gap({r.avg[a], r.oracle, r.random}) - r.gap[a]) <=
                      rounding_bound(r.avg[a], r.oracle, r.random));
            }
    }
}

TEST_CASE("result_table reproduces the published average rows") {
    for (const PublishedTable* t : {&kTable500, &kTable200}) {
        CAPTURE(t->iterations);
        const ResultTable table = result_table({"ML1", "ML3", "ML5"}, published_rows(*t));
        CHECK(table.average.oracle == doctest::Approx(t->average_oracle).epsilon(2e-6));
        CHECK(table.average.random == doctest::Approx(t->average_random).epsilon(2e-6));
        for (std::size_t a = 0; a < 3; ++a) {
            CHECK(std::abs(table.average.algorithms[a] - t->average_avg[a]) <= 0.1);
            double bound = 0.0;
            for (const PublishedRow& r : t->rows) bound += rounding_bound(r.avg[a], r.oracle, r.random);
            CHECK(std::abs(table.average_gaps[a] - t->average_gap[a]) <= bound / 10.0);
            double mean_published = 0.0;
            for (const PublishedRow& r : t->rows) mean_published += r.gap[a];
            CHECK(std::abs(mean_published / 10.0 - t->average_gap[a]) <= 0.006);
            for (std::size_t i = 0; i < t->rows.size(); ++i)
                CHECK(table.row_gaps[i][a] == gap({t->rows[i].avg[a], t->rows[i].oracle, t->rows[i].random}));
        }
    }
}

TEST_CASE("result_table rendering") {
    const ResultTable t = result_table(
        {"A"}, {ResultRow{"x", 100.0, 110.0, 130.0, {120.0}}, ResultRow{"y", std::nullopt, 200.0, 210.0, {200.0}}});
    CHECK(t.row_gaps[0][0] == 50.0);
    CHECK(t.row_gaps[1][0] == 0.0);
    CHECK(t.average_gaps[0] == 25.0);
    CHECK(t.gap_of_averages[0] == doctest::Approx(100.0 * 5.0 / 15.0));
    CHECK_FALSE(t.average.bks.has_value());
    const std::string tsv = render_tsv(t);
    std::istringstream in(tsv);
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(in, line)) lines.push_back(line);
    REQUIRE(lines.size() == 5);
    CHECK(lines[0] == "instance\tbks\toracle\trandom\tA\tgap_A");
    CHECK(lines[1] == "x\t100.0\t110.0\t130.0\t120.0\t50.00%");
    CHECK(lines[2] == "y\t-\t200.0\t210.0\t200.0\t0.00%");
    CHECK(lines[3] == "Average\t-\t155.0\t170.0\t160.0\t25.00%");
    CHECK(lines[4] == "gap_of_averages\t\t\t\t\t33.33%");
    CHECK(render_text(t).find("Average") != std::string::npos);
    CHECK_THROWS_AS(result_table({"A", "B"}, {ResultRow{"x", {}, 1, 2, {1}}}), Error);
    CHECK_THROWS_AS(result_table({"A"}, {}), Error);
}

TEST_CASE("validate_selector by hand") {
    const Dataset d = groups_of({{0, 3, 1}, {2, 0, 0}, {0, 0, 0}});
    const auto groups = group_by_iteration(d);
    REQUIRE(groups.size() == 3);
    const ValidationReport picked = validate_selector(groups, fixed({2, 1, 0}));
    CHECK(picked.iterations == 2);
    CHECK(picked.avg_true_rank == 2.0);
    CHECK(picked.fraction_improving == 0.5);
    CHECK(picked.avg_improvement == 0.5);

    const ValidationReport oracle = validate_selector(groups, oracle_selector());
    CHECK(oracle.avg_true_rank == 1.0);
    CHECK(oracle.fraction_improving == 1.0);
    CHECK(oracle.avg_improvement == 2.5);

    const ValidationReport uniform = validate_uniform(groups);
    CHECK(uniform.avg_true_rank == doctest::Approx(11.0 / 6.0));
    CHECK(uniform.fraction_improving == doctest::Approx(0.5));
    CHECK(uniform.avg_improvement == doctest::Approx(1.0));

    const Dataset tied_data = groups_of({{2, 2, 0}});
    const auto tied = group_by_iteration(tied_data);
    CHECK(validate_selector(tied, fixed({1})).avg_true_rank == 1.0);
    CHECK(validate_selector(tied, fixed({2})).avg_true_rank == 3.0);

    const Dataset flat_data = groups_of({{0, 0}, {0, 0}});
    const auto flat = group_by_iteration(flat_data);
    CHECK_THROWS_WITH_AS(validate_selector(flat, oracle_selector()), doctest::Contains("NoImprovingIterations"), Error);
    CHECK_THROWS_AS(validate_uniform(flat), Error);
}

TEST_CASE("validate_uniform is the mean over every fixed pick") {
    Rng rng(12);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 2 + uniform_index(rng, 6), g = 1 + uniform_index(rng, 8);
        std::vector<std::vector<double>> ys(g, std::vector<double>(n));
        for (auto& row : ys)
            for (double& y : row) y = uniform01(rng) < 0.5 ? 0.0 : static_cast<double>(uniform_index(rng, 4));
        ys[0][0] = 1.0;
        const Dataset d = groups_of(ys);
        const auto groups = group_by_iteration(d);
        ValidationReport mean;
        for (std::size_t j = 0; j < n; ++j) {
            const ValidationReport r = validate_selector(groups, fixed(std::vector<std::size_t>(g, j)));
            mean.avg_true_rank += r.avg_true_rank / static_cast<double>(n);
            mean.fraction_improving += r.fraction_improving / static_cast<double>(n);
            mean.avg_improvement += r.avg_improvement / static_cast<double>(n);
        }
        const ValidationReport u = validate_uniform(groups);
        CHECK(u.avg_true_rank == doctest::Approx(mean.avg_true_rank));
        CHECK(u.fraction_improving == doctest::Approx(mean.fraction_improving));
        CHECK(u.avg_improvement == doctest::Approx(mean.avg_improvement));
    }
}

TEST_CASE("model_selector takes the highest potential") {
    ForestModel m;
    m.feature_names = {"x"};
    m.scaler = {{0.0}, {1.0}};
    Tree t;
    t.nodes = {TreeNode{0, 0.5, 1, 2, 0, 0}, TreeNode{-1, 0, -1, -1, 1, 0}, TreeNode{-1, 0, -1, -1, 0, 1}};
    m.trees.push_back(t);
    const Dataset d = groups_of({{0, 4, 0}});
    const auto groups = group_by_iteration(d);
    CHECK(model_selector(m)(groups[0]) == 1);
}

TEST_CASE("convergence_series") {
    const std::vector<std::vector<double>> s{{10, 8, 6}, {12, 10, 6}};
    CHECK(convergence_series(s) == std::vector<double>{11, 9, 6});
    const std::vector<std::vector<double>> bad{{1, 2}, {1}};
    CHECK_THROWS_WITH_AS(convergence_series(bad), doctest::Contains("LengthMismatch"), Error);
    CHECK_THROWS_AS(convergence_series(std::vector<std::vector<double>>{}), Error);
}

TEST_CASE("validation table text") {
    const std::string tsv = render_validation_tsv({{"ML1", ValidationReport{2.5, 0.75, 1.25, 4}}});
    CHECK(tsv == "selector\titerations\tavg_true_rank\tfraction_improving\tavg_improvement\nML1\t4\t2.5\t0.75\t1.25\n");
}
