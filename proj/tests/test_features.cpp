#include <doctest.h>

#include <cmath>

#include "lens/features.hpp"
#include "lens/instance_io.hpp"
#include "lens/repair.hpp"
#include "support.hpp"

using namespace lens;
using namespace lens::testing;

TEST_CASE("aggregate") {
    const std::vector<double> a{1, 2, 3};
    const Aggregate g = aggregate(a);
    CHECK(g.avg == 2.0);
    CHECK(g.max == 3.0);
    CHECK(g.min == 1.0);
    CHECK(g.sum == 6.0);
    CHECK(g.std == doctest::Approx(0.81650).epsilon(1e-5));
    const std::vector<double> one{5};
    CHECK(aggregate(one).std == 0.0);
    CHECK(aggregate(one).avg == 5.0);
    const std::vector<double> flat{2, 2, 2, 2};
    CHECK(aggregate(flat).sum == 8.0);
    CHECK(aggregate(flat).std == 0.0);
    CHECK_THROWS_AS(aggregate(std::vector<double>{}), Error);
}

TEST_CASE("time_window_difference") {
    const Instance inst = make_instance({});
    const Customer a = make_customer(1, 0, 0, 1, 0, 10, 2);
    const Customer b = make_customer(2, 3, 4, 1, 20, 30, 2);
    CHECK(time_window_difference(inst, a, b, 1000) == 13.0);
    CHECK(time_window_difference(inst, b, a, 1000) == 13.0);
    const Customer c = make_customer(3, 1, 1, 1, 0, 100);
    CHECK(time_window_difference(inst, c, c, 1000) == 0.0);
    const Customer early = make_customer(4, 0, 0, 1, 0, 1, 5);
    const Customer late = make_customer(5, 50, 0, 1, 0, 1, 5);
    CHECK(time_window_difference(inst, early, late, 777) == 777.0);
}

namespace {

// depot (0,0); route 0: c(5,5) then b(0,10); route 1: p(0,10) with e = 50.
struct SmallFixture {
    Instance inst = make_instance({make_customer(1, 5, 5, 4, 0, 1000), make_customer(2, 0, 10, 6, 0, 1000),
                                   make_customer(3, 0, 10, 3, 50, 1000), make_customer(4, 0, 5, 2, 10, 1000)},
                                  3, 20, {0, 1000});
    Solution sol{{Route{{1, 2}}, Route{{3}}, Route{{4}}}};
    std::vector<RouteSchedule> schedules = compute_schedules(inst, sol);
    Neighborhood nh{0, {0, 1, 2}};
};

}  // namespace

TEST_CASE("customer properties by hand") {
    SmallFixture f;
    const SelectorConfig cfg;
    const auto pc = customer_properties(f.inst, f.sol, f.nh, f.schedules, 1, cfg);
    CHECK(pc.distance_contribution == doctest::Approx(2 * std::sqrt(50.0) - 10));
    CHECK(pc.depot_distance == doctest::Approx(std::sqrt(50.0)));
    CHECK(pc.load == 4.0);
    CHECK(pc.tw_length == 1000.0);
    CHECK(pc.waiting_time == 0.0);
    CHECK(pc.max_gain == pc.distance_contribution - pc.min_greedy_addition_cost);

    // customer 4 at (0,5), e = 10, alone on route 2: arrival 5, waits 5;
    // greedily inserting it before p (e = 50) costs 5 + 5 - 10 = 0.
    const auto p4 = customer_properties(f.inst, f.sol, f.nh, f.schedules, 4, cfg);
    CHECK(p4.waiting_time == 5.0);
    CHECK(p4.min_greedy_addition_cost == doctest::Approx(0.0));
    CHECK(p4.closeness == 5.0);
    CHECK(p4.possible_delay == 995.0);

    Neighborhood partial{0, {0, 1}};
    CHECK_THROWS_WITH_AS(customer_properties(f.inst, f.sol, partial, f.schedules, 4, cfg),
                         doctest::Contains("NotInNeighborhood"), Error);
}

TEST_CASE("route properties by hand") {
    const Instance inst = make_instance({make_customer(1, 3, 4, 5, 0, 1000), make_customer(2, 6, 8, 5, 0, 1000),
                                         make_customer(3, 1, 0, 3, 0, 1000), make_customer(4, 2, 0, 12, 0, 1000),
                                         make_customer(5, 3, 0, 10, 0, 1000), make_customer(6, 4, 0, 5, 0, 1000)},
                                        3, 20, {0, 1000});
    const Solution sol{{Route{{1, 2}}, Route{{3, 4}}, Route{{5, 6}}}};
    const auto schedules = compute_schedules(inst, sol);
    const Neighborhood nh{0, {0, 1, 2}};
    const auto p = route_properties(inst, sol, nh, schedules, 0);
    CHECK(p.route_distance == 20.0);
    CHECK(p.avg_route_distance == 10.0);
    CHECK(p.empty_distance == 10.0);
    CHECK(p.worst_case_fraction == doctest::Approx(2.0 / 3.0));
    CHECK(p.free_capacity == 10.0);
    CHECK(p.fitting_candidates == 2.0);
    CHECK(p.expected_fitting_candidates == doctest::Approx(10.0 / 7.5));
    CHECK(p.route_duration == 20.0);
    CHECK(p.idle_time == 0.0);

    const auto single = route_properties(inst, Solution{{Route{{2}}, Route{{3}}}}, Neighborhood{0, {0, 1}},
                                         compute_schedules(inst, Solution{{Route{{2}}, Route{{3}}}}), 0);
    CHECK(single.empty_distance == 10.0);
}

TEST_CASE("feature layout") {
    CHECK(feature_count(4) == 126);
    CHECK(feature_count(1) == 108);
    const auto names = feature_names(4);
    CHECK(names.size() == 126);
    CHECK(names.front() == "customer_count");
    CHECK(names[1] == "customer_waiting_time_avg");
    CHECK(names[55] == "customer_possible_delay_std");
    CHECK(names[56] == "route_route_distance_avg");
    CHECK(names[106] == "route_gap_0_1");
    CHECK(names.back() == "route_gap_4_3");
}

TEST_CASE("extract_features on a constructed solution") {
    const Instance inst = make_r1_like_instance("f", 60, 9);
    const Solution sol = construct_initial(inst, RepairConfig{});
    const double cost = solution_cost(inst, sol);
    SelectorConfig cfg;
    Rng rng(3);
    for (int t = 0; t < 30; ++t) {
        const Neighborhood nh = create_neighborhood(sol, inst, cfg, rng);
        const auto x = extract_features(inst, sol, nh, cfg);
        REQUIRE(x.size() == 126);
        for (double v : x) CHECK(std::isfinite(v));
        CHECK(x == extract_features(inst, sol, nh, cfg));
        for (std::size_t p = 0; p < 21; ++p) {
            const double avg = x[1 + 5 * p], mx = x[2 + 5 * p], mn = x[3 + 5 * p];
            CHECK(mn <= avg);
            CHECK(avg <= mx);
        }
        const auto schedules = compute_schedules(inst, sol);
        for (int idx : nh.ordered_members) {
            for (CustomerId c : sol.routes[static_cast<std::size_t>(idx)].customer_ids) {
                const auto cp = customer_properties(inst, sol, nh, schedules, c, cfg);
                CHECK(cp.max_gain == cp.distance_contribution - cp.min_greedy_addition_cost);
                CHECK(cp.waiting_time >= 0.0);
            }
            const auto rp = route_properties(inst, sol, nh, schedules, idx);
            CHECK(rp.worst_case_fraction <= 1.0 + 1e-12);
            CHECK(rp.worst_case_fraction >= 0.0);
        }
    }
    CHECK(solution_cost(inst, sol) == cost);

    cfg.n2 = 1;
    const Neighborhood pair = create_neighborhood(sol, inst, cfg, rng);
    CHECK(extract_features(inst, sol, pair, cfg).size() == 108);
    cfg.n2 = 2;
    CHECK_THROWS_AS(extract_features(inst, sol, pair, cfg), Error);
}

TEST_CASE("time_window_difference is symmetric") {
    Rng rng(17);
    const Instance inst = make_instance({});
    for (int t = 0; t < 2000; ++t) {
        const auto rnd = [&](CustomerId id) {
            const double e = uniform_real(rng, 0, 200);
            return make_customer(id, uniform_real(rng, 0, 100), uniform_real(rng, 0, 100), 1, e,
                                 e + uniform_real(rng, 0, 80), uniform_real(rng, 0, 15));
        };
        const Customer a = rnd(1), b = rnd(2);
        CHECK(time_window_difference(inst, a, b, 1000) == time_window_difference(inst, b, a, 1000));
    }
}
