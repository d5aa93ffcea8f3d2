#include <doctest.h>

#include <set>

#include "lens/instance_io.hpp"
#include "lens/repair.hpp"
#include "support.hpp"

using namespace lens;
using namespace lens::testing;

namespace {

SubProblem sub_of(Instance inst) {
    SubProblem s{std::move(inst), {}};
    for (int i = 0; i < s.instance.fleet_size(); ++i) s.route_indices.push_back(i);
    return s;
}

std::multiset<CustomerId> covered(const std::vector<Route>& routes) {
    std::multiset<CustomerId> ids;
    for (const Route& r : routes) ids.insert(r.customer_ids.begin(), r.customer_ids.end());
    return ids;
}

}  // namespace

TEST_CASE("extract_subproblem") {
    Rng rng(4);
    const Instance inst = random_small_instance(rng, 12, 5, 1000);
    const Solution sol{{Route{{1, 2, 3}}, Route{{4, 5}}, Route{{6, 7, 8}}, Route{{9}}, Route{{10, 11, 12}}}};
    Neighborhood nh;
    nh.anchor = 2;
    nh.ordered_members = {2, 0, 3};
    const Extracted ex = extract_subproblem(inst, sol, nh);
    CHECK(ex.sub.instance.fleet_size() == 3);
    CHECK(ex.sub.instance.size() == 7);
    CHECK(ex.sub.route_indices == std::vector<int>{2, 0, 3});
    CHECK(ex.warm_start == std::vector<Route>{sol.routes[2], sol.routes[0], sol.routes[3]});
    for (const Customer& c : ex.sub.instance.customers()) CHECK(c == inst.customer(c.id));
    for (CustomerId id : {4, 5, 10, 11, 12}) CHECK_FALSE(ex.sub.instance.contains(id));
    CHECK(ex.sub.instance.depot() == inst.depot());
    CHECK(ex.sub.instance.capacity() == inst.capacity());
}

TEST_CASE("repair merges two out-and-back routes") {
    const auto sub = sub_of(make_instance({make_customer(1, 0, 5, 1, 0, 100), make_customer(2, 0, 6, 1, 0, 100)}, 2));
    const std::vector<Route> warm{Route{{1}}, Route{{2}}};
    Rng rng(1);
    const auto out = repair(sub, warm, RepairConfig{}, rng);
    CHECK(solution_cost(sub.instance, Solution{out}) == doctest::Approx(12.0));
    CHECK(improvement(22, solution_cost(sub.instance, Solution{out})) == doctest::Approx(10.0));
}

TEST_CASE("repair keeps an optimal singleton") {
    const auto sub = sub_of(make_instance({make_customer(1, 3, 4, 1, 0, 100)}, 1));
    Rng rng(1);
    CHECK(repair(sub, {Route{{1}}}, RepairConfig{}, rng) == std::vector<Route>{Route{{1}}});
}

TEST_CASE("repair rejects an infeasible warm start") {
    const auto sub = sub_of(make_instance({make_customer(1, 0, 5, 70, 0, 100), make_customer(2, 0, 6, 70, 0, 100)}, 2));
    Rng rng(1);
    CHECK_THROWS_WITH_AS(repair(sub, {Route{{1, 2}}}, RepairConfig{}, rng), doctest::Contains("WarmStartInfeasible"),
                         Error);
}

TEST_CASE("improvement clamps at zero") {
    CHECK(improvement(22, 12) == 10.0);
    CHECK(improvement(10, 10) == 0.0);
    CHECK(improvement(10, 11) == 0.0);
}

TEST_CASE("repair contract on random sub-problems") {
    Rng rng(99);
    int checked = 0;
    while (checked < 60) {
        const int n = 2 + static_cast<int>(uniform_index(rng, 5));
        const Instance inst = random_small_instance(rng, n, 2);
        std::vector<Solution> feasible;
        for_each_solution(inst, 2, [&](const Solution& s) {
            if (oracle_feasible(inst, s)) feasible.push_back(s);
        });
        if (feasible.empty()) continue;
        const Solution& warm = feasible[uniform_index(rng, feasible.size())];
        const auto sub = sub_of(inst);
        Rng r1(static_cast<std::uint64_t>(checked)), r2(static_cast<std::uint64_t>(checked));
        const auto out = repair(sub, warm.routes, RepairConfig{}, r1);
        CHECK(check_feasibility(inst, Solution{out}).feasible());
        CHECK(covered(out) == covered(warm.routes));
        CHECK(solution_cost(inst, Solution{out}) <= solution_cost(inst, warm));
        CHECK(out == repair(sub, warm.routes, RepairConfig{}, r2));
        ++checked;
    }
}

TEST_CASE("construct_initial and apply_repair") {
    const Instance inst = make_r1_like_instance("x", 40, 3);
    const Solution s = construct_initial(inst, RepairConfig{});
    CHECK(check_feasibility(inst, s).feasible());

    Neighborhood nh;
    nh.anchor = 1;
    nh.ordered_members = {1, 0};
    std::vector<Route> repaired{Route{}, Route{}};
    for (int idx : {1, 0})
        for (CustomerId id : s.routes[static_cast<std::size_t>(idx)].customer_ids) repaired[0].customer_ids.push_back(id);
    const Solution merged = apply_repair(s, nh, repaired);
    CHECK(merged.routes.size() == s.routes.size() - 1);
    CHECK(merged.routes[0] == repaired[0]);
    for (std::size_t i = 2; i < s.routes.size(); ++i) CHECK(merged.routes[i - 1] == s.routes[i]);

    const Instance crowded = make_instance({make_customer(1, 0, 5, 80, 0, 100), make_customer(2, 0, 6, 80, 0, 100)}, 1);
    CHECK_THROWS_WITH_AS(construct_initial(crowded, RepairConfig{}), doctest::Contains("InfeasibleInitial"), Error);
}

TEST_CASE("external repair adapter") {
    const auto sub = sub_of(make_instance({make_customer(1, 0, 5, 1, 0, 100), make_customer(2, 0, 6, 1, 0, 100)}, 2));
    const std::vector<Route> warm{Route{{1}}, Route{{2}}};
    SUBCASE("cat echoes the warm start") { CHECK(external_repair(sub, warm, "cat") == warm); }
    SUBCASE("a better plan is taken") {
        CHECK(external_repair(sub, warm, "echo '1 2'") == std::vector<Route>{Route{{1, 2}}});
    }
    SUBCASE("an incomplete plan falls back") { CHECK(external_repair(sub, warm, "echo 1") == warm); }
    SUBCASE("a costlier plan falls back") {
        const std::vector<Route> merged{Route{{1, 2}}};
        CHECK(external_repair(sub, merged, "printf '1\\n2\\n'") == merged);
    }
    SUBCASE("failures") {
        CHECK_THROWS_WITH_AS(external_repair(sub, warm, "/nonexistent/solver"), doctest::Contains("ExternalFailure"),
                             Error);
        CHECK_THROWS_WITH_AS(external_repair(sub, warm, "echo a b"), doctest::Contains("ExternalFailure"), Error);
        CHECK_THROWS_WITH_AS(external_repair(sub, warm, "sleep 5", 0.2), doctest::Contains("ExternalFailure"), Error);
    }
    SUBCASE("dispatch") {
        RepairConfig cfg;
        cfg.external_command = "cat";
        Rng rng(1);
        CHECK(repair_any(sub, warm, cfg, rng) == warm);
    }
}
