#include "lens/repair.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace lens {

namespace {

constexpr double kImproveEps = 1e-9;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kRecordBand = 0.05;
constexpr std::size_t kMinRuinSpan = 5;

using Seq = std::vector<int>;  // local node indices, depot implicit

// Dense local copy of an instance: node 0 is the depot, customers follow in
// instance order. Arithmetic matches compute_schedule operation for
// operation, so a route accepted here is accepted by check_feasibility.
class LocalProblem {
public:
    explicit LocalProblem(const Instance& inst) : inst_(inst) {
        const auto cs = inst.customers();
        n_ = cs.size() + 1;
        ids_.push_back(0);
        locs_.push_back(inst.depot());
        demand_.push_back(0);
        service_.push_back(0);
        windows_.push_back(inst.horizon());
        for (const Customer& c : cs) {
            ids_.push_back(c.id);
            locs_.push_back(c.location);
            demand_.push_back(c.demand);
            service_.push_back(c.service_duration);
            windows_.push_back(c.window);
        }
        dist_.resize(n_ * n_);
        for (std::size_t a = 0; a < n_; ++a)
            for (std::size_t b = 0; b < n_; ++b) dist_[a * n_ + b] = euclid(locs_[a], locs_[b]);
    }

    std::size_t customers() const { return n_ - 1; }
    double d(int a, int b) const { return dist_[static_cast<std::size_t>(a) * n_ + static_cast<std::size_t>(b)]; }
    double capacity() const { return inst_.capacity(); }
    double demand(int v) const { return demand_[static_cast<std::size_t>(v)]; }
    CustomerId id(int v) const { return ids_[static_cast<std::size_t>(v)]; }

    int local_of(CustomerId id) const {
        for (std::size_t v = 1; v < n_; ++v)
            if (ids_[v] == id) return static_cast<int>(v);
        return -1;
    }

    double length(const Seq& s) const {
        int prev = 0;
        double total = 0.0;
        for (int v : s) {
            total += d(prev, v);
            prev = v;
        }
        return total + d(prev, 0);
    }

    double load(const Seq& s) const {
        double q = 0.0;
        for (int v : s) q += demand(v);
        return q;
    }

    bool time_feasible(const Seq& s) const {
        double clock = windows_[0].earliest;
        int prev = 0;
        for (int v : s) {
            const auto u = static_cast<std::size_t>(v);
            const double start = std::max(clock + d(prev, v), windows_[u].earliest);
            if (start > windows_[u].latest) return false;
            clock = start + service_[u];
            prev = v;
        }
        return clock + d(prev, 0) <= windows_[0].latest;
    }

    bool feasible(const Seq& s) const { return load(s) <= capacity() && time_feasible(s); }

    // Service starts along s, used for push-forward insertion checks.
    void starts(const Seq& s, std::vector<double>& out) const {
        out.resize(s.size());
        double clock = windows_[0].earliest;
        int prev = 0;
        for (std::size_t k = 0; k < s.size(); ++k) {
            const auto u = static_cast<std::size_t>(s[k]);
            out[k] = std::max(clock + d(prev, s[k]), windows_[u].earliest);
            clock = out[k] + service_[u];
            prev = s[k];
        }
    }

    // Time feasibility of s with c inserted before position pos, given s is
    // feasible and `st` holds its service starts.
    bool insertion_feasible(const Seq& s, const std::vector<double>& st, int c, std::size_t pos) const {
        double clock = windows_[0].earliest;
        int prev = 0;
        if (pos > 0) {
            prev = s[pos - 1];
            clock = st[pos - 1] + service_[static_cast<std::size_t>(prev)];
        }
        const auto cu = static_cast<std::size_t>(c);
        double start = std::max(clock + d(prev, c), windows_[cu].earliest);
        if (start > windows_[cu].latest) return false;
        clock = start + service_[cu];
        prev = c;
        for (std::size_t k = pos; k < s.size(); ++k) {
            const auto u = static_cast<std::size_t>(s[k]);
            start = std::max(clock + d(prev, s[k]), windows_[u].earliest);
            if (start > windows_[u].latest) return false;
            if (start == st[k]) return true;  // schedule rejoins the original one
            clock = start + service_[u];
            prev = s[k];
        }
        return clock + d(prev, 0) <= windows_[0].latest;
    }

    Route to_route(const Seq& s) const {
        Route r;
        r.customer_ids.reserve(s.size());
        for (int v : s) r.customer_ids.push_back(id(v));
        return r;
    }

private:
    const Instance& inst_;
    std::size_t n_ = 0;
    std::vector<CustomerId> ids_;
    std::vector<Location> locs_;
    std::vector<double> demand_;
    std::vector<double> service_;
    std::vector<TimeWindow> windows_;
    std::vector<double> dist_;
};

struct Insertion {
    double cost = kInf;
    std::size_t pos = 0;
};

Insertion best_insertion(const LocalProblem& lp, const Seq& s, const std::vector<double>& st, double load, int c) {
    Insertion best;
    if (load + lp.demand(c) > lp.capacity()) return best;
    for (std::size_t pos = 0; pos <= s.size(); ++pos) {
        const int prev = pos == 0 ? 0 : s[pos - 1];
        const int next = pos == s.size() ? 0 : s[pos];
        const double delta = lp.d(prev, c) + lp.d(c, next) - lp.d(prev, next);
        if (delta < best.cost && lp.insertion_feasible(s, st, c, pos)) best = {delta, pos};
    }
    return best;
}

// Regret-k insertion of `pending` into `routes` (size = fleet, empty routes
// allowed). Returns false if some customer cannot be placed.
bool regret_insert(const LocalProblem& lp, std::vector<Seq>& routes, std::vector<int> pending, int k,
                   Rng* noise_rng = nullptr, double noise = 0.0) {
    const std::size_t R = routes.size();
    std::vector<std::vector<double>> starts(R);
    std::vector<double> loads(R);
    for (std::size_t r = 0; r < R; ++r) {
        lp.starts(routes[r], starts[r]);
        loads[r] = lp.load(routes[r]);
    }
    // noisy insertion costs diversify otherwise deterministic reconstructions
    auto scored = [&](Insertion ins) {
        if (noise_rng && ins.cost != kInf) ins.cost += noise * uniform_real(*noise_rng, -1.0, 1.0);
        return ins;
    };
    // cache[c][r]: best insertion of pending[c] into route r
    std::vector<std::vector<Insertion>> cache(pending.size(), std::vector<Insertion>(R));
    for (std::size_t c = 0; c < pending.size(); ++c)
        for (std::size_t r = 0; r < R; ++r)
            cache[c][r] = scored(best_insertion(lp, routes[r], starts[r], loads[r], pending[c]));

    std::vector<double> options;
    while (!pending.empty()) {
        std::size_t chosen = 0;
        double chosen_regret = -kInf;
        double chosen_cost = kInf;
        std::size_t chosen_route = 0;
        for (std::size_t c = 0; c < pending.size(); ++c) {
            options.clear();
            bool empty_seen = false;
            double best_cost = kInf;
            std::size_t best_route = 0;
            for (std::size_t r = 0; r < R; ++r) {
                const Insertion& ins = cache[c][r];
                if (ins.cost == kInf) continue;
                if (routes[r].empty()) {
                    if (empty_seen) continue;  // all empty vehicles are one option
                    empty_seen = true;
                }
                options.push_back(ins.cost);
                if (ins.cost < best_cost) {
                    best_cost = ins.cost;
                    best_route = r;
                }
            }
            if (options.empty()) return false;
            std::sort(options.begin(), options.end());
            double regret = 0.0;
            for (int h = 1; h < k; ++h)
                regret += static_cast<std::size_t>(h) < options.size() ? options[static_cast<std::size_t>(h)] - options[0]
                                                                        : 1e12;
            if (regret > chosen_regret || (regret == chosen_regret && best_cost < chosen_cost)) {
                chosen = c;
                chosen_regret = regret;
                chosen_cost = best_cost;
                chosen_route = best_route;
            }
        }

        const int node = pending[chosen];
        Seq& target = routes[chosen_route];
        target.insert(target.begin() + static_cast<std::ptrdiff_t>(cache[chosen][chosen_route].pos), node);
        lp.starts(target, starts[chosen_route]);
        loads[chosen_route] += lp.demand(node);
        pending.erase(pending.begin() + static_cast<std::ptrdiff_t>(chosen));
        cache.erase(cache.begin() + static_cast<std::ptrdiff_t>(chosen));
        for (std::size_t c = 0; c < pending.size(); ++c)
            cache[c][chosen_route] =
                scored(best_insertion(lp, target, starts[chosen_route], loads[chosen_route], pending[c]));
    }
    return true;
}

class LocalSearch {
public:
    LocalSearch(const LocalProblem& lp, const RepairConfig& cfg) : lp_(lp), cfg_(cfg) {}

    void run(std::vector<Seq>& routes) const {
        for (int pass = 0; pass < cfg_.max_passes; ++pass) {
            bool improved = false;
            if (cfg_.relocate) improved |= relocate(routes);
            if (cfg_.swap) improved |= swap(routes);
            if (cfg_.two_opt_star) improved |= two_opt_star(routes);
            if (!improved) break;
        }
    }

private:
    int at(const Seq& s, std::ptrdiff_t i) const {
        return (i < 0 || i >= static_cast<std::ptrdiff_t>(s.size())) ? 0 : s[static_cast<std::size_t>(i)];
    }

    bool relocate(std::vector<Seq>& routes) const {
        bool any = false;
        for (std::size_t a = 0; a < routes.size(); ++a) {
            for (std::size_t i = 0; i < routes[a].size();) {
                if (try_relocate(routes, a, i)) {
                    any = true;
                    continue;  // same slot now holds the next customer
                }
                ++i;
            }
        }
        return any;
    }

    bool try_relocate(std::vector<Seq>& routes, std::size_t a, std::size_t i) const {
        const Seq& src = routes[a];
        const int u = src[i];
        const auto ii = static_cast<std::ptrdiff_t>(i);
        const double removal = lp_.d(at(src, ii - 1), at(src, ii + 1)) - lp_.d(at(src, ii - 1), u) - lp_.d(u, at(src, ii + 1));
        Seq reduced = src;
        reduced.erase(reduced.begin() + ii);
        bool empty_tried = false;
        for (std::size_t b = 0; b < routes.size(); ++b) {
            const bool same = b == a;
            if (!same && routes[b].empty()) {
                if (empty_tried) continue;
                empty_tried = true;
            }
            const Seq& dst = same ? reduced : routes[b];
            if (!same && lp_.load(dst) + lp_.demand(u) > lp_.capacity()) continue;
            for (std::size_t j = 0; j <= dst.size(); ++j) {
                if (same && j == i) continue;
                const auto jj = static_cast<std::ptrdiff_t>(j);
                const int prev = at(dst, jj - 1);
                const int next = at(dst, jj);
                const double delta = removal + lp_.d(prev, u) + lp_.d(u, next) - lp_.d(prev, next);
                if (delta >= -kImproveEps) continue;
                Seq cand = dst;
                cand.insert(cand.begin() + jj, u);
                if (!lp_.time_feasible(cand)) continue;
                if (same) {
                    routes[a] = std::move(cand);
                } else {
                    if (!lp_.time_feasible(reduced)) continue;  // rounding can defeat the triangle inequality
                    routes[b] = std::move(cand);
                    routes[a] = std::move(reduced);
                }
                return true;
            }
        }
        return false;
    }

    bool swap(std::vector<Seq>& routes) const {
        bool any = false;
        for (std::size_t a = 0; a < routes.size(); ++a)
            for (std::size_t b = a; b < routes.size(); ++b)
                for (std::size_t i = 0; i < routes[a].size(); ++i)
                    for (std::size_t j = (a == b ? i + 1 : 0); j < routes[b].size(); ++j)
                        if (try_swap(routes, a, i, b, j)) any = true;
        return any;
    }

    bool try_swap(std::vector<Seq>& routes, std::size_t a, std::size_t i, std::size_t b, std::size_t j) const {
        Seq& ra = routes[a];
        Seq& rb = routes[b];
        const int u = ra[i];
        const int v = rb[j];
        double delta;
        if (a == b) {
            Seq cand = ra;
            std::swap(cand[i], cand[j]);
            delta = lp_.length(cand) - lp_.length(ra);
            if (delta >= -kImproveEps || !lp_.time_feasible(cand)) return false;
            ra = std::move(cand);
            return true;
        }
        // exchange u and v, each going to its best feasible slot in the other route
        const double dq = lp_.demand(v) - lp_.demand(u);
        if (lp_.load(ra) + dq > lp_.capacity() || lp_.load(rb) - dq > lp_.capacity()) return false;
        const auto ii = static_cast<std::ptrdiff_t>(i);
        const auto jj = static_cast<std::ptrdiff_t>(j);
        const double removal_u = lp_.d(at(ra, ii - 1), at(ra, ii + 1)) - lp_.d(at(ra, ii - 1), u) - lp_.d(u, at(ra, ii + 1));
        const double removal_v = lp_.d(at(rb, jj - 1), at(rb, jj + 1)) - lp_.d(at(rb, jj - 1), v) - lp_.d(v, at(rb, jj + 1));
        // distance-only bound before any time window work
        if (removal_u + removal_v + cheapest_slot(ra, i, v) + cheapest_slot(rb, j, u) >= -kImproveEps) return false;
        Seq ca = ra, cb = rb;
        ca.erase(ca.begin() + static_cast<std::ptrdiff_t>(i));
        cb.erase(cb.begin() + static_cast<std::ptrdiff_t>(j));
        if (!place_best(ca, v) || !place_best(cb, u)) return false;
        delta = lp_.length(ca) + lp_.length(cb) - lp_.length(ra) - lp_.length(rb);
        if (delta >= -kImproveEps) return false;
        ra = std::move(ca);
        rb = std::move(cb);
        return true;
    }

    // Cheapest insertion delta of c into s with position skip removed, ignoring time windows.
    double cheapest_slot(const Seq& s, std::size_t skip, int c) const {
        double best = kInf;
        int prev = 0;
        for (std::size_t k = 0; k <= s.size(); ++k) {
            if (k == skip) continue;
            const int next = k == s.size() ? 0 : s[k];
            best = std::min(best, lp_.d(prev, c) + lp_.d(c, next) - lp_.d(prev, next));
            prev = next;
        }
        return best;
    }

    // Cheapest time-feasible insertion of c into s; false if there is none.
    bool place_best(Seq& s, int c) const {
        if (!lp_.time_feasible(s)) return false;
        std::vector<double> st;
        lp_.starts(s, st);
        const Insertion ins = best_insertion(lp_, s, st, 0.0, c);
        if (ins.cost == kInf) return false;
        s.insert(s.begin() + static_cast<std::ptrdiff_t>(ins.pos), c);
        return true;
    }

    bool two_opt_star(std::vector<Seq>& routes) const {
        bool any = false;
        for (std::size_t a = 0; a < routes.size(); ++a)
            for (std::size_t b = a + 1; b < routes.size(); ++b)
                if (routes[a].size() + routes[b].size() > 0 && try_two_opt_star(routes, a, b)) any = true;
        return any;
    }

    // Exchange tails: a[0:i] + b[j:] and b[0:j] + a[i:].
    bool try_two_opt_star(std::vector<Seq>& routes, std::size_t a, std::size_t b) const {
        Seq& ra = routes[a];
        Seq& rb = routes[b];
        for (std::size_t i = 0; i <= ra.size(); ++i) {
            for (std::size_t j = 0; j <= rb.size(); ++j) {
                if ((i == 0 && j == 0) || (i == ra.size() && j == rb.size())) continue;
                const auto ii = static_cast<std::ptrdiff_t>(i);
                const auto jj = static_cast<std::ptrdiff_t>(j);
                const int a_prev = at(ra, ii - 1), a_next = at(ra, ii);
                const int b_prev = at(rb, jj - 1), b_next = at(rb, jj);
                const double delta =
                    lp_.d(a_prev, b_next) + lp_.d(b_prev, a_next) - lp_.d(a_prev, a_next) - lp_.d(b_prev, b_next);
                if (delta >= -kImproveEps) continue;
                Seq na(ra.begin(), ra.begin() + ii);
                na.insert(na.end(), rb.begin() + jj, rb.end());
                Seq nb(rb.begin(), rb.begin() + jj);
                nb.insert(nb.end(), ra.begin() + ii, ra.end());
                if (!lp_.feasible(na) || !lp_.feasible(nb)) continue;
                ra = std::move(na);
                rb = std::move(nb);
                return true;
            }
        }
        return false;
    }

    const LocalProblem& lp_;
    const RepairConfig& cfg_;
};

double total_length(const LocalProblem& lp, const std::vector<Seq>& routes) {
    double t = 0.0;
    for (const Seq& s : routes) t += lp.length(s);
    return t;
}

std::vector<Route> to_routes(const LocalProblem& lp, const std::vector<Seq>& routes) {
    std::vector<Route> out;
    for (const Seq& s : routes)
        if (!s.empty()) out.push_back(lp.to_route(s));
    return out;
}

double routes_cost(const Instance& inst, const std::vector<Route>& routes) {
    double t = 0.0;
    for (const Route& r : routes) t += route_cost(inst, r);
    return t;
}

}  // namespace

Extracted extract_subproblem(const Instance& instance, const Solution& solution, const Neighborhood& neighborhood) {
    Extracted out;
    std::vector<Customer> customers;
    for (int idx : neighborhood.ordered_members) {
        const Route& r = solution.routes.at(static_cast<std::size_t>(idx));
        out.warm_start.push_back(r);
        out.sub.route_indices.push_back(idx);
        for (CustomerId id : r.customer_ids) customers.push_back(instance.customer(id));
    }
    out.sub.instance = Instance(instance.name() + "_sub", instance.depot(), instance.horizon(),
                                static_cast<int>(neighborhood.ordered_members.size()), instance.capacity(),
                                std::move(customers));
    return out;
}

std::vector<Route> repair(const SubProblem& sub, const std::vector<Route>& warm_start, const RepairConfig& config,
                          Rng& rng) {
    if (config.regret_k < 2) throw Error(ErrorKind::InvalidArgument, "regret_k must be at least 2");
    if (config.max_passes < 1) throw Error(ErrorKind::InvalidArgument, "max_passes must be at least 1");
    const Instance& inst = sub.instance;
    if (!check_feasibility(inst, Solution{warm_start}).feasible())
        throw Error(ErrorKind::WarmStartInfeasible, "warm start violates the sub-problem constraints");
    if (inst.size() == 0) return warm_start;

    const LocalProblem lp(inst);
    const LocalSearch ls(lp, config);
    std::vector<Seq> best(static_cast<std::size_t>(inst.fleet_size()));
    std::size_t slot = 0;
    for (const Route& r : warm_start) {
        if (r.empty()) continue;
        for (CustomerId id : r.customer_ids) best[slot].push_back(lp.local_of(id));
        ++slot;
    }
    double best_len = total_length(lp, best);
    std::vector<Seq> current = best;

    const std::size_t n = lp.customers();
    // ruin sizes are uniform on 1..2 * fraction * n (at least 1..kMinRuinSpan)
    const auto max_remove = std::min(
        n, std::max(kMinRuinSpan,
                    static_cast<std::size_t>(std::floor(2.0 * config.ruin_fraction * static_cast<double>(n) + 0.5))));
    double edge_sum = 0.0;
    for (std::size_t a = 0; a <= n; ++a)
        for (std::size_t b = 0; b <= n; ++b) edge_sum += lp.d(static_cast<int>(a), static_cast<int>(b));
    const double noise_scale = config.insertion_noise * edge_sum / static_cast<double>((n + 1) * (n + 1));
    std::vector<int> nodes(n);
    std::iota(nodes.begin(), nodes.end(), 1);
    for (int round = 0; round < std::max(1, config.ruin_rounds); ++round) {
        const std::size_t remove_count = 1 + static_cast<std::size_t>(uniform_index(rng, max_remove));
        shuffle(std::span<int>(nodes), rng);
        std::vector<int> removed(nodes.begin(), nodes.begin() + static_cast<std::ptrdiff_t>(remove_count));
        std::vector<Seq> cand = current;
        for (Seq& s : cand)
            std::erase_if(s, [&](int v) { return std::find(removed.begin(), removed.end(), v) != removed.end(); });
        // every other round reinserts with noise scaled to the mean edge length
        const bool noisy = round % 2 == 1;
        if (!regret_insert(lp, cand, removed, config.regret_k, noisy ? &rng : nullptr, noise_scale)) continue;
        ls.run(cand);
        const double len = total_length(lp, cand);
        if (len < best_len - kImproveEps) {
            best = cand;
            best_len = len;
        }
        // record-to-record: walk on within a small band above the best
        if (len <= best_len * (1.0 + kRecordBand)) current = std::move(cand);
    }

    std::vector<Route> result = to_routes(lp, best);
    if (routes_cost(inst, result) < routes_cost(inst, warm_start) &&
        check_feasibility(inst, Solution{result}).feasible())
        return result;
    return warm_start;
}

std::vector<Route> repair_any(const SubProblem& sub, const std::vector<Route>& warm_start,
                              const RepairConfig& config, Rng& rng) {
    if (config.external_command)
        return external_repair(sub, warm_start, *config.external_command, config.external_timeout_seconds);
    return repair(sub, warm_start, config, rng);
}

double improvement(double cost_before, double cost_after) { return std::max(cost_before - cost_after, 0.0); }

Solution construct_initial(const Instance& instance, const RepairConfig& config) {
    const LocalProblem lp(instance);
    std::vector<Seq> routes(static_cast<std::size_t>(instance.fleet_size()));
    std::vector<int> pending(lp.customers());
    std::iota(pending.begin(), pending.end(), 1);
    if (!regret_insert(lp, routes, pending, std::max(2, config.regret_k)))
        throw Error(ErrorKind::InfeasibleInitial,
                    "regret insertion could not place every customer with " + std::to_string(instance.fleet_size()) +
                        " vehicles");
    LocalSearch(lp, config).run(routes);
    Solution s{to_routes(lp, routes)};
    if (!check_feasibility(instance, s).feasible())
        throw Error(ErrorKind::InfeasibleInitial, "constructed solution failed verification");
    return s;
}

Solution apply_repair(const Solution& solution, const Neighborhood& neighborhood, const std::vector<Route>& repaired) {
    const std::vector<int> slots = neighborhood.members();
    Solution out;
    std::size_t next = 0;
    for (std::size_t i = 0; i < solution.routes.size(); ++i) {
        const bool destroyed = std::binary_search(slots.begin(), slots.end(), static_cast<int>(i));
        if (!destroyed) {
            out.routes.push_back(solution.routes[i]);
            continue;
        }
        while (next < repaired.size() && repaired[next].empty()) ++next;
        if (next < repaired.size()) out.routes.push_back(repaired[next++]);
    }
    for (; next < repaired.size(); ++next)
        if (!repaired[next].empty()) out.routes.push_back(repaired[next]);
    return out;
}

}  // namespace lens
