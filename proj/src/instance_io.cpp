#include "lens/instance_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "lens/rng.hpp"

namespace lens {

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        std::size_t j = i;
        while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

bool parse_double(std::string_view tok, double& out) {
    if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
    return ec == std::errc() && ptr == tok.data() + tok.size() && std::isfinite(out);
}

[[noreturn]] void fail(std::size_t line, const std::string& what) {
    throw Error(ErrorKind::ParseError, "line " + std::to_string(line) + ": " + what);
}

double number_at(std::string_view tok, std::size_t line, const char* field) {
    double v = 0.0;
    if (!parse_double(tok, v)) fail(line, std::string("non-numeric ") + field + " '" + std::string(tok) + "'");
    return v;
}

int integer_at(std::string_view tok, std::size_t line, const char* field) {
    const double v = number_at(tok, line, field);
    if (v != std::floor(v) || std::abs(v) > 1e9) fail(line, std::string("non-integer ") + field);
    return static_cast<int>(v);
}

bool is_numeric_row(const std::vector<std::string_view>& toks) {
    double v;
    return !toks.empty() && parse_double(toks.front(), v);
}

// Shortest decimal that reads back as the same double, never in exponent
// form. Benchmark values come out with their usual handful of decimals.
std::string fixed(double v) {
    char buf[512];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed);
    std::string s(buf, res.ptr);
    if (s == "-0") s = "0";
    return s;
}

}  // namespace

Instance parse_instance(std::string_view text) {
    enum class Stage { Name, SeekVehicle, VehicleRow, SeekCustomer, Rows };
    Stage stage = Stage::Name;
    std::string name;
    int fleet = 0;
    double capacity = 0.0;
    bool have_depot = false;
    Location depot;
    TimeWindow horizon;
    std::vector<Customer> customers;
    std::vector<std::size_t> customer_lines;

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t nl = text.find('\n', pos);
        const std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
        pos = (nl == std::string_view::npos) ? text.size() + 1 : nl + 1;
        ++line_no;
        const auto toks = split_ws(line);
        if (toks.empty()) continue;

        switch (stage) {
            case Stage::Name:
                name = std::string(toks.front());
                stage = Stage::SeekVehicle;
                break;
            case Stage::SeekVehicle:
                if (toks.front() != "VEHICLE") fail(line_no, "expected VEHICLE section");
                stage = Stage::VehicleRow;
                break;
            case Stage::VehicleRow:
                if (!is_numeric_row(toks)) break;  // column header
                if (toks.size() != 2) fail(line_no, "expected '<vehicles> <capacity>'");
                fleet = integer_at(toks[0], line_no, "vehicle count");
                capacity = number_at(toks[1], line_no, "capacity");
                if (fleet < 1) fail(line_no, "vehicle count must be positive");
                if (!(capacity > 0.0)) fail(line_no, "capacity must be positive");
                stage = Stage::SeekCustomer;
                break;
            case Stage::SeekCustomer:
                if (toks.front() != "CUSTOMER") fail(line_no, "expected CUSTOMER section");
                stage = Stage::Rows;
                break;
            case Stage::Rows: {
                if (!is_numeric_row(toks)) {
                    if (!have_depot && customers.empty()) break;  // column header
                    fail(line_no, "non-numeric id '" + std::string(toks.front()) + "'");
                }
                if (toks.size() != 7) fail(line_no, "expected 7 columns, found " + std::to_string(toks.size()));
                const int id = integer_at(toks[0], line_no, "id");
                const Location loc{number_at(toks[1], line_no, "x"), number_at(toks[2], line_no, "y")};
                const double demand = number_at(toks[3], line_no, "demand");
                const TimeWindow tw{number_at(toks[4], line_no, "ready time"), number_at(toks[5], line_no, "due date")};
                const double service = number_at(toks[6], line_no, "service time");
                if (tw.earliest > tw.latest) fail(line_no, "ready time after due date");
                if (demand < 0.0 || service < 0.0) fail(line_no, "negative demand or service time");
                if (id == 0) {
                    if (have_depot) fail(line_no, "second depot row");
                    if (demand != 0.0 || service != 0.0)
                        throw Error(ErrorKind::InconsistentDepot,
                                    "line " + std::to_string(line_no) + ": depot demand and service must be 0");
                    have_depot = true;
                    depot = loc;
                    horizon = tw;
                } else {
                    if (id < 0) fail(line_no, "negative id");
                    customers.push_back({id, loc, demand, service, tw});
                    customer_lines.push_back(line_no);
                }
                break;
            }
        }
    }
    if (stage != Stage::Rows) fail(line_no, "truncated document");
    if (!have_depot) fail(line_no, "no depot row (id 0)");

    std::vector<int> order(customers.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return customers[a].id < customers[b].id; });
    for (std::size_t k = 1; k < order.size(); ++k)
        if (customers[order[k]].id == customers[order[k - 1]].id)
            fail(customer_lines[order[k]], "duplicate id " + std::to_string(customers[order[k]].id));
    return Instance(std::move(name), depot, horizon, fleet, capacity, std::move(customers));
}

Instance read_instance_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_instance(buf.str());
}

std::string write_instance(const Instance& instance) {
    std::ostringstream os;
    os << instance.name() << "\n\n";
    os << "VEHICLE\n";
    os << "NUMBER     CAPACITY\n";
    os << "  " << instance.fleet_size() << "   " << fixed(instance.capacity()) << "\n\n";
    os << "CUSTOMER\n";
    os << "CUST NO.  XCOORD.   YCOORD.    DEMAND   READY TIME  DUE DATE   SERVICE TIME\n\n";
    auto row = [&](int id, const Location& p, double q, const TimeWindow& w, double s) {
        os << id << ' ' << fixed(p.x) << ' ' << fixed(p.y) << ' ' << fixed(q) << ' ' << fixed(w.earliest)
           << ' ' << fixed(w.latest) << ' ' << fixed(s) << '\n';
    };
    row(0, instance.depot(), 0.0, instance.horizon(), 0.0);
    for (const Customer& c : instance.customers())
        row(c.id, c.location, c.demand, c.window, c.service_duration);
    return os.str();
}

void write_instance_file(const Instance& instance, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + path);
    out << write_instance(instance);
    if (!out) throw Error(ErrorKind::IoError, "write failed for " + path);
}

std::vector<GenEntry> r1_generation_entries() {
    return {
        {FixedLength{10}, 1.00}, {FixedLength{10}, 0.75}, {FixedLength{10}, 0.50},
        {FixedLength{10}, 0.25}, {FixedLength{30}, 1.00}, {FixedLength{30}, 0.75},
        {FixedLength{30}, 0.50}, {FixedLength{30}, 0.25}, {NormalLength{60, 20}, 1.00},
        {NormalLength{120, 30}, 1.00},
    };
}

std::pair<double, double> midpoint_bounds(const Instance& base, const Customer& c) {
    const double d = euclid(base.depot(), c.location);
    return {base.horizon().earliest + d, base.horizon().latest - d - c.service_duration};
}

std::map<CustomerId, double> sample_midpoints(const Instance& base, std::uint64_t seed) {
    Rng rng(seed);
    std::map<CustomerId, double> mids;
    for (const Customer& c : base.customers()) {
        const auto [lo, hi] = midpoint_bounds(base, c);
        if (lo > hi)
            throw Error(ErrorKind::InfeasibleCustomer,
                        "customer " + std::to_string(c.id) + " cannot be served within the horizon");
        mids[c.id] = uniform_real(rng, lo, hi);
    }
    return mids;
}

std::size_t restricted_count(double fraction, std::size_t n) {
    return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 0.5));
}

std::vector<Instance> generate_batch(const BatchSpec& spec) {
    const Instance& base = spec.base_instance;
    for (const GenEntry& e : spec.entries) {
        if (!(e.fraction > 0.0 && e.fraction <= 1.0))
            throw Error(ErrorKind::InvalidArgument, "fraction must lie in (0, 1]");
        if (const auto* f = std::get_if<FixedLength>(&e.length_rule); f && !(f->length > 0.0))
            throw Error(ErrorKind::InvalidArgument, "fixed window length must be positive");
        if (const auto* g = std::get_if<NormalLength>(&e.length_rule); g && !(g->mean > 0.0 && g->stddev > 0.0))
            throw Error(ErrorKind::InvalidArgument, "normal window length needs mean, stddev > 0");
    }

    const auto mids = sample_midpoints(base, derive_seed(spec.seed, 0));
    const double horizon_len = base.horizon().length();
    const auto base_customers = base.customers();
    const std::size_t n = base_customers.size();

    std::vector<Instance> batch;
    batch.reserve(spec.entries.size());
    for (std::size_t k = 0; k < spec.entries.size(); ++k) {
        const GenEntry& entry = spec.entries[k];
        Rng rng(derive_seed(spec.seed, 1, k));

        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        shuffle(std::span<std::size_t>(order), rng);
        std::vector<bool> restricted(n, false);
        for (std::size_t i = 0; i < restricted_count(entry.fraction, n); ++i) restricted[order[i]] = true;

        std::vector<Customer> customers(base_customers.begin(), base_customers.end());
        for (std::size_t i = 0; i < n; ++i) {
            Customer& c = customers[i];
            if (!restricted[i]) {
                c.window = base.horizon();
                continue;
            }
            double len = 0.0;
            if (const auto* f = std::get_if<FixedLength>(&entry.length_rule)) {
                len = f->length;
            } else {
                const auto& g = std::get<NormalLength>(entry.length_rule);
                len = std::clamp(g.mean + g.stddev * standard_normal(rng), 1.0, std::max(1.0, horizon_len));
            }
            const auto [lo, hi] = midpoint_bounds(base, c);
            const double mid = mids.at(c.id);
            c.window = {std::max(mid - 0.5 * len, lo), std::min(mid + 0.5 * len, hi)};
        }
        batch.emplace_back(base.name() + "_" + std::to_string(k + 1), base.depot(), base.horizon(),
                           base.fleet_size(), base.capacity(), std::move(customers));
    }
    return batch;
}

Instance make_r1_like_instance(const std::string& name, std::size_t customers, std::uint64_t seed,
                               int fleet_size) {
    Rng rng(seed);
    const Location depot{50, 50};
    const TimeWindow horizon{0, 230};
    std::vector<Customer> cs;
    cs.reserve(customers);
    for (std::size_t i = 0; i < customers; ++i) {
        Customer c;
        c.id = static_cast<int>(i + 1);
        c.location = {static_cast<double>(uniform_index(rng, 101)), static_cast<double>(uniform_index(rng, 101))};
        c.demand = static_cast<double>(1 + uniform_index(rng, 30));
        c.service_duration = 10;
        c.window = horizon;
        cs.push_back(c);
    }
    const int fleet = fleet_size > 0 ? fleet_size : std::max(1, static_cast<int>((customers + 2) / 3));
    return Instance(name, depot, horizon, fleet, 200, std::move(cs));
}

}  // namespace lens
