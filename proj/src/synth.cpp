#include "hwd/synth.hpp"

#include "hwd/error.hpp"
#include "hwd/ingest.hpp"
#include "hwd/rng.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <set>
#include <sstream>

namespace hwd::synth {

namespace fs = std::filesystem;

Law Law::uniform(double lo, double hi) {
    if (!(lo < hi)) throw ConfigError("uniform law needs lower < upper");
    return {LawKind::Uniform, lo, hi};
}

Law Law::lognormal(double mu, double sigma) {
    if (!(sigma > 0.0)) throw ConfigError("lognormal law needs sigma > 0");
    return {LawKind::Lognormal, mu, sigma};
}

Law Law::exponential(double rate) {
    if (!(rate > 0.0)) throw ConfigError("exponential law needs rate > 0");
    return {LawKind::Exponential, rate, 0.0};
}

double Law::cdf(double p) const {
    switch (kind) {
    case LawKind::Uniform:
        return std::clamp((p - a) / (b - a), 0.0, 1.0);
    case LawKind::Lognormal:
        return p <= 0.0 ? 0.0 : 0.5 * std::erfc(-(std::log(p) - a) / (b * std::numbers::sqrt2));
    case LawKind::Exponential:
        return p <= 0.0 ? 0.0 : -std::expm1(-a * p);
    }
    return 0.0;
}

double Law::mean() const {
    switch (kind) {
    case LawKind::Uniform:
        return 0.5 * (a + b);
    case LawKind::Lognormal:
        return std::exp(a + 0.5 * b * b);
    case LawKind::Exponential:
        return 1.0 / a;
    }
    return 0.0;
}

double Law::lower() const { return kind == LawKind::Uniform ? a : 0.0; }

double Law::sample(std::mt19937_64& rng) const {
    switch (kind) {
    case LawKind::Uniform:
        return std::uniform_real_distribution<double>(a, b)(rng);
    case LawKind::Lognormal:
        return std::exp(a + b * std::normal_distribution<double>(0.0, 1.0)(rng));
    case LawKind::Exponential:
        return std::exponential_distribution<double>(a)(rng);
    }
    return 0.0;
}

std::vector<double> Law::sample(std::mt19937_64& rng, std::size_t n) const {
    std::vector<double> out(n);
    for (auto& v : out) v = sample(rng);
    return out;
}

Law Law::scaled(double c) const {
    if (!(c > 0.0)) throw ConfigError("scale factor must be positive");
    switch (kind) {
    case LawKind::Uniform:
        return uniform(a * c, b * c);
    case LawKind::Lognormal:
        return lognormal(a + std::log(c), b);
    case LawKind::Exponential:
        return exponential(a / c);
    }
    return *this;
}

Law law_from_json(const nlohmann::json& j) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "uniform") return Law::uniform(j.at("lower").get<double>(), j.at("upper").get<double>());
    if (kind == "lognormal") return Law::lognormal(j.at("mu").get<double>(), j.at("sigma").get<double>());
    if (kind == "exponential") return Law::exponential(j.at("rate").get<double>());
    throw ConfigError("unsupported law '" + kind + "'");
}

nlohmann::json to_json(const Law& law) {
    switch (law.kind) {
    case LawKind::Uniform:
        return {{"kind", "uniform"}, {"lower", law.a}, {"upper", law.b}};
    case LawKind::Lognormal:
        return {{"kind", "lognormal"}, {"mu", law.a}, {"sigma", law.b}};
    case LawKind::Exponential:
        return {{"kind", "exponential"}, {"rate", law.a}};
    }
    return {};
}

namespace {

/// Points where a CDF has a kink, used to split integration intervals.
void kinks(const Law& law, std::vector<double>& out) {
    if (law.kind == LawKind::Uniform) {
        out.push_back(law.a);
        out.push_back(law.b);
    }
}

} // namespace

std::vector<double> oracle_dominance(const Law& j, const Law& i, int order, std::span<const double> grid) {
    if (order < 1 || order > 3) throw ConfigError("dominance order must be 1, 2 or 3");
    std::vector<double> out;
    out.reserve(grid.size());
    if (order == 1) {
        for (double p : grid) out.push_back(j.cdf(p) - i.cdf(p));
        return out;
    }
    // D^(s)(p) = 1/(s−2)! ∫ (p − t)^(s−2) (F_j − F_i)(t) dt over (−∞, p].
    const double lo = std::min(j.lower(), i.lower());
    std::vector<double> breaks;
    kinks(j, breaks);
    kinks(i, breaks);
    for (double p : grid) {
        if (p <= lo) {
            out.push_back(0.0);
            continue;
        }
        std::vector<double> cuts{lo};
        for (double k : breaks) {
            if (k > lo && k < p) cuts.push_back(k);
        }
        cuts.push_back(p);
        std::sort(cuts.begin(), cuts.end());
        const auto f = [&](double t) {
            const double diff = j.cdf(t) - i.cdf(t);
            return order == 2 ? diff : (p - t) * diff;
        };
        double total = 0.0;
        for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
            if (cuts[c + 1] > cuts[c]) {
                total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, cuts[c], cuts[c + 1], 15, 1e-10);
            }
        }
        out.push_back(total);
    }
    return out;
}

double test_surface(Location l) {
    return std::sin(2.0 * std::numbers::pi * l.x) * std::cos(2.0 * std::numbers::pi * l.y);
}

// ---------------------------------------------------------------------------

namespace {

void check_shares(const std::map<std::string, double>& shares, const std::string& what, std::size_t round) {
    if (shares.empty()) throw ConfigError("round " + std::to_string(round) + ": " + what + " are empty");
    double sum = 0.0;
    for (const auto& [type, s] : shares) {
        if (!(s >= 0.0)) throw ConfigError("round " + std::to_string(round) + ": negative " + what + " for '" + type + "'");
        sum += s;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("round " + std::to_string(round) + ": " + what + " do not sum to 1");
}

std::map<std::string, double> shares_from_json(const nlohmann::json& j) {
    std::map<std::string, double> out;
    for (const auto& [k, v] : j.items()) out[k] = v.get<double>();
    return out;
}

std::string fmt(double v, int precision = 10) {
    std::ostringstream os;
    os << std::setprecision(precision) << v;
    return os.str();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << text;
}

} // namespace

void ScenarioSpec::validate() const {
    if (rounds.empty()) throw ConfigError("scenario has no rounds");
    for (std::size_t r = 0; r < rounds.size(); ++r) {
        const auto& rs = rounds[r];
        if (rs.n < 1) throw ConfigError("round " + std::to_string(r) + ": sample size must be at least 1");
        check_shares(rs.type_shares, "type shares", r);
        check_shares(rs.stock_shares, "stock shares", r);
        for (const auto& [type, s] : rs.type_shares) {
            if (s > 0.0 && rs.stock_shares.count(type) == 0) {
                throw ConfigError("round " + std::to_string(r) + ": type '" + type + "' has no stock share");
            }
        }
    }
    if (!(stock_total > 0.0)) throw ConfigError("stock total must be positive");
    (void)partition();
}

RoundPartition ScenarioSpec::partition() const {
    std::vector<Round> out;
    for (std::size_t r = 0; r < rounds.size(); ++r) out.push_back({static_cast<int>(r), rounds[r].start, rounds[r].end});
    try {
        return RoundPartition(std::move(out));
    } catch (const Error& e) {
        throw ConfigError(std::string("scenario rounds: ") + e.what());
    }
}

ScenarioSpec scenario_from_json(const nlohmann::json& j) {
    try {
        ScenarioSpec spec;
        spec.seed = j.value("seed", std::uint64_t{0});
        spec.sector = parse_sector(j.value("sector", std::string("public")));
        spec.stock_total = j.value("stock_total", 100000.0);
        for (const auto& rj : j.at("rounds")) {
            RoundSpec rs;
            rs.start = parse_date(rj.at("start").get<std::string>());
            rs.end = parse_date(rj.at("end").get<std::string>());
            rs.n = rj.at("n").get<std::size_t>();
            if (rj.contains("law")) rs.law = law_from_json(rj.at("law"));
            rs.type_shares = rj.contains("type_shares") ? shares_from_json(rj.at("type_shares"))
                                                        : std::map<std::string, double>{{"A", 1.0}};
            rs.stock_shares = rj.contains("stock_shares") ? shares_from_json(rj.at("stock_shares")) : rs.type_shares;
            rs.log_index = rj.value("log_index", 0.0);
            spec.rounds.push_back(std::move(rs));
        }
        if (j.contains("hedonic")) {
            const auto& hj = j.at("hedonic");
            HedonicTruth truth;
            if (hj.contains("beta")) truth.beta = shares_from_json(hj.at("beta"));
            truth.surface = hj.value("surface", false);
            truth.noise = hj.value("noise", 0.0);
            if (truth.noise < 0.0) throw ConfigError("hedonic noise must be non-negative");
            spec.hedonic = truth;
        }
        spec.validate();
        return spec;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("scenario: ") + e.what());
    } catch (const DataError& e) {
        throw ConfigError(std::string("scenario: ") + e.what());
    }
}

ScenarioSpec read_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("scenario '" + path + "': " + e.what());
    }
    return scenario_from_json(j);
}

Scenario generate(const ScenarioSpec& spec) {
    spec.validate();
    Scenario out;
    out.spec = spec;
    for (std::size_t r = 0; r < spec.rounds.size(); ++r) {
        const auto& rs = spec.rounds[r];
        auto rng = stream_for(spec.seed, streams::synth, r);
        const long first_day = day_number(rs.start);
        const long span = day_number(rs.end) - first_day;
        std::vector<std::string> types;
        std::vector<double> probs;
        for (const auto& [type, s] : rs.type_shares) {
            types.push_back(type);
            probs.push_back(s);
        }
        std::discrete_distribution<std::size_t> pick_type(probs.begin(), probs.end());
        std::uniform_int_distribution<long> pick_day(0, span - 1);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::normal_distribution<double> normal(0.0, 1.0);
        for (std::size_t k = 0; k < rs.n; ++k) {
            TransactionRecord rec;
            rec.id = "r" + std::to_string(r) + "-" + std::to_string(k);
            rec.date = date_from_day_number(first_day + pick_day(rng));
            rec.sector = spec.sector;
            rec.dwelling_type = types[pick_type(rng)];
            rec.location = {unit(rng), unit(rng)};
            rec.characteristics.floor_area = std::exp(4.5 + 0.3 * normal(rng));
            rec.characteristics.storey = std::floor(1.0 + 30.0 * unit(rng));
            rec.characteristics.lease = unit(rng) < 0.3 ? 1.0 : 0.0;
            rec.characteristics.age = std::floor(40.0 * unit(rng));
            double price = rs.law.sample(rng);
            if (spec.hedonic) {
                const auto& h = *spec.hedonic;
                double logp = 12.0 + rs.log_index;
                const auto coef = [&](const char* name) {
                    const auto it = h.beta.find(name);
                    return it == h.beta.end() ? 0.0 : it->second;
                };
                logp += coef("log_area") * std::log(*rec.characteristics.floor_area);
                logp += coef("storey") * *rec.characteristics.storey;
                logp += coef("lease") * *rec.characteristics.lease;
                logp += coef("age") * *rec.characteristics.age;
                if (h.surface) logp += test_surface(rec.location);
                logp += h.noise * normal(rng);
                price = std::exp(logp);
            }
            rec.nominal_price = price;
            out.records.push_back(std::move(rec));
        }
    }
    return out;
}

void write_scenario_files(const Scenario& scenario, const std::string& dir) {
    const auto& spec = scenario.spec;
    const fs::path root(dir);
    fs::create_directories(root);
    const auto partition = spec.partition();
    const std::string sector(to_string(spec.sector));

    {
        std::ostringstream os;
        os << "id,date,price,sector,type,x,y,area,storey,lease,age\n";
        for (const auto& r : scenario.records) {
            const auto& c = r.characteristics;
            os << r.id << ',' << format_date(r.date) << ',' << fmt(r.nominal_price, 17) << ',' << sector << ','
               << r.dwelling_type << ',' << fmt(r.location.x, 17) << ',' << fmt(r.location.y, 17) << ','
               << fmt(*c.floor_area, 17) << ',' << fmt(*c.storey) << ',' << fmt(*c.lease) << ',' << fmt(*c.age)
               << '\n';
        }
        write_text(root / "transactions.csv", os.str());
    }

    // Flat deflators one year either side of the window.
    const int y0 = static_cast<int>(partition.window_start().year()) - 1;
    const int y1 = static_cast<int>(partition.window_end().year()) + 1;
    {
        std::ostringstream cpi, wr, gni, hh;
        cpi << "period,value\n";
        wr << "period,value\n";
        gni << "period,value\n";
        hh << "year,value\n";
        for (int y = y0; y <= y1; ++y) {
            for (int m = 1; m <= 12; ++m) cpi << y << '-' << std::setw(2) << std::setfill('0') << m << std::setfill(' ') << ",1\n";
            for (int q = 1; q <= 4; ++q) {
                wr << y << "-Q" << q << ",1\n";
                gni << y << "-Q" << q << ",1\n";
            }
        }
        // Households are interpolated between mid-year anchors, so cover one more year each side.
        for (int y = y0 - 1; y <= y1 + 1; ++y) hh << y << ",1\n";
        write_text(root / "cpi.csv", cpi.str());
        write_text(root / "wr.csv", wr.str());
        write_text(root / "gni.csv", gni.str());
        write_text(root / "households.csv", hh.str());
    }

    {
        // Each year takes the stock shares of the round whose midpoint is nearest its anchor.
        std::set<std::string> all_types;
        for (const auto& rs : spec.rounds) {
            for (const auto& [t, s] : rs.stock_shares) all_types.insert(t);
        }
        std::ostringstream os;
        os << "year,sector,type,count\n";
        for (int y = y0; y <= y1; ++y) {
            std::size_t best = 0;
            double best_d = 1e300;
            for (std::size_t r = 0; r < spec.rounds.size(); ++r) {
                const double d = std::abs(partition.midpoint_day(static_cast<int>(r)) - hwd::yearly_anchor_day(y));
                if (d < best_d) {
                    best_d = d;
                    best = r;
                }
            }
            for (const auto& t : all_types) {
                const auto& shares = spec.rounds[best].stock_shares;
                const auto it = shares.find(t);
                const double share = it == shares.end() ? 0.0 : it->second;
                os << y << ',' << sector << ',' << t << ',' << fmt(share * spec.stock_total, 17) << '\n';
            }
        }
        write_text(root / "stock.csv", os.str());
    }

    {
        std::ostringstream os;
        os << "quarter,sector,value\n";
        const Quarter first = partition.first_quarter();
        const auto n = partition.total_quarters();
        for (std::size_t q = 0; q < n; ++q) {
            const Quarter quarter{first.ordinal + static_cast<int>(q)};
            const auto r = partition.round_of(quarter.first_day());
            const double level = r ? spec.rounds[static_cast<std::size_t>(*r)].log_index : spec.rounds.front().log_index;
            os << quarter.label() << ',' << sector << ',' << fmt(100.0 * std::exp(level), 17) << '\n';
        }
        write_text(root / "index.csv", os.str());
    }

    {
        nlohmann::ordered_json config;
        config["transactions"] = "transactions.csv";
        config["deflators"] = {{"cpi", "cpi.csv"}, {"wr", "wr.csv"}, {"gni", "gni.csv"}, {"households", "households.csv"}};
        config["stock"] = "stock.csv";
        config["index"] = "index.csv";
        nlohmann::ordered_json rounds = nlohmann::ordered_json::array();
        for (const auto& r : partition.rounds()) {
            rounds.push_back({{"id", r.id}, {"start", format_date(r.start)}, {"end", format_date(r.end)}});
        }
        config["rounds"] = rounds;
        config["sectors"] = {sector};
        config["deflator"] = {"cpi"};
        config["seed"] = spec.seed;
        write_text(root / "config.json", config.dump(2) + "\n");
    }
}

} // namespace hwd::synth
