#pragma once

// Synthetic scenarios in the ingest file formats, and exact dominance
// functionals for laws with closed-form CDFs.

#include "hwd/core_model.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace hwd::synth {

enum class LawKind { Uniform, Lognormal, Exponential };

/// Uniform(a, b), Lognormal(μ = a, σ = b) or Exponential(rate = a).
struct Law {
    LawKind kind = LawKind::Uniform;
    double a = 0.0;
    double b = 1.0;

    static Law uniform(double lo, double hi);
    static Law lognormal(double mu, double sigma);
    static Law exponential(double rate);

    double cdf(double p) const;
    double mean() const;
    double lower() const; // infimum of the support
    double sample(std::mt19937_64& rng) const;
    std::vector<double> sample(std::mt19937_64& rng, std::size_t n) const;
    /// Same law with every value multiplied by c > 0.
    Law scaled(double c) const;
};

Law law_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Law& law);

/// Exact D^(s)_ji = D_j − D_i on a grid, s in 1..3. D^(1) is the CDF
/// difference; higher orders integrate it numerically to 1e−10.
std::vector<double> oracle_dominance(const Law& j, const Law& i, int order, std::span<const double> grid);

struct HedonicTruth {
    std::map<std::string, double> beta; // log_area, storey, lease, age
    bool surface = false;               // adds sin(2πx)·cos(2πy)
    double noise = 0.0;                 // σ of the log-price error
};

/// sin(2πx)·cos(2πy) on the unit square.
double test_surface(Location l);

struct RoundSpec {
    Date start{};
    Date end{};
    std::size_t n = 0;
    Law law = Law::lognormal(13.0, 0.4);
    std::map<std::string, double> type_shares;
    std::map<std::string, double> stock_shares;
    double log_index = 0.0; // log price-index level over the round (hedonic scenarios)
};

struct ScenarioSpec {
    std::uint64_t seed = 0;
    Sector sector = Sector::Public;
    std::vector<RoundSpec> rounds;
    std::optional<HedonicTruth> hedonic;
    double stock_total = 100000.0;

    /// Throws ConfigError unless shares sum to 1, sizes are >= 1 and rounds are contiguous.
    void validate() const;
    RoundPartition partition() const;
};

ScenarioSpec scenario_from_json(const nlohmann::json& j);
ScenarioSpec read_scenario(const std::string& path);

struct Scenario {
    ScenarioSpec spec;
    std::vector<TransactionRecord> records;
};

/// Deterministic in (spec, seed). Prices come from each round's law, or from
/// the hedonic truth when one is given.
Scenario generate(const ScenarioSpec& spec);

/// Writes transactions.csv, cpi.csv, wr.csv, gni.csv, households.csv,
/// stock.csv, index.csv and a run config.json into `dir`. Deflators are flat
/// at 1, so real and nominal prices coincide.
void write_scenario_files(const Scenario& scenario, const std::string& dir);

} // namespace hwd::synth
