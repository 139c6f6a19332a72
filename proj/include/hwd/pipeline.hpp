#pragma once

// Batch pipeline behind the command-line tool: configuration, data loading
// and one entry point per subcommand. Every command writes its outputs into
// the configured directory and returns the JSON it wrote.

#include "hwd/core_model.hpp"
#include "hwd/dominance.hpp"
#include "hwd/hedonic.hpp"
#include "hwd/ingest.hpp"
#include "hwd/reweight.hpp"
#include "hwd/serialize.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace hwd {

enum class SdDesign { VsBase, VsAll };
enum class SdInput { Prices, LevelEnhanced };

SdDesign parse_design(std::string_view text); // "vs-base" | "vs-all"
SdInput parse_input(std::string_view text);   // "prices" | "level-enhanced"
std::string_view to_string(SdDesign design);
std::string_view to_string(SdInput input);

struct RunConfig {
    std::filesystem::path transactions;
    std::optional<std::filesystem::path> cpi;
    std::optional<std::filesystem::path> wr;
    std::optional<std::filesystem::path> gni;
    std::optional<std::filesystem::path> households;
    std::optional<std::filesystem::path> stock;
    std::optional<std::filesystem::path> ownership;
    std::optional<std::filesystem::path> index;
    std::vector<Round> rounds;
    std::map<Sector, std::set<std::string>> valid_types;

    std::vector<Sector> sectors{Sector::Public};
    std::vector<DeflatorKind> deflators{DeflatorKind::CPI};
    std::vector<double> nu_grid;
    std::vector<int> orders{1, 2, 3};
    std::size_t bootstrap = 1000;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    DominanceConfig grid;
    double sigma_scale = 1.0;
    ResidualScale residual_scale = ResidualScale::Exponentiated;
    HedonicConfig hedonic;
    SdDesign design = SdDesign::VsBase;
    SdInput input = SdInput::Prices;
    std::filesystem::path out = "out";

    RunConfig();

    /// Throws ConfigError: missing files, ν < 0, B < 100, orders outside 1..3, no rounds.
    void validate() const;
};

/// Relative paths are resolved against `base_dir`.
RunConfig config_from_json(const Json& j, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path);

/// Writes to a temporary sibling and renames it into place.
void write_atomic(const std::filesystem::path& path, const std::string& content);

class Pipeline {
public:
    explicit Pipeline(RunConfig config);
    ~Pipeline();

    const RunConfig& config() const noexcept { return config_; }

    Json ingest();
    Json weights();
    Json welfare();
    Json sd();
    Json hedonic();
    Json residual_sd();
    Json report();

    /// Weighted real-price sample of one round; throws DataError when empty.
    WeightedSample sample(Sector sector, DeflatorKind deflator, int round);

private:
    struct Data;
    Data& data();
    const WeightTable& weight_table(Sector sector);
    const std::vector<double>& real_prices(DeflatorKind deflator);
    const HedonicFit& fit(Sector sector, DeflatorKind deflator, int round);
    const LogIndex& log_index(Sector sector, DeflatorKind deflator);
    Json sd_grid(SdInput input);

    RunConfig config_;
    std::unique_ptr<Data> data_;
    std::map<Sector, WeightTable> weights_;
    std::map<DeflatorKind, std::vector<double>> real_;
    std::map<std::tuple<Sector, DeflatorKind, int>, HedonicFit> fits_;
    std::map<std::pair<Sector, DeflatorKind>, LogIndex> indices_;
    std::vector<std::string> notices_;
};

/// Generates a scenario from a spec file and writes its input files into `out`.
Json run_synth(const std::filesystem::path& spec, const std::filesystem::path& out);

} // namespace hwd
