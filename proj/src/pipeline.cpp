#include "hwd/pipeline.hpp"

#include "hwd/csv.hpp"
#include "hwd/error.hpp"
#include "hwd/report.hpp"
#include "hwd/synth.hpp"
#include "hwd/welfare.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace hwd {

namespace fs = std::filesystem;

namespace {

template <class F>
auto in_context(const std::string& context, F&& fn) {
    try {
        return fn();
    } catch (const Error& e) {
        const auto what = context + ": " + e.what();
        switch (e.kind()) {
        case ErrorKind::Config: throw ConfigError(what);
        case ErrorKind::Data: throw DataError(what);
        case ErrorKind::Numeric: throw NumericError(what);
        }
        throw;
    }
}

std::string cell_name(Sector sector, DeflatorKind deflator) {
    return std::string(to_string(sector)) + "/" + std::string(to_string(deflator));
}

std::string num(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

fs::path resolve(const fs::path& base, const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

void append(Json& cell, const Json& fields) {
    for (const auto& [k, v] : fields.items()) cell[k] = v;
}

template <class T>
std::vector<T> as_list(const Json& j) {
    if (j.is_array()) return j.get<std::vector<T>>();
    return {j.get<T>()};
}

} // namespace

SdDesign parse_design(std::string_view text) {
    if (text == "vs-base" || text == "vs_base") return SdDesign::VsBase;
    if (text == "vs-all" || text == "vs_all" || text == "vs_all_preceding") return SdDesign::VsAll;
    throw ConfigError("unknown design '" + std::string(text) + "'");
}

SdInput parse_input(std::string_view text) {
    if (text == "prices") return SdInput::Prices;
    if (text == "level-enhanced" || text == "level_enhanced") return SdInput::LevelEnhanced;
    throw ConfigError("unknown input '" + std::string(text) + "'");
}

std::string_view to_string(SdDesign design) { return design == SdDesign::VsBase ? "vs-base" : "vs-all"; }
std::string_view to_string(SdInput input) { return input == SdInput::Prices ? "prices" : "level-enhanced"; }

RunConfig::RunConfig() : nu_grid(kAversionGrid.begin(), kAversionGrid.end()) {}

void RunConfig::validate() const {
    const auto need = [](const std::optional<fs::path>& p, const std::string& what) {
        if (!p) throw ConfigError("config is missing the " + what + " file");
        if (!fs::exists(*p)) throw ConfigError(what + " file '" + p->string() + "' does not exist");
    };
    if (!fs::exists(transactions)) throw ConfigError("transactions file '" + transactions.string() + "' does not exist");
    for (auto d : deflators) {
        switch (d) {
        case DeflatorKind::CPI: need(cpi, "cpi"); break;
        case DeflatorKind::WR: need(wr, "wr"); break;
        case DeflatorKind::GNI:
            need(gni, "gni");
            need(households, "households");
            break;
        }
    }
    for (const auto* p : {&stock, &ownership, &index}) {
        if (*p && !fs::exists(**p)) throw ConfigError("input file '" + (*p)->string() + "' does not exist");
    }
    if (ownership && !stock) throw ConfigError("ownership multipliers need a stock file");
    if (rounds.empty()) throw ConfigError("config defines no rounds");
    if (sectors.empty()) throw ConfigError("config selects no sector");
    if (deflators.empty()) throw ConfigError("config selects no deflator");
    if (nu_grid.empty()) throw ConfigError("empty aversion grid");
    for (double nu : nu_grid) {
        if (!(nu >= 0.0)) throw ConfigError("aversion parameter must be non-negative, got " + num(nu));
    }
    for (int s : orders) {
        if (s < 1 || s > 3) throw ConfigError("dominance order must be 1, 2 or 3, got " + std::to_string(s));
    }
    if (bootstrap < 100) throw ConfigError("bootstrap replications must be at least 100");
    if (grid.grid_min < 2 || grid.grid_min > grid.grid_max) throw ConfigError("invalid grid clamps");
    if (!(sigma_scale > 0.0)) throw ConfigError("sigma_scale must be positive");
}

RunConfig config_from_json(const Json& j, const fs::path& base_dir) {
    try {
        RunConfig c;
        c.transactions = resolve(base_dir, j.at("transactions").get<std::string>());
        if (j.contains("deflators")) {
            const auto& d = j.at("deflators");
            const auto opt = [&](const char* key) -> std::optional<fs::path> {
                if (!d.contains(key)) return std::nullopt;
                return resolve(base_dir, d.at(key).get<std::string>());
            };
            c.cpi = opt("cpi");
            c.wr = opt("wr");
            c.gni = opt("gni");
            c.households = opt("households");
        }
        for (const auto& [key, member] : {std::pair{"stock", &c.stock}, std::pair{"ownership", &c.ownership},
                                          std::pair{"index", &c.index}}) {
            if (j.contains(key)) *member = resolve(base_dir, j.at(key).get<std::string>());
        }
        for (const auto& r : j.at("rounds")) {
            c.rounds.push_back({r.at("id").get<int>(), parse_date(r.at("start").get<std::string>()),
                                parse_date(r.at("end").get<std::string>())});
        }
        if (j.contains("valid_types")) {
            for (const auto& [sector, types] : j.at("valid_types").items()) {
                const auto list = types.get<std::vector<std::string>>();
                c.valid_types[parse_sector(sector)] = {list.begin(), list.end()};
            }
        }
        if (j.contains("sectors")) {
            c.sectors.clear();
            for (const auto& s : as_list<std::string>(j.at("sectors"))) c.sectors.push_back(parse_sector(s));
        }
        if (j.contains("deflator")) {
            c.deflators.clear();
            for (const auto& s : as_list<std::string>(j.at("deflator"))) c.deflators.push_back(parse_deflator(s));
        }
        if (j.contains("nu_grid")) c.nu_grid = as_list<double>(j.at("nu_grid"));
        if (j.contains("orders")) c.orders = as_list<int>(j.at("orders"));
        c.bootstrap = j.value("bootstrap", c.bootstrap);
        c.seed = j.value("seed", c.seed);
        c.threads = j.value("threads", c.threads);
        c.grid.grid_min = j.value("grid_min", c.grid.grid_min);
        c.grid.grid_max = j.value("grid_max", c.grid.grid_max);
        c.sigma_scale = j.value("sigma_scale", c.sigma_scale);
        if (j.contains("residual_scale")) {
            const auto s = j.at("residual_scale").get<std::string>();
            if (s == "exponentiated") c.residual_scale = ResidualScale::Exponentiated;
            else if (s == "log") c.residual_scale = ResidualScale::Log;
            else throw ConfigError("unknown residual_scale '" + s + "'");
        }
        if (j.contains("hedonic")) {
            const auto& h = j.at("hedonic");
            c.hedonic.max_knots = h.value("max_knots", c.hedonic.max_knots);
            c.hedonic.observations_per_knot = h.value("observations_per_knot", c.hedonic.observations_per_knot);
            c.hedonic.gcv_points = h.value("gcv_points", c.hedonic.gcv_points);
            if (h.contains("lambda")) c.hedonic.fixed_lambda = h.at("lambda").get<double>();
        }
        if (j.contains("design")) c.design = parse_design(j.at("design").get<std::string>());
        if (j.contains("input")) c.input = parse_input(j.at("input").get<std::string>());
        if (j.contains("out")) c.out = resolve(base_dir, j.at("out").get<std::string>());
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    } catch (const DataError& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

RunConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
    Json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config '" + path.string() + "': " + e.what());
    }
    return config_from_json(j, path.parent_path());
}

void write_atomic(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write '" + tmp.string() + "'");
        out << content;
        out.flush();
        if (!out) throw DataError("failed writing '" + tmp.string() + "'");
    }
    fs::rename(tmp, path);
}

// ---------------------------------------------------------------------------

struct Pipeline::Data {
    RoundPartition partition;
    ParseResult parsed;
    DeflatorBundle bundle;
    std::optional<StockTable> stock;
    std::map<Sector, PriceIndexSeries> index;
    std::map<std::pair<Sector, int>, std::vector<std::size_t>> members; // record positions per (sector, round)
};

Pipeline::Pipeline(RunConfig config) : config_(std::move(config)) { config_.validate(); }

Pipeline::~Pipeline() = default;

Pipeline::Data& Pipeline::data() {
    if (data_) return *data_;
    auto d = std::make_unique<Data>();
    in_context("rounds", [&] {
        d->partition = RoundPartition(config_.rounds);
        return 0;
    });
    ParseOptions options;
    options.window = std::pair{d->partition.window_start(), d->partition.window_end()};
    options.valid_types = config_.valid_types;
    d->parsed = in_context("ingest", [&] { return parse_transactions_file(config_.transactions.string(), {}, options); });
    in_context("deflators", [&] {
        if (config_.cpi) d->bundle.cpi = read_period_series(config_.cpi->string());
        if (config_.wr) d->bundle.wr = read_period_series(config_.wr->string());
        if (config_.gni && config_.households) {
            d->bundle.gni_per_household =
                gni_per_household(read_period_series(config_.gni->string()), read_yearly_series(config_.households->string()));
        }
        return 0;
    });
    if (config_.stock) {
        d->stock = in_context("stock", [&] { return read_stock(config_.stock->string()); });
        if (config_.ownership) in_context("ownership", [&] {
            apply_ownership_file(*d->stock, config_.ownership->string());
            return 0;
        });
    }
    if (config_.index) d->index = in_context("index", [&] { return read_index(config_.index->string()); });
    for (std::size_t k = 0; k < d->parsed.records.size(); ++k) {
        const auto& rec = d->parsed.records[k];
        if (const auto r = d->partition.round_of(rec.date)) d->members[{rec.sector, *r}].push_back(k);
    }
    data_ = std::move(d);
    return *data_;
}

const WeightTable& Pipeline::weight_table(Sector sector) {
    if (auto it = weights_.find(sector); it != weights_.end()) return it->second;
    auto& d = data();
    if (!d.stock) throw ConfigError("weights need a stock file");
    auto table = in_context("weights " + std::string(to_string(sector)), [&] {
        const auto counts = count_transactions(d.parsed.records, sector, d.partition);
        const auto stock = interpolate_stock(*d.stock, sector, d.partition);
        return compute_weights(stock, counts);
    });
    return weights_.emplace(sector, std::move(table)).first->second;
}

const std::vector<double>& Pipeline::real_prices(DeflatorKind deflator) {
    if (auto it = real_.find(deflator); it != real_.end()) return it->second;
    auto& d = data();
    auto prices = in_context("deflate " + std::string(to_string(deflator)),
                             [&] { return deflate(d.parsed.records, d.bundle, deflator); });
    return real_.emplace(deflator, std::move(prices)).first->second;
}

WeightedSample Pipeline::sample(Sector sector, DeflatorKind deflator, int round) {
    auto& d = data();
    const auto it = d.members.find({sector, round});
    if (it == d.members.end() || it->second.empty()) {
        throw DataError("no observations in round " + std::to_string(round) + " (" + std::string(to_string(sector)) + ")");
    }
    const auto& real = real_prices(deflator);
    WeightedSample s;
    s.round_id = round;
    s.sector = sector;
    s.kind = SampleKind::Price;
    for (auto k : it->second) {
        s.values.push_back(real[k]);
        s.weights.push_back(1.0);
        s.type_labels.push_back(d.parsed.records[k].dwelling_type);
    }
    if (d.stock) s = attach_weights(s, weight_table(sector));
    return s;
}

const LogIndex& Pipeline::log_index(Sector sector, DeflatorKind deflator) {
    const auto key = std::pair{sector, deflator};
    if (auto it = indices_.find(key); it != indices_.end()) return it->second;
    auto& d = data();
    const auto it = d.index.find(sector);
    if (it == d.index.end()) throw ConfigError("no price index for sector " + std::string(to_string(sector)));
    auto idx = in_context("index " + cell_name(sector, deflator),
                          [&] { return normalize_index(it->second, d.bundle, deflator, d.partition); });
    return indices_.emplace(key, std::move(idx)).first->second;
}

const HedonicFit& Pipeline::fit(Sector sector, DeflatorKind deflator, int round) {
    const auto key = std::tuple{sector, deflator, round};
    if (auto it = fits_.find(key); it != fits_.end()) return it->second;
    auto& d = data();
    const auto m = d.members.find({sector, round});
    if (m == d.members.end() || m->second.empty()) {
        throw DataError("no observations in round " + std::to_string(round) + " (" + std::string(to_string(sector)) + ")");
    }
    const auto& real = real_prices(deflator);
    std::vector<TransactionRecord> records;
    std::vector<double> prices;
    for (auto k : m->second) {
        records.push_back(d.parsed.records[k]);
        prices.push_back(real[k]);
    }
    auto result = in_context("hedonic " + cell_name(sector, deflator) + " round " + std::to_string(round), [&] {
        std::vector<std::string> notices;
        auto data = hedonic_data(records, prices, round, &notices);
        for (auto& n : notices) notices_.push_back(cell_name(sector, deflator) + " " + n);
        return fit_partial_linear(data, config_.hedonic);
    });
    if (result.lambda_at_boundary) {
        notices_.push_back(cell_name(sector, deflator) + " round " + std::to_string(round) +
                           ": GCV minimum at the boundary of the smoothing grid");
    }
    return fits_.emplace(key, std::move(result)).first->second;
}

// ---------------------------------------------------------------------------

Json Pipeline::ingest() {
    auto& d = data();
    Json j;
    j["command"] = "ingest";
    j["rows"] = d.parsed.rows;
    j["accepted"] = d.parsed.records.size();
    j["rejected"] = d.parsed.rejected.size();
    Json counts = Json::array();
    for (auto sector : config_.sectors) {
        for (const auto& r : d.partition.rounds()) {
            const auto it = d.members.find({sector, r.id});
            counts.push_back({{"sector", to_string(sector)},
                              {"round", r.id},
                              {"start", format_date(r.start)},
                              {"end", format_date(r.end)},
                              {"n", it == d.members.end() ? 0 : it->second.size()}});
        }
    }
    j["counts"] = counts;
    std::ostringstream csv;
    csv << "line,message\n";
    for (const auto& e : d.parsed.rejected) csv << e.line << ',' << csv::escape(e.message) << '\n';
    write_atomic(config_.out / "rejected.csv", csv.str());
    write_atomic(config_.out / "ingest.json", j.dump(2) + "\n");
    return j;
}

Json Pipeline::weights() {
    Json j;
    j["command"] = "weights";
    Json sectors = Json::array();
    for (auto sector : config_.sectors) {
        const auto& table = weight_table(sector);
        Json rounds = Json::array();
        for (const auto& [r, rw] : table.rounds()) {
            Json types = Json::object();
            for (const auto& [t, cell] : rw.by_type) {
                types[t] = {{"weight", cell.weight}, {"count", cell.count}, {"stock_share", cell.stock_share}};
            }
            rounds.push_back({{"round", r}, {"n", rw.n}, {"types", types}});
        }
        sectors.push_back({{"sector", to_string(sector)}, {"rounds", rounds}});
        std::ostringstream csv;
        table.write_csv(csv);
        write_atomic(config_.out / ("weights_" + std::string(to_string(sector)) + ".csv"), csv.str());
    }
    j["sectors"] = sectors;
    write_atomic(config_.out / "weights.json", j.dump(2) + "\n");
    return j;
}

Json Pipeline::welfare() {
    auto& d = data();
    RatioTestOptions options;
    options.bootstrap = {config_.bootstrap, config_.seed, config_.threads};
    options.sigma_scale = config_.sigma_scale;

    Json cells = Json::array();
    std::ostringstream csv;
    csv << "sector,deflator,nu,round,psi_hat,sigma_psi,theta,p_value,p_display,B,seed\n";
    for (auto sector : config_.sectors) {
        for (auto deflator : config_.deflators) {
            const auto base = sample(sector, deflator, 0);
            for (double nu : config_.nu_grid) {
                for (const auto& round : d.partition.rounds()) {
                    if (round.id == 0) continue;
                    const auto context = "welfare " + cell_name(sector, deflator) + " nu=" + num(nu) + " round " +
                                         std::to_string(round.id);
                    const auto report = in_context(context, [&] {
                        return ratio_test(sample(sector, deflator, round.id), base, nu, options);
                    });
                    Json cell{{"sector", to_string(sector)}, {"deflator", to_string(deflator)}, {"round", round.id}};
                    append(cell, to_json(report));
                    cells.push_back(cell);
                    csv << to_string(sector) << ',' << to_string(deflator) << ',' << num(nu) << ',' << round.id << ','
                        << num(report.psi_hat) << ',' << num(report.sigma_psi) << ',' << num(report.theta) << ','
                        << num(report.p_value) << ',' << display_p(report.p_value) << ',' << report.replications
                        << ',' << report.seed << '\n';
                }
            }
        }
    }
    Json j;
    j["command"] = "welfare";
    j["hypothesis"] = "psi >= 1 against psi < 1";
    j["cells"] = cells;
    write_atomic(config_.out / "welfare.csv", csv.str());
    write_atomic(config_.out / "welfare.json", j.dump(2) + "\n");
    return j;
}

Json Pipeline::sd_grid(SdInput input) {
    auto& d = data();
    const BootstrapOptions options{config_.bootstrap, config_.seed, config_.threads};
    Json cells = Json::array();
    std::ostringstream csv;
    csv << "sector,deflator,s,round,comparisons,d_hat,p_value,p_display,B,seed\n";
    for (auto sector : config_.sectors) {
        for (auto deflator : config_.deflators) {
            for (int order : config_.orders) {
                for (const auto& round : d.partition.rounds()) {
                    if (round.id == 0) continue;
                    std::vector<int> comparison_ids{0};
                    if (config_.design == SdDesign::VsAll) {
                        comparison_ids.clear();
                        for (int k = 0; k < round.id; ++k) comparison_ids.push_back(k);
                    }
                    const auto context = "sd " + cell_name(sector, deflator) + " s=" + std::to_string(order) +
                                         " round " + std::to_string(round.id);
                    const auto report = in_context(context, [&] {
                        if (input == SdInput::Prices) {
                            std::vector<WeightedSample> comps;
                            for (int k : comparison_ids) comps.push_back(sample(sector, deflator, k));
                            return sd_test(sample(sector, deflator, round.id), comps, order, options, config_.grid);
                        }
                        const auto& index = log_index(sector, deflator);
                        std::vector<const HedonicFit*> comps;
                        for (int k : comparison_ids) comps.push_back(&fit(sector, deflator, k));
                        return residual_bootstrap_sd(fit(sector, deflator, round.id), comps, index, order, options,
                                                     config_.grid, config_.residual_scale);
                    });
                    Json cell{{"sector", to_string(sector)}, {"deflator", to_string(deflator)}};
                    append(cell, to_json(report));
                    cells.push_back(cell);
                    std::string ids;
                    for (std::size_t c = 0; c < comparison_ids.size(); ++c) {
                        ids += (c ? ";" : "") + std::to_string(comparison_ids[c]);
                    }
                    csv << to_string(sector) << ',' << to_string(deflator) << ',' << order << ',' << round.id << ','
                        << ids << ',' << num(report.d_hat) << ',' << num(report.p_value) << ','
                        << display_p(report.p_value) << ',' << report.replications << ',' << report.seed << '\n';
                }
            }
        }
    }
    Json j;
    j["command"] = input == SdInput::Prices ? "sd" : "residual-sd";
    j["design"] = to_string(config_.design);
    j["input"] = to_string(input);
    j["hypothesis"] = "round j dominates every round in I";
    if (input == SdInput::LevelEnhanced) {
        j["scale"] = config_.residual_scale == ResidualScale::Exponentiated ? "exponentiated" : "log";
    }
    j["cells"] = cells;
    const auto stem = "sd_" + std::string(to_string(config_.design)) + "_" + std::string(to_string(input));
    write_atomic(config_.out / (stem + ".csv"), csv.str());
    write_atomic(config_.out / (stem + ".json"), j.dump(2) + "\n");
    return j;
}

Json Pipeline::sd() { return sd_grid(config_.input); }

Json Pipeline::residual_sd() { return sd_grid(SdInput::LevelEnhanced); }

Json Pipeline::hedonic() {
    auto& d = data();
    Json cells = Json::array();
    for (auto sector : config_.sectors) {
        for (auto deflator : config_.deflators) {
            const LogIndex* index = d.index.count(sector) ? &log_index(sector, deflator) : nullptr;
            for (const auto& round : d.partition.rounds()) {
                const auto& f = fit(sector, deflator, round.id);
                Json cell{{"sector", to_string(sector)}, {"deflator", to_string(deflator)}};
                append(cell, to_json(f));
                cells.push_back(cell);

                std::ostringstream csv;
                csv << "quarter,y,fitted,residual" << (index ? ",level_enhanced" : "") << '\n';
                std::optional<LevelEnhancedSample> le;
                if (index) le = level_enhanced(f, *index);
                for (std::size_t k = 0; k < f.residuals.size(); ++k) {
                    csv << f.obs_quarter[k].label() << ',' << num(f.y[k]) << ',' << num(f.fitted[k]) << ','
                        << num(f.residuals[k]);
                    if (le) csv << ',' << num(le->log_values[k]);
                    csv << '\n';
                }
                write_atomic(config_.out / ("residuals_" + std::string(to_string(sector)) + "_" +
                                            std::string(to_string(deflator)) + "_r" + std::to_string(round.id) + ".csv"),
                             csv.str());
            }
        }
    }
    Json j;
    j["command"] = "hedonic";
    j["cells"] = cells;
    j["notices"] = notices_;
    write_atomic(config_.out / "hedonic.json", j.dump(2) + "\n");
    return j;
}

Json Pipeline::report() {
    auto& d = data();
    Json cells = Json::array();
    std::ostringstream summary_csv;
    summary_csv << "sector,deflator,round,n,mean,min,q1,median,q3,max\n";
    std::ostringstream density_csv;
    density_csv << "sector,deflator,round,bandwidth,x,density\n";
    for (auto sector : config_.sectors) {
        for (auto deflator : config_.deflators) {
            for (const auto& round : d.partition.rounds()) {
                const auto s = sample(sector, deflator, round.id);
                const auto summary = summarize(s);
                const auto trace = density_trace(s);
                Json cell{{"sector", to_string(sector)}, {"deflator", to_string(deflator)}, {"round", round.id}};
                append(cell, to_json(summary));
                cell["bandwidth"] = trace.bandwidth;
                cells.push_back(cell);
                summary_csv << to_string(sector) << ',' << to_string(deflator) << ',' << round.id << ','
                            << summary.n << ',' << num(summary.mean) << ',' << num(summary.min) << ','
                            << num(summary.q1) << ',' << num(summary.median) << ',' << num(summary.q3) << ','
                            << num(summary.max) << '\n';
                for (std::size_t g = 0; g < trace.x.size(); ++g) {
                    density_csv << to_string(sector) << ',' << to_string(deflator) << ',' << round.id << ','
                                << num(trace.bandwidth) << ',' << num(trace.x[g]) << ',' << num(trace.density[g])
                                << '\n';
                }
            }
        }
    }
    Json j;
    j["command"] = "report";
    j["quantile_rule"] = "linear interpolation of the weight CDF; midpoint at exact crossings";
    j["kernel"] = "gaussian, silverman bandwidth";
    j["cells"] = cells;
    write_atomic(config_.out / "report.csv", summary_csv.str());
    write_atomic(config_.out / "density.csv", density_csv.str());
    write_atomic(config_.out / "report.json", j.dump(2) + "\n");
    return j;
}

Json run_synth(const fs::path& spec_path, const fs::path& out) {
    const auto spec = synth::read_scenario(spec_path.string());
    const auto scenario = synth::generate(spec);
    synth::write_scenario_files(scenario, out.string());
    Json j;
    j["command"] = "synth";
    j["seed"] = spec.seed;
    j["rounds"] = spec.rounds.size();
    j["records"] = scenario.records.size();
    return j;
}

} // namespace hwd
