#pragma once

// Input files: transactions, deflators, owner-occupied stock and price
// indices. Converts nominal prices to real terms, interpolates yearly stock
// counts to rounds and normalises the log real price index.

#include "hwd/core_model.hpp"

#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace hwd {

/// Header names of the logical transaction columns.
struct ColumnMap {
    std::string id = "id";
    std::string date = "date";
    std::string price = "price";
    std::string sector = "sector";
    std::string type = "type";
    std::string x = "x";
    std::string y = "y";
    std::string area = "area";
    std::string storey = "storey";
    std::string lease = "lease";
    std::string age = "age";
};

struct ParseOptions {
    /// Study window [start, end); rows outside are rejected.
    std::optional<std::pair<Date, Date>> window;
    /// Valid dwelling types per sector. A sector without an entry accepts any type.
    std::map<Sector, std::set<std::string>> valid_types;
};

struct RowError {
    std::size_t line = 0;
    std::string message;
};

struct ParseResult {
    std::vector<TransactionRecord> records;
    std::vector<RowError> rejected;
    std::size_t rows = 0;
};

/// One record per valid row. Malformed rows are reported with their line
/// number; a missing required column throws DataError.
ParseResult parse_transactions(std::istream& in, const ColumnMap& columns = {}, const ParseOptions& options = {});
ParseResult parse_transactions_file(const std::string& path, const ColumnMap& columns = {},
                                    const ParseOptions& options = {});

/// Real price = nominal / deflator of the record's month (CPI) or quarter (WR, GNI).
/// Throws DataError naming the first record outside the deflator coverage.
std::vector<double> deflate(std::span<const TransactionRecord> records, const DeflatorBundle& bundle,
                            DeflatorKind which);

/// "period,value" with periods "YYYY-MM" or "YYYY-Qn" (one frequency per file).
PeriodSeries parse_period_series(std::istream& in);
PeriodSeries read_period_series(const std::string& path);

/// "year,value" (or "period,value" with a four-digit year).
std::map<int, double> parse_yearly_series(std::istream& in);
std::map<int, double> read_yearly_series(const std::string& path);

/// Day number of the anchor date (July 1) of a yearly observation.
double yearly_anchor_day(int year);

/// Linear interpolation of yearly values anchored on July 1, evaluated at a
/// fractional day number. Throws DataError outside the covered span.
double interpolate_yearly(const std::map<int, double>& yearly, double day);

/// Quarterly GNI divided by the household count interpolated to the middle of each quarter.
PeriodSeries gni_per_household(const PeriodSeries& gni_quarterly, const std::map<int, double>& households);

/// Owner-occupied stock S^t per sector, dwelling type and year.
struct StockTable {
    std::map<Sector, std::map<std::string, std::map<int, double>>> counts;

    std::set<std::string> types(Sector sector) const;
};

/// "year,sector,type,count".
StockTable parse_stock(std::istream& in);
StockTable read_stock(const std::string& path);

/// Multiplies stock counts by "year,sector,type,multiplier" home-ownership
/// rates. Missing entries keep multiplier 1.
void apply_ownership(StockTable& stock, std::istream& in);
void apply_ownership_file(StockTable& stock, const std::string& path);

/// Interpolated stock of one round.
struct RoundStock {
    int round = 0;
    std::map<std::string, double> by_type; // S^t_r
    double total = 0.0;                    // S_r

    double share(const std::string& type) const;
};

/// S^t_r at each round's midpoint and S_r = Σ_t S^t_r.
std::vector<RoundStock> interpolate_stock(const StockTable& stock, Sector sector, const RoundPartition& partition);

/// "quarter,sector,value" with quarters "YYYY-Qn". One series per sector present.
std::map<Sector, PriceIndexSeries> parse_index(std::istream& in);
std::map<Sector, PriceIndexSeries> read_index(const std::string& path);

/// level[q] = ln((index[q]/deflator[q]) / (index[0]/deflator[0])) for the Q
/// quarters starting at `first`. Monthly deflators are averaged per quarter.
LogIndex normalize_index(const PriceIndexSeries& index, const DeflatorBundle& bundle, DeflatorKind which,
                         Quarter first, std::size_t quarters);
LogIndex normalize_index(const PriceIndexSeries& index, const DeflatorBundle& bundle, DeflatorKind which,
                         const RoundPartition& partition);

/// Parses "YYYY-Qn".
Quarter parse_quarter(std::string_view text);

} // namespace hwd
