#include "hwd/ingest.hpp"

#include "hwd/csv.hpp"
#include "hwd/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

namespace hwd {

namespace {

std::ifstream open_or_throw(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    return in;
}

template <class Fn>
auto with_source(const std::string& path, Fn&& fn) {
    auto in = open_or_throw(path);
    try {
        return fn(in);
    } catch (const DataError& e) {
        throw DataError(path + ": " + e.what());
    }
}

std::optional<int> parse_int(std::string_view text) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
    return value;
}

std::string line_prefix(std::size_t line) { return "line " + std::to_string(line) + ": "; }

const std::string& field(const csv::Row& row, std::size_t column) {
    static const std::string empty;
    return column < row.fields.size() ? row.fields[column] : empty;
}

std::optional<double> optional_real(const csv::Row& row, std::optional<std::size_t> column, const char* name) {
    if (!column) return std::nullopt;
    const auto& text = field(row, *column);
    if (text.empty() || text == "NA") return std::nullopt;
    auto value = csv::parse_double(text);
    if (!value) throw DataError(std::string("malformed ") + name + " '" + text + "'");
    return value;
}

} // namespace

// ---------------------------------------------------------------------------
// Transactions

ParseResult parse_transactions(std::istream& in, const ColumnMap& columns, const ParseOptions& options) {
    const auto table = csv::read(in);
    const auto c_date = table.require_column(columns.date, "transactions");
    const auto c_price = table.require_column(columns.price, "transactions");
    const auto c_sector = table.require_column(columns.sector, "transactions");
    const auto c_type = table.require_column(columns.type, "transactions");
    const auto c_x = table.require_column(columns.x, "transactions");
    const auto c_y = table.require_column(columns.y, "transactions");
    const auto c_id = table.column(columns.id);
    const auto c_area = table.column(columns.area);
    const auto c_storey = table.column(columns.storey);
    const auto c_lease = table.column(columns.lease);
    const auto c_age = table.column(columns.age);

    ParseResult result;
    result.rows = table.rows.size();
    result.records.reserve(table.rows.size());

    for (const auto& row : table.rows) {
        try {
            TransactionRecord rec;
            rec.id = c_id && !field(row, *c_id).empty() ? field(row, *c_id) : "L" + std::to_string(row.line);
            rec.date = parse_date(field(row, c_date));
            const auto& price_text = field(row, c_price);
            const auto price = csv::parse_double(price_text);
            if (!price) throw DataError("malformed price '" + price_text + "'");
            if (*price <= 0.0) throw DataError("price must be positive, got '" + price_text + "'");
            rec.nominal_price = *price;
            rec.sector = parse_sector(field(row, c_sector));
            rec.dwelling_type = field(row, c_type);
            if (rec.dwelling_type.empty()) throw DataError("empty dwelling type");
            const auto x = csv::parse_double(field(row, c_x));
            const auto y = csv::parse_double(field(row, c_y));
            if (!x || !y) throw DataError("malformed coordinates");
            rec.location = {*x, *y};
            rec.characteristics.floor_area = optional_real(row, c_area, "area");
            rec.characteristics.storey = optional_real(row, c_storey, "storey");
            rec.characteristics.lease = optional_real(row, c_lease, "lease");
            rec.characteristics.age = optional_real(row, c_age, "age");

            if (options.window) {
                const auto day = day_number(rec.date);
                if (day < day_number(options.window->first) || day >= day_number(options.window->second)) {
                    throw DataError("date " + format_date(rec.date) + " outside study window");
                }
            }
            if (auto it = options.valid_types.find(rec.sector); it != options.valid_types.end()) {
                if (!it->second.contains(rec.dwelling_type)) {
                    throw DataError("dwelling type '" + rec.dwelling_type + "' not valid for sector " +
                                    std::string(to_string(rec.sector)));
                }
            }
            result.records.push_back(std::move(rec));
        } catch (const DataError& e) {
            result.rejected.push_back({row.line, line_prefix(row.line) + e.what()});
        }
    }
    return result;
}

ParseResult parse_transactions_file(const std::string& path, const ColumnMap& columns,
                                    const ParseOptions& options) {
    return with_source(path, [&](std::istream& in) { return parse_transactions(in, columns, options); });
}

std::vector<double> deflate(std::span<const TransactionRecord> records, const DeflatorBundle& bundle,
                            DeflatorKind which) {
    const auto& series = bundle.get(which);
    std::vector<double> out;
    out.reserve(records.size());
    for (const auto& rec : records) {
        const auto d = series.at(rec.date);
        if (!d) {
            throw DataError("record '" + rec.id + "' dated " + format_date(rec.date) + " outside " +
                            std::string(to_string(which)) + " deflator coverage");
        }
        out.push_back(rec.nominal_price / *d);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Deflator series

Quarter parse_quarter(std::string_view text) {
    if (text.size() == 7 && text[4] == '-' && (text[5] == 'Q' || text[5] == 'q')) {
        const auto y = parse_int(text.substr(0, 4));
        const auto q = parse_int(text.substr(6, 1));
        if (y && q && *q >= 1 && *q <= 4) return Quarter::from(*y, *q);
    }
    throw DataError("malformed quarter '" + std::string(text) + "'");
}

PeriodSeries parse_period_series(std::istream& in) {
    const auto table = csv::read(in);
    const auto c_period = table.require_column("period", "deflator");
    const auto c_value = table.require_column("value", "deflator");
    std::optional<Frequency> frequency;
    std::map<int, double> values;
    for (const auto& row : table.rows) {
        const auto& period = field(row, c_period);
        int key = 0;
        Frequency f{};
        if (period.size() == 7 && (period[5] == 'Q' || period[5] == 'q')) {
            key = parse_quarter(period).ordinal;
            f = Frequency::Quarterly;
        } else if (period.size() == 7 && period[4] == '-') {
            const auto y = parse_int(std::string_view(period).substr(0, 4));
            const auto m = parse_int(std::string_view(period).substr(5, 2));
            if (!y || !m || *m < 1 || *m > 12) throw DataError(line_prefix(row.line) + "malformed month '" + period + "'");
            key = *y * 12 + *m - 1;
            f = Frequency::Monthly;
        } else {
            throw DataError(line_prefix(row.line) + "malformed period '" + period + "'");
        }
        if (frequency && *frequency != f) throw DataError(line_prefix(row.line) + "mixed monthly and quarterly periods");
        frequency = f;
        const auto value = csv::parse_double(field(row, c_value));
        if (!value || *value <= 0.0) throw DataError(line_prefix(row.line) + "deflator value must be positive");
        if (!values.emplace(key, *value).second) throw DataError(line_prefix(row.line) + "duplicate period '" + period + "'");
    }
    if (!frequency) throw DataError("deflator series is empty");
    return PeriodSeries(*frequency, std::move(values));
}

PeriodSeries read_period_series(const std::string& path) {
    return with_source(path, [](std::istream& in) { return parse_period_series(in); });
}

std::map<int, double> parse_yearly_series(std::istream& in) {
    const auto table = csv::read(in);
    auto c_year = table.column("year");
    if (!c_year) c_year = table.column("period");
    if (!c_year) throw DataError("yearly series: missing required column 'year'");
    const auto c_value = table.require_column("value", "yearly series");
    std::map<int, double> out;
    for (const auto& row : table.rows) {
        const auto y = parse_int(field(row, *c_year));
        const auto v = csv::parse_double(field(row, c_value));
        if (!y || !v || *v < 0.0) throw DataError(line_prefix(row.line) + "malformed yearly row");
        out[*y] = *v;
    }
    return out;
}

std::map<int, double> read_yearly_series(const std::string& path) {
    return with_source(path, [](std::istream& in) { return parse_yearly_series(in); });
}

double yearly_anchor_day(int year) {
    return static_cast<double>(
        day_number(Date{std::chrono::year{year}, std::chrono::July, std::chrono::day{1}}));
}

double interpolate_yearly(const std::map<int, double>& yearly, double day) {
    if (yearly.empty()) throw DataError("yearly series is empty");
    // First anchor strictly after the day.
    auto hi = yearly.begin();
    while (hi != yearly.end() && yearly_anchor_day(hi->first) <= day) ++hi;
    if (hi == yearly.begin()) {
        throw DataError("day " + format_date(date_from_day_number(static_cast<long>(std::floor(day)))) +
                        " precedes the yearly coverage starting " + std::to_string(yearly.begin()->first));
    }
    auto lo = std::prev(hi);
    const double lo_day = yearly_anchor_day(lo->first);
    if (lo_day == day) return lo->second;
    if (hi == yearly.end()) {
        throw DataError("day " + format_date(date_from_day_number(static_cast<long>(std::floor(day)))) +
                        " is beyond the yearly coverage ending " + std::to_string(lo->first));
    }
    const double t = (day - lo_day) / (yearly_anchor_day(hi->first) - lo_day);
    return lo->second + t * (hi->second - lo->second);
}

PeriodSeries gni_per_household(const PeriodSeries& gni_quarterly, const std::map<int, double>& households) {
    if (gni_quarterly.frequency() != Frequency::Quarterly) throw DataError("GNI series must be quarterly");
    std::map<int, double> out;
    for (const auto& [ordinal, gni] : gni_quarterly.values()) {
        const Quarter q{ordinal};
        const double start = static_cast<double>(day_number(q.first_day()));
        const double end = static_cast<double>(day_number(Quarter{ordinal + 1}.first_day()));
        const double hh = interpolate_yearly(households, 0.5 * (start + end));
        if (!(hh > 0.0)) throw DataError("household count not positive in " + q.label());
        out[ordinal] = gni / hh;
    }
    return PeriodSeries(Frequency::Quarterly, std::move(out));
}

// ---------------------------------------------------------------------------
// Stock

std::set<std::string> StockTable::types(Sector sector) const {
    std::set<std::string> out;
    if (auto it = counts.find(sector); it != counts.end()) {
        for (const auto& [type, years] : it->second) out.insert(type);
    }
    return out;
}

StockTable parse_stock(std::istream& in) {
    const auto table = csv::read(in);
    const auto c_year = table.require_column("year", "stock");
    const auto c_sector = table.require_column("sector", "stock");
    const auto c_type = table.require_column("type", "stock");
    const auto c_count = table.require_column("count", "stock");
    StockTable stock;
    for (const auto& row : table.rows) {
        const auto y = parse_int(field(row, c_year));
        const auto count = csv::parse_double(field(row, c_count));
        if (!y) throw DataError(line_prefix(row.line) + "malformed year");
        if (!count || *count < 0.0) throw DataError(line_prefix(row.line) + "stock count must be non-negative");
        Sector sector{};
        try {
            sector = parse_sector(field(row, c_sector));
        } catch (const DataError& e) {
            throw DataError(line_prefix(row.line) + e.what());
        }
        stock.counts[sector][field(row, c_type)][*y] = *count;
    }
    return stock;
}

StockTable read_stock(const std::string& path) {
    return with_source(path, [](std::istream& in) { return parse_stock(in); });
}

void apply_ownership(StockTable& stock, std::istream& in) {
    const auto table = csv::read(in);
    const auto c_year = table.require_column("year", "ownership");
    const auto c_sector = table.require_column("sector", "ownership");
    const auto c_type = table.require_column("type", "ownership");
    const auto c_mult = table.require_column("multiplier", "ownership");
    for (const auto& row : table.rows) {
        const auto y = parse_int(field(row, c_year));
        const auto m = csv::parse_double(field(row, c_mult));
        if (!y || !m || *m < 0.0) throw DataError(line_prefix(row.line) + "malformed ownership row");
        const auto sector = parse_sector(field(row, c_sector));
        auto& by_type = stock.counts[sector];
        auto it = by_type.find(field(row, c_type));
        if (it == by_type.end()) continue;
        if (auto year = it->second.find(*y); year != it->second.end()) year->second *= *m;
    }
}

void apply_ownership_file(StockTable& stock, const std::string& path) {
    with_source(path, [&](std::istream& in) {
        apply_ownership(stock, in);
        return 0;
    });
}

double RoundStock::share(const std::string& type) const {
    auto it = by_type.find(type);
    if (it == by_type.end() || total <= 0.0) return 0.0;
    return it->second / total;
}

std::vector<RoundStock> interpolate_stock(const StockTable& stock, Sector sector, const RoundPartition& partition) {
    auto it = stock.counts.find(sector);
    if (it == stock.counts.end()) {
        throw DataError("no stock figures for sector " + std::string(to_string(sector)));
    }
    std::vector<RoundStock> out;
    for (const auto& round : partition.rounds()) {
        RoundStock rs;
        rs.round = round.id;
        const double mid = partition.midpoint_day(round.id);
        for (const auto& [type, yearly] : it->second) {
            double value = 0.0;
            try {
                value = interpolate_yearly(yearly, mid);
            } catch (const DataError& e) {
                throw DataError("stock for type '" + type + "', round " + std::to_string(round.id) + ": " + e.what());
            }
            rs.by_type[type] = std::max(0.0, value);
            rs.total += rs.by_type[type];
        }
        out.push_back(std::move(rs));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Price index

std::map<Sector, PriceIndexSeries> parse_index(std::istream& in) {
    const auto table = csv::read(in);
    const auto c_quarter = table.require_column("quarter", "index");
    const auto c_sector = table.require_column("sector", "index");
    const auto c_value = table.require_column("value", "index");
    std::map<Sector, std::map<int, double>> raw;
    for (const auto& row : table.rows) {
        const auto q = parse_quarter(field(row, c_quarter));
        const auto v = csv::parse_double(field(row, c_value));
        if (!v || *v <= 0.0) throw DataError(line_prefix(row.line) + "index value must be positive");
        raw[parse_sector(field(row, c_sector))][q.ordinal] = *v;
    }
    std::map<Sector, PriceIndexSeries> out;
    for (auto& [sector, values] : raw) {
        PriceIndexSeries s;
        s.sector = sector;
        s.first = Quarter{values.begin()->first};
        int expected = s.first.ordinal;
        for (const auto& [ordinal, v] : values) {
            if (ordinal != expected) {
                throw DataError("index for sector " + std::string(to_string(sector)) + " has a gap at " +
                                Quarter{expected}.label());
            }
            s.nominal.push_back(v);
            ++expected;
        }
        out.emplace(sector, std::move(s));
    }
    return out;
}

std::map<Sector, PriceIndexSeries> read_index(const std::string& path) {
    return with_source(path, [](std::istream& in) { return parse_index(in); });
}

LogIndex normalize_index(const PriceIndexSeries& index, const DeflatorBundle& bundle, DeflatorKind which,
                         Quarter first, std::size_t quarters) {
    const auto& deflator = bundle.get(which);
    LogIndex out;
    out.first = first;
    out.levels.reserve(quarters);
    double base = 0.0;
    for (std::size_t q = 0; q < quarters; ++q) {
        const Quarter quarter{first.ordinal + static_cast<int>(q)};
        const auto nominal = index.at(quarter);
        const auto d = deflator.at_quarter(quarter);
        if (!nominal) throw DataError("price index does not cover " + quarter.label());
        if (!d) throw DataError(std::string(to_string(which)) + " deflator does not cover " + quarter.label());
        const double real = *nominal / *d;
        if (q == 0) {
            base = real;
            out.levels.push_back(0.0);
        } else {
            out.levels.push_back(std::log(real / base));
        }
    }
    return out;
}

LogIndex normalize_index(const PriceIndexSeries& index, const DeflatorBundle& bundle, DeflatorKind which,
                         const RoundPartition& partition) {
    return normalize_index(index, bundle, which, partition.first_quarter(), partition.total_quarters());
}

} // namespace hwd
