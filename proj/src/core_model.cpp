#include "hwd/core_model.hpp"

#include "hwd/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace hwd {

using std::chrono::day;
using std::chrono::days;
using std::chrono::month;
using std::chrono::sys_days;
using std::chrono::year;

namespace {

int floor_div(int a, int b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }

bool parse_int(std::string_view text, int& out) {
    if (text.empty()) return false;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc{} && ptr == text.data() + text.size();
}

std::string lower(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

} // namespace

Date parse_date(std::string_view text) {
    int y = 0, m = 0, d = 0;
    if (text.size() != 10 || text[4] != '-' || text[7] != '-' || !parse_int(text.substr(0, 4), y) ||
        !parse_int(text.substr(5, 2), m) || !parse_int(text.substr(8, 2), d)) {
        throw DataError("malformed date '" + std::string(text) + "'");
    }
    Date date{year{y}, month{static_cast<unsigned>(m)}, day{static_cast<unsigned>(d)}};
    if (!date.ok()) throw DataError("invalid date '" + std::string(text) + "'");
    return date;
}

std::string format_date(Date date) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(date.year()),
                  static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
    return buf;
}

long day_number(Date date) { return sys_days{date}.time_since_epoch().count(); }

Date date_from_day_number(long days_since_epoch) { return Date{sys_days{days{days_since_epoch}}}; }

Quarter Quarter::of(Date date) {
    return from(static_cast<int>(date.year()), (static_cast<int>(static_cast<unsigned>(date.month())) - 1) / 3 + 1);
}

int Quarter::year() const { return floor_div(ordinal, 4); }
int Quarter::number() const { return ordinal - year() * 4 + 1; }

Date Quarter::first_day() const {
    return Date{std::chrono::year{year()}, month{static_cast<unsigned>((number() - 1) * 3 + 1)}, day{1}};
}

std::string Quarter::label() const { return std::to_string(year()) + "-Q" + std::to_string(number()); }

Month Month::of(Date date) {
    return Month{static_cast<int>(date.year()) * 12 + static_cast<int>(static_cast<unsigned>(date.month())) - 1};
}

std::string_view to_string(Sector sector) { return sector == Sector::Public ? "public" : "private"; }

Sector parse_sector(std::string_view text) {
    const auto s = lower(text);
    if (s == "public") return Sector::Public;
    if (s == "private") return Sector::Private;
    throw DataError("unknown sector '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------
// RoundPartition

RoundPartition::RoundPartition(std::vector<Round> rounds) : rounds_(std::move(rounds)) {
    if (rounds_.empty()) throw ConfigError("round partition is empty");
    for (std::size_t r = 0; r < rounds_.size(); ++r) {
        const auto& round = rounds_[r];
        if (round.id != static_cast<int>(r)) {
            throw ConfigError("round ids must be 0..R in order; found " + std::to_string(round.id) +
                              " at position " + std::to_string(r));
        }
        if (!round.start.ok() || !round.end.ok() || sys_days{round.start} >= sys_days{round.end}) {
            throw ConfigError("round " + std::to_string(round.id) + " has start >= end");
        }
        if (r > 0 && sys_days{rounds_[r - 1].end} != sys_days{round.start}) {
            throw ConfigError("rounds " + std::to_string(r - 1) + " and " + std::to_string(r) +
                              " are not contiguous");
        }
    }
}

const Round& RoundPartition::round(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= rounds_.size()) {
        throw ConfigError("unknown round " + std::to_string(id));
    }
    return rounds_[static_cast<std::size_t>(id)];
}

bool RoundPartition::contains(Date date) const { return round_of(date).has_value(); }

std::optional<int> RoundPartition::round_of(Date date) const {
    if (rounds_.empty()) return std::nullopt;
    const auto d = sys_days{date};
    if (d < sys_days{window_start()} || d >= sys_days{window_end()}) return std::nullopt;
    // First round whose end lies after the date.
    auto it = std::upper_bound(rounds_.begin(), rounds_.end(), d,
                               [](sys_days value, const Round& r) { return value < sys_days{r.end}; });
    return it->id;
}

Quarter RoundPartition::first_quarter() const { return Quarter::of(window_start()); }

std::size_t RoundPartition::total_quarters() const {
    const auto last = Quarter::of(date_from_day_number(day_number(window_end()) - 1));
    return static_cast<std::size_t>(last.ordinal - first_quarter().ordinal + 1);
}

std::vector<Quarter> RoundPartition::quarters_of_round(int id) const {
    const auto& r = round(id);
    const auto first = Quarter::of(r.start);
    const auto last = Quarter::of(date_from_day_number(day_number(r.end) - 1));
    std::vector<Quarter> out;
    for (int q = first.ordinal; q <= last.ordinal; ++q) out.push_back(Quarter{q});
    return out;
}

double RoundPartition::midpoint_day(int id) const {
    const auto& r = round(id);
    return 0.5 * (static_cast<double>(day_number(r.start)) + static_cast<double>(day_number(r.end)));
}

// ---------------------------------------------------------------------------
// WeightedSample

WeightedSample WeightedSample::unweighted(std::vector<double> values, int round_id, SampleKind kind) {
    WeightedSample s;
    s.round_id = round_id;
    s.kind = kind;
    s.weights.assign(values.size(), 1.0);
    s.values = std::move(values);
    return s;
}

std::vector<Violation> validate_sample(const WeightedSample& sample, double sum_tolerance) {
    std::vector<Violation> out;
    const auto n = sample.values.size();
    if (sample.weights.size() != n) {
        out.push_back({"weights", std::nullopt,
                       "weights has length " + std::to_string(sample.weights.size()) + ", values has " +
                           std::to_string(n)});
        return out;
    }
    if (!sample.type_labels.empty() && sample.type_labels.size() != n) {
        out.push_back({"type_labels", std::nullopt, "type_labels length does not match values"});
    }
    double total = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double v = sample.values[k];
        if (!std::isfinite(v)) {
            out.push_back({"values", k, "values[" + std::to_string(k) + "] is not finite"});
        } else if (sample.kind == SampleKind::Price && v <= 0.0) {
            out.push_back({"values", k, "values[" + std::to_string(k) + "] <= 0"});
        }
        const double w = sample.weights[k];
        if (!(w > 0.0) || !std::isfinite(w)) {
            out.push_back({"weights", k, "weights[" + std::to_string(k) + "] <= 0"});
        }
        total += w;
    }
    const double target = static_cast<double>(n);
    if (n > 0 && std::abs(total - target) > sum_tolerance * target) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "sum of weights " << total << " differs from N = " << n;
        out.push_back({"weights", std::nullopt, msg.str()});
    }
    return out;
}

void require_valid(const WeightedSample& sample, double sum_tolerance) {
    const auto violations = validate_sample(sample, sum_tolerance);
    if (violations.empty()) return;
    std::string msg = "invalid sample for round " + std::to_string(sample.round_id) + ":";
    for (std::size_t k = 0; k < violations.size() && k < 5; ++k) msg += " " + violations[k].message + ";";
    if (violations.size() > 5) msg += " (" + std::to_string(violations.size() - 5) + " more)";
    throw DataError(msg);
}

// ---------------------------------------------------------------------------
// Series

PeriodSeries::PeriodSeries(Frequency frequency, std::map<int, double> values)
    : frequency_(frequency), values_(std::move(values)) {
    for (const auto& [period, value] : values_) {
        if (!(value > 0.0) || !std::isfinite(value)) {
            throw DataError("series value for period ordinal " + std::to_string(period) + " is not positive");
        }
    }
}

std::optional<double> PeriodSeries::at(Date date) const {
    const int key = frequency_ == Frequency::Monthly ? Month::of(date).ordinal : Quarter::of(date).ordinal;
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
}

std::optional<double> PeriodSeries::at_quarter(Quarter quarter) const {
    if (frequency_ == Frequency::Quarterly) {
        auto it = values_.find(quarter.ordinal);
        if (it == values_.end()) return std::nullopt;
        return it->second;
    }
    const int first_month = quarter.year() * 12 + (quarter.number() - 1) * 3;
    double sum = 0.0;
    for (int m = first_month; m < first_month + 3; ++m) {
        auto it = values_.find(m);
        if (it == values_.end()) return std::nullopt;
        sum += it->second;
    }
    return sum / 3.0;
}

std::string_view to_string(DeflatorKind kind) {
    switch (kind) {
    case DeflatorKind::CPI: return "cpi";
    case DeflatorKind::WR: return "wr";
    case DeflatorKind::GNI: return "gni";
    }
    return "?";
}

DeflatorKind parse_deflator(std::string_view text) {
    const auto s = lower(text);
    if (s == "cpi") return DeflatorKind::CPI;
    if (s == "wr") return DeflatorKind::WR;
    if (s == "gni") return DeflatorKind::GNI;
    throw ConfigError("unknown deflator '" + std::string(text) + "' (expected cpi, wr or gni)");
}

const PeriodSeries& DeflatorBundle::get(DeflatorKind kind) const {
    const std::optional<PeriodSeries>* series = nullptr;
    switch (kind) {
    case DeflatorKind::CPI: series = &cpi; break;
    case DeflatorKind::WR: series = &wr; break;
    case DeflatorKind::GNI: series = &gni_per_household; break;
    }
    if (series == nullptr || !series->has_value()) {
        throw ConfigError("deflator '" + std::string(to_string(kind)) + "' not provided");
    }
    return **series;
}

std::optional<double> PriceIndexSeries::at(Quarter quarter) const {
    const int offset = quarter.ordinal - first.ordinal;
    if (offset < 0 || static_cast<std::size_t>(offset) >= nominal.size()) return std::nullopt;
    return nominal[static_cast<std::size_t>(offset)];
}

std::optional<double> LogIndex::at(Quarter quarter) const {
    const int offset = quarter.ordinal - first.ordinal;
    if (offset < 0 || static_cast<std::size_t>(offset) >= levels.size()) return std::nullopt;
    return levels[static_cast<std::size_t>(offset)];
}

} // namespace hwd
