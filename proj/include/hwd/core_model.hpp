#pragma once

// Domain types shared by every stage of the pipeline: transactions, policy
// rounds, weighted samples, deflator series and price indices.

#include <chrono>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hwd {

using Date = std::chrono::year_month_day;

/// Parses "YYYY-MM-DD". Throws DataError on malformed or invalid dates.
Date parse_date(std::string_view text);
std::string format_date(Date date);
/// Days since 1970-01-01.
long day_number(Date date);
Date date_from_day_number(long days);

/// Calendar quarter identified by its ordinal year*4 + (q-1).
struct Quarter {
    int ordinal = 0;

    static Quarter of(Date date);
    static Quarter from(int year, int q) { return Quarter{year * 4 + (q - 1)}; }
    int year() const;
    int number() const; // 1..4
    Date first_day() const;
    std::string label() const; // "YYYY-Qn"

    auto operator<=>(const Quarter&) const = default;
};

/// Calendar month identified by its ordinal year*12 + (m-1).
struct Month {
    int ordinal = 0;

    static Month of(Date date);
    int year() const { return ordinal >= 0 ? ordinal / 12 : -((-ordinal + 11) / 12); }
    int number() const { return ordinal - year() * 12 + 1; }
    Quarter quarter() const { return Quarter::from(year(), (number() - 1) / 3 + 1); }

    auto operator<=>(const Month&) const = default;
};

enum class Sector { Public, Private };

std::string_view to_string(Sector sector);
/// Accepts "public"/"private" (case-insensitive). Throws DataError otherwise.
Sector parse_sector(std::string_view text);

struct Location {
    double x = 0.0;
    double y = 0.0;
};

/// Structural characteristics. Absent values are std::nullopt.
struct Characteristics {
    std::optional<double> floor_area; // m²
    std::optional<double> storey;
    std::optional<double> lease;      // 1 = freehold, 0 = leasehold
    std::optional<double> age;        // years
};

struct TransactionRecord {
    std::string id;
    Date date{};
    double nominal_price = 0.0;
    Sector sector = Sector::Public;
    std::string dwelling_type;
    Characteristics characteristics;
    Location location;
};

struct Round {
    int id = 0;
    Date start{}; // inclusive
    Date end{};   // exclusive
};

/// Contiguous, non-overlapping policy rounds. Round 0 is the base period.
/// A date on a boundary belongs to the later round.
class RoundPartition {
public:
    RoundPartition() = default;
    /// Validates ids 0..R in order, strictly increasing dates, contiguity.
    explicit RoundPartition(std::vector<Round> rounds);

    const std::vector<Round>& rounds() const noexcept { return rounds_; }
    std::size_t size() const noexcept { return rounds_.size(); }
    const Round& round(int id) const;

    Date window_start() const { return rounds_.front().start; }
    /// Exclusive end of the study window.
    Date window_end() const { return rounds_.back().end; }
    bool contains(Date date) const;

    /// Round of a date, or nullopt outside the window.
    std::optional<int> round_of(Date date) const;

    /// Calendar quarters touched by the window (Q) and by one round (Q_r).
    Quarter first_quarter() const;
    std::size_t total_quarters() const;
    std::vector<Quarter> quarters_of_round(int id) const;

    /// Midpoint of [start, end) as a fractional day number.
    double midpoint_day(int id) const;

private:
    std::vector<Round> rounds_;
};

enum class SampleKind { Price, Residual };

/// Values with per-observation post-stratification weights for one
/// (sector, round) cell. After re-weighting the weights sum to N.
struct WeightedSample {
    int round_id = 0;
    Sector sector = Sector::Public;
    SampleKind kind = SampleKind::Price;
    std::vector<double> values;
    std::vector<double> weights;
    std::vector<std::string> type_labels; // empty for residual samples

    std::size_t size() const noexcept { return values.size(); }
    bool empty() const noexcept { return values.empty(); }

    /// Equal-weight sample with every weight 1.
    static WeightedSample unweighted(std::vector<double> values, int round_id = 0,
                                     SampleKind kind = SampleKind::Price);
};

struct Violation {
    std::string field;
    std::optional<std::size_t> index;
    std::string message;
};

/// Diagnostic check of the sample invariants. Empty result iff valid.
/// The weight sum must equal N within `sum_tolerance * N`.
std::vector<Violation> validate_sample(const WeightedSample& sample, double sum_tolerance = 1e-6);

/// Throws DataError listing the first violations if the sample is invalid.
void require_valid(const WeightedSample& sample, double sum_tolerance = 1e-6);

enum class Frequency { Monthly, Quarterly };

/// Strictly positive values keyed by month or quarter ordinal.
class PeriodSeries {
public:
    PeriodSeries() = default;
    PeriodSeries(Frequency frequency, std::map<int, double> values);

    Frequency frequency() const noexcept { return frequency_; }
    const std::map<int, double>& values() const noexcept { return values_; }
    bool empty() const noexcept { return values_.empty(); }

    /// Value for the period containing `date`, or nullopt when not covered.
    std::optional<double> at(Date date) const;
    /// Quarterly value; monthly series are averaged over the three months.
    std::optional<double> at_quarter(Quarter quarter) const;

private:
    Frequency frequency_ = Frequency::Monthly;
    std::map<int, double> values_;
};

enum class DeflatorKind { CPI, WR, GNI };

std::string_view to_string(DeflatorKind kind);
DeflatorKind parse_deflator(std::string_view text);

struct DeflatorBundle {
    std::optional<PeriodSeries> cpi;               // monthly
    std::optional<PeriodSeries> wr;                // quarterly
    std::optional<PeriodSeries> gni_per_household; // quarterly

    const PeriodSeries& get(DeflatorKind kind) const;
};

/// Quarterly nominal price index of one sector.
struct PriceIndexSeries {
    Sector sector = Sector::Public;
    Quarter first;
    std::vector<double> nominal;

    std::optional<double> at(Quarter quarter) const;
};

/// Normalised log real index: level[0] == 0 at the first sample quarter.
struct LogIndex {
    Quarter first;
    std::vector<double> levels;

    std::optional<double> at(Quarter quarter) const;
};

} // namespace hwd
