#include "hwd/reweight.hpp"

#include "hwd/csv.hpp"
#include "hwd/error.hpp"

#include <cmath>
#include <cstdio>
#include <set>

namespace hwd {

std::size_t RoundCounts::total() const {
    std::size_t n = 0;
    for (const auto& [type, count] : by_type) n += count;
    return n;
}

std::vector<RoundCounts> count_transactions(std::span<const TransactionRecord> records, Sector sector,
                                            const RoundPartition& partition) {
    std::vector<RoundCounts> out(partition.size());
    for (std::size_t r = 0; r < out.size(); ++r) out[r].round = static_cast<int>(r);
    for (const auto& rec : records) {
        if (rec.sector != sector) continue;
        if (auto r = partition.round_of(rec.date)) ++out[static_cast<std::size_t>(*r)].by_type[rec.dwelling_type];
    }
    return out;
}

const RoundWeights& WeightTable::round(int r) const {
    auto it = rounds_.find(r);
    if (it == rounds_.end()) throw DataError("no weights for round " + std::to_string(r));
    return it->second;
}

double WeightTable::weight(int r, const std::string& type) const {
    const auto& rw = round(r);
    auto it = rw.by_type.find(type);
    if (it == rw.by_type.end()) {
        throw DataError("no weight for dwelling type '" + type + "' in round " + std::to_string(r));
    }
    return it->second.weight;
}

void WeightTable::write_csv(std::ostream& out) const {
    out << "round,type,weight\n";
    char buf[64];
    for (const auto& [r, rw] : rounds_) {
        for (const auto& [type, cell] : rw.by_type) {
            std::snprintf(buf, sizeof buf, "%.17g", cell.weight);
            out << r << ',' << csv::escape(type) << ',' << buf << '\n';
        }
    }
}

WeightTable compute_weights(std::span<const RoundStock> stock, std::span<const RoundCounts> counts) {
    std::map<int, const RoundStock*> stock_by_round;
    for (const auto& s : stock) stock_by_round[s.round] = &s;

    WeightTable table;
    for (const auto& rc : counts) {
        auto sit = stock_by_round.find(rc.round);
        if (sit == stock_by_round.end()) throw DataError("no stock figures for round " + std::to_string(rc.round));
        const RoundStock& rs = *sit->second;
        const std::size_t n_r = rc.total();
        if (n_r == 0) throw DataError("no observations in round " + std::to_string(rc.round));
        if (!(rs.total > 0.0)) throw DataError("zero total stock in round " + std::to_string(rc.round));

        std::set<std::string> types;
        for (const auto& [t, s] : rs.by_type) types.insert(t);
        for (const auto& [t, n] : rc.by_type) types.insert(t);

        RoundWeights rw;
        rw.n = n_r;
        for (const auto& type : types) {
            const auto s_it = rs.by_type.find(type);
            const double s_t = s_it == rs.by_type.end() ? 0.0 : s_it->second;
            const auto n_it = rc.by_type.find(type);
            const std::size_t n_t = n_it == rc.by_type.end() ? 0 : n_it->second;
            if (s_t <= 0.0 && n_t == 0) continue;
            if (n_t == 0) {
                throw DataError("empty stratum: type '" + type + "' has stock but no transactions in round " +
                                std::to_string(rc.round));
            }
            if (s_t <= 0.0) {
                throw DataError("unknown stratum: type '" + type + "' is transacted but absent from stock in round " +
                                std::to_string(rc.round));
            }
            WeightCell cell;
            cell.count = n_t;
            cell.stock_share = s_t / rs.total;
            cell.weight = cell.stock_share / (static_cast<double>(n_t) / static_cast<double>(n_r));
            rw.by_type.emplace(type, cell);
        }

        double total = 0.0;
        const double nr = static_cast<double>(n_r);
        for (const auto& [type, cell] : rw.by_type) {
            const double effective = cell.weight * static_cast<double>(cell.count);
            if (std::abs(effective - cell.stock_share * nr) > 1e-9 * nr) {
                throw NumericError("re-weighting identity violated for type '" + type + "' in round " +
                                   std::to_string(rc.round));
            }
            total += effective;
        }
        if (std::abs(total - nr) > 1e-9 * nr) {
            throw NumericError("weights do not sum to N in round " + std::to_string(rc.round));
        }
        table.rounds_.emplace(rc.round, std::move(rw));
    }
    return table;
}

WeightedSample attach_weights(const WeightedSample& sample, const WeightTable& table) {
    if (sample.empty()) return sample;
    if (sample.type_labels.size() != sample.size()) {
        throw DataError("sample for round " + std::to_string(sample.round_id) + " has no dwelling types");
    }
    WeightedSample out = sample;
    double total = 0.0;
    for (std::size_t k = 0; k < out.size(); ++k) {
        out.weights[k] = table.weight(sample.round_id, sample.type_labels[k]);
        total += out.weights[k];
    }
    const double n = static_cast<double>(out.size());
    if (std::abs(total - n) > 1e-9 * n) {
        throw DataError("sample composition of round " + std::to_string(sample.round_id) +
                        " does not match the weight table counts");
    }
    return out;
}

} // namespace hwd
