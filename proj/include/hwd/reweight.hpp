#pragma once

// Post-stratification: per (round, dwelling type) weights that make the
// transaction sample reproduce the type composition of the owner-occupied stock.

#include "hwd/core_model.hpp"
#include "hwd/ingest.hpp"

#include <cstddef>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace hwd {

/// Transaction counts N^t_r of one round.
struct RoundCounts {
    int round = 0;
    std::map<std::string, std::size_t> by_type;

    std::size_t total() const;
};

/// Counts by type of the records falling in each round of the partition.
std::vector<RoundCounts> count_transactions(std::span<const TransactionRecord> records, Sector sector,
                                            const RoundPartition& partition);

struct WeightCell {
    double weight = 0.0;      // w^t_r
    std::size_t count = 0;    // N^t_r
    double stock_share = 0.0; // S^t_r / S_r
};

struct RoundWeights {
    std::size_t n = 0; // N_r
    std::map<std::string, WeightCell> by_type;
};

class WeightTable {
public:
    const std::map<int, RoundWeights>& rounds() const noexcept { return rounds_; }
    const RoundWeights& round(int r) const;
    /// Throws DataError when the (round, type) stratum has no weight.
    double weight(int round, const std::string& type) const;

    /// "round,type,weight" for audit.
    void write_csv(std::ostream& out) const;

private:
    friend WeightTable compute_weights(std::span<const RoundStock>, std::span<const RoundCounts>);
    std::map<int, RoundWeights> rounds_;
};

/// w^t_r = (S^t_r/S_r) / (N^t_r/N_r). Types with neither stock nor
/// transactions are dropped. A stocked type without transactions ("empty
/// stratum") or a transacted type without stock ("unknown stratum") throws
/// DataError. Verifies w^t_r·N^t_r = (S^t_r/S_r)·N_r to 1e-9·N_r.
WeightTable compute_weights(std::span<const RoundStock> stock, std::span<const RoundCounts> counts);

/// Sets weight(k) = w^{t(k)}_r and checks that the weights sum to N.
WeightedSample attach_weights(const WeightedSample& sample, const WeightTable& table);

} // namespace hwd
