#pragma once

// JSON forms of reports. Key order is fixed so output is byte-stable.

#include "hwd/dominance.hpp"
#include "hwd/hedonic.hpp"
#include "hwd/report.hpp"
#include "hwd/welfare.hpp"

#include <nlohmann/json.hpp>

#include <string>

namespace hwd {

using Json = nlohmann::ordered_json;

/// Rounds a p-value up to the nearest of 0.01, 0.05, 0.10; larger values become ">0.10".
std::string display_p(double p);

Json to_json(const CriticalValues& c);
Json to_json(const WelfareEstimate& e);
Json to_json(const RatioTestReport& r);
Json to_json(const SDTestReport& r);
Json to_json(const HedonicFit& fit);
Json to_json(const DistributionSummary& s);

} // namespace hwd
