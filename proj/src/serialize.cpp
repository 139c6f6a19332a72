#include "hwd/serialize.hpp"

namespace hwd {

std::string display_p(double p) {
    if (p <= 0.01) return "0.01";
    if (p <= 0.05) return "0.05";
    if (p <= 0.10) return "0.10";
    return ">0.10";
}

Json to_json(const CriticalValues& c) { return Json{{"1%", c.at_1}, {"5%", c.at_5}, {"10%", c.at_10}}; }

Json to_json(const WelfareEstimate& e) {
    return Json{{"nu", e.nu}, {"W_hat", e.W_hat}, {"sigma2_W", e.sigma2_W}, {"e_hat", e.e_hat}, {"n", e.n}};
}

Json to_json(const RatioTestReport& r) {
    Json j{{"nu", r.nu},
           {"psi_hat", r.psi_hat},
           {"sigma_psi", r.sigma_psi},
           {"theta", r.theta},
           {"p_value", r.p_value},
           {"p_display", display_p(r.p_value)},
           {"critical_values", to_json(r.critical)},
           {"B", r.replications},
           {"seed", r.seed}};
    return j;
}

Json to_json(const SDTestReport& r) {
    return Json{{"s", r.order},
                {"j", r.target},
                {"I", r.comparisons},
                {"d_hat", r.d_hat},
                {"per_pair", r.per_pair},
                {"p_value", r.p_value},
                {"p_display", display_p(r.p_value)},
                {"critical_values", to_json(r.critical)},
                {"B", r.replications},
                {"seed", r.seed},
                {"grid_size", r.grid_sizes}};
}

Json to_json(const HedonicFit& fit) {
    Json delta = Json::object();
    for (std::size_t q = 0; q < fit.delta.size(); ++q) delta[fit.quarters[q + 1].label()] = fit.delta[q];
    Json beta = Json::object();
    for (std::size_t c = 0; c < fit.beta.size(); ++c) beta[fit.characteristic_names[c]] = fit.beta[c];
    return Json{{"round", fit.round},
                {"n", fit.residuals.size()},
                {"baseline_quarter", fit.quarters.empty() ? std::string() : fit.quarters.front().label()},
                {"delta", delta},
                {"beta", beta},
                {"intercept", fit.surface.intercept()},
                {"knots", fit.surface.knot_count()},
                {"lambda", fit.lambda},
                {"lambda_at_boundary", fit.lambda_at_boundary},
                {"gcv", fit.gcv},
                {"r2", fit.r2},
                {"edf", fit.edf}};
}

Json to_json(const DistributionSummary& s) {
    return Json{{"n", s.n},     {"total_weight", s.total_weight}, {"mean", s.mean}, {"min", s.min},
                {"q1", s.q1},   {"median", s.median},             {"q3", s.q3},     {"max", s.max}};
}

} // namespace hwd
