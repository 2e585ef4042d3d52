#pragma once

// Method/configuration selection over a table of measured performance, and
// the local test deciding whether the position-derived image is usable.

#include "pasc/codec.hpp"
#include "pasc/types.hpp"

#include <array>
#include <filesystem>
#include <iosfwd>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pasc {

struct PolicyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Method { PASC, JSCC, JSCC_DM, Baseline };

std::string_view to_string(Method m);
Method parse_method(std::string_view name);
/// Baseline 0, JSCC 1, PASC and JSCC_DM 2.
int default_complexity_rank(Method m);

struct PerformanceRecord {
    Method method = Method::PASC;
    int bits = 0;
    std::optional<double> eps;
    double snr_db = 0.0;
    /// Lower is better.
    double metric = 0.0;
    int complexity_rank = 0;

    void validate() const;
    /// "PASC(16k)", "PASC(8k, ε=1)" (the ε is shown only when it differs from 0.4).
    std::string label() const;
    bool operator==(const PerformanceRecord&) const = default;
};

/// Delimited text: header `method,bits,eps,snr_db,metric,complexity_rank`,
/// one record per line, empty eps for methods without a threshold.
std::vector<PerformanceRecord> read_records(std::istream& in);
std::vector<PerformanceRecord> load_records(const std::filesystem::path& path);
void write_records(std::ostream& out, const std::vector<PerformanceRecord>& records);

enum class PolicyMode { ComplexityFirst, BandwidthFirst };

std::string_view to_string(PolicyMode m);
PolicyMode parse_policy_mode(std::string_view name);

struct PolicyObjective {
    PolicyMode mode = PolicyMode::ComplexityFirst;
    double target_metric = 0.23;

    void validate() const;
};

struct Decision {
    PerformanceRecord chosen;
    bool satisfied = false;
    std::string rationale;
};

/// Throws PolicyError if no record exists at snr_db.
Decision select(const std::vector<PerformanceRecord>& records, double snr_db, const PolicyObjective& obj);

struct Recommendation {
    CodecConfig config;
    std::string rationale;
};

/// Thresholds tried, in order, when the target is missed.
inline constexpr std::array<double, 2> kEpsLadder{0.4, 1.0};
/// Relative slack below the target above which halving the bits is proposed.
inline constexpr double kDefaultIdleMargin = 0.1;

/// Proposes a PASC configuration absent from the table, or nullopt.
/// Missed target: the next threshold after the anchor's, at the geometric
/// midpoint between the anchor's budget and the next smaller one. Met target
/// with enough slack: half the bits of the cheapest qualifying PASC record.
std::optional<Recommendation> recommend_new(const std::vector<PerformanceRecord>& records, double snr_db,
                                            const PolicyObjective& obj, double idle_margin = kDefaultIdleMargin);

/// External decision source. Receives a prompt describing the table and the
/// objective; may answer a JSON object {"method", "bits", "eps"}.
using Advisor = std::function<std::optional<std::string>(const std::string& prompt)>;

std::string build_advisor_prompt(const std::vector<PerformanceRecord>& records, double snr_db,
                                 const PolicyObjective& obj);

/// Uses the advisor's pick when it names a record at snr_db that the rule
/// engine would accept as qualifying (or the rule engine's pick when none
/// qualifies); otherwise falls back to select().
Decision select_with_advisor(const std::vector<PerformanceRecord>& records, double snr_db,
                             const PolicyObjective& obj, const Advisor& advisor);

inline constexpr double kMismatchEps = 0.4;
inline constexpr double kMismatchRatio = 0.45;

struct MismatchResult {
    bool mismatch = false;
    double zero_ratio = 0.0;
};

/// Mismatch when the zero ratio of the masked difference does not exceed 0.45.
MismatchResult detect_mismatch(const Image& p, const Image& p_syn);

enum class Route { UsePASC, UseJSCC };

std::string_view to_string(Route r);

struct RouteConfigs {
    std::shared_ptr<const Codec> pasc;
    std::shared_ptr<const Codec> jscc;
};

struct RouteDecision {
    Route route = Route::UsePASC;
    double zero_ratio = 0.0;
};

/// Throws ConfigError if either codec is missing.
RouteDecision route(const Image& p, const Image& p_syn, const RouteConfigs& configs);

}  // namespace pasc
