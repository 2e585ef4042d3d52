#include "pasc/adapt.hpp"

#include "pasc/diffmask.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <tuple>

namespace pasc {

std::string_view to_string(Method m) {
    switch (m) {
        case Method::PASC: return "PASC";
        case Method::JSCC: return "JSCC";
        case Method::JSCC_DM: return "JSCC_DM";
        case Method::Baseline: return "Baseline";
    }
    return "?";
}

Method parse_method(std::string_view name) {
    for (Method m : {Method::PASC, Method::JSCC, Method::JSCC_DM, Method::Baseline})
        if (name == to_string(m)) return m;
    throw ArgumentError("unknown method '" + std::string(name) + "'");
}

int default_complexity_rank(Method m) {
    switch (m) {
        case Method::Baseline: return 0;
        case Method::JSCC: return 1;
        default: return 2;
    }
}

namespace {

std::string format_bits(int bits) {
    if (bits > 0 && bits % 1000 == 0) return std::to_string(bits / 1000) + "k";
    return std::to_string(bits);
}

std::string format_real(double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

std::string format_fixed(double v, int digits) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, digits);
    return std::string(buf, end);
}

bool same_snr(double a, double b) { return std::abs(a - b) < 1e-9; }

bool same_eps(const std::optional<double>& a, const std::optional<double>& b) {
    if (a.has_value() != b.has_value()) return false;
    return !a || std::abs(*a - *b) < 1e-12;
}

double eps_or_default(const PerformanceRecord& r) { return r.eps.value_or(kEpsLadder[0]); }

// Full key used to break any remaining ties so the result never depends on
// record order.
auto tail_key(const PerformanceRecord& r) {
    return std::make_tuple(static_cast<int>(r.method), r.eps.has_value(), r.eps.value_or(0.0));
}

bool better(const PerformanceRecord& a, const PerformanceRecord& b, PolicyMode mode) {
    if (mode == PolicyMode::ComplexityFirst)
        return std::tuple(a.complexity_rank, a.bits, a.metric, tail_key(a)) <
               std::tuple(b.complexity_rank, b.bits, b.metric, tail_key(b));
    return std::tuple(a.bits, a.complexity_rank, a.metric, tail_key(a)) <
           std::tuple(b.bits, b.complexity_rank, b.metric, tail_key(b));
}

bool better_metric(const PerformanceRecord& a, const PerformanceRecord& b) {
    return std::tuple(a.metric, a.complexity_rank, a.bits, tail_key(a)) <
           std::tuple(b.metric, b.complexity_rank, b.bits, tail_key(b));
}

std::vector<PerformanceRecord> at_snr(const std::vector<PerformanceRecord>& records, double snr_db) {
    std::vector<PerformanceRecord> out;
    for (const auto& r : records) {
        r.validate();
        if (same_snr(r.snr_db, snr_db)) out.push_back(r);
    }
    return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

std::string trim(std::string s) {
    const auto ws = " \t\r\n";
    s.erase(0, s.find_first_not_of(ws));
    const auto last = s.find_last_not_of(ws);
    s.erase(last == std::string::npos ? 0 : last + 1);
    return s;
}

template <typename T>
T parse_number(const std::string& text, int line_no, const char* column) {
    T value{};
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end)
        throw ConfigError("record table line " + std::to_string(line_no) + ": bad " + column + " '" + text + "'");
    return value;
}

}  // namespace

void PerformanceRecord::validate() const {
    if (bits <= 0) throw PolicyError("record bits must be positive");
    if (!std::isfinite(metric)) throw PolicyError("record metric must be finite");
    if (!std::isfinite(snr_db)) throw PolicyError("record snr must be finite");
}

std::string PerformanceRecord::label() const {
    std::string s = std::string(to_string(method)) + "(" + format_bits(bits);
    if (eps && std::abs(*eps - kEpsLadder[0]) > 1e-12) s += ", \xCE\xB5=" + format_real(*eps);
    return s + ")";
}

std::vector<PerformanceRecord> read_records(std::istream& in) {
    std::vector<PerformanceRecord> out;
    std::string line;
    int line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        auto f = split_csv_line(line);
        for (auto& s : f) s = trim(s);
        if (!header_seen) {
            header_seen = true;
            if (f.size() == 6 && f[0] == "method") continue;
            throw ConfigError("record table line " + std::to_string(line_no) +
                              ": expected header method,bits,eps,snr_db,metric,complexity_rank");
        }
        if (f.size() != 6)
            throw ConfigError("record table line " + std::to_string(line_no) + ": expected 6 fields, got " +
                              std::to_string(f.size()));
        PerformanceRecord r;
        try {
            r.method = parse_method(f[0]);
        } catch (const ArgumentError& e) {
            throw ConfigError("record table line " + std::to_string(line_no) + ": " + e.what());
        }
        r.bits = parse_number<int>(f[1], line_no, "bits");
        if (!f[2].empty()) r.eps = parse_number<double>(f[2], line_no, "eps");
        r.snr_db = parse_number<double>(f[3], line_no, "snr_db");
        r.metric = parse_number<double>(f[4], line_no, "metric");
        r.complexity_rank = parse_number<int>(f[5], line_no, "complexity_rank");
        try {
            r.validate();
        } catch (const PolicyError& e) {
            throw ConfigError("record table line " + std::to_string(line_no) + ": " + e.what());
        }
        out.push_back(r);
    }
    return out;
}

std::vector<PerformanceRecord> load_records(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open record table " + path.string());
    return read_records(in);
}

void write_records(std::ostream& out, const std::vector<PerformanceRecord>& records) {
    out << "method,bits,eps,snr_db,metric,complexity_rank\n";
    for (const auto& r : records)
        out << to_string(r.method) << ',' << r.bits << ',' << (r.eps ? format_real(*r.eps) : "") << ','
            << format_real(r.snr_db) << ',' << format_real(r.metric) << ',' << r.complexity_rank << '\n';
}

std::string_view to_string(PolicyMode m) {
    return m == PolicyMode::ComplexityFirst ? "complexity-first" : "bandwidth-first";
}

PolicyMode parse_policy_mode(std::string_view name) {
    if (name == "complexity-first" || name == "ComplexityFirst") return PolicyMode::ComplexityFirst;
    if (name == "bandwidth-first" || name == "BandwidthFirst") return PolicyMode::BandwidthFirst;
    throw ArgumentError("unknown policy mode '" + std::string(name) + "'");
}

void PolicyObjective::validate() const {
    if (!(target_metric > 0.0) || !std::isfinite(target_metric))
        throw ArgumentError("target metric must be positive and finite");
}

Decision select(const std::vector<PerformanceRecord>& records, double snr_db, const PolicyObjective& obj) {
    obj.validate();
    if (records.empty()) throw PolicyError("empty record table");
    const auto here = at_snr(records, snr_db);
    if (here.empty()) throw PolicyError("no records at " + format_real(snr_db) + " dB");

    const PerformanceRecord* best = nullptr;
    for (const auto& r : here)
        if (r.metric <= obj.target_metric && (!best || better(r, *best, obj.mode))) best = &r;

    Decision d;
    if (best) {
        d.chosen = *best;
        d.satisfied = true;
        d.rationale = d.chosen.label() + " meets target " + format_real(obj.target_metric) + " with " +
                      format_real(d.chosen.metric) + "; " + std::string(to_string(obj.mode)) + " ordering";
        return d;
    }
    best = &here.front();
    for (const auto& r : here)
        if (better_metric(r, *best)) best = &r;
    d.chosen = *best;
    d.satisfied = false;
    d.rationale = "no record meets target " + format_real(obj.target_metric) + "; best available is " +
                  d.chosen.label() + " with " + format_real(d.chosen.metric);
    return d;
}

std::optional<Recommendation> recommend_new(const std::vector<PerformanceRecord>& records, double snr_db,
                                            const PolicyObjective& obj, double idle_margin) {
    const Decision d = select(records, snr_db, obj);
    const auto here = at_snr(records, snr_db);
    std::vector<PerformanceRecord> pasc;
    for (const auto& r : here)
        if (r.method == Method::PASC) pasc.push_back(r);
    if (pasc.empty()) return std::nullopt;

    auto present = [&](int bits, double eps) {
        return std::any_of(pasc.begin(), pasc.end(), [&](const PerformanceRecord& r) {
            return r.bits == bits && std::abs(eps_or_default(r) - eps) < 1e-12;
        });
    };
    auto make = [&](int bits, double eps, std::string why) {
        Recommendation rec;
        rec.config.variant = CodecVariant::PASC;
        rec.config.bits_out = bits;
        rec.config.eps_trained = eps;
        PerformanceRecord shown{Method::PASC, bits, eps, snr_db, 0.0, default_complexity_rank(Method::PASC)};
        rec.config.label = shown.label();
        rec.rationale = std::move(why);
        return rec;
    };

    if (!d.satisfied) {
        PerformanceRecord anchor = d.chosen;
        if (anchor.method != Method::PASC) {
            anchor = pasc.front();
            for (const auto& r : pasc)
                if (better_metric(r, anchor)) anchor = r;
        }
        const double eps = eps_or_default(anchor);
        const auto it = std::find_if(kEpsLadder.begin(), kEpsLadder.end(), [&](double e) { return e > eps + 1e-12; });
        if (it == kEpsLadder.end()) return std::nullopt;
        int lower = 0;
        for (const auto& r : pasc)
            if (r.bits < anchor.bits) lower = std::max(lower, r.bits);
        if (lower == 0) return std::nullopt;
        const int steps = static_cast<int>(std::ceil(std::log2(static_cast<double>(anchor.bits) / lower) / 2.0));
        const long long mid = static_cast<long long>(lower) << steps;
        if (mid <= lower || mid >= anchor.bits) return std::nullopt;
        if (present(static_cast<int>(mid), *it)) return std::nullopt;
        return make(static_cast<int>(mid), *it,
                    "target missed by " + anchor.label() + "; raise the threshold to " + format_real(*it) +
                        " between the " + format_bits(lower) + " and " + format_bits(anchor.bits) + " budgets");
    }

    const PerformanceRecord* anchor = nullptr;
    for (const auto& r : pasc)
        if (r.metric <= obj.target_metric &&
            (!anchor || std::tuple(r.bits, r.metric, tail_key(r)) < std::tuple(anchor->bits, anchor->metric,
                                                                                  tail_key(*anchor))))
            anchor = &r;
    if (!anchor) return std::nullopt;
    const double slack = obj.target_metric - anchor->metric;
    if (slack < idle_margin * obj.target_metric) return std::nullopt;
    const int half = anchor->bits / 2;
    const double eps = eps_or_default(*anchor);
    if (half <= 0 || present(half, eps)) return std::nullopt;
    return make(half, eps,
                anchor->label() + " beats the target by " + format_fixed(slack, 4) + "; try half the bits");
}

std::string build_advisor_prompt(const std::vector<PerformanceRecord>& records, double snr_db,
                                 const PolicyObjective& obj) {
    std::ostringstream os;
    os << "System: OFDM image link; methods PASC, JSCC, JSCC_DM, Baseline; lower metric is better.\n";
    os << "Objective: " << to_string(obj.mode) << ", metric must not exceed " << format_real(obj.target_metric)
       << " at SNR " << format_real(snr_db) << " dB.\n";
    os << "Performance data:\n";
    write_records(os, at_snr(records, snr_db));
    os << "Answer with one JSON object {\"method\": ..., \"bits\": ..., \"eps\": ...} naming a listed row.\n";
    return os.str();
}

Decision select_with_advisor(const std::vector<PerformanceRecord>& records, double snr_db,
                             const PolicyObjective& obj, const Advisor& advisor) {
    Decision rule = select(records, snr_db, obj);
    if (!advisor) return rule;
    std::optional<std::string> answer;
    try {
        answer = advisor(build_advisor_prompt(records, snr_db, obj));
    } catch (const std::exception&) {
        answer.reset();
    }
    if (!answer) return rule;

    try {
        const auto j = nlohmann::json::parse(*answer);
        const Method method = parse_method(j.at("method").get<std::string>());
        const int bits = j.at("bits").get<int>();
        std::optional<double> eps;
        if (j.contains("eps") && !j.at("eps").is_null()) eps = j.at("eps").get<double>();
        for (const auto& r : at_snr(records, snr_db)) {
            if (r.method != method || r.bits != bits || !same_eps(r.eps, eps)) continue;
            const bool qualifies = r.metric <= obj.target_metric;
            if (rule.satisfied && !qualifies) break;
            if (!rule.satisfied && !(r == rule.chosen)) break;
            Decision d;
            d.chosen = r;
            d.satisfied = qualifies;
            d.rationale = "advisor picked " + r.label();
            return d;
        }
    } catch (const std::exception&) {
    }
    rule.rationale += " (advisor answer rejected)";
    return rule;
}

MismatchResult detect_mismatch(const Image& p, const Image& p_syn) {
    require_same_shape(p, p_syn, "detect_mismatch");
    MismatchResult r;
    r.zero_ratio = zero_ratio(mask_diff(p, p_syn, kMismatchEps));
    r.mismatch = !(r.zero_ratio > kMismatchRatio);
    return r;
}

std::string_view to_string(Route r) { return r == Route::UsePASC ? "PASC" : "JSCC"; }

RouteDecision route(const Image& p, const Image& p_syn, const RouteConfigs& configs) {
    if (!configs.pasc || !configs.jscc) throw ConfigError("routing needs both PASC and JSCC codecs");
    const auto m = detect_mismatch(p, p_syn);
    return {m.mismatch ? Route::UseJSCC : Route::UsePASC, m.zero_ratio};
}

}  // namespace pasc
