#pragma once
// Curve files, context construction and error codes shared by the command-line tools.

#include <algorithm>
#include <cctype>
#include <fstream>
#include <future>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "relation.hpp"
#include "sigma.hpp"

namespace kleinian {

// Curve file: {"name": "c34", "lambda": ["1/2", ...]} optionally with "precision_digits",
// "periods" and "calibration" as written by the periods command.  A bare builtin name
// ("c23", "c27", "c34", "c29") means random cyclic lambda drawn from the seed.
struct CurveInput {
    std::string name;
    std::optional<CurveSpec> curve;
    std::optional<PeriodData> periods;
    std::optional<Calibration> calib;
    int digits = 0;
};

inline nlohmann::json curve_to_json(const CurveSpec& c) {
    nlohmann::json j;
    j["name"] = c.name;
    j["n"] = c.n;
    j["s"] = c.s;
    j["lambda"] = nlohmann::json::array();
    for (auto& q : c.lambda) j["lambda"].push_back(rational_to_string(q));
    return j;
}

inline CurveSpec curve_from_json(const nlohmann::json& j) {
    if (!j.contains("name") || !j["name"].is_string()) throw ParseError("curve: missing 'name'");
    auto [n, s] = builtin_ns(j["name"].get<std::string>());
    if (!j.contains("lambda") || !j["lambda"].is_array()) throw ParseError("curve: missing 'lambda' list");
    std::vector<Rational> lam;
    for (auto& x : j["lambda"]) {
        if (x.is_string())
            lam.push_back(parse_rational(x.get<std::string>(), "curve.lambda"));
        else if (x.is_number_integer())
            lam.push_back(Rational(x.get<long long>()));
        else
            throw ParseError("curve.lambda: entries must be rational strings");
    }
    return make_curve(n, s, lam);
}

inline CurveInput load_curve_arg(const std::string& arg) {
    CurveInput in;
    static const std::vector<std::string> builtin = {"c23", "c27", "c34", "c29"};
    if (std::find(builtin.begin(), builtin.end(), arg) != builtin.end()) {
        in.name = arg;
        return in;
    }
    std::ifstream f(arg);
    if (!f) {
        bool named = arg.size() > 1 && arg[0] == 'c' &&
                     std::all_of(arg.begin() + 1, arg.end(), [](unsigned char ch) { return std::isdigit(ch); });
        if (named) throw CapabilityError("unsupported curve '" + arg + "' (builtin: c23, c27, c34, c29)");
        throw ParseError("cannot open curve file " + arg);
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(f);
    } catch (const std::exception& e) {
        throw ParseError(arg + ": " + e.what());
    }
    const nlohmann::json& cj = j.contains("curve") ? j["curve"] : j;
    in.curve = curve_from_json(cj);
    in.name = in.curve->name;
    if (j.contains("precision_digits")) in.digits = j["precision_digits"].get<int>();
    if (j.contains("periods")) in.periods = periods_from_json(j["periods"]);
    if (j.contains("calibration")) in.calib = calibration_from_json(j["calibration"]);
    return in;
}

inline nlohmann::json context_to_json(const EvalContext& ctx) {
    nlohmann::json j;
    j["curve"] = curve_to_json(ctx.curve);
    j["precision_digits"] = ctx.precision_digits;
    j["periods"] = periods_to_json(ctx.periods);
    j["calibration"] = calibration_to_json(ctx.calib);
    return j;
}

// count contexts: one per trial for random curves, a single one for a fixed curve.
inline std::vector<EvalContext> build_contexts(const CurveInput& in, int count, std::uint64_t seed, int digits,
                                               bool restricted, int threads) {
    if (in.curve) {
        const CurveSpec& c = *in.curve;
        if (restricted && !c.restricted_quartic()) throw ValidationError("curve must be y^3 = x^4 + lambda_0");
        EvalContext ctx;
        if (in.periods && in.calib) {
            ctx.curve = c;
            ctx.periods = *in.periods;
            ctx.calib = *in.calib;
            ctx.precision_digits = in.digits ? in.digits : digits;
        } else if (in.periods) {
            ctx = make_context(c, *in.periods, seed, digits);
        } else {
            ctx = make_context(c, seed, digits);
        }
        return {ctx};
    }
    std::vector<CurveSpec> curves;
    for (int k = 0; k < count; ++k) {
        Rng rng(seed * 7919ULL + static_cast<std::uint64_t>(k));
        curves.push_back(random_curve(in.name, rng, restricted));
    }
    std::vector<EvalContext> out(count);
    threads = std::max(1, threads);
    for (int start = 0; start < count; start += threads) {
        std::vector<std::future<EvalContext>> fs;
        for (int k = start; k < std::min(count, start + threads); ++k)
            fs.push_back(std::async(threads > 1 ? std::launch::async : std::launch::deferred, [&, k]() {
                return make_context(curves[k], seed + static_cast<std::uint64_t>(k), digits);
            }));
        for (int k = start; k < std::min(count, start + threads); ++k) out[k] = fs[k - start].get();
    }
    return out;
}

inline std::vector<const EvalContext*> pointers(const std::vector<EvalContext>& v) {
    std::vector<const EvalContext*> p;
    for (auto& c : v) p.push_back(&c);
    return p;
}

// Operational error codes (>= 10).
inline int error_code(const std::exception& e) {
    if (dynamic_cast<const ParseError*>(&e)) return 10;
    if (dynamic_cast<const IntegrityError*>(&e)) return 11;
    if (dynamic_cast<const ValidationError*>(&e)) return 12;
    if (dynamic_cast<const SamplingError*>(&e)) return 13;
    if (dynamic_cast<const CalibrationError*>(&e) || dynamic_cast<const CharacteristicError*>(&e)) return 14;
    if (dynamic_cast<const CapabilityError*>(&e)) return 15;
    if (dynamic_cast<const ConditioningError*>(&e) || dynamic_cast<const CycleError*>(&e)) return 16;
    if (dynamic_cast<const ResourceError*>(&e)) return 17;
    return 19;
}

inline const char* error_name(int code) {
    switch (code) {
        case 10: return "parse";
        case 11: return "integrity";
        case 12: return "validation";
        case 13: return "sampling";
        case 14: return "calibration";
        case 15: return "capability";
        case 16: return "periods";
        case 17: return "resource";
        default: return "internal";
    }
}

}  // namespace kleinian
