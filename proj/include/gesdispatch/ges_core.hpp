#pragma once

// Generic energy storage (GES) model: device-to-GES parameter mapping, SoC
// dynamics and deterministic feasibility checking.
//
// Time indexing used throughout the library: a horizon has T steps of length
// dt. Power series are indexed by step t in [0, T). The SoC trajectory has T+1
// entries; soc[0] is the initial state and soc[t+1] is the state at the end of
// step t. Per-step SoC series (soc_lo, soc_hi, soc_baseline_avg, deadband)
// constrain or describe soc[t+1].

#include "gesdispatch/error.hpp"

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace ges {

using Series = std::vector<double>;

inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

enum class DeviceKind { BES, TCL_IVA, TCL_FFA, EV };

const char* to_string(DeviceKind kind);
DeviceKind device_kind_from_string(const std::string& s);
inline bool is_tcl(DeviceKind k) { return k == DeviceKind::TCL_IVA || k == DeviceKind::TCL_FFA; }

/// First-order ETP description of a thermostatically controlled load (cooling).
struct ThermalParams {
    double resistance = 0.0;  ///< R, degC/kW
    double capacitance = 0.0; ///< C, kWh/degC
    double cop = 0.0;         ///< K, conversion efficiency
    double temp_min = 0.0;    ///< overall lower indoor temperature, degC (SoC = 1)
    double temp_max = 0.0;    ///< overall upper indoor temperature, degC (SoC = 0)
    Series comfort_lo;        ///< time-varying lower comfort temperature, degC
    Series comfort_hi;        ///< time-varying upper comfort temperature, degC
    double p_min = 0.0;       ///< kW
    double p_max = 0.0;       ///< kW
    Series outdoor_temp;      ///< degC
    Series baseline_power;    ///< mean baseline consumption P^B_t, kW
    double deadband = 0.0;    ///< comfort deadband width around the baseline, degC
    std::optional<double> initial_temp;

    bool operator==(const ThermalParams&) const = default;
};

/// Native storage description shared by batteries and EVs.
struct StorageParams {
    double capacity = 0.0; ///< kWh
    double eta_c = 1.0;
    double eta_d = 1.0;
    double self_discharge = 0.0; ///< per step
    double p_c_rated = 0.0;      ///< kW
    double p_d_rated = 0.0;      ///< kW
    Series soc_lo;               ///< per step, or a single value broadcast over the horizon
    Series soc_hi;
    double soc_init = 0.5;
    Series baseline_charge;    ///< EV only, kW
    Series baseline_discharge; ///< EV only, kW
    Series baseline_dsoc;      ///< EV only, per-step SoC increment of the baseline
    Series baseline_soc;       ///< optional; defaults to soc_init
    double deadband = 0.0;     ///< in SoC units

    bool operator==(const StorageParams&) const = default;
};

struct DeviceDescription {
    std::string unit_id;
    DeviceKind kind = DeviceKind::BES;
    std::variant<ThermalParams, StorageParams> physics;
    double soc_phys_lo = 0.0;
    double soc_phys_hi = 1.0;
    double soc_ramp_up = kUnbounded;
    double soc_ramp_dn = kUnbounded;
    Series on_prob; ///< empty means always on

    bool operator==(const DeviceDescription&) const = default;
};

struct GesParams {
    std::string unit_id;
    DeviceKind kind = DeviceKind::BES;
    double dt = 1.0;
    double capacity = 0.0;
    double eta_c = 1.0;
    double eta_d = 1.0;
    double self_discharge = 0.0;
    Series p_c_max;
    Series p_d_max;
    Series soc_lo;
    Series soc_hi;
    double soc_phys_lo = 0.0;
    double soc_phys_hi = 1.0;
    double soc_ramp_up = kUnbounded;
    double soc_ramp_dn = kUnbounded;
    Series alpha;
    double soc_init = 0.5;
    Series soc_baseline;
    Series soc_baseline_avg;
    Series deadband;
    Series on_prob;

    std::size_t horizon() const { return p_c_max.size(); }
};

/// Returns a human-readable list of invariant violations (empty when valid).
std::vector<std::string> validate(const GesParams& params);

struct UnitSchedule {
    Series p_c;
    Series p_d;
    Series soc; ///< T+1 entries
};

UnitSchedule make_schedule(std::size_t horizon, double soc_init);

/// Maps a physical device onto GES parameters (Table-I style mapping).
GesParams map_device_to_ges(const DeviceDescription& dev, double dt, std::size_t horizon);

/// Normalized SoC of a TCL at indoor temperature temp_in.
double tcl_soc(double temp_in, double temp_max, double temp_min);

/// TCL self-discharge rate 1 - exp(-dt/(R*C)).
double tcl_self_discharge(double resistance, double capacitance, double dt);

/// One step of the SoC recursion.
double step_soc(double soc, double p_c, double p_d, const GesParams& params, std::size_t t);

/// Unrolls step_soc from params.soc_init.
Series simulate_soc(const Series& p_c, const Series& p_d, const GesParams& params);

enum class ConstraintId {
    RampUp,
    RampDown,
    SocUpper,
    SocLower,
    EnergySustainability,
    ChargeBound,
    DischargeBound,
    NegativePower,
    Recursion,
    Complementarity,
};

const char* to_string(ConstraintId id);

struct Violation {
    ConstraintId id;
    std::size_t t;
    double magnitude;
};

struct FeasibilityResult {
    std::vector<Violation> violations;
    std::vector<Violation> warnings; ///< simultaneous charge/discharge
    bool ok() const { return violations.empty(); }
};

FeasibilityResult check_feasibility(const UnitSchedule& sched, const GesParams& params, double tol);

} // namespace ges
