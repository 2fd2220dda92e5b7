#pragma once

#include <limits>
#include <string>

#include "json.hpp"

namespace turbulux {

/// Physical description of a horizontal link with homogeneous turbulence.
/// All lengths in meters, Cn^2 in m^(-2/3).
struct ChannelConfig {
    double wavelength = 808e-9;
    double length = 1000.0;
    double w0 = 0.0;  ///< initial spot radius; 0 selects sqrt(L lambda / pi)
    double f0 = std::numeric_limits<double>::quiet_NaN();  ///< NaN selects F0 = L
    double cn2 = 1e-15;
    double inner_scale = 1e-6;
    double outer_scale = 5e3;
    double aperture = 0.0;  ///< may be supplied later (e.g. from the CLI)
    double eta_c = 1.0;

    /// Spot radius with the "fresnel" default resolved.
    double w0_resolved() const;
    double f0_resolved() const;
    bool focused() const;

    /// Throws InvalidArgument on non-physical values. The aperture is only
    /// checked when `need_aperture` is set.
    void validate(bool need_aperture = true) const;

    /// Copy with w0 and f0 resolved to explicit numbers.
    ChannelConfig resolved() const;
};

struct DerivedChannel {
    double k = 0.0;            ///< wavenumber 2 pi / lambda
    double fresnel = 0.0;      ///< Omega = k W0^2 / (2L)
    double rytov = 0.0;        ///< sigma_R^2 = 1.23 Cn^2 k^(7/6) L^(11/6)
    double coherence = 0.0;    ///< rho_0 = (1.46 Cn^2 k^2 L)^(-3/5); +inf for Cn^2 = 0
};

DerivedChannel derive_channel(const ChannelConfig& config);

/// Reads a channel from JSON or from "key = value" lines ('#' comments).
ChannelConfig parse_channel_config(const std::string& text);
ChannelConfig load_channel_config(const std::string& path);

nlohmann::json channel_to_json(const ChannelConfig& config);
ChannelConfig channel_from_json(const nlohmann::json& doc);

/// Constant-loss efficiency from a loss budget in dB.
double efficiency_from_db(double loss_db);

}  // namespace turbulux
