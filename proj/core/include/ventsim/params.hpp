#pragma once

#include "ventsim/errors.hpp"

#include <array>
#include <cmath>
#include <string>

namespace ventsim {

/// The learnable physics vector: viscosity, two diffusivities, the
/// fresh-air recirculation fraction, and the per-occupant heat and CO2
/// source coefficients.
struct ModelParams {
    double nu = 1.08e-3;      ///< kinematic viscosity [m^2/s]
    double k_te = 2.0e-3;     ///< temperature diffusivity [m^2/s]
    double k_c = 1.08e-3;     ///< CO2 diffusivity [m^2/s]
    double alpha = 0.65;      ///< fresh-air fraction at the supply vent
    double alpha_te = 5.0e-3; ///< heat source per person [deg C/s, per cell]
    double alpha_c = 0.83;    ///< CO2 source per person [ppm/s, per cell]

    static constexpr int kCount = 6;
    static const std::array<const char*, kCount> names;

    double& operator[](int k) {
        switch (k) {
            case 0: return nu;
            case 1: return k_te;
            case 2: return k_c;
            case 3: return alpha;
            case 4: return alpha_te;
            default: return alpha_c;
        }
    }
    double operator[](int k) const { return const_cast<ModelParams&>(*this)[k]; }

    void validate() const {
        if (!(nu > 0.0) || !(k_te > 0.0) || !(k_c > 0.0))
            throw ConfigError("ModelParams: nu, k_te, k_c must be positive");
        if (!(alpha >= 0.0 && alpha <= 1.0))
            throw ConfigError("ModelParams: alpha must lie in [0, 1]");
        if (alpha_te < 0.0 || alpha_c < 0.0)
            throw ConfigError("ModelParams: source coefficients must be non-negative");
    }

    bool operator==(const ModelParams&) const = default;
};

inline const std::array<const char*, ModelParams::kCount> ModelParams::names = {
    "nu", "k_te", "k_c", "alpha", "alpha_te", "alpha_c"};

/// Gradient (or any other covector) with the shape of ModelParams.
struct ParamVector {
    std::array<double, ModelParams::kCount> g{};

    double& operator[](int k) { return g[k]; }
    double operator[](int k) const { return g[k]; }
    double& nu() { return g[0]; }
    double& k_te() { return g[1]; }
    double& k_c() { return g[2]; }
    double& alpha() { return g[3]; }
    double& alpha_te() { return g[4]; }
    double& alpha_c() { return g[5]; }

    ParamVector& operator+=(const ParamVector& o) {
        for (int k = 0; k < ModelParams::kCount; ++k) g[k] += o.g[k];
        return *this;
    }
    double norm() const {
        double s = 0.0;
        for (double x : g) s += x * x;
        return std::sqrt(s);
    }
};

} // namespace ventsim
