#pragma once

#include <stdexcept>
#include <string>

namespace syncscope {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Evaluation point too close to a channel pole, or coincident poles at load.
struct PoleProximityError : Error {
    using Error::Error;
};

/// Channel degenerates at the carrier (pole at jw0 or zero bandwidth).
struct DegenerateChannelError : Error {
    using Error::Error;
};

/// Time step outside the integrator stability bound, or non-finite state.
struct IntegrationError : Error {
    using Error::Error;
};

/// Network graph does not connect all active nodes, or reduction is singular.
struct ConnectivityError : Error {
    using Error::Error;
};

/// Eigenvector matrix condition number exceeds the defectiveness guard.
struct NearDefectiveError : Error {
    using Error::Error;
};

/// No aggregated remote signal to lock onto.
struct DegenerateLockError : Error {
    using Error::Error;
};

/// Loop-gain evaluation at a modal resonance.
struct ResonanceError : Error {
    using Error::Error;
};

/// Inertia dynamics outside the supported family.
struct UnsupportedDynamicsError : Error {
    using Error::Error;
};

/// Configuration rejected (syntax, schema, or semantic validation).
struct ConfigError : Error {
    using Error::Error;
};

} // namespace syncscope
