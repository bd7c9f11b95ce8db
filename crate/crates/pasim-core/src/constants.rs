//! Physical constants (SI).

/// Speed of light in vacuum, m/s.
pub const C0: f64 = 299_792_458.0;

/// Vacuum permeability, H/m.
pub const MU_0: f64 = 1.256_637_062_12e-6;

/// Vacuum permittivity, F/m.
pub const EPS_0: f64 = 8.854_187_8128e-12;

/// Free-space wave impedance sqrt(mu_0/eps_0), ohms.
pub const ETA_0: f64 = 376.730_313_668;
