//! Simulation core for dielectric pinching-antenna radiators fed by a
//! cylindrical waveguide.
//!
//! Pipeline: mesh the radiator ([`geometry`]), sample the evanescent feed
//! field at the voxels ([`waveguide`]), convert to equivalent polarization
//! currents and radiate ([`radiator`]), then post-process cuts and link
//! budgets ([`metrics`], [`channel`]). [`scene`] wires it all together from
//! a JSON config.

pub mod channel;
pub mod constants;
pub mod error;
pub mod geometry;
pub mod metrics;
pub mod radiator;
pub mod scene;
pub mod vec3;
pub mod waveguide;

pub use channel::{
    channel_vector, optimize_placements, received_power, transmit_vector, AxisSegment, LinkSpec,
    PaLayout, PlacementResult,
};
pub use error::{Error, Result};
pub use geometry::{Footprint, Mesh, Pose, Shape, Voxel};
pub use metrics::{compare, ingest_measurement, main_lobe, side_lobes, CompareReport, Cut1D, LobeReport};
pub use radiator::{
    directivity_pattern, equivalent_currents, full_pattern, total_radiated_power, CurrentSet,
    Direction, DirectivityMap, Pattern,
};
pub use scene::{parse_scene, run_scene, Manifest, SceneConfig, SceneContext};
pub use vec3::{CVec3, Vec3};
pub use waveguide::{
    evanescent_amplitude, incident_field, mode_constants, FieldSamples, ModeConstants, SignalSpec,
    WaveguideModel,
};
