//! Fixed-point machinery for maps on p-convex bodies: the approximating
//! scheme, certificates, boundary conditions and the alternatives.

pub mod approx;
pub mod bench;
pub mod bk;
pub mod certificate;
pub mod conditions;
pub mod homotopy;
pub mod ls;
pub mod rothe;
pub mod map;

use serde::{Deserialize, Serialize};

pub use approx::{approximate_fixed_point, InnerOptions, IterStep, IterTrace, Schedule, StepCase};
pub use bk::{birkhoff_kellogg_scan, BkOptions, BkScan};
pub use certificate::{best_approx_certificate, certify_point, Certificate, CertificateKind, CheckName, IdentityCheck, SolveOptions};
pub use conditions::{check_boundary_conditions, fixed_point_under, BoundaryCondition, ConditionReport, PowerParams};
pub use homotopy::{homotopy_solve, Homotopy, HomotopyKind, HomotopyOptions, HomotopyResult};
pub use ls::{leray_schauder_eps_scan, EpsOptions, EpsReport, EpsVerdict};
pub use map::{MapFn, MapKind, MapSpec, MappingClass};
pub use rothe::{nonself_fixed_point, rothe_fixed_point, BoundarySampling, NonSelfCondition, NonSelfOutcome};

/// Numerical tolerances shared by the solvers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Absolute accuracy of gauge evaluations.
    pub gauge: f64,
    /// Inner solver step tolerance; also the fixed-point residual tolerance.
    pub solver: f64,
    /// Allowed gap in certificate identities.
    pub identity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { gauge: 1e-9, solver: 1e-8, identity: 1e-6 }
    }
}
