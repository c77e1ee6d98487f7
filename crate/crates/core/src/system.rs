//! Concrete constrained mechanical systems.
//!
//! A [`ConstraintSystem`] exposes the constraint matrix, a basis of the
//! admissible distribution, and the nominal and true dynamics both in
//! adapted coordinates `nu` and as ambient vector fields `B(q) nu(q)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::geometry::{projector_from_constraints, ConstraintMatrix, DistributionBasis, Projector};
use crate::Result;

pub trait ConstraintSystem {
    fn name(&self) -> &'static str;

    fn ambient_dim(&self) -> usize;

    fn num_constraints(&self) -> usize;

    fn constraint_matrix(&self, q: &DVector<f64>) -> ConstraintMatrix;

    fn basis(&self, q: &DVector<f64>) -> DistributionBasis;

    /// Nominal dynamics in adapted coordinates.
    fn nominal_velocity(&self, q: &DVector<f64>) -> DVector<f64>;

    /// True dynamics in adapted coordinates.
    fn true_velocity(&self, q: &DVector<f64>) -> DVector<f64>;

    /// Coordinates the scalar kernel acts on.
    fn default_active_dims(&self) -> Vec<usize>;

    fn projector(&self, q: &DVector<f64>) -> Result<Projector> {
        projector_from_constraints(&self.constraint_matrix(q))
    }

    fn nominal_field(&self, q: &DVector<f64>) -> DVector<f64> {
        self.basis(q).lift(&self.nominal_velocity(q))
    }

    fn true_field(&self, q: &DVector<f64>) -> DVector<f64> {
        self.basis(q).lift(&self.true_velocity(q))
    }
}

fn default_radius() -> f64 {
    1.0
}
fn default_rolling_rate() -> f64 {
    1.0
}
fn default_turning_rate() -> f64 {
    0.35
}
fn default_perturbation() -> f64 {
    0.18
}

/// Vertical rolling disk parameters.
///
/// `rolling_rate` and `turning_rate` are the baseline rates of the two
/// adapted velocities (`theta'` and `phi'`), `perturbation` scales the
/// unmodeled disturbance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiskParams {
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default = "default_rolling_rate")]
    pub rolling_rate: f64,
    #[serde(default = "default_turning_rate")]
    pub turning_rate: f64,
    #[serde(default = "default_perturbation")]
    pub perturbation: f64,
}

impl Default for DiskParams {
    fn default() -> Self {
        Self {
            radius: default_radius(),
            rolling_rate: default_rolling_rate(),
            turning_rate: default_turning_rate(),
            perturbation: default_perturbation(),
        }
    }
}

/// Disk rolling upright without slipping, `q = (x, y, phi, theta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerticalRollingDisk {
    pub params: DiskParams,
}

pub const DISK_X: usize = 0;
pub const DISK_Y: usize = 1;
pub const DISK_PHI: usize = 2;
pub const DISK_THETA: usize = 3;

impl VerticalRollingDisk {
    pub fn new(params: DiskParams) -> Result<Self> {
        if !(params.radius > 0.0 && params.radius.is_finite()) {
            return Err(crate::Error::Config(format!(
                "disk radius must be positive, got {}",
                params.radius
            )));
        }
        Ok(Self { params })
    }

    /// `delta(q)`, the smooth disturbance added to the nominal adapted velocity.
    pub fn perturbation(&self, q: &DVector<f64>) -> DVector<f64> {
        let (phi, theta) = (q[DISK_PHI], q[DISK_THETA]);
        let eps = self.params.perturbation;
        DVector::from_vec(vec![
            eps * (0.60 * (phi - theta).sin() + 0.25 * (2.0 * theta).cos()),
            eps * (0.50 * (phi + theta).cos() - 0.20 * (2.0 * phi).sin()),
        ])
    }
}

impl ConstraintSystem for VerticalRollingDisk {
    fn name(&self) -> &'static str {
        "vertical_rolling_disk"
    }

    fn ambient_dim(&self) -> usize {
        4
    }

    fn num_constraints(&self) -> usize {
        2
    }

    fn constraint_matrix(&self, q: &DVector<f64>) -> ConstraintMatrix {
        let r = self.params.radius;
        let (s, c) = q[DISK_PHI].sin_cos();
        ConstraintMatrix::new(DMatrix::from_row_slice(
            2,
            4,
            &[1.0, 0.0, 0.0, -r * c, 0.0, 1.0, 0.0, -r * s],
        ))
        .expect("disk constraint matrix is finite for finite phi")
    }

    fn basis(&self, q: &DVector<f64>) -> DistributionBasis {
        let r = self.params.radius;
        let (s, c) = q[DISK_PHI].sin_cos();
        // columns X1 = (R cos phi, R sin phi, 0, 1), X2 = (0, 0, 1, 0)
        DistributionBasis::new(DMatrix::from_column_slice(
            4,
            2,
            &[r * c, r * s, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0],
        ))
        .expect("disk basis is finite for finite phi")
    }

    fn nominal_velocity(&self, q: &DVector<f64>) -> DVector<f64> {
        let (phi, theta) = (q[DISK_PHI], q[DISK_THETA]);
        DVector::from_vec(vec![
            self.params.rolling_rate + 0.10 * phi.sin() + 0.06 * theta.cos(),
            self.params.turning_rate + 0.08 * phi.cos() - 0.05 * theta.sin(),
        ])
    }

    fn true_velocity(&self, q: &DVector<f64>) -> DVector<f64> {
        self.nominal_velocity(q) + self.perturbation(q)
    }

    fn default_active_dims(&self) -> Vec<usize> {
        vec![DISK_PHI, DISK_THETA]
    }
}

fn default_particle_dim() -> usize {
    2
}

/// Unconstrained particle (`k = 0`), used to exercise the degenerate case
/// where the projector is the identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FreeParticle {
    #[serde(default = "default_particle_dim")]
    pub dim: usize,
}

impl Default for FreeParticle {
    fn default() -> Self {
        Self {
            dim: default_particle_dim(),
        }
    }
}

impl ConstraintSystem for FreeParticle {
    fn name(&self) -> &'static str {
        "free_particle"
    }

    fn ambient_dim(&self) -> usize {
        self.dim
    }

    fn num_constraints(&self) -> usize {
        0
    }

    fn constraint_matrix(&self, _q: &DVector<f64>) -> ConstraintMatrix {
        ConstraintMatrix::empty(self.dim)
    }

    fn basis(&self, _q: &DVector<f64>) -> DistributionBasis {
        DistributionBasis::new(DMatrix::identity(self.dim, self.dim)).expect("identity basis")
    }

    fn nominal_velocity(&self, _q: &DVector<f64>) -> DVector<f64> {
        DVector::from_element(self.dim, 0.5)
    }

    fn true_velocity(&self, q: &DVector<f64>) -> DVector<f64> {
        let n = self.dim;
        DVector::from_fn(n, |i, _| 0.5 + 0.3 * q[(i + 1) % n].sin())
    }

    fn default_active_dims(&self) -> Vec<usize> {
        (0..self.dim).collect()
    }
}

/// Systems selectable by name from a run configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum System {
    VerticalRollingDisk(DiskParams),
    FreeParticle(FreeParticle),
}

impl Default for System {
    fn default() -> Self {
        System::VerticalRollingDisk(DiskParams::default())
    }
}

impl System {
    pub const NAMES: [&'static str; 2] = ["vertical_rolling_disk", "free_particle"];

    pub fn validate(&self) -> Result<()> {
        match self {
            System::VerticalRollingDisk(p) => VerticalRollingDisk::new(*p).map(|_| ()),
            System::FreeParticle(p) if p.dim == 0 => {
                Err(crate::Error::Config("free_particle dim must be at least 1".into()))
            }
            System::FreeParticle(_) => Ok(()),
        }
    }

    fn with<R>(&self, f: impl FnOnce(&dyn ConstraintSystem) -> R) -> R {
        match self {
            System::VerticalRollingDisk(p) => f(&VerticalRollingDisk { params: *p }),
            System::FreeParticle(p) => f(p),
        }
    }
}

impl ConstraintSystem for System {
    fn name(&self) -> &'static str {
        self.with(|s| s.name())
    }
    fn ambient_dim(&self) -> usize {
        self.with(|s| s.ambient_dim())
    }
    fn num_constraints(&self) -> usize {
        self.with(|s| s.num_constraints())
    }
    fn constraint_matrix(&self, q: &DVector<f64>) -> ConstraintMatrix {
        self.with(|s| s.constraint_matrix(q))
    }
    fn basis(&self, q: &DVector<f64>) -> DistributionBasis {
        self.with(|s| s.basis(q))
    }
    fn nominal_velocity(&self, q: &DVector<f64>) -> DVector<f64> {
        self.with(|s| s.nominal_velocity(q))
    }
    fn true_velocity(&self, q: &DVector<f64>) -> DVector<f64> {
        self.with(|s| s.true_velocity(q))
    }
    fn default_active_dims(&self) -> Vec<usize> {
        self.with(|s| s.default_active_dims())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::max_abs;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn disk() -> VerticalRollingDisk {
        VerticalRollingDisk::new(DiskParams::default()).unwrap()
    }

    fn q(phi: f64, theta: f64) -> DVector<f64> {
        DVector::from_vec(vec![0.0, 0.0, phi, theta])
    }

    fn random_q(rng: &mut ChaCha8Rng) -> DVector<f64> {
        DVector::from_fn(4, |_, _| rng.random_range(-10.0..10.0))
    }

    #[test]
    fn constraint_matrix_at_cardinal_headings() {
        let d = disk();
        let a0 = d.constraint_matrix(&q(0.0, 0.3));
        let e0 = DMatrix::from_row_slice(2, 4, &[1.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0, 0.0]);
        assert!(max_abs(&(a0.matrix() - e0)) < 1e-15);
        let a1 = d.constraint_matrix(&q(std::f64::consts::FRAC_PI_2, 0.0));
        let e1 = DMatrix::from_row_slice(2, 4, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, -1.0]);
        assert!(max_abs(&(a1.matrix() - e1)) < 1e-15);
    }

    #[test]
    fn basis_spans_kernel_and_has_full_rank() {
        let d = disk();
        let b0 = d.basis(&q(0.0, 0.0));
        let e = DMatrix::from_column_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0]);
        assert_eq!(b0.matrix(), &e);

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..1000 {
            let qq = random_q(&mut rng);
            let a = d.constraint_matrix(&qq);
            let b = d.basis(&qq);
            assert!(max_abs(&(a.matrix() * b.matrix())) <= 1e-12);
            assert_eq!(b.matrix().rank(1e-10), 2);
        }
    }

    #[test]
    fn nominal_velocity_values() {
        let d = disk();
        let nu = d.nominal_velocity(&q(0.0, 0.0));
        assert!((nu[0] - 1.06).abs() < 1e-14 && (nu[1] - 0.43).abs() < 1e-14);
        let nu = d.nominal_velocity(&q(std::f64::consts::FRAC_PI_2, 0.0));
        assert!((nu[0] - 1.16).abs() < 1e-14 && (nu[1] - 0.35).abs() < 1e-14);
    }

    #[test]
    fn nominal_and_perturbation_bounds_on_grid() {
        let d = disk();
        let eps = d.params.perturbation;
        let grid: Vec<f64> = (0..=400).map(|i| -10.0 + 20.0 * i as f64 / 400.0).collect();
        for &phi in &grid {
            for &theta in &grid {
                let qq = q(phi, theta);
                let nu = d.nominal_velocity(&qq);
                assert!((nu[0] - 1.0).abs() <= 0.16 + 1e-15);
                assert!((nu[1] - 0.35).abs() <= 0.13 + 1e-15);
                let delta = d.perturbation(&qq);
                assert!(delta.amax() <= eps * 0.85 + 1e-15);
                // ||B delta|| <= ||B||_2 ||delta||_2, with ||delta||_2 <= sqrt(2) ||delta||_inf
                let diff = d.true_field(&qq) - d.nominal_field(&qq);
                let b_norm = d.basis(&qq).matrix().singular_values().max();
                assert!(diff.norm() <= eps * 0.85 * 2f64.sqrt() * b_norm + 1e-12);
            }
        }
    }

    #[test]
    fn perturbation_at_origin_and_zero_amplitude() {
        let d = disk();
        let delta = d.perturbation(&q(0.0, 0.0));
        assert!((delta[0] - 0.045).abs() < 1e-15 && (delta[1] - 0.09).abs() < 1e-15);

        let flat = VerticalRollingDisk::new(DiskParams {
            perturbation: 0.0,
            ..DiskParams::default()
        })
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let qq = random_q(&mut rng);
            assert_eq!(flat.perturbation(&qq).amax(), 0.0);
            assert_eq!(flat.true_field(&qq), flat.nominal_field(&qq));
        }
    }

    #[test]
    fn true_field_at_origin() {
        let f = disk().true_field(&q(0.0, 0.0));
        let expected = [1.105, 0.0, 0.52, 1.105];
        for (a, b) in f.iter().zip(expected) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn fields_satisfy_rolling_constraints() {
        let d = disk();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..1000 {
            let qq = random_q(&mut rng);
            let a = d.constraint_matrix(&qq);
            assert!(a.residual(&d.true_field(&qq)).norm() <= 1e-14);
            assert!(a.residual(&d.nominal_field(&qq)).norm() <= 1e-14);
            let v = d.true_field(&qq);
            let (s, c) = qq[DISK_PHI].sin_cos();
            assert!((v[DISK_X] - c * v[DISK_THETA]).abs() <= 1e-15);
            assert!((v[DISK_Y] - s * v[DISK_THETA]).abs() <= 1e-15);
        }
    }

    #[test]
    fn explicit_projector_matches_constraint_projector() {
        let d = disk();
        for i in 0..100 {
            let phi = -std::f64::consts::PI + std::f64::consts::TAU * i as f64 / 99.0;
            let (s, c) = phi.sin_cos();
            let explicit = DMatrix::from_row_slice(
                4,
                4,
                &[
                    c * c / 2.0,
                    s * c / 2.0,
                    0.0,
                    c / 2.0,
                    s * c / 2.0,
                    s * s / 2.0,
                    0.0,
                    s / 2.0,
                    0.0,
                    0.0,
                    1.0,
                    0.0,
                    c / 2.0,
                    s / 2.0,
                    0.0,
                    0.5,
                ],
            );
            let p = d.projector(&q(phi, 0.0)).unwrap();
            assert!(max_abs(&(p.matrix() - explicit)) <= 1e-10);
        }
    }

    #[test]
    fn system_enum_dispatches_and_parses_by_name() {
        let s: System = serde_json::from_str(r#"{"name": "vertical_rolling_disk", "perturbation": 0.0}"#).unwrap();
        assert_eq!(s.ambient_dim(), 4);
        assert_eq!(s.name(), "vertical_rolling_disk");
        assert_eq!(
            s,
            System::VerticalRollingDisk(DiskParams {
                perturbation: 0.0,
                ..DiskParams::default()
            })
        );

        let p: System = serde_json::from_str(r#"{"name": "free_particle"}"#).unwrap();
        assert_eq!(p.num_constraints(), 0);
        assert_eq!(
            p.projector(&DVector::zeros(2)).unwrap().matrix(),
            &DMatrix::<f64>::identity(2, 2)
        );

        let err = serde_json::from_str::<System>(r#"{"name": "chaplygin_sleigh"}"#).unwrap_err();
        let msg = err.to_string();
        assert!(
            msg.contains("vertical_rolling_disk") && msg.contains("free_particle"),
            "{msg}"
        );
    }
}
