//! Exact rotation algebra on SO(3).
//!
//! Rotations are stored as full 3x3 orthogonal matrices and built with the
//! closed-form Rodrigues exponential, so no series truncation enters anywhere.
//! The generator convention is fixed here once and used by every other module:
//! `exp(a * Omega_y)` takes (0,0,1) towards (1,0,0) for small positive `a`.

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum So3Error {
    #[error("rotation axis must be a unit vector (|axis| = {0})")]
    NonUnitAxis(f64),
    #[error("cannot compose an empty rotation sequence")]
    EmptySequence,
}

/// The three antisymmetric generators of rotation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    /// The generator matrix: `generator(X) * (0,1,0) = (0,0,1)`,
    /// `generator(Y) * (0,0,1) = (1,0,0)`, `generator(Z) * (1,0,0) = (0,1,0)`.
    pub fn generator(self) -> Matrix3<f64> {
        match self {
            Axis::X => Matrix3::new(0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0),
            Axis::Y => Matrix3::new(0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0),
            Axis::Z => Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0),
        }
    }

    pub fn unit(self) -> Vector3<f64> {
        match self {
            Axis::X => Vector3::x(),
            Axis::Y => Vector3::y(),
            Axis::Z => Vector3::z(),
        }
    }
}

/// Cross-product matrix of `v`; equals `v.x * Omega_x + v.y * Omega_y + v.z * Omega_z`.
pub fn hat(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// A proper rotation: 3x3 real orthogonal matrix with unit determinant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation {
    m: Matrix3<f64>,
}

impl Rotation {
    pub fn identity() -> Self {
        Rotation {
            m: Matrix3::identity(),
        }
    }

    /// Wraps a matrix that is already known to be orthogonal with det +1.
    pub fn from_matrix_unchecked(m: Matrix3<f64>) -> Self {
        Rotation { m }
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.m
    }

    /// Rodrigues closed form `I + sin(a) K + (1 - cos(a)) K^2` for a unit axis.
    ///
    /// Exact for all angles; errors if the axis is not unit length to 1e-9.
    pub fn axis_angle_exp(axis: Vector3<f64>, angle: f64) -> Result<Self, So3Error> {
        let n = axis.norm();
        if (n - 1.0).abs() > 1e-9 {
            return Err(So3Error::NonUnitAxis(n));
        }
        Ok(Self::rodrigues(&axis, angle))
    }

    /// `exp(hat(w))`: rotation by |w| about w. Identity at w = 0.
    pub fn from_scaled_axis(w: Vector3<f64>) -> Self {
        let angle = w.norm();
        if angle == 0.0 {
            return Self::identity();
        }
        Self::rodrigues(&(w / angle), angle)
    }

    fn rodrigues(unit_axis: &Vector3<f64>, angle: f64) -> Self {
        let k = hat(unit_axis);
        let m = Matrix3::identity() + k * angle.sin() + k * k * (1.0 - angle.cos());
        Rotation { m }
    }

    /// Rotation about a coordinate axis.
    pub fn about(axis: Axis, angle: f64) -> Self {
        Self::rodrigues(&axis.unit(), angle)
    }

    /// Product of a time-ordered sequence: the first element acts first, so the
    /// result is the matrix product in reverse list order.
    pub fn compose(sequence: &[Rotation]) -> Result<Self, So3Error> {
        let mut iter = sequence.iter();
        let first = iter.next().ok_or(So3Error::EmptySequence)?;
        Ok(iter.fold(*first, |acc, r| Rotation { m: r.m * acc.m }))
    }

    /// Applies `self` after `earlier` (time order).
    pub fn after(&self, earlier: &Rotation) -> Rotation {
        Rotation {
            m: self.m * earlier.m,
        }
    }

    pub fn inverse(&self) -> Rotation {
        Rotation {
            m: self.m.transpose(),
        }
    }

    pub fn apply(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.m * v
    }

    /// Rotation angle in [0, pi], extracted from the antisymmetric part and the
    /// trace via atan2, which stays well conditioned near 0 and pi.
    pub fn angle(&self) -> f64 {
        let w = Vector3::new(
            self.m[(2, 1)] - self.m[(1, 2)],
            self.m[(0, 2)] - self.m[(2, 0)],
            self.m[(1, 0)] - self.m[(0, 1)],
        ) * 0.5;
        let cos_a = (self.m.trace() - 1.0) * 0.5;
        w.norm().atan2(cos_a)
    }

    /// Axis and angle, with the angle in [0, pi]. At the pi boundary the axis
    /// sign is fixed by making its first nonzero component positive; at zero
    /// angle the axis is (1,0,0) by convention.
    pub fn axis_angle(&self) -> (Vector3<f64>, f64) {
        let angle = self.angle();
        if angle < 1e-12 {
            return (Vector3::x(), angle);
        }
        if angle < std::f64::consts::PI - 1e-6 {
            let w = Vector3::new(
                self.m[(2, 1)] - self.m[(1, 2)],
                self.m[(0, 2)] - self.m[(2, 0)],
                self.m[(1, 0)] - self.m[(0, 1)],
            ) * 0.5;
            return (w / w.norm(), angle);
        }
        // Near pi: recover the axis from the symmetric part, (R + I)/2 = nn^T at pi.
        let s = (self.m + Matrix3::identity()) * 0.5;
        let mut n = Vector3::new(
            s[(0, 0)].max(0.0).sqrt(),
            s[(1, 1)].max(0.0).sqrt(),
            s[(2, 2)].max(0.0).sqrt(),
        );
        // Signs from the off-diagonal products, anchored on the largest component.
        let i = if n.x >= n.y && n.x >= n.z {
            0
        } else if n.y >= n.z {
            1
        } else {
            2
        };
        let mut v = n;
        for j in 0..3 {
            if j != i && s[(i, j)] < 0.0 {
                v[j] = -n[j];
            }
        }
        // Tie-break: first nonzero component positive.
        for j in 0..3 {
            if v[j].abs() > 1e-12 {
                if v[j] < 0.0 {
                    v = -v;
                }
                break;
            }
        }
        n = v / v.norm();
        (n, angle)
    }

    /// Residual orthogonality defect, for validity checks.
    pub fn orthogonality_defect(&self) -> f64 {
        let d = self.m.transpose() * self.m - Matrix3::identity();
        d.amax()
    }

    pub fn determinant(&self) -> f64 {
        self.m.determinant()
    }
}

/// Rotation angle of `a^T b`: the geodesic distance on SO(3), in [0, pi].
pub fn geodesic_distance(a: &Rotation, b: &Rotation) -> f64 {
    a.inverse().after(b).angle()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn assert_vec_eq(a: &Vector3<f64>, b: &Vector3<f64>, tol: f64) {
        assert!((a - b).norm() < tol, "{a:?} != {b:?}");
    }

    #[test]
    fn generators_match_printed_matrices() {
        for axis in [Axis::X, Axis::Y, Axis::Z] {
            let g = axis.generator();
            assert_eq!(g.transpose(), -g);
            for e in g.iter() {
                assert!(e.abs() == 0.0 || e.abs() == 1.0);
            }
        }
        assert_vec_eq(
            &(Axis::Y.generator() * Vector3::z()),
            &Vector3::x(),
            1e-15,
        );
        assert_vec_eq(
            &(Axis::Z.generator() * Vector3::x()),
            &Vector3::y(),
            1e-15,
        );
        assert_vec_eq(
            &(Axis::X.generator() * Vector3::y()),
            &Vector3::z(),
            1e-15,
        );
    }

    #[test]
    fn axis_angle_exp_basics() {
        let r = Rotation::axis_angle_exp(Vector3::y(), PI / 2.0).unwrap();
        assert_vec_eq(&r.apply(&Vector3::z()), &Vector3::x(), 1e-12);

        let id = Rotation::axis_angle_exp(Vector3::x(), 0.0).unwrap();
        assert_abs_diff_eq!(id.matrix(), &Matrix3::identity(), epsilon = 1e-15);

        let half_turn = Rotation::axis_angle_exp(Vector3::x(), PI).unwrap();
        assert_vec_eq(&half_turn.apply(&Vector3::z()), &-Vector3::z(), 1e-12);
    }

    #[test]
    fn non_unit_axis_rejected() {
        assert!(Rotation::axis_angle_exp(Vector3::new(0.0, 0.0, 2.0), 1.0).is_err());
    }

    #[test]
    fn compose_singleton_and_inverse_pair() {
        let r = Rotation::about(Axis::X, 0.7);
        let single = Rotation::compose(&[r]).unwrap();
        assert_abs_diff_eq!(single.matrix(), r.matrix(), epsilon = 1e-15);

        let id = Rotation::compose(&[r, r.inverse()]).unwrap();
        assert_abs_diff_eq!(id.matrix(), &Matrix3::identity(), epsilon = 1e-14);

        assert!(Rotation::compose(&[]).is_err());
    }

    #[test]
    fn compose_is_time_ordered() {
        // z -> x (about y), then x -> y (about z).
        let seq = [
            Rotation::about(Axis::Y, PI / 2.0),
            Rotation::about(Axis::Z, PI / 2.0),
        ];
        let r = Rotation::compose(&seq).unwrap();
        assert_vec_eq(&r.apply(&Vector3::z()), &Vector3::y(), 1e-12);
    }

    #[test]
    fn geodesic_distance_examples() {
        let r = Rotation::about(Axis::X, 1.2);
        assert_abs_diff_eq!(geodesic_distance(&r, &r), 0.0, epsilon = 1e-12);

        let id = Rotation::identity();
        for theta in [0.0, 0.3, 1.5, 2.9, PI] {
            let ry = Rotation::about(Axis::Y, theta);
            assert_abs_diff_eq!(geodesic_distance(&id, &ry), theta, epsilon = 1e-9);
        }

        // Two half-turns about orthogonal axes compose to a half-turn.
        let r2 = Rotation::about(Axis::Y, PI).after(&Rotation::about(Axis::X, PI));
        assert_abs_diff_eq!(geodesic_distance(&id, &r2), PI, epsilon = 1e-9);
    }

    #[test]
    fn angle_addition_on_shared_axis() {
        let axis = Vector3::new(0.36, -0.48, 0.8);
        for (a, b) in [(0.3, 0.4), (1.0, -2.5), (2.0, 1.0), (-0.1, 0.05)] {
            let lhs = Rotation::axis_angle_exp(axis, a)
                .unwrap()
                .after(&Rotation::axis_angle_exp(axis, b).unwrap());
            let rhs = Rotation::axis_angle_exp(axis, a + b).unwrap();
            assert_abs_diff_eq!(lhs.matrix(), rhs.matrix(), epsilon = 1e-10);
        }
    }

    #[test]
    fn conjugation_tilts_the_rotation_axis() {
        // exp(-g Ox) exp(b/2 Oy) exp(g Ox) rotates by b/2 about (0, cos g, -sin g).
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..100 {
            let g = next() * 12.0 - 6.0;
            let b = next() * 2.0 - 1.0;
            let seq = [
                Rotation::about(Axis::X, g),
                Rotation::about(Axis::Y, b / 2.0),
                Rotation::about(Axis::X, -g),
            ];
            let lhs = Rotation::compose(&seq).unwrap();
            let axis = Vector3::new(0.0, g.cos(), -g.sin());
            let rhs = Rotation::axis_angle_exp(axis, b / 2.0).unwrap();
            assert_abs_diff_eq!(lhs.matrix(), rhs.matrix(), epsilon = 1e-10);
        }
    }

    #[test]
    fn axis_angle_near_pi_tie_break() {
        let r = Rotation::about(Axis::X, PI);
        let (axis, angle) = r.axis_angle();
        assert_abs_diff_eq!(angle, PI, epsilon = 1e-12);
        assert!(axis.x > 0.0);

        let tilted = Rotation::axis_angle_exp(
            Vector3::new(-1.0, 0.0, 0.0),
            PI,
        )
        .unwrap();
        let (axis2, _) = tilted.axis_angle();
        assert!(axis2.x > 0.0, "sign fixed to first nonzero positive");
    }

    #[test]
    fn norm_preservation() {
        let r = Rotation::from_scaled_axis(Vector3::new(0.4, -2.2, 1.1));
        let v = Vector3::new(0.267261, -0.534522, 0.801784);
        assert_abs_diff_eq!(r.apply(&v).norm(), v.norm(), epsilon = 1e-12);
        assert!(r.orthogonality_defect() < 1e-12);
        assert_abs_diff_eq!(r.determinant(), 1.0, epsilon = 1e-12);
    }
}
