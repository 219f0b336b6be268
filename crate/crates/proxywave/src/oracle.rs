//! Closed-form series solution of the circular transmission problem.
//!
//! For a plane wave travelling along +x2 hitting a dielectric circle, the
//! field separates in polar coordinates about the circle center. Writing the
//! polar angle phi from the +x2 axis (the propagation direction), the
//! incident wave expands as exp(i k1 rho cos phi) = sum_n i^|n| J_|n|(k1 rho)
//! e^{i n phi}; the scattered and interior fields use H_|n| and J_|n| radial
//! parts in the same angular basis, which makes the mode coefficients even
//! in n. Each |n| yields a 2x2 system from the interface conditions
//! (continuity of u and of the permittivity-scaled normal flux).

use num_complex::Complex64;

use crate::bessel::{bessel_j_seq, bessel_y_seq};
use crate::error::{Error, Result};
use crate::geometry::{BoundaryMesh, Point};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Frequency and material constants; both permeabilities are fixed to 1.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct MediumParams {
    pub omega: f64,
    pub eps1: f64,
    pub eps2: f64,
}

impl MediumParams {
    pub fn new(omega: f64, eps1: f64, eps2: f64) -> Result<Self> {
        if omega <= 0.0 || eps1 <= 0.0 || eps2 <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "medium parameters must be positive (omega={omega}, eps1={eps1}, eps2={eps2})"
            )));
        }
        Ok(Self { omega, eps1, eps2 })
    }

    /// Exterior wavenumber k1 = omega * sqrt(eps1).
    pub fn k1(&self) -> f64 {
        self.omega * self.eps1.sqrt()
    }

    /// Interior wavenumber k2 = omega * sqrt(eps2).
    pub fn k2(&self) -> f64 {
        self.omega * self.eps2.sqrt()
    }
}

/// Unit-amplitude plane wave travelling along +x2: exp(i k1 x2).
#[inline]
pub fn incident_wave(x: Point, k1: f64) -> Complex64 {
    (I * k1 * x.y).exp()
}

/// Mode coefficients of the solved transmission problem, stored for orders
/// 0..=m_trunc; negative orders mirror the positive ones.
#[derive(Debug, Clone)]
pub struct SeriesCoefficients {
    scattered: Vec<Complex64>,
    interior: Vec<Complex64>,
    m_trunc: usize,
    center: Point,
    radius: f64,
    incident_phase: Complex64,
}

impl SeriesCoefficients {
    pub fn truncation_order(&self) -> usize {
        self.m_trunc
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn center(&self) -> Point {
        self.center
    }

    /// Scattered-mode coefficient b_n (valid for any sign of n).
    pub fn scattered_coeff(&self, n: i32) -> Complex64 {
        self.scattered[n.unsigned_abs() as usize]
    }

    /// Interior-mode coefficient c_n.
    pub fn interior_coeff(&self, n: i32) -> Complex64 {
        self.interior[n.unsigned_abs() as usize]
    }

    /// Sum of |b_n|^2 over all modes; stable under truncation growth once the
    /// tail has decayed.
    pub fn scattered_energy(&self) -> f64 {
        let mut s = self.scattered[0].norm_sqr();
        for b in &self.scattered[1..] {
            s += 2.0 * b.norm_sqr();
        }
        s
    }
}

/// Derivative of a cylinder function from the sequence of its values:
/// C_n'(z) = C_{n-1}(z) - (n/z) C_n(z), with C_0' = -C_1.
fn cyl_derivative(vals: &[f64], n: usize, z: f64) -> f64 {
    if n == 0 {
        -vals[1]
    } else {
        vals[n - 1] - (n as f64 / z) * vals[n]
    }
}

fn hankel_at(j: &[f64], y: &[f64], n: usize) -> Complex64 {
    Complex64::new(j[n], y[n])
}

fn hankel_deriv_at(j: &[f64], y: &[f64], n: usize, z: f64) -> Complex64 {
    Complex64::new(cyl_derivative(j, n, z), cyl_derivative(y, n, z))
}

/// Solve the per-mode 2x2 interface systems. Starts from `m_start` (pass 0
/// to use ceil(k1*radius) + 20) and extends by 10 until the coefficient tail
/// has decayed below 1e-14 of the largest mode.
pub fn solve_series(params: &MediumParams, radius: f64, m_start: usize) -> Result<SeriesCoefficients> {
    solve_series_at(params, Point::ORIGIN, radius, m_start)
}

/// As [`solve_series`] for a circle centered at `center`; the incident-wave
/// expansion about the center picks up the phase exp(i k1 center.y).
pub fn solve_series_at(
    params: &MediumParams,
    center: Point,
    radius: f64,
    m_start: usize,
) -> Result<SeriesCoefficients> {
    if radius <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "scatterer radius must be positive, got {radius}"
        )));
    }
    let (k1, k2) = (params.k1(), params.k2());
    let mut m = if m_start == 0 {
        (k1 * radius).ceil() as usize + 20
    } else {
        m_start
    };
    loop {
        let coeffs = solve_at_order(params, center, radius, m)?;
        let peak = coeffs
            .scattered
            .iter()
            .map(|b| b.norm())
            .fold(0.0f64, f64::max)
            .max(1e-300);
        let tail = coeffs.scattered[m].norm() + coeffs.interior[m].norm();
        if tail < 1e-14 * peak.max(1.0) {
            return Ok(coeffs);
        }
        m += 10;
        if m > crate::bessel::MAX_ORDER as usize - 1 {
            return Err(Error::Numerical(format!(
                "series truncation did not decay below tolerance by order {m} (k1*a = {}, k2*a = {})",
                k1 * radius,
                k2 * radius
            )));
        }
    }
}

fn solve_at_order(
    params: &MediumParams,
    center: Point,
    radius: f64,
    m: usize,
) -> Result<SeriesCoefficients> {
    let (k1, k2) = (params.k1(), params.k2());
    let z1 = k1 * radius;
    let z2 = k2 * radius;
    let j1 = bessel_j_seq(m as u32 + 1, z1)?;
    let y1 = bessel_y_seq(m as u32 + 1, z1)?;
    let j2 = bessel_j_seq(m as u32 + 1, z2)?;
    let incident_phase = (I * k1 * center.y).exp();
    let mut scattered = Vec::with_capacity(m + 1);
    let mut interior = Vec::with_capacity(m + 1);
    for n in 0..=m {
        let a_n = I.powu(n as u32) * incident_phase;
        let h = hankel_at(&j1, &y1, n);
        let hp = hankel_deriv_at(&j1, &y1, n, z1);
        let j1n = j1[n];
        let j1p = cyl_derivative(&j1, n, z1);
        let j2n = j2[n];
        let j2p = cyl_derivative(&j2, n, z2);
        // continuity of u:            b H + a J1 = c J2
        // continuity of (1/eps) u_n:  (k1/e1)(b H' + a J1') = (k2/e2) c J2'
        let a11 = h;
        let a12 = Complex64::new(-j2n, 0.0);
        let a21 = hp * (k1 / params.eps1);
        let a22 = Complex64::new(-(k2 / params.eps2) * j2p, 0.0);
        let r1 = -a_n * j1n;
        let r2 = -a_n * (k1 / params.eps1) * j1p;
        let det = a11 * a22 - a12 * a21;
        if det.norm() < 1e-14 {
            return Err(Error::SingularMode {
                mode: n,
                det: det.norm(),
            });
        }
        scattered.push((r1 * a22 - a12 * r2) / det);
        interior.push((a11 * r2 - r1 * a21) / det);
    }
    Ok(SeriesCoefficients {
        scattered,
        interior,
        m_trunc: m,
        center,
        radius,
        incident_phase,
    })
}

/// Total field at `x`: incident plus scattered series outside the circle,
/// interior series inside. On the circle itself both branches agree to the
/// truncation tolerance; the exterior branch is used.
pub fn oracle_field(x: Point, coeffs: &SeriesCoefficients, params: &MediumParams) -> Complex64 {
    let rel = x.sub(coeffs.center);
    let rho = rel.norm();
    // polar angle measured from the +x2 propagation axis
    let phi = rel.x.atan2(rel.y);
    let m = coeffs.m_trunc;
    if rho >= coeffs.radius {
        let z = params.k1() * rho;
        let j = bessel_j_seq(m as u32, z).expect("positive argument");
        let y = bessel_y_seq(m as u32, z).expect("positive argument");
        let mut acc = coeffs.scattered[0] * hankel_at(&j, &y, 0);
        for n in 1..=m {
            acc += coeffs.scattered[n] * hankel_at(&j, &y, n) * 2.0 * (n as f64 * phi).cos();
        }
        incident_wave(x, params.k1()) + acc
    } else {
        let z = params.k2() * rho;
        if z == 0.0 {
            return coeffs.interior[0];
        }
        let j = bessel_j_seq(m as u32, z).expect("positive argument");
        let mut acc = coeffs.interior[0] * j[0];
        for n in 1..=m {
            acc += coeffs.interior[n] * j[n] * 2.0 * (n as f64 * phi).cos();
        }
        acc
    }
}

/// Scattered part of the exterior field only (used by decay diagnostics).
pub fn scattered_field(x: Point, coeffs: &SeriesCoefficients, params: &MediumParams) -> Complex64 {
    oracle_field(x, coeffs, params) - incident_wave(x, params.k1())
}

/// Boundary trace u and scaled flux q = (1/eps1) du+/dn at the mesh midpoints.
#[derive(Debug, Clone)]
pub struct BoundaryData {
    pub u: Vec<Complex64>,
    pub q: Vec<Complex64>,
}

impl BoundaryData {
    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }
}

/// Evaluate the exterior series trace and its radial derivative at the mesh
/// midpoints. Fails if any midpoint is off the solved circle by more than 1e-12.
pub fn boundary_data(
    mesh: &BoundaryMesh,
    coeffs: &SeriesCoefficients,
    params: &MediumParams,
) -> Result<BoundaryData> {
    let m = coeffs.m_trunc;
    let k1 = params.k1();
    let z = k1 * coeffs.radius;
    let j = bessel_j_seq(m as u32 + 1, z)?;
    let y = bessel_y_seq(m as u32 + 1, z)?;
    let mut u = Vec::with_capacity(mesh.len());
    let mut q = Vec::with_capacity(mesh.len());
    for p in mesh.midpoints() {
        let rel = p.sub(coeffs.center);
        let rho = rel.norm();
        if (rho - coeffs.radius).abs() > 1e-12 {
            return Err(Error::MeshMismatch(format!(
                "midpoint at radius {rho} but series solved for {}",
                coeffs.radius
            )));
        }
        let phi = rel.x.atan2(rel.y);
        let mut trace = Complex64::default();
        let mut flux = Complex64::default();
        for n in 0..=m {
            let ang = if n == 0 {
                1.0
            } else {
                2.0 * (n as f64 * phi).cos()
            };
            let a_n = I.powu(n as u32) * coeffs.incident_phase;
            let h = hankel_at(&j, &y, n);
            let hp = hankel_deriv_at(&j, &y, n, z);
            let jn = j[n];
            let jp = cyl_derivative(&j, n, z);
            trace += (a_n * jn + coeffs.scattered[n] * h) * ang;
            flux += (a_n * jp + coeffs.scattered[n] * hp) * (k1 * ang);
        }
        u.push(trace);
        q.push(flux / params.eps1);
    }
    Ok(BoundaryData { u, q })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::discretize_circle;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn paper_params() -> MediumParams {
        MediumParams::new(10.0, 1.0, 2.0).unwrap()
    }

    #[test]
    fn wavenumbers_follow_permittivity() {
        let p = paper_params();
        assert_eq!(p.k1(), 10.0);
        assert!((p.k2() - 10.0 * 2.0f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn incident_wave_examples() {
        let k1 = 3.0;
        let v = incident_wave(Point::new(5.0, 0.0), k1);
        assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        let v = incident_wave(Point::new(0.0, PI / (2.0 * k1)), k1);
        assert!((v - Complex64::new(0.0, 1.0)).norm() < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let x = Point::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
            assert!((incident_wave(x, k1).norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn no_contrast_degenerates_to_incident() {
        let p = MediumParams::new(10.0, 1.0, 1.0).unwrap();
        let coeffs = solve_series(&p, 0.99, 0).unwrap();
        for n in 0..=coeffs.m_trunc {
            assert!(coeffs.scattered[n].norm() < 1e-13, "b_{n} nonzero");
            let want = I.powu(n as u32);
            assert!((coeffs.interior[n] - want).norm() < 1e-12, "c_{n}");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let x = Point::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let diff = (oracle_field(x, &coeffs, &p) - incident_wave(x, p.k1())).norm();
            assert!(diff < 1e-12, "field at ({}, {}) off by {diff}", x.x, x.y);
        }
    }

    #[test]
    fn interface_conditions_hold() {
        let p = paper_params();
        let coeffs = solve_series(&p, 0.99, 0).unwrap();
        assert!(coeffs.m_trunc >= 30 && coeffs.m_trunc <= 60);
        let mut worst_u: f64 = 0.0;
        let mut worst_q: f64 = 0.0;
        let eps_r = 1e-6;
        for k in 0..256 {
            let th = 2.0 * PI * k as f64 / 256.0;
            let dir = Point::new(th.sin(), th.cos());
            let xe = Point::new(dir.x * (0.99 + eps_r), dir.y * (0.99 + eps_r));
            let xi = Point::new(dir.x * (0.99 - eps_r), dir.y * (0.99 - eps_r));
            let ue = oracle_field(xe, &coeffs, &p);
            let ui = oracle_field(xi, &coeffs, &p);
            worst_u = worst_u.max((ue - ui).norm() / ue.norm());
            // one-sided flux continuity via finite differences on each side
            let xe2 = Point::new(dir.x * (0.99 + 2.0 * eps_r), dir.y * (0.99 + 2.0 * eps_r));
            let xi2 = Point::new(dir.x * (0.99 - 2.0 * eps_r), dir.y * (0.99 - 2.0 * eps_r));
            let de = (oracle_field(xe2, &coeffs, &p) - ue) / eps_r / p.eps1;
            let di = (ui - oracle_field(xi2, &coeffs, &p)) / eps_r / p.eps2;
            worst_q = worst_q.max((de - di).norm() / de.norm());
        }
        assert!(worst_u < 1e-9, "interface trace residual {worst_u}");
        // finite differences limit the flux check accuracy, not the series
        assert!(worst_q < 1e-4, "interface flux residual {worst_q}");
    }

    #[test]
    fn field_is_even_about_propagation_axis() {
        let p = paper_params();
        let coeffs = solve_series(&p, 0.99, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let x = Point::new(rng.gen_range(0.1..3.0), rng.gen_range(-3.0..3.0));
            let a = oracle_field(x, &coeffs, &p);
            let b = oracle_field(Point::new(-x.x, x.y), &coeffs, &p);
            assert!((a - b).norm() < 1e-12 * a.norm().max(1.0));
        }
        assert_eq!(coeffs.scattered_coeff(-5), coeffs.scattered_coeff(5));
    }

    #[test]
    fn helmholtz_residual_by_finite_differences() {
        let p = paper_params();
        let coeffs = solve_series(&p, 0.99, 0).unwrap();
        let h = 1e-3;
        for (x, k) in [
            (Point::new(1.7, 0.4), p.k1()),
            (Point::new(-0.2, 0.3), p.k2()),
        ] {
            let u0 = oracle_field(x, &coeffs, &p);
            let lap = (oracle_field(Point::new(x.x + h, x.y), &coeffs, &p)
                + oracle_field(Point::new(x.x - h, x.y), &coeffs, &p)
                + oracle_field(Point::new(x.x, x.y + h), &coeffs, &p)
                + oracle_field(Point::new(x.x, x.y - h), &coeffs, &p)
                - 4.0 * u0)
                / (h * h);
            let res = (lap + k * k * u0).norm() / (k * k * u0.norm());
            assert!(res < 1e-4, "Helmholtz residual {res} at ({}, {})", x.x, x.y);
        }
    }

    #[test]
    fn scattered_energy_stable_under_truncation_growth() {
        let p = paper_params();
        let a = solve_series(&p, 0.99, 45).unwrap();
        let b = solve_series(&p, 0.99, 55).unwrap();
        let rel = (a.scattered_energy() - b.scattered_energy()).abs() / a.scattered_energy();
        assert!(rel < 1e-12, "energy drift {rel}");
    }

    #[test]
    fn radiation_decay_rate() {
        let p = paper_params();
        let coeffs = solve_series(&p, 0.99, 0).unwrap();
        // forward direction (+x2) avoids far-field pattern nulls
        let near = scattered_field(Point::new(0.0, 50.0), &coeffs, &p).norm();
        let far = scattered_field(Point::new(0.0, 200.0), &coeffs, &p).norm();
        let ratio = near / far;
        assert!((ratio - 2.0).abs() < 0.04, "r^-1/2 decay ratio {ratio}");
    }

    #[test]
    fn boundary_data_paper_config() {
        let p = paper_params();
        let coeffs = solve_series(&p, 0.99, 0).unwrap();
        let mesh = discretize_circle(Point::ORIGIN, 0.99, 256).unwrap();
        let data = boundary_data(&mesh, &coeffs, &p).unwrap();
        assert_eq!(data.len(), 256);
        // q from the exterior series equals the interior-side scaled flux
        let h = 1e-6;
        for (j, mp) in mesh.midpoints().iter().enumerate().step_by(17) {
            let n = mesh.normals()[j];
            let inner1 = Point::new(mp.x - h * n.x, mp.y - h * n.y);
            let inner2 = Point::new(mp.x - 2.0 * h * n.x, mp.y - 2.0 * h * n.y);
            let fd = (oracle_field(inner1, &coeffs, &p) - oracle_field(inner2, &coeffs, &p)) / h;
            let qi = fd / p.eps2;
            assert!(
                (qi - data.q[j]).norm() < 1e-4 * data.q[j].norm(),
                "interior flux mismatch at element {j}"
            );
        }
    }

    #[test]
    fn boundary_data_no_contrast_closed_form() {
        let p = MediumParams::new(10.0, 1.0, 1.0).unwrap();
        let coeffs = solve_series(&p, 0.99, 0).unwrap();
        let mesh = discretize_circle(Point::ORIGIN, 0.99, 64).unwrap();
        let data = boundary_data(&mesh, &coeffs, &p).unwrap();
        for (j, mp) in mesh.midpoints().iter().enumerate() {
            let want_u = incident_wave(*mp, p.k1());
            let want_q = I * p.k1() * mesh.normals()[j].y * want_u / p.eps1;
            assert!((data.u[j] - want_u).norm() < 1e-11);
            assert!((data.q[j] - want_q).norm() < 1e-10);
        }
    }

    #[test]
    fn boundary_data_rejects_wrong_mesh() {
        let p = paper_params();
        let coeffs = solve_series(&p, 0.99, 0).unwrap();
        let mesh = discretize_circle(Point::ORIGIN, 1.01, 64).unwrap();
        assert!(matches!(
            boundary_data(&mesh, &coeffs, &p),
            Err(Error::MeshMismatch(_))
        ));
    }

    #[test]
    fn boundary_trace_matches_both_branches() {
        let p = paper_params();
        let coeffs = solve_series(&p, 0.99, 0).unwrap();
        for k in 0..32 {
            let th = 2.0 * PI * (k as f64 + 0.3) / 32.0;
            let dir = Point::new(th.cos(), th.sin());
            let out = oracle_field(Point::new(dir.x * 0.99, dir.y * 0.99), &coeffs, &p);
            let inn = oracle_field(
                Point::new(dir.x * (0.99 - 1e-11), dir.y * (0.99 - 1e-11)),
                &coeffs,
                &p,
            );
            assert!((out - inn).norm() < 1e-10 * out.norm());
        }
    }
}
