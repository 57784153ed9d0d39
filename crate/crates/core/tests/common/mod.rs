#![allow(dead_code)]

use nalgebra::{Matrix3, SMatrix, SVector, Vector3};

/// Adaptive Simpson integration of `f` on `[a, b]`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn step(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 50)
}

pub fn oracle_perimeter(a: f64, b: f64) -> f64 {
    // four quarters, each integrated separately so the panels stay smooth
    let f = |t: f64| (a * a * t.sin().powi(2) + b * b * t.cos().powi(2)).sqrt();
    4.0 * adaptive_simpson(&f, 0.0, std::f64::consts::FRAC_PI_2, 1e-14)
}

pub fn bisection_axis(p: f64, b: f64) -> f64 {
    let (mut lo, mut hi) = (1e-9, p / 2.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if oracle_perimeter(mid, b) > p {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `(sum x^2, sum z^2) * m / n` over `n` point masses equally spaced in arclength.
pub fn point_mass_moments(a: f64, b: f64, m: f64, n: usize) -> (f64, f64) {
    let fine = 40 * n;
    let dt = std::f64::consts::TAU / fine as f64;
    let speed = |t: f64| (a * a * t.sin().powi(2) + b * b * t.cos().powi(2)).sqrt();
    // cumulative arclength by Simpson on each fine panel
    let mut cum = Vec::with_capacity(fine + 1);
    cum.push(0.0);
    for k in 0..fine {
        let t0 = k as f64 * dt;
        let s = dt / 6.0 * (speed(t0) + 4.0 * speed(t0 + 0.5 * dt) + speed(t0 + dt));
        cum.push(cum[k] + s);
    }
    let total = cum[fine];
    let mut sx = 0.0;
    let mut sz = 0.0;
    let mut j = 0;
    for k in 0..n {
        let target = (k as f64 + 0.5) * total / n as f64;
        while cum[j + 1] < target {
            j += 1;
        }
        // Newton refine t inside the panel
        let mut t = j as f64 * dt + (target - cum[j]) / (cum[j + 1] - cum[j]) * dt;
        for _ in 0..3 {
            let t0 = j as f64 * dt;
            let s = adaptive_simpson(&speed, t0, t, 1e-15) + cum[j];
            t -= (s - target) / speed(t);
        }
        sx += (a * t.cos()).powi(2);
        sz += (b * t.sin()).powi(2);
    }
    (m * sx / n as f64, m * sz / n as f64)
}

/// Largest projection of sampled boundary points onto the support direction.
pub fn sampled_support(a: f64, b: f64, spin: f64, n: usize) -> f64 {
    let (s, c) = spin.sin_cos();
    (0..n)
        .map(|k| {
            let t = std::f64::consts::TAU * k as f64 / n as f64;
            a * t.cos() * s + b * t.sin() * c
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

fn rz(q: f64) -> Matrix3<f64> {
    let (s, c) = q.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

fn rx(q: f64) -> Matrix3<f64> {
    let (s, c) = q.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

/// Newton-Euler model of a thin axisymmetric hoop rolling without slip.
///
/// Returns derivatives in the layout
/// `[heading, lean, spin, heading_rate, lean_rate, spin_rate, x, y]`,
/// with `x, y` the horizontal centre-of-mass velocity.
pub fn newton_euler_rates(
    q: [f64; 8],
    diametral: f64,
    axial: f64,
    m: f64,
    radius: f64,
    gravity: Vector3<f64>,
) -> [f64; 8] {
    let [psi, th, ph, dpsi, dth, dph, _, _] = q;
    let rot = rz(psi) * rx(th) * rz(ph);
    let zw = Vector3::z();
    let e1 = rz(psi) * Vector3::x();
    let n = rot * Vector3::z();
    let omega = dpsi * zw + dth * e1 + dph * n;

    let w = zw - zw.dot(&n) * n;
    let wn = w.norm();
    let u = w / wn;
    let lever = -radius * u;
    let ndot = omega.cross(&n);
    let wdot = -(zw.dot(&ndot)) * n - zw.dot(&n) * ndot;
    let udot = (wdot - u * u.dot(&wdot)) / wn;
    let lever_dot = -radius * udot;

    let jb = Matrix3::from_diagonal(&Vector3::new(diametral, diametral, axial));
    let jw = rot * jb * rot.transpose();

    // unknowns: angular acceleration (3), centre acceleration (3), contact force (3)
    let mut a = SMatrix::<f64, 9, 9>::zeros();
    let mut rhs = SVector::<f64, 9>::zeros();
    for i in 0..3 {
        a[(i, 3 + i)] = m;
        a[(i, 6 + i)] = -1.0;
        rhs[i] = m * gravity[i];
    }
    a.fixed_view_mut::<3, 3>(3, 0).copy_from(&jw);
    a.fixed_view_mut::<3, 3>(3, 6)
        .copy_from(&(-lever.cross_matrix()));
    let gyro = omega.cross(&(jw * omega));
    for i in 0..3 {
        rhs[3 + i] = -gyro[i];
    }
    // a_G + alpha x lever + omega x lever_dot = 0
    a.fixed_view_mut::<3, 3>(6, 0)
        .copy_from(&(-lever.cross_matrix()));
    for i in 0..3 {
        a[(6 + i, 3 + i)] = 1.0;
    }
    let tail = -omega.cross(&lever_dot);
    for i in 0..3 {
        rhs[6 + i] = tail[i];
    }
    let sol = a.lu().solve(&rhs).expect("regular rolling state");
    let alpha = Vector3::new(sol[0], sol[1], sol[2]);

    let e1dot = dpsi * zw.cross(&e1);
    let ndot = omega.cross(&n);
    let target = alpha - dth * e1dot - dph * ndot;
    let mut basis = Matrix3::zeros();
    basis.set_column(0, &zw);
    basis.set_column(1, &e1);
    basis.set_column(2, &n);
    let qdd = basis.lu().solve(&target).expect("regular Euler basis");
    let vg = -omega.cross(&lever);
    [dpsi, dth, dph, qdd[0], qdd[1], qdd[2], vg[0], vg[1]]
}

/// `R^T dR/dt` by central differences along a smooth angle path.
pub fn fd_body_rates(angles: impl Fn(f64) -> [f64; 3], t: f64, h: f64) -> Vector3<f64> {
    let r = |t: f64| {
        let [psi, th, ph] = angles(t);
        rz(psi) * rx(th) * rz(ph)
    };
    let dr = (r(t + h) - r(t - h)) / (2.0 * h);
    let w = r(t).transpose() * dr;
    Vector3::new(w[(2, 1)], w[(0, 2)], w[(1, 0)])
}
