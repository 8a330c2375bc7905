//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use nalgebra::DMatrix;

/// Real root of `a s³ + s = r` (Cardano; unique since `a > 0`).
pub fn cubic_resolvent(a: f64, r: f64) -> f64 {
    let p = 1.0 / a;
    let q = -r / a;
    let d = (q * q / 4.0 + p * p * p / 27.0).sqrt();
    (-q / 2.0 + d).cbrt() + (-q / 2.0 - d).cbrt()
}

/// `B_ε` of the quartic example `B(r) = 4C r³`.
pub fn quartic_yosida(c: f64, eps: f64, r: f64) -> f64 {
    (r - cubic_resolvent(4.0 * c * eps, r)) / eps
}

/// Dense `−Δ_h` on a 1D node grid with reflected ghosts.
pub fn dense_neg_laplacian(n: usize, h: f64) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        let left = if i == 0 { 1 } else { i - 1 };
        let right = if i == n - 1 { n - 2 } else { i + 1 };
        m[(i, i)] += 2.0 / (h * h);
        m[(i, left)] -= 1.0 / (h * h);
        m[(i, right)] -= 1.0 / (h * h);
    }
    m
}

/// Adaptive Dormand–Prince 5(4) for `y' = f(y)` on `[0, t_end]`.
pub fn dopri(f: impl Fn(&[f64; 3]) -> [f64; 3], y0: [f64; 3], t_end: f64, tol: f64) -> [f64; 3] {
    const A: [[f64; 6]; 7] = [
        [0.0; 6],
        [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];
    let (mut t, mut y, mut h) = (0.0f64, y0, 1e-4f64);
    while t < t_end {
        h = h.min(t_end - t);
        let mut k = [[0.0; 3]; 7];
        for s in 0..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                for d in 0..3 {
                    ys[d] += h * A[s][j] * kj[d];
                }
            }
            k[s] = f(&ys);
        }
        let mut y5 = y;
        let mut err = 0.0f64;
        for d in 0..3 {
            let mut e = 0.0;
            for s in 0..7 {
                y5[d] += h * B5[s] * k[s][d];
                e += h * (B5[s] - B4[s]) * k[s][d];
            }
            err = err.max(e.abs() / (1.0 + y[d].abs()));
        }
        if err <= tol {
            t += h;
            y = y5;
        }
        h *= (0.9 * (tol / err.max(1e-300)).powf(0.2)).clamp(0.2, 5.0);
    }
    y
}
