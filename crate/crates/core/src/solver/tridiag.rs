//! Tridiagonal kernels for the implicit diffusion sweeps.

/// Thomas algorithm for `a_i x_{i-1} + b_i x_i + c_i x_{i+1} = d_i`.
///
/// `a[0]` and `c[n-1]` are ignored. The solution overwrites `d`; `scratch`
/// must hold at least `n` values.
pub fn thomas(a: &[f64], b: &[f64], c: &[f64], d: &mut [f64], scratch: &mut [f64]) {
    let n = d.len();
    debug_assert!(a.len() >= n && b.len() >= n && c.len() >= n && scratch.len() >= n);
    if n == 0 {
        return;
    }
    let mut beta = b[0];
    d[0] /= beta;
    for i in 1..n {
        scratch[i] = c[i - 1] / beta;
        beta = b[i] - a[i] * scratch[i];
        d[i] = (d[i] - a[i] * d[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        d[i] -= scratch[i + 1] * d[i + 1];
    }
}

/// Cyclic tridiagonal solve via Sherman-Morrison.
///
/// `alpha` is the bottom-left corner entry (first unknown in the last row)
/// and `beta` the top-right one (last unknown in the first row).
pub fn thomas_cyclic(a: &[f64], b: &[f64], c: &[f64], alpha: f64, beta: f64, d: &mut [f64], scratch: &mut CyclicScratch) {
    let n = d.len();
    debug_assert!(n >= 3);
    let gamma = -b[0];
    let bb = &mut scratch.diag;
    bb.clear();
    bb.extend_from_slice(&b[..n]);
    bb[0] = b[0] - gamma;
    bb[n - 1] = b[n - 1] - alpha * beta / gamma;
    thomas(a, bb, c, d, &mut scratch.work);
    let z = &mut scratch.z;
    z.clear();
    z.resize(n, 0.0);
    z[0] = gamma;
    z[n - 1] = alpha;
    thomas(a, bb, c, z, &mut scratch.work);
    let fact = (d[0] + beta * d[n - 1] / gamma) / (1.0 + z[0] + beta * z[n - 1] / gamma);
    for (x, zi) in d.iter_mut().zip(z.iter()) {
        *x -= fact * zi;
    }
}

#[derive(Debug, Default, Clone)]
pub struct CyclicScratch {
    diag: Vec<f64>,
    z: Vec<f64>,
    work: Vec<f64>,
}

impl CyclicScratch {
    pub fn new(n: usize) -> Self {
        CyclicScratch {
            diag: Vec::with_capacity(n),
            z: Vec::with_capacity(n),
            work: vec![0.0; n],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_solve(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Vec<f64> {
        let n = rhs.len();
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| m[i][k].abs().total_cmp(&m[j][k].abs())).unwrap();
            m.swap(k, p);
            rhs.swap(k, p);
            for i in k + 1..n {
                let f = m[i][k] / m[k][k];
                for j in k..n {
                    m[i][j] -= f * m[k][j];
                }
                rhs[i] -= f * rhs[k];
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| m[i][j] * x[j]).sum();
            x[i] = (rhs[i] - s) / m[i][i];
        }
        x
    }

    #[test]
    fn thomas_matches_dense() {
        let n = 9;
        let a: Vec<f64> = (0..n).map(|i| -0.3 - 0.01 * i as f64).collect();
        let b: Vec<f64> = (0..n).map(|i| 2.0 + 0.1 * i as f64).collect();
        let c: Vec<f64> = (0..n).map(|i| -0.7 + 0.02 * i as f64).collect();
        let d: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n {
            m[i][i] = b[i];
            if i > 0 {
                m[i][i - 1] = a[i];
            }
            if i + 1 < n {
                m[i][i + 1] = c[i];
            }
        }
        let expected = dense_solve(m, d.clone());
        let mut x = d;
        thomas(&a, &b, &c, &mut x, &mut vec![0.0; n]);
        for (u, v) in x.iter().zip(&expected) {
            assert!((u - v).abs() < 1e-13);
        }
    }

    #[test]
    fn cyclic_matches_dense() {
        let n = 11;
        let r = 3.7;
        let a = vec![-r; n];
        let b = vec![1.0 + 2.0 * r; n];
        let c = vec![-r; n];
        let d: Vec<f64> = (0..n).map(|i| (0.4 * i as f64).cos() + 2.0).collect();
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n {
            m[i][i] = b[i];
            m[i][(i + 1) % n] = -r;
            m[i][(i + n - 1) % n] = -r;
        }
        let expected = dense_solve(m, d.clone());
        let mut x = d;
        thomas_cyclic(&a, &b, &c, -r, -r, &mut x, &mut CyclicScratch::new(n));
        for (u, v) in x.iter().zip(&expected) {
            assert!((u - v).abs() < 1e-12, "{u} vs {v}");
        }
    }
}
