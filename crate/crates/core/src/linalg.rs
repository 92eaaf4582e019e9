//! Small dense helpers: spectral norm and least squares for tiny problems.

/// Spectral norm (largest singular value) of a row-major `rows x cols`
/// matrix via power iteration on `AᵀA`. Deterministic start vector; the
/// matrices here are at most a few rows and columns, so convergence is
/// immediate in practice.
pub fn spectral_norm(m: &[f64], rows: usize, cols: usize) -> f64 {
    assert_eq!(m.len(), rows * cols);
    if rows == 0 || cols == 0 {
        return 0.0;
    }
    if rows == 1 && cols == 1 {
        return m[0].abs();
    }
    let mut v = vec![1.0 / (cols as f64).sqrt(); cols];
    let mut av = vec![0.0; rows];
    let mut atav = vec![0.0; cols];
    let mut sigma = 0.0;
    for iter in 0..200 {
        for (i, slot) in av.iter_mut().enumerate() {
            *slot = m[i * cols..(i + 1) * cols]
                .iter()
                .zip(&v)
                .map(|(a, x)| a * x)
                .sum();
        }
        for (j, slot) in atav.iter_mut().enumerate() {
            *slot = (0..rows).map(|i| m[i * cols + j] * av[i]).sum();
        }
        let norm = atav.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            // v is in the null space; perturb along the first axis once.
            if iter == 0 {
                v.fill(0.0);
                v[0] = 1.0;
                continue;
            }
            return 0.0;
        }
        let next_sigma = norm.sqrt();
        for (x, y) in v.iter_mut().zip(&atav) {
            *x = y / norm;
        }
        if (next_sigma - sigma).abs() <= 1e-14 * next_sigma.max(1.0) {
            return next_sigma;
        }
        sigma = next_sigma;
    }
    sigma
}

/// Ordinary least squares line fit `y ≈ slope·x + intercept`.
///
/// Returns `(slope, intercept, r_squared)`. When the data has no variance in
/// `y`, `r_squared` is defined as 0 unless the residuals are also zero.
pub fn line_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
        syy += (yi - my) * (yi - my);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| {
            let r = yi - (slope * xi + intercept);
            r * r
        })
        .sum();
    let r2 = if syy > 1e-300 {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    } else if ss_res <= 1e-300 {
        1.0
    } else {
        0.0
    };
    (slope, intercept, r2)
}
