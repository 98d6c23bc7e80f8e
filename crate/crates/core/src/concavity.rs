//! Negative-semidefiniteness checks on small Hessians via the sign pattern of
//! their leading principal minors.

/// Hessian of a profit surface at one point, with its leading principal
/// minors `D_1..D_n` and the alternating-sign verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcavityReport {
    /// Row-major symmetric matrix, variable order as documented by the producer.
    pub hessian: Vec<Vec<f64>>,
    pub minors: Vec<f64>,
    /// `(−1)^k·D_k ≥ 0` for every k, within a relative slack of `1e-9`.
    pub negative_semidefinite: bool,
    /// Sign-determining factor of `D_3` for complementary bundles; `D_3 ≤ 0`
    /// exactly when this is `≤ 0`.
    pub a2: Option<f64>,
}

impl ConcavityReport {
    pub(crate) fn from_hessian(hessian: Vec<Vec<f64>>, a2: Option<f64>) -> Self {
        let minors = leading_principal_minors(&hessian);
        let scale = hessian
            .iter()
            .flatten()
            .fold(0.0_f64, |m, v| m.max(v.abs()))
            .max(1.0);
        let negative_semidefinite = alternating_signs(&minors, scale);
        Self {
            hessian,
            minors,
            negative_semidefinite,
            a2,
        }
    }
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn determinant(matrix: &[Vec<f64>]) -> f64 {
    let n = matrix.len();
    let mut a: Vec<Vec<f64>> = matrix.iter().map(|row| row[..n].to_vec()).collect();
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap_or(col);
        if a[pivot][col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            a.swap(pivot, col);
            det = -det;
        }
        det *= a[col][col];
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
        }
    }
    det
}

/// `D_k = det(H[..k, ..k])` for `k = 1..=n`.
pub fn leading_principal_minors(matrix: &[Vec<f64>]) -> Vec<f64> {
    (1..=matrix.len())
        .map(|k| {
            let sub: Vec<Vec<f64>> = matrix[..k].iter().map(|row| row[..k].to_vec()).collect();
            determinant(&sub)
        })
        .collect()
}

/// `(−1)^k·D_k ≥ −slack_k` with the slack scaled to the magnitude of a
/// k×k minor built from entries of size `scale`.
pub fn alternating_signs(minors: &[f64], scale: f64) -> bool {
    minors.iter().enumerate().all(|(i, d)| {
        let k = i + 1;
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sign * d >= -1e-9 * scale.powi(k as i32)
    })
}
