//! Dense symmetric helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

const EIGEN_EPS: f64 = 1e-15;
const EIGEN_MAX_ITER: usize = 100_000;

/// Eigenvalues in ascending order.
pub fn sym_eigenvalues(a: &DMatrix<f64>) -> Result<DVector<f64>, String> {
    let ev = SymmetricEigen::try_new(a.clone(), EIGEN_EPS, EIGEN_MAX_ITER)
        .ok_or_else(|| format!("symmetric eigensolver did not converge ({}x{})", a.nrows(), a.ncols()))?
        .eigenvalues;
    let mut v: Vec<f64> = ev.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    Ok(DVector::from_vec(v))
}

/// Eigenpairs sorted by ascending eigenvalue; eigenvectors are columns.
pub fn sym_eigen(a: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>), String> {
    let eig = SymmetricEigen::try_new(a.clone(), EIGEN_EPS, EIGEN_MAX_ITER)
        .ok_or_else(|| format!("symmetric eigensolver did not converge ({}x{})", a.nrows(), a.ncols()))?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = DVector::from_iterator(order.len(), order.iter().map(|&i| eig.eigenvalues[i]));
    let vectors = DMatrix::from_columns(&order.iter().map(|&i| eig.eigenvectors.column(i)).collect::<Vec<_>>());
    Ok((values, vectors))
}

/// Smallest eigenvalue; narrow-band matrices go through inertia bisection.
pub fn min_eigenvalue(a: &DMatrix<f64>) -> Result<f64, String> {
    let b = bandwidth(a);
    if a.nrows() >= 16 && 4 * b < a.nrows() {
        return Ok(banded_min_eigenvalue(a, b));
    }
    Ok(sym_eigenvalues(a)?[0])
}

pub fn max_eigenvalue(a: &DMatrix<f64>) -> Result<f64, String> {
    Ok(-min_eigenvalue(&(-a))?)
}

/// Largest `|i − j|` with a nonzero entry.
pub fn bandwidth(a: &DMatrix<f64>) -> usize {
    let mut b = 0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            if a[(i, j)] != 0.0 {
                b = b.max(i.abs_diff(j));
            }
        }
    }
    b
}

/// Number of eigenvalues below `sigma`, from the signs of the pivots of a
/// banded `LDLᵀ` of `A − σI`.
fn count_below(a: &DMatrix<f64>, b: usize, sigma: f64, tiny: f64) -> usize {
    let n = a.nrows();
    let width = b + 1;
    // l[i*width + (j - i + b)] holds L_ij for i - b <= j < i
    let mut l = vec![0.0; n * width];
    let mut d = vec![0.0; n];
    let mut count = 0;
    for i in 0..n {
        let start = i.saturating_sub(b);
        for j in start..i {
            let mut s = a[(i, j)];
            for k in start.max(j.saturating_sub(b))..j {
                s -= l[i * width + k + b - i] * l[j * width + k + b - j] * d[k];
            }
            l[i * width + j + b - i] = s / d[j];
        }
        let mut s = a[(i, i)] - sigma;
        for k in start..i {
            let lik = l[i * width + k + b - i];
            s -= lik * lik * d[k];
        }
        if s == 0.0 {
            s = -tiny;
        }
        if s < 0.0 {
            count += 1;
        }
        d[i] = s;
    }
    count
}

fn banded_min_eigenvalue(a: &DMatrix<f64>, b: usize) -> f64 {
    let (mut lo, mut hi) = gershgorin_bounds(a);
    let floor = 1e-15 * (hi - lo).abs().max(f64::MIN_POSITIVE);
    for _ in 0..200 {
        if hi - lo <= (2.0 * f64::EPSILON * lo.abs().max(hi.abs())).max(floor) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if count_below(a, b, mid, floor) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Gershgorin enclosure `[min_i (a_ii − r_i), max_i (a_ii + r_i)]`.
pub fn gershgorin_bounds(a: &DMatrix<f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..a.nrows() {
        let r: f64 = (0..a.ncols()).filter(|&j| j != i).map(|j| a[(i, j)].abs()).sum();
        lo = lo.min(a[(i, i)] - r);
        hi = hi.max(a[(i, i)] + r);
    }
    (lo, hi)
}

/// Largest singular value of a symmetric matrix.
pub fn sym_spectral_norm(a: &DMatrix<f64>) -> Result<f64, String> {
    let ev = sym_eigenvalues(a)?;
    Ok(ev[0].abs().max(ev[ev.len() - 1].abs()))
}

/// `(A + shift·I)⁻¹` for symmetric positive definite `A + shift·I`.
pub fn spd_shifted_inverse(a: &DMatrix<f64>, shift: f64) -> Result<DMatrix<f64>, String> {
    let mut b = a.clone();
    for i in 0..b.nrows() {
        b[(i, i)] += shift;
    }
    let chol = b
        .cholesky()
        .ok_or_else(|| format!("matrix plus {shift} is not positive definite"))?;
    Ok(chol.inverse())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sorted_eigenpairs() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let (vals, vecs) = sym_eigen(&a).unwrap();
        assert!((vals[0] - 1.0).abs() < 1e-14 && (vals[1] - 3.0).abs() < 1e-14);
        let r = &a * vecs.column(0) - vecs.column(0) * vals[0];
        assert!(r.amax() < 1e-14);
        assert_eq!(gershgorin_bounds(&a), (1.0, 3.0));
    }

    #[test]
    fn banded_bisection_matches_dense() {
        let n = 60;
        let a = DMatrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
            0 => 2.0 + (i as f64 * 0.7).sin(),
            1 => -1.3 + 0.1 * ((i + j) as f64).cos(),
            2 => 0.4,
            _ => 0.0,
        });
        assert_eq!(bandwidth(&a), 2);
        let dense = sym_eigenvalues(&a).unwrap();
        let lo = min_eigenvalue(&a).unwrap();
        let hi = max_eigenvalue(&a).unwrap();
        assert!((lo - dense[0]).abs() < 1e-12, "{lo} {}", dense[0]);
        assert!((hi - dense[n - 1]).abs() < 1e-12);
    }

    #[test]
    fn shifted_inverse() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let inv = spd_shifted_inverse(&a, 1.0).unwrap();
        let id = (&a + DMatrix::identity(2, 2)) * inv;
        assert!((id - DMatrix::identity(2, 2)).amax() < 1e-14);
        assert!(spd_shifted_inverse(&a, -1.5).is_err());
    }
}
