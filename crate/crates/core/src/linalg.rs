//! Small numerical helpers on top of nalgebra: ranks, kernels, polynomial
//! roots and root-multiset matching.

use nalgebra::{Complex, DMatrix, DVector};

/// Singular values in decreasing order.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Numerical rank: singular values below `rel · σ_max` count as zero.
pub fn rank(m: &DMatrix<f64>, rel: f64) -> (usize, Vec<f64>) {
    let sv = singular_values(m);
    let max = sv.first().copied().unwrap_or(0.0);
    let r = sv.iter().filter(|s| **s > rel * max).count();
    (r, sv)
}

/// Right singular vector of the smallest singular value.
pub fn null_vector(m: &DMatrix<f64>) -> DVector<f64> {
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let (idx, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty matrix");
    v_t.row(idx).transpose()
}

/// Solve a square system, `None` if singular.
pub fn solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    a.clone().lu().solve(b)
}

/// Coefficients of the polynomial of degree `< xs.len()` through the points,
/// lowest degree first. Least squares when more points than unknowns.
pub fn interpolate(xs: &[f64], ys: &[f64], degree: usize) -> Vec<f64> {
    let v = DMatrix::from_fn(xs.len(), degree + 1, |i, j| xs[i].powi(j as i32));
    let y = DVector::from_column_slice(ys);
    let svd = v.svd(true, true);
    let c = svd.solve(&y, 1e-14).expect("vandermonde solve");
    c.iter().copied().collect()
}

/// A root of a polynomial, possibly at infinity (degree drop).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Root {
    Finite(Complex<f64>),
    Infinite,
}

/// Roots of `Σ c_k x^k` viewed as a binary form of degree `c.len() - 1`:
/// when leading coefficients vanish (relative to `tol · max|c|`) the
/// missing roots are reported at infinity.
pub fn poly_roots(c: &[f64], tol: f64) -> Vec<Root> {
    let n = c.len() - 1;
    let scale = c.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return vec![];
    }
    let mut deg = n;
    while deg > 0 && c[deg].abs() <= tol * scale {
        deg -= 1;
    }
    let mut out = vec![Root::Infinite; n - deg];
    if deg == 0 {
        return out;
    }
    // companion matrix of the monic polynomial
    let lead = c[deg];
    let mut comp = DMatrix::<f64>::zeros(deg, deg);
    for i in 1..deg {
        comp[(i, i - 1)] = 1.0;
    }
    for i in 0..deg {
        comp[(i, deg - 1)] = -c[i] / lead;
    }
    for z in comp.complex_eigenvalues().iter() {
        out.push(Root::Finite(*z));
    }
    out
}

fn root_distance(a: &Root, b: &Root) -> f64 {
    match (a, b) {
        (Root::Infinite, Root::Infinite) => 0.0,
        (Root::Finite(x), Root::Finite(y)) => {
            // chordal distance on the Riemann sphere, so that large finite
            // roots are close to infinity
            let d = (x - y).norm();
            d / ((1.0 + x.norm_sqr()).sqrt() * (1.0 + y.norm_sqr()).sqrt())
        }
        (Root::Finite(x), Root::Infinite) | (Root::Infinite, Root::Finite(x)) => {
            1.0 / (1.0 + x.norm_sqr()).sqrt()
        }
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Largest pairwise chordal distance under the best matching of two root
/// multisets (exhaustive over permutations; there are at most four roots).
/// Returns infinity when the multisets differ in size.
pub fn match_roots(a: &[Root], b: &[Root]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    permutations(a.len())
        .into_iter()
        .map(|p| {
            p.iter()
                .enumerate()
                .map(|(i, &j)| root_distance(&a[i], &b[j]))
                .fold(0.0, f64::max)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Real symmetric eigen-decomposition with eigenvalues ascending.
pub fn sym_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let e = m.clone().symmetric_eigen();
    let mut idx: Vec<usize> = (0..m.nrows()).collect();
    idx.sort_by(|&a, &b| e.eigenvalues[a].total_cmp(&e.eigenvalues[b]));
    let vals = idx.iter().map(|&i| e.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(m.nrows(), m.nrows(), |r, c| e.eigenvectors[(r, idx[c])]);
    (vals, vecs)
}
