//! Tridiagonal and bordered-tridiagonal solves.

/// A tridiagonal matrix stored by diagonals. `lower[0]` and `upper[n-1]` are unused.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Zero pivot encountered at `row` during elimination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularPivot {
    pub row: usize,
    pub pivot: f64,
}

/// Pivots smaller than this relative to the row scale are treated as singular.
const PIVOT_TOL: f64 = 1e-13;

impl Tridiagonal {
    pub fn new(lower: Vec<f64>, diag: Vec<f64>, upper: Vec<f64>) -> Self {
        assert_eq!(lower.len(), diag.len());
        assert_eq!(upper.len(), diag.len());
        Self { lower, diag, upper }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut v = self.diag[i] * x[i];
                if i > 0 {
                    v += self.lower[i] * x[i - 1];
                }
                if i + 1 < n {
                    v += self.upper[i] * x[i + 1];
                }
                v
            })
            .collect()
    }

    /// Thomas algorithm without pivoting.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>, SingularPivot> {
        let n = self.len();
        assert_eq!(rhs.len(), n);
        if n == 0 {
            return Ok(Vec::new());
        }
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut denom = self.diag[0];
        check_pivot(denom, self.row_scale(0), 0)?;
        c[0] = self.upper[0] / denom;
        d[0] = rhs[0] / denom;
        for i in 1..n {
            denom = self.diag[i] - self.lower[i] * c[i - 1];
            check_pivot(denom, self.row_scale(i), i)?;
            c[i] = if i + 1 < n { self.upper[i] / denom } else { 0.0 };
            d[i] = (rhs[i] - self.lower[i] * d[i - 1]) / denom;
        }
        for i in (0..n - 1).rev() {
            d[i] -= c[i] * d[i + 1];
        }
        Ok(d)
    }

    fn row_scale(&self, i: usize) -> f64 {
        self.diag[i].abs().max(self.lower[i].abs()).max(self.upper[i].abs()).max(f64::MIN_POSITIVE)
    }
}

fn check_pivot(pivot: f64, scale: f64, row: usize) -> Result<(), SingularPivot> {
    if !pivot.is_finite() || pivot.abs() <= PIVOT_TOL * scale {
        Err(SingularPivot { row, pivot })
    } else {
        Ok(())
    }
}

/// Solves the bordered system
///
/// ```text
/// [ A   b ] [x]   [f]
/// [ c^T d ] [y] = [g]
/// ```
///
/// with `A` tridiagonal, by block elimination: two tridiagonal solves
/// `A v = b`, `A w = f`, then `y = (g - c.w) / (d - c.v)` and `x = w - y v`.
pub fn solve_bordered(
    a: &Tridiagonal,
    b: &[f64],
    c: &[f64],
    d: f64,
    f: &[f64],
    g: f64,
) -> Result<(Vec<f64>, f64), SingularPivot> {
    let n = a.len();
    let v = a.solve(b)?;
    let w = a.solve(f)?;
    let cv: f64 = c.iter().zip(&v).map(|(p, q)| p * q).sum();
    let cw: f64 = c.iter().zip(&w).map(|(p, q)| p * q).sum();
    let schur = d - cv;
    let scale = d.abs().max(cv.abs()).max(f64::MIN_POSITIVE);
    check_pivot(schur, scale, n)?;
    let y = (g - cw) / schur;
    let x = w.iter().zip(&v).map(|(wi, vi)| wi - y * vi).collect();
    Ok((x, y))
}
