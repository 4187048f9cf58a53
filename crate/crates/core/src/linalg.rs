//! Periodic tridiagonal systems, as produced by three-point stencils on closed curves.

/// Factorized cyclic tridiagonal matrix
///
/// Row `i` reads `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = d[i]`
/// with indices taken mod n. Solved by Sherman-Morrison on top of the
/// Thomas algorithm; the matrix should be diagonally dominant.
#[derive(Clone, Debug)]
pub struct CyclicTridiagonal {
    // Thomas factorization of the rank-one-modified matrix.
    lower: Vec<f64>,
    upper_star: Vec<f64>,
    denom: Vec<f64>,
    // Sherman-Morrison correction.
    z: Vec<f64>,
    v_last: f64,
    vz_plus_one: f64,
}

impl CyclicTridiagonal {
    pub fn new(lower: &[f64], diag: &[f64], upper: &[f64]) -> Self {
        let n = diag.len();
        assert!(n >= 3, "cyclic system needs at least 3 unknowns");
        assert_eq!(lower.len(), n);
        assert_eq!(upper.len(), n);

        let gamma = -diag[0];
        let mut d = diag.to_vec();
        d[0] -= gamma;
        d[n - 1] -= upper[n - 1] * lower[0] / gamma;

        let mut upper_star = vec![0.0; n];
        let mut denom = vec![0.0; n];
        denom[0] = d[0];
        upper_star[0] = upper[0] / denom[0];
        for i in 1..n {
            denom[i] = d[i] - lower[i] * upper_star[i - 1];
            upper_star[i] = upper[i] / denom[i];
        }

        let mut this = Self {
            lower: lower.to_vec(),
            upper_star,
            denom,
            z: Vec::new(),
            v_last: lower[0] / gamma,
            vz_plus_one: 0.0,
        };
        let mut u = vec![0.0; n];
        u[0] = gamma;
        u[n - 1] = upper[n - 1];
        let z = this.thomas(&u);
        this.vz_plus_one = 1.0 + z[0] + this.v_last * z[n - 1];
        this.z = z;
        this
    }

    fn thomas(&self, rhs: &[f64]) -> Vec<f64> {
        let n = rhs.len();
        let mut y = vec![0.0; n];
        y[0] = rhs[0] / self.denom[0];
        for i in 1..n {
            y[i] = (rhs[i] - self.lower[i] * y[i - 1]) / self.denom[i];
        }
        for i in (0..n - 1).rev() {
            y[i] -= self.upper_star[i] * y[i + 1];
        }
        y
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = rhs.len();
        assert_eq!(n, self.denom.len());
        let mut y = self.thomas(rhs);
        let factor = (y[0] + self.v_last * y[n - 1]) / self.vz_plus_one;
        for (yi, zi) in y.iter_mut().zip(&self.z) {
            *yi -= factor * zi;
        }
        y
    }
}
