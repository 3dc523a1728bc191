//! Coordinate layouts for matrix-valued variables.
//!
//! A real symmetric `n x n` variable uses `n(n+1)/2` coordinates. A complex
//! Hermitian `n x n` variable uses `n^2` real coordinates and is embedded in
//! the real symmetric `2n x 2n` matrix `[[Re X, -Im X], [Im X, Re X]]`.
//! The embedding has every eigenvalue of `X` twice, so its trace is `2 Tr X`;
//! trace functionals built with [`MatrixLayout::trace_coeffs`] act on `X`
//! itself and already carry the compensating factor 1/2.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Scalar field of a matrix variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Field {
    Real,
    Complex,
}

/// Upper-triangle entry `(row, col, value)` of a real symmetric matrix.
pub type SymEntry = (usize, usize, f64);

/// Maps the real coordinates of an `n x n` matrix variable onto its real
/// symmetric embedding.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MatrixLayout {
    n: usize,
    field: Field,
}

impl MatrixLayout {
    pub fn new(n: usize, field: Field) -> Self {
        assert!(n >= 1, "matrix dimension must be positive");
        Self { n, field }
    }

    /// Layout of a complex Hermitian `n x n` matrix.
    pub fn hermitian(n: usize) -> Self {
        Self::new(n, Field::Complex)
    }

    /// Layout of a real symmetric `n x n` matrix.
    pub fn symmetric(n: usize) -> Self {
        Self::new(n, Field::Real)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn field(&self) -> Field {
        self.field
    }

    /// Number of real coordinates.
    pub fn num_coords(&self) -> usize {
        match self.field {
            Field::Real => self.n * (self.n + 1) / 2,
            Field::Complex => self.n * self.n,
        }
    }

    /// Dimension of the real symmetric embedding.
    pub fn embed_dim(&self) -> usize {
        match self.field {
            Field::Real => self.n,
            Field::Complex => 2 * self.n,
        }
    }

    /// Index of the off-diagonal pair `(a, b)`, `a < b`, in row-major order.
    fn pair_index(&self, a: usize, b: usize) -> usize {
        debug_assert!(a < b && b < self.n);
        a * (2 * self.n - a - 1) / 2 + (b - a - 1)
    }

    fn pair_of(&self, p: usize) -> (usize, usize) {
        let mut a = 0;
        let mut start = 0;
        loop {
            let len = self.n - a - 1;
            if p < start + len {
                return (a, a + 1 + (p - start));
            }
            start += len;
            a += 1;
        }
    }

    /// Coordinate of diagonal entry `a`.
    pub fn diag_coord(&self, a: usize) -> usize {
        a
    }

    /// Coordinate of `Re X[a][b]` for `a < b`.
    pub fn re_coord(&self, a: usize, b: usize) -> usize {
        match self.field {
            Field::Real => self.n + self.pair_index(a, b),
            Field::Complex => self.n + 2 * self.pair_index(a, b),
        }
    }

    /// Coordinate of `Im X[a][b]` for `a < b` (complex layouts only).
    pub fn im_coord(&self, a: usize, b: usize) -> usize {
        assert_eq!(self.field, Field::Complex, "real layouts have no imaginary part");
        self.n + 2 * self.pair_index(a, b) + 1
    }

    /// Upper-triangle entries of the embedded basis matrix of coordinate `k`.
    pub fn basis(&self, k: usize) -> Vec<SymEntry> {
        let n = self.n;
        if k < n {
            return match self.field {
                Field::Real => vec![(k, k, 1.0)],
                Field::Complex => vec![(k, k, 1.0), (k + n, k + n, 1.0)],
            };
        }
        match self.field {
            Field::Real => {
                let (a, b) = self.pair_of(k - n);
                vec![(a, b, 1.0)]
            }
            Field::Complex => {
                let (a, b) = self.pair_of((k - n) / 2);
                if (k - n) % 2 == 0 {
                    vec![(a, b, 1.0), (a + n, b + n, 1.0)]
                } else {
                    vec![(b, a + n, 1.0), (a, b + n, -1.0)]
                }
            }
        }
    }

    /// Coordinates of a Hermitian (or real symmetric) matrix.
    pub fn coords_of(&self, x: &DMatrix<Complex64>) -> Vec<f64> {
        assert_eq!(x.nrows(), self.n);
        let mut out = vec![0.0; self.num_coords()];
        for a in 0..self.n {
            out[a] = x[(a, a)].re;
            for b in (a + 1)..self.n {
                out[self.re_coord(a, b)] = x[(a, b)].re;
                if self.field == Field::Complex {
                    out[self.im_coord(a, b)] = x[(a, b)].im;
                }
            }
        }
        out
    }

    /// Matrix with the given coordinates.
    pub fn matrix_of(&self, coords: &[f64]) -> DMatrix<Complex64> {
        assert_eq!(coords.len(), self.num_coords());
        let n = self.n;
        let mut x = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
        for a in 0..n {
            x[(a, a)] = Complex64::new(coords[a], 0.0);
            for b in (a + 1)..n {
                let re = coords[self.re_coord(a, b)];
                let im = match self.field {
                    Field::Real => 0.0,
                    Field::Complex => coords[self.im_coord(a, b)],
                };
                x[(a, b)] = Complex64::new(re, im);
                x[(b, a)] = Complex64::new(re, -im);
            }
        }
        x
    }

    /// Real symmetric embedding of the matrix with the given coordinates.
    pub fn embed(&self, coords: &[f64]) -> DMatrix<f64> {
        let d = self.embed_dim();
        let mut m = DMatrix::zeros(d, d);
        for (k, &v) in coords.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            for (r, c, w) in self.basis(k) {
                m[(r, c)] += v * w;
                if r != c {
                    m[(c, r)] += v * w;
                }
            }
        }
        m
    }

    /// Coefficients of `Tr X` over the coordinates.
    pub fn trace_coeffs(&self) -> Vec<(usize, f64)> {
        (0..self.n).map(|a| (self.diag_coord(a), 1.0)).collect()
    }

    /// Coefficients of `Re(u^H X v)` over the coordinates.
    pub fn bilinear_coeffs(&self, u: &[Complex64], v: &[Complex64]) -> Vec<(usize, f64)> {
        assert_eq!(u.len(), self.n);
        assert_eq!(v.len(), self.n);
        let mut out = Vec::with_capacity(self.num_coords());
        for a in 0..self.n {
            out.push((self.diag_coord(a), (u[a].conj() * v[a]).re));
        }
        for a in 0..self.n {
            for b in (a + 1)..self.n {
                let p = u[a].conj() * v[b];
                let q = u[b].conj() * v[a];
                out.push((self.re_coord(a, b), p.re + q.re));
                if self.field == Field::Complex {
                    out.push((self.im_coord(a, b), q.im - p.im));
                }
            }
        }
        out
    }
}

/// Real symmetric embedding `[[Re X, -Im X], [Im X, Re X]]` of a complex matrix.
pub fn realify(x: &DMatrix<Complex64>) -> DMatrix<f64> {
    let n = x.nrows();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for a in 0..n {
        for b in 0..x.ncols() {
            let z = x[(a, b)];
            m[(a, b)] = z.re;
            m[(a + n, b + n)] = z.re;
            m[(a + n, b)] = z.im;
            m[(a, b + n)] = -z.im;
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sample_hermitian() -> DMatrix<Complex64> {
        DMatrix::from_row_slice(
            3,
            3,
            &[
                c(2.0, 0.0),
                c(0.5, -1.0),
                c(-0.3, 0.2),
                c(0.5, 1.0),
                c(1.0, 0.0),
                c(0.7, 0.4),
                c(-0.3, -0.2),
                c(0.7, -0.4),
                c(3.0, 0.0),
            ],
        )
    }

    #[test]
    fn coordinate_counts() {
        assert_eq!(MatrixLayout::hermitian(4).num_coords(), 16);
        assert_eq!(MatrixLayout::symmetric(4).num_coords(), 10);
        assert_eq!(MatrixLayout::hermitian(4).embed_dim(), 8);
    }

    #[test]
    fn embed_matches_direct_realification() {
        let x = sample_hermitian();
        let layout = MatrixLayout::hermitian(3);
        let coords = layout.coords_of(&x);
        assert_eq!(layout.matrix_of(&coords), x);
        let e = layout.embed(&coords);
        assert_eq!(e, realify(&x));
        assert!((e.trace() - 2.0 * 6.0).abs() < 1e-15);
    }

    #[test]
    fn scalar_embeds_as_doubled_diagonal() {
        let layout = MatrixLayout::hermitian(1);
        let e = layout.embed(&[2.5]);
        assert_eq!(e, DMatrix::from_row_slice(2, 2, &[2.5, 0.0, 0.0, 2.5]));
        assert_eq!(0.5 * e.trace(), 2.5);
    }

    #[test]
    fn bilinear_coeffs_match_direct_evaluation() {
        let x = sample_hermitian();
        let layout = MatrixLayout::hermitian(3);
        let coords = layout.coords_of(&x);
        let u = [c(0.3, -1.2), c(1.1, 0.4), c(-0.6, 0.9)];
        let v = [c(-0.8, 0.1), c(0.2, 0.7), c(1.4, -0.5)];
        let uh = DMatrix::from_row_slice(1, 3, &u.map(|z| z.conj()));
        let vv = DMatrix::from_column_slice(3, 1, &v);
        let direct = (uh * &x * vv)[(0, 0)].re;
        let via: f64 = layout
            .bilinear_coeffs(&u, &v)
            .iter()
            .map(|&(k, a)| a * coords[k])
            .sum();
        assert!((direct - via).abs() < 1e-12, "{direct} vs {via}");
        let tr: f64 = layout.trace_coeffs().iter().map(|&(k, a)| a * coords[k]).sum();
        assert!((tr - 6.0).abs() < 1e-15);
    }

    #[test]
    fn real_layout_round_trip() {
        let layout = MatrixLayout::symmetric(3);
        let coords = vec![1.0, 2.0, 3.0, 0.1, 0.2, 0.3];
        let m = layout.embed(&coords);
        assert_eq!(m[(0, 1)], 0.1);
        assert_eq!(m[(2, 0)], 0.2);
        assert_eq!(m[(1, 2)], 0.3);
        let back = layout.coords_of(&layout.matrix_of(&coords));
        assert_eq!(back, coords);
    }
}
