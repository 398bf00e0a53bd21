//! Closed-form test functions in two and three dimensions.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Profile `φ(r)` of a radial function `v(x) = φ(|x|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile {
    /// `φ = -r²`.
    NegSquare,
    /// `φ = 1 - r`.
    Cone,
    /// `φ = 1 - r^β`, `0 < β`.
    Power(f64),
    /// `φ = exp(-r²)`.
    Gaussian,
}

impl Profile {
    /// `(φ, φ', φ'', φ''')` at `r > 0`.
    fn eval(self, r: f64) -> [f64; 4] {
        match self {
            Profile::NegSquare => [-r * r, -2.0 * r, -2.0, 0.0],
            Profile::Cone => [1.0 - r, -1.0, 0.0, 0.0],
            Profile::Power(b) => [
                1.0 - r.powf(b),
                -b * r.powf(b - 1.0),
                -b * (b - 1.0) * r.powf(b - 2.0),
                -b * (b - 1.0) * (b - 2.0) * r.powf(b - 3.0),
            ],
            Profile::Gaussian => {
                let e = (-r * r).exp();
                [e, -2.0 * r * e, (4.0 * r * r - 2.0) * e, (12.0 * r - 8.0 * r * r * r) * e]
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Kind {
    Radial(Profile),
    /// `½ xᵀ A x + b·x`.
    Quadratic { a: DMatrix<f64>, b: DVector<f64> },
}

/// A function with closed-form derivatives up to third order.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticFunction {
    pub name: String,
    pub n: usize,
    pub kind: Kind,
}

impl AnalyticFunction {
    pub fn radial(name: &str, n: usize, profile: Profile) -> Result<Self> {
        check_dim(n)?;
        Ok(Self {
            name: name.to_string(),
            n,
            kind: Kind::Radial(profile),
        })
    }

    pub fn quadratic(name: &str, a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        let n = b.len();
        check_dim(n)?;
        if a.nrows() != n || a.ncols() != n || (&a - a.transpose()).amax() > 1e-14 {
            return Err(Error::Config("quadratic form must be a symmetric n×n matrix".into()));
        }
        Ok(Self {
            name: name.to_string(),
            n,
            kind: Kind::Quadratic { a, b },
        })
    }

    /// `v = -|x|²`.
    pub fn neg_square(n: usize) -> Result<Self> {
        Self::radial("neg_square", n, Profile::NegSquare)
    }

    /// `v = xy` (planar, not quasi-concave).
    pub fn saddle_xy() -> Self {
        Self::quadratic(
            "xy",
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]),
            DVector::zeros(2),
        )
        .expect("valid saddle")
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        match &self.kind {
            Kind::Radial(p) => p.eval(x.norm())[0],
            Kind::Quadratic { a, b } => 0.5 * x.dot(&(a * x)) + b.dot(x),
        }
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        match &self.kind {
            Kind::Radial(p) => {
                let r = x.norm();
                x * (p.eval(r)[1] / r)
            }
            Kind::Quadratic { a, b } => a * x + b,
        }
    }

    pub fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        match &self.kind {
            Kind::Radial(p) => {
                let r = x.norm();
                let [_, d1, d2, _] = p.eval(r);
                let e = x / r;
                let bb = d1 / r;
                DMatrix::identity(self.n, self.n) * bb + &e * e.transpose() * (d2 - bb)
            }
            Kind::Quadratic { a, .. } => a.clone(),
        }
    }

    /// Third derivatives: entry `k` is `∂_k D²v`.
    pub fn third(&self, x: &DVector<f64>) -> Vec<DMatrix<f64>> {
        let n = self.n;
        match &self.kind {
            Kind::Radial(p) => {
                let r = x.norm();
                let [_, d1, d2, d3] = p.eval(r);
                let e = x / r;
                let q = (d2 - d1 / r) / r;
                (0..n)
                    .map(|k| {
                        DMatrix::from_fn(n, n, |i, j| {
                            let dij = (i == j) as u8 as f64;
                            let dik = (i == k) as u8 as f64;
                            let djk = (j == k) as u8 as f64;
                            (d3 - 3.0 * q) * e[i] * e[j] * e[k] + q * (dij * e[k] + dik * e[j] + djk * e[i])
                        })
                    })
                    .collect()
            }
            Kind::Quadratic { .. } => vec![DMatrix::zeros(n, n); n],
        }
    }

    /// Largest relative disagreement of the closed-form gradient, Hessian and
    /// third derivatives with centered differences, over `count` seeded
    /// points with `|x| ∈ (0.2, 1)`.
    pub fn self_test(&self, count: usize, seed: u64) -> f64 {
        let mut worst: f64 = 0.0;
        let step = 1e-5;
        for x in sample_shell(self.n, count, 0.2, 1.0, seed) {
            let g = self.gradient(&x);
            let h = self.hessian(&x);
            let t = self.third(&x);
            for k in 0..self.n {
                let mut e = DVector::zeros(self.n);
                e[k] = step;
                let (xp, xm) = (&x + &e, &x - &e);
                let fd_g = (self.value(&xp) - self.value(&xm)) / (2.0 * step);
                worst = worst.max(rel(fd_g, g[k], g.amax()));
                let fd_h = (self.gradient(&xp) - self.gradient(&xm)) / (2.0 * step);
                for i in 0..self.n {
                    worst = worst.max(rel(fd_h[i], h[(i, k)], h.amax()));
                }
                let fd_t = (self.hessian(&xp) - self.hessian(&xm)) / (2.0 * step);
                for i in 0..self.n {
                    for j in 0..self.n {
                        worst = worst.max(rel(fd_t[(i, j)], t[k][(i, j)], t[k].amax().max(1.0)));
                    }
                }
            }
        }
        worst
    }
}

fn rel(approx: f64, exact: f64, scale: f64) -> f64 {
    (approx - exact).abs() / scale.max(1e-300)
}

fn check_dim(n: usize) -> Result<()> {
    if n == 2 || n == 3 {
        Ok(())
    } else {
        Err(Error::Config(format!("dimension must be 2 or 3, got {n}")))
    }
}

/// Seeded points with uniform direction and `|x|` uniform in `(r0, r1)`.
pub fn sample_shell(n: usize, count: usize, r0: f64, r1: f64, seed: u64) -> Vec<DVector<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| loop {
            let d = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            let len = d.norm();
            if len > 1e-3 && len <= 1.0 {
                break d / len * rng.gen_range(r0..r1);
            }
        })
        .collect()
}

/// Both sides of `2[|D²v Dv|² - Δv Δ_∞v] >= |Dv|²[|D²v|² - (Δv)²]`,
/// with `Δ_∞v = D²v Dv·Dv`.
pub fn structural_sides(g: &DVector<f64>, h: &DMatrix<f64>) -> (f64, f64) {
    let hg = h * g;
    let lap = h.trace();
    let inf_lap = hg.dot(g);
    let lhs = 2.0 * (hg.norm_squared() - lap * inf_lap);
    let rhs = g.norm_squared() * (h.norm_squared() - lap * lap);
    (lhs, rhs)
}

/// `div(|Dv|⁻² (Δv Dv - D²v Dv))` from closed-form derivatives up to third order.
pub fn flux_divergence(g: &DVector<f64>, h: &DMatrix<f64>, t: &[DMatrix<f64>]) -> f64 {
    let n = g.len();
    let s = g.norm_squared();
    let lap = h.trace();
    let hg = h * g;
    let flux = g * lap - &hg;
    // ∂_i (Δv g_i - H_ij g_j) = ∂_iΔv g_i + (Δv)² - ∂_i H_ij g_j - |H|²
    let grad_lap = DVector::from_fn(n, |i, _| (0..n).map(|j| t[i][(j, j)]).sum::<f64>());
    let div_h_g: f64 = (0..n).map(|j| (0..n).map(|i| t[i][(i, j)]).sum::<f64>() * g[j]).sum();
    let div_flux = grad_lap.dot(g) + lap * lap - div_h_g - h.norm_squared();
    div_flux / s - flux.dot(&(hg * 2.0)) / (s * s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(v: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(v)
    }

    #[test]
    fn neg_square_sides_by_hand() {
        for (n, lhs, rhs) in [(2, -8.0, -8.0), (3, -16.0, -24.0)] {
            let f = AnalyticFunction::neg_square(n).unwrap();
            let mut x = DVector::zeros(n);
            x[0] = 0.5;
            let (l, r) = structural_sides(&f.gradient(&x), &f.hessian(&x));
            assert!((l - lhs).abs() < 1e-12, "n={n}: {l}");
            assert!((r - rhs).abs() < 1e-12, "n={n}: {r}");
        }
    }

    #[test]
    fn closed_forms_match_finite_differences() {
        let subjects = [
            AnalyticFunction::neg_square(2).unwrap(),
            AnalyticFunction::neg_square(3).unwrap(),
            AnalyticFunction::radial("cone", 3, Profile::Cone).unwrap(),
            AnalyticFunction::radial("power", 2, Profile::Power(2.0 / 3.0)).unwrap(),
            AnalyticFunction::radial("gauss", 3, Profile::Gaussian).unwrap(),
            AnalyticFunction::saddle_xy(),
        ];
        for f in &subjects {
            let err = f.self_test(100, 11);
            assert!(err < 1e-6, "{}: {err}", f.name);
        }
    }

    #[test]
    fn divergence_vanishes_in_the_plane_and_is_positive_in_space() {
        let f2 = AnalyticFunction::neg_square(2).unwrap();
        let f3 = AnalyticFunction::neg_square(3).unwrap();
        let x2 = at(&[0.3, -0.4]);
        let x3 = at(&[0.3, -0.4, 0.2]);
        let d2 = flux_divergence(&f2.gradient(&x2), &f2.hessian(&x2), &f2.third(&x2));
        assert!(d2.abs() < 1e-12);
        // For radial v in space the divergence is (n-1)(n-2)/r².
        let d3 = flux_divergence(&f3.gradient(&x3), &f3.hessian(&x3), &f3.third(&x3));
        assert!((d3 - 2.0 / x3.norm_squared()).abs() < 1e-10, "{d3}");
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(AnalyticFunction::neg_square(4).is_err());
        assert!(AnalyticFunction::quadratic("q", DMatrix::identity(2, 3), DVector::zeros(2)).is_err());
    }
}
