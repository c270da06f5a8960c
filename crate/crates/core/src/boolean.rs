//! Exact Fourier-Walsh analysis of real functions on `{0,1}^J` under the
//! uniform measure, with `u_S(w) = (-1)^{|S & w|}`.
//!
//! Tables are indexed by bit masks: bit `i` of the index is coordinate `i`.

use crate::error::{FppError, Result};

/// Largest supported `|J|` (a table of 2^24 reals).
pub const MAX_COORDINATES: usize = 24;

/// Quadrature target for the integral checks over `p in [0, 1]`.
pub const QUADRATURE_TOLERANCE: f64 = 1e-8;

/// Width below `r = 1` where the Talagrand term switches to its series.
const SERIES_CUTOFF: f64 = 1e-9;

/// Exponent `s(1/2) = 6/5` from the change of variables in the bound.
const TALAGRAND_EXPONENT: f64 = 6.0 / 5.0;

/// In-place unnormalized Walsh-Hadamard butterfly.
fn fwht(values: &mut [f64]) {
    let n = values.len();
    let mut half = 1;
    while half < n {
        for block in (0..n).step_by(2 * half) {
            for i in block..block + half {
                let (x, y) = (values[i], values[i + half]);
                values[i] = x + y;
                values[i + half] = x - y;
            }
        }
        half *= 2;
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BooleanFunctionTable {
    j_count: usize,
    values: Vec<f64>,
}

/// Fourier-Walsh coefficients `f^(S)`, indexed by the mask of `S`.
#[derive(Clone, Debug, PartialEq)]
pub struct WalshSpectrum {
    j_count: usize,
    coefficients: Vec<f64>,
}

fn check_size(j_count: usize) -> Result<()> {
    if j_count > MAX_COORDINATES {
        return Err(FppError::TooLarge(format!(
            "|J| = {j_count} exceeds {MAX_COORDINATES}"
        )));
    }
    Ok(())
}

impl BooleanFunctionTable {
    pub fn new(j_count: usize, values: Vec<f64>) -> Result<Self> {
        check_size(j_count)?;
        if values.len() != 1 << j_count {
            return Err(FppError::InvalidParameter(format!(
                "table for |J| = {j_count} needs {} values, got {}",
                1usize << j_count,
                values.len()
            )));
        }
        Ok(BooleanFunctionTable { j_count, values })
    }

    pub fn from_fn(j_count: usize, f: impl Fn(usize) -> f64) -> Result<Self> {
        check_size(j_count)?;
        Ok(BooleanFunctionTable {
            j_count,
            values: (0..1usize << j_count).map(f).collect(),
        })
    }

    pub fn constant(j_count: usize, c: f64) -> Result<Self> {
        Self::from_fn(j_count, |_| c)
    }

    /// The character `u_S`.
    pub fn character(j_count: usize, s: usize) -> Result<Self> {
        Self::from_fn(j_count, |w| {
            if (s & w).count_ones().is_multiple_of(2) {
                1.0
            } else {
                -1.0
            }
        })
    }

    /// The dictator `w -> w_i`.
    pub fn dictator(j_count: usize, i: usize) -> Result<Self> {
        if i >= j_count {
            return Err(FppError::InvalidParameter(format!(
                "coordinate {i} out of range for |J| = {j_count}"
            )));
        }
        Self::from_fn(j_count, |w| (w >> i & 1) as f64)
    }

    /// Indicator of the single point `point`.
    pub fn indicator(j_count: usize, point: usize) -> Result<Self> {
        Self::from_fn(j_count, |w| if w == point { 1.0 } else { 0.0 })
    }

    pub fn j_count(&self) -> usize {
        self.j_count
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn walsh_transform(&self) -> WalshSpectrum {
        let mut coefficients = self.values.clone();
        fwht(&mut coefficients);
        let scale = 1.0 / coefficients.len() as f64;
        coefficients.iter_mut().for_each(|c| *c *= scale);
        WalshSpectrum {
            j_count: self.j_count,
            coefficients,
        }
    }

    /// `rho_j f(w) = (f(w) - f(sigma_j w)) / 2`.
    pub fn rho(&self, j: usize) -> Result<Self> {
        if j >= self.j_count {
            return Err(FppError::InvalidParameter(format!(
                "coordinate {j} out of range for |J| = {}",
                self.j_count
            )));
        }
        let bit = 1 << j;
        let values = (0..self.values.len())
            .map(|w| (self.values[w] - self.values[w ^ bit]) / 2.0)
            .collect();
        Ok(BooleanFunctionTable {
            j_count: self.j_count,
            values,
        })
    }

    /// `T_p f = sum_S p^{|S|} f^(S) u_S`.
    pub fn noise_operator(&self, p: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&p) {
            return Err(FppError::InvalidParameter(format!(
                "noise parameter {p} outside [-1, 1]"
            )));
        }
        let mut spectrum = self.walsh_transform();
        let powers: Vec<f64> = (0..=self.j_count).map(|k| p.powi(k as i32)).collect();
        for (s, c) in spectrum.coefficients.iter_mut().enumerate() {
            *c *= powers[s.count_ones() as usize];
        }
        Ok(spectrum.to_table())
    }

    /// `(E|f|^p)^{1/p}`; `p = inf` gives the sup norm.
    pub fn p_norm(&self, p: f64) -> Result<f64> {
        if p.is_nan() || p < 1.0 {
            return Err(FppError::InvalidParameter(format!("norm exponent {p} < 1")));
        }
        Ok(lp_norm(&self.values, p))
    }

    /// `E[f^2] - E[f]^2`.
    pub fn variance(&self) -> f64 {
        let n = self.values.len() as f64;
        let mean = self.mean();
        let second = self.values.iter().map(|x| x * x).sum::<f64>() / n;
        (second - mean * mean).max(0.0)
    }

    /// Signed slack `|f|_{1+p^2} - |T_p f|_2` for each `p` of the grid.
    pub fn check_bonami_beckner(&self, p_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
        let spectrum = self.walsh_transform();
        p_grid
            .iter()
            .map(|&p| {
                if !(0.0..=1.0).contains(&p) {
                    return Err(FppError::InvalidParameter(format!(
                        "p = {p} outside [0, 1]"
                    )));
                }
                let smoothed = spectrum.noise_energy(p).sqrt();
                Ok((p, lp_norm(&self.values, 1.0 + p * p) - smoothed))
            })
            .collect()
    }

    /// Per-coordinate terms `|f_j|_2^2 (1 - r_j^{6/5}) / log(1/r_j)` with
    /// `f_j = rho_j f` and `r_j = |f_j|_1 / |f_j|_2`.
    pub fn talagrand_terms(&self) -> Vec<f64> {
        (0..self.j_count)
            .map(|j| {
                let half = self.rho_abs_half(j);
                let l1 = lp_norm(&half, 1.0);
                let l2 = lp_norm(&half, 2.0);
                talagrand_term(l1, l2)
            })
            .collect()
    }

    /// `3 sum_j |f_j|_2^2 (1 - r_j^{6/5}) / log(1/r_j)`, an upper bound on
    /// `var(f)`.
    pub fn talagrand_rhs(&self) -> f64 {
        3.0 * self.talagrand_terms().iter().sum::<f64>()
    }

    /// `|rho_j f|` on the half cube `w_j = 0`; it has the law of `|rho_j f|`
    /// since `rho_j f (sigma_j w) = -rho_j f (w)`.
    fn rho_abs_half(&self, j: usize) -> Vec<f64> {
        let bit = 1 << j;
        (0..self.values.len())
            .filter(|w| w & bit == 0)
            .map(|w| ((self.values[w] - self.values[w ^ bit]) / 2.0).abs())
            .collect()
    }

    /// `int_0^1 |rho_j f|_{1+p^2}^2 dp` by adaptive quadrature.
    pub fn hypercontractive_integral(&self, j: usize) -> Result<f64> {
        self.rho(j)?;
        let half = self.rho_abs_half(j);
        if half.iter().all(|&x| x == 0.0) {
            return Ok(0.0);
        }
        Ok(adaptive_simpson(
            &|p| lp_norm(&half, 1.0 + p * p).powi(2),
            0.0,
            1.0,
            QUADRATURE_TOLERANCE,
        ))
    }

    /// `3 sum_j int_0^1 |rho_j f|_{1+p^2}^2 dp`, which sits between `var(f)`
    /// and [`Self::talagrand_rhs`].
    pub fn hypercontractive_bound(&self) -> f64 {
        3.0 * (0..self.j_count)
            .map(|j| self.hypercontractive_integral(j).expect("j in range"))
            .sum::<f64>()
    }

    /// `int_0^1 |T_p rho_j f|_2^2 dp` by quadrature over the spectrum.
    pub fn noise_energy_integral(&self, j: usize) -> Result<f64> {
        let spectrum = self.rho(j)?.walsh_transform();
        Ok(adaptive_simpson(
            &|p| spectrum.noise_energy(p),
            0.0,
            1.0,
            QUADRATURE_TOLERANCE,
        ))
    }

    /// Slack of `E|f|^{1+p^2} <= E[f^2]^{p^2} E|f|^{1-p^2}`.
    pub fn holder_slack(&self, p: f64) -> f64 {
        let q = 1.0 + p * p;
        let n = self.values.len() as f64;
        let moment = |r: f64| self.values.iter().map(|x| x.abs().powf(r)).sum::<f64>() / n;
        moment(2.0).powf(p * p) * moment(1.0).powf(1.0 - p * p) - moment(q)
    }
}

impl WalshSpectrum {
    pub fn j_count(&self) -> usize {
        self.j_count
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn coefficient(&self, s: usize) -> f64 {
        self.coefficients[s]
    }

    pub fn to_table(&self) -> BooleanFunctionTable {
        let mut values = self.coefficients.clone();
        fwht(&mut values);
        BooleanFunctionTable {
            j_count: self.j_count,
            values,
        }
    }

    /// `sum_S f^(S)^2`, which equals `E[f^2]`.
    pub fn energy(&self) -> f64 {
        self.coefficients.iter().map(|c| c * c).sum()
    }

    /// `sum_{S != {}} f^(S)^2`, which equals `var(f)`.
    pub fn variance(&self) -> f64 {
        self.coefficients[1..].iter().map(|c| c * c).sum()
    }

    /// `|T_p f|_2^2 = sum_S p^{2|S|} f^(S)^2`.
    pub fn noise_energy(&self, p: f64) -> f64 {
        let powers: Vec<f64> = (0..=self.j_count).map(|k| p.powi(2 * k as i32)).collect();
        self.coefficients
            .iter()
            .enumerate()
            .map(|(s, c)| powers[s.count_ones() as usize] * c * c)
            .sum()
    }

    /// `sum_{S : j in S} f^(S)^2 / (2|S| + 1)`, the closed form of
    /// `int_0^1 |T_p rho_j f|_2^2 dp`.
    pub fn noise_energy_integral_closed_form(&self, j: usize) -> f64 {
        self.coefficients
            .iter()
            .enumerate()
            .filter(|(s, _)| s >> j & 1 == 1)
            .map(|(s, c)| c * c / (2.0 * s.count_ones() as f64 + 1.0))
            .sum()
    }
}

fn lp_norm(values: &[f64], p: f64) -> f64 {
    let n = values.len() as f64;
    if p.is_infinite() {
        return values.iter().fold(0.0, |m, x| m.max(x.abs()));
    }
    if p == 1.0 {
        return values.iter().map(|x| x.abs()).sum::<f64>() / n;
    }
    if p == 2.0 {
        return (values.iter().map(|x| x * x).sum::<f64>() / n).sqrt();
    }
    (values.iter().map(|x| x.abs().powf(p)).sum::<f64>() / n).powf(1.0 / p)
}

/// `l2^2 (1 - r^{6/5}) / log(1/r)` with `r = l1 / l2`, continued by its
/// limits at `l2 = 0` and `r = 1`.
pub fn talagrand_term(l1: f64, l2: f64) -> f64 {
    if l2 == 0.0 {
        return 0.0;
    }
    let r = (l1 / l2).min(1.0);
    let c = TALAGRAND_EXPONENT;
    let factor = if r == 1.0 {
        c
    } else if r > 1.0 - SERIES_CUTOFF {
        // (1 - e^{-cL}) / L = c - c^2 L / 2 + c^3 L^2 / 6 - ..., L = log(1/r).
        let l = -r.ln();
        c * (1.0 - c * l / 2.0 + c * c * l * l / 6.0)
    } else {
        let l = -r.ln();
        -(-c * l).exp_m1() / l
    };
    l2 * l2 * factor
}

/// Adaptive Simpson quadrature with absolute tolerance `tol` scaled by the
/// magnitude of the first estimate.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        eps: f64,
        depth: u32,
    ) -> f64 {
        let m = (a + b) / 2.0;
        let (lm, rm) = ((a + m) / 2.0, (m + b) / 2.0);
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * eps {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, eps / 2.0, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, eps / 2.0, depth - 1)
    }
    let (fa, fm, fb) = (f(a), f((a + b) / 2.0), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let eps = tol * whole.abs().max(f64::MIN_POSITIVE);
    recurse(f, a, b, fa, fm, fb, whole, eps, 40)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_table(rng: &mut ChaCha8Rng, j: usize) -> BooleanFunctionTable {
        BooleanFunctionTable::new(
            j,
            (0..1 << j).map(|_| rng.random_range(-1.0..=1.0)).collect(),
        )
        .unwrap()
    }

    fn close(x: f64, y: f64, rel: f64) -> bool {
        (x - y).abs() <= rel * (1.0 + x.abs().max(y.abs()))
    }

    /// O(4^|J|) transform straight from the definition.
    fn naive_transform(t: &BooleanFunctionTable) -> Vec<f64> {
        let n = t.values().len();
        (0..n)
            .map(|s| {
                (0..n)
                    .map(|w| {
                        if (s & w).count_ones().is_multiple_of(2) {
                            t.values()[w]
                        } else {
                            -t.values()[w]
                        }
                    })
                    .sum::<f64>()
                    / n as f64
            })
            .collect()
    }

    #[test]
    fn characters_and_constants() {
        let u = BooleanFunctionTable::character(4, 0b1010).unwrap();
        let spec = u.walsh_transform();
        for s in 0..16 {
            assert_eq!(spec.coefficient(s), if s == 0b1010 { 1.0 } else { 0.0 });
        }
        let one = BooleanFunctionTable::constant(3, 1.0).unwrap();
        assert_eq!(
            one.walsh_transform().coefficients(),
            &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]
        );
        assert_eq!(u.variance(), 1.0);
        assert_eq!(one.variance(), 0.0);
        for p in [1.0, 1.5, 2.0, 7.0, f64::INFINITY] {
            assert_eq!(u.p_norm(p).unwrap(), 1.0);
            assert!(close(
                BooleanFunctionTable::constant(2, -3.0)
                    .unwrap()
                    .p_norm(p)
                    .unwrap(),
                3.0,
                1e-15
            ));
        }
        assert!(u.p_norm(0.5).is_err());
    }

    #[test]
    fn fast_matches_naive_and_inverts() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for j in 0..=6 {
            let t = random_table(&mut rng, j);
            let spec = t.walsh_transform();
            for (x, y) in spec.coefficients().iter().zip(naive_transform(&t)) {
                assert!(close(*x, y, 1e-12));
            }
            let back = spec.to_table();
            for (x, y) in back.values().iter().zip(t.values()) {
                assert!(close(*x, *y, 1e-9));
            }
            let second = t.values().iter().map(|x| x * x).sum::<f64>() / (1 << j) as f64;
            assert!(close(spec.energy(), second, 1e-9));
            assert!(close(spec.variance(), t.variance(), 1e-9));
        }
    }

    #[test]
    fn rho_masks_coefficients() {
        let u = BooleanFunctionTable::character(3, 0b101).unwrap();
        assert_eq!(u.rho(0).unwrap(), u);
        assert_eq!(u.rho(1).unwrap().values(), &[0.0; 8]);
        assert!(u.rho(3).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let t = random_table(&mut rng, 5);
        let spec = t.walsh_transform();
        for j in 0..5 {
            let r = t.rho(j).unwrap();
            assert_eq!(r.rho(j).unwrap(), r);
            let rs = r.walsh_transform();
            for s in 0..32 {
                let expect = if s >> j & 1 == 1 {
                    spec.coefficient(s)
                } else {
                    0.0
                };
                assert!((rs.coefficient(s) - expect).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn noise_operator_semigroup() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = random_table(&mut rng, 6);
        let id = t.noise_operator(1.0).unwrap();
        assert!(id
            .values()
            .iter()
            .zip(t.values())
            .all(|(x, y)| close(*x, *y, 1e-9)));
        let flat = t.noise_operator(0.0).unwrap();
        assert!(flat.values().iter().all(|x| close(*x, t.mean(), 1e-12)));
        let twice = t.noise_operator(0.5).unwrap().noise_operator(0.6).unwrap();
        let once = t.noise_operator(0.3).unwrap();
        assert!(twice
            .values()
            .iter()
            .zip(once.values())
            .all(|(x, y)| close(*x, *y, 1e-9)));
        assert!(t.noise_operator(1.5).is_err());
    }

    #[test]
    fn norms_are_ordered() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for j in 1..8 {
            let t = random_table(&mut rng, j);
            let (l1, l2, linf) = (
                t.p_norm(1.0).unwrap(),
                t.p_norm(2.0).unwrap(),
                t.p_norm(f64::INFINITY).unwrap(),
            );
            assert!(l1 <= l2 + 1e-15 && l2 <= linf + 1e-15);
        }
    }

    #[test]
    fn bonami_beckner_closed_forms() {
        let u = BooleanFunctionTable::character(4, 0b0111).unwrap();
        for (p, slack) in u.check_bonami_beckner(&[0.1, 0.5, 0.9]).unwrap() {
            assert!(close(slack, 1.0 - p.powi(3), 1e-12));
        }
        let c = BooleanFunctionTable::constant(3, 2.5).unwrap();
        for (_, slack) in c.check_bonami_beckner(&[0.0, 0.3, 1.0]).unwrap() {
            assert!(slack.abs() <= 1e-15);
        }
    }

    #[test]
    fn dictator_talagrand() {
        for n in 1..6 {
            let f = BooleanFunctionTable::dictator(n, 0).unwrap();
            assert_eq!(f.variance(), 0.25);
            assert!(close(f.talagrand_rhs(), 0.9, 1e-15));
        }
        assert_eq!(
            BooleanFunctionTable::constant(4, 7.0)
                .unwrap()
                .talagrand_rhs(),
            0.0
        );
    }

    #[test]
    fn talagrand_term_is_continuous_at_one() {
        let exact = talagrand_term(1.0, 1.0);
        assert_eq!(exact, 1.2);
        for gap in [1e-12, 1e-10, 2e-9, 1e-7, 1e-5] {
            let near = talagrand_term(1.0 - gap, 1.0);
            assert!((near - exact).abs() < 1e-4, "gap {gap}: {near}");
            assert!(near <= exact);
        }
        // The term increases with r on (0, 1].
        let samples: Vec<f64> = (1..100)
            .map(|i| talagrand_term(i as f64 / 100.0, 1.0))
            .collect();
        assert!(samples.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn quadrature_matches_closed_forms() {
        let integral = adaptive_simpson(&|x: f64| x.exp(), 0.0, 1.0, 1e-10);
        assert!(close(integral, std::f64::consts::E - 1.0, 1e-10));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = random_table(&mut rng, 5);
        let spec = t.walsh_transform();
        for j in 0..5 {
            let quad = t.noise_energy_integral(j).unwrap();
            let closed = spec.noise_energy_integral_closed_form(j);
            assert!((quad - closed).abs() <= 1e-6 * closed);
        }
    }

    #[test]
    fn inequality_chain_on_random_tables() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..50 {
            let j = rng.random_range(1..=6);
            let t = random_table(&mut rng, j);
            let var = t.variance();
            let mid = t.hypercontractive_bound();
            let rhs = t.talagrand_rhs();
            assert!(
                var <= mid * (1.0 + 1e-6) && mid <= rhs * (1.0 + 1e-6),
                "{var} {mid} {rhs}"
            );
            for p in [0.2, 0.5, 0.8] {
                assert!(t.rho(0).unwrap().holder_slack(p) >= -1e-12);
            }
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(BooleanFunctionTable::new(3, vec![0.0; 7]).is_err());
        assert!(BooleanFunctionTable::constant(25, 0.0).is_err());
        assert!(BooleanFunctionTable::dictator(2, 2).is_err());
    }
}
