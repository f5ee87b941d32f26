//! Slope limiter functions, conventional and grid-aware.
//!
//! Every enhanced limiter `phi_{A,B}` is parameterized by two local grid ratios
//! (see [`crate::mesh::cell_params`]) that must satisfy `0 < B < min(2, 2A)`.
//! All enhanced families pass through `(A, B)`, stay inside the TVD box
//! `0 <= phi <= 2 min(1, theta)` and return `0` for `theta <= 0`.
//! Non-finite monitors (flat data) also evaluate to `0`.
//!
//! The van Leer and van Albada enhancements carry an integer exponent `k`
//! chosen per cell as the smallest value that keeps the limiter inside the box.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::real::Real;

/// Upper bound on the exponent search. Only reached for (A, B) pairs within
/// round-off of the admissibility boundary.
const MAX_K: u32 = 100_000;

/// Smallest exponent used by the enhanced van Albada limiter. With `k = 1` the
/// formula collapses to van Leer's shape at `A = B = 1`; `k = 2` recovers the
/// uniform-grid van Albada limiter, and larger `k` only tightens the box bound.
pub const VANALBADA_MIN_K: u32 = 2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LimiterError {
    #[error("inadmissible limiter parameters: need 0 < B < min(2, 2A), got A={a}, B={b}")]
    Inadmissible { a: f64, b: f64 },
    #[error("exponent k={k} violates the {family} bound for A={a}, B={b}")]
    ExponentTooSmall { family: LimiterFamily, k: u32, a: f64, b: f64 },
    #[error("no exponent k <= {MAX_K} satisfies the {family} bound for A={a}, B={b}")]
    ExponentSearchFailed { family: LimiterFamily, a: f64, b: f64 },
    #[error("unknown limiter `{0}` (expected minmod|superbee|mc|van_leer|van_albada|berger1|berger2|none)")]
    UnknownFamily(String),
    #[error("unknown limiter flavor `{0}` (expected conventional|enhanced)")]
    UnknownFlavor(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LimiterFamily {
    /// `phi = 0`: first-order Godunov.
    None,
    Minmod,
    Superbee,
    Mc,
    VanLeer,
    VanAlbada,
    Berger1,
    Berger2,
}

impl LimiterFamily {
    pub const ALL: [LimiterFamily; 8] = [
        LimiterFamily::None,
        LimiterFamily::Minmod,
        LimiterFamily::Superbee,
        LimiterFamily::Mc,
        LimiterFamily::VanLeer,
        LimiterFamily::VanAlbada,
        LimiterFamily::Berger1,
        LimiterFamily::Berger2,
    ];

    /// Families with a grid-aware form (everything except `None`).
    pub const ENHANCEABLE: [LimiterFamily; 7] = [
        LimiterFamily::Minmod,
        LimiterFamily::Superbee,
        LimiterFamily::Mc,
        LimiterFamily::VanLeer,
        LimiterFamily::VanAlbada,
        LimiterFamily::Berger1,
        LimiterFamily::Berger2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LimiterFamily::None => "none",
            LimiterFamily::Minmod => "minmod",
            LimiterFamily::Superbee => "superbee",
            LimiterFamily::Mc => "mc",
            LimiterFamily::VanLeer => "van_leer",
            LimiterFamily::VanAlbada => "van_albada",
            LimiterFamily::Berger1 => "berger1",
            LimiterFamily::Berger2 => "berger2",
        }
    }
}

impl fmt::Display for LimiterFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LimiterFamily {
    type Err = LimiterError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LimiterFamily::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| LimiterError::UnknownFamily(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Flavor {
    Conventional,
    #[default]
    Enhanced,
}

impl Flavor {
    pub fn name(self) -> &'static str {
        match self {
            Flavor::Conventional => "conventional",
            Flavor::Enhanced => "enhanced",
        }
    }
}

impl fmt::Display for Flavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Flavor {
    type Err = LimiterError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "conventional" => Ok(Flavor::Conventional),
            "enhanced" => Ok(Flavor::Enhanced),
            other => Err(LimiterError::UnknownFlavor(other.to_string())),
        }
    }
}

/// A limiter family together with its flavor, written `family:flavor`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LimiterKind {
    pub family: LimiterFamily,
    pub flavor: Flavor,
}

impl LimiterKind {
    pub fn new(family: LimiterFamily, flavor: Flavor) -> Self {
        Self { family, flavor }
    }

    pub fn enhanced(family: LimiterFamily) -> Self {
        Self::new(family, Flavor::Enhanced)
    }

    pub fn conventional(family: LimiterFamily) -> Self {
        Self::new(family, Flavor::Conventional)
    }

    /// Parameters for a cell with grid ratios `(a, b)`; conventional kinds ignore the grid.
    pub fn params<T: Real>(&self, a: T, b: T) -> Result<LimiterParams<T>, LimiterError> {
        match (self.family, self.flavor) {
            (LimiterFamily::None, _) | (_, Flavor::Conventional) => Ok(LimiterParams::conventional()),
            (family, Flavor::Enhanced) => LimiterParams::new(family, a, b),
        }
    }

    #[inline]
    pub fn eval<T: Real>(&self, params: &LimiterParams<T>, theta: T) -> T {
        eval_limiter(*self, params, theta)
    }
}

impl fmt::Display for LimiterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.family, self.flavor)
    }
}

impl FromStr for LimiterKind {
    type Err = LimiterError;

    /// Accepts `family` (enhanced by default) or `family:flavor`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (family, flavor) = match s.split_once(':') {
            Some((fam, fl)) => (fam.trim().parse()?, fl.trim().parse()?),
            None => (s.trim().parse()?, Flavor::default()),
        };
        Ok(Self { family, flavor })
    }
}

/// Anything that can act as a per-cell slope limiter.
///
/// `params` runs once per cell with its grid ratios, `phi` once per monitor value.
pub trait CellLimiter<T: Real> {
    fn params(&self, a: T, b: T) -> Result<LimiterParams<T>, LimiterError>;
    fn phi(&self, params: &LimiterParams<T>, theta: T) -> T;
}

impl<T: Real> CellLimiter<T> for LimiterKind {
    fn params(&self, a: T, b: T) -> Result<LimiterParams<T>, LimiterError> {
        LimiterKind::params(self, a, b)
    }

    #[inline]
    fn phi(&self, params: &LimiterParams<T>, theta: T) -> T {
        eval_limiter(*self, params, theta)
    }
}

/// Grid-blind limiter given by a plain function of `theta`.
#[derive(Debug, Clone, Copy)]
pub struct FnLimiter<F>(pub F);

impl<T: Real, F: Fn(T) -> T> CellLimiter<T> for FnLimiter<F> {
    fn params(&self, _a: T, _b: T) -> Result<LimiterParams<T>, LimiterError> {
        Ok(LimiterParams::conventional())
    }

    #[inline]
    fn phi(&self, _params: &LimiterParams<T>, theta: T) -> T {
        (self.0)(theta)
    }
}

/// `0 < B < min(2, 2A)`.
pub fn is_admissible<T: Real>(a: T, b: T) -> bool {
    a.is_finite() && b.is_finite() && b > T::zero() && b < T::two().min(T::two() * a)
}

/// Local limiter parameters `(A, B, k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimiterParams<T> {
    a: T,
    b: T,
    k: u32,
}

impl<T: Real> LimiterParams<T> {
    /// `A = B = 1`, `k = 1`: the uniform-grid limiter.
    pub fn conventional() -> Self {
        Self {
            a: T::one(),
            b: T::one(),
            k: 1,
        }
    }

    /// Validates `(a, b)` and picks the smallest admissible exponent for the family.
    pub fn new(family: LimiterFamily, a: T, b: T) -> Result<Self, LimiterError> {
        let k = match family {
            LimiterFamily::VanLeer => select_k_vanleer(a, b)?,
            LimiterFamily::VanAlbada => select_k_vanalbada(a, b)?.max(VANALBADA_MIN_K),
            _ => {
                check_admissible(a, b)?;
                1
            }
        };
        Ok(Self { a, b, k })
    }

    /// Uses a caller-chosen exponent, rejecting one that breaks the family's bound.
    pub fn with_k(family: LimiterFamily, a: T, b: T, k: u32) -> Result<Self, LimiterError> {
        check_admissible(a, b)?;
        let ok = match family {
            LimiterFamily::VanLeer => k >= 1 && b <= T::two() * vanleer_ratio(a, k),
            LimiterFamily::VanAlbada => k >= 1 && b <= vanalbada_bound(a, k),
            _ => true,
        };
        if !ok {
            return Err(LimiterError::ExponentTooSmall {
                family,
                k,
                a: a.to_f64_lossy(),
                b: b.to_f64_lossy(),
            });
        }
        Ok(Self { a, b, k })
    }

    pub fn a(&self) -> T {
        self.a
    }

    pub fn b(&self) -> T {
        self.b
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// Parameters of the conjugate class, `(1/A, B/A)`, with `k` re-selected.
    pub fn conjugate(&self, family: LimiterFamily) -> Result<Self, LimiterError> {
        Self::new(family, self.a.recip(), self.b / self.a)
    }
}

fn check_admissible<T: Real>(a: T, b: T) -> Result<(), LimiterError> {
    if is_admissible(a, b) {
        Ok(())
    } else {
        Err(LimiterError::Inadmissible {
            a: a.to_f64_lossy(),
            b: b.to_f64_lossy(),
        })
    }
}

/// `s / (s + 1)` with `s = x + x^2 + ... + x^k`, evaluated without overflow.
#[inline]
fn vanleer_ratio<T: Real>(x: T, k: u32) -> T {
    let mut s = T::zero();
    for _ in 0..k {
        s = x * (T::one() + s);
    }
    (T::one() + s.recip()).recip()
}

/// `2 min(1, A) k / (k + 1)`.
#[inline]
fn vanalbada_bound<T: Real>(a: T, k: u32) -> T {
    let kt = T::from_u32(k).unwrap();
    T::two() * a.min(T::one()) * kt / (kt + T::one())
}

/// Smallest `k >= 1` with `B <= 2 (A^k + ... + A) / (A^k + ... + A + 1)`.
pub fn select_k_vanleer<T: Real>(a: T, b: T) -> Result<u32, LimiterError> {
    check_admissible(a, b)?;
    let mut s = T::zero();
    for k in 1..=MAX_K {
        s = a * (T::one() + s);
        let ratio = (T::one() + s.recip()).recip();
        if b <= T::two() * ratio {
            return Ok(k);
        }
    }
    Err(LimiterError::ExponentSearchFailed {
        family: LimiterFamily::VanLeer,
        a: a.to_f64_lossy(),
        b: b.to_f64_lossy(),
    })
}

/// Smallest `k >= 1` with `B <= 2 (1 + 1/k)^{-1} min(1, A)`.
pub fn select_k_vanalbada<T: Real>(a: T, b: T) -> Result<u32, LimiterError> {
    check_admissible(a, b)?;
    let m = a.min(T::one());
    // closed-form estimate of k >= B / (2m - B), then confirm with the exact test
    let guess = (b / (T::two() * m - b)).ceil().to_f64_lossy();
    let start = if guess.is_finite() && guess > 2.0 {
        (guess as u64).saturating_sub(2).min(MAX_K as u64) as u32
    } else {
        1
    };
    let start = start.max(1);
    for k in start..=MAX_K {
        if b <= vanalbada_bound(a, k) {
            return Ok(k);
        }
    }
    Err(LimiterError::ExponentSearchFailed {
        family: LimiterFamily::VanAlbada,
        a: a.to_f64_lossy(),
        b: b.to_f64_lossy(),
    })
}

/// Evaluates `phi(theta)` for the given kind. Conventional kinds ignore `params`.
#[inline]
pub fn eval_limiter<T: Real>(kind: LimiterKind, params: &LimiterParams<T>, theta: T) -> T {
    match kind.flavor {
        Flavor::Conventional => conventional_limiter(kind.family, theta),
        Flavor::Enhanced => enhanced_limiter(kind.family, params, theta),
    }
}

/// Uniform-grid limiters. Berger forms reduce to van Leer at `A = B = 1`.
pub fn conventional_limiter<T: Real>(family: LimiterFamily, theta: T) -> T {
    if !theta.is_finite() || theta <= T::zero() {
        return T::zero();
    }
    let one = T::one();
    let two = T::two();
    match family {
        LimiterFamily::None => T::zero(),
        LimiterFamily::Minmod => theta.min(one).max(T::zero()),
        LimiterFamily::Superbee => (two * theta).min(one).max(theta.min(two)).max(T::zero()),
        LimiterFamily::Mc => (two * theta).min(T::half() * (one + theta)).min(two).max(T::zero()),
        LimiterFamily::VanLeer | LimiterFamily::Berger1 | LimiterFamily::Berger2 => {
            (theta + theta.abs()) / (one + theta.abs())
        }
        LimiterFamily::VanAlbada => (theta + theta * theta) / (one + theta * theta),
    }
}

/// Grid-aware limiters `phi_{A,B}(theta)`.
pub fn enhanced_limiter<T: Real>(family: LimiterFamily, params: &LimiterParams<T>, theta: T) -> T {
    if !theta.is_finite() || theta <= T::zero() {
        return T::zero();
    }
    let LimiterParams { a, b, k } = *params;
    let one = T::one();
    let two = T::two();
    match family {
        LimiterFamily::None => T::zero(),
        LimiterFamily::Minmod => (b / a * theta.min(a)).max(T::zero()),
        LimiterFamily::Superbee => (two * theta).min(b).max((b * theta / a).min(two)).max(T::zero()),
        LimiterFamily::Mc => (two * theta)
            .min(b / (a + one) * (theta + one))
            .min(two)
            .max(T::zero()),
        LimiterFamily::VanLeer => b * (vanleer_ratio(theta, k) / vanleer_ratio(a, k)),
        LimiterFamily::VanAlbada => {
            let tk = theta.powi(k as i32);
            if tk.is_finite() {
                b * ((tk + theta) / (tk + a))
            } else {
                b
            }
        }
        LimiterFamily::Berger1 => {
            if theta <= a {
                let x = (theta * (a + one)) / ((theta + one) * a);
                let p = b / (two * a - b);
                berger1_branch(theta, b / (two * a), x, p)
            } else {
                let y = (a + one) / (theta + one);
                let q = b / (two - b);
                berger1_branch(one, b / two, y, q)
            }
        }
        LimiterFamily::Berger2 => {
            let scale = b * ((theta + one) / (a + one));
            // the bases are 1 - x with x = theta (A+1) / ((theta+1) A), resp.
            // 1 - (A+1)/(theta+1); ln_1p/exp_m1 keep accuracy when x is small
            let (x, e) = if theta <= a {
                (((theta * (a + one)) / ((theta + one) * a)).min(one), two * a / b)
            } else {
                ((a + one) / (theta + one), two / b)
            };
            scale * -(e * (-x).ln_1p()).exp_m1()
        }
    }
}

/// `2 s [1 - (1 - c) x^p]`, written as `2 s [(1 - x^p) + c x^p]` so that small `c`
/// keeps full relative accuracy at `x = 1`.
#[inline]
fn berger1_branch<T: Real>(s: T, c: T, x: T, p: T) -> T {
    let lx = x.ln();
    let one_minus = -(p * lx).exp_m1();
    T::two() * s * (one_minus + c * (T::one() - one_minus))
}

/// Generalized Sweby region at `theta`: edges `phi = 2`, `2 theta`, `B` and `B theta / A`.
pub fn sweby_bounds<T: Real>(a: T, b: T, theta: T) -> (T, T) {
    if !theta.is_finite() || theta <= T::zero() {
        return (T::zero(), T::zero());
    }
    let slanted = b * theta / a;
    let lower = b.min(slanted);
    let upper = T::two().min(T::two() * theta).min(b.max(slanted));
    (lower, upper)
}

/// One row of a Sweby diagram table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwebyRow<T> {
    pub theta: T,
    pub phi: T,
    pub lower: T,
    pub upper: T,
}

/// Samples `phi` and the admissible region at each `theta`.
pub fn sweby_table<T: Real>(
    kind: LimiterKind,
    a: T,
    b: T,
    thetas: impl IntoIterator<Item = T>,
) -> Result<Vec<SwebyRow<T>>, LimiterError> {
    let params = kind.params(a, b)?;
    let (a, b) = match kind.flavor {
        Flavor::Enhanced => (a, b),
        Flavor::Conventional => (T::one(), T::one()),
    };
    Ok(thetas
        .into_iter()
        .map(|theta| {
            let (lower, upper) = sweby_bounds(a, b, theta);
            SwebyRow {
                theta,
                phi: kind.eval(&params, theta),
                lower,
                upper,
            }
        })
        .collect())
}

/// Whether a conventional van Leer limiter fed an alternative monitor
/// `alpha * theta^p` and scaled by `beta * theta^q` could meet both the order
/// condition and the TVD box at `(A, B)`. Holds iff `2A / B >= 1 + A`.
pub fn alt_monitor_feasible<T: Real>(a: T, b: T) -> bool {
    T::two() * a / b >= T::one() + a
}

/// Alternative-monitor construction `beta theta^q phi_vanleer(alpha theta^p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AltMonitorCase<T> {
    pub alpha: T,
    pub beta: T,
    pub p: i32,
    pub q: i32,
}

impl<T: Real> AltMonitorCase<T> {
    pub fn new(alpha: T, beta: T, p: i32, q: i32) -> Option<Self> {
        let valid = alpha > T::zero() && beta > T::zero() && (p == 1 || p == -1) && (q == 0 || q == 1);
        valid.then_some(Self { alpha, beta, p, q })
    }

    /// Equivalent slope limiter for the standard monitor `theta`.
    pub fn phi(&self, theta: T) -> T {
        if !theta.is_finite() || theta <= T::zero() {
            return T::zero();
        }
        let monitor = self.alpha * theta.powi(self.p);
        self.beta * theta.powi(self.q) * conventional_limiter(LimiterFamily::VanLeer, monitor)
    }

    /// Writes `phi` as `theta^t / (a + b theta)`, returning `(t, a, b)`.
    pub fn rational_form(&self) -> (i32, T, T) {
        let two = T::two();
        if self.p == 1 {
            (1 + self.q, (two * self.alpha * self.beta).recip(), (two * self.beta).recip())
        } else {
            (self.q, (two * self.beta).recip(), (two * self.alpha * self.beta).recip())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(a: f64, b: f64, k: u32) -> LimiterParams<f64> {
        LimiterParams { a, b, k }
    }

    #[test]
    fn conventional_minmod_examples() {
        let kind = LimiterKind::conventional(LimiterFamily::Minmod);
        let c = LimiterParams::conventional();
        assert_eq!(kind.eval(&c, 0.5), 0.5);
        assert_eq!(kind.eval(&c, 2.0), 1.0);
        assert_eq!(kind.eval(&c, -1.0), 0.0);
    }

    #[test]
    fn enhanced_families_pass_through_order_point() {
        for family in LimiterFamily::ENHANCEABLE {
            let params = LimiterParams::new(family, 1.3, 1.1).unwrap();
            let phi: f64 = enhanced_limiter(family, &params, 1.3);
            assert!((phi - 1.1).abs() < 1e-14, "{family}: {phi}");
        }
    }

    #[test]
    fn vanleer_reduces_to_conventional() {
        let params = LimiterParams::new(LimiterFamily::VanLeer, 1.0, 1.0).unwrap();
        assert_eq!(params.k(), 1);
        let phi: f64 = enhanced_limiter(LimiterFamily::VanLeer, &params, 3.0);
        assert!((phi - 1.5).abs() < 1e-15);
    }

    #[test]
    fn vanalbada_example() {
        let params = LimiterParams::<f64>::new(LimiterFamily::VanAlbada, 1.0, 4.0 / 3.0).unwrap();
        assert_eq!(params.k(), 2);
        let phi = enhanced_limiter(LimiterFamily::VanAlbada, &params, 1.0);
        assert!((phi - 4.0 / 3.0).abs() < 1e-15);
        // hand evaluation at theta = 2: (4/3)(4 + 2)/(4 + 1) = 1.6
        let phi = enhanced_limiter(LimiterFamily::VanAlbada, &params, 2.0);
        assert!((phi - 1.6).abs() < 1e-15);
    }

    #[test]
    fn k_selection_examples() {
        assert_eq!(select_k_vanleer(1.0, 1.0).unwrap(), 1);
        assert_eq!(select_k_vanleer(1.0, 4.0 / 3.0).unwrap(), 2);
        let k = select_k_vanleer(0.5, 0.9).unwrap();
        // brute force: smallest k with 0.9 <= 2 s/(s+1), s = sum_{j=1..k} 0.5^j
        let brute = (1..100u32)
            .find(|&k| {
                let s: f64 = (1..=k).map(|j| 0.5f64.powi(j as i32)).sum();
                0.9 <= 2.0 * s / (s + 1.0)
            })
            .unwrap();
        assert_eq!(k, brute);
        assert_eq!(k, 3);

        assert_eq!(select_k_vanalbada(1.0, 1.0).unwrap(), 1);
        assert_eq!(select_k_vanalbada(1.0, 4.0 / 3.0).unwrap(), 2);
        assert_eq!(select_k_vanalbada(2.0, 1.5).unwrap(), 3);
    }

    #[test]
    fn k_selection_is_minimal() {
        for &(a, b) in &[(0.3, 0.55), (0.9, 1.7), (1.7, 1.95), (1.0, 1.99), (0.2, 0.39)] {
            let k = select_k_vanalbada(a, b).unwrap();
            assert!(b <= vanalbada_bound(a, k));
            if k > 1 {
                assert!(b > vanalbada_bound(a, k - 1));
            }
            let k = select_k_vanleer(a, b).unwrap();
            assert!(b <= 2.0 * vanleer_ratio(a, k));
            if k > 1 {
                assert!(b > 2.0 * vanleer_ratio(a, k - 1));
            }
        }
    }

    #[test]
    fn inadmissible_parameters_rejected() {
        assert!(LimiterParams::new(LimiterFamily::Mc, 1.0, 2.0).is_err());
        assert!(LimiterParams::new(LimiterFamily::Mc, 0.5, 1.0).is_err());
        assert!(LimiterParams::new(LimiterFamily::Mc, 1.0, 0.0).is_err());
        assert!(LimiterParams::new(LimiterFamily::VanLeer, f64::NAN, 1.0).is_err());
        assert!(matches!(
            LimiterParams::with_k(LimiterFamily::VanAlbada, 1.0, 4.0 / 3.0, 1),
            Err(LimiterError::ExponentTooSmall { k: 1, .. })
        ));
        assert!(LimiterParams::with_k(LimiterFamily::VanAlbada, 1.0, 4.0 / 3.0, 2).is_ok());
    }

    #[test]
    fn conjugate_examples() {
        let c = LimiterParams::new(LimiterFamily::Mc, 1.0, 1.0).unwrap().conjugate(LimiterFamily::Mc).unwrap();
        assert_eq!((c.a(), c.b()), (1.0, 1.0));
        let c = LimiterParams::new(LimiterFamily::Minmod, 0.5, 0.8)
            .unwrap()
            .conjugate(LimiterFamily::Minmod)
            .unwrap();
        assert_eq!((c.a(), c.b()), (2.0, 1.6));
        let base = LimiterParams::new(LimiterFamily::VanLeer, 1.5, 1.2).unwrap();
        let back = base
            .conjugate(LimiterFamily::VanLeer)
            .unwrap()
            .conjugate(LimiterFamily::VanLeer)
            .unwrap();
        assert_eq!((back.a(), back.b(), back.k()), (1.5, 1.2, base.k()));
    }

    #[test]
    fn sweby_examples() {
        assert_eq!(sweby_bounds(1.0, 1.0, 1.0), (1.0, 1.0));
        assert_eq!(sweby_bounds(1.0, 1.0, 0.5), (0.5, 1.0));
        let (lo, hi) = sweby_bounds(1.0, 4.0 / 3.0, 1.0);
        assert!(lo <= 4.0 / 3.0 && 4.0 / 3.0 <= hi);
        assert_eq!(sweby_bounds(1.0, 1.0, -2.0), (0.0, 0.0));
    }

    #[test]
    fn alt_monitor_examples() {
        assert!(alt_monitor_feasible(1.0, 1.0));
        assert!(!alt_monitor_feasible(1.0, 1.2));
        assert!(alt_monitor_feasible(0.5, 0.5));
    }

    #[test]
    fn alt_monitor_rational_form_matches_phi() {
        for &(p_exp, q_exp) in &[(1, 0), (1, 1), (-1, 0), (-1, 1)] {
            let case = AltMonitorCase::<f64>::new(0.7, 1.3, p_exp, q_exp).unwrap();
            let (t, a, b) = case.rational_form();
            for &theta in &[0.1f64, 0.5, 1.0, 2.0, 9.0] {
                let direct = case.phi(theta);
                let rational = theta.powi(t) / (a + b * theta);
                assert!((direct - rational).abs() < 1e-13 * direct.abs().max(1.0));
            }
        }
        assert!(AltMonitorCase::new(1.0, 1.0, 0, 0).is_none());
        assert!(AltMonitorCase::new(-1.0, 1.0, 1, 0).is_none());
    }

    #[test]
    fn flat_and_nonfinite_monitors_give_zero() {
        for family in LimiterFamily::ALL {
            let params = LimiterParams::new(family, 1.2, 1.1).unwrap_or(LimiterParams::conventional());
            for theta in [f64::NAN, f64::INFINITY, f64::NEG_INFINITY, 0.0, -3.0] {
                assert_eq!(enhanced_limiter(family, &params, theta), 0.0);
                assert_eq!(conventional_limiter(family, theta), 0.0);
            }
        }
    }

    #[test]
    fn large_monitor_does_not_overflow() {
        let params = p(1.0, 1.9, select_k_vanalbada(1.0, 1.9).unwrap());
        let phi = enhanced_limiter(LimiterFamily::VanAlbada, &params, 1e300);
        assert!(phi.is_finite() && phi <= 2.0);
        let params = p(1.0, 1.9, select_k_vanleer(1.0, 1.9).unwrap());
        let phi = enhanced_limiter(LimiterFamily::VanLeer, &params, 1e300);
        assert!(phi.is_finite() && phi <= 2.0);
    }

    #[test]
    fn kind_parsing() {
        let k: LimiterKind = "van_albada:conventional".parse().unwrap();
        assert_eq!(k, LimiterKind::conventional(LimiterFamily::VanAlbada));
        let k: LimiterKind = "mc".parse().unwrap();
        assert_eq!(k, LimiterKind::enhanced(LimiterFamily::Mc));
        assert_eq!(k.to_string(), "mc:enhanced");
        assert!("koren".parse::<LimiterKind>().is_err());
        assert!("mc:fancy".parse::<LimiterKind>().is_err());
    }

    #[test]
    fn sweby_table_rows() {
        let rows = sweby_table(LimiterKind::enhanced(LimiterFamily::Minmod), 1.2f64, 1.0, [0.5, 1.2, 3.0]).unwrap();
        assert_eq!(rows.len(), 3);
        for r in rows {
            assert!((r.phi - r.lower).abs() < 1e-15);
        }
    }

    #[test]
    fn single_precision_limiters() {
        let params = LimiterParams::<f32>::new(LimiterFamily::VanAlbada, 1.25, 1.1).unwrap();
        let phi = enhanced_limiter(LimiterFamily::VanAlbada, &params, 1.25f32);
        assert!((phi - 1.1).abs() < 1e-6);
    }
}
