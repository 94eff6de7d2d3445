//! Upper bounds on the success probability via the concavity method.
//!
//! The candidate is `s = (1 - f) / 4` with
//! `f = a^2 + b^2 + c^2 + d^2 - 6(ac + bd) + 8abcd` (the `Brody` variant drops the
//! quartic term). It is a valid upper bound once it is concave on allowed planes
//! and large enough at six simple distributions. The checks here evaluate those
//! conditions on dense rational grids and random rational samples, exactly.

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::position::Position;
use crate::scalar::{rational_string, ratio, Rational, Scalar};

/// Violations kept in a verdict; the count is always exact.
const MAX_WITNESSES: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// With the `8abcd` term.
    Adapted,
    /// Without it.
    Brody,
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "adapted" => Ok(Variant::Adapted),
            "brody" => Ok(Variant::Brody),
            other => Err(format!("unknown variant `{other}` (expected adapted or brody)")),
        }
    }
}

fn lit<S: Scalar>(v: i64) -> S {
    S::from_ratio(v, 1)
}

pub fn f_poly<S: Scalar>(d: &Position<S>, variant: Variant) -> S {
    let [a, b, c, d] = d.abcd();
    let quad = a.clone() * a.clone() + b.clone() * b.clone() + c.clone() * c.clone() + d.clone() * d.clone()
        - lit::<S>(6) * (a.clone() * c.clone() + b.clone() * d.clone());
    match variant {
        Variant::Adapted => quad + lit::<S>(8) * a * b * c * d,
        Variant::Brody => quad,
    }
}

/// `s(D) = (1 - f(D)) / 4` for a distribution (`|D|_1 = 1`).
pub fn s_upper<S: Scalar>(d: &Position<S>, variant: Variant) -> S {
    (S::one() - f_poly(d, variant)) / lit::<S>(4)
}

/// Homogeneous extension `|D|_1 * s(D / |D|_1)`, zero at the origin.
pub fn s_homogeneous<S: Scalar>(d: &Position<S>, variant: Variant) -> S {
    let n = d.norm1();
    if n.is_zero() {
        return S::zero();
    }
    let unit = d.map(|x| x.clone() / n.clone());
    n * s_upper(&unit, variant)
}

/// `min(ub_min(D), |D|_1 * s(D / |D|_1))`, the best available upper bound on a position.
pub fn upper_bound<S: Scalar>(d: &Position<S>, variant: Variant) -> S {
    d.ub_min().min_of(s_homogeneous(d, variant))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub point: String,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub check: String,
    pub passed: bool,
    pub checked: u64,
    pub violations: u64,
    pub witnesses: Vec<Witness>,
}

impl Verdict {
    fn new(check: &str) -> Self {
        Verdict { check: check.to_string(), passed: true, checked: 0, violations: 0, witnesses: Vec::new() }
    }

    fn record(&mut self, ok: bool, witness: impl FnOnce() -> Witness) {
        self.checked += 1;
        if !ok {
            self.passed = false;
            self.violations += 1;
            if self.witnesses.len() < MAX_WITNESSES {
                self.witnesses.push(witness());
            }
        }
    }
}

fn show(d: &Position<Rational>) -> String {
    let parts: Vec<String> = d.coords().map(rational_string).collect();
    format!("({})", parts.join(","))
}

/// The six distributions of the relaxed zero-bit condition with their required
/// lower bounds.
pub fn c2prime_points() -> Vec<(Position<Rational>, Rational)> {
    let (z, h, one) = (ratio(0, 1), ratio(1, 2), ratio(1, 1));
    let mut out = vec![
        (Position::new(h.clone(), z.clone(), h.clone(), z.clone()), h.clone()),
        (Position::new(z.clone(), h.clone(), z.clone(), h.clone()), h),
    ];
    for i in 0..4 {
        let mut abcd = [z.clone(), z.clone(), z.clone(), z.clone()];
        abcd[i] = one.clone();
        out.push((Position::from_abcd(abcd), z.clone()));
    }
    out
}

/// Checks the six-point condition for an arbitrary candidate function.
pub fn check_c2prime_with(s: impl Fn(&Position<Rational>) -> Rational) -> Verdict {
    let mut verdict = Verdict::new("c2prime");
    for (point, bound) in c2prime_points() {
        let value = s(&point);
        verdict.record(value >= bound, || Witness {
            point: show(&point),
            detail: format!("s = {} < {}", rational_string(&value), rational_string(&bound)),
        });
    }
    verdict
}

pub fn check_c2prime(variant: Variant) -> Verdict {
    check_c2prime_with(|d| s_upper(d, variant))
}

/// Random nonnegative integer position with entries up to `max`, not all zero.
fn random_lattice(rng: &mut ChaCha8Rng, max: u32) -> Position<Rational> {
    loop {
        let abcd: [u32; 4] = std::array::from_fn(|_| rng.gen_range(0..=max));
        if abcd.iter().any(|&x| x > 0) {
            return Position::from_abcd(abcd.map(|x| ratio(x as i64, 1)));
        }
    }
}

fn normalized(d: &Position<Rational>) -> Position<Rational> {
    let n = d.norm1();
    d.map(|x| x / &n)
}

/// Every distribution with entries in `{0, 1/k, ..., 1}` for `k <= 4`, which covers
/// the vertices, edge midpoints and the uniform distribution.
fn boundary_points() -> Vec<Position<Rational>> {
    let mut out = Vec::new();
    for k in 1..=4i64 {
        for a in 0..=k {
            for b in 0..=k - a {
                for c in 0..=k - a - b {
                    let d = k - a - b - c;
                    out.push(Position::new(ratio(a, k), ratio(b, k), ratio(c, k), ratio(d, k)));
                }
            }
        }
    }
    out
}

/// `s(D) >= succ_zero(D)` on the boundary cases and on `samples` random rational
/// distributions.
pub fn check_dominates_succ0(samples: u64, seed: u64, variant: Variant) -> Verdict {
    let mut verdict = Verdict::new("dominates_succ0");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let random = (0..samples).map(|_| normalized(&random_lattice(&mut rng, 1000)));
    for d in boundary_points().into_iter().chain(random) {
        let (s, z) = (s_upper(&d, variant), d.succ_zero());
        verdict.record(s >= z, || Witness {
            point: show(&d),
            detail: format!("s = {} < succ_zero = {}", rational_string(&s), rational_string(&z)),
        });
    }
    verdict
}

/// A random `sender`-allowed split of `d`: the sender's two entries are split
/// freely, the other player's entries in proportion `mu`.
fn random_allowed_split(
    rng: &mut ChaCha8Rng,
    d: &Position<Rational>,
    sender: usize,
) -> (Position<Rational>, Position<Rational>) {
    let den = rng.gen_range(1..=64i64);
    let mu = ratio(rng.gen_range(0..=den), den);
    let part = Position::from_players(std::array::from_fn(|player| {
        std::array::from_fn(|bit| {
            let x = d.entry(bit, player);
            if player == sender {
                x * ratio(rng.gen_range(0..=den), den)
            } else {
                x * &mu
            }
        })
    }));
    let rest = d.sub(&part);
    (part, rest)
}

/// Superadditivity of the homogeneous extension on random allowed splits, which
/// is the concavity condition on allowed planes.
pub fn check_c1_sampling(samples: u64, seed: u64, variant: Variant) -> Verdict {
    let mut verdict = Verdict::new("c1_sampling");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let d = normalized(&random_lattice(&mut rng, 100));
        let sender = rng.gen_range(0..2);
        let (d0, d1) = random_allowed_split(&mut rng, &d, sender);
        let whole = s_homogeneous(&d, variant);
        let parts = s_homogeneous(&d0, variant) + s_homogeneous(&d1, variant);
        verdict.record(whole >= parts, || Witness {
            point: format!("{} = {} + {} (sender {})", show(&d), show(&d0), show(&d1), sender + 1),
            detail: format!("{} < {}", rational_string(&whole), rational_string(&parts)),
        });
    }
    verdict
}

/// `ub_min(D0 + D1) >= ub_min(D0) + ub_min(D1)` for arbitrary (not necessarily
/// allowed) integer splits.
pub fn ub_superadditive_check(samples: u64, seed: u64) -> Verdict {
    let mut verdict = Verdict::new("ub_superadditive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let d0 = Position::<u64>::from_abcd(std::array::from_fn(|_| rng.gen_range(0..=1000)));
        let d1 = Position::<u64>::from_abcd(std::array::from_fn(|_| rng.gen_range(0..=1000)));
        let d = d0.add(&d1);
        let (whole, parts) = (d.ub_min(), d0.ub_min() + d1.ub_min());
        verdict.record(whole >= parts, || Witness {
            point: format!("{d} = {d0} + {d1}"),
            detail: format!("{whole} < {parts}"),
        });
    }
    verdict
}

/// `f` restricted to the allowed plane where player 2's entries have ratio `q`:
/// `f(a, b, (1-a-b)/(1+q), q(1-a-b)/(1+q))`.
pub fn f_q<S: Scalar>(a: &S, b: &S, q: &S, variant: Variant) -> S {
    let rest = S::one() - a.clone() - b.clone();
    let c = rest.clone() / (S::one() + q.clone());
    let d = q.clone() * c.clone();
    f_poly(&Position::new(a.clone(), b.clone(), c, d), variant)
}

/// Closed-form Hessian of `f_q` (adapted variant) in `(a, b)`.
pub fn hessian_fq<S: Scalar>(a: &S, b: &S, q: &S) -> [[S; 2]; 2] {
    let (a, b, q) = (a.clone(), b.clone(), q.clone());
    let scale = lit::<S>(4) / ((q.clone() + S::one()) * (q.clone() + S::one()));
    let qq = q.clone() * q.clone();
    let h11 = lit::<S>(2) * b.clone() * b.clone() + (lit::<S>(3) * a.clone() - lit::<S>(2)) * b.clone() + S::one();
    let h11 = scale.clone() * (qq.clone() + lit::<S>(4) * h11 * q.clone() + lit::<S>(4));
    let h12 = lit::<S>(6) * a.clone() * a.clone()
        + lit::<S>(8) * (lit::<S>(2) * b.clone() - S::one()) * a.clone()
        + lit::<S>(6) * b.clone() * b.clone()
        - lit::<S>(8) * b.clone()
        + lit::<S>(5);
    let h12 = scale.clone() * (lit::<S>(2) * qq.clone() + h12 * q.clone() + lit::<S>(2));
    let h22 = lit::<S>(2) * a.clone() * a.clone() + (lit::<S>(3) * b - lit::<S>(2)) * a + S::one();
    let h22 = scale * (lit::<S>(4) * qq + lit::<S>(4) * h22 * q + S::one());
    [[h11, h12.clone()], [h12, h22]]
}

pub fn p2<S: Scalar>(a: &S, b: &S) -> S {
    lit::<S>(2) * a.clone() * a.clone() + lit::<S>(6) * b.clone() - a.clone() * b.clone() - lit::<S>(4) * b.clone() * b.clone()
}

pub fn p3<S: Scalar>(a: &S, b: &S) -> S {
    let (a, b) = (a.clone(), b.clone());
    let (a2, b2) = (a.clone() * a.clone(), b.clone() * b.clone());
    let (a3, b3) = (a2.clone() * a.clone(), b2.clone() * b.clone());
    lit::<S>(12) * (a.clone() + b.clone()) - lit::<S>(23) * (a2.clone() + b2.clone()) - lit::<S>(32) * a.clone() * b.clone()
        + lit::<S>(24) * (a3.clone() * (S::one() - b.clone()) + b3.clone() * (S::one() - a.clone()))
        + lit::<S>(48) * (a.clone() * b2.clone() + a2.clone() * b.clone())
        - lit::<S>(30) * a2.clone() * b2.clone()
        - lit::<S>(9) * (a2.clone() * a2 + b2.clone() * b2)
}

pub fn p4<S: Scalar>(a: &S, b: &S) -> S {
    p2(b, a)
}

/// Cubic lower bound `t(s) = 12s - 23s^2 + 11s^3` with `p3(a, b) >= t(a + b)`.
pub fn t_bound<S: Scalar>(s: &S) -> S {
    let s2 = s.clone() * s.clone();
    lit::<S>(12) * s.clone() - lit::<S>(23) * s2.clone() + lit::<S>(11) * s2 * s.clone()
}

/// `64q / (1+q)^4 * (p2 + p3 q + p4 q^2)`, the factored determinant.
pub fn det_factored<S: Scalar>(a: &S, b: &S, q: &S) -> S {
    let one_q = S::one() + q.clone();
    let sq = one_q.clone() * one_q.clone();
    lit::<S>(64) * q.clone() / (sq.clone() * sq) * (p2(a, b) + p3(a, b) * q.clone() + p4(a, b) * q.clone() * q.clone())
}

fn det2<S: Scalar>(h: &[[S; 2]; 2]) -> S {
    h[0][0].clone() * h[1][1].clone() - h[0][1].clone() * h[1][0].clone()
}

/// Hessian of `f_q` from function values alone: central differences at steps
/// `h` and `2h` combined by Richardson extrapolation. The error terms of both
/// stencils stop at fourth derivatives, so the result is exact for the quartic
/// `f_q` whenever the arithmetic is.
pub fn stencil_hessian<S: Scalar>(a: &S, b: &S, q: &S, h: &S, variant: Variant) -> [[S; 2]; 2] {
    let f = |da: i64, db: i64, step: &S| {
        f_q(&(a.clone() + lit::<S>(da) * step.clone()), &(b.clone() + lit::<S>(db) * step.clone()), q, variant)
    };
    let second = |step: &S, axis_a: bool| {
        let (p, m) = if axis_a { (f(1, 0, step), f(-1, 0, step)) } else { (f(0, 1, step), f(0, -1, step)) };
        (p + m - lit::<S>(2) * f(0, 0, step)) / (step.clone() * step.clone())
    };
    let mixed = |step: &S| {
        (f(1, 1, step) - f(1, -1, step) - f(-1, 1, step) + f(-1, -1, step)) / (lit::<S>(4) * step.clone() * step.clone())
    };
    let h2 = lit::<S>(2) * h.clone();
    let rich = |fine: S, coarse: S| (lit::<S>(4) * fine - coarse) / lit::<S>(3);
    let h11 = rich(second(h, true), second(&h2, true));
    let h22 = rich(second(h, false), second(&h2, false));
    let h12 = rich(mixed(h), mixed(&h2));
    [[h11, h12.clone()], [h12, h22]]
}

/// Largest relative deviation between a plain float finite-difference Hessian
/// and the closed form at `(a, b, q)`.
pub fn finite_difference_residual(a: f64, b: f64, q: f64) -> f64 {
    let h = 1e-4;
    let fd = stencil_hessian(&a, &b, &q, &h, Variant::Adapted);
    let closed = hessian_fq(&a, &b, &q);
    let scale = closed.iter().flatten().fold(1.0f64, |m, v| m.max(v.abs()));
    fd.iter().flatten().zip(closed.iter().flatten()).map(|(x, y)| (x - y).abs() / scale).fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    /// Points per axis; `a = i / (n - 1)`, `b = j / (n - 1)` with `i + j <= n - 1`.
    pub points: u32,
    pub q_values: Vec<Rational>,
}

impl GridSpec {
    /// `q` in `{0} ∪ {2^e : |e| <= levels}`; `2` is part of the set for `levels >= 1`.
    pub fn log_spaced(points: u32, levels: u32) -> Self {
        let mut q_values = vec![Rational::zero()];
        for e in -(levels as i32)..=levels as i32 {
            let p = Rational::from_integer(num_bigint::BigInt::from(2u32).pow(e.unsigned_abs()));
            q_values.push(if e < 0 { p.recip() } else { p });
        }
        if !q_values.contains(&ratio(2, 1)) {
            q_values.push(ratio(2, 1));
        }
        GridSpec { points, q_values }
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::log_spaced(201, 10)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Minimum {
    pub value: String,
    pub decimal: f64,
    pub at: String,
}

#[derive(Clone, Debug, Default)]
struct Tracker(Option<(Rational, String)>);

impl Tracker {
    fn offer(&mut self, value: &Rational, at: impl FnOnce() -> String) {
        if self.0.as_ref().is_none_or(|(best, _)| value < best) {
            self.0 = Some((value.clone(), at()));
        }
    }

    fn report(&self) -> Option<Minimum> {
        self.0.as_ref().map(|(v, at)| Minimum {
            value: rational_string(v),
            decimal: Scalar::approx(v),
            at: at.clone(),
        })
    }

    fn nonnegative(&self) -> bool {
        self.0.as_ref().is_none_or(|(v, _)| !v.is_negative())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QMinimum {
    pub q: String,
    pub h11: Option<Minimum>,
    pub det: Option<Minimum>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HessianReport {
    pub grid_points: u32,
    pub q_values: Vec<String>,
    pub samples: u64,
    pub min_h11: Option<Minimum>,
    pub min_det: Option<Minimum>,
    pub per_q: Vec<QMinimum>,
    pub min_p2: Option<Minimum>,
    pub min_p3: Option<Minimum>,
    pub min_p4: Option<Minimum>,
    /// `min (p3(a, b) - t(a + b))`, nonnegative when the cubic bound holds.
    pub min_p3_minus_t: Option<Minimum>,
    /// Grid points with `a + b` in `{0, 1}` where `t(a + b)` was evaluated; it is zero at all of them.
    pub tight_t_points: u64,
    pub t_zero_at_ends: bool,
    /// Grid points where the closed-form determinant and the factorization differ.
    pub factorization_mismatches: u64,
    /// Grid points where `H11(a, b, q) != H22(b, a, 1/q)`.
    pub symmetry_mismatches: u64,
    /// Sample points where the exact stencil Hessian differs from the closed form.
    pub stencil_mismatches: u64,
    pub stencil_points: u64,
    /// Largest relative error of float finite differences against the closed form.
    pub finite_difference_max_residual: f64,
    pub passed: bool,
    pub note: String,
}

/// Minors over one `q` slice of the grid, with the grid indices of the minima.
#[derive(Debug, Default, PartialEq)]
struct Sweep {
    h11: Option<(Rational, (usize, usize))>,
    det: Option<(Rational, (usize, usize))>,
    samples: u64,
    factorization_mismatches: u64,
    symmetry_mismatches: u64,
}

fn keep_min(slot: &mut Option<(Rational, (usize, usize))>, value: Rational, at: (usize, usize)) {
    if slot.as_ref().is_none_or(|(best, _)| value < *best) {
        *slot = Some((value, at));
    }
}

/// Reference sweep in rational arithmetic.
fn sweep_exact(coords: &[Rational], q: &Rational) -> Sweep {
    let mut out = Sweep::default();
    let inverse = (!q.is_zero()).then(|| q.recip());
    for i in 0..coords.len() {
        for j in 0..coords.len() - i {
            let (a, b) = (&coords[i], &coords[j]);
            let h = hessian_fq(a, b, q);
            let det = det2(&h);
            out.samples += 1;
            if det != det_factored(a, b, q) {
                out.factorization_mismatches += 1;
            }
            if let Some(inv) = &inverse {
                if h[0][0] != hessian_fq(b, a, inv)[1][1] {
                    out.symmetry_mismatches += 1;
                }
            }
            keep_min(&mut out.h11, h[0][0].clone(), (i, j));
            keep_min(&mut out.det, det, (i, j));
        }
    }
    out
}

/// The same sweep with every quantity multiplied through by its (positive)
/// denominator, in `i128`. With `a = i/n`, `b = j/n`, `q = u/v` the Hessian is
/// `4 / ((u+v)^2 n^2)` times an integer matrix, so signs, comparisons within the
/// slice and both identity checks are exact. Returns `None` when the integers
/// could overflow.
fn sweep_scaled(n: i64, q: &Rational) -> Option<Sweep> {
    use num_traits::ToPrimitive;
    let (u, v) = (q.numer().to_i128()?, q.denom().to_i128()?);
    if n > 4096 || u > 1 << 16 || v > 1 << 16 || u < 0 {
        return None;
    }
    let n = n as i128;
    let (n2, uv) = (n * n, u * v);
    let entries = |i: i128, j: i128, u: i128, v: i128| {
        let (uv, uu, vv) = (u * v, u * u, v * v);
        let a11 = uu * n2 + 4 * uv * (2 * j * j + (3 * i - 2 * n) * j + n2) + 4 * vv * n2;
        let a12 = 2 * uu * n2 + uv * (6 * i * i + 8 * (2 * j - n) * i + 6 * j * j - 8 * n * j + 5 * n2) + 2 * vv * n2;
        let a22 = 4 * uu * n2 + 4 * uv * (2 * i * i + (3 * j - 2 * n) * i + n2) + vv * n2;
        (a11, a12, a22)
    };
    let mut out = Sweep::default();
    let mut h11_min: Option<(i128, (usize, usize))> = None;
    let mut det_min: Option<(i128, (usize, usize))> = None;
    for i in 0..=n {
        for j in 0..=n - i {
            let (a11, a12, a22) = entries(i, j, u, v);
            let det = a11 * a22 - a12 * a12;
            let p2 = n2 * (2 * i * i + 6 * j * n - i * j - 4 * j * j);
            let p4 = n2 * (6 * i * n - 4 * i * i - i * j + 2 * j * j);
            let p3 = 12 * (i + j) * n2 * n - 23 * (i * i + j * j) * n2 - 32 * i * j * n2
                + 24 * (i * i * i * (n - j) + j * j * j * (n - i))
                + 48 * (i * j * j + i * i * j) * n
                - 30 * i * i * j * j
                - 9 * (i * i * i * i + j * j * j * j);
            out.samples += 1;
            if det != 4 * uv * (v * v * p2 + uv * p3 + u * u * p4) {
                out.factorization_mismatches += 1;
            }
            if u != 0 && a11 != entries(j, i, v, u).2 {
                out.symmetry_mismatches += 1;
            }
            let at = (i as usize, j as usize);
            if h11_min.is_none_or(|(m, _)| a11 < m) {
                h11_min = Some((a11, at));
            }
            if det_min.is_none_or(|(m, _)| det < m) {
                det_min = Some((det, at));
            }
        }
    }
    let big = |x: i128| Rational::from_integer(x.into());
    let s = (u + v) * (u + v) * n2;
    out.h11 = h11_min.map(|(m, at)| (big(4 * m) / big(s), at));
    out.det = det_min.map(|(m, at)| (big(16 * m) / (big(s) * big(s)), at));
    Some(out)
}

/// Evaluates the principal minors of the closed-form Hessian on the grid in
/// exact arithmetic, together with the determinant factorization, the
/// nonnegativity of `p2, p3, p4`, and two independent checks of the closed form.
pub fn check_psd(grid: &GridSpec) -> HessianReport {
    let n = grid.points.max(2) as i64 - 1;
    let coords: Vec<Rational> = (0..=n).map(|i| ratio(i, n)).collect();
    let at = |i: usize, j: usize| format!("a={}, b={}", rational_string(&coords[i]), rational_string(&coords[j]));

    let (mut p2_min, mut p3_min, mut p4_min, mut gap_min) = Default::default();
    let mut tight_t_points = 0u64;
    let mut t_zero_at_ends = true;
    for i in 0..coords.len() {
        for j in 0..coords.len() - i {
            let (a, b) = (&coords[i], &coords[j]);
            Tracker::offer(&mut p2_min, &p2(a, b), || at(i, j));
            let v3 = p3(a, b);
            Tracker::offer(&mut p3_min, &v3, || at(i, j));
            Tracker::offer(&mut p4_min, &p4(a, b), || at(i, j));
            let s = a + b;
            let t = t_bound(&s);
            Tracker::offer(&mut gap_min, &(v3 - &t), || at(i, j));
            if s.is_zero() || s.is_one() {
                tight_t_points += 1;
                t_zero_at_ends &= t.is_zero();
            }
        }
    }

    let mut min_h11 = Tracker::default();
    let mut min_det = Tracker::default();
    let mut per_q = Vec::new();
    let (mut samples, mut factorization_mismatches, mut symmetry_mismatches) = (0u64, 0u64, 0u64);
    for q in &grid.q_values {
        let sweep = sweep_scaled(n, q).unwrap_or_else(|| sweep_exact(&coords, q));
        samples += sweep.samples;
        factorization_mismatches += sweep.factorization_mismatches;
        symmetry_mismatches += sweep.symmetry_mismatches;
        let label = |(i, j): (usize, usize)| format!("{}, q={}", at(i, j), rational_string(q));
        let q_h11 = Tracker(sweep.h11.map(|(v, ij)| (v, label(ij))));
        let q_det = Tracker(sweep.det.map(|(v, ij)| (v, label(ij))));
        if let Some((v, w)) = &q_h11.0 {
            min_h11.offer(v, || w.clone());
        }
        if let Some((v, w)) = &q_det.0 {
            min_det.offer(v, || w.clone());
        }
        per_q.push(QMinimum { q: rational_string(q), h11: q_h11.report(), det: q_det.report() });
    }

    // the closed form against f_q itself, on a coarse interior subgrid
    let (mut stencil_mismatches, mut stencil_points) = (0u64, 0u64);
    let mut finite_difference_max_residual = 0.0f64;
    let step = ratio(1, 1000);
    for q in &grid.q_values {
        for i in (1..n).step_by(((n / 8).max(1)) as usize) {
            for j in (1..n - i).step_by(((n / 8).max(1)) as usize) {
                let (a, b) = (&coords[i as usize], &coords[j as usize]);
                stencil_points += 1;
                if stencil_hessian(a, b, q, &step, Variant::Adapted) != hessian_fq(a, b, q) {
                    stencil_mismatches += 1;
                }
                let r = finite_difference_residual(a.approx(), b.approx(), q.approx());
                finite_difference_max_residual = finite_difference_max_residual.max(r);
            }
        }
    }

    let passed = min_h11.nonnegative()
        && min_det.nonnegative()
        && p2_min.nonnegative()
        && p3_min.nonnegative()
        && p4_min.nonnegative()
        && gap_min.nonnegative()
        && t_zero_at_ends
        && factorization_mismatches == 0
        && symmetry_mismatches == 0
        && stencil_mismatches == 0;
    HessianReport {
        grid_points: grid.points,
        q_values: grid.q_values.iter().map(rational_string).collect(),
        samples,
        min_h11: min_h11.report(),
        min_det: min_det.report(),
        per_q,
        min_p2: p2_min.report(),
        min_p3: p3_min.report(),
        min_p4: p4_min.report(),
        min_p3_minus_t: gap_min.report(),
        tight_t_points,
        t_zero_at_ends,
        factorization_mismatches,
        symmetry_mismatches,
        stencil_mismatches,
        stencil_points,
        finite_difference_max_residual,
        passed,
        note: "a positive semidefinite Hessian makes f_q convex on S, hence s = (1 - f)/4 concave on allowed planes; \
               convexity of f_q (not concavity) is what the upper bound needs"
            .to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(v: [(i64, i64); 4]) -> Position<Rational> {
        Position::from_abcd(v.map(|(n, d)| ratio(n, d)))
    }

    #[test]
    fn upper_bound_at_landmarks() {
        let uniform = dist([(1, 4); 4]);
        assert_eq!(s_upper(&uniform, Variant::Adapted), ratio(47, 128));
        assert_eq!(s_upper(&dist([(1, 1), (0, 1), (0, 1), (0, 1)]), Variant::Adapted), ratio(0, 1));
        assert_eq!(s_upper(&dist([(1, 2), (0, 1), (1, 2), (0, 1)]), Variant::Adapted), ratio(1, 2));
        assert_eq!(s_upper(&uniform, Variant::Brody), ratio(3, 8));
    }

    #[test]
    fn variants_differ_by_the_quartic_term() {
        let d = dist([(1, 10), (2, 10), (3, 10), (4, 10)]);
        let diff = s_upper(&d, Variant::Brody) - s_upper(&d, Variant::Adapted);
        assert_eq!(diff, ratio(2, 1) * ratio(24, 10000));
    }

    #[test]
    fn homogeneous_extension_scales() {
        let d = dist([(3, 1), (3, 1), (3, 1), (3, 1)]);
        assert_eq!(s_homogeneous(&d, Variant::Adapted), ratio(12 * 47, 128));
        assert_eq!(s_homogeneous(&Position::<Rational>::zero(), Variant::Adapted), ratio(0, 1));
    }

    #[test]
    fn six_point_condition() {
        assert!(check_c2prime(Variant::Adapted).passed);
        assert!(check_c2prime(Variant::Brody).passed);
        // s lowered by 1/4 (f replaced by f + 1) fails at the vertices
        let bad = check_c2prime_with(|d| s_upper(d, Variant::Adapted) - ratio(1, 4));
        assert!(!bad.passed);
        assert!(bad.witnesses.iter().any(|w| w.point == "(1,0,0,0)"));
    }

    #[test]
    fn hessian_closed_form_at_origin() {
        let z = ratio(0, 1);
        let h = hessian_fq(&z, &z, &z);
        assert_eq!(h[0][0], ratio(16, 1));
        assert_eq!(h[1][1], ratio(4, 1));
    }

    #[test]
    fn stencil_hessian_is_exact_on_rationals() {
        for (a, b, q) in [(ratio(1, 3), ratio(1, 5), ratio(2, 1)), (ratio(0, 1), ratio(1, 2), ratio(1, 7))] {
            assert_eq!(stencil_hessian(&a, &b, &q, &ratio(1, 100), Variant::Adapted), hessian_fq(&a, &b, &q));
        }
    }

    #[test]
    fn float_finite_differences_match() {
        assert!(finite_difference_residual(0.2, 0.3, 0.5) < 1e-5);
        assert!(finite_difference_residual(0.05, 0.9, 8.0) < 1e-5);
    }

    #[test]
    fn p3_bound_is_tight_at_the_ends() {
        let (z, one) = (ratio(0, 1), ratio(1, 1));
        assert_eq!(t_bound(&z), z);
        assert_eq!(t_bound(&one), z);
        assert_eq!(p3(&z, &z), z);
        assert_eq!(p3(&one, &z), ratio(4, 1));
    }

    #[test]
    fn scaled_sweep_matches_rational_sweep() {
        let n = 12i64;
        let coords: Vec<Rational> = (0..=n).map(|i| ratio(i, n)).collect();
        for q in [ratio(0, 1), ratio(1, 4), ratio(2, 1), ratio(7, 3), ratio(1024, 1)] {
            assert_eq!(sweep_scaled(n, &q).unwrap(), sweep_exact(&coords, &q), "q = {q}");
        }
        assert!(sweep_scaled(n, &ratio(1 << 20, 1)).is_none());
    }

    #[test]
    fn small_grid_passes() {
        let report = check_psd(&GridSpec::log_spaced(11, 2));
        assert!(report.passed, "{report:?}");
        assert_eq!(report.factorization_mismatches, 0);
        assert_eq!(report.min_p3.as_ref().unwrap().value, "0");
    }

    #[test]
    fn sampled_conditions_hold() {
        assert!(check_dominates_succ0(500, 1, Variant::Adapted).passed);
        assert!(check_c1_sampling(500, 2, Variant::Adapted).passed);
        assert!(check_c1_sampling(500, 3, Variant::Brody).passed);
        assert!(ub_superadditive_check(500, 4).passed);
    }
}
