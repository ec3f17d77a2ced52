//! Real-root counting.
//!
//! The fast path isolates roots on `[-1, 1]` for the polynomial and for its
//! reversal (covering `|x| >= 1`) by bisection, discarding or accepting a
//! subinterval once a Taylor majorant proves it root-free or monotone. Clustered
//! or multiple roots defeat those tests; such polynomials go through the
//! eigenvalues of the balanced companion matrix instead.

use nalgebra::{DMatrix, Schur};

use crate::error::{Error, Result};

/// Coefficients below this fraction of the largest one are treated as zero at
/// either end of the coefficient vector.
const DEFLATION_REL: f64 = 1e-12;
/// Eigenvalues with `|Im| <= IMAG_REL * (1 + |lambda|)` are real candidates.
const IMAG_REL: f64 = 1e-8;
/// Polished candidates must have a relative residual below this.
const RESIDUAL_REL: f64 = 1e-8;
/// Roots closer than `MERGE_REL * (1 + |root|)` are one root.
const MERGE_REL: f64 = 1e-10;
const NEWTON_STEPS: usize = 4;
/// Subdivision limits for the isolation path before falling back to eigenvalues.
const ISOLATE_MAX_DEPTH: u32 = 48;
const ISOLATE_BUDGET_PER_DEGREE: usize = 64;

/// `(p(y), p'(y), sum |c_i| |y|^i)` by Horner's rule, lowest coefficient first.
fn horner(coeffs: &[f64], y: f64) -> (f64, f64, f64) {
    let (mut p, mut dp, mut mag) = (0.0, 0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * y + p;
        p = p * y + c;
        mag = mag * y.abs() + c.abs();
    }
    (p, dp, mag)
}

/// A polynomial viewed in `y = x` while powers of `x` stay far from overflow and
/// in `y = 1/x` (reversed coefficients) beyond that.
struct Evaluator<'a> {
    forward: &'a [f64],
    reversed: Vec<f64>,
}

impl<'a> Evaluator<'a> {
    fn new(coeffs: &'a [f64]) -> Self {
        Evaluator { forward: coeffs, reversed: coeffs.iter().rev().copied().collect() }
    }

    fn forward_ok(&self, x: f64) -> bool {
        x.abs() <= 1.0 || (self.forward.len() - 1) as f64 * x.abs().ln() < 600.0
    }

    fn relative_residual(&self, x: f64) -> f64 {
        let (p, _, mag) = if self.forward_ok(x) { horner(self.forward, x) } else { horner(&self.reversed, 1.0 / x) };
        if mag == 0.0 {
            0.0
        } else {
            p.abs() / mag
        }
    }

    /// Newton steps in whichever coordinate is bounded; a step is kept only if it
    /// lowers the residual.
    fn polish(&self, mut x: f64) -> (f64, f64) {
        let mut best = self.relative_residual(x);
        for _ in 0..NEWTON_STEPS {
            if best == 0.0 {
                break;
            }
            let next = if self.forward_ok(x) {
                let (p, dp, _) = horner(self.forward, x);
                x - p / dp
            } else {
                let y = 1.0 / x;
                let (q, dq, _) = horner(&self.reversed, y);
                1.0 / (y - q / dq)
            };
            if !next.is_finite() {
                break;
            }
            let r = self.relative_residual(next);
            if r < best {
                x = next;
                best = r;
            } else {
                break;
            }
        }
        (x, best)
    }
}

/// `sum |c_i| r^i` and `sum i |c_i| r^(i-1)`.
fn majorants(coeffs: &[f64], r: f64) -> (f64, f64) {
    let (mut m0, mut m1) = (0.0, 0.0);
    for &c in coeffs.iter().rev() {
        m1 = m1 * r + m0;
        m0 = m0 * r + c.abs();
    }
    (m0, m1)
}

struct Isolator<'a> {
    coeffs: &'a [f64],
    /// Rounding allowance relative to a majorant.
    slack: f64,
    budget: usize,
}

impl Isolator<'_> {
    /// Sign-change bisection inside a subinterval known to hold exactly one root.
    fn locate(&self, mut l: f64, sl: bool, mut r: f64) -> f64 {
        for _ in 0..128 {
            let m = 0.5 * (l + r);
            if m <= l || m >= r {
                break;
            }
            let p = horner(self.coeffs, m).0;
            if p == 0.0 {
                return m;
            }
            if (p >= 0.0) == sl {
                l = m;
            } else {
                r = m;
            }
        }
        0.5 * (l + r)
    }

    /// Roots in `[lo, hi] ⊂ [-1, 1]` given the endpoint signs (`true` for `>= 0`).
    fn run(&mut self, lo: (f64, bool), hi: (f64, bool), out: &mut Vec<f64>) -> Option<()> {
        let mut stack = vec![(lo, hi, 0u32)];
        while let Some(((l, sl), (r, sr), depth)) = stack.pop() {
            let m = 0.5 * (l + r);
            let s = m.abs();
            let rho = l.abs().max(r.abs());
            let (p, dp, _) = horner(self.coeffs, m);
            let (a0, a1) = majorants(self.coeffs, s);
            let (b0, b1) = majorants(self.coeffs, rho);
            if p.abs() > (b0 - a0) + self.slack * b0 {
                if sl != sr {
                    return None;
                }
                continue;
            }
            if dp.abs() > (b1 - a1) + self.slack * b1 {
                if sl != sr {
                    out.push(self.locate(l, sl, r));
                }
                continue;
            }
            if depth >= ISOLATE_MAX_DEPTH || self.budget == 0 {
                return None;
            }
            self.budget -= 1;
            let sm = p >= 0.0;
            stack.push(((m, sm), (r, sr), depth + 1));
            stack.push(((l, sl), (m, sm), depth + 1));
        }
        Some(())
    }
}

/// Real roots of a polynomial with nonzero constant and leading coefficients,
/// or `None` when the majorant tests stay inconclusive.
fn isolate(core: &[f64]) -> Option<Vec<f64>> {
    let degree = core.len() - 1;
    let slack = 4.0 * (degree + 1) as f64 * f64::EPSILON;
    let budget = ISOLATE_BUDGET_PER_DEGREE * (degree + 1);
    let reversed: Vec<f64> = core.iter().rev().copied().collect();
    // the reversed polynomial shares the sign of p at +1 and flips it at -1 for odd degree,
    // so a root at x = +-1 is seen by exactly one of the two passes
    let at_pos = horner(core, 1.0).0 >= 0.0;
    let at_neg = horner(core, -1.0).0 >= 0.0;
    let mut roots = Vec::new();
    Isolator { coeffs: core, slack, budget }.run((-1.0, at_neg), (1.0, at_pos), &mut roots)?;
    let mut inverted = Vec::new();
    let rev_neg = at_neg != (degree % 2 == 1);
    Isolator { coeffs: &reversed, slack, budget }.run((-1.0, rev_neg), (1.0, at_pos), &mut inverted)?;
    roots.extend(inverted.into_iter().map(|y| 1.0 / y));
    let eval = Evaluator::new(core);
    Some(roots.into_iter().map(|x| eval.polish(x).0).collect())
}

fn eigen_roots(core: &[f64], roots: &mut Vec<f64>) -> Result<()> {
    let degree = core.len() - 1;
    let lead = core[degree];
    let mut companion = DMatrix::<f64>::zeros(degree, degree);
    for i in 1..degree {
        companion[(i, i - 1)] = 1.0;
    }
    for i in 0..degree {
        companion[(i, degree - 1)] = -core[i] / lead;
    }
    balance(&mut companion);
    let schur = Schur::try_new(companion, f64::EPSILON, 1000 * degree)
        .ok_or_else(|| Error::Precondition(format!("eigenvalue iteration did not converge for degree {degree}")))?;
    let eval = Evaluator::new(core);
    for lambda in schur.complex_eigenvalues().iter() {
        if lambda.im.abs() > IMAG_REL * (1.0 + lambda.norm()) {
            continue;
        }
        let (x, residual) = eval.polish(lambda.re);
        if residual <= RESIDUAL_REL {
            roots.push(x);
        }
    }
    Ok(())
}

/// Radix-2 diagonal similarity scaling that equalises row and column norms.
fn balance(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for _ in 0..64 {
        let mut converged = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += m[(j, i)].abs();
                    r += m[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / 2.0;
            while c < g {
                f *= 2.0;
                c *= 4.0;
            }
            g = r * 2.0;
            while c >= g {
                f /= 2.0;
                c /= 4.0;
            }
            if (c + r) / f < 0.95 * s {
                converged = false;
                for j in 0..n {
                    m[(i, j)] /= f;
                    m[(j, i)] *= f;
                }
            }
        }
        if converged {
            break;
        }
    }
}

/// Distinct real roots of `sum c_i x^i`, ascending.
pub fn real_roots(coeffs: &[f64]) -> Result<Vec<f64>> {
    if coeffs.iter().any(|c| !c.is_finite()) {
        return Err(Error::Precondition("polynomial coefficients must be finite".into()));
    }
    let max = coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    if max == 0.0 {
        return Err(Error::DegenerateInput);
    }
    let thr = DEFLATION_REL * max;
    let hi = coeffs.iter().rposition(|c| c.abs() >= thr).expect("max is above threshold");
    let lo = coeffs.iter().position(|c| c.abs() >= thr).expect("max is above threshold");
    let core = &coeffs[lo..=hi];
    let mut roots = Vec::new();
    if lo > 0 {
        roots.push(0.0);
    }

    let degree = core.len() - 1;
    match degree {
        0 => {}
        1 => roots.push(-core[0] / core[1]),
        _ => match isolate(core) {
            Some(found) => roots.extend(found),
            None => eigen_roots(core, &mut roots)?,
        },
    }

    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|b, a| (*b - *a).abs() <= MERGE_REL * (1.0 + a.abs()));
    Ok(roots)
}

/// Number of distinct real roots in the open interval `(a, b)`.
pub fn count_real_roots(coeffs: &[f64], a: f64, b: f64) -> Result<usize> {
    Ok(real_roots(coeffs)?.into_iter().filter(|&r| r > a && r < b).count())
}
