//! Closed forms for the thermodynamic code under erasures and for the GKP
//! code under loss.
//!
//! Thermodynamic codewords are `|h_{m0}⟩`, `|h_{m0+d}⟩` with `m0 = −d/2`.
//! With `d > 2l` the two codewords' error vectors never overlap and the QEC
//! matrix splits into blocks indexed by which erased qubits were spin `−1`.
//! For `l < d ≤ 2l` the blocks of the two codewords share magnetization
//! sectors, which is handled by a rank-one sector sum.

use std::f64::consts::PI;

use crate::{invalid, Result};

/// `binom(n, k)` exactly, if it fits.
pub fn binomial_exact(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc·(n−i)/(i+1) stays integral at every step
        acc = acc.checked_mul((n - i) as u128)? / (i + 1) as u128;
    }
    Some(acc)
}

pub fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let ln_fact = |m: u64| (1..=m).map(|i| (i as f64).ln()).sum::<f64>();
    ln_fact(n) - ln_fact(k) - ln_fact(n - k)
}

/// `binom(n, k)` as a float, exact below 2^53.
pub fn binomial_f64(n: u64, k: u64) -> f64 {
    match binomial_exact(n, k) {
        Some(b) => b as f64,
        None => ln_binomial(n, k).exp(),
    }
}

/// `x! / y!` as a running product.
fn factorial_ratio(x: u64, y: u64) -> f64 {
    if x >= y {
        (y + 1..=x).map(|i| i as f64).product()
    } else {
        1.0 / (x + 1..=y).map(|i| i as f64).product::<f64>()
    }
}

/// `binom(a, b) / binom(n, k)`, exact integers for `n ≤ 60`, a short
/// factorial-ratio product when the two binomials are close, log space
/// otherwise.
pub fn binomial_ratio(a: u64, b: u64, n: u64, k: u64) -> f64 {
    if b > a || k > n {
        return if b > a { 0.0 } else { f64::INFINITY };
    }
    if n <= 60 {
        if let (Some(num), Some(den)) = (binomial_exact(a, b), binomial_exact(n, k)) {
            return num as f64 / den as f64;
        }
    }
    let (ra, rb) = (a - b, n - k);
    let terms = k.abs_diff(b) + ra.abs_diff(rb) + a.abs_diff(n);
    if terms <= 48 {
        // k!/b! · (n−k)!/(a−b)! · a!/n!
        return factorial_ratio(k, b) * factorial_ratio(a, n) * factorial_ratio(rb, ra);
    }
    (ln_binomial(a, b) - ln_binomial(n, k)).exp()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThermoParams {
    pub n: u64,
    pub d: u64,
    pub l: u64,
    pub p: f64,
    pub m0: i64,
}

impl ThermoParams {
    /// Mid-spectrum code `m0 = −d/2`.
    pub fn new(n: u64, d: u64, l: u64, p: f64) -> Result<Self> {
        if !d.is_multiple_of(2) {
            return Err(invalid(format!("m0 = −d/2 needs even d, got {d}")));
        }
        let params = Self { n, d, l, p, m0: -(d as i64) / 2 };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let (n, d, l) = (self.n as i64, self.d as i64, self.l as i64);
        if !(0.0..=1.0).contains(&self.p) {
            return Err(invalid(format!("erasure probability {} outside [0,1]", self.p)));
        }
        if d <= l {
            return Err(invalid(format!("distance {d} must exceed the erasure count {l}")));
        }
        if d >= n || l > n {
            return Err(invalid(format!("need l <= N and d < N, got N={n}, d={d}, l={l}")));
        }
        if (n + self.m0).rem_euclid(2) != 0 {
            return Err(invalid(format!("N + m0 = {} must be even", n + self.m0)));
        }
        if self.m0 < -n || self.m0 + d > n {
            return Err(invalid(format!("magnetizations {} and {} not reachable", self.m0, self.m0 + d)));
        }
        Ok(())
    }

    fn magnetizations(&self) -> [i64; 2] {
        [self.m0, self.m0 + self.d as i64]
    }
}

fn spin_up_count(n: u64, m: i64) -> Result<u64> {
    let up = n as i64 + m;
    if up < 0 || up % 2 != 0 || up / 2 > n as i64 {
        return Err(invalid(format!("magnetization {m} not reachable on {n} qubits")));
    }
    Ok((up / 2) as u64)
}

/// Dicke-state fraction for `l` erased qubits of which `l1` carried spin
/// `−1`: `binom(N−l, (N+m)/2 − (l−l1)) / binom(N, (N+m)/2)`.
fn erased_pattern_weight(n: u64, m: i64, l: u64, l1: u64) -> Result<f64> {
    if l1 > l || l > n {
        return Err(invalid(format!("pattern l1={l1} of l={l} on N={n}")));
    }
    let up = spin_up_count(n, m)?;
    let removed_up = l - l1;
    if removed_up > up {
        return Ok(0.0);
    }
    Ok(binomial_ratio(n - l, up - removed_up, n, up))
}

/// `c = p^l · binom(N−l, (N+m)/2 − (l−l1)) / binom(N, (N+m)/2)`, the QEC-matrix
/// entry of `l` erasures with `l1` of them on spin `−1`.
pub fn thermo_c_coeff(n: u64, m: i64, l: u64, l1: u64, p: f64) -> Result<f64> {
    Ok(p.powi(l as i32) * erased_pattern_weight(n, m, l, l1)?)
}

/// `1 − F̃ = ½p(1 − √(1 − x²/4))`, `x = d/N`, for one erasure.
pub fn thermo_one_erasure_exact(p: f64, d: u64, n: u64) -> Result<f64> {
    ThermoParams::new(n, d, 1, p)?;
    let x = d as f64 / n as f64;
    let y = x * x / 4.0;
    Ok(0.5 * p * y / (1.0 + (1.0 - y).sqrt()))
}

/// Near-optimal infidelity for `l` erasures each occurring with probability
/// `p`. With `j` qubits actually erased the term is
/// `¼ Σ_{l1} binom(j,l1) (√c₀ − √c₁)²` when `d > 2j`; otherwise the rank-one
/// sector sum of [`mixed_sector_term`].
pub fn thermo_infidelity(params: &ThermoParams) -> Result<f64> {
    params.validate()?;
    let ThermoParams { n, l, p, d, .. } = *params;
    let [m_a, m_b] = params.magnetizations();
    let mut total = 0.0;
    for j in 0..=l {
        let prob = p.powi(j as i32) * (1.0 - p).powi((l - j) as i32);
        if prob == 0.0 {
            continue;
        }
        let subsets = binomial_f64(l, j);
        if d <= 2 * j {
            total += subsets * prob * mixed_sector_term(n, [m_a, m_b], j)?;
            continue;
        }
        let mut block = 0.0;
        for l1 in 0..=j {
            let ca = erased_pattern_weight(n, m_a, j, l1)?;
            let cb = erased_pattern_weight(n, m_b, j, l1)?;
            let root_sum = ca.sqrt() + cb.sqrt();
            if root_sum > 0.0 {
                // (√ca − √cb)² without cancelling the square roots
                block += binomial_f64(j, l1) * ((ca - cb) / root_sum).powi(2);
            }
        }
        total += 0.25 * subsets * prob * block;
    }
    Ok(total)
}

/// `1 − ¼ Σ_{l1} binom(j,l1)² T_{l1}²` for one erased set of size `j`.
///
/// An erasure pattern with `l1` spins `−1` maps `|h_m⟩` to a multiple of the
/// Dicke state of magnetization `r = m − j + 2·l1` on the other qubits, so
/// the QEC matrix is a sum of rank-one blocks `a_r a_r†`, one per `r`, and
/// `√(a a†) = a a† / ‖a‖`. Then `T_{l1} = Σ_μ w_μ(l1) / ‖a_{r_μ}‖`.
fn mixed_sector_term(n: u64, mags: [i64; 2], j: u64) -> Result<f64> {
    let mut weights = [vec![0.0; j as usize + 1], vec![0.0; j as usize + 1]];
    for (mu, &m) in mags.iter().enumerate() {
        for l1 in 0..=j {
            weights[mu][l1 as usize] = erased_pattern_weight(n, m, j, l1)?;
        }
    }
    let sector = |r: i64| -> f64 {
        let mut norm2 = 0.0;
        for (mu, &m) in mags.iter().enumerate() {
            let twice = r - m + j as i64;
            if twice >= 0 && twice % 2 == 0 && twice / 2 <= j as i64 {
                let l1 = (twice / 2) as u64;
                norm2 += binomial_f64(j, l1) * weights[mu][l1 as usize];
            }
        }
        norm2
    };
    let mut kept = 0.0;
    for l1 in 0..=j {
        let mut t = 0.0;
        for (mu, &m) in mags.iter().enumerate() {
            let w = weights[mu][l1 as usize];
            if w > 0.0 {
                t += w / sector(m - j as i64 + 2 * l1 as i64).sqrt();
            }
        }
        kept += (binomial_f64(j, l1) * t).powi(2);
    }
    Ok(1.0 - 0.25 * kept)
}

/// `F̃ = ¼ Σ_{l1} binom(l,l1) (Σ_μ √c_μ^{(l1)})²` for `l` certain erasures
/// (with the sector sum when `d ≤ 2l`).
pub fn thermo_near_optimal_l(n: u64, d: u64, l: u64) -> Result<f64> {
    Ok(1.0 - thermo_infidelity(&ThermoParams::new(n, d, l, 1.0)?)?)
}

/// Two erasures with probability `p`, from the rational matrix elements
/// of the two-qubit blocks.
pub fn thermo_two_erasure(n: u64, d: u64, p: f64) -> Result<f64> {
    let params = ThermoParams::new(n, d, 2, p)?;
    let nf = n as f64;
    let pair = nf * (nf - 1.0);
    let mut single = [0.0; 2];
    let mut same = [0.0; 2];
    let mut cross = 0.0;
    for m in params.magnetizations() {
        let m = m as f64;
        // K_α ⊗ K_0, α = 1 (spin −1) and α = 2 (spin +1)
        single[0] += (0.5 * p * (1.0 - p) * (1.0 - m / nf)).sqrt();
        single[1] += (0.5 * p * (1.0 - p) * (1.0 + m / nf)).sqrt();
        same[0] += (p * p * ((nf - m).powi(2) / (4.0 * pair) - (nf - m) / (2.0 * pair))).max(0.0).sqrt();
        same[1] += (p * p * ((nf + m).powi(2) / (4.0 * pair) - (nf + m) / (2.0 * pair))).max(0.0).sqrt();
        cross += (p * p * (nf * nf - m * m) / (4.0 * pair)).sqrt();
    }
    let singles: f64 = single.iter().map(|s| s * s).sum();
    let sames: f64 = same.iter().map(|s| s * s).sum();
    Ok((1.0 - p).powi(2) + 0.5 * singles + 0.25 * sames + 0.5 * cross * cross)
}

/// `(l/16)(d/N)²`.
pub fn thermo_leading_order(n: u64, d: u64, l: u64) -> f64 {
    let x = d as f64 / n as f64;
    l as f64 / 16.0 * x * x
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(invalid(format!("loss γ = {gamma} outside (0,1)")));
    }
    Ok(())
}

/// Infinite-energy limit of the square GKP near-optimal infidelity,
/// `exp(−(π/2)(1−γ)/γ)`.
pub fn gkp_asymptotic_infidelity(gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    Ok((-(PI / 2.0) * (1.0 - gamma) / gamma).exp())
}

/// Amplification-decoder infidelity `exp(−(π/8)(1−γ)/γ)`.
pub fn gkp_ad_infidelity(gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    Ok((-(PI / 8.0) * (1.0 - gamma) / gamma).exp())
}
