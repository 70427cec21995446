//! Binomial upper tail `P(Bino(n, p) >= k)`.
//!
//! The pmf at the start of the tail is evaluated with Loader's saddle-point
//! expansion, which stays accurate to a few ulps for any `n`. The smaller of
//! the two tails is then summed outward with the term ratio, where terms
//! decrease monotonically, and complemented if needed.

use std::f64::consts::PI;

/// Stirling-formula error `ln n! - ln(sqrt(2 pi n) (n/e)^n)` at half-integers
/// `0, 0.5, ..., 15`.
#[allow(clippy::excessive_precision)]
const SFERR_HALVES: [f64; 31] = [
    0.0,
    0.1534264097200273452913848,
    0.0810614667953272582196702,
    0.0548141210519176538961390,
    0.0413406959554092940938221,
    0.03316287351993628748511048,
    0.02767792568499833914878929,
    0.02374616365629749597132920,
    0.02079067210376509311152277,
    0.01848845053267318523077934,
    0.01664469118982119216319487,
    0.01513497322191737887351255,
    0.01387612882307074799874573,
    0.01281046524292022692424986,
    0.01189670994589177009505572,
    0.01110455975820691732662991,
    0.010411265261972096497478567,
    0.009799416126158803298389475,
    0.009255462182712732917728637,
    0.008768700134139385462952823,
    0.008330563433362871256469318,
    0.007934114564314020547248100,
    0.007573675487951840794972024,
    0.007244554301320383179543912,
    0.006942840107209529865664152,
    0.006665247032707682442354394,
    0.006408994188004207068439631,
    0.006171712263039457647532867,
    0.005951370112758847735624416,
    0.005746216513010115682023589,
    0.005554733551962801371038690,
];

fn stirlerr(n: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n <= 15.0 {
        let nn = n + n;
        if nn == nn.floor() {
            return SFERR_HALVES[nn as usize];
        }
        return ln_gamma(n + 1.0) - (n + 0.5) * n.ln() + n - 0.5 * (2.0 * PI).ln();
    }
    let nn = n * n;
    if n > 500.0 {
        return (S0 - S1 / nn) / n;
    }
    if n > 80.0 {
        return (S0 - (S1 - S2 / nn) / nn) / n;
    }
    if n > 35.0 {
        return (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n;
    }
    (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
}

/// Only reached for non-half-integer arguments, which the tail never uses.
fn ln_gamma(x: f64) -> f64 {
    // Lanczos, g = 7
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    let x = x - 1.0;
    let t = x + 7.5;
    let s = C[1..].iter().enumerate().fold(C[0], |acc, (i, c)| acc + c / (x + i as f64 + 1.0));
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + s.ln()
}

/// Deviance term `x ln(x / np) + np - x`, computed without cancellation.
fn bd0(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let v = (x - np) / (x + np);
        let mut s = (x - np) * v;
        let mut ej = 2.0 * x * v;
        let v2 = v * v;
        for j in 1..1000 {
            ej *= v2;
            let s1 = s + ej / (2 * j + 1) as f64;
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        s
    } else {
        x * (x / np).ln() + np - x
    }
}

/// `P(X = x)` for `X ~ Bino(n, p)`, with `q = 1 - p` passed separately.
pub fn binomial_pmf(x: u64, n: u64, p: f64) -> f64 {
    if x > n {
        return 0.0;
    }
    let q = 1.0 - p;
    if p == 0.0 {
        return if x == 0 { 1.0 } else { 0.0 };
    }
    if q == 0.0 {
        return if x == n { 1.0 } else { 0.0 };
    }
    let (xf, nf) = (x as f64, n as f64);
    if x == 0 {
        return (nf * (-p).ln_1p()).exp();
    }
    if x == n {
        return (nf * p.ln()).exp();
    }
    let lc = stirlerr(nf) - stirlerr(xf) - stirlerr(nf - xf) - bd0(xf, nf * p) - bd0(nf - xf, nf * q);
    let lf = (2.0 * PI).ln() + xf.ln() + (-xf / nf).ln_1p();
    (lc - 0.5 * lf).exp()
}

/// Probability that `n` independent trials with success probability `p`
/// yield at least `k` successes.
///
/// `k <= 0` gives 1 and `k > n` gives 0. Absolute error is around `1e-15`
/// for `n` up to at least `1e5`.
pub fn baseline_success(n: u64, p: f64, k: i64) -> f64 {
    assert!((0.0..=1.0).contains(&p), "probability out of range: {p}");
    if k <= 0 {
        return 1.0;
    }
    let k = k as u64;
    if k > n {
        return 0.0;
    }
    if p == 0.0 {
        return 0.0;
    }
    if p == 1.0 {
        return 1.0;
    }
    let q = 1.0 - p;
    let mode = ((n + 1) as f64 * p).floor() as u64;
    if k > mode {
        upper_sum(k, n, p, q)
    } else {
        1.0 - lower_sum(k - 1, n, p, q)
    }
}

/// `sum_{j >= k} P(X = j)` for `k` above the mode.
fn upper_sum(k: u64, n: u64, p: f64, q: f64) -> f64 {
    let mut term = binomial_pmf(k, n, p);
    let mut sum = term;
    let r = p / q;
    let mut j = k;
    while j < n && term > sum * 1e-17 {
        term *= (n - j) as f64 / (j + 1) as f64 * r;
        sum += term;
        j += 1;
    }
    sum
}

/// `sum_{j <= k} P(X = j)` for `k` below the mode.
fn lower_sum(k: u64, n: u64, p: f64, q: f64) -> f64 {
    let mut term = binomial_pmf(k, n, p);
    let mut sum = term;
    let r = q / p;
    let mut j = k;
    while j > 0 && term > sum * 1e-17 {
        term *= j as f64 / (n - j + 1) as f64 * r;
        sum += term;
        j -= 1;
    }
    sum
}

/// Largest `k` with `baseline_success(n, p, k) >= level`.
pub fn largest_reliable_size(n: u64, p: f64, level: f64) -> u64 {
    (0..=n).rev().find(|&k| baseline_success(n, p, k as i64) >= level).unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_edges() {
        assert_eq!(baseline_success(10, 1.0, 10), 1.0);
        assert_eq!(baseline_success(10, 0.5, 11), 0.0);
        assert_eq!(baseline_success(10, 0.5, 0), 1.0);
        assert_eq!(baseline_success(10, 0.5, -3), 1.0);
        assert_eq!(baseline_success(10, 0.0, 1), 0.0);
    }

    #[test]
    fn small_cases_against_exact_sums() {
        // Bino(4, 1/2): P(X >= 3) = 5/16
        assert!((baseline_success(4, 0.5, 3) - 5.0 / 16.0).abs() < 1e-16);
        // Bino(10, 0.3): P(X >= 1) = 1 - 0.7^10
        assert!((baseline_success(10, 0.3, 1) - (1.0 - 0.7f64.powi(10))).abs() < 1e-15);
        // Bino(5, 0.2): P(X >= 5) = 0.2^5
        assert!((baseline_success(5, 0.2, 5) - 0.2f64.powi(5)).abs() < 1e-18);
    }

    #[test]
    fn pmf_sums_to_one() {
        for &(n, p) in &[(1u64, 0.3), (17, 0.6), (200, 0.01), (2048, 0.6), (40000, 0.9)] {
            let s: f64 = (0..=n).map(|x| binomial_pmf(x, n, p)).sum();
            assert!((s - 1.0).abs() < 1e-12, "n={n} p={p} sum={s}");
        }
    }

    #[test]
    #[allow(clippy::excessive_precision)]
    fn stirlerr_matches_high_precision_values() {
        // 30-digit references
        for &(n, want) in &[
            (16.0, 0.005207655919609640440717997),
            (35.5, 0.002347355765761607217827474),
            (80.5, 0.001035191362724942094212926),
            (100.0, 0.0008333305556349146833812417),
            (600.0, 0.000138888876028816790755404),
            (1000.0, 0.00008333333055555634920575397),
        ] {
            // enters the log-pmf additively, so absolute error is what counts
            assert!((stirlerr(n) - want).abs() < 2e-16, "n={n}");
        }
        assert!((stirlerr(7.25) - (ln_gamma(8.25) - 7.75 * 7.25f64.ln() + 7.25 - 0.5 * (2.0 * PI).ln())).abs() < 1e-15);
    }

    #[test]
    fn agrees_with_incomplete_beta() {
        use statrs::function::beta::beta_reg;
        for &(n, p, k) in
            &[(64u64, 0.6, 32i64), (2048, 0.6, 1024), (2048, 0.6, 1255), (100, 0.9, 83), (33000, 0.6, 19900)]
        {
            // P(X >= k) = I_p(k, n - k + 1)
            let reference = beta_reg(k as f64, (n as i64 - k + 1) as f64, p);
            let ours = baseline_success(n, p, k);
            assert!((ours - reference).abs() < 1e-9, "n={n} p={p} k={k}: {ours} vs {reference}");
        }
    }

    #[test]
    fn reliable_chain_sizes() {
        assert_eq!(largest_reliable_size(100, 0.6, 0.98), 50);
        assert_eq!(largest_reliable_size(100, 0.9, 0.98), 83);
    }
}
