//! The V-map and sampled equivalence constants of the ellipticity
//! inequalities.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// `V(Q) = |Q|^{(p-2)/2} Q`, `V(0) = 0`.
pub fn v_map(q: &[f64], p: f64) -> Vec<f64> {
    let n2: f64 = q.iter().map(|x| x * x).sum();
    if n2 == 0.0 {
        return vec![0.0; q.len()];
    }
    let f = n2.powf(0.25 * (p - 2.0));
    q.iter().map(|x| f * x).collect()
}

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn power_flux(q: &[f64], p: f64) -> Vec<f64> {
    let n = norm(q);
    if n == 0.0 {
        return vec![0.0; q.len()];
    }
    let f = n.powf(p - 2.0);
    q.iter().map(|x| f * x).collect()
}

/// `count` pairs `(P, Q)` of `rows x cols` matrices with entries spread
/// over four decades of magnitude. Every fourth pair has `P = 0`.
pub fn random_matrix_pairs(
    count: usize,
    rows: usize,
    cols: usize,
    seed: u64,
) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = rows * cols;
    let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        let scale = 10f64.powf(rng.gen_range(-2.0..2.0));
        (0..len).map(|_| scale * rng.gen_range(-1.0..1.0)).collect()
    };
    (0..count)
        .map(|i| {
            let q = draw(&mut rng);
            let p = if i % 4 == 3 {
                vec![0.0; len]
            } else if i % 4 == 2 {
                // a nearby pair probes the small-difference regime
                let eps = 10f64.powf(rng.gen_range(-6.0..0.0));
                q.iter()
                    .map(|x| x + eps * rng.gen_range(-1.0..1.0) * (1.0 + x.abs()))
                    .collect()
            } else {
                draw(&mut rng)
            };
            (p, q)
        })
        .collect()
}

/// Sampled ratios of the ellipticity inequalities. Pairs with `P = Q` are
/// skipped.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HammerStats {
    pub p: f64,
    pub samples: usize,
    /// `(F(Q) - F(P)) : (Q - P) / |V(Q) - V(P)|^2` with `F(Q) = |Q|^{p-2} Q`.
    pub monotone_min: f64,
    pub monotone_max: f64,
    /// `|F(Q) - F(P)| / ((|Q| + |Q - P|)^{p-2} |Q - P|)`.
    pub growth_min: f64,
    pub growth_max: f64,
    /// Smallest `c` with `|P - Q|^p <= c |V(Q) - V(P)|^2` (`p >= 2` only).
    pub nervig_c: Option<f64>,
    /// `(delta, c(delta))`: smallest `c` with
    /// `|G| |P - Q| <= c (|Q| + |G|)^{p'-2} |G|^2 + delta |V(Q) - V(P)|^2`.
    pub shifted: Vec<(f64, f64)>,
    /// The monotonicity ratio is never negative.
    pub flux_monotone: bool,
}

/// Evaluates the ellipticity ratios on the pairs. For the shifted
/// estimate `G` is `P - Q` scaled by a per-sample factor drawn from the
/// pair index.
pub fn hammer_ratios(pairs: &[(Vec<f64>, Vec<f64>)], p: f64, deltas: &[f64]) -> HammerStats {
    let pp = p / (p - 1.0);
    let mut st = HammerStats {
        p,
        samples: 0,
        monotone_min: f64::INFINITY,
        monotone_max: 0.0,
        growth_min: f64::INFINITY,
        growth_max: 0.0,
        nervig_c: if p >= 2.0 { Some(0.0) } else { None },
        shifted: deltas.iter().map(|&d| (d, 0.0)).collect(),
        flux_monotone: true,
    };
    for (i, (pm, qm)) in pairs.iter().enumerate() {
        let d = diff(qm, pm);
        let dn = norm(&d);
        if dn == 0.0 {
            continue;
        }
        st.samples += 1;
        let fq = power_flux(qm, p);
        let fp = power_flux(pm, p);
        let df = diff(&fq, &fp);
        let dv = diff(&v_map(qm, p), &v_map(pm, p));
        let dv2: f64 = dv.iter().map(|x| x * x).sum();
        let mono: f64 = df.iter().zip(&d).map(|(a, b)| a * b).sum();
        if mono < 0.0 {
            st.flux_monotone = false;
        }
        if dv2 > 0.0 {
            let r = mono / dv2;
            st.monotone_min = st.monotone_min.min(r);
            st.monotone_max = st.monotone_max.max(r);
            if let Some(c) = st.nervig_c.as_mut() {
                *c = c.max(dn.powf(p) / dv2);
            }
        }
        let g = (norm(qm) + dn).powf(p - 2.0) * dn;
        if g > 0.0 {
            let r = norm(&df) / g;
            st.growth_min = st.growth_min.min(r);
            st.growth_max = st.growth_max.max(r);
        }
        // shifted estimate with G of varying relative size
        let gscale = 10f64.powf(((i * 7919) % 401) as f64 / 100.0 - 2.0);
        let gn = gscale * dn;
        let denom = (norm(qm) + gn).powf(pp - 2.0) * gn * gn;
        for (delta, c) in st.shifted.iter_mut() {
            let excess = gn * dn - *delta * dv2;
            if excess > 0.0 && denom > 0.0 {
                *c = c.max(excess / denom);
            }
        }
    }
    st
}
