#![allow(dead_code)]

use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use amqd_core::channel::{CrosstalkMatrix, EveModel, SubChannelSet};

type Big = FBig<HalfEven, 2>;

const PRECISION: usize = 256;

fn big(x: f64) -> Big {
    Big::try_from(x).unwrap().with_precision(PRECISION).value()
}

fn int(k: i64) -> Big {
    Big::from(k).with_precision(PRECISION).value()
}

fn log2(x: &Big) -> Big {
    x.ln() / int(2).ln()
}

fn xlog2x(x: &Big) -> Big {
    if *x == int(0) {
        int(0)
    } else {
        x * log2(x)
    }
}

fn thermal(w: &Big) -> Big {
    let half = int(2);
    let up = (w + int(1)) / &half;
    let down = (w - int(1)) / &half;
    xlog2x(&up) - xlog2x(&down)
}

/// Key rates re-derived at 256-bit precision, written directly from the
/// homodyne formulas with `b = W - t (W - 1)` and `e = 1 + t (W - 1)`.
pub fn oracle_key_rate(variant: &str, t: f64, w: f64) -> f64 {
    let t = big(t);
    let w = big(w);
    let one = int(1);
    let half = Big::try_from(0.5).unwrap().with_precision(PRECISION).value();
    let wm1 = &w - &one;
    let b = &w - &t * &wm1;
    let e = &one + &t * &wm1;
    let omt = &one - &t;
    let g_w = thermal(&w);
    let r = match variant {
        "oneway_rr_hom" => {
            let nu = ((&w * &b) / &e).sqrt();
            &half * log2(&((&t * &e) / (&omt * &b))) - thermal(&nu) - g_w
        }
        "oneway_dr_hom" => &half * log2(&(&w / (&omt * &b))) - g_w,
        "twoway_rr_hom" => &half * log2(&((&omt + &t * &t) / (&omt * &omt))) - g_w,
        "twoway_dr_hom" => &half * log2(&(&t / (&omt * &omt))) - g_w,
        other => panic!("unknown variant {other}"),
    };
    r.to_f64().value()
}

/// The `(t, W)` grid: 40 gains in `[0.01, 0.99]` by 25 ancilla variances
/// in `[1, 10]`, 1000 points.
pub fn key_rate_grid() -> Vec<(f64, f64)> {
    let mut pts = Vec::with_capacity(1000);
    for i in 0..40 {
        let t = 0.01 + 0.98 * i as f64 / 39.0;
        for j in 0..25 {
            let w = 1.0 + 9.0 * j as f64 / 24.0;
            pts.push((t, w));
        }
    }
    pts
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One randomized scenario inside the operating regime of the crosstalk
/// bound: every used sub-channel gain exceeds the single-carrier gain by at
/// least 0.05, `W` in `[1.5, 4]`, and crosstalk coefficients at most 1e-4.
pub struct RegimeInstance {
    pub channels: SubChannelSet,
    pub eve: EveModel,
    pub single_gain_sq: f64,
    pub selected: Vec<usize>,
    pub single_carrier_variance: f64,
}

pub fn regime_instance<R: Rng>(rng: &mut R) -> RegimeInstance {
    let n = rng.random_range(2..=16usize);
    let single = rng.random_range(0.05..0.85);
    let gains: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.random_range(single + 0.05..0.95f64).sqrt(), 0.0))
        .collect();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { 0.0 } else { rng.random_range(0.0..1e-4) })
                .collect()
        })
        .collect();
    let noise = vec![rng.random_range(0.1..2.0); n];
    let channels = SubChannelSet::from_fourier_gains(gains, noise, CrosstalkMatrix::from_rows(&rows).unwrap()).unwrap();
    let eve_t = (0..n)
        .map(|_| {
            Complex64::from_polar(
                rng.random_range(0.2..0.95f64),
                rng.random_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();
    let eve = EveModel::new(rng.random_range(1.5..4.0), eve_t).unwrap();
    RegimeInstance {
        channels,
        eve,
        single_gain_sq: single,
        selected: (0..n).collect(),
        single_carrier_variance: rng.random_range(0.5..5.0),
    }
}

/// Maximum of `sum_i log2(1 + p_i / nu_i)` over the grid `p_i in step Z`
/// with `sum p_i = budget`, by max-plus convolution over channels. This
/// visits every grid allocation implicitly.
pub fn grid_search_objective(nu: &[f64], budget: f64, step: f64) -> f64 {
    let k = (budget / step).round() as usize;
    let mut best = vec![f64::NEG_INFINITY; k + 1];
    best[0] = 0.0;
    for &v in nu {
        let f: Vec<f64> = (0..=k).map(|j| (1.0 + j as f64 * step / v).log2()).collect();
        let mut next = vec![f64::NEG_INFINITY; k + 1];
        for total in 0..=k {
            let mut m = f64::NEG_INFINITY;
            for j in 0..=total {
                let c = best[total - j] + f[j];
                if c > m {
                    m = c;
                }
            }
            next[total] = m;
        }
        best = next;
    }
    best[k]
}
